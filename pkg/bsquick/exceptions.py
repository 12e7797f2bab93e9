"""
Исключения bsquick. Все наследуются от `BSQuickError`,
так что одного `except` хватает, чтобы поймать любую ошибку пакета
"""
from __future__ import annotations

import dataclasses
import typing as ty

import huepy


class BSQuickError(Exception):
    """Базовое исключение пакета"""


class GridError(BSQuickError, ValueError):
    """Некорректные параметры сетки (четный размер, неположительная длина)"""


class GridMismatchError(BSQuickError, ValueError):
    """
    Поднимается, когда операция получает поля
    (или мультипликатор и поле), заданные на разных сетках
    """

    def __init__(self, *, operation: str, left: ty.Any, right: ty.Any):
        self.operation = operation
        self.left = left
        self.right = right

    def __str__(self):
        return (
            f"Operation `{self.operation}` got fields on different grids: "
            f"{self.left!r} vs {self.right!r}"
        )


class SymbolError(BSQuickError, ValueError):
    """Символ не может быть вычислен (запрос вне решетки, s <= 0, ...)"""


class RoundoffError(BSQuickError, ArithmeticError):
    """
    Мнимая часть математически вещественного результата
    превысила допустимый уровень ошибок округления
    """

    def __init__(self, *, where: str, relative: float, threshold: float):
        self.where = where
        self.relative = relative
        self.threshold = threshold

    def __str__(self):
        return (
            huepy.red(f"[{self.where}]")
            + f" imaginary residue {self.relative:.3e} "
            + f"exceeds roundoff threshold {self.threshold:.1e}"
        )


class RegionError(BSQuickError, ValueError):
    """Область не помещается в периодический ящик"""


class ResolutionError(BSQuickError, ValueError):
    """
    Шапка Кнаппа разрешена меньше, чем правилом
    разрешения (8 частот на каждый размер шапки)
    """

    def __init__(
        self, *, axis: int, samples: float, required: int = 8
    ) -> None:
        self.axis = axis
        self.samples = samples
        self.required = required

    def __str__(self):
        return (
            f"Cap is under-resolved along axis {self.axis}: "
            f"{self.samples:.2f} frequency samples across the cap, "
            f"resolution rule needs at least {self.required}"
        )


class ConvergenceError(BSQuickError, RuntimeError):
    """Итерация не может стартовать или выродилась"""


class PreconditionError(BSQuickError, ValueError):
    """
    Нарушено числовое предусловие. Хранит величину,
    которая его нарушила, и границу, с которой она сравнивалась
    """

    def __init__(
        self,
        *,
        quantity: str,
        value: float,
        bound: float,
        relation: str = "<=",
    ) -> None:
        self.quantity = quantity
        self.value = value
        self.bound = bound
        self.relation = relation

    def __str__(self):
        return (
            huepy.red("Precondition failed: ")
            + f"{huepy.yellow(self.quantity)} = {self.value:.6g}, "
            + f"required {self.relation} {self.bound:.6g}"
        )


@dataclasses.dataclass
class CertificateError(BSQuickError):
    """
    Сертификат не прошел проверку или не может быть построен.
    `invariant` называет нарушенный инвариант
    """

    invariant: str
    details: str = ""
    extra_fields: dict = dataclasses.field(default_factory=dict)

    def __str__(self):
        text = huepy.red(f"[{self.invariant}]") + f" {self.details}"
        for key, value in self.extra_fields.items():
            text += f"\n{huepy.yellow(key)} = {huepy.cyan(value)}"
        return text


class BoundError(BSQuickError, ValueError):
    """Невалидные параметры для вычисления оценок (q вне диапазона и т.д.)"""


class ConfigError(BSQuickError, ValueError):
    """
    Ошибка конфигурации: неизвестный ключ, неверный
    тип значения или нарушенный инвариант
    """

    def __init__(self, reason: str, *, key: ty.Optional[str] = None):
        self.reason = reason
        self.key = key

    def __str__(self):
        if self.key is None:
            return f"Invalid config: {self.reason}"
        return f"Invalid config key `{self.key}`: {self.reason}"


class StorageError(BSQuickError, IOError):
    """Файл сертификата или отчета поврежден, обрезан или другой версии"""
