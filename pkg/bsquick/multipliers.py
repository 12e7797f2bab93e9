"""
Мультипликаторы Фурье и их применение к полям через унитарное FFT
"""
from __future__ import annotations

import cmath
import dataclasses
import math
import threading
import typing as ty

import cachetools
import cachetools.keys
import numpy as np
import scipy.fft
from loguru import logger

from bsquick.bases.symbol import FourierSymbol
from bsquick.exceptions import PreconditionError, RoundoffError
from bsquick.grid import Field, FourierGrid, check_same_grid
from bsquick.symbols import reflect_frequencies

FFT_WORKERS = -1
"""
Число потоков, которые `scipy.fft` использует для одного преобразования.
`-1` -- все доступные ядра. Одномерные преобразования вдоль осей
независимы, поэтому результат не зависит от числа потоков
"""

REALITY_THRESHOLD = 1e-12
"""
Допустимая мнимая часть результата относительно `max|m| * ||f||`,
когда результат обязан быть вещественным
"""

_multiplier_cache: cachetools.LRUCache = cachetools.LRUCache(maxsize=32)
_multiplier_cache_lock = threading.Lock()


@dataclasses.dataclass(frozen=True, eq=False)
class Multiplier:
    """
    Значения `m(xi)` на решетке частот сетки (порядок FFT).
    Массив значений доступен только для чтения, так как
    мультипликаторы разделяются через кеш
    """

    grid: FourierGrid
    values: np.ndarray
    real: bool
    even: bool

    @classmethod
    def from_values(cls, grid: FourierGrid, values: np.ndarray) -> Multiplier:
        """
        Создает мультипликатор и сам определяет вещественность
        и четность
        """
        values = np.array(np.broadcast_to(values, grid.sizes))
        real = not np.iscomplexobj(values) or not np.any(values.imag)
        if real:
            values = values.real.astype(float)
        even = real and bool(
            np.array_equal(values, reflect_frequencies(values))
        )
        values.setflags(write=False)
        return cls(grid=grid, values=values, real=real, even=even)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def _combine(self, other: ty.Any, operation: str) -> ty.Any:
        if isinstance(other, Multiplier):
            check_same_grid(operation, self, other)
            return other.values
        return other

    def __mul__(self, other: ty.Any) -> Multiplier:
        return Multiplier.from_values(
            self.grid, self.values * self._combine(other, "*")
        )

    __rmul__ = __mul__

    def __add__(self, other: ty.Any) -> Multiplier:
        return Multiplier.from_values(
            self.grid, self.values + self._combine(other, "+")
        )

    __radd__ = __add__

    def __repr__(self) -> str:
        return (
            f"<bsquick.Multiplier grid={self.grid!r} "
            f"real={self.real} even={self.even}>"
        )


def _cached_multiplier(
    key: ty.Hashable, factory: ty.Callable[[], Multiplier]
) -> Multiplier:
    with _multiplier_cache_lock:
        cached = _multiplier_cache.get(key)
    if cached is not None:
        return cached
    multiplier = factory()
    with _multiplier_cache_lock:
        _multiplier_cache[key] = multiplier
    return multiplier


def clear_multiplier_cache() -> None:
    """Очищает LRU кеш мультипликаторов"""
    with _multiplier_cache_lock:
        _multiplier_cache.clear()


def delta_multiplier(
    symbol: FourierSymbol, energy: float, epsilon: float, grid: FourierGrid
) -> Multiplier:
    """
    Сглаженная дельта-функция уровня
    `eps / ((h0(xi) - lambda)^2 + eps^2)`

    Args:
        symbol: Символ `h0`
        energy: Уровень `lambda`
        epsilon: Ширина `eps > 0`
        grid: Сетка

    Returns:
        Мультипликатор со значениями в `(0, 1/eps]`

    Raises:
        PreconditionError: `eps <= 0`
    """
    if not math.isfinite(epsilon) or epsilon <= 0:
        raise PreconditionError(
            quantity="eps", value=epsilon, bound=0.0, relation=">"
        )

    def factory() -> Multiplier:
        shifted = symbol.on_grid(grid) - energy
        return Multiplier.from_values(
            grid, epsilon / (shifted ** 2 + epsilon ** 2)
        )

    key = cachetools.keys.hashkey(
        "delta", symbol.cache_key, float(energy), float(epsilon), grid
    )
    return _cached_multiplier(key, factory)


def resolvent_multiplier(
    symbol: FourierSymbol, z: complex, grid: FourierGrid
) -> Multiplier:
    """
    Мультипликатор резольвенты `1 / (h0(xi) - z)`

    Raises:
        PreconditionError: `Im z == 0`
    """
    z = complex(z)
    if z.imag == 0 or not cmath.isfinite(z):
        raise PreconditionError(
            quantity="|Im z|", value=abs(z.imag), bound=0.0, relation=">"
        )

    def factory() -> Multiplier:
        return Multiplier.from_values(grid, 1 / (symbol.on_grid(grid) - z))

    key = cachetools.keys.hashkey(
        "resolvent", symbol.cache_key, z.real, z.imag, grid
    )
    return _cached_multiplier(key, factory)


def symbol_multiplier(
    symbol: FourierSymbol, grid: FourierGrid, *, shift: complex = 0
) -> Multiplier:
    """Мультипликатор `h0(xi) - shift`"""
    return Multiplier.from_values(grid, symbol.on_grid(grid) - shift)


def apply_multiplier(multiplier: Multiplier, f: Field) -> Field:
    """
    Вычисляет `F^{-1}[m F f]` унитарным FFT

    Если мультипликатор вещественный и четный, а поле вещественное,
    результат обязан быть вещественным: мнимая часть
    отбрасывается после проверки, что она на уровне округления

    Raises:
        GridMismatchError: Мультипликатор и поле на разных сетках
        RoundoffError: Мнимая часть вещественного по смыслу
            результата больше порога
    """
    check_same_grid("apply_multiplier", multiplier, f)
    spectrum = scipy.fft.fftn(f.values, norm="ortho", workers=FFT_WORKERS)
    result = scipy.fft.ifftn(
        multiplier.values * spectrum, norm="ortho", workers=FFT_WORKERS
    )
    if multiplier.even and f.is_real:
        reference = multiplier.sup_norm() * float(np.linalg.norm(f.values))
        residue = float(np.linalg.norm(result.imag))
        if reference > 0 and residue > REALITY_THRESHOLD * reference:
            raise RoundoffError(
                where="apply_multiplier",
                relative=residue / reference,
                threshold=REALITY_THRESHOLD,
            )
        result = result.real
    return Field(f.grid, result)


def cache_info() -> ty.Dict[str, int]:
    """Состояние кеша мультипликаторов (для логов и тестов)"""
    with _multiplier_cache_lock:
        info = {
            "size": len(_multiplier_cache),
            "maxsize": int(_multiplier_cache.maxsize),
        }
    logger.debug("Multiplier cache: {info}", info=info)
    return info
