import enum
import typing as ty

from bsquick.exceptions import BSQuickError


@enum.unique
class RowStatus(enum.Enum):
    """Возможные статусы обработки строки свипа"""

    CERTIFIED = enum.auto()
    """
    Сертификат выкован и прошел проверку
    """

    CERTIFICATION_FAILED = enum.auto()
    """
    Сертификат не построен или не прошел проверку
    """

    UNEXPECTED_ERROR_OCCURRED = enum.auto()


class Certified(ty.NamedTuple):
    """Контейнер для `CERTIFIED` статуса"""

    report: ty.Any
    """
    Отчет `verify_certificate`
    """


class CertificationFailed(ty.NamedTuple):
    """Контейнер для `CERTIFICATION_FAILED` статуса"""

    reason: str
    """
    Короткое описание причины: нарушенный инвариант
    или текст ошибки пакета
    """

    raised_error: ty.Optional[BSQuickError] = None


class UnexpectedErrorOccurred(ty.NamedTuple):
    """
    Поднято неожидаемое исключение. Причиной может быть как
    пользовательский мидлвар, так и код bsquick
    """

    raised_error: Exception
    """
    Объект исключения
    """


StatusPayload = ty.Union[
    Certified, CertificationFailed, UnexpectedErrorOccurred
]
"""
"Контейнер" с дополнительной информацией на
каждый статус обработки
"""
