import json
import math
import typing as ty

import pygments.formatters
import pygments.lexers

from bsquick.json_parsers import to_plain

SIGNIFICANT_DIGITS = 6
MAX_LIST_ITEMS = 8


def _shorten(value: ty.Any) -> ty.Any:
    if isinstance(value, dict):
        return {key: _shorten(item) for key, item in value.items()}
    if isinstance(value, list):
        if len(value) > MAX_LIST_ITEMS:
            head = [_shorten(item) for item in value[: MAX_LIST_ITEMS - 1]]
            return [*head, f"... {len(value) - len(head)} more"]
        return [_shorten(item) for item in value]
    if isinstance(value, float):
        if not math.isfinite(value):
            return str(value)
        return float(f"{value:.{SIGNIFICANT_DIGITS}g}")
    return value


def pretty_view(__mapping: dict) -> str:
    """
    Подсвечивает JSON представление отчета для терминала.
    Числа округляются до `SIGNIFICANT_DIGITS` значащих цифр,
    длинные списки обрезаются. Файлы отчетов пишутся без этих
    сокращений, это только вид для консоли

    Args:
      __mapping: Отчет

    Returns:
        Строку с escape-последовательностями цветов
    """
    dumped_mapping = json.dumps(
        _shorten(to_plain(__mapping)), ensure_ascii=False, indent=4
    )
    return pygments.highlight(
        dumped_mapping,
        pygments.lexers.JsonLexer(),
        pygments.formatters.TerminalFormatter(bg="light"),
    )
