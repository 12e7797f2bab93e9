"""
Имплементации разных JSON парсеров
"""
import json
import typing as ty

import numpy as np

from bsquick.bases.json_parser import JSONParser

try:
    import orjson
except ImportError:  # pragma: no cover
    orjson = None


try:
    import ujson
except ImportError:  # pragma: no cover
    ujson = None


def to_plain(value: ty.Any) -> ty.Any:
    """
    Рекурсивно приводит скаляры и массивы `numpy`, кортежи
    и комплексные числа к типам, которые понимает любой JSON парсер.
    Комплексное число становится парой `[re, im]`
    """
    if isinstance(value, dict):
        return {str(key): to_plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(item) for item in value]
    if isinstance(value, np.ndarray):
        return to_plain(value.tolist())
    if isinstance(value, np.generic):
        return to_plain(value.item())
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value


class BuiltinJsonParser(JSONParser):
    """JSON парсер, использующий стандартную библиотеку"""

    @staticmethod
    def dumps(data: ty.Any, *, canonical: bool = False) -> bytes:
        return json.dumps(
            to_plain(data),
            ensure_ascii=False,
            separators=(",", ":"),
            sort_keys=canonical,
        ).encode("utf-8")

    @staticmethod
    def loads(string: ty.Union[str, bytes]) -> ty.Any:
        return json.loads(string)


class OrjsonParser(JSONParser):
    """JSON парсер, использующий `orjson`"""

    @staticmethod
    def dumps(data: ty.Any, *, canonical: bool = False) -> bytes:
        option = orjson.OPT_SORT_KEYS if canonical else 0
        return orjson.dumps(to_plain(data), option=option)  # pragma: no cover

    @staticmethod
    def loads(string: ty.Union[str, bytes]) -> ty.Any:
        return orjson.loads(string)  # pragma: no cover


class UjsonParser(JSONParser):
    """JSON парсер, использующий `ujson`"""

    @staticmethod
    def dumps(data: ty.Any, *, canonical: bool = False) -> bytes:
        return ujson.dumps(  # pragma: no cover
            to_plain(data), ensure_ascii=False, sort_keys=canonical
        ).encode("utf-8")

    @staticmethod
    def loads(string: ty.Union[str, bytes]) -> ty.Any:
        return ujson.loads(string)  # pragma: no cover


json_parser_policy: ty.Type[JSONParser]
"""
`json_parser_policy` -- установленный JSON парсер, используемый по умолчанию
"""

if orjson is not None:
    json_parser_policy = OrjsonParser
elif ujson is not None:
    json_parser_policy = UjsonParser
else:
    json_parser_policy = BuiltinJsonParser
