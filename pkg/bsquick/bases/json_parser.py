from __future__ import annotations

import abc
import typing as ty


class JSONParser(abc.ABC):
    """
    Неймспейс, объединяющий методы сериализации и десериализации
    JSON в один протокол. Имплементации используются для
    конфигов, отчетов и заголовков контейнеров сертификатов.

    Имплементации некоторых из JSON-библиотек можно
    найти в [json_parsers.py](../json_parsers.py)
    """

    @staticmethod
    @abc.abstractmethod
    def dumps(data: ty.Any, *, canonical: bool = False) -> bytes:
        """
        Сериализует значение в UTF-8 байты

        Args:
            data: Сериализуемое значение. Скаляры и массивы `numpy`
                приводятся к обычным числам и спискам
            canonical: Отсортировать ключи и убрать пробелы, чтобы
                одинаковые данные всегда давали одинаковые байты
                (нужно для контрольных сумм)
        Returns:
            JSON в виде байтов
        """

    @staticmethod
    @abc.abstractmethod
    def loads(string: ty.Union[str, bytes]) -> ty.Any:
        """
        Десериализует JSON из строки

        Args:
            string: JSON-строка

        Returns:
            Объект, который был в строке
        """
