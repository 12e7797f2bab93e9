from __future__ import annotations

import typing as ty

if ty.TYPE_CHECKING:  # pragma: no cover
    from bsquick.harness.sweep import RowProcessingContext


class SweepMiddleware:
    """
    Мидлвар -- сущность, содержащая методы, которые
    будут вызваны перед тем, как начать считать строку
    свипа, и после того, как строка посчитана (успешно или нет)
    """

    async def foreword(self, rpctx: RowProcessingContext) -> None:
        """
        Вызывается перед тем, как начать обработку

        Arguments:
            rpctx: Контекст обработки строки
        """

    async def afterword(self, rpctx: RowProcessingContext) -> None:
        """
        Вызывается после того, как закончится обработка строки

        Arguments:
            rpctx: Контекст обработки строки
        """
