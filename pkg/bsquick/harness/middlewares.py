"""
Встроенные мидлвары свипа
"""
from __future__ import annotations

import time
import typing as ty

from loguru import logger

from bsquick.bases.middleware import SweepMiddleware
from bsquick.harness.statuses import RowStatus

if ty.TYPE_CHECKING:  # pragma: no cover
    from bsquick.harness.sweep import RowProcessingContext


class WallClockMiddleware(SweepMiddleware):
    """
    Меряет полное время строки, включая ожидание в пуле,
    и кладет его в `rpctx.extra["total_ms"]`. Время самих
    вычислений хранится в строке как `wall_ms`
    """

    async def foreword(self, rpctx: RowProcessingContext) -> None:
        rpctx.extra["started_at"] = time.perf_counter()

    async def afterword(self, rpctx: RowProcessingContext) -> None:
        started_at = rpctx.extra.pop("started_at", None)
        if started_at is not None:
            rpctx.extra["total_ms"] = (time.perf_counter() - started_at) * 1e3


class LoggingMiddleware(SweepMiddleware):
    """Пишет в лог начало и итог каждой строки"""

    async def foreword(self, rpctx: RowProcessingContext) -> None:
        logger.info("Row eps={epsilon} started", epsilon=rpctx.epsilon)

    async def afterword(self, rpctx: RowProcessingContext) -> None:
        if rpctx.status is RowStatus.CERTIFIED:
            logger.success(
                "Row eps={epsilon} certified: eps*mu={eps_mu:.6f}, "
                "residual={residual:.3e}",
                epsilon=rpctx.epsilon,
                eps_mu=rpctx.row.eps_mu,
                residual=rpctx.row.residual,
            )
        else:
            logger.warning(
                "Row eps={epsilon} finished with {status}: {payload}",
                epsilon=rpctx.epsilon,
                status=rpctx.status,
                payload=rpctx.payload,
            )
