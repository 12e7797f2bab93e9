"""
Свип по `eps`: на каждое значение строится сетка, куется и
проверяется сертификат и считаются все запрошенные отношения
"""
from __future__ import annotations

import asyncio
import concurrent.futures
import dataclasses
import math
import re
import time
import typing as ty

from loguru import logger

from bsquick.birman_schwinger import top_eigenpair
from bsquick.bounds import (
    FractionalVariant,
    davies_nath_F,
    default_y_set,
    fractional_check,
    frank_quotient,
    imag_sqrt,
    ls_quotient,
)
from bsquick.exceptions import BoundError, BSQuickError
from bsquick.forge import (
    Certificate,
    CertificateReport,
    default_q_values,
    forge_potential,
    verify_bs_correspondence,
    verify_certificate,
)
from bsquick.harness.config import SweepConfig
from bsquick.harness.fitting import PowerLawFit, fit_power_law
from bsquick.harness.middlewares import LoggingMiddleware, WallClockMiddleware
from bsquick.harness.statuses import (
    CertificationFailed,
    Certified,
    RowStatus,
    StatusPayload,
    UnexpectedErrorOccurred,
)
from bsquick.region import region_indicator
from bsquick.symbols import FractionalSymbol

if ty.TYPE_CHECKING:  # pragma: no cover
    from bsquick.bases.middleware import SweepMiddleware

_ANSI_ESCAPE = re.compile(r"\x1b\[[0-9;]*m")


def key_of(value: float) -> str:
    """Часть имени колонки: `2.0 -> "2"`, `2.5 -> "2.5"`"""
    return format(value, "g")


def plain_reason(error: BaseException) -> str:
    """Текст исключения без цветовых escape-последовательностей"""
    return f"{type(error).__name__}: {_ANSI_ESCAPE.sub('', str(error))}"


@dataclasses.dataclass
class SweepRow:
    """Одна строка таблицы свипа (одно значение `eps`)"""

    epsilon: float
    M: float
    c0: float
    status: RowStatus = RowStatus.CERTIFICATION_FAILED
    reason: str = ""
    mu: ty.Optional[float] = None
    residual: ty.Optional[float] = None
    nodal_fraction: ty.Optional[float] = None
    iterations: ty.Optional[int] = None
    bs_defect: ty.Optional[float] = None
    norms: ty.Dict[float, float] = dataclasses.field(default_factory=dict)
    ls: ty.Dict[float, ty.Optional[float]] = dataclasses.field(
        default_factory=dict
    )
    frank: ty.Dict[float, ty.Optional[float]] = dataclasses.field(
        default_factory=dict
    )
    dn: ty.Dict[float, float] = dataclasses.field(default_factory=dict)
    dn_F: ty.Dict[float, float] = dataclasses.field(default_factory=dict)
    dn_uniform_F: ty.Dict[float, float] = dataclasses.field(
        default_factory=dict
    )
    fractional: ty.Dict[
        ty.Tuple[str, float], ty.Optional[float]
    ] = dataclasses.field(default_factory=dict)
    wall_ms: ty.Optional[float] = None
    certificate: ty.Optional[Certificate] = dataclasses.field(
        default=None, repr=False
    )

    @property
    def eps_mu(self) -> ty.Optional[float]:
        return None if self.mu is None else self.epsilon * self.mu

    @property
    def passed(self) -> bool:
        return self.status is RowStatus.CERTIFIED

    def to_record(self) -> ty.Dict[str, ty.Any]:
        """Словарь "колонка -> значение" для CSV"""
        record: ty.Dict[str, ty.Any] = {
            "epsilon": self.epsilon,
            "M": self.M,
            "c0": self.c0,
            "mu": self.mu,
            "eps_mu": self.eps_mu,
            "residual": self.residual,
            "nodal_fraction": self.nodal_fraction,
            "wall_ms": self.wall_ms,
            "bs_defect": self.bs_defect,
            "iterations": self.iterations,
            "status": self.status.name.lower(),
            "reason": self.reason,
        }
        for q, value in self.norms.items():
            record[f"norm_q_{key_of(q)}"] = value
        for q, value in self.ls.items():
            record[f"ls_quotient_{key_of(q)}"] = value
        for q, value in self.frank.items():
            record[f"frank_quotient_{key_of(q)}"] = value
        for L, value in self.dn.items():
            record[f"dn_quotient_L{key_of(L)}"] = value
        for L, value in self.dn_F.items():
            record[f"dn_F_L{key_of(L)}"] = value
        for (variant, q), value in self.fractional.items():
            record[f"fractional_{variant}_{key_of(q)}"] = value
        return record


def sweep_columns(config: SweepConfig) -> ty.List[str]:
    """Колонки CSV в фиксированном порядке"""
    columns = [
        "epsilon", "M", "c0", "mu", "eps_mu", "residual", "nodal_fraction",
    ]
    columns += [f"norm_q_{key_of(q)}" for q in config.q_values]
    columns += [f"ls_quotient_{key_of(q)}" for q in config.q_values]
    columns += [f"frank_quotient_{key_of(q)}" for q in config.q_values]
    columns += [f"dn_quotient_L{key_of(L)}" for L in config.l_values]
    columns.append("wall_ms")
    columns += [f"dn_F_L{key_of(L)}" for L in config.l_values]
    if config.symbol == "fractional":
        columns += [
            f"fractional_{variant.value}_{key_of(q)}"
            for variant in FractionalVariant
            for q in config.q_values
        ]
    columns += ["bs_defect", "iterations", "status", "reason"]
    return columns


@dataclasses.dataclass
class RowProcessingContext:
    """
    Контекстное хранилище, инициализируемое на
    каждую строку свипа
    """

    runner: SweepRunner
    epsilon: float
    row: ty.Optional[SweepRow] = None
    status: ty.Optional[RowStatus] = None
    payload: ty.Optional[StatusPayload] = None
    extra: dict = dataclasses.field(default_factory=dict)


def _optional(
    compute: ty.Callable[[], float]
) -> ty.Optional[float]:
    try:
        return compute()
    except BoundError:
        return None


class SweepRunner:
    """
    Считает строки свипа конкурентно в пуле потоков,
    прогоняя каждую через мидлвары. Строки собираются в порядке
    значений `eps` из конфига
    """

    def __init__(
        self,
        config: SweepConfig,
        *,
        middlewares: ty.Optional[ty.List[SweepMiddleware]] = None,
        keep_certificates: bool = False,
    ) -> None:
        """
        Arguments:
            config: Параметры свипа
            middlewares: Мидлвары, вызываемые перед и после каждой строки.
                По умолчанию -- замер времени и логирование
            keep_certificates: Сохранять выкованные сертификаты в строках
        """
        self._config = config
        self._middlewares: ty.List[SweepMiddleware] = (
            [WallClockMiddleware(), LoggingMiddleware()]
            if middlewares is None
            else middlewares
        )
        self._keep_certificates = keep_certificates

    @property
    def config(self) -> SweepConfig:
        return self._config

    @property
    def middlewares(self) -> ty.List[SweepMiddleware]:
        """Текущий список используемых мидлваров"""
        return self._middlewares

    def add_middleware(self, middleware: SweepMiddleware) -> None:
        self._middlewares.append(middleware)

    def run(self) -> ty.List[SweepRow]:
        """
        Запускает свип и возвращает строки. Работает асинхронно,
        несмотря на синхронный запуск
        """
        return asyncio.run(self.coroutine_run())

    async def coroutine_run(self) -> ty.List[SweepRow]:
        """
        Аналогичный методу `run` метод, только являющийся
        корутиной
        """
        contexts = [
            RowProcessingContext(runner=self, epsilon=epsilon)
            for epsilon in self._config.epsilons
        ]
        with concurrent.futures.ThreadPoolExecutor(
            max_workers=self._config.workers
        ) as executor:
            await asyncio.gather(
                *(self._route_context(rpctx, executor) for rpctx in contexts)
            )
        return [rpctx.row for rpctx in contexts]

    async def _route_context(
        self,
        rpctx: RowProcessingContext,
        executor: concurrent.futures.Executor,
    ) -> None:
        """
        Направляет контекст строки через мидлвары и вычисления
        """
        for middleware in self._middlewares:
            await middleware.foreword(rpctx)
        loop = asyncio.get_running_loop()
        try:
            row, report = await loop.run_in_executor(
                executor, self.process_row, rpctx.epsilon
            )
        except BSQuickError as error:
            rpctx.row = self._failed_row(rpctx.epsilon, plain_reason(error))
            rpctx.status = RowStatus.CERTIFICATION_FAILED
            rpctx.payload = CertificationFailed(
                reason=rpctx.row.reason, raised_error=error
            )
        except Exception as error:
            logger.opt(exception=error).error(
                "Unexpected error in row eps={epsilon}", epsilon=rpctx.epsilon
            )
            rpctx.row = self._failed_row(rpctx.epsilon, plain_reason(error))
            rpctx.row.status = RowStatus.UNEXPECTED_ERROR_OCCURRED
            rpctx.status = RowStatus.UNEXPECTED_ERROR_OCCURRED
            rpctx.payload = UnexpectedErrorOccurred(raised_error=error)
        else:
            rpctx.row = row
            rpctx.status = row.status
            if row.passed:
                rpctx.payload = Certified(report=report)
            else:
                rpctx.payload = CertificationFailed(reason=row.reason)
        for middleware in reversed(self._middlewares):
            await middleware.afterword(rpctx)

    def _failed_row(self, epsilon: float, reason: str) -> SweepRow:
        return SweepRow(
            epsilon=epsilon,
            M=self._config.stretch_for(epsilon),
            c0=self._config.c0_for(epsilon),
            status=RowStatus.CERTIFICATION_FAILED,
            reason=reason,
        )

    def process_row(
        self, epsilon: float
    ) -> ty.Tuple[SweepRow, CertificateReport]:
        """
        Считает одну строку синхронно: сетка, собственная пара,
        сертификат, его проверка и все отношения
        """
        config = self._config
        started_at = time.perf_counter()
        symbol = config.make_symbol()
        region = config.region_for(epsilon)
        grid = config.grid_for(epsilon)
        c0 = config.c0_for(epsilon)
        dimension = config.dimension
        logger.info(
            "Row eps={epsilon}: grid {grid}, M={M}, c0={c0:.4g}",
            epsilon=epsilon,
            grid=grid,
            M=region.M,
            c0=c0,
        )
        indicator = region_indicator(region, grid)
        eigenpair = top_eigenpair(
            indicator,
            symbol,
            config.energy,
            epsilon,
            tol=config.power_tol,
            max_iter=config.max_iter,
            residual_tol=config.residual_tol,
            c0=c0,
        )
        q_values = sorted(
            set(config.q_values) | set(default_q_values(dimension))
        )
        certificate = forge_potential(
            symbol,
            config.energy,
            epsilon,
            region,
            eigenpair,
            config.nodal_threshold,
            q_values=q_values,
        )
        report = verify_certificate(
            certificate, config.certification_tol, q_values=q_values
        )
        correspondence = verify_bs_correspondence(
            eigenpair, symbol, config.energy, epsilon, region
        )

        row = SweepRow(
            epsilon=epsilon,
            M=region.M,
            c0=c0,
            status=RowStatus.CERTIFIED
            if report.passed
            else RowStatus.CERTIFICATION_FAILED,
            reason="" if report.passed else "; ".join(report.violations),
            mu=eigenpair.mu,
            residual=report.residual,
            nodal_fraction=certificate.nodal_fraction,
            iterations=eigenpair.iterations,
            bs_defect=correspondence.defect,
            certificate=certificate if self._keep_certificates else None,
        )
        for q in config.q_values:
            row.norms[q] = certificate.q_norms[q]
            row.ls[q] = _optional(lambda: ls_quotient(certificate, q))
            row.frank[q] = _optional(lambda: frank_quotient(certificate, q))
        y_set = default_y_set(region, dimension)
        growth = imag_sqrt(certificate.z)
        support = certificate.potential.support_indicator()
        for L in config.l_values:
            value = davies_nath_F(
                certificate.potential, L * growth, y_set=y_set
            )
            row.dn_F[L] = value
            row.dn[L] = math.sqrt(abs(certificate.z)) / value
            row.dn_uniform_F[L] = davies_nath_F(
                support, L * growth, y_set=y_set
            )
        if isinstance(symbol, FractionalSymbol):
            for variant in FractionalVariant:
                for q in config.q_values:
                    row.fractional[(variant.value, q)] = _optional(
                        lambda: fractional_check(
                            certificate,
                            q,
                            variant,
                            config.fractional_n,
                            y_set=y_set,
                        ).ratio
                    )
        if config.record_timing:
            row.wall_ms = (time.perf_counter() - started_at) * 1e3
        return row, report


def run_sweep(
    config: SweepConfig,
    *,
    middlewares: ty.Optional[ty.List[SweepMiddleware]] = None,
    keep_certificates: bool = False,
) -> ty.List[SweepRow]:
    """
    Считает строки свипа по всем `eps` конфига. Ошибка в строке
    не останавливает свип: строка помечается как неудачная с причиной
    """
    return SweepRunner(
        config,
        middlewares=middlewares,
        keep_certificates=keep_certificates,
    ).run()


def fit_norm_exponent(rows: ty.Sequence[SweepRow], q: float) -> PowerLawFit:
    """Показатель `||V_eps||_q ~ eps^p` по сертифицированным строкам"""
    return fit_power_law(
        (row.epsilon, row.norms[q]) for row in rows if row.passed
    )


def fit_dn_slope(row: SweepRow) -> PowerLawFit:
    """Показатель `F_V(L Im sqrt z) ~ L^p` по значениям `L` строки"""
    return fit_power_law(sorted(row.dn_F.items()))


def expected_dn_slope(row: SweepRow) -> PowerLawFit:
    """
    Тот же показатель для постоянного `|V|` на носителе потенциала
    строки. Весь наклон тогда задается геометрией носителя: длиной
    трубки `~ 1/eps` против длины затухания веса `1/(L Im sqrt z)`
    """
    return fit_power_law(sorted(row.dn_uniform_F.items()))
