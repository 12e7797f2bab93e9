"""
Оператор Бирмана-Швингера `K = chi delta_{lambda,eps}(H0) chi`,
его старшая собственная пара и нижние оценки `eps ||K||`
"""
from __future__ import annotations

import dataclasses
import math
import time
import typing as ty

import numpy as np
from loguru import logger

from bsquick.bases.symbol import FourierSymbol
from bsquick.exceptions import ConvergenceError, PreconditionError
from bsquick.grid import Field, FourierGrid, check_same_grid, field_inner
from bsquick.knapp import KnappSpec, knapp_wavepacket
from bsquick.multipliers import Multiplier, apply_multiplier, delta_multiplier
from bsquick.region import RegionShape, RegionSpec, region_indicator
from bsquick.symbols import LaplacianSymbol, RescaledTubeSymbol

DEFAULT_TOL = 1e-10
DEFAULT_RESIDUAL_TOL = 1e-5
DEFAULT_MAX_ITER = 5000
ISOSPECTRAL_NYQUIST = 3.0


class BirmanSchwingerOperator:
    """
    Матрично-свободный оператор `f -> chi * delta(H0) (chi * f)`.
    Самосопряжен и неотрицателен; на вещественных полях при четном
    символе возвращает вещественные поля
    """

    def __init__(
        self,
        indicator: Field,
        symbol: FourierSymbol,
        energy: float,
        epsilon: float,
        *,
        multiplier: ty.Optional[Multiplier] = None,
    ) -> None:
        self.indicator = indicator
        self.symbol = symbol
        self.energy = energy
        self.epsilon = epsilon
        self.multiplier = multiplier or delta_multiplier(
            symbol, energy, epsilon, indicator.grid
        )
        check_same_grid("BirmanSchwingerOperator", indicator, self.multiplier)

    @property
    def grid(self) -> FourierGrid:
        return self.indicator.grid

    @property
    def preserves_reality(self) -> bool:
        return self.multiplier.even

    def apply(self, f: Field) -> Field:
        return self.indicator * apply_multiplier(
            self.multiplier, self.indicator * f
        )

    __call__ = apply

    def quadratic_form(self, f: Field) -> float:
        """`<f, K f>`, всегда вещественное и неотрицательное"""
        return field_inner(f, self.apply(f)).real

    def norm_lower_bound(self, f: Field) -> float:
        """`||K f|| / ||f||` -- нижняя оценка `||K||` по одному вектору"""
        return self.apply(f).norm() / f.norm()

    def __repr__(self) -> str:
        return (
            f"<bsquick.BirmanSchwingerOperator symbol={self.symbol!r} "
            f"lambda={self.energy} eps={self.epsilon}>"
        )


def apply_K(
    indicator: Field,
    symbol: FourierSymbol,
    energy: float,
    epsilon: float,
    f: Field,
) -> Field:
    """
    Применяет `K = chi delta_{lambda,eps}(H0) chi` к полю

    Raises:
        GridMismatchError: Индикатор и поле на разных сетках
    """
    operator = BirmanSchwingerOperator(indicator, symbol, energy, epsilon)
    return operator.apply(f)


@dataclasses.dataclass(frozen=True, eq=False)
class EigenPair:
    """
    Результат степенного метода.

    `residual` -- `||K phi - mu phi|| / mu` для той же пары `(mu, phi)`,
    `history` -- отношения Рэлея по итерациям
    """

    mu: float
    phi: Field
    iterations: int
    converged: bool
    residual: float
    history: ty.Tuple[float, ...] = ()

    def describe(self) -> ty.Dict[str, ty.Any]:
        return {
            "mu": self.mu,
            "iterations": self.iterations,
            "converged": self.converged,
            "residual": self.residual,
        }


def power_iteration(
    operator: ty.Callable[[Field], Field],
    init: Field,
    *,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    residual_tol: float = DEFAULT_RESIDUAL_TOL,
    real: bool = True,
) -> EigenPair:
    """
    Степенной метод для самосопряженного неотрицательного оператора.

    Останавливается, когда относительное изменение отношения Рэлея
    не больше `tol` и невязка не больше `residual_tol`. Если этого не
    случилось за `max_iter` шагов, возвращает последнюю пару
    с `converged=False`

    Raises:
        ConvergenceError: Нулевой старт или оператор занулил вектор
    """
    vector = init.real_part() if real else init
    norm = vector.norm()
    if norm == 0:
        raise ConvergenceError("initial vector is zero on the region")
    vector = vector / norm
    image = operator(vector)
    mu = field_inner(vector, image).real
    history = [mu]
    residual = math.inf
    converged = False
    iterations = 0
    started_at = time.perf_counter()
    while iterations < max_iter:
        iterations += 1
        norm = image.norm()
        if norm == 0:
            raise ConvergenceError("operator annihilated the iterate")
        vector = image / norm
        if real:
            vector = vector.real_part()
        image = operator(vector)
        next_mu = field_inner(vector, image).real
        history.append(next_mu)
        residual = (image - next_mu * vector).norm() / next_mu
        change = abs(next_mu - mu) / next_mu
        mu = next_mu
        if iterations % 100 == 0:
            logger.debug(
                "Power iteration {iterations}: mu={mu:.12g}, "
                "residual={residual:.3e}",
                iterations=iterations,
                mu=mu,
                residual=residual,
            )
        if change <= tol and residual <= residual_tol:
            converged = True
            break
    elapsed = time.perf_counter() - started_at
    if converged:
        logger.debug(
            "Power iteration converged in {iterations} steps "
            "({elapsed:.2f}s)",
            iterations=iterations,
            elapsed=elapsed,
        )
    else:
        logger.warning(
            "Power iteration hit max_iter={max_iter}: "
            "mu={mu:.12g}, residual={residual:.3e}",
            max_iter=max_iter,
            mu=mu,
            residual=residual,
        )
    return EigenPair(
        mu=mu,
        phi=vector,
        iterations=iterations,
        converged=converged,
        residual=residual,
        history=tuple(history),
    )


def default_init(
    indicator: Field,
    symbol: FourierSymbol,
    energy: float,
    epsilon: float,
    *,
    c0: float = 1.0,
) -> Field:
    """Пакет Кнаппа, обрезанный на область"""
    packet = knapp_wavepacket(
        KnappSpec(epsilon=epsilon, c0=c0, energy=energy),
        indicator.grid,
        symbol,
    )
    return indicator * packet


def top_eigenpair(
    indicator: Field,
    symbol: FourierSymbol,
    energy: float,
    epsilon: float,
    init: ty.Optional[Field] = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    *,
    residual_tol: float = DEFAULT_RESIDUAL_TOL,
    c0: float = 1.0,
) -> EigenPair:
    """
    Старшая собственная пара `K` степенным методом

    Args:
        indicator: Индикатор области `chi`
        symbol: Символ `h0`
        energy: `lambda`
        epsilon: `eps > 0`
        init: Стартовый вектор. По умолчанию -- пакет Кнаппа
            с параметром `c0`, обрезанный на область
        tol: Порог относительного изменения `mu`
        max_iter: Максимум итераций
        residual_tol: Порог невязки `||K phi - mu phi|| / mu`

    Returns:
        Пару с `mu` в `(0, 1/eps]`, `phi` единичной нормы и
        вещественным при четном символе

    Raises:
        ConvergenceError: Старт зануляется на области
    """
    operator = BirmanSchwingerOperator(indicator, symbol, energy, epsilon)
    if init is None:
        init = default_init(indicator, symbol, energy, epsilon, c0=c0)
    return power_iteration(
        operator,
        indicator * init,
        tol=tol,
        max_iter=max_iter,
        residual_tol=residual_tol,
        real=operator.preserves_reality,
    )


def knapp_lower_bound(
    epsilon: float,
    M: float,
    c0: float,
    grid: FourierGrid,
    symbol: FourierSymbol,
    energy: float = 1.0,
) -> float:
    """
    `eps ||K f|| / ||f||` для пакета Кнаппа на трубке `T_{eps/M}` --
    доказанная нижняя оценка `eps ||K||`

    Raises:
        ResolutionError: Сетка не разрешает шапку
        RegionError: Трубка не помещается в ящик
    """
    region = RegionSpec(RegionShape.TUBE, epsilon=epsilon, M=M)
    indicator = region_indicator(region, grid)
    packet = knapp_wavepacket(
        KnappSpec(epsilon=epsilon, c0=c0, energy=energy), grid, symbol
    )
    operator = BirmanSchwingerOperator(indicator, symbol, energy, epsilon)
    bound = epsilon * operator.norm_lower_bound(packet)
    logger.info(
        "Knapp bound at eps={epsilon}, M={M}, c0={c0}: {bound:.6f}",
        epsilon=epsilon,
        M=M,
        c0=c0,
        bound=bound,
    )
    return bound


class KnappRow(ty.NamedTuple):
    epsilon: float
    M: float
    c0: float
    bound: float


def knapp_table(
    epsilon: float,
    Ms: ty.Iterable[float],
    grid_for: ty.Callable[[float, float], FourierGrid],
    symbol: ty.Optional[FourierSymbol] = None,
    energy: float = 1.0,
    *,
    delta: float = 0.0,
) -> ty.List[KnappRow]:
    """
    Таблица `knapp_lower_bound` по `M` с `c0 = M^{-1 + delta}`.
    `grid_for(M, c0)` строит сетку под каждую строку.

    При `delta = 0` пакет того же размера, что и трубка `T_{eps/M}`,
    и в нее попадает только часть его массы. При `delta > 0` трубка
    длиннее пакета в `M^delta` раз, а шапка все равно сужается,
    так что оценка стремится к `1` с ростом `M`

    Raises:
        PreconditionError: `delta` вне `[0, 1)`
    """
    if delta < 0:
        raise PreconditionError(
            quantity="delta", value=delta, bound=0.0, relation=">="
        )
    if delta >= 1:
        raise PreconditionError(
            quantity="delta", value=delta, bound=1.0, relation="<"
        )
    symbol = symbol or LaplacianSymbol()
    rows = []
    for M in Ms:
        c0 = M ** (delta - 1)
        bound = knapp_lower_bound(
            epsilon, M, c0, grid_for(M, c0), symbol, energy
        )
        rows.append(KnappRow(epsilon=epsilon, M=M, c0=c0, bound=bound))
    return rows


def matched_unit_grid(grid: FourierGrid, epsilon: float) -> FourierGrid:
    """
    Сетка в координатах `y_1 = eps x_1`, `y' = eps^{1/2} x'`
    с теми же узлами
    """
    factors = [epsilon] + [math.sqrt(epsilon)] * (grid.dimension - 1)
    return grid.scaled(factors)


def rescaled_tube_operator(
    epsilon: float, unit_grid: FourierGrid
) -> BirmanSchwingerOperator:
    """
    Оператор `K'_eps = chi_1 delta_{0,1}(h'_eps(D)) chi_1` на единичной
    трубке `T_1`, где `h'_eps(eta) = 2 eta_1 + |eta'|^2 + eps eta_1^2`.
    Получается из `eps K` для лапласиана при `lambda = 1` сопряжением
    с `exp(i x_1)` и растяжением трубки `T_eps` в `T_1`, поэтому
    изоспектрален `eps K`. При `eps = 0` это предельный оператор `K'_0`
    """
    region = RegionSpec(RegionShape.TUBE, epsilon=1.0)
    indicator = region_indicator(region, unit_grid)
    return BirmanSchwingerOperator(
        indicator, RescaledTubeSymbol(epsilon), energy=0.0, epsilon=1.0
    )


def to_unit_tube(f: Field, epsilon: float) -> Field:
    """
    Переносит поле с трубки `T_eps` на единичную трубку:
    те же значения узлов, домноженные на `exp(-i x_1)`, на
    растянутой сетке, с нормировкой
    """
    phase = np.exp(-1j * f.grid.coordinates()[0])
    unit_grid = matched_unit_grid(f.grid, epsilon)
    return Field(unit_grid, f.values * phase).normalized()


class StrongConvergence(ty.NamedTuple):
    rescaled_norm: float
    limit_norm: float


def strong_convergence_check(
    epsilon: float, unit_grid: FourierGrid, f: Field
) -> StrongConvergence:
    """
    Нормы `||K'_eps f||` и `||K'_0 f||` на одном векторе
    """
    if f.grid != unit_grid:
        f = Field(unit_grid, f.values)
    rescaled = rescaled_tube_operator(epsilon, unit_grid).apply(f).norm()
    limit = rescaled_tube_operator(0.0, unit_grid).apply(f).norm()
    return StrongConvergence(rescaled_norm=rescaled, limit_norm=limit)


class Isospectrality(ty.NamedTuple):
    scaled_mu: float
    rescaled_mu: float

    @property
    def relative_gap(self) -> float:
        return abs(self.scaled_mu - self.rescaled_mu) / self.scaled_mu


def isospectrality_check(
    epsilon: float,
    grid: FourierGrid,
    *,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    residual_tol: float = DEFAULT_RESIDUAL_TOL,
) -> Isospectrality:
    """
    Сравнивает `eps mu` для `K` на `T_eps` (лапласиан, `lambda = 1`)
    со старшим собственным значением `K'_eps` на согласованной сетке
    """
    if epsilon <= 0:
        raise PreconditionError(
            quantity="eps", value=epsilon, bound=0.0, relation=">"
        )
    # после сдвига на -e_1 решетка K' должна вмещать обе шапки +-e_1;
    # нечетный множитель оставляет границу трубки между узлами
    if math.pi / grid.spacing[0] < ISOSPECTRAL_NYQUIST:
        grid = FourierGrid(
            box_lengths=grid.box_lengths,
            sizes=(3 * grid.sizes[0],) + grid.sizes[1:],
        )
    symbol = LaplacianSymbol()
    region = RegionSpec(RegionShape.TUBE, epsilon=epsilon)
    indicator = region_indicator(region, grid)
    original = top_eigenpair(
        indicator,
        symbol,
        1.0,
        epsilon,
        tol=tol,
        max_iter=max_iter,
        residual_tol=residual_tol,
    )
    operator = rescaled_tube_operator(
        epsilon, matched_unit_grid(grid, epsilon)
    )
    rescaled = power_iteration(
        operator,
        operator.indicator * to_unit_tube(original.phi, epsilon),
        tol=tol,
        max_iter=max_iter,
        residual_tol=residual_tol,
        real=False,
    )
    return Isospectrality(
        scaled_mu=epsilon * original.mu, rescaled_mu=rescaled.mu
    )
