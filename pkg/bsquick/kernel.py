"""
Эмпирический профиль затухания ядра срезанной резольвенты
`eta(D) (h0(D) - z)^{-1}`
"""
from __future__ import annotations

import dataclasses
import math
import typing as ty

import numpy as np
import scipy.fft
from loguru import logger

from bsquick.bases.symbol import DispersionSymbol, FourierSymbol
from bsquick.exceptions import PreconditionError
from bsquick.grid import FourierGrid
from bsquick.knapp import bump_profile
from bsquick.multipliers import FFT_WORKERS, resolvent_multiplier

MIN_FIT_BINS = 3
EXPONENT_TOL = 0.15
SUPPRESSION_TOL = 0.1


@dataclasses.dataclass(frozen=True)
class ShellBump:
    """
    Срезка вокруг изоэнергетической поверхности:
    `1` при `|h0 - lambda| <= inner`, `0` при `|h0 - lambda| >= outer`
    """

    inner: float
    outer: float

    def __post_init__(self) -> None:
        if not 0 < self.inner < self.outer:
            raise PreconditionError(
                quantity="inner", value=self.inner, bound=self.outer,
                relation="<",
            )

    def on_grid(
        self, symbol: FourierSymbol, energy: float, grid: FourierGrid
    ) -> np.ndarray:
        gap = symbol.on_grid(grid) - energy
        return bump_profile(gap, self.inner, self.outer)


@dataclasses.dataclass(frozen=True)
class DecayProfile:
    """
    Огибающая `max |kernel|` по сферическим слоям и степенной закон
    `log env + Im k r = a + p log r` на окне `fit_range`
    """

    radii: np.ndarray
    envelope: np.ndarray
    fitted_exponent: float
    fit_range: ty.Tuple[float, float]
    r_squared: float
    decay_rate: float
    suppression_ratio: float
    expected_exponent: float
    expected_suppression: float

    @property
    def passed(self) -> bool:
        """
        Показатель в пределах `EXPONENT_TOL` от `-(d-1)/2`,
        подавление в пределах `SUPPRESSION_TOL` от ожидаемого
        """
        exponent_gap = abs(self.fitted_exponent - self.expected_exponent)
        suppression_gap = abs(
            self.suppression_ratio / self.expected_suppression - 1
        )
        return (
            exponent_gap <= EXPONENT_TOL
            and suppression_gap <= SUPPRESSION_TOL
        )

    def describe(self) -> ty.Dict[str, ty.Any]:
        return {
            "fitted_exponent": self.fitted_exponent,
            "expected_exponent": self.expected_exponent,
            "fit_range": list(self.fit_range),
            "r_squared": self.r_squared,
            "decay_rate": self.decay_rate,
            "suppression_ratio": self.suppression_ratio,
            "expected_suppression": self.expected_suppression,
            "shells": int(self.radii.size),
            "passed": self.passed,
        }


def _check_cutoff(
    cutoff: np.ndarray,
    symbol: FourierSymbol,
    energy: float,
    epsilon: float,
    grid: FourierGrid,
) -> None:
    gap = np.abs(symbol.on_grid(grid) - energy)
    near_shell = gap <= epsilon
    if np.any(near_shell) and np.max(np.abs(cutoff[near_shell] - 1)) > 1e-12:
        raise PreconditionError(
            quantity="max |eta - 1| near the shell",
            value=float(np.max(np.abs(cutoff[near_shell] - 1))),
            bound=1e-12,
        )
    # носитель eta должен лежать внутри решетки частот
    boundary = np.zeros(grid.sizes, dtype=bool)
    for axis, size in enumerate(grid.sizes):
        half = (size - 1) // 2
        index = [slice(None)] * grid.dimension
        for k in (half, half + 1):
            index[axis] = k
            boundary[tuple(index)] = True
    edge = float(np.max(np.abs(cutoff[boundary])))
    if edge > 0:
        raise PreconditionError(
            quantity="max |eta| on the lattice boundary",
            value=edge,
            bound=0.0,
        )
    smooth_at_origin = getattr(symbol, "smooth_at_origin", True)
    if not smooth_at_origin:
        origin = abs(float(cutoff[(0,) * grid.dimension]))
        if origin > 0:
            raise PreconditionError(
                quantity="|eta(0)| for a symbol singular at 0",
                value=origin,
                bound=0.0,
            )


def resolvent_decay_rate(
    symbol: FourierSymbol, energy: float, epsilon: float, dimension: int
) -> float:
    """
    `Im k` для корня `h0(k e_1) = lambda + i eps`: ядро
    `(h0(D) - z)^{-1}` затухает как `exp(-Im k r)`.
    Для однородного символа корень точный, иначе берется линейное
    приближение `eps / h0'(r_lambda)`. Для символа без поверхностей
    уровня возвращает `0`
    """
    power = getattr(symbol, "homogeneity", None)
    if power:
        axis = np.zeros(dimension)
        axis[0] = 1.0
        root = (complex(energy, epsilon) / symbol.evaluate(axis)) ** (
            1 / power
        )
        return float(root.imag)
    if not isinstance(symbol, DispersionSymbol):
        logger.warning(
            "{symbol} has no level sets, kernel envelope is not compensated",
            symbol=symbol,
        )
        return 0.0
    radius = symbol.shell_radius(energy)
    step = 1e-6 * max(radius, 1.0)

    def along_axis(point: float) -> float:
        axis = np.zeros(symbol.dimension_hint)
        axis[0] = point
        return symbol.evaluate(axis)

    slope = (along_axis(radius + step) - along_axis(radius - step)) / (
        2 * step
    )
    return float(epsilon / abs(slope))


def _shell_maxima(
    radius: np.ndarray, magnitudes: np.ndarray, width: float, reach: float
) -> ty.Tuple[np.ndarray, np.ndarray]:
    # по каждому слою -- узел с наибольшим |kernel| и его радиус
    keep = radius < reach
    radius, magnitudes = radius[keep], magnitudes[keep]
    bins = np.floor(radius / width).astype(int)
    order = np.lexsort((magnitudes, bins))
    last = np.append(np.nonzero(np.diff(bins[order]))[0], order.size - 1)
    picked = order[last]
    return radius[picked], magnitudes[picked]


def kernel_decay_profile(
    symbol: FourierSymbol,
    energy: float,
    epsilon: float,
    cutoff: ty.Union[ShellBump, np.ndarray],
    grid: FourierGrid,
) -> DecayProfile:
    """
    Ядро `eta(D) (h0(D) - (lambda + i eps))^{-1}` как обратное FFT
    мультипликатора, максимумы `|kernel|` по слоям толщины
    `max(spacing)` и степенной закон на `[5 spacing, 1/(2 eps)]`.

    Степень подгоняется к огибающей, домноженной на `exp(Im k r)`
    (см. `resolvent_decay_rate`): на окне этот множитель меняется
    на десятки процентов и иначе сдвигает показатель.
    `suppression_ratio` -- `envelope(2/eps) / envelope(1/(2 eps))`,
    `expected_suppression` -- то же отношение для огибающей
    `r^{-(d-1)/2} exp(-Im k r)`

    Raises:
        PreconditionError: Срезка не равна 1 у поверхности, не
            обращается в ноль на краю решетки или в нуле для
            негладкого символа; окно подгонки пусто; ящик меньше `2/eps`
    """
    if isinstance(cutoff, ShellBump):
        cutoff = cutoff.on_grid(symbol, energy, grid)
    cutoff = np.asarray(cutoff, dtype=float)
    _check_cutoff(cutoff, symbol, energy, epsilon, grid)

    multiplier = resolvent_multiplier(symbol, complex(energy, epsilon), grid)
    kernel = scipy.fft.ifftn(
        cutoff * multiplier.values, workers=FFT_WORKERS
    ) / grid.cell_volume
    offsets = grid.wrapped_coordinates()
    radius = np.sqrt(sum(offset ** 2 for offset in offsets))
    radius = np.broadcast_to(radius, grid.sizes)

    width = max(grid.spacing)
    radii, envelope = _shell_maxima(
        radius.ravel(),
        np.abs(kernel).ravel(),
        width,
        min(grid.box_lengths) / 2,
    )

    r_min, r_max = 5 * width, 1 / (2 * epsilon)
    window = (radii >= r_min) & (radii <= r_max) & (envelope > 0)
    if np.count_nonzero(window) < MIN_FIT_BINS:
        raise PreconditionError(
            quantity="shells in the fit window",
            value=float(np.count_nonzero(window)),
            bound=MIN_FIT_BINS,
            relation=">=",
        )
    if 2 / epsilon >= radii[-1]:
        raise PreconditionError(
            quantity="2/eps", value=2 / epsilon, bound=float(radii[-1]),
            relation="<",
        )
    rate = resolvent_decay_rate(symbol, energy, epsilon, grid.dimension)
    log_r = np.log(radii[window])
    log_env = np.log(envelope[window]) + rate * radii[window]
    design = np.stack([np.ones_like(log_r), log_r], axis=1)
    coefficients, *_ = np.linalg.lstsq(design, log_env, rcond=None)
    predicted = design @ coefficients
    total = float(np.sum((log_env - log_env.mean()) ** 2))
    residual = float(np.sum((log_env - predicted) ** 2))
    tiny = log_env.size * max(float(np.max(np.abs(log_env))), 1.0) ** 2
    tiny *= np.finfo(float).eps
    if total <= tiny:
        r_squared = 1.0 if residual <= tiny else 0.0
    else:
        r_squared = min(max(1 - residual / total, 0.0), 1.0)

    def nearest(point: float) -> int:
        return int(np.argmin(np.abs(radii - point)))

    near, far = nearest(r_max), nearest(2 / epsilon)
    suppression = float(envelope[far] / envelope[near])
    expected_exponent = -(grid.dimension - 1) / 2
    expected_suppression = (radii[far] / radii[near]) ** expected_exponent
    expected_suppression *= math.exp(-rate * (radii[far] - radii[near]))
    profile = DecayProfile(
        radii=radii,
        envelope=envelope,
        fitted_exponent=float(coefficients[1]),
        fit_range=(r_min, r_max),
        r_squared=r_squared,
        decay_rate=rate,
        suppression_ratio=suppression,
        expected_exponent=expected_exponent,
        expected_suppression=float(expected_suppression),
    )
    logger.info(
        "Kernel profile at eps={epsilon}: exponent={exponent:.4f}, "
        "suppression={suppression:.4f} (expected {expected:.4f})",
        epsilon=epsilon,
        exponent=profile.fitted_exponent,
        suppression=suppression,
        expected=profile.expected_suppression,
    )
    return profile
