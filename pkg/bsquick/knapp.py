"""
Волновые пакеты Кнаппа: гладкие шапки на изоэнергетической
поверхности размером `c0 eps` поперек и `(c0 eps)^{1/2}` вдоль нее
"""
from __future__ import annotations

import dataclasses
import math
import typing as ty

import numpy as np
import scipy.fft

from bsquick.bases.symbol import FourierSymbol
from bsquick.exceptions import PreconditionError, ResolutionError
from bsquick.grid import Field, FourierGrid
from bsquick.multipliers import FFT_WORKERS
from bsquick.region import RegionShape, RegionSpec, region_indicator

RESOLUTION_SAMPLES = 8
"""Минимальное число частот решетки на каждый размер шапки"""


def smooth_step(t: np.ndarray) -> np.ndarray:
    """
    Бесконечно гладкая ступенька: `0` при `t <= 0`, `1` при `t >= 1`
    """
    t = np.asarray(t, dtype=float)

    def flat_exp(u: np.ndarray) -> np.ndarray:
        positive = u > 0
        safe = np.where(positive, u, 1.0)
        return np.where(positive, np.exp(-1 / safe), 0.0)

    left = flat_exp(t)
    right = flat_exp(1 - t)
    return left / (left + right)


def bump_profile(
    u: np.ndarray, inner: float = 1.0, outer: float = 2.0
) -> np.ndarray:
    """
    Радиальная срезка: `1` при `|u| <= inner`,
    `0` при `|u| >= outer`, гладкий переход между ними
    """
    u = np.abs(np.asarray(u, dtype=float))
    return smooth_step((outer - u) / (outer - inner))


@dataclasses.dataclass(frozen=True)
class KnappSpec:
    """
    Параметры пакета Кнаппа.

    `base_point` -- центр шапки на поверхности `h0 = energy`;
    по умолчанию `shell_radius(energy) * e_1`
    """

    epsilon: float
    c0: float
    energy: float = 1.0
    base_point: ty.Optional[ty.Tuple[float, ...]] = None
    inner: float = 1.0
    outer: float = 2.0

    def __post_init__(self) -> None:
        if self.epsilon <= 0 or self.c0 <= 0:
            raise PreconditionError(
                quantity="c0 * eps",
                value=self.c0 * self.epsilon,
                bound=0.0,
                relation=">",
            )
        if not 0 < self.inner < self.outer:
            raise PreconditionError(
                quantity="inner",
                value=self.inner,
                bound=self.outer,
                relation="<",
            )

    @property
    def cap_scale(self) -> float:
        """`c0 eps`"""
        return self.c0 * self.epsilon

    def resolved_base_point(
        self, symbol: FourierSymbol, dimension: int
    ) -> np.ndarray:
        if self.base_point is not None:
            if len(self.base_point) != dimension:
                raise PreconditionError(
                    quantity="len(base_point)",
                    value=len(self.base_point),
                    bound=dimension,
                    relation="==",
                )
            return np.asarray(self.base_point, dtype=float)
        point = np.zeros(dimension)
        point[0] = symbol.shell_radius(self.energy)
        return point

    def cap_half_widths(self) -> ty.Tuple[float, float]:
        """Полуширины носителя шапки: по нормали и по касательной"""
        return (
            self.outer * self.cap_scale,
            self.outer * math.sqrt(self.cap_scale),
        )


def check_resolution(
    spec: KnappSpec, grid: FourierGrid, normal: np.ndarray
) -> None:
    """
    Правило разрешения: шаг частот не больше `c0 eps / 8` по осям,
    задействованным нормалью, и `(c0 eps)^{1/2} / 8` по остальным

    Raises:
        ResolutionError: Шапка разрешена хуже
    """
    for axis, spacing in enumerate(grid.frequency_spacing):
        width = (
            spec.cap_scale if normal[axis] != 0 else math.sqrt(spec.cap_scale)
        )
        samples = width / spacing
        # сетки строятся ровно под 8 отсчетов, допуск на округление
        if samples < RESOLUTION_SAMPLES * (1 - 1e-9):
            raise ResolutionError(
                axis=axis, samples=samples, required=RESOLUTION_SAMPLES
            )


def knapp_coefficients(
    spec: KnappSpec, grid: FourierGrid, symbol: FourierSymbol
) -> np.ndarray:
    """
    Профиль шапки `eta0(u)` на решетке частот (порядок FFT), где
    `u_1 = (xi - xi0) . n / (c0 eps)`, `u' = (xi - xi0)_perp / (c0 eps)^{1/2}`
    """
    base = spec.resolved_base_point(symbol, grid.dimension)
    radius = float(np.linalg.norm(base))
    if radius == 0:
        raise PreconditionError(
            quantity="|base_point|", value=0.0, bound=0.0, relation=">"
        )
    normal = base / radius
    check_resolution(spec, grid, normal)
    offsets = [
        component - b for component, b in zip(grid.frequencies(), base)
    ]
    along = sum(n * o for n, o in zip(normal, offsets))
    squared = sum(o ** 2 for o in offsets)
    across_squared = np.clip(squared - along ** 2, 0, None)
    scaled = np.sqrt(
        (along / spec.cap_scale) ** 2 + across_squared / spec.cap_scale
    )
    return np.broadcast_to(
        bump_profile(scaled, spec.inner, spec.outer), grid.sizes
    ).copy()


def knapp_fourier_mass(
    spec: KnappSpec, grid: FourierGrid, symbol: FourierSymbol
) -> float:
    """
    Квадрат L2 нормы ненормированного пакета
    `(2 pi)^{-d} int |eta0|^2 dxi`, посчитанный квадратурой по решетке.
    Масштабируется как `(c0 eps)^{(d+1)/2}`
    """
    coefficients = knapp_coefficients(spec, grid, symbol)
    cell = float(np.prod(grid.frequency_spacing))
    return float(
        np.sum(coefficients ** 2) * cell / (2 * math.pi) ** grid.dimension
    )


def knapp_wavepacket(
    spec: KnappSpec, grid: FourierGrid, symbol: FourierSymbol
) -> Field:
    """
    Пакет Кнаппа единичной нормы

    Фаза `exp(i xi . x_first)` переводит коэффициенты FFT
    в функцию на физической решетке, начинающейся в `x_first = -m h`,
    так что пакет сосредоточен у начала координат

    Raises:
        ResolutionError: Шапка недостаточно разрешена решеткой
    """
    coefficients = knapp_coefficients(spec, grid, symbol).astype(complex)
    phase = sum(
        component * grid.axis_coordinates(axis)[0]
        for axis, component in enumerate(grid.frequencies())
    )
    values = scipy.fft.ifftn(
        coefficients * np.exp(1j * phase), norm="ortho", workers=FFT_WORKERS
    )
    return Field(grid, values).normalized()


def knapp_mass_fraction(
    f: Field, epsilon: float, c0: float
) -> float:
    """
    Доля массы `||chi f||^2 / ||f||^2` в трубке `T_{c0 eps}`
    """
    region = RegionSpec(RegionShape.TUBE, epsilon=c0 * epsilon)
    chi = region_indicator(region, f.grid)
    return (chi * f).norm() ** 2 / f.norm() ** 2
