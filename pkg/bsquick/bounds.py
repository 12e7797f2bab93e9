"""
Отношения и оценки для выкованных сертификатов:
Лаптев-Сафронов, Франк, Дэвис-Нат и дробный лапласиан.
Неизвестные константы в правых частях положены равными 1
"""
from __future__ import annotations

import cmath
import dataclasses
import enum
import math
import typing as ty

import numpy as np

from bsquick.exceptions import BoundError
from bsquick.forge import Certificate
from bsquick.grid import Field
from bsquick.region import RegionShape, RegionSpec
from bsquick.symbols import FractionalSymbol, LaplacianSymbol


@dataclasses.dataclass(frozen=True)
class BoundReport:
    """Сравнение левой и правой частей одной оценки"""

    name: str
    lhs: float
    rhs: float
    parameters: ty.Dict[str, ty.Any] = dataclasses.field(default_factory=dict)

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lhs) and math.isfinite(self.rhs)):
            raise BoundError(
                f"{self.name}: non-finite sides "
                f"lhs={self.lhs}, rhs={self.rhs}"
            )

    @property
    def ratio(self) -> float:
        if self.rhs > 0:
            return self.lhs / self.rhs
        return math.inf

    def describe(self) -> ty.Dict[str, ty.Any]:
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "ratio": self.ratio,
            "parameters": dict(self.parameters),
        }


class WeightMode(str, enum.Enum):
    EXPONENTIAL = "exponential"
    POLYNOMIAL = "polynomial"


class FractionalVariant(str, enum.Enum):
    SMALL_Q = "i"
    LARGE_Q = "ii"
    WEIGHTED = "iii"


def lq_norm(f: Field, q: float) -> float:
    """
    `(cell_volume * sum |f|^q)^{1/q}`, для `q = inf` -- максимум модуля

    Raises:
        BoundError: `q < 1`
    """
    if not q >= 1:
        raise BoundError(f"Lq norm needs q >= 1, got {q!r}")
    values = np.abs(f.values)
    if math.isinf(q):
        return float(np.max(values))
    return float((f.grid.cell_volume * np.sum(values ** q)) ** (1 / q))


def dist_to_positive_axis(z: complex) -> float:
    """Расстояние от `z` до `[0, +inf)`"""
    if z.real >= 0:
        return abs(z.imag)
    return abs(z)


def _nonzero_norm_power(certificate: Certificate, q: float) -> float:
    norm = lq_norm(certificate.potential, q)
    if norm == 0:
        raise BoundError(f"||V||_{q:g} vanishes; quotient is undefined")
    return norm ** q


def lt_rhs(certificate: Certificate, q: float) -> float:
    """`||V||_q^q` -- правая часть неравенства Лаптева-Сафронова"""
    return _nonzero_norm_power(certificate, q)


def ls_quotient(certificate: Certificate, q: float) -> float:
    """
    `|z|^{q - d/2} / ||V||_q^q`

    Raises:
        BoundError: `q <= d/2` или `V = 0`
    """
    dimension = certificate.dimension
    if not q > dimension / 2:
        raise BoundError(
            f"Laptev-Safronov quotient needs q > d/2 = {dimension / 2:g}, "
            f"got {q!r}"
        )
    return abs(certificate.z) ** (q - dimension / 2) / lt_rhs(certificate, q)


def frank_lhs(z: complex, dimension: int, q: float) -> float:
    """`dist(z, R_+)^{q - (d+1)/2} |z|^{1/2}`"""
    distance = dist_to_positive_axis(z)
    return distance ** (q - (dimension + 1) / 2) * math.sqrt(abs(z))


def frank_quotient(certificate: Certificate, q: float) -> float:
    """
    `dist(z, R_+)^{q - (d+1)/2} |z|^{1/2} / ||V||_q^q`

    Raises:
        BoundError: `q < (d+1)/2` или `V = 0`
    """
    dimension = certificate.dimension
    if not q >= (dimension + 1) / 2:
        raise BoundError(
            f"Frank quotient needs q >= (d+1)/2 = {(dimension + 1) / 2:g}, "
            f"got {q!r}"
        )
    return frank_lhs(certificate.z, dimension, q) / lt_rhs(certificate, q)


def davies_nath_F(
    potential: Field,
    E: float,
    *,
    mode: WeightMode = WeightMode.EXPONENTIAL,
    order: int = 0,
    y_set: np.ndarray,
) -> float:
    """
    `max_y int |V|^{(d+1)/2} w(|x - y|) dx` по точкам `y_set`
    с весом `exp(-E r)` или `(1 + E r)^{-order}`. Расстояния
    непериодические, интеграл берется по носителю `V`

    Args:
        potential: Потенциал `V`
        E: Скорость затухания веса, `E >= 0`
        mode: Вид веса
        order: Степень `N` для полиномиального веса
        y_set: Массив точек формы `(k, d)`

    Raises:
        BoundError: `E < 0`, пустой `y_set` или `order < 0`
    """
    if not E >= 0:
        raise BoundError(f"decay rate E must be >= 0, got {E!r}")
    if order < 0:
        raise BoundError(f"polynomial order must be >= 0, got {order!r}")
    y_set = np.atleast_2d(np.asarray(y_set, dtype=float))
    if y_set.size == 0:
        raise BoundError("y_set is empty")
    grid = potential.grid
    if y_set.shape[1] != grid.dimension:
        raise BoundError(
            f"y_set points have dimension {y_set.shape[1]}, "
            f"grid has {grid.dimension}"
        )
    mode = WeightMode(mode)
    support = np.nonzero(potential.values)
    weights = (
        np.abs(potential.values[support]) ** ((grid.dimension + 1) / 2)
        * grid.cell_volume
    )
    if weights.size == 0:
        return 0.0
    points = np.stack(
        [
            grid.axis_coordinates(axis)[support[axis]]
            for axis in range(grid.dimension)
        ],
        axis=1,
    )
    best = 0.0
    for y in y_set:
        distances = np.linalg.norm(points - y, axis=1)
        if mode is WeightMode.EXPONENTIAL:
            kernel = np.exp(-E * distances)
        else:
            kernel = (1 + E * distances) ** (-float(order))
        best = max(best, float(np.sum(weights * kernel)))
    return best


def default_y_set(
    region: RegionSpec, dimension: int, *, full_grid: bool = False,
    potential: ty.Optional[Field] = None,
) -> np.ndarray:
    """
    Центр области и центры `8^d` ячеек ее разбиения. С `full_grid`
    -- все узлы носителя `potential`
    """
    if full_grid:
        if potential is None:
            raise BoundError("full_grid y_set needs the potential")
        support = np.nonzero(potential.values)
        return np.stack(
            [
                potential.grid.axis_coordinates(axis)[support[axis]]
                for axis in range(dimension)
            ],
            axis=1,
        )
    return region.sample_points(dimension)


def imag_sqrt(z: complex) -> float:
    """`Im sqrt(z)` на главной ветви"""
    return cmath.sqrt(z).imag


def dn_quotient(
    certificate: Certificate,
    L: float,
    *,
    y_set: ty.Optional[np.ndarray] = None,
) -> float:
    """
    `|z|^{1/2} / F_V(L Im sqrt(z))`

    Raises:
        BoundError: `L < 1` или `F_V = 0`
    """
    if not L >= 1:
        raise BoundError(f"Davies-Nath quotient needs L >= 1, got {L!r}")
    if y_set is None:
        y_set = default_y_set(certificate.region, certificate.dimension)
    value = davies_nath_F(
        certificate.potential,
        L * imag_sqrt(certificate.z),
        y_set=y_set,
    )
    if value == 0:
        raise BoundError("F_V vanishes; Davies-Nath quotient is undefined")
    return math.sqrt(abs(certificate.z)) / value


def q_s(dimension: int, s: float) -> float:
    """
    Нижний допустимый показатель `q` для `|xi|^s`: `d/s` при `s < d`,
    `1` при `s > d`. При `s = d` допустимы все `q > 1`,
    и возвращается `1` (граница не включается)
    """
    if s <= 0:
        raise BoundError(f"s must be positive, got {s!r}")
    if s < dimension:
        return dimension / s
    return 1.0


def _check_admissible(dimension: int, s: float, q: float) -> None:
    threshold = q_s(dimension, s)
    if s == dimension:
        if not q > 1:
            raise BoundError(
                f"q must be > 1 when s = d = {dimension}, got {q!r}"
            )
    elif q < threshold:
        raise BoundError(
            f"q must be >= q_s = {threshold:g} for s = {s:g}, "
            f"d = {dimension}, got {q!r}"
        )


def _fractional_exponent(certificate: Certificate) -> float:
    symbol = certificate.symbol
    if isinstance(symbol, FractionalSymbol):
        return symbol.exponent
    if isinstance(symbol, LaplacianSymbol):
        return 2.0
    raise BoundError(
        f"fractional check needs |xi|^s or the Laplacian, got {symbol!r}"
    )


def fractional_check(
    certificate: Certificate,
    q: float,
    variant: ty.Union[FractionalVariant, str],
    N: int = 4,
    *,
    y_set: ty.Optional[np.ndarray] = None,
) -> BoundReport:
    """
    Левая и правая части оценок для `|xi|^s + V`:

    * `i`: `|z|^{q - d/s}` против `||V||_q^q` при `q <= (d+1)/2`
    * `ii`: `dist(z, R_+)^{q - (d+1)/2} |z|^{(d+1)/2 - d/s}`
      против `||V||_q^q` при `q > (d+1)/2`
    * `iii`: `|z|^{(d+1)/2 - d/s}` против `F_V` с весом
      `(1 + |Im z| r)^{-N}`

    Raises:
        BoundError: `q < q_s`, `q` вне диапазона варианта
            или символ не степенной
    """
    variant = FractionalVariant(variant)
    s = _fractional_exponent(certificate)
    dimension = certificate.dimension
    _check_admissible(dimension, s, q)
    z = certificate.z
    critical = (dimension + 1) / 2
    parameters = {"q": q, "s": s, "d": dimension, "variant": variant.value}

    if variant is FractionalVariant.SMALL_Q:
        if q > critical:
            raise BoundError(f"variant i needs q <= (d+1)/2, got {q!r}")
        lhs = abs(z) ** (q - dimension / s)
        rhs = lt_rhs(certificate, q)
    elif variant is FractionalVariant.LARGE_Q:
        if not q > critical:
            raise BoundError(f"variant ii needs q > (d+1)/2, got {q!r}")
        lhs = dist_to_positive_axis(z) ** (q - critical) * abs(z) ** (
            critical - dimension / s
        )
        rhs = lt_rhs(certificate, q)
    else:
        if y_set is None:
            y_set = default_y_set(certificate.region, dimension)
        lhs = abs(z) ** (critical - dimension / s)
        rhs = davies_nath_F(
            certificate.potential,
            abs(z.imag),
            mode=WeightMode.POLYNOMIAL,
            order=N,
            y_set=y_set,
        )
        parameters["N"] = N
    return BoundReport(
        name=f"fractional_{variant.value}",
        lhs=lhs,
        rhs=rhs,
        parameters=parameters,
    )


def expected_norm_exponent(
    shape: ty.Union[RegionShape, str], dimension: int, q: float
) -> float:
    """
    Ожидаемый показатель `||V_eps||_q ~ eps^p` для выкованного семейства:
    `1 - (d+1)/(2q)` на трубках и `1 - d/q` на шарах
    """
    shape = RegionShape(shape)
    if shape is RegionShape.TUBE:
        return 1 - (dimension + 1) / (2 * q)
    return 1 - dimension / q
