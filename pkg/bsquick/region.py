"""
Области `Omega`: трубки `T_{eps/M}` и шары `B_{1/eps}`
"""
from __future__ import annotations

import dataclasses
import enum
import itertools
import math
import typing as ty

import numpy as np
from scipy import special

from bsquick.exceptions import RegionError
from bsquick.grid import Field, FourierGrid


class RegionShape(str, enum.Enum):
    """Форма области"""

    TUBE = "tube"
    BALL = "ball"


def unit_ball_volume(dimension: int) -> float:
    """Объем единичного шара в `R^dimension` (`1` при `dimension = 0`)"""
    half = dimension / 2
    return math.pi**half / float(special.gamma(half + 1))


@dataclasses.dataclass(frozen=True)
class RegionSpec:
    """
    Описание области.

    Трубка: `|x . axis| < scale * M / eps`, поперечное расстояние
    до оси меньше `scale * (M / eps)^{1/2}`. Шар: `|x| < scale / eps`.
    Обе области сдвинуты на `center`. `center` и `axis` по умолчанию
    -- начало координат и `e_1` в размерности сетки

    `scale` нужен для точного перемасштабирования `x -> x / sqrt(lambda)`
    """

    shape: RegionShape
    epsilon: float
    M: float = 1.0
    center: ty.Optional[ty.Tuple[float, ...]] = None
    axis: ty.Optional[ty.Tuple[float, ...]] = None
    scale: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "shape", RegionShape(self.shape))
        if not math.isfinite(self.epsilon) or self.epsilon <= 0:
            raise RegionError(f"eps must be positive, got {self.epsilon!r}")
        if self.M < 1:
            raise RegionError(f"M must be >= 1, got {self.M!r}")
        if not math.isfinite(self.scale) or self.scale <= 0:
            raise RegionError(f"scale must be positive, got {self.scale!r}")
        if self.center is not None:
            object.__setattr__(
                self, "center", tuple(float(c) for c in self.center)
            )
        if self.axis is not None:
            axis = tuple(float(c) for c in self.axis)
            if abs(math.sqrt(sum(c * c for c in axis)) - 1) > 1e-12:
                raise RegionError(f"axis must be a unit vector, got {axis}")
            object.__setattr__(self, "axis", axis)

    @property
    def half_lengths(self) -> ty.Tuple[float, float]:
        """
        Полудлины `(вдоль оси, поперек)`.
        Для шара обе равны радиусу
        """
        if self.shape is RegionShape.BALL:
            radius = self.scale / self.epsilon
            return radius, radius
        ratio = self.M / self.epsilon
        return self.scale * ratio, self.scale * math.sqrt(ratio)

    def resolved_center(self, dimension: int) -> np.ndarray:
        if self.center is None:
            return np.zeros(dimension)
        if len(self.center) != dimension:
            raise RegionError(
                f"center has dimension {len(self.center)}, "
                f"grid has {dimension}"
            )
        return np.asarray(self.center)

    def frame(self, dimension: int) -> np.ndarray:
        """
        Ортонормированный базис (по строкам), первый вектор -- ось трубки
        """
        if self.axis is None:
            return np.eye(dimension)
        if len(self.axis) != dimension:
            raise RegionError(
                f"axis has dimension {len(self.axis)}, grid has {dimension}"
            )
        seed = np.eye(dimension)
        seed[:, 0] = self.axis
        basis, _ = np.linalg.qr(seed)
        # qr может развернуть первый столбец
        if basis[:, 0] @ np.asarray(self.axis) < 0:
            basis = -basis
        return basis.T

    def measure(self, dimension: int) -> float:
        """Объем (мера Лебега) области в `R^dimension`"""
        along, across = self.half_lengths
        if self.shape is RegionShape.BALL:
            return unit_ball_volume(dimension) * along ** dimension
        return 2 * along * unit_ball_volume(dimension - 1) * across ** (
            dimension - 1
        )

    def extent(self, dimension: int) -> np.ndarray:
        """
        Полуширина ограничивающего параллелепипеда по осям сетки
        (относительно центра)
        """
        along, across = self.half_lengths
        if self.shape is RegionShape.BALL:
            return np.full(dimension, along)
        axis = self.frame(dimension)[0]
        return np.abs(axis) * along + np.sqrt(
            np.clip(1 - axis ** 2, 0, None)
        ) * across

    def local_coordinates(
        self, points: ty.Sequence[np.ndarray], dimension: int
    ) -> ty.Tuple[np.ndarray, np.ndarray]:
        """
        Координата вдоль оси и поперечное расстояние до оси
        для точек, заданных покомпонентно (broadcasting допускается)
        """
        center = self.resolved_center(dimension)
        axis = self.frame(dimension)[0]
        shifted = [component - c for component, c in zip(points, center)]
        along = sum(a * s for a, s in zip(axis, shifted))
        squared = sum(s ** 2 for s in shifted)
        across = np.sqrt(np.clip(squared - along ** 2, 0, None))
        return along, across

    def contains(
        self, points: ty.Sequence[np.ndarray], dimension: int
    ) -> np.ndarray:
        """Маска строгого попадания точек внутрь области"""
        along, across = self.local_coordinates(points, dimension)
        half_along, half_across = self.half_lengths
        if self.shape is RegionShape.BALL:
            return np.sqrt(along ** 2 + across ** 2) < half_along
        return (np.abs(along) < half_along) & (across < half_across)

    def sample_points(self, dimension: int, per_axis: int = 8) -> np.ndarray:
        """
        Центр области и центры `per_axis^d` ячеек разбиения
        ограничивающего ящика в локальном базисе, попавшие внутрь.
        Возвращает массив формы `(k, d)`
        """
        along, across = self.half_lengths
        frame = self.frame(dimension)
        center = self.resolved_center(dimension)
        halves = [along] + [across] * (dimension - 1)
        ticks = [
            (np.arange(per_axis) + 0.5) / per_axis * 2 * half - half
            for half in halves
        ]
        points = [center]
        for local in itertools.product(*ticks):
            point = center + np.asarray(local) @ frame
            inside = self.contains(list(point), dimension)
            if bool(inside):
                points.append(point)
        return np.asarray(points)

    def describe(self) -> ty.Dict[str, ty.Any]:
        return {
            "shape": self.shape.value,
            "epsilon": self.epsilon,
            "M": self.M,
            "center": None if self.center is None else list(self.center),
            "axis": None if self.axis is None else list(self.axis),
            "scale": self.scale,
        }

    @classmethod
    def from_description(
        cls, description: ty.Dict[str, ty.Any]
    ) -> RegionSpec:
        return cls(
            shape=RegionShape(description["shape"]),
            epsilon=description["epsilon"],
            M=description["M"],
            center=description.get("center"),
            axis=description.get("axis"),
            scale=description.get("scale", 1.0),
        )


def region_indicator(region: RegionSpec, grid: FourierGrid) -> Field:
    """
    Индикатор области на узлах сетки (значения `0` и `1`)

    Raises:
        RegionError: Область не помещается строго внутрь ящика
    """
    dimension = grid.dimension
    center = np.abs(region.resolved_center(dimension))
    reach = region.extent(dimension) + center
    for axis in range(dimension):
        half_box = grid.box_lengths[axis] / 2
        if reach[axis] >= half_box:
            raise RegionError(
                f"region reaches {reach[axis]:.6g} along axis {axis}, "
                f"but the box half-length is {half_box:.6g}"
            )
    mask = region.contains(grid.coordinates(), dimension)
    values = np.broadcast_to(mask, grid.sizes).astype(float)
    return Field(grid, values)


def discrete_measure(indicator: Field) -> float:
    """`cell_volume * #{узлов в области}`"""
    nodes = float(np.count_nonzero(indicator.values))
    return indicator.grid.cell_volume * nodes
