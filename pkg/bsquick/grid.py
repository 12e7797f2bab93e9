"""
Периодические сетки и поля на них
"""
from __future__ import annotations

import dataclasses
import math
import threading
import typing as ty

import cachetools
import cachetools.keys
import numpy as np
from loguru import logger

from bsquick.exceptions import GridError, GridMismatchError

_axes_cache: cachetools.LRUCache = cachetools.LRUCache(maxsize=64)


@dataclasses.dataclass(frozen=True)
class FourierGrid:
    """
    Равномерная периодическая сетка в ящике
    `box_lengths[0] x ... x box_lengths[d - 1]` с нечетным
    числом узлов по каждой оси. Нечетность гарантирует, что
    решетка частот симметрична относительно `xi -> -xi`
    без непарной моды Найквиста.

    Физическая решетка по оси `j` -- это точки
    `(n - m) * h`, где `m = (N - 1) / 2`, `h = L / N`,
    то есть она тоже симметрична и содержит начало координат.
    Частоты хранятся в порядке FFT: `0, 1, ..., m, -m, ..., -1`
    (умноженные на `2 pi / L`).
    """

    box_lengths: ty.Tuple[float, ...]
    sizes: ty.Tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self,
            "box_lengths",
            tuple(float(length) for length in self.box_lengths),
        )
        object.__setattr__(
            self, "sizes", tuple(int(size) for size in self.sizes)
        )
        if not self.sizes or len(self.sizes) != len(self.box_lengths):
            raise GridError(
                "box_lengths and sizes must be nonempty and of equal length"
            )
        for axis, (length, size) in enumerate(
            zip(self.box_lengths, self.sizes)
        ):
            if not math.isfinite(length) or length <= 0:
                raise GridError(
                    f"non-positive box length {length!r} along axis {axis}"
                )
            if size % 2 == 0:
                raise GridError(
                    f"even grid size {size} along axis {axis}: sizes "
                    "must be odd so the frequency lattice is symmetric "
                    "under xi -> -xi"
                )
            if size < 3:
                raise GridError(
                    f"grid size {size} along axis {axis} is smaller than 3"
                )

    @property
    def dimension(self) -> int:
        """Размерность пространства"""
        return len(self.sizes)

    @property
    def shape(self) -> ty.Tuple[int, ...]:
        return self.sizes

    @property
    def size(self) -> int:
        """Общее число узлов"""
        return int(np.prod(self.sizes))

    @property
    def spacing(self) -> ty.Tuple[float, ...]:
        """Шаг физической решетки по каждой оси"""
        return tuple(
            length / size
            for length, size in zip(self.box_lengths, self.sizes)
        )

    @property
    def frequency_spacing(self) -> ty.Tuple[float, ...]:
        """Шаг решетки частот по каждой оси"""
        return tuple(2 * math.pi / length for length in self.box_lengths)

    @property
    def cell_volume(self) -> float:
        """Объем ячейки: произведение `L_j / N_j`"""
        return float(np.prod(self.spacing))

    @property
    def volume(self) -> float:
        """Объем всего ящика"""
        return float(np.prod(self.box_lengths))

    def axis_indices(self, axis: int) -> np.ndarray:
        """
        Целые номера частот `k` по оси в порядке FFT.
        Частота равна `2 pi k / L`
        """
        return _axis_arrays(self, axis)[0]

    def axis_frequencies(self, axis: int) -> np.ndarray:
        """Частоты по оси в порядке FFT"""
        return _axis_arrays(self, axis)[1]

    def axis_coordinates(self, axis: int) -> np.ndarray:
        """Физические координаты по оси, от `-m h` до `m h`"""
        return _axis_arrays(self, axis)[2]

    def frequencies(self) -> ty.List[np.ndarray]:
        """
        Частоты по всем осям в виде массивов,
        согласованных для broadcasting (как `np.ix_`)
        """
        return [
            _broadcastable(self.axis_frequencies(axis), axis, self.dimension)
            for axis in range(self.dimension)
        ]

    def coordinates(self) -> ty.List[np.ndarray]:
        """Физические координаты, согласованные для broadcasting"""
        return [
            _broadcastable(self.axis_coordinates(axis), axis, self.dimension)
            for axis in range(self.dimension)
        ]

    def wrapped_coordinates(self) -> ty.List[np.ndarray]:
        """
        Знаковые смещения `n h` в порядке FFT (узел 0 -- начало координат).
        Используются для ядер свертки, полученных обратным FFT
        """
        return [
            _broadcastable(
                self.axis_indices(axis) * self.spacing[axis],
                axis,
                self.dimension,
            )
            for axis in range(self.dimension)
        ]

    def frequency_norm_squared(self) -> np.ndarray:
        """`|xi|^2` на всей решетке частот"""
        total = np.zeros(self.sizes)
        for component in self.frequencies():
            total = total + component ** 2
        return total

    def scaled(
        self, factors: ty.Union[float, ty.Sequence[float]]
    ) -> FourierGrid:
        """
        Та же решетка узлов, но ящик растянут в `factors` раз
        (одно число -- одинаково по всем осям)
        """
        if isinstance(factors, (int, float)):
            factors = [float(factors)] * self.dimension
        if len(factors) != self.dimension:
            raise GridError("one scale factor per axis is required")
        return FourierGrid(
            box_lengths=tuple(
                length * factor
                for length, factor in zip(self.box_lengths, factors)
            ),
            sizes=self.sizes,
        )

    def describe(self) -> ty.Dict[str, ty.Any]:
        """Метаданные сетки для отчетов и контейнеров"""
        return {
            "box_lengths": list(self.box_lengths),
            "sizes": list(self.sizes),
        }

    def __repr__(self) -> str:
        lengths = "x".join(f"{length:.4g}" for length in self.box_lengths)
        sizes = "x".join(str(size) for size in self.sizes)
        return f"<bsquick.FourierGrid box={lengths} sizes={sizes}>"


@cachetools.cached(
    cache=_axes_cache,
    key=lambda grid, axis: cachetools.keys.hashkey(grid, axis),
    lock=threading.Lock(),
)
def _axis_arrays(
    grid: FourierGrid, axis: int
) -> ty.Tuple[np.ndarray, np.ndarray, np.ndarray]:
    size = grid.sizes[axis]
    length = grid.box_lengths[axis]
    half = (size - 1) // 2
    centered = np.arange(-half, half + 1)
    indices = np.fft.ifftshift(centered)
    # 2 pi k / L с целыми k: значения при k и -k отличаются ровно знаком
    frequencies = 2 * np.pi * indices / length
    coordinates = centered * (length / size)
    for array in (indices, frequencies, coordinates):
        array.setflags(write=False)
    return indices, frequencies, coordinates


def _broadcastable(
    array: np.ndarray, axis: int, dimension: int
) -> np.ndarray:
    shape = [1] * dimension
    shape[axis] = array.size
    return array.reshape(shape)


def build_grid(
    dimension: int,
    box_lengths: ty.Sequence[float],
    sizes: ty.Sequence[int],
) -> FourierGrid:
    """
    Создает сетку и проверяет ее инварианты

    Args:
        dimension: Размерность `d >= 1`
        box_lengths: Период ящика по каждой оси
        sizes: Нечетное число узлов (>= 3) по каждой оси

    Returns:
        Новую сетку

    Raises:
        GridError: Четный размер, неположительная длина или
            несовпадение числа осей с `dimension`
    """
    if dimension < 1:
        raise GridError(f"dimension must be >= 1, got {dimension}")
    if len(box_lengths) != dimension or len(sizes) != dimension:
        raise GridError(
            f"expected {dimension} box lengths and sizes, "
            f"got {len(box_lengths)} and {len(sizes)}"
        )
    grid = FourierGrid(box_lengths=tuple(box_lengths), sizes=tuple(sizes))
    logger.debug("Built grid {grid}", grid=grid)
    return grid


def check_same_grid(operation: str, *items: ty.Any) -> FourierGrid:
    """
    Проверяет, что все объекты (поля, мультипликаторы)
    заданы на одной сетке, и возвращает эту сетку
    """
    grid = items[0].grid
    for item in items[1:]:
        if item.grid != grid:
            raise GridMismatchError(
                operation=operation, left=grid, right=item.grid
            )
    return grid


@dataclasses.dataclass(frozen=True, eq=False)
class Field:
    """
    Комплекснозначная функция на узлах физической решетки.
    Значения хранятся массивом формы `grid.sizes` (row-major)
    """

    grid: FourierGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.complex128)
        if values.shape != self.grid.sizes:
            if values.size != self.grid.size:
                raise GridError(
                    f"field has {values.size} values, grid needs "
                    f"{self.grid.size}"
                )
            values = values.reshape(self.grid.sizes)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: FourierGrid) -> Field:
        return cls(grid, np.zeros(grid.sizes, dtype=np.complex128))

    @classmethod
    def constant(cls, grid: FourierGrid, value: complex) -> Field:
        return cls(grid, np.full(grid.sizes, value, dtype=np.complex128))

    @classmethod
    def random(
        cls, grid: FourierGrid, *, seed: int = 0, real: bool = True
    ) -> Field:
        """
        Случайное поле с фиксированным зерном, чтобы
        повторные запуски давали одинаковые данные
        """
        rng = np.random.default_rng(seed)
        values = rng.standard_normal(grid.sizes)
        if not real:
            values = values + 1j * rng.standard_normal(grid.sizes)
        return cls(grid, values)

    @classmethod
    def plane_wave(
        cls, grid: FourierGrid, indices: ty.Sequence[int]
    ) -> Field:
        """
        Решеточная мода `exp(i xi . x)` с частотой `xi_j = 2 pi k_j / L_j`
        """
        phase = np.zeros(grid.sizes)
        for axis, (index, coordinate) in enumerate(
            zip(indices, grid.coordinates())
        ):
            phase = phase + (
                2 * np.pi * index / grid.box_lengths[axis]
            ) * coordinate
        return cls(grid, np.exp(1j * phase))

    @property
    def flat(self) -> np.ndarray:
        """Значения в виде плоской последовательности (row-major)"""
        return self.values.ravel()

    @property
    def is_real(self) -> bool:
        return not np.any(self.values.imag)

    def norm(self) -> float:
        """L2 норма с весом `cell_volume`"""
        return math.sqrt(field_inner(self, self).real)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def support_indicator(self) -> Field:
        """`1` в узлах, где поле не равно нулю, `0` в остальных"""
        return Field(self.grid, (self.values != 0).astype(float))

    def normalized(self) -> Field:
        norm = self.norm()
        if norm == 0:
            raise GridError("can't normalize a zero field")
        return Field(self.grid, self.values / norm)

    def real_part(self) -> Field:
        return Field(self.grid, self.values.real)

    def imag_part(self) -> Field:
        return Field(self.grid, self.values.imag)

    def conj(self) -> Field:
        return Field(self.grid, self.values.conj())

    def with_values(self, values: np.ndarray) -> Field:
        return Field(self.grid, values)

    def _other_values(self, other: ty.Any, operation: str) -> ty.Any:
        if isinstance(other, Field):
            check_same_grid(operation, self, other)
            return other.values
        return other

    def __add__(self, other: ty.Any) -> Field:
        return Field(self.grid, self.values + self._other_values(other, "+"))

    __radd__ = __add__

    def __sub__(self, other: ty.Any) -> Field:
        return Field(self.grid, self.values - self._other_values(other, "-"))

    def __rsub__(self, other: ty.Any) -> Field:
        return Field(self.grid, self._other_values(other, "-") - self.values)

    def __mul__(self, other: ty.Any) -> Field:
        return Field(self.grid, self.values * self._other_values(other, "*"))

    __rmul__ = __mul__

    def __truediv__(self, other: ty.Any) -> Field:
        return Field(self.grid, self.values / self._other_values(other, "/"))

    def __neg__(self) -> Field:
        return Field(self.grid, -self.values)

    def __repr__(self) -> str:
        return f"<bsquick.Field grid={self.grid!r} norm={self.norm():.6g}>"


def field_inner(f: Field, g: Field) -> complex:
    """
    Скалярное произведение `cell_volume * sum(conj(f) * g)`,
    сопряженно-линейное по первому аргументу
    """
    check_same_grid("field_inner", f, g)
    return complex(f.grid.cell_volume * np.vdot(f.values, g.values))
