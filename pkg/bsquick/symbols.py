"""
Символы `h0`: лапласиан, дробный лапласиан, табличный символ
и символ перемасштабированной трубки
"""
from __future__ import annotations

import hashlib
import math
import typing as ty

import numpy as np

from bsquick.bases.symbol import DispersionSymbol, FourierSymbol
from bsquick.exceptions import GridMismatchError, SymbolError
from bsquick.grid import FourierGrid


class LaplacianSymbol(DispersionSymbol):
    """`h0(xi) = |xi|^2`"""

    @property
    def homogeneity(self) -> float:
        return 2.0

    def evaluate(self, xi: ty.Sequence[float]) -> float:
        return float(np.sum(np.square(np.asarray(xi, dtype=float))))

    def on_grid(self, grid: FourierGrid) -> np.ndarray:
        return grid.frequency_norm_squared()

    def shell_radius(self, energy: float) -> float:
        if energy <= 0:
            raise SymbolError(
                f"energy must be positive for the Laplacian, got {energy!r}"
            )
        return math.sqrt(energy)

    @property
    def cache_key(self) -> ty.Hashable:
        return ("laplacian",)

    def descriptor(self) -> ty.Dict[str, ty.Any]:
        return {"kind": "laplacian"}


class FractionalSymbol(DispersionSymbol):
    """`h0(xi) = |xi|^s` с `s > 0`"""

    def __init__(self, exponent: float) -> None:
        if not math.isfinite(exponent) or exponent <= 0:
            raise SymbolError(
                f"fractional exponent must be positive, got {exponent!r}"
            )
        self.exponent = float(exponent)

    @property
    def homogeneity(self) -> float:
        return self.exponent

    @property
    def smooth_at_origin(self) -> bool:
        """`|xi|^s` гладок в нуле только для четных целых `s`"""
        return self.exponent.is_integer() and int(self.exponent) % 2 == 0

    def evaluate(self, xi: ty.Sequence[float]) -> float:
        radius = math.sqrt(
            float(np.sum(np.square(np.asarray(xi, dtype=float))))
        )
        return radius ** self.exponent

    def on_grid(self, grid: FourierGrid) -> np.ndarray:
        return grid.frequency_norm_squared() ** (self.exponent / 2)

    def shell_radius(self, energy: float) -> float:
        if energy <= 0:
            raise SymbolError(
                f"energy must be positive for |xi|^s, got {energy!r}"
            )
        return energy ** (1 / self.exponent)

    @property
    def cache_key(self) -> ty.Hashable:
        return ("fractional", self.exponent)

    def descriptor(self) -> ty.Dict[str, ty.Any]:
        return {"kind": "fractional", "s": self.exponent}


class TabulatedSymbol(DispersionSymbol):
    """
    Символ, заданный значениями на решетке частот конкретной сетки
    (в порядке FFT). Значения должны быть вещественными и четными;
    остаток несимметричности уровня ошибок округления усредняется
    """

    def __init__(self, grid: FourierGrid, values: np.ndarray) -> None:
        values = np.asarray(values)
        if values.shape != grid.sizes:
            raise SymbolError(
                f"table shape {values.shape} doesn't match grid {grid.sizes}"
            )
        if np.iscomplexobj(values):
            if np.any(values.imag):
                raise SymbolError("tabulated symbol must be real")
            values = values.real
        values = values.astype(float)
        if not np.all(np.isfinite(values)):
            raise SymbolError("tabulated symbol has non-finite values")
        reflected = reflect_frequencies(values)
        scale = max(float(np.max(np.abs(values))), 1.0)
        if float(np.max(np.abs(values - reflected))) > 1e-12 * scale:
            raise SymbolError("tabulated symbol must be even: h(-xi) = h(xi)")
        self.grid = grid
        self.values = (values + reflected) / 2
        self.values.setflags(write=False)
        self._digest = hashlib.sha256(
            np.ascontiguousarray(self.values).tobytes()
        ).hexdigest()

    @property
    def dimension_hint(self) -> int:
        return self.grid.dimension

    def _lattice_index(self, xi: ty.Sequence[float]) -> ty.Tuple[int, ...]:
        xi = np.asarray(xi, dtype=float)
        if xi.shape != (self.grid.dimension,):
            raise SymbolError(
                f"expected a point of dimension {self.grid.dimension}"
            )
        index = []
        for axis, component in enumerate(xi):
            size = self.grid.sizes[axis]
            k = component * self.grid.box_lengths[axis] / (2 * math.pi)
            rounded = round(k)
            if abs(k - rounded) > 1e-9 or abs(rounded) > (size - 1) // 2:
                raise SymbolError(
                    f"point {tuple(xi)} is not on the tabulated lattice"
                )
            index.append(rounded % size)
        return tuple(index)

    def evaluate(self, xi: ty.Sequence[float]) -> float:
        return float(self.values[self._lattice_index(xi)])

    def on_grid(self, grid: FourierGrid) -> np.ndarray:
        if grid != self.grid:
            raise GridMismatchError(
                operation="TabulatedSymbol.on_grid",
                left=self.grid,
                right=grid,
            )
        return self.values

    def shell_radius(self, energy: float) -> float:
        """
        Ближайшая к уровню `energy` частота на положительной полуоси `e_1`
        """
        frequencies = self.grid.axis_frequencies(0)
        index = [0] * self.grid.dimension
        best_radius, best_gap = None, math.inf
        for position, frequency in enumerate(frequencies):
            if frequency <= 0:
                continue
            index[0] = position
            gap = abs(self.values[tuple(index)] - energy)
            if gap < best_gap:
                best_radius, best_gap = float(frequency), gap
        if best_radius is None:
            raise SymbolError("lattice has no positive frequencies along e_1")
        return best_radius

    @property
    def cache_key(self) -> ty.Hashable:
        return ("tabulated", self.grid, self.values.shape, self._digest)

    def descriptor(self) -> ty.Dict[str, ty.Any]:
        return {"kind": "tabulated", **self.grid.describe()}


class RescaledTubeSymbol(FourierSymbol):
    """
    `h'(eta) = 2 eta_1 + |eta'|^2 + eps eta_1^2` --
    символ лапласиана после сопряжения с `exp(i x_1)`
    и перехода к единичной трубке. При `eps = 0` это
    предельный (параболический) символ. Не является четным
    """

    def __init__(self, epsilon: float) -> None:
        if not math.isfinite(epsilon) or epsilon < 0:
            raise SymbolError(
                f"rescaling parameter must be >= 0, got {epsilon!r}"
            )
        self.epsilon = float(epsilon)

    def evaluate(self, xi: ty.Sequence[float]) -> float:
        xi = np.asarray(xi, dtype=float)
        return float(
            2 * xi[0] + np.sum(np.square(xi[1:])) + self.epsilon * xi[0] ** 2
        )

    def on_grid(self, grid: FourierGrid) -> np.ndarray:
        frequencies = grid.frequencies()
        values = 2 * frequencies[0] + self.epsilon * frequencies[0] ** 2
        for component in frequencies[1:]:
            values = values + component ** 2
        return np.broadcast_to(values, grid.sizes).copy()

    @property
    def cache_key(self) -> ty.Hashable:
        return ("rescaled-tube", self.epsilon)

    def descriptor(self) -> ty.Dict[str, ty.Any]:
        return {"kind": "rescaled-tube", "epsilon": self.epsilon}


def reflect_frequencies(values: np.ndarray) -> np.ndarray:
    """
    Массив в порядке FFT, вычисленный в `-xi`:
    индекс `k` переходит в `-k mod N` по каждой оси
    """
    return np.roll(np.flip(values), 1, axis=tuple(range(values.ndim)))


def eval_symbol(
    symbol: FourierSymbol, xi: ty.Sequence[float]
) -> float:
    """
    Значение символа в точке. Обертка над `symbol.evaluate`,
    проверяющая, что результат конечен
    """
    value = symbol.evaluate(xi)
    if not math.isfinite(value):
        raise SymbolError(f"{symbol!r} is not finite at {tuple(xi)}")
    return value


def symbol_from_descriptor(
    descriptor: ty.Dict[str, ty.Any],
    *,
    table: ty.Optional[np.ndarray] = None,
    grid: ty.Optional[FourierGrid] = None,
) -> FourierSymbol:
    """
    Восстанавливает символ по описанию из `descriptor()`.
    Табличному символу нужны `table` и `grid`
    """
    kind = descriptor.get("kind")
    if kind == "laplacian":
        return LaplacianSymbol()
    if kind == "fractional":
        return FractionalSymbol(descriptor["s"])
    if kind == "rescaled-tube":
        return RescaledTubeSymbol(descriptor["epsilon"])
    if kind == "tabulated":
        if table is None or grid is None:
            raise SymbolError("tabulated symbol needs its table and grid")
        return TabulatedSymbol(grid, table)
    raise SymbolError(f"unknown symbol kind {kind!r}")
