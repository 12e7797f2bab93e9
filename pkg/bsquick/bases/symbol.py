from __future__ import annotations

import abc
import typing as ty

import numpy as np
from scipy import optimize

from bsquick.exceptions import SymbolError

if ty.TYPE_CHECKING:  # pragma: no cover
    from bsquick.grid import FourierGrid


class FourierSymbol(abc.ABC):
    """
    Вещественная функция `h(xi)`, задающая оператор
    Фурье-умножения `h(D)`. Имплементации должны уметь
    вычисляться в произвольной точке и сразу на всей
    решетке частот сетки (в порядке FFT)
    """

    even: ty.ClassVar[bool] = False
    """
    `h(-xi) == h(xi)`. Для четных символов мультипликаторы
    сохраняют вещественность полей
    """

    @abc.abstractmethod
    def evaluate(self, xi: ty.Sequence[float]) -> float:
        """
        Значение символа в точке

        Args:
            xi: Точка пространства частот длины `d`

        Returns:
            Вещественное число `h(xi)`
        """

    @abc.abstractmethod
    def on_grid(self, grid: FourierGrid) -> np.ndarray:
        """
        Значения символа на решетке частот сетки

        Args:
            grid: Сетка

        Returns:
            Вещественный массив формы `grid.sizes` в порядке FFT
        """

    @property
    @abc.abstractmethod
    def cache_key(self) -> ty.Hashable:
        """Ключ, по которому кешируются мультипликаторы символа"""

    @abc.abstractmethod
    def descriptor(self) -> ty.Dict[str, ty.Any]:
        """Описание символа для отчетов и контейнеров"""

    def __repr__(self) -> str:
        params = ", ".join(
            f"{key}={value!r}"
            for key, value in self.descriptor().items()
            if key != "kind"
        )
        return f"<bsquick.{self.__class__.__name__}({params})>"


class DispersionSymbol(FourierSymbol):
    """
    Четный символ с изоэнергетическими поверхностями.
    Поверх `FourierSymbol` умеет искать радиус уровня `h = lambda`
    в направлении первой оси
    """

    even = True

    @property
    def homogeneity(self) -> ty.Optional[float]:
        """
        Степень однородности `p` (`h(t xi) = t^p h(xi)`),
        если символ однороден, иначе `None`
        """
        return None

    def shell_radius(self, energy: float) -> float:
        """
        Радиус `r > 0` такой, что `h(r e_1) = energy`

        Raises:
            SymbolError: Уровень не пересекает луч `t e_1`
        """
        dimension = self.dimension_hint

        def along_axis(radius: float) -> float:
            point = np.zeros(dimension)
            point[0] = radius
            return self.evaluate(point) - energy

        if along_axis(0.0) >= 0:
            raise SymbolError(
                f"energy {energy!r} is not above h(0) for {self!r}"
            )
        upper = 1.0
        for _ in range(64):
            if along_axis(upper) > 0:
                break
            upper *= 2
        else:
            raise SymbolError(
                f"energy {energy!r} is not reached along e_1 by {self!r}"
            )
        return float(optimize.brentq(along_axis, 0.0, upper, xtol=1e-14))

    @property
    def dimension_hint(self) -> int:
        """Размерность, используемая для поиска радиуса уровня"""
        return 1
