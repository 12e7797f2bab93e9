"""
Конфигурация свипов: плоский JSON с типизированными ключами
и политика построения сеток
"""
from __future__ import annotations

import dataclasses
import math
import pathlib
import typing as ty

import scipy.fft
from loguru import logger

from bsquick.bases.symbol import DispersionSymbol
from bsquick.exceptions import ConfigError
from bsquick.grid import FourierGrid, build_grid
from bsquick.json_parsers import json_parser_policy
from bsquick.knapp import RESOLUTION_SAMPLES
from bsquick.region import RegionShape, RegionSpec
from bsquick.symbols import FractionalSymbol, LaplacianSymbol

M_RULES = ("fixed", "log")
SYMBOLS = ("laplacian", "fractional")


def odd_fast_size(minimum: float) -> int:
    """Наименьший нечетный размер `>= minimum`, удобный для FFT"""
    size = max(3, int(math.ceil(minimum)))
    if size % 2 == 0:
        size += 1
    while scipy.fft.next_fast_len(size) != size:
        size += 2
    return size


ALIGNMENT_TOL = 0.05
"""
Допустимое смещение границы трубки от середины между узлами
(в долях шага) по оси `e_1`
"""


@dataclasses.dataclass(frozen=True)
class GridPolicy:
    """
    Как выбирать сетку под область и шапку Кнаппа

    Ящик по каждой оси -- `margin` удвоенных полудлин области, но не
    меньше, чем нужно, чтобы на размер шапки (`c0 eps` вдоль оси,
    `(c0 eps)^{1/2}` поперек) пришлось `samples_per_cap` частот.
    Шаг узлов не больше `pi / (reach r)`, где `r` -- радиус уровня, и
    не больше полуширины области, деленной на `nodes_per_half`;
    `grid_scale` делит оба ограничения.

    Шаг подбирается так, чтобы граница трубки проходила посередине
    между узлами: тогда дискретная мера трубки равна настоящей.
    Поперек это точно, вдоль `e_1` -- с точностью `ALIGNMENT_TOL`,
    потому что длина ящика по первой оси еще и кратна `2 pi / r`
    (точка `r e_1` лежит на решетке)
    """

    margin: float = 4.0
    samples_per_cap: int = RESOLUTION_SAMPLES
    reach: float = 4.0
    nodes_per_half: float = 4.0
    grid_scale: float = 1.0
    kernel_reach: float = 2.5
    knapp_reach: float = 1.6

    def __post_init__(self) -> None:
        if self.margin < 1:
            raise ConfigError("margin must be >= 1", key="margin")
        if self.samples_per_cap < RESOLUTION_SAMPLES:
            raise ConfigError(
                f"resolution rule needs at least {RESOLUTION_SAMPLES} "
                "samples per cap",
                key="samples_per_cap",
            )
        if self.reach <= 1 or self.knapp_reach <= 1:
            raise ConfigError("reach must exceed 1", key="frequency_reach")
        if self.nodes_per_half < 1:
            raise ConfigError(
                "nodes_per_half must be >= 1", key="nodes_per_half"
            )
        if self.grid_scale < 1:
            raise ConfigError("grid_scale must be >= 1", key="grid_scale")

    def _sizes(
        self, box_lengths: ty.Sequence[float], top_frequency: float
    ) -> ty.List[int]:
        return [
            odd_fast_size(self.grid_scale * length * top_frequency / math.pi)
            for length in box_lengths
        ]

    def grid_for(
        self,
        region: RegionSpec,
        symbol: DispersionSymbol,
        energy: float,
        c0: float,
        dimension: int,
        *,
        reach: ty.Optional[float] = None,
    ) -> FourierGrid:
        """Сетка под область (ось `e_1`) и шапку `c0 eps`"""
        along, across = region.half_lengths
        cap = c0 * region.epsilon
        widths = [cap] + [math.sqrt(cap)] * (dimension - 1)
        halves = [along] + [across] * (dimension - 1)
        radius = symbol.shell_radius(energy)
        nyquist_step = math.pi / ((reach or self.reach) * radius)
        box_lengths, sizes = [], []
        for axis, (half, width) in enumerate(zip(halves, widths)):
            shortest = max(
                2 * self.margin * half,
                self.samples_per_cap * 2 * math.pi / width,
            )
            step = min(nyquist_step, half / self.nodes_per_half)
            step /= self.grid_scale
            if axis == 0:
                length, size = _periodic_axis(
                    half, shortest, step, 2 * math.pi / radius
                )
            else:
                length, size = _aligned_axis(half, shortest, step)
            box_lengths.append(length)
            sizes.append(size)
        return build_grid(dimension, box_lengths, sizes)

    def knapp_grid(
        self,
        region: RegionSpec,
        symbol: DispersionSymbol,
        energy: float,
        c0: float,
        dimension: int,
    ) -> FourierGrid:
        """
        Сетка для оценки Кнаппа: как `grid_for`, но с `knapp_reach`.
        Пакет живет у поверхности уровня, а трубки при больших `M`
        длинные, так что частоты берутся с меньшим запасом
        """
        return self.grid_for(
            region, symbol, energy, c0, dimension, reach=self.knapp_reach
        )

    def kernel_grid(
        self,
        epsilon: float,
        symbol: DispersionSymbol,
        energy: float,
        outer: float,
        dimension: int,
    ) -> FourierGrid:
        """
        Изотропная сетка для ядра резольвенты. Ящик -- `margin` диаметров
        шара радиуса `2/eps`, так что периодические образы ядра
        подавлены множителем `exp(-c eps |x|)`. Частоты доходят до
        `kernel_reach` радиусов внешнего края срезки
        """
        length = 2 * self.margin * 2 / epsilon
        top = self.kernel_reach * symbol.shell_radius(energy + outer)
        box_lengths = [length] * dimension
        sizes = self._sizes(box_lengths, top)
        return build_grid(dimension, box_lengths, sizes)


def _aligned_axis(
    half: float, shortest: float, step: float
) -> ty.Tuple[float, int]:
    cells = math.ceil(half / step - 0.5)
    step = half / (cells + 0.5)
    size = odd_fast_size(shortest / step)
    return size * step, size


def _periodic_axis(
    half: float, shortest: float, step: float, period: float
) -> ty.Tuple[float, int]:
    """
    Длина, кратная `period`, и нечетный размер с шагом не больше
    `step`, при которых `half / шаг` ближе всего к полуцелому
    """
    first = odd_fast_size(shortest / step)
    best: ty.Optional[ty.Tuple[float, float, int]] = None
    size = first
    while size <= 2 * first:
        low = math.ceil(shortest / period)
        high = math.floor(step * size / period)
        for periods in range(low, high + 1):
            length = periods * period
            defect = abs((half * size / length) % 1 - 0.5)
            if best is None or defect < best[0]:
                best = (defect, length, size)
            if defect <= ALIGNMENT_TOL:
                return length, size
        size = odd_fast_size(size + 2)
    assert best is not None
    return best[1], best[2]


_LIST_FIELDS = ("epsilons", "q_values", "l_values")


@dataclasses.dataclass(frozen=True)
class SweepConfig:
    """
    Параметры свипа. Файл конфига -- JSON объект с этими же ключами,
    неизвестные ключи -- ошибка
    """

    dimension: int = 2
    symbol: str = "laplacian"
    exponent_s: float = 2.0
    energy: float = 1.0
    epsilons: ty.List[float] = dataclasses.field(
        default_factory=lambda: [0.2, 0.1, 0.05]
    )
    m_rule: str = "fixed"
    m_value: float = 1.0
    c0: ty.Optional[float] = None
    shape: str = "tube"
    q_values: ty.List[float] = dataclasses.field(
        default_factory=lambda: [1.5, 2.0, 2.5]
    )
    l_values: ty.List[float] = dataclasses.field(
        default_factory=lambda: [1.0, 2.0, 4.0, 8.0]
    )
    margin: float = 4.0
    samples_per_cap: int = RESOLUTION_SAMPLES
    frequency_reach: float = 4.0
    nodes_per_half: float = 4.0
    grid_scale: float = 1.0
    power_tol: float = 1e-10
    residual_tol: float = 1e-5
    max_iter: int = 5000
    nodal_threshold: float = 1e-8
    certification_tol: float = 1e-3
    fractional_n: int = 4
    workers: int = 1
    record_timing: bool = True
    output_dir: str = "bsq-out"

    def __post_init__(self) -> None:
        for name in _LIST_FIELDS:
            object.__setattr__(self, name, list(getattr(self, name)))
            if not getattr(self, name):
                raise ConfigError("list must be nonempty", key=name)
        if self.dimension < 1:
            raise ConfigError("dimension must be >= 1", key="dimension")
        if self.symbol not in SYMBOLS:
            raise ConfigError(
                f"unknown symbol, expected one of {SYMBOLS}", key="symbol"
            )
        if self.exponent_s <= 0:
            raise ConfigError("s must be positive", key="exponent_s")
        if self.energy <= 0:
            raise ConfigError("lambda must be positive", key="energy")
        for epsilon in self.epsilons:
            if not 0 < epsilon <= 0.5:
                raise ConfigError(
                    f"eps values must lie in (0, 0.5], got {epsilon!r}",
                    key="epsilons",
                )
        if self.m_rule not in M_RULES:
            raise ConfigError(
                f"unknown M rule, expected one of {M_RULES}", key="m_rule"
            )
        if self.m_value < 1:
            raise ConfigError("M must be >= 1", key="m_value")
        if self.c0 is not None and self.c0 <= 0:
            raise ConfigError("c0 must be positive", key="c0")
        try:
            RegionShape(self.shape)
        except ValueError as error:
            raise ConfigError(
                f"unknown region shape {self.shape!r}", key="shape"
            ) from error
        if any(q < 1 for q in self.q_values):
            raise ConfigError("q values must be >= 1", key="q_values")
        if any(L < 1 for L in self.l_values):
            raise ConfigError("L values must be >= 1", key="l_values")
        if not 0 < self.nodal_threshold <= 1e-4:
            raise ConfigError(
                "tau must lie in (0, 1e-4]", key="nodal_threshold"
            )
        if self.certification_tol <= 0 or self.power_tol <= 0:
            raise ConfigError("tolerances must be positive")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be >= 1", key="max_iter")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1", key="workers")
        if self.fractional_n < 0:
            raise ConfigError("N must be >= 0", key="fractional_n")
        self.grid_policy

    @property
    def grid_policy(self) -> GridPolicy:
        return GridPolicy(
            margin=self.margin,
            samples_per_cap=self.samples_per_cap,
            reach=self.frequency_reach,
            nodes_per_half=self.nodes_per_half,
            grid_scale=self.grid_scale,
        )

    def make_symbol(self) -> DispersionSymbol:
        if self.symbol == "fractional":
            return FractionalSymbol(self.exponent_s)
        return LaplacianSymbol()

    def stretch_for(self, epsilon: float) -> float:
        """`M` для данного `eps`"""
        if self.m_rule == "log":
            return max(2.0, math.log(1 / epsilon))
        return self.m_value

    def c0_for(self, epsilon: float) -> float:
        """`c0` для данного `eps`, по умолчанию `1/M`"""
        if self.c0 is not None:
            return self.c0
        return 1 / self.stretch_for(epsilon)

    def region_for(self, epsilon: float) -> RegionSpec:
        return RegionSpec(
            RegionShape(self.shape),
            epsilon=epsilon,
            M=self.stretch_for(epsilon),
        )

    def grid_for(self, epsilon: float) -> FourierGrid:
        return self.grid_policy.grid_for(
            self.region_for(epsilon),
            self.make_symbol(),
            self.energy,
            self.c0_for(epsilon),
            self.dimension,
        )

    def replace(self, **overrides: ty.Any) -> SweepConfig:
        """Копия с переопределенными полями (`None` значения пропускаются)"""
        overrides = {
            key: value
            for key, value in overrides.items()
            if value is not None
        }
        return SweepConfig.from_mapping({**self.to_mapping(), **overrides})

    def to_mapping(self) -> ty.Dict[str, ty.Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_mapping(cls, mapping: ty.Dict[str, ty.Any]) -> SweepConfig:
        """
        Создает конфиг из словаря, проверяя ключи и типы

        Raises:
            ConfigError: Неизвестный ключ, неверный тип или
                нарушенный инвариант
        """
        if not isinstance(mapping, dict):
            raise ConfigError("config must be a JSON object")
        hints = ty.get_type_hints(cls)
        known = {field.name for field in dataclasses.fields(cls)}
        values = {}
        for key, value in mapping.items():
            if key not in known:
                raise ConfigError("unknown key", key=key)
            values[key] = _coerce(key, value, hints[key])
        return cls(**values)


def _coerce(key: str, value: ty.Any, hint: ty.Any) -> ty.Any:
    origin = ty.get_origin(hint)
    if origin is ty.Union:
        (inner,) = [arg for arg in ty.get_args(hint) if arg is not type(None)]
        return None if value is None else _coerce(key, value, inner)
    if origin is list:
        if not isinstance(value, list):
            raise ConfigError("expected a list", key=key)
        (inner,) = ty.get_args(hint)
        return [_coerce(key, item, inner) for item in value]
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigError("expected a boolean", key=key)
        return value
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError("expected an integer", key=key)
        return value
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError("expected a number", key=key)
        return float(value)
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError("expected a string", key=key)
        return value
    return value  # pragma: no cover


def load_config(path: ty.Union[str, pathlib.Path]) -> SweepConfig:
    """
    Читает конфиг из JSON файла

    Raises:
        ConfigError: Файл не читается, не JSON или содержит ошибки
    """
    path = pathlib.Path(path)
    try:
        content = path.read_bytes()
    except OSError as error:
        raise ConfigError(f"can't read {path}: {error}") from error
    try:
        mapping = json_parser_policy.loads(content)
    except ValueError as error:
        raise ConfigError(f"{path} is not valid JSON: {error}") from error
    config = SweepConfig.from_mapping(mapping)
    logger.info("Loaded config from {path}", path=path)
    return config
