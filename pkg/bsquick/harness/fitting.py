"""
Подгонка степенных законов в log-log координатах
"""
from __future__ import annotations

import typing as ty

import numpy as np

from bsquick.exceptions import BoundError


def coefficient_of_determination(
    observed: np.ndarray, predicted: np.ndarray
) -> float:
    """
    `r^2` в `[0, 1]`. Если разброс данных на уровне ошибок округления,
    подгонка считается точной, когда и остаток на том же уровне
    """
    total = float(np.sum((observed - observed.mean()) ** 2))
    residual = float(np.sum((observed - predicted) ** 2))
    scale = max(float(np.max(np.abs(observed))), 1.0) ** 2
    tiny = observed.size * scale * np.finfo(float).eps
    if total <= tiny:
        return 1.0 if residual <= tiny else 0.0
    return min(max(1 - residual / total, 0.0), 1.0)


class PowerLawFit(ty.NamedTuple):
    """`y ~ exp(intercept) * x^slope`"""

    slope: float
    intercept: float
    r_squared: float


def fit_power_law(points: ty.Iterable[ty.Tuple[float, float]]) -> PowerLawFit:
    """
    Метод наименьших квадратов по `(ln x, ln y)`

    Raises:
        BoundError: Меньше двух точек или неположительные значения
    """
    data = np.asarray(list(points), dtype=float)
    if data.ndim != 2 or data.shape[0] < 2 or data.shape[1] != 2:
        raise BoundError("power-law fit needs at least 2 (x, y) points")
    if np.any(data <= 0) or not np.all(np.isfinite(data)):
        raise BoundError("power-law fit needs finite positive x and y")
    log_x, log_y = np.log(data[:, 0]), np.log(data[:, 1])
    design = np.stack([log_x, np.ones_like(log_x)], axis=1)
    (slope, intercept), *_ = np.linalg.lstsq(design, log_y, rcond=None)
    predicted = design @ np.array([slope, intercept])
    r_squared = coefficient_of_determination(log_y, predicted)
    return PowerLawFit(
        slope=float(slope), intercept=float(intercept), r_squared=r_squared
    )
