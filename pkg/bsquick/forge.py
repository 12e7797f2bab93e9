"""
Ковка потенциала `V` по старшей собственной паре `K`
и проверка того, что `z = lambda + i eps` -- собственное
значение `H0 + V`
"""
from __future__ import annotations

import dataclasses
import math
import typing as ty

import numpy as np
from loguru import logger

from bsquick.bases.symbol import FourierSymbol
from bsquick.birman_schwinger import (
    DEFAULT_MAX_ITER,
    DEFAULT_RESIDUAL_TOL,
    DEFAULT_TOL,
    EigenPair,
    top_eigenpair,
)
from bsquick.exceptions import (
    CertificateError,
    PreconditionError,
    SymbolError,
)
from bsquick.grid import Field, FourierGrid
from bsquick.multipliers import (
    apply_multiplier,
    delta_multiplier,
    resolvent_multiplier,
    symbol_multiplier,
)
from bsquick.region import RegionSpec, discrete_measure, region_indicator

DEFAULT_NODAL_THRESHOLD = 1e-8
MAX_NODAL_THRESHOLD = 1e-4
BOUND_SLACK = 1e-12


def default_q_values(dimension: int) -> ty.Tuple[float, ...]:
    """Показатели, для которых сертификат хранит `||V||_q`"""
    return tuple(sorted({1.0, (dimension + 1) / 2, 2.0, 4.0}))


def _lq(values: np.ndarray, cell_volume: float, q: float) -> float:
    if math.isinf(q):
        return float(np.max(np.abs(values)))
    return float((cell_volume * np.sum(np.abs(values) ** q)) ** (1 / q))


@dataclasses.dataclass(frozen=True, eq=False)
class Certificate:
    """
    Все данные, делающие утверждение "`z` -- собственное значение
    `H0 + V`" проверяемым: потенциал, собственная функция `psi`,
    данные Бирмана-Швингера `(mu, phi)` и диагностика
    """

    symbol: FourierSymbol
    energy: float
    epsilon: float
    region: RegionSpec
    mu: float
    phi: Field
    psi: Field
    potential: Field
    residual: float
    nodal_fraction: float
    q_norms: ty.Dict[float, float]
    nodal_threshold: float = DEFAULT_NODAL_THRESHOLD
    eigen_residual: float = 0.0

    @property
    def z(self) -> complex:
        return complex(self.energy, self.epsilon)

    @property
    def grid(self) -> FourierGrid:
        return self.potential.grid

    @property
    def dimension(self) -> int:
        return self.grid.dimension

    def describe(self) -> ty.Dict[str, ty.Any]:
        """Скалярная часть сертификата для отчетов"""
        return {
            "symbol": self.symbol.descriptor(),
            "lambda": self.energy,
            "epsilon": self.epsilon,
            "z": [self.z.real, self.z.imag],
            "region": self.region.describe(),
            "grid": self.grid.describe(),
            "mu": self.mu,
            "eps_mu": self.epsilon * self.mu,
            "residual": self.residual,
            "nodal_fraction": self.nodal_fraction,
            "nodal_threshold": self.nodal_threshold,
            "eigen_residual": self.eigen_residual,
            "q_norms": {str(q): norm for q, norm in self.q_norms.items()},
        }


def eigen_equation_residual(
    symbol: FourierSymbol,
    z: complex,
    potential: Field,
    psi: Field,
) -> float:
    """
    `||(H0 + V - z) psi|| / ||psi||`, оператор `H0` применяется
    спектрально
    """
    shifted = symbol_multiplier(symbol, psi.grid, shift=z)
    defect = apply_multiplier(shifted, psi) + potential * psi
    return defect.norm() / psi.norm()


def forge_potential(
    symbol: FourierSymbol,
    energy: float,
    epsilon: float,
    region: RegionSpec,
    eigenpair: EigenPair,
    nodal_threshold: float = DEFAULT_NODAL_THRESHOLD,
    *,
    q_values: ty.Optional[ty.Iterable[float]] = None,
) -> Certificate:
    """
    Строит `psi = (H0 - z)^{-1} phi` и потенциал
    `V = -mu^{-1} Im(psi) / psi` на области без узлового множества
    `{|psi| <= tau max|psi|}`, ноль вне нее

    Args:
        symbol: Символ `h0`
        energy: `lambda`
        epsilon: `eps > 0`
        region: Область, на которой считалась собственная пара
        eigenpair: Сошедшаяся старшая собственная пара `K`
        nodal_threshold: Порог `tau` в `(0, 1e-4]`

    Returns:
        Сертификат с посчитанной невязкой

    Raises:
        CertificateError: Пара не сошлась или `psi` тождественный ноль
        PreconditionError: `tau` вне допустимого диапазона
    """
    if not eigenpair.converged:
        raise CertificateError(
            "eigenpair.converged",
            "power iteration did not converge; refusing to forge",
            {
                "iterations": eigenpair.iterations,
                "residual": eigenpair.residual,
            },
        )
    if not 0 < nodal_threshold <= MAX_NODAL_THRESHOLD:
        raise PreconditionError(
            quantity="tau",
            value=nodal_threshold,
            bound=MAX_NODAL_THRESHOLD,
        )
    grid = eigenpair.phi.grid
    z = complex(energy, epsilon)
    phi = eigenpair.phi
    psi = apply_multiplier(resolvent_multiplier(symbol, z, grid), phi)
    peak = psi.max_abs()
    if peak == 0:
        raise CertificateError("max|psi| > 0", "psi vanishes identically")

    inside = region_indicator(region, grid).values.real > 0.5
    magnitudes = np.abs(psi.values)
    nodal = inside & (magnitudes <= nodal_threshold * peak)
    active = inside & ~nodal
    potential = np.zeros(grid.sizes, dtype=complex)
    potential[active] = (
        -psi.values[active].imag / psi.values[active] / eigenpair.mu
    )
    potential_field = Field(grid, potential)

    residual = eigen_equation_residual(symbol, z, potential_field, psi)
    nodal_fraction = float(np.count_nonzero(nodal)) / float(
        np.count_nonzero(inside)
    )
    if q_values is None:
        q_values = default_q_values(grid.dimension)
    q_norms = {
        float(q): _lq(potential, grid.cell_volume, float(q)) for q in q_values
    }
    certificate = Certificate(
        symbol=symbol,
        energy=energy,
        epsilon=epsilon,
        region=region,
        mu=eigenpair.mu,
        phi=phi,
        psi=psi,
        potential=potential_field,
        residual=residual,
        nodal_fraction=nodal_fraction,
        q_norms=q_norms,
        nodal_threshold=nodal_threshold,
        eigen_residual=eigenpair.residual,
    )
    logger.info(
        "Forged certificate z={z}: mu={mu:.8g}, residual={residual:.3e}, "
        "nodal fraction={nodal:.3e}",
        z=z,
        mu=eigenpair.mu,
        residual=residual,
        nodal=nodal_fraction,
    )
    return certificate


def residual_budget(certificate: Certificate) -> float:
    """
    Верхняя оценка невязки сертификата: вклад узлового множества
    `mu^{-1} ||1_N Im psi|| / ||psi||` плюс невязка степенного метода,
    перенесенная через `||phi|| / ||psi||`
    """
    grid = certificate.grid
    inside = region_indicator(certificate.region, grid).values.real > 0.5
    psi = certificate.psi.values
    nodal = inside & (
        np.abs(psi) <= certificate.nodal_threshold * np.max(np.abs(psi))
    )
    psi_norm = certificate.psi.norm()
    nodal_part = (
        math.sqrt(grid.cell_volume * float(np.sum(psi.imag[nodal] ** 2)))
        / certificate.mu
        / psi_norm
    )
    return nodal_part + certificate.eigen_residual * (
        certificate.phi.norm() / psi_norm
    )


@dataclasses.dataclass
class CertificateReport:
    """Результат перепроверки сертификата"""

    residual: float
    tolerance: float
    bound_ok: bool
    support_ok: bool
    q_norms: ty.Dict[float, float]
    q_bounds: ty.Dict[float, float]
    violations: ty.List[str] = dataclasses.field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def raise_for_violations(self) -> None:
        """
        Raises:
            CertificateError: Если нарушен хотя бы один инвариант
        """
        if self.violations:
            raise CertificateError(
                self.violations[0],
                "certificate failed verification",
                {"violations": ", ".join(self.violations)},
            )

    def describe(self) -> ty.Dict[str, ty.Any]:
        return {
            "passed": self.passed,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "bound_ok": self.bound_ok,
            "support_ok": self.support_ok,
            "q_norms": {str(q): v for q, v in self.q_norms.items()},
            "q_bounds": {str(q): v for q, v in self.q_bounds.items()},
            "violations": list(self.violations),
        }


def verify_certificate(
    certificate: Certificate,
    tol: float = 1e-3,
    *,
    q_values: ty.Optional[ty.Iterable[float]] = None,
) -> CertificateReport:
    """
    Пересчитывает `(H0 + V - z) psi` по сохраненным полям и проверяет
    поточечную оценку `|V| <= 1/mu`, носитель `V`, оценки `L^q`
    норм через меру области и невязку. Не меняет сертификат
    """
    grid = certificate.grid
    potential = certificate.potential.values
    violations = []

    residual = eigen_equation_residual(
        certificate.symbol,
        certificate.z,
        certificate.potential,
        certificate.psi,
    )
    if not residual <= tol:
        violations.append("residual <= tol")

    ceiling = (1 + BOUND_SLACK) / certificate.mu
    bound_ok = bool(np.max(np.abs(potential)) <= ceiling)
    if not bound_ok:
        violations.append("|V| <= 1/mu")

    indicator = region_indicator(certificate.region, grid)
    outside = indicator.values.real < 0.5
    support_ok = not np.any(potential[outside])
    if not support_ok:
        violations.append("V = 0 off region")

    measure = discrete_measure(indicator)
    if q_values is None:
        q_values = certificate.q_norms.keys() or default_q_values(
            grid.dimension
        )
    q_norms, q_bounds = {}, {}
    for q in q_values:
        q = float(q)
        q_norms[q] = _lq(potential, grid.cell_volume, q)
        q_bounds[q] = ceiling * measure ** (1 / q)
        if q_norms[q] > q_bounds[q]:
            violations.append(f"||V||_{q:g} <= |region|^(1/{q:g}) / mu")

    report = CertificateReport(
        residual=residual,
        tolerance=tol,
        bound_ok=bound_ok,
        support_ok=support_ok,
        q_norms=q_norms,
        q_bounds=q_bounds,
        violations=violations,
    )
    if report.passed:
        logger.info(
            "Certificate z={z} verified: residual={residual:.3e}",
            z=certificate.z,
            residual=residual,
        )
    else:
        logger.warning(
            "Certificate z={z} failed: {violations}",
            z=certificate.z,
            violations=violations,
        )
    return report


class BSCorrespondence(ty.NamedTuple):
    defect: float
    """
    `||((H0 - lambda)^2 + eps^2) u - (eps/mu) chi^2 u||`,
    деленная на норму первого слагаемого
    """
    roundtrip: float
    """`||mu^{-1} chi u - phi|| / ||phi||`"""


def verify_bs_correspondence(
    eigenpair: EigenPair,
    symbol: FourierSymbol,
    energy: float,
    epsilon: float,
    region: RegionSpec,
) -> BSCorrespondence:
    """
    Проверяет соответствие Бирмана-Швингера для `u = delta chi phi`:
    `u` решает `((H0 - lambda)^2 + eps^2) u = (eps / mu) chi^2 u`,
    а `mu^{-1} chi u` возвращает `phi`

    Невязка уравнения делится на `||((H0 - lambda)^2 + eps^2) u||`,
    то есть на `eps ||chi phi||`, а не на `||u||`. Норма `||u||`
    порядка `mu`, и при делении на нее ошибка в `mu` на 10 процентов
    дает невязку порядка `0.1 eps / mu`, неотличимую от погрешности
    квадратуры. Относительно левой части та же ошибка дает `~0.1`

    Raises:
        PreconditionError: `mu <= 0`
    """
    if not eigenpair.mu > 0:
        raise PreconditionError(
            quantity="mu", value=eigenpair.mu, bound=0.0, relation=">"
        )
    phi = eigenpair.phi
    grid = phi.grid
    chi = region_indicator(region, grid)
    u = apply_multiplier(
        delta_multiplier(symbol, energy, epsilon, grid), chi * phi
    )
    shifted = symbol_multiplier(symbol, grid, shift=energy)
    quadratic = shifted * shifted + epsilon ** 2
    lhs = apply_multiplier(quadratic, u)
    rhs = (epsilon / eigenpair.mu) * (chi * chi * u)
    defect = (lhs - rhs).norm() / lhs.norm()
    roundtrip = ((chi * u) / eigenpair.mu - phi).norm() / phi.norm()
    logger.debug(
        "Birman-Schwinger correspondence: defect={defect:.3e}, "
        "roundtrip={roundtrip:.3e}",
        defect=defect,
        roundtrip=roundtrip,
    )
    return BSCorrespondence(defect=defect, roundtrip=roundtrip)


def quasimode_defect(f: Field, symbol: FourierSymbol, energy: float) -> float:
    """`||(H0 - lambda) f|| / ||f||`"""
    shifted = symbol_multiplier(symbol, f.grid, shift=energy)
    return apply_multiplier(shifted, f).norm() / f.norm()


def embedded_perturbation(
    f: Field,
    symbol: FourierSymbol,
    energy: float,
    epsilon: float,
    region: RegionSpec,
    *,
    nodal_threshold: float = DEFAULT_NODAL_THRESHOLD,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    residual_tol: float = DEFAULT_RESIDUAL_TOL,
) -> Certificate:
    """
    Возмущение квазимоды: если `f` почти сосредоточена на области
    (`||(1 - chi) f|| <= 1/4`) и `eps >= 2 ||(H0 - lambda) f||`, то
    `eps ||K|| >= 1/4`, и выкованный потенциал удовлетворяет
    `|V| <= 4 eps chi`

    Raises:
        PreconditionError: Нарушено одно из условий; в ошибке
            указаны величина и ее граница
        CertificateError: Выкованный потенциал превысил `4 eps`
    """
    norm = f.norm()
    if abs(norm - 1) > 1e-8:
        raise PreconditionError(
            quantity="||f||", value=norm, bound=1.0, relation="=="
        )
    grid = f.grid
    chi = region_indicator(region, grid)
    leak = (f - chi * f).norm()
    if leak > 0.25:
        raise PreconditionError(
            quantity="||(1 - chi) f||", value=leak, bound=0.25
        )
    defect = quasimode_defect(f, symbol, energy)
    if epsilon < 2 * defect:
        raise PreconditionError(
            quantity="eps", value=epsilon, bound=2 * defect, relation=">="
        )
    delta = delta_multiplier(symbol, energy, epsilon, grid)
    lower = epsilon * (chi * apply_multiplier(delta, chi * f)).norm()
    if lower < 0.25:
        raise PreconditionError(
            quantity="eps ||chi delta chi f||",
            value=lower,
            bound=0.25,
            relation=">=",
        )
    logger.info(
        "Quasimode accepted: leak={leak:.3e}, defect={defect:.3e}, "
        "eps||K f||={lower:.4f}",
        leak=leak,
        defect=defect,
        lower=lower,
    )
    eigenpair = top_eigenpair(
        chi,
        symbol,
        energy,
        epsilon,
        init=chi * f,
        tol=tol,
        max_iter=max_iter,
        residual_tol=residual_tol,
    )
    certificate = forge_potential(
        symbol, energy, epsilon, region, eigenpair, nodal_threshold
    )
    peak = certificate.potential.max_abs()
    if peak > 4 * epsilon * (1 + 1e-9):
        raise CertificateError(
            "|V| <= 4 eps chi",
            "forged potential exceeds the quasimode bound",
            {"max|V|": peak, "4 eps": 4 * epsilon},
        )
    return certificate


def rescale_certificate(
    certificate: Certificate, energy: float
) -> Certificate:
    """
    Переносит сертификат однородного символа степени `p` с уровня
    `lambda` на уровень `energy` точным растяжением
    `x -> t x`, `t = (lambda / energy)^{1/p}`: `z`, `V` и невязка
    умножаются на `energy / lambda`, `mu` делится на это отношение

    Raises:
        SymbolError: Символ неоднороден
    """
    homogeneity = getattr(certificate.symbol, "homogeneity", None)
    if homogeneity is None:
        raise SymbolError(
            f"{certificate.symbol!r} is not homogeneous; can't rescale"
        )
    if energy <= 0 or certificate.energy <= 0:
        raise PreconditionError(
            quantity="lambda", value=energy, bound=0.0, relation=">"
        )
    ratio = energy / certificate.energy
    stretch = ratio ** (-1 / homogeneity)
    grid = certificate.grid.scaled(stretch)
    dimension = grid.dimension
    # phi остается единичной при новом объеме ячейки
    amplitude = stretch ** (-dimension / 2)
    phi = Field(grid, certificate.phi.values * amplitude)
    psi = Field(grid, certificate.psi.values * amplitude / ratio)
    potential = Field(grid, certificate.potential.values * ratio)
    region = dataclasses.replace(
        certificate.region,
        scale=certificate.region.scale * stretch,
        center=None
        if certificate.region.center is None
        else tuple(c * stretch for c in certificate.region.center),
    )
    q_norms = {
        q: _lq(potential.values, grid.cell_volume, q)
        for q in certificate.q_norms
    }
    return Certificate(
        symbol=certificate.symbol,
        energy=energy,
        epsilon=certificate.epsilon * ratio,
        region=region,
        mu=certificate.mu / ratio,
        phi=phi,
        psi=psi,
        potential=potential,
        residual=certificate.residual * ratio,
        nodal_fraction=certificate.nodal_fraction,
        q_norms=q_norms,
        nodal_threshold=certificate.nodal_threshold,
        eigen_residual=certificate.eigen_residual,
    )
