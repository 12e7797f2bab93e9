import dataclasses
import math

import numpy as np
import pytest

from bsquick import (
    CertificateError,
    Field,
    KnappSpec,
    PreconditionError,
    RegionShape,
    RegionSpec,
    SymbolError,
    embedded_perturbation,
    forge_potential,
    knapp_wavepacket,
    quasimode_defect,
    region_indicator,
    rescale_certificate,
    top_eigenpair,
    verify_bs_correspondence,
    verify_certificate,
)
from bsquick.bounds import frank_quotient, ls_quotient
from bsquick.forge import residual_budget
from bsquick.harness import GridPolicy
from bsquick.symbols import RescaledTubeSymbol

from .conftest import TUBE_EPSILON


def tampered(certificate, **changes):
    return dataclasses.replace(certificate, **changes)


def test_certificate_invariants(certificate, tube_indicator):
    potential = certificate.potential.values
    assert np.max(np.abs(potential)) <= (1 + 1e-12) / certificate.mu
    outside = tube_indicator.values.real < 0.5
    assert not np.any(potential[outside])
    assert certificate.residual <= 1e-3
    assert certificate.nodal_fraction < 0.05
    assert certificate.z == complex(1.0, TUBE_EPSILON)


def test_residual_within_budget(certificate):
    assert certificate.residual <= residual_budget(certificate) + 1e-10


def test_verification_passes(certificate):
    report = verify_certificate(certificate)
    assert report.passed
    assert report.bound_ok and report.support_ok
    for q, norm in report.q_norms.items():
        assert norm <= report.q_bounds[q]
    report.raise_for_violations()


def test_inflated_potential_is_caught(certificate):
    factor = 2 / (certificate.mu * certificate.potential.max_abs())
    broken = tampered(certificate, potential=certificate.potential * factor)
    report = verify_certificate(broken)
    assert "|V| <= 1/mu" in report.violations
    assert "residual <= tol" in report.violations
    with pytest.raises(CertificateError):
        report.raise_for_violations()


def test_wrong_eigenfunction_is_caught(certificate):
    noise = Field.random(certificate.grid, seed=9, real=False)
    report = verify_certificate(tampered(certificate, psi=noise))
    assert not report.passed
    assert report.residual > 1e-3


def test_potential_off_region_is_caught(certificate):
    values = certificate.potential.values.copy()
    values[0, 0] = 1e-3 / certificate.mu
    broken = tampered(certificate, potential=Field(certificate.grid, values))
    assert "V = 0 off region" in verify_certificate(broken).violations


def test_unconverged_pair_is_refused(laplacian, tube_region, tube_eigenpair):
    stale = dataclasses.replace(tube_eigenpair, converged=False)
    with pytest.raises(CertificateError) as error:
        forge_potential(laplacian, 1.0, TUBE_EPSILON, tube_region, stale)
    assert error.value.invariant == "eigenpair.converged"


@pytest.mark.parametrize("tau", [0.0, 1e-3])
def test_nodal_threshold_range(laplacian, tube_region, tube_eigenpair, tau):
    with pytest.raises(PreconditionError):
        forge_potential(
            laplacian, 1.0, TUBE_EPSILON, tube_region, tube_eigenpair, tau
        )


def test_bs_correspondence(laplacian, tube_region, tube_eigenpair):
    check = verify_bs_correspondence(
        tube_eigenpair, laplacian, 1.0, TUBE_EPSILON, tube_region
    )
    bound = 10 * tube_eigenpair.residual + 1e-12
    assert check.defect <= bound
    assert check.roundtrip <= bound


def test_bs_correspondence_detects_wrong_mu(
    laplacian, tube_region, tube_eigenpair
):
    wrong = dataclasses.replace(tube_eigenpair, mu=tube_eigenpair.mu * 1.1)
    check = verify_bs_correspondence(
        wrong, laplacian, 1.0, TUBE_EPSILON, tube_region
    )
    assert check.defect >= 1e-2
    # относительно левой части ошибка 10% в mu дает ровно 1 - 1/1.1
    assert check.defect == pytest.approx(1 - 1 / 1.1, rel=0.01)
    assert check.roundtrip == pytest.approx(1 - 1 / 1.1, rel=0.01)
    zero = dataclasses.replace(tube_eigenpair, mu=0.0)
    with pytest.raises(PreconditionError):
        verify_bs_correspondence(
            zero, laplacian, 1.0, TUBE_EPSILON, tube_region
        )


def test_quasimode_defect_of_on_shell_wave(square_grid, laplacian):
    wave = Field.plane_wave(square_grid, (0, 1))
    on_shell = quasimode_defect(wave, laplacian, 1.0)
    assert on_shell == pytest.approx(0, abs=1e-12)
    assert quasimode_defect(wave, laplacian, 2.0) == pytest.approx(1.0)


def test_quasimode_must_be_normalized(tube_grid, tube_region, laplacian):
    f = Field.constant(tube_grid, 1.0)
    with pytest.raises(PreconditionError) as error:
        embedded_perturbation(f, laplacian, 1.0, TUBE_EPSILON, tube_region)
    assert error.value.quantity == "||f||"


def test_quasimode_must_live_on_region(tube_grid, tube_region, laplacian):
    far = RegionSpec(RegionShape.BALL, epsilon=1.0, center=(60.0, 0.0))
    f = region_indicator(far, tube_grid).normalized()
    with pytest.raises(PreconditionError) as error:
        embedded_perturbation(f, laplacian, 1.0, TUBE_EPSILON, tube_region)
    assert error.value.quantity == "||(1 - chi) f||"
    assert error.value.value == pytest.approx(1.0)
    assert error.value.bound == 0.25


def test_quasimode_leak_is_reported(
    tube_grid, tube_region, tube_indicator, laplacian
):
    far = RegionSpec(RegionShape.BALL, epsilon=1.0, center=(60.0, 0.0))
    outside = region_indicator(far, tube_grid).normalized()
    f = (tube_indicator.normalized() + outside) / math.sqrt(2)
    with pytest.raises(PreconditionError) as error:
        embedded_perturbation(f, laplacian, 1.0, TUBE_EPSILON, tube_region)
    assert error.value.quantity == "||(1 - chi) f||"
    assert error.value.value == pytest.approx(math.sqrt(0.5))


def test_quasimode_defect_must_be_small(
    tube_indicator, tube_region, laplacian
):
    f = tube_indicator.normalized()
    with pytest.raises(PreconditionError) as error:
        embedded_perturbation(f, laplacian, 1.0, TUBE_EPSILON, tube_region)
    assert error.value.quantity == "eps"
    assert error.value.value < error.value.bound


def test_rescaling_keeps_quotients(certificate):
    moved = rescale_certificate(certificate, 4.0)
    assert moved.z == pytest.approx(4 * certificate.z)
    assert moved.mu == pytest.approx(certificate.mu / 4)
    assert moved.phi.norm() == pytest.approx(1.0)
    assert moved.residual == pytest.approx(4 * certificate.residual)
    assert verify_certificate(moved).residual == pytest.approx(
        moved.residual, rel=1e-4
    )
    for q in (1.5, 2.0):
        assert ls_quotient(moved, q) == pytest.approx(
            ls_quotient(certificate, q), rel=1e-9
        )
        assert frank_quotient(moved, q) == pytest.approx(
            frank_quotient(certificate, q), rel=1e-9
        )


def test_rescaling_matches_direct_forging(
    certificate, laplacian, tube_region
):
    energy = 4.0
    epsilon = energy * TUBE_EPSILON
    region = dataclasses.replace(tube_region, scale=0.5)
    grid = certificate.grid.scaled(0.5)
    indicator = region_indicator(region, grid)
    pair = top_eigenpair(indicator, laplacian, energy, epsilon)
    direct = forge_potential(laplacian, energy, epsilon, region, pair)
    moved = rescale_certificate(certificate, energy)
    assert direct.mu == pytest.approx(moved.mu, rel=1e-6)
    assert ls_quotient(direct, 2.0) == pytest.approx(
        ls_quotient(certificate, 2.0), rel=0.05
    )


def test_rescaling_needs_homogeneous_symbol(certificate):
    odd = tampered(certificate, symbol=RescaledTubeSymbol(0.5))
    with pytest.raises(SymbolError):
        rescale_certificate(odd, 2.0)


def test_describe_is_plain(certificate):
    description = certificate.describe()
    assert description["eps_mu"] == pytest.approx(
        TUBE_EPSILON * certificate.mu
    )
    assert description["symbol"] == {"kind": "laplacian"}
    assert math.isfinite(description["residual"])


@pytest.mark.slow
def test_knapp_quasimode_is_perturbed_inside_the_bound(laplacian):
    epsilon, c0, M = 0.2, 1 / 8, 64.0
    region = RegionSpec(RegionShape.TUBE, epsilon=epsilon, M=M)
    grid = GridPolicy().knapp_grid(region, laplacian, 1.0, c0, 2)
    packet = knapp_wavepacket(
        KnappSpec(epsilon=epsilon, c0=c0), grid, laplacian
    )
    certificate = embedded_perturbation(
        packet, laplacian, 1.0, epsilon, region
    )
    assert certificate.potential.max_abs() <= 4 * epsilon
    assert certificate.residual <= 1e-3
    assert epsilon * certificate.mu >= 0.25
    assert certificate.z == complex(1.0, epsilon)
