"""
Проверки в масштабе рабочей станции: свип по eps = 0.2, 0.1, 0.05.
Медленные проверки помечены `slow`: `pytest -m "not slow"` их пропускает
"""
import math

import numpy as np
import pytest

from bsquick import (
    FourierGrid,
    RegionShape,
    RegionSpec,
    ShellBump,
    isospectrality_check,
    kernel_decay_profile,
    knapp_lower_bound,
    knapp_table,
    region_indicator,
    top_eigenpair,
)
from bsquick.bounds import expected_norm_exponent, frank_quotient
from bsquick.harness import GridPolicy, SweepConfig, run_sweep
from bsquick.harness.sweep import (
    expected_dn_slope,
    fit_dn_slope,
    fit_norm_exponent,
)
from bsquick.region import discrete_measure

from .conftest import TUBE_EPSILON


@pytest.fixture(scope="module")
def sweep_config():
    return SweepConfig(record_timing=False, output_dir="unused")


@pytest.fixture(scope="module")
def sweep_rows(sweep_config):
    return run_sweep(sweep_config, keep_certificates=True)


@pytest.mark.slow
def test_default_sweep_is_certified(sweep_rows):
    for row in sweep_rows:
        assert row.passed, row.reason
        certificate = row.certificate
        potential = np.abs(certificate.potential.values)
        assert np.max(potential) <= (1 + 1e-12) / certificate.mu
        assert row.residual <= 1e-3
        assert 0.25 <= row.eps_mu <= 1


@pytest.mark.slow
@pytest.mark.parametrize("epsilon", [0.2, 0.1, 0.05])
def test_refinement_keeps_the_eigenvalue(sweep_config, laplacian, epsilon):
    products = []
    for scale in (1.0, 1.5):
        config = sweep_config.replace(grid_scale=scale)
        region = config.region_for(epsilon)
        indicator = region_indicator(region, config.grid_for(epsilon))
        pair = top_eigenpair(indicator, laplacian, 1.0, epsilon)
        products.append(epsilon * pair.mu)
    assert products[1] == pytest.approx(products[0], rel=0.02)


@pytest.mark.slow
def test_eigenvalue_is_above_the_knapp_floor(sweep_rows, sweep_config):
    symbol = sweep_config.make_symbol()
    for row in sweep_rows:
        grid = row.certificate.grid
        bound = knapp_lower_bound(row.epsilon, 1.0, row.c0, grid, symbol)
        # пакет комплексный и задевает оба сектора четности
        assert row.eps_mu >= 0.9 * bound


@pytest.mark.slow
def test_bs_correspondence_on_every_row(sweep_rows):
    for row in sweep_rows:
        assert row.bs_defect <= 10 * row.certificate.eigen_residual + 1e-12


@pytest.mark.slow
def test_laptev_safronov_quotient_grows(sweep_rows):
    quotients = [row.ls[2.5] for row in sweep_rows]
    assert all(b > a for a, b in zip(quotients, quotients[1:]))


@pytest.mark.slow
@pytest.mark.parametrize("q", [2.0, 2.5])
def test_norm_exponent_of_the_forged_family(sweep_rows, q):
    fit = fit_norm_exponent(sweep_rows, q)
    expected = expected_norm_exponent("tube", 2, q)
    assert fit.slope == pytest.approx(expected, rel=0.2)


@pytest.mark.slow
def test_frank_quotient_saturates(sweep_rows):
    quotients = []
    for row in sweep_rows:
        certificate = row.certificate
        quotient = frank_quotient(certificate, 2.0)
        # ||V||_2^2 <= |supp V| / mu^2
        support = discrete_measure(certificate.potential.support_indicator())
        floor = (
            math.sqrt(row.epsilon * abs(certificate.z))
            * certificate.mu ** 2
            / support
        )
        assert quotient >= floor * (1 - 1e-9)
        quotients.append(quotient)
    assert min(quotients) >= 0.015
    assert max(quotients) / min(quotients) <= 5


@pytest.mark.slow
def test_davies_nath_decay_in_L(sweep_rows):
    for row in sweep_rows:
        values = [row.dn_F[L] for L in sorted(row.dn_F)]
        assert all(b <= a for a, b in zip(values, values[1:]))
        expected = expected_dn_slope(row).slope
        assert -1.0 < expected < -0.4
        assert fit_dn_slope(row).slope == pytest.approx(expected, abs=0.15)
        assert min(row.dn[L] / L for L in row.dn) > 0


@pytest.fixture(scope="module")
def knapp_grid_for(laplacian):
    policy = GridPolicy()
    epsilon = 0.05

    def grid_for(M, c0):
        region = RegionSpec(RegionShape.TUBE, epsilon=epsilon, M=M)
        return policy.knapp_grid(region, laplacian, 1.0, c0, 2)

    return grid_for


@pytest.mark.slow
def test_knapp_bound_grows_with_M(knapp_grid_for):
    rows = knapp_table(0.05, [2.0, 4.0, 8.0, 16.0], knapp_grid_for)
    bounds = [row.bound for row in rows]
    assert all(0 < bound <= 1 for bound in bounds)
    assert all(b >= a for a, b in zip(bounds, bounds[1:]))


@pytest.mark.slow
def test_knapp_bound_approaches_one(knapp_grid_for):
    (row,) = knapp_table(0.05, [64.0], knapp_grid_for, delta=0.4)
    assert row.c0 == pytest.approx(64.0 ** -0.6)
    assert 0.9 <= row.bound <= 1


@pytest.mark.slow
def test_isospectrality_at_small_eps():
    epsilon = 0.1
    grid = SweepConfig(output_dir="unused").grid_for(epsilon)
    assert isospectrality_check(epsilon, grid).relative_gap <= 0.02


@pytest.mark.slow
def test_kernel_decay_exponent(laplacian):
    epsilon = 0.02
    cutoff = ShellBump(0.3, 0.9)
    grid = GridPolicy().kernel_grid(epsilon, laplacian, 1.0, cutoff.outer, 2)
    profile = kernel_decay_profile(laplacian, 1.0, epsilon, cutoff, grid)
    assert profile.fitted_exponent == pytest.approx(-0.5, abs=0.15)
    # r^{-1/2} exp(-eps r / 2) между 1/(2 eps) и 2/eps дает 0.5 e^{-3/4}
    assert profile.suppression_ratio == pytest.approx(
        0.5 * math.exp(-0.75), rel=0.1
    )
    assert profile.passed


@pytest.mark.slow
def test_fractional_sharpness():
    config = SweepConfig(
        symbol="fractional",
        exponent_s=1.0,
        q_values=[2.0],
        record_timing=False,
        output_dir="unused",
    )
    rows = run_sweep(config)
    assert all(row.passed for row in rows), [row.reason for row in rows]
    large = [row.fractional[("ii", 2.0)] for row in rows]
    weighted = [row.fractional[("iii", 2.0)] for row in rows]
    assert min(large) > 0
    assert max(large) / min(large) <= 10
    assert min(weighted) > 0


def test_box_doubling_keeps_the_eigenvalue(
    tube_grid, tube_region, tube_eigenpair, laplacian
):
    spacing = tube_grid.spacing
    sizes = tuple(2 * size + 1 for size in tube_grid.sizes)
    doubled = FourierGrid(
        box_lengths=tuple(h * n for h, n in zip(spacing, sizes)),
        sizes=sizes,
    )
    indicator = region_indicator(tube_region, doubled)
    assert np.sum(indicator.values.real) == np.sum(
        region_indicator(tube_region, tube_grid).values.real
    )
    pair = top_eigenpair(indicator, laplacian, 1.0, TUBE_EPSILON)
    assert pair.mu == pytest.approx(tube_eigenpair.mu, rel=0.01)
