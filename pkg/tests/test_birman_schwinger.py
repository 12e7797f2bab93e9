import math

import numpy as np
import pytest

from bsquick import (
    BirmanSchwingerOperator,
    ConvergenceError,
    Field,
    PreconditionError,
    RescaledTubeSymbol,
    apply_K,
    field_inner,
    isospectrality_check,
    knapp_lower_bound,
    knapp_table,
    matched_unit_grid,
    power_iteration,
    rescaled_tube_operator,
    strong_convergence_check,
    top_eigenpair,
)
from bsquick.birman_schwinger import default_init, to_unit_tube
from bsquick.harness import GridPolicy
from bsquick.region import RegionShape, RegionSpec

from .conftest import TUBE_EPSILON


def test_on_shell_mode_without_cutoff(square_grid, laplacian):
    everywhere = Field.constant(square_grid, 1.0)
    wave = Field.plane_wave(square_grid, (1, 0))
    result = apply_K(everywhere, laplacian, 1.0, 0.1, wave)
    assert (result - wave / 0.1).norm() <= 1e-10 * wave.norm() / 0.1


def test_fields_off_the_region_are_annihilated(tube_indicator, laplacian):
    outside = Field(tube_indicator.grid, 1 - tube_indicator.values)
    result = apply_K(tube_indicator, laplacian, 1.0, TUBE_EPSILON, outside)
    assert result.norm() == 0


def test_operator_is_self_adjoint_and_positive(tube_indicator, laplacian):
    operator = BirmanSchwingerOperator(
        tube_indicator, laplacian, 1.0, TUBE_EPSILON
    )
    f = Field.random(tube_indicator.grid, seed=11)
    g = Field.random(tube_indicator.grid, seed=12)
    lhs = field_inner(f, operator(g))
    rhs = field_inner(operator(f), g)
    scale = f.norm() * g.norm() / TUBE_EPSILON
    assert abs(lhs - rhs) <= 1e-12 * scale
    assert operator.quadratic_form(f) >= 0
    assert operator(f).is_real
    assert operator.preserves_reality


def test_norm_lower_bound_meets_the_top_eigenvalue(
    tube_indicator, tube_eigenpair, laplacian
):
    operator = BirmanSchwingerOperator(
        tube_indicator, laplacian, 1.0, TUBE_EPSILON
    )
    mu = tube_eigenpair.mu
    at_phi = operator.norm_lower_bound(tube_eigenpair.phi)
    assert at_phi == pytest.approx(mu, rel=1e-3)
    f = Field.random(tube_indicator.grid, seed=13)
    assert operator.norm_lower_bound(f) <= mu * (1 + 1e-3)


def test_top_eigenvalue_without_cutoff(square_grid, laplacian):
    everywhere = Field.constant(square_grid, 1.0)
    pair = top_eigenpair(
        everywhere,
        laplacian,
        1.0,
        0.1,
        init=Field.random(square_grid, seed=3),
    )
    assert pair.converged
    assert pair.mu == pytest.approx(10.0, rel=1e-9)


def test_tube_eigenpair(tube_eigenpair):
    pair = tube_eigenpair
    assert pair.converged
    assert 0 < TUBE_EPSILON * pair.mu <= 1
    assert pair.phi.norm() == pytest.approx(1.0)
    assert pair.phi.is_real
    assert pair.residual <= 1e-5
    assert np.all(np.diff(pair.history) >= -1e-12 * pair.mu)
    assert pair.describe()["iterations"] == pair.iterations


def test_eigenpair_is_supported_on_region(tube_eigenpair, tube_indicator):
    leak = tube_eigenpair.phi - tube_indicator * tube_eigenpair.phi
    assert leak.norm() == 0


def test_zero_start_is_rejected(tube_indicator, laplacian):
    with pytest.raises(ConvergenceError):
        top_eigenpair(
            tube_indicator,
            laplacian,
            1.0,
            TUBE_EPSILON,
            init=Field.zeros(tube_indicator.grid),
        )


def test_iteration_budget_is_reported(tube_indicator, laplacian):
    start = Field.random(tube_indicator.grid, seed=5)
    pair = top_eigenpair(
        tube_indicator, laplacian, 1.0, TUBE_EPSILON, init=start, max_iter=1
    )
    assert not pair.converged
    assert pair.iterations == 1


def test_power_iteration_on_plain_callable(square_grid):
    weights = np.ones(square_grid.sizes)
    weights[0, 0] = 3.0

    def operator(f):
        return f * weights

    pair = power_iteration(operator, Field.constant(square_grid, 1.0))
    assert pair.converged
    assert pair.mu == pytest.approx(3.0)


def dense_spectrum(indicator, symbol):
    operator = BirmanSchwingerOperator(indicator, symbol, 1.0, TUBE_EPSILON)
    nodes = np.flatnonzero(indicator.flat.real)
    columns = []
    for node in nodes:
        unit = np.zeros(indicator.grid.size)
        unit[node] = 1.0
        image = operator(Field(indicator.grid, unit))
        columns.append(image.flat.real[nodes])
    return np.linalg.eigvalsh(np.array(columns))


def test_power_iteration_finds_an_exact_eigenvalue(
    tube_indicator, tube_eigenpair, laplacian
):
    spectrum = dense_spectrum(tube_indicator, laplacian)
    mu = tube_eigenpair.mu
    assert np.min(np.abs(spectrum - mu)) <= 1e-5 * mu
    assert spectrum[0] >= -1e-12 * spectrum[-1]
    assert spectrum[-1] <= 1 / TUBE_EPSILON


def test_knapp_bound_does_not_exceed_the_norm(
    tube_grid, tube_indicator, laplacian
):
    top = dense_spectrum(tube_indicator, laplacian)[-1]
    bound = knapp_lower_bound(TUBE_EPSILON, 1.0, 1.0, tube_grid, laplacian)
    assert 0 < bound <= TUBE_EPSILON * top * (1 + 1e-9)
    assert bound <= 1


def test_knapp_table_rows(laplacian):
    policy = GridPolicy()
    epsilon = 0.25

    def grid_for(M, c0):
        region = RegionSpec(RegionShape.TUBE, epsilon=epsilon, M=M)
        return policy.knapp_grid(region, laplacian, 1.0, c0, 2)

    rows = knapp_table(epsilon, [1.0, 2.0], grid_for)
    assert [row.M for row in rows] == [1.0, 2.0]
    assert [row.c0 for row in rows] == [1.0, 0.5]
    assert all(0 < row.bound <= 1 for row in rows)

    wide = knapp_table(epsilon, [4.0], grid_for, delta=0.5)
    assert wide[0].c0 == pytest.approx(0.5)
    assert 0 < wide[0].bound <= 1


@pytest.mark.parametrize("delta", [-0.1, 1.0])
def test_knapp_table_delta_range(delta):
    with pytest.raises(PreconditionError) as error:
        knapp_table(0.25, [2.0], lambda M, c0: None, delta=delta)
    assert error.value.quantity == "delta"


def test_default_init_is_real_on_region(tube_indicator, laplacian):
    start = default_init(tube_indicator, laplacian, 1.0, TUBE_EPSILON)
    assert start.real_part().norm() > 0
    assert (start - tube_indicator * start).norm() == 0


def test_rescaled_symbol_limit(tube_grid):
    unit_grid = matched_unit_grid(tube_grid, TUBE_EPSILON)
    assert unit_grid.box_lengths[0] == pytest.approx(
        TUBE_EPSILON * tube_grid.box_lengths[0]
    )
    assert unit_grid.box_lengths[1] == pytest.approx(
        math.sqrt(TUBE_EPSILON) * tube_grid.box_lengths[1]
    )
    limit = rescaled_tube_operator(0.0, unit_grid)
    eta = unit_grid.frequencies()
    expected = 2 * eta[0] + eta[1] ** 2
    values = RescaledTubeSymbol(0.0).on_grid(unit_grid)
    assert np.allclose(values, np.broadcast_to(expected, unit_grid.sizes))
    assert not limit.preserves_reality


def test_isospectrality(tube_grid):
    check = isospectrality_check(TUBE_EPSILON, tube_grid)
    assert check.relative_gap <= 0.02


def test_strong_convergence_keeps_norm(tube_grid, tube_eigenpair):
    unit_grid = matched_unit_grid(tube_grid, TUBE_EPSILON)
    f = to_unit_tube(tube_eigenpair.phi, TUBE_EPSILON)
    check = strong_convergence_check(TUBE_EPSILON, unit_grid, f)
    assert check.limit_norm > 0
    assert check.rescaled_norm >= 0.5 * check.limit_norm
    # K'_eps изоспектрален eps K, phi -- его собственный вектор
    assert check.rescaled_norm == pytest.approx(
        TUBE_EPSILON * tube_eigenpair.mu, rel=0.02
    )
