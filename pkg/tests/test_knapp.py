import math

import numpy as np
import pytest
import scipy.fft

from bsquick import (
    FractionalSymbol,
    KnappSpec,
    PreconditionError,
    RegionShape,
    RegionSpec,
    ResolutionError,
    build_grid,
    knapp_fourier_mass,
    knapp_mass_fraction,
    knapp_wavepacket,
)
from bsquick.harness import GridPolicy
from bsquick.knapp import bump_profile, knapp_coefficients, smooth_step


def packet_grid(laplacian, epsilon, c0):
    region = RegionSpec(RegionShape.TUBE, epsilon=epsilon)
    return GridPolicy().knapp_grid(region, laplacian, 1.0, c0, 2)


def test_smooth_step():
    values = smooth_step(np.array([-1.0, 0.0, 0.5, 1.0, 2.0]))
    assert values == pytest.approx([0, 0, 0.5, 1, 1])


def test_bump_profile():
    values = bump_profile(np.array([0.0, -1.0, 1.5, 2.0, 3.0]))
    assert values[:2] == pytest.approx([1, 1])
    assert 0 < values[2] < 1
    assert values[3:] == pytest.approx([0, 0])


def test_packet_has_unit_norm(laplacian):
    grid = packet_grid(laplacian, 0.25, 1.0)
    spec = KnappSpec(epsilon=0.25, c0=1.0)
    packet = knapp_wavepacket(spec, grid, laplacian)
    assert packet.norm() == pytest.approx(1.0)


def test_cap_is_supported_near_the_shell(laplacian):
    epsilon, c0 = 0.25, 1.0
    grid = packet_grid(laplacian, epsilon, c0)
    spec = KnappSpec(epsilon=epsilon, c0=c0)
    packet = knapp_wavepacket(spec, grid, laplacian)
    spectrum = np.abs(scipy.fft.fftn(packet.values, norm="ortho"))
    support = spectrum > 1e-9 * spectrum.max()
    gap = np.abs(laplacian.on_grid(grid) - 1)
    assert np.all(gap[support] <= 6 * c0 * epsilon)


def test_packet_is_centered_at_origin(laplacian):
    grid = packet_grid(laplacian, 0.25, 1.0)
    spec = KnappSpec(epsilon=0.25, c0=1.0)
    packet = knapp_wavepacket(spec, grid, laplacian)
    peak = np.unravel_index(np.argmax(np.abs(packet.values)), grid.sizes)
    center = tuple((size - 1) // 2 for size in grid.sizes)
    assert peak == center


def test_fourier_mass_scaling(laplacian):
    epsilon = 0.2
    grid = packet_grid(laplacian, epsilon, 0.5)
    wide = knapp_fourier_mass(
        KnappSpec(epsilon=epsilon, c0=1.0), grid, laplacian
    )
    narrow = knapp_fourier_mass(
        KnappSpec(epsilon=epsilon, c0=0.5), grid, laplacian
    )
    assert narrow / wide == pytest.approx(0.5 ** 1.5, rel=0.03)


def test_under_resolved_cap_is_rejected(laplacian):
    grid = build_grid(2, [20.0, 20.0], [21, 21])
    with pytest.raises(ResolutionError) as error:
        knapp_wavepacket(KnappSpec(epsilon=0.1, c0=1.0), grid, laplacian)
    assert error.value.axis == 0
    assert error.value.samples < 8


def test_mass_concentrates_on_the_dual_tube(laplacian):
    epsilon, c0 = 0.1, 1.0
    grid = packet_grid(laplacian, epsilon, c0)
    spec = KnappSpec(epsilon=epsilon, c0=c0)
    packet = knapp_wavepacket(spec, grid, laplacian)
    assert knapp_mass_fraction(packet, epsilon, c0) >= 0.4


def test_custom_base_point(laplacian):
    symbol = FractionalSymbol(1.0)
    spec = KnappSpec(epsilon=0.25, c0=1.0, energy=2.0)
    assert spec.resolved_base_point(symbol, 2) == pytest.approx([2.0, 0.0])
    vertical = KnappSpec(epsilon=0.25, c0=1.0, base_point=(0.0, 1.0))
    grid = build_grid(2, [220.0, 220.0], [141, 141])
    coefficients = knapp_coefficients(vertical, grid, laplacian)
    k = round(1 / grid.frequency_spacing[1])
    assert coefficients[0, k] == pytest.approx(1.0)
    assert coefficients[k, 0] == 0.0


def test_cap_geometry():
    spec = KnappSpec(epsilon=0.04, c0=1.0)
    normal, tangential = spec.cap_half_widths()
    assert normal == pytest.approx(0.08)
    assert tangential == pytest.approx(0.4)
    with pytest.raises(PreconditionError):
        KnappSpec(epsilon=0.1, c0=0.0)
    assert math.isclose(spec.cap_scale, 0.04)
