import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import eigh_tridiagonal

from shakenlattice import InvalidParameterError, build_config, well_spectrum


def fd_levels(V0, n=6000, count=3):
    """Second-order finite differences on the Dirichlet well, Richardson-extrapolated."""
    cfg = build_config(V0)

    def levels(m):
        x = np.linspace(-cfg.ell, cfg.ell, m + 2)[1:-1]
        h = x[1] - x[0]
        diag = 1 / h**2 + V0 * np.sin(cfg.k * x) ** 2
        off = np.full(m - 1, -0.5 / h**2)
        return eigh_tridiagonal(diag, off, select="i", select_range=(0, count - 1))[0]

    coarse, fine = levels(n), levels(2 * n + 1)  # fine grid halves the spacing
    return (4 * fine - coarse) / 3


@pytest.mark.parametrize("V0", [2.0, 3.0, 5.0])
def test_energies_match_finite_difference(V0):
    sp = well_spectrum(build_config(V0))
    assert np.allclose(sp.energies[:3], fd_levels(V0), atol=1e-7)


def test_reference_values_at_depth_three():
    sp = well_spectrum(build_config(3.0))
    assert sp.omega_d == pytest.approx(0.90857, abs=1e-4)
    assert sp.gamma1 == pytest.approx(0.74126, abs=1e-4)
    assert sp.gamma2 == pytest.approx(0.08313, abs=1e-4)


@pytest.mark.parametrize("V0", [100.0, 400.0])
def test_harmonic_limit(V0):
    sp = well_spectrum(build_config(V0))
    k = 1 / np.sqrt(2 * V0)
    assert sp.omega_d == pytest.approx(1 - 1 / (4 * V0), abs=1e-5)
    assert sp.gamma1 == pytest.approx(1 / np.sqrt(2), rel=2 / V0)
    assert sp.gamma2 * 4 * V0 == pytest.approx(1, rel=1e-3)
    assert sp.sin_element == pytest.approx(k / np.sqrt(2), rel=1e-3)


@given(st.floats(1.5, 12.0))
def test_spectrum_structure(V0):
    sp = well_spectrum(build_config(V0))
    assert np.all(np.diff(sp.energies[:3]) > 0)
    assert 0 < sp.omega_d < 1.0
    assert sp.gamma1 > 0 and sp.gamma2 > 0
    norms = np.sum(sp.gamma_fns**2, axis=1) * sp.dx
    assert np.allclose(norms, 1, atol=1e-8)
    # ground and second excited states even, first excited odd
    g = sp.gamma_fns
    assert np.allclose(g[0], g[0][::-1], atol=1e-8)
    assert np.allclose(g[1], -g[1][::-1], atol=1e-8)
    assert np.allclose(g[2], g[2][::-1], atol=1e-8)


def test_deeper_lattice_is_more_harmonic():
    w = [well_spectrum(build_config(V0)).omega_d for V0 in (2, 3, 5, 10)]
    assert np.all(np.diff(w) > 0)


@pytest.mark.parametrize("bad", [0.0, -1.0, np.nan, np.inf])
def test_rejects_bad_depth(bad):
    with pytest.raises(InvalidParameterError):
        build_config(bad)
