import numpy as np
import pytest
from hypothesis import given, strategies as st

from shakenlattice import (
    InvalidParameterError,
    boundary_check,
    couplings_from_alphas,
    piecewise_scheme,
    polynomial_scheme,
    pulse_areas,
    solve_W,
    verify_invariant,
)
from shakenlattice.schemes import TARGET_BETA4, final_phase


@pytest.fixture(scope="module")
def poly100():
    return polynomial_scheme(100.0)


@pytest.fixture(scope="module")
def piece100():
    return piecewise_scheme(100.0)


def test_W_root(poly100):
    W, roots = solve_W(10.0, 11.0)
    assert -2.75 <= W <= -2.73
    assert poly100.W == W
    assert final_phase(W, poly100.constants) == pytest.approx(TARGET_BETA4, abs=1e-12)


def test_final_phase_quadrature_converged(poly100):
    from scipy.integrate import quad

    # direct quadrature of the same closed-form integral as an independent check
    from shakenlattice.schemes import _P, _PolynomialForms

    forms = _PolynomialForms(poly100.constants, poly100.W)
    f = lambda s: s**6.5 * (1 - s) ** 1.5 / (_P(1 - s) * np.sqrt(forms.M(s)))
    direct = 322560 * poly100.W * quad(f, 0, 1, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    assert final_phase(poly100.W, poly100.constants) == pytest.approx(direct, abs=1e-10)


@pytest.mark.parametrize("name", ["poly100", "piece100"])
def test_boundary_conditions(name, request):
    report = boundary_check(request.getfixturevalue(name))
    assert report.passed, str(report)


def test_piecewise_areas(piece100):
    ax, ar = pulse_areas(piece100)
    assert ax == pytest.approx(np.pi, abs=1e-10)
    assert ar == pytest.approx(np.pi / 2, abs=1e-10)


@given(T=st.floats(10.0, 1000.0), frac=st.floats(0.1, 0.9))
def test_piecewise_areas_any_split(T, frac):
    sched = piecewise_scheme(T, frac * T)
    ax, ar = pulse_areas(sched)
    assert abs(ax - np.pi) < 1e-9 and abs(ar - np.pi / 2) < 1e-9
    t = np.linspace(0, T, 501)
    assert np.all(sched.omega_rho(t[t < frac * T]) == 0)
    assert np.all(sched.omega_x(t[t > frac * T]) == 0)


@given(T=st.floats(20.0, 800.0))
def test_polynomial_scales_with_T(T):
    # Omega(t) T depends on t/T only
    ref = polynomial_scheme(100.0)
    sched = polynomial_scheme(T)
    s = np.linspace(0.01, 0.99, 17)
    assert np.allclose(sched.omega_x(s * T) * T, ref.omega_x(s * 100.0) * 100.0, rtol=1e-10, atol=1e-10)
    assert np.allclose(sched.omega_rho(s * T) * T, ref.omega_rho(s * 100.0) * 100.0, rtol=1e-10, atol=1e-10)


@pytest.mark.parametrize("name", ["poly100", "piece100"])
def test_couplings_off_outside_window(name, request):
    sched = request.getfixturevalue(name)
    t = np.array([-5.0, -1e-9, 100 + 1e-9, 120.0])
    assert np.all(sched.omega_x(t) == 0) and np.all(sched.omega_rho(t) == 0)


@pytest.mark.parametrize("name", ["poly100", "piece100"])
def test_derivatives_match_finite_differences(name, request):
    sched = request.getfixturevalue(name)
    t = np.array([3.0, 40.0, 60.0, 99.5])
    h = 1e-4
    for fn in (sched.omega_x, sched.omega_rho):
        for n in (0, 1):
            fd = (fn(t + h, n) - fn(t - h, n)) / (2 * h)
            assert np.allclose(fd, fn(t, n + 1), atol=1e-7)


@pytest.mark.parametrize("name", ["poly100", "piece100"])
def test_couplings_recovered_from_invariant(name, request):
    sched = request.getfixturevalue(name)
    t = np.linspace(0, 100, 801)[1:-1]
    ox, orho = couplings_from_alphas(sched.trajectory, t)
    assert np.allclose(ox, sched.omega_x(t), atol=1e-8)
    assert np.allclose(orho, sched.omega_rho(t), atol=1e-8)


@pytest.mark.parametrize("name", ["poly100", "piece100"])
def test_invariant_residual(name, request):
    sched = request.getfixturevalue(name)
    assert verify_invariant(sched, sched.trajectory, 1000) < 1e-8


@pytest.mark.parametrize("bad", [dict(T=0.0), dict(T=-3.0), dict(T=10.0, t_S=10.0), dict(T=10.0, t_S=-1.0)])
def test_piecewise_rejects_bad_times(bad):
    with pytest.raises(InvalidParameterError):
        piecewise_scheme(**bad)


def test_polynomial_rejects_bad_time():
    with pytest.raises(InvalidParameterError):
        polynomial_scheme(0.0)
