import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from shakenlattice import IntegratorFailureError, InvalidParameterError, build_config, well_spectrum
from shakenlattice.harness.runs import make_schedule
from shakenlattice.levels import (
    BASIS_4,
    LevelState,
    basis_state,
    evolve_levels,
    h4l_detuned,
    h4l_rwa,
    h6l,
    hamiltonian,
    minus_state,
    plus_state,
    rwa_average,
    run_levels,
)


@pytest.fixture(scope="module")
def spectrum():
    return well_spectrum(build_config(3.0))


def test_basis_conventions():
    assert BASIS_4 == ("10", "00", "01", "11")
    m, p = minus_state(), plus_state()
    assert np.vdot(m, p) == pytest.approx(0)
    assert np.allclose(np.abs(m) ** 2, [0.5, 0, 0.5, 0])


@pytest.mark.parametrize("omega0", [0.1, 0.3, 1.0])
def test_rabi_oscillation(omega0):
    H = lambda t: h4l_rwa(np.full(np.shape(t), omega0), np.zeros(np.shape(t)))
    t = np.linspace(0, 20, 41)
    traj = evolve_levels(H, basis_state("00"), 20.0, 0.01, sample_times=t)
    assert np.allclose(traj.populations()[:, 0], np.sin(omega0 * t / 2) ** 2, atol=1e-9)


@given(st.integers(0, 2**31 - 1), st.floats(0.5, 5.0))
def test_constant_hamiltonian_matches_expm(seed, T):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    H0 = (A + A.conj().T) / 4
    psi0 = rng.normal(size=4) + 1j * rng.normal(size=4)
    psi0 /= np.linalg.norm(psi0)
    traj = evolve_levels(lambda t: np.broadcast_to(H0, np.shape(t) + (4, 4)), psi0, T, 0.002)
    assert np.allclose(traj.final.amplitudes, expm(-1j * H0 * T) @ psi0, atol=1e-8)
    assert traj.norm_drift < 1e-9


@pytest.mark.parametrize("scheme", ["polynomial", "piecewise"])
@pytest.mark.parametrize("T", [100.0, 500.0])
def test_rwa_model_transfers_exactly(scheme, T):
    traj = run_levels(make_schedule(scheme, T), "4l_rwa", n_samples=51)
    assert traj.fidelity()[-1] > 1 - 1e-6
    if scheme == "piecewise":
        # the path never touches |11>
        assert np.max(traj.populations()[:, 3]) < 1e-10


def test_time_reversal():
    """Evolving forward then backward with -H(T - t) returns the initial state."""
    sched = make_schedule("polynomial", 100.0)
    H = hamiltonian("4l_rwa", sched)
    fwd = evolve_levels(H, basis_state("00"), 100.0, 0.01).final.amplitudes
    back = evolve_levels(lambda t: -H(100.0 - t), fwd, 100.0, 0.01).final.amplitudes
    assert np.allclose(back, basis_state("00").amplitudes, atol=1e-9)


def test_detuned_model_averages_to_rwa(spectrum):
    sched = make_schedule("polynomial", 500.0)
    H = lambda t: h4l_detuned(t, sched, spectrum, -spectrum.omega_d)
    t = 200.0
    avg = rwa_average(H, t, 2 * np.pi / spectrum.omega_d, n=256)
    # in the resonant frame the |00> detuning vanishes; what survives the average
    # is the envelope change over one period, about 1% at T = 500
    ref = h4l_rwa(sched.omega_x(t), sched.omega_rho(t))
    assert np.allclose(avg, ref, atol=2e-2 * np.max(np.abs(ref)))
    assert abs(avg[1, 1]) < 1e-12


@pytest.mark.parametrize("fn", [h4l_detuned, h6l])
def test_hamiltonians_hermitian(fn, spectrum):
    sched = make_schedule("polynomial", 100.0)
    H = fn(np.linspace(0, 100, 17), sched, spectrum, -spectrum.omega_d * 1.02)
    assert np.allclose(H, np.conj(np.swapaxes(H, -1, -2)))


def test_six_level_block_contains_four_level(spectrum):
    sched = make_schedule("piecewise", 100.0)
    t = np.linspace(1, 99, 9)
    assert np.allclose(h6l(t, sched, spectrum, -spectrum.omega_d)[..., :4, :4],
                       h4l_detuned(t, sched, spectrum, -spectrum.omega_d))


def test_parity_selection_without_rho(spectrum):
    """Shaking along x alone never populates |01>."""
    sched = make_schedule("piecewise", 100.0)
    H = lambda t: h6l(t, sched, spectrum, -spectrum.omega_d)
    t = np.linspace(0, 74, 38)  # Omega_rho is off before t_S = 75
    traj = evolve_levels(H, basis_state("00", 6), 74.0, 0.01, sample_times=t)
    assert np.max(traj.populations()[:, 2]) < 1e-12


def test_models_converge_with_T(spectrum):
    fids = {T: run_levels(make_schedule("polynomial", T), "4l_detuned", spectrum, -spectrum.omega_d,
                          n_samples=2).fidelity()[-1] for T in (100.0, 500.0)}
    assert fids[500.0] > fids[100.0] > 0.99


def test_dt_halving_converges(spectrum):
    sched = make_schedule("polynomial", 100.0)
    f = [run_levels(sched, "6l", spectrum, -spectrum.omega_d, n_samples=2, dt=dt).fidelity()[-1]
         for dt in (0.01, 0.005)]
    assert abs(f[0] - f[1]) < 1e-7


def test_rejects_bad_inputs():
    H = lambda t: h4l_rwa(np.zeros(np.shape(t)), np.zeros(np.shape(t)))
    with pytest.raises(InvalidParameterError):
        evolve_levels(H, np.array([1, 1, 0, 0], dtype=complex), 1.0, 0.01)
    with pytest.raises(InvalidParameterError):
        evolve_levels(H, basis_state("00"), 1.0, -0.01)
    with pytest.raises(InvalidParameterError):
        hamiltonian("9l", make_schedule("polynomial", 10.0), None)


def test_integrator_failure_reported():
    # a stiff constant Hamiltonian far beyond the RK4 stability limit
    H = lambda t: np.broadcast_to(np.diag([0, 1e4, 0, 0]).astype(complex), np.shape(t) + (4, 4))
    psi = np.ones(4, dtype=complex) / 2
    with pytest.raises(IntegratorFailureError):
        evolve_levels(H, psi, 1.0, 0.1, max_halvings=1)
