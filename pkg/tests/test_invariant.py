import numpy as np
import pytest
from hypothesis import given, strategies as st

from shakenlattice import (
    InvalidParameterError,
    InvariantConstants,
    InvariantDomainError,
    InvariantTrajectory,
    invariant_eigensystem,
    lr_phases,
    piecewise_scheme,
    polynomial_scheme,
)
from shakenlattice.invariant import G1, G2, chi_integrand, chi_integrand_unreduced
from shakenlattice.levels import LevelState, evolve_levels, hamiltonian
from shakenlattice.schemes import final_phase


@pytest.fixture(scope="module")
def schemes():
    return {"polynomial": polynomial_scheme(50.0), "piecewise": piecewise_scheme(50.0)}


@given(st.floats(-20, 20), st.floats(0.5, 30))
def test_eigenvalues_depend_only_on_constants(C1, C2):
    c = InvariantConstants(C1, C2)
    k = c.kappas
    assert np.isclose(np.sum(k), 0, atol=1e-12 * c.Q)
    assert np.isclose(c.Q**2, C1**2 + 8 * C2)


def test_invariant_eigensystem_diagonalizes(schemes):
    for sched in schemes.values():
        tr = sched.trajectory
        for t in (5.0, 20.0, 44.0):
            eig = invariant_eigensystem(tr, t)
            I = tr.invariant_matrix(t)
            for n in range(1, 5):
                v = eig.phi(n)
                # near-degenerate stretches of the piecewise scheme cost a few digits
                assert np.linalg.norm(I @ v - eig.kappas[n - 1] * v) < 1e-9 * np.linalg.norm(I)
            assert np.allclose(eig.phis.conj().T @ eig.phis, np.eye(4), atol=1e-9)


def test_reduced_integrand_equals_unreduced(schemes):
    # away from t = T, where the unreduced form loses digits to the 0/0
    tr = schemes["polynomial"].trajectory
    t = np.linspace(2, 40, 30)
    for sign in (1, -1):
        assert np.allclose(chi_integrand(t, tr, sign), chi_integrand_unreduced(t, tr, sign), rtol=1e-7, atol=0)


def test_closed_form_final_phase(schemes):
    sched = schemes["polynomial"]
    ph = lr_phases(sched.trajectory)
    assert ph.chi_plus[-1] == pytest.approx(final_phase(sched.W, sched.constants), abs=1e-10)
    assert ph.chi_minus[-1] == pytest.approx(np.pi / 4, abs=1e-10)


@pytest.mark.parametrize("name,a,b", [("polynomial", 5.0, 45.0), ("piecewise", 5.0, 30.0),
                                      ("piecewise", 40.0, 48.0), ("piecewise", 5.0, 45.0)])
def test_lr_phase_matches_propagation(schemes, name, a, b):
    """An invariant eigenvector evolves into itself times exp(i beta_n)."""
    sched = schemes[name]
    tr = sched.trajectory
    betas = lr_phases(tr, t_eval=np.array([0.0, a, b])).betas
    H = hamiltonian("4l_rwa", sched)
    for n in (1, 2):
        psi = evolve_levels(H, LevelState(invariant_eigensystem(tr, a).phi(n), a), b, 0.005).final.amplitudes
        ov = np.vdot(invariant_eigensystem(tr, b).phi(n), psi)
        assert abs(ov) == pytest.approx(1, abs=1e-9)
        assert np.angle(ov) == pytest.approx(betas[n - 1][2] - betas[n - 1][1], abs=1e-8)


def test_generators_give_rwa_hamiltonian():
    from shakenlattice.levels import h4l_rwa

    assert np.allclose(0.5 * (0.3 * G1 + 0.7 * G2), h4l_rwa(0.3, 0.7))


def test_inadmissible_trajectory_rejected():
    c = InvariantConstants(10.0, 11.0)
    const = lambda v: (lambda t: np.full(np.shape(t), v, dtype=float))
    with pytest.raises(InvariantDomainError):
        InvariantTrajectory(const(10.0), const(0.0), const(0.0), const(0.0), c, 1.0)


def test_constants_validation():
    with pytest.raises(InvalidParameterError):
        InvariantConstants(1.0, 1.0, xi=0)
    with pytest.raises(InvalidParameterError):
        InvariantConstants(0.0, -1.0)
