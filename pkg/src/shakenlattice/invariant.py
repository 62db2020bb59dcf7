"""Lewis-Riesenfeld invariant for the four-level RWA Hamiltonian with Omega_y = 0.

Basis order is (|10>, |00>, |01>, |11>).  The Hamiltonian is
H = (Omega_x/2) G1 + (Omega_rho/2) G2 and the invariant I = sum_i alpha_i G_i.
Given alpha_1, alpha_2 (and their time derivatives) everything else follows:
alpha_3 from the quadratic constraint, alpha_4 = C1 - alpha_2, and the couplings
Omega_x = -alpha_2'/alpha_3, Omega_rho = 2 alpha_1'/alpha_3.
"""
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .errors import (
    DegenerateConfigurationError,
    InvalidParameterError,
    InvariantDomainError,
    SingularityError,
)

RADICAND_TOL = 1e-12

G1 = np.array([[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
G2 = np.array([[0, 0, 1, 0], [0, 0, 0, 0], [1, 0, 0, 0], [0, 0, 0, 0]], dtype=complex)
G3 = np.array([[0, 0, 0, 1j], [0, 0, -1j, 0], [0, 1j, 0, 0], [-1j, 0, 0, 0]], dtype=complex)
G4 = np.array([[0, 0, 0, 0], [0, 0, 0, 1], [0, 0, 0, 0], [0, 1, 0, 0]], dtype=complex)
GENERATORS = (G1, G2, G3, G4)


@dataclass(frozen=True)
class InvariantConstants:
    C1: float = 10.0
    C2: float = 11.0
    xi: int = 1

    def __post_init__(self):
        if self.xi not in (1, -1):
            raise InvalidParameterError(f"xi must be +1 or -1, got {self.xi}")
        if self.C1**2 + 8 * self.C2 <= 0:
            raise InvalidParameterError("C1^2 + 8 C2 must be positive so that Q is real and nonzero")

    @property
    def Q(self):
        return float(np.sqrt(self.C1**2 + 8 * self.C2))

    @property
    def kappas(self):
        C1, Q = self.C1, self.Q
        return np.array([-C1 - Q, C1 - Q, -C1 + Q, C1 + Q]) / 2


@dataclass(frozen=True)
class InvariantTrajectory:
    """alpha_1(t), alpha_2(t) with first derivatives on [0, T].

    All callables must accept numpy arrays.  ``radicand`` and ``dalpha3`` are
    optional closed forms, as is ``gap(t, sign)`` = C1 + sign*Q - 2 alpha_2.
    ``breakpoints`` are interior times where the phase integrand is sharply
    peaked or non-smooth; quadrature is split there.
    Supply them when the generic expressions lose precision: the generic
    radicand cancels catastrophically wherever alpha_3 is small compared to
    C1, C2, and the gaps do the same near the endpoints.
    """

    alpha1: Callable
    alpha2: Callable
    dalpha1: Callable
    dalpha2: Callable
    constants: InvariantConstants
    T: float
    radicand: Optional[Callable] = None
    dalpha3: Optional[Callable] = None
    gap: Optional[Callable] = None
    breakpoints: tuple = ()
    n_check: int = 2001

    def __post_init__(self):
        if self.T <= 0:
            raise InvalidParameterError(f"T must be positive, got {self.T}")
        t = np.linspace(0.0, self.T, self.n_check)
        r = self.radicand_at(t)
        bad = np.flatnonzero(r < -RADICAND_TOL)
        if bad.size:
            raise InvariantDomainError(
                f"alpha_3 radicand negative ({r[bad[0]]:.3e}) at t={t[bad[0]]:.6g}", t=t[bad[0]]
            )

    def radicand_at(self, t):
        if self.radicand is not None:
            return np.asarray(self.radicand(t), dtype=float)
        a1, a2 = self.alpha1(t), self.alpha2(t)
        C = self.constants
        return 2 * C.C2 - (a1**2 + a2**2) + C.C1 * a2

    def gap_at(self, t, sign):
        if self.gap is not None:
            return np.asarray(self.gap(t, sign), dtype=float)
        C = self.constants
        return C.C1 + sign * C.Q - 2 * self.alpha2(t)

    def alpha4(self, t):
        return self.constants.C1 - self.alpha2(t)

    def alphas(self, t):
        """(alpha_1..alpha_4) stacked along the first axis."""
        return np.array([self.alpha1(t), self.alpha2(t), alpha3(t, self), self.alpha4(t)])

    def dalphas(self, t):
        return np.array([self.dalpha1(t), self.dalpha2(t), dalpha3(t, self), -self.dalpha2(t)])

    def invariant_matrix(self, t):
        a = self.alphas(t)
        return np.tensordot(a, np.array(GENERATORS), axes=(0, 0))


def alpha3(t, traj):
    """xi * sqrt(2 C2 - (alpha_1^2 + alpha_2^2) + C1 alpha_2).

    Radicands down to -1e-12 are clamped to zero; anything more negative means
    the trajectory is not admissible at that time.
    """
    t_arr = np.asarray(t, dtype=float)
    r = traj.radicand_at(t_arr)
    if np.any(r < -RADICAND_TOL):
        tt = np.atleast_1d(t_arr)
        idx = int(np.argmin(np.atleast_1d(r)))
        raise InvariantDomainError(
            f"alpha_3 radicand negative at t={tt[idx if tt.size > 1 else 0]:.6g}",
            t=float(tt[idx if tt.size > 1 else 0]),
        )
    return traj.constants.xi * np.sqrt(np.clip(r, 0.0, None))


def dalpha3(t, traj, h=None):
    """Time derivative of alpha_3: closed form if supplied, else chain rule, else
    a centred difference where alpha_3 vanishes."""
    if traj.dalpha3 is not None:
        return np.asarray(traj.dalpha3(t), dtype=float)
    t = np.asarray(t, dtype=float)
    C = traj.constants
    a1, a2 = traj.alpha1(t), traj.alpha2(t)
    rdot = -2 * a1 * traj.dalpha1(t) + (C.C1 - 2 * a2) * traj.dalpha2(t)
    a3 = alpha3(t, traj)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(a3 != 0, C.xi * rdot / (2 * np.abs(a3)), np.nan)
    if np.any(np.isnan(out)):
        h = 1e-6 * traj.T if h is None else h
        lo = np.clip(t - h, 0, traj.T)
        hi = np.clip(t + h, 0, traj.T)
        fd = (alpha3(hi, traj) - alpha3(lo, traj)) / (hi - lo)
        out = np.where(np.isnan(out), fd, out)
    return out


def _raw_couplings(t, traj):
    a3 = alpha3(t, traj)
    d1, d2 = traj.dalpha1(t), traj.dalpha2(t)
    with np.errstate(divide="ignore", invalid="ignore"):
        return -d2 / a3, 2 * d1 / a3, a3, d1, d2


def couplings_from_alphas(traj, t, deriv_tol=1e-12):
    """(Omega_x, Omega_rho) at ``t`` from the alpha trajectory.

    Where alpha_3 vanishes and both alpha derivatives vanish too (the scheme
    endpoints), the 0/0 is resolved by quadratic extrapolation from three
    one-sided interior samples.  A vanishing alpha_3 with a nonzero derivative
    is a genuine singularity.
    """
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    ox, orho, a3, d1, d2 = _raw_couplings(t, traj)
    zero = a3 == 0
    if np.any(zero):
        for i in np.flatnonzero(zero):
            if abs(d1[i]) > deriv_tol or abs(d2[i]) > deriv_tol:
                raise SingularityError(
                    f"alpha_3 = 0 with nonzero alpha derivative at t={t[i]:.6g}", t=float(t[i])
                )
            h = 1e-4 * traj.T
            direction = 1.0 if t[i] + 3 * h <= traj.T else -1.0
            ts = t[i] + direction * h * np.array([1.0, 2.0, 3.0])
            sx, sr, sa3, _, _ = _raw_couplings(ts, traj)
            if np.any(sa3 == 0):
                raise SingularityError(f"cannot resolve 0/0 limit at t={t[i]:.6g}", t=float(t[i]))
            # quadratic through the samples evaluated at offset 0: 3 f1 - 3 f2 + f3
            ox[i] = 3 * sx[0] - 3 * sx[1] + sx[2]
            orho[i] = 3 * sr[0] - 3 * sr[1] + sr[2]
    if scalar:
        return float(ox[0]), float(orho[0])
    return ox, orho


@dataclass(frozen=True)
class InvariantEigensystem:
    kappas: np.ndarray
    phis: np.ndarray  # columns are phi_1..phi_4

    def phi(self, n):
        return self.phis[:, n - 1]


def invariant_eigensystem(traj, t):
    """Eigenvalues and the closed-form eigenvectors of I(t) at a single time."""
    C = traj.constants
    C1, C2, Q, xi = C.C1, C.C2, C.Q, C.xi
    a1 = float(traj.alpha1(t))
    a2 = float(traj.alpha2(t))
    # closed-form gap and radicand where the trajectory supplies them: both
    # can be tiny differences of O(C1) numbers
    den_p = float(traj.gap_at(t, +1))
    den_m = -float(traj.gap_at(t, -1))
    if den_p <= 0 or den_m <= 0:
        raise DegenerateConfigurationError(
            f"B+- denominators not positive at t={t}: {den_p:.3e}, {den_m:.3e}"
        )
    Bp = np.sqrt(Q / den_p)
    Bm = np.sqrt(Q / den_m)
    r0 = 2 * C2 + (C1 - a2) * a2
    root = float(alpha3(t, traj))

    def D(sign):
        den = sign * 1j * a1 + root
        if den == 0:
            return 0j
        return 1j / Q * r0 / den

    Dp, Dm = D(+1), D(-1)
    phis = np.array(
        [
            [-Bp * Dm, -1 / (2 * Bp), Bp * Dm, 1 / (2 * Bp)],
            [-Bm * Dp, 1 / (2 * Bm), -Bm * Dp, 1 / (2 * Bm)],
            [Bm * Dm, -1 / (2 * Bm), -Bm * Dm, 1 / (2 * Bm)],
            [Bp * Dp, 1 / (2 * Bp), Bp * Dp, 1 / (2 * Bp)],
        ],
        dtype=complex,
    ).T
    phis = phis / np.linalg.norm(phis, axis=0)
    return InvariantEigensystem(kappas=C.kappas, phis=phis)


def chi_integrand(t, traj, sign):
    """d(chi_+-)/dt.

    The numerator bracket C1^2 + 4C2 +- C1 Q -+ 2(+-C1 + Q) alpha_2 + 2 alpha_2^2
    equals (C1 +- Q - 2 alpha_2)^2 / 2 because Q^2 = C1^2 + 8 C2, which cancels two
    powers of the cubic denominator.  The reduced form stays finite up to the
    endpoints where the full form is 0/0.
    """
    a1 = traj.alpha1(t)
    gap = traj.gap_at(t, sign)
    a3 = alpha3(t, traj)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = a1 * traj.dalpha2(t) / (gap * a3)
    return np.where(np.isfinite(val), val, 0.0)


def chi_integrand_unreduced(t, traj, sign):
    """The same integrand written without the algebraic reduction (reference only)."""
    C = traj.constants
    C1, C2, Q = C.C1, C.C2, C.Q
    a1, a2 = traj.alpha1(t), traj.alpha2(t)
    bracket = C1**2 + 4 * C2 + sign * C1 * Q - sign * 2 * (sign * C1 + Q) * a2 + 2 * a2**2
    a3 = alpha3(t, traj)
    return 2 * a1 * bracket * traj.dalpha2(t) / ((C1 + sign * Q - 2 * a2) ** 3 * a3)


@dataclass(frozen=True)
class LRPhases:
    t: np.ndarray
    chi_plus: np.ndarray
    chi_minus: np.ndarray

    @property
    def betas(self):
        """beta_1..beta_4 with shape (4, len(t))."""
        return np.array([-self.chi_plus, self.chi_minus, -self.chi_minus, self.chi_plus])


def lr_phases(traj, t_eval=None, abs_tol=1e-10, signs=(1, -1)):
    """Cumulative Lewis-Riesenfeld phases chi_+(t), chi_-(t).

    Each sub-interval [a, b] between consecutive ``t_eval`` points is mapped to
    t = a + (b - a) sin^2(theta), which smooths the half-integer power laws
    the integrand has at the scheme endpoints, and then integrated with
    adaptive Gauss-Kronrod (QUADPACK never samples the 0/0 endpoints).
    """
    if t_eval is None:
        t_eval = np.array([0.0, traj.T])
    t_eval = np.asarray(t_eval, dtype=float)
    if t_eval[0] != 0.0:
        t_eval = np.concatenate([[0.0], t_eval])
        drop_first = True
    else:
        drop_first = False
    out = {1: None, -1: None}
    for sign in signs:
        pieces = [0.0]
        for lo, hi in zip(t_eval[:-1], t_eval[1:]):
            inner = [p for p in traj.breakpoints if lo < p < hi]
            total = 0.0
            for a, b in zip([lo] + inner, inner + [hi]):
                def f(th, a=a, b=b, sign=sign):
                    return float(chi_integrand(a + (b - a) * np.sin(th) ** 2, traj, sign)) * (b - a) * np.sin(2 * th)

                # QUADPACK flags roundoff on the narrow peak next to a breakpoint
                # long after the result has converged; judge by the error estimate
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", integrate.IntegrationWarning)
                    val, err = integrate.quad(f, 0.0, np.pi / 2, epsabs=abs_tol, epsrel=1e-12, limit=400)
                if not np.isfinite(val):
                    raise SingularityError(f"chi integrand not integrable on [{a}, {b}]", t=a)
                if err > 1e-6 * max(1.0, abs(val)):
                    warnings.warn(f"LR phase on [{a:.6g}, {b:.6g}] uncertain by {err:.1e}", RuntimeWarning)
                total += val
            pieces.append(total)
        out[sign] = np.cumsum(pieces)
    sl = slice(1, None) if drop_first else slice(None)
    pick = lambda v: None if v is None else v[sl]
    return LRPhases(t=t_eval[sl], chi_plus=pick(out[1]), chi_minus=pick(out[-1]))


def verify_invariant(schedule, traj, n_samples=1000):
    """max_t || dI/dt + i [H, I] ||_F over interior sample times."""
    t = traj.T * (np.arange(n_samples) + 0.5) / n_samples
    a = traj.alphas(t)
    da = traj.dalphas(t)
    G = np.array(GENERATORS)
    I = np.einsum("in,ijk->njk", a, G)
    dI = np.einsum("in,ijk->njk", da, G)
    ox = schedule.omega_x(t)
    orho = schedule.omega_rho(t)
    H = 0.5 * (ox[:, None, None] * G1 + orho[:, None, None] * G2)
    res = dI + 1j * (H @ I - I @ H)
    return float(np.max(np.linalg.norm(res, axis=(1, 2))))
