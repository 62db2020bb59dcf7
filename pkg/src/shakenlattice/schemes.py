"""The two shipped pulse schedules and their boundary-condition checks.

Polynomial scheme: alpha_1 and alpha_2 are polynomials in s = t/T,
    alpha_1 = 1024 W s^5 (1-s)^5,
    alpha_2 = (C1 - Q)/2 + Q h(s),   h(s) = s^5 P(s)  (9th-order smoothstep),
and W is fixed by the final-phase condition.  Writing g = s(1-s), the alpha_3
radicand factorises as g^5 M(s) with
    M(s) = Q^2 P(s) P(1-s) - (1024 W)^2 g^5,
so the couplings reduce to
    Omega_x   = -630 Q g^{3/2} / (T sqrt(M)),
    Omega_rho = 10240 W (1 - 2s) g^{3/2} / (T sqrt(M)),
which are finite at the endpoints without any 0/0.

Piecewise scheme: a pi pulse in Omega_x on [0, t_S] followed by a pi/2 pulse in
Omega_rho on [t_S, T].
"""
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import Polynomial
from scipy import optimize

from .errors import InvalidParameterError, InvariantDomainError, SynthesisError
from .invariant import InvariantConstants, InvariantTrajectory, lr_phases

# psi(T) = i (cos b |10> + i sin b |01>) with b = beta_4(T), so |-> needs b = -pi/4
TARGET_BETA4 = -np.pi / 4
W_REFERENCE = -2.74
PIECEWISE_EPS = 1e-6

_P = Polynomial([126.0, -420.0, 540.0, -315.0, 70.0])
_S = Polynomial([0.0, 1.0])
_G = _S * (1 - _S)


@dataclass(frozen=True)
class PulseSchedule:
    """Omega_x(t), Omega_rho(t) with analytic first and second derivatives.

    ``omega_x_fn(t, n)`` returns the n-th time derivative (n = 0, 1, 2).
    """

    T: float
    omega_x_fn: Callable
    omega_rho_fn: Callable
    scheme_tag: str
    constants: InvariantConstants
    t_S: Optional[float] = None
    W: Optional[float] = None
    trajectory: Optional[InvariantTrajectory] = None
    meta: dict = field(default_factory=dict)

    def omega_x(self, t, n=0):
        return self.omega_x_fn(np.asarray(t, dtype=float), n)

    def omega_rho(self, t, n=0):
        return self.omega_rho_fn(np.asarray(t, dtype=float), n)

    def sample(self, t):
        t = np.asarray(t, dtype=float)
        return {
            "t": t,
            "omega_x": self.omega_x(t),
            "omega_rho": self.omega_rho(t),
            "d_omega_x": self.omega_x(t, 1),
            "d_omega_rho": self.omega_rho(t, 1),
        }

    def max_abs(self, n_samples=4001):
        t = np.linspace(0, self.T, n_samples)
        return float(np.max(np.abs(self.omega_x(t)))), float(np.max(np.abs(self.omega_rho(t))))

    def describe(self):
        d = {"scheme": self.scheme_tag, "T": self.T, "C1": self.constants.C1, "C2": self.constants.C2,
             "xi": self.constants.xi}
        if self.t_S is not None:
            d["t_S"] = self.t_S
        if self.W is not None:
            d["W"] = self.W
        d.update(self.meta)
        return d


# ---------------------------------------------------------------------------
# polynomial scheme

def _power_factor(g, dg, d2g, p):
    """g^p and its first two derivatives (in s)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        f0 = g**p
        f1 = p * g ** (p - 1) * dg
        f2 = p * (p - 1) * g ** (p - 2) * dg**2 + p * g ** (p - 1) * d2g
    return f0, f1, f2


class _PolynomialForms:
    """Closed forms for the polynomial scheme at fixed (C1, C2, W)."""

    def __init__(self, constants, W):
        self.c = constants
        self.W = W
        Q = constants.Q
        self.M = Q**2 * _P * _P(1 - _S) - (1024 * W) ** 2 * _G**5
        a1 = 1024 * W * _G**5
        a2 = (constants.C1 - Q) / 2 + Q * _S**5 * _P
        self._a1 = [a1.deriv(n) for n in range(5)]
        self._a2 = [a2.deriv(n) for n in range(5)]

    def M_min(self, n=4001):
        return float(np.min(self.M(np.linspace(0, 1, n))))

    # low orders in factored form: the expanded polynomials cancel near s = 1
    def alpha1(self, s, n=0):
        s = np.asarray(s, dtype=float)
        g = s * (1 - s)
        if n == 0:
            return 1024 * self.W * g**5
        if n == 1:
            return 5120 * self.W * g**4 * (1 - 2 * s)
        return self._a1[n](s)

    def alpha2(self, s, n=0):
        s = np.asarray(s, dtype=float)
        if n == 1:
            return 630 * self.c.Q * (s * (1 - s)) ** 4
        return self._a2[n](s)

    def gap(self, s, sign):
        # C1 + sign*Q - 2 alpha_2 = 2Q h(1-s) or -2Q h(s), using h(s) + h(1-s) = 1
        Q = self.c.Q
        if sign > 0:
            return 2 * Q * (1 - s) ** 5 * _P(1 - s)
        return -2 * Q * s**5 * _P(s)

    def radicand(self, s):
        return _G(s) ** 5 * self.M(s)

    def alpha3(self, s):
        return _G(s) ** 2.5 * np.sqrt(self.M(s))

    def dalpha3_ds(self, s):
        g = _G(s)
        M = self.M(s)
        return 2.5 * g**1.5 * _G.deriv()(s) * np.sqrt(M) + g**2.5 * self.M.deriv()(s) / (2 * np.sqrt(M))

    def coupling(self, s, prefactor, poly, n):
        """d^n/ds^n of prefactor * poly(s) * g^{3/2} * M^{-1/2}."""
        g, dg, d2g = _G(s), _G.deriv()(s), _G.deriv(2)(s)
        q0, q1, q2 = _power_factor(g, dg, d2g, 1.5)
        M, dM, d2M = self.M(s), self.M.deriv()(s), self.M.deriv(2)(s)
        m0 = M**-0.5
        m1 = -0.5 * M**-1.5 * dM
        m2 = 0.75 * M**-2.5 * dM**2 - 0.5 * M**-1.5 * d2M
        p0, p1, p2 = poly(s), poly.deriv()(s), poly.deriv(2)(s)
        if n == 0:
            return prefactor * p0 * q0 * m0
        if n == 1:
            return prefactor * (p1 * q0 * m0 + p0 * q1 * m0 + p0 * q0 * m1)
        if n == 2:
            with np.errstate(invalid="ignore"):
                return prefactor * (
                    p2 * q0 * m0 + p0 * q2 * m0 + p0 * q0 * m2
                    + 2 * (p1 * q1 * m0 + p1 * q0 * m1 + p0 * q1 * m1)
                )
        raise ValueError(f"derivative order {n} not available")


def polynomial_trajectory(T, W, constants):
    forms = _PolynomialForms(constants, W)
    return InvariantTrajectory(
        alpha1=lambda t: forms.alpha1(np.asarray(t) / T),
        alpha2=lambda t: forms.alpha2(np.asarray(t) / T),
        dalpha1=lambda t: forms.alpha1(np.asarray(t) / T, 1) / T,
        dalpha2=lambda t: forms.alpha2(np.asarray(t) / T, 1) / T,
        constants=constants,
        T=T,
        radicand=lambda t: forms.radicand(np.asarray(t) / T),
        dalpha3=lambda t: constants.xi * forms.dalpha3_ds(np.asarray(t) / T) / T,
        gap=lambda t, sign: forms.gap(np.asarray(t) / T, sign),
    )


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(160)


def final_phase(W, constants):
    """beta_4(T) = chi_+(T) for the polynomial ansatz with amplitude W.

    With the closed forms the chi_+ integrand collapses to
        322560 W s^6.5 (1-s)^1.5 / (P(1-s) sqrt(M(s)))
    and does not depend on T.  Substituting s = sin^2(theta) removes the
    half-integer powers, so fixed Gauss-Legendre converges to roundoff.
    """
    forms = _PolynomialForms(constants, W)
    if forms.M_min() <= 0:
        raise InvariantDomainError(f"alpha_3 not real for W={W}")
    theta = np.pi / 4 * (_GL_NODES + 1)
    sn, cs = np.sin(theta), np.cos(theta)
    s = sn**2
    f = 2 * sn**14 * cs**4 / (_P(1 - s) * np.sqrt(forms.M(s)))
    return float(322560 * W * np.pi / 4 * (_GL_WEIGHTS @ f))


@lru_cache(maxsize=16)
def solve_W(C1=10.0, C2=11.0, bracket=(-10.0, -0.1), n_scan=200, xtol=1e-12):
    """Roots W of beta_4(T; W) = TARGET_BETA4 in ``bracket``.

    Returns (chosen root, all roots).  Candidates where alpha_3 turns complex are
    skipped; each sign change is refined with Brent's method.
    """
    constants = InvariantConstants(C1, C2, 1)

    def f(W):
        return final_phase(W, constants) - TARGET_BETA4

    grid = np.linspace(bracket[0], bracket[1], n_scan)
    vals = []
    for W in grid:
        try:
            vals.append(f(W))
        except InvariantDomainError:
            vals.append(np.nan)
    roots = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if np.isfinite(fa) and np.isfinite(fb) and np.sign(fa) != np.sign(fb):
            roots.append(optimize.brentq(f, a, b, xtol=xtol))
    if not roots:
        raise SynthesisError(f"no sign change of beta_4(T) - target for W in {bracket}")
    chosen = min(roots, key=lambda w: abs(w - W_REFERENCE))
    return chosen, tuple(roots)


def polynomial_scheme(T, C1=10.0, C2=11.0):
    if T <= 0:
        raise InvalidParameterError(f"T must be positive, got {T}")
    constants = InvariantConstants(C1, C2, 1)
    W, roots = solve_W(C1, C2)
    forms = _PolynomialForms(constants, W)
    if forms.M_min() <= 0:
        raise SynthesisError("alpha_3 not real along the chosen trajectory")
    Q = constants.Q
    one = Polynomial([1.0])
    tilt = Polynomial([1.0, -2.0])

    def inside(t, fn):
        # controls are off outside [0, T]
        s = np.asarray(t, dtype=float) / T
        ok = (s >= 0) & (s <= 1)
        return np.where(ok, fn(np.where(ok, s, 0.5)), 0.0)

    def omega_x(t, n=0):
        return inside(t, lambda s: forms.coupling(s, -630 * Q / T, one, n) / T**n)

    def omega_rho(t, n=0):
        return inside(t, lambda s: forms.coupling(s, 10240 * W / T, tilt, n) / T**n)

    return PulseSchedule(
        T=float(T),
        omega_x_fn=omega_x,
        omega_rho_fn=omega_rho,
        scheme_tag="polynomial",
        constants=constants,
        W=W,
        trajectory=polynomial_trajectory(T, W, constants),
        meta={"W_roots": list(roots)},
    )


# ---------------------------------------------------------------------------
# piecewise scheme

def _pi_pulse(t, t0, dur, area, n):
    """area * 30 u^2 (u - 1)^2 / dur on [t0, t0 + dur], u = (t - t0)/dur; n-th derivative."""
    u = (np.asarray(t, dtype=float) - t0) / dur
    poly = 30 * area * (_S**2 * (_S - 1) ** 2)
    val = (poly.deriv(n)(u) if n else poly(u)) / dur ** (n + 1)
    return val


def _pulse_area(t, t0, dur, area):
    u = np.clip((np.asarray(t, dtype=float) - t0) / dur, 0.0, 1.0)
    poly = (30 * area * (_S**2 * (_S - 1) ** 2)).integ()
    return poly(u)


def piecewise_scheme(T, t_S=None, C1=10.0, C2=11.0, eps=PIECEWISE_EPS):
    if T <= 0:
        raise InvalidParameterError(f"T must be positive, got {T}")
    t_S = 0.75 * T if t_S is None else float(t_S)
    if not 0 < t_S < T:
        raise InvalidParameterError(f"t_S must lie in (0, T), got t_S={t_S}, T={T}")
    L = T - t_S

    def omega_x(t, n=0):
        t = np.asarray(t, dtype=float)
        return np.where((t >= 0) & (t <= t_S), _pi_pulse(t, 0.0, t_S, np.pi, n), 0.0)

    def omega_rho(t, n=0):
        t = np.asarray(t, dtype=float)
        return np.where((t >= t_S) & (t <= T), _pi_pulse(t, t_S, L, np.pi / 2, n), 0.0)

    constants = InvariantConstants(C1, C2, -1)
    return PulseSchedule(
        T=float(T),
        omega_x_fn=omega_x,
        omega_rho_fn=omega_rho,
        scheme_tag="piecewise",
        constants=constants,
        t_S=t_S,
        trajectory=piecewise_trajectory(T, t_S, constants, eps),
        meta={"eps": eps},
    )


def piecewise_trajectory(T, t_S, constants, eps=PIECEWISE_EPS):
    """alpha representation of the piecewise scheme at small positive eps.

    alpha_1 = eps (first pulse), eps cos(B/2) (second pulse);
    alpha_2 = (C1 - Q_eps cos A)/2, then (C1 + Q_eps)/2, with A, B the running
    pulse areas and Q_eps = sqrt(C1^2 + 8 C2 - 4 eps^2); xi = -1.
    """
    C1, Q = constants.C1, constants.Q
    Qe = np.sqrt(Q**2 - 4 * eps**2)
    L = T - t_S

    def A(t):
        return _pulse_area(t, 0.0, t_S, np.pi)

    def B(t):
        return _pulse_area(t, t_S, L, np.pi / 2)

    def ox(t):
        t = np.asarray(t, dtype=float)
        return np.where(t <= t_S, _pi_pulse(t, 0.0, t_S, np.pi, 0), 0.0)

    def orho(t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= t_S, _pi_pulse(t, t_S, L, np.pi / 2, 0), 0.0)

    def first(t):
        return np.asarray(t, dtype=float) <= t_S

    def alpha1(t):
        return np.where(first(t), eps, eps * np.cos(B(t) / 2))

    def dalpha1(t):
        return np.where(first(t), 0.0, -0.5 * eps * np.sin(B(t) / 2) * orho(t))

    def alpha2(t):
        return np.where(first(t), 0.5 * (C1 - Qe * np.cos(A(t))), 0.5 * (C1 + Qe))

    def dalpha2(t):
        return np.where(first(t), 0.5 * Qe * np.sin(A(t)) * ox(t), 0.0)

    dQ = 4 * eps**2 / (Q + Qe)  # Q - Qe without cancellation

    def gap(t, sign):
        # C1 + sign Q - 2 alpha_2, using 1 + sign cos A = 2 cos^2(A/2) or 2 sin^2(A/2)
        half = A(t) / 2
        if sign > 0:
            return np.where(first(t), dQ + 2 * Qe * np.cos(half) ** 2, dQ)
        return np.where(first(t), -dQ - 2 * Qe * np.sin(half) ** 2, -dQ - 2 * Qe)

    def radicand(t):
        return np.where(first(t), (Qe / 2) ** 2 * np.sin(A(t)) ** 2, eps**2 * np.sin(B(t) / 2) ** 2)

    def dalpha3(t):
        # alpha_3 = -(Qe/2) sin A, then -eps sin(B/2)
        return np.where(first(t), -0.5 * Qe * np.cos(A(t)) * ox(t), -0.5 * eps * np.cos(B(t) / 2) * orho(t))

    return InvariantTrajectory(
        alpha1=alpha1, alpha2=alpha2, dalpha1=dalpha1, dalpha2=dalpha2,
        constants=constants, T=T, radicand=radicand, dalpha3=dalpha3, gap=gap, breakpoints=(t_S,),
    )


# ---------------------------------------------------------------------------
# boundary checks

@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tol: float

    @property
    def passed(self):
        return abs(self.value) <= self.tol


@dataclass(frozen=True)
class BoundaryReport:
    checks: tuple

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def __str__(self):
        return "\n".join(f"{'ok  ' if c.passed else 'FAIL'} {c.name:32s} {c.value:+.3e}" for c in self.checks)


def boundary_check(schedule, tol=1e-10):
    T = schedule.T
    checks = []
    for name, fn in (("omega_x", schedule.omega_x), ("omega_rho", schedule.omega_rho)):
        for n in (0, 1):
            for label, t in (("0", 0.0), ("T", T)):
                checks.append(Check(f"d{n} {name}({label})", float(fn(t, n)), tol))
    if schedule.scheme_tag == "piecewise":
        tS = schedule.t_S
        for n in (0, 1):
            checks.append(Check(f"d{n} omega_x(t_S)", float(schedule.omega_x(tS, n)), tol))
            checks.append(Check(f"d{n} omega_rho(t_S)", float(schedule.omega_rho(tS, n)), tol))
        checks.append(Check("omega_rho = 0 before t_S",
                            float(np.max(np.abs(schedule.omega_rho(np.linspace(0, tS, 200, endpoint=False))))), tol))
        checks.append(Check("omega_x = 0 after t_S",
                            float(np.max(np.abs(schedule.omega_x(np.linspace(T, tS, 200, endpoint=False))))), tol))
    if schedule.scheme_tag == "polynomial":
        forms = _PolynomialForms(schedule.constants, schedule.W)
        C1, Q = schedule.constants.C1, schedule.constants.Q
        checks.append(Check("alpha_1(0)", float(forms.alpha1(0.0)), tol))
        checks.append(Check("alpha_1(T)", float(forms.alpha1(1.0)), tol))
        checks.append(Check("alpha_2(0) - (C1-Q)/2", float(forms.alpha2(0.0) - (C1 - Q) / 2), tol))
        checks.append(Check("alpha_2(T) - (C1+Q)/2", float(forms.alpha2(1.0) - (C1 + Q) / 2), tol))
        for n in range(1, 5):
            for label, s in (("0", 0.0), ("T", 1.0)):
                checks.append(Check(f"d{n} alpha_1({label})", float(forms.alpha1(s, n)) / T**n, tol))
                checks.append(Check(f"d{n} alpha_2({label})", float(forms.alpha2(s, n)) / T**n, tol))
    return BoundaryReport(tuple(checks))


def pulse_areas(schedule, n=20001):
    from scipy.integrate import quad

    T = schedule.T
    pts = [schedule.t_S] if schedule.t_S is not None else None
    ax = quad(lambda t: float(schedule.omega_x(t)), 0, T, points=pts, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    ar = quad(lambda t: float(schedule.omega_rho(t)), 0, T, points=pts, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    return ax, ar
