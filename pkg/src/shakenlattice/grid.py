"""Full 2D Schroedinger dynamics in the lattice frame (split-operator FFT).

hbar = m = omega = 1.  The domain spans an integer number of lattice periods
in each direction and is periodic.  The lattice-frame Hamiltonian is

    H(t) = p^2/2 + V0 sin^2(kx) + V0 sin^2(ky) + r_x''(t) x + V_rho(t) sin(kx) sin(ky),

with r_y = 0.  The inertial force r_x'' x is not periodic, so it is applied in
the velocity gauge: phi = exp(i r_x'(t) x) psi obeys

    i dphi/dt = [(p - r_x'(t))^2/2 + V0 sin^2(kx) + V0 sin^2(ky) + V_rho sin(kx) sin(ky)] phi,

which is exact on a periodic domain and keeps Strang splitting second order.
Observables are evaluated on psi.  The interference term (period 4 ell) still
wraps across the domain edge; the edge sits on a barrier top, where the
wavefunction is small.
"""
import json
import struct
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.fft

from .errors import (
    ControlInfeasibleError,
    IntegratorFailureError,
    InvalidParameterError,
    NumericalFailureError,
)
from .lattice import well_spectrum

NORM_TOL = 1e-9
NORM_FAIL = 1e-6
WINDOW_ORDER = 8
SNAPSHOT_MAGIC = b"SHKL"
_HEADER = struct.Struct("<4sIIIdd")  # magic, nx, ny, reserved, half-width, time -> 32 bytes


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    ell: float
    wells_x: int = 1
    wells_y: int = 1

    def __post_init__(self):
        for n in (self.nx, self.ny):
            if n < 8 or n & (n - 1):
                raise InvalidParameterError(f"grid sizes must be powers of two >= 8, got {n}")
        if self.wells_x < 1 or self.wells_y < 1:
            raise InvalidParameterError("need at least one well per axis")

    @property
    def half_widths(self):
        return self.wells_x * self.ell, self.wells_y * self.ell

    @property
    def dx(self):
        return 2 * self.half_widths[0] / self.nx

    @property
    def dy(self):
        return 2 * self.half_widths[1] / self.ny

    @property
    def dA(self):
        return self.dx * self.dy

    def axes(self):
        hx, hy = self.half_widths
        return -hx + self.dx * np.arange(self.nx), -hy + self.dy * np.arange(self.ny)

    def mesh(self):
        x, y = self.axes()
        return np.meshgrid(x, y, indexing="ij")

    def wavenumbers(self):
        kx = 2 * np.pi * scipy.fft.fftfreq(self.nx, self.dx)
        ky = 2 * np.pi * scipy.fft.fftfreq(self.ny, self.dy)
        return kx, ky

    def meets_spacing_rule(self):
        return max(self.dx, self.dy) <= self.ell / 32 * (1 + 1e-12)


def single_well_grid(config, n=64):
    return GridSpec(n, n, config.ell, 1, 1)


def multi_well_grid(config, n=256, wells=3):
    return GridSpec(n, n, config.ell, wells, wells)


@dataclass
class GridState:
    psi: np.ndarray
    spec: GridSpec
    time: float = 0.0

    def norm(self):
        return float(np.sum(np.abs(self.psi) ** 2) * self.spec.dA)

    def normalized(self):
        return GridState(self.psi / np.sqrt(self.norm()), self.spec, self.time)

    def copy(self):
        return GridState(self.psi.copy(), self.spec, self.time)


# ---------------------------------------------------------------------------
# controls

@dataclass(frozen=True)
class ControlSignals:
    """Lab controls and the lattice-frame forcing derived from them."""

    r_x: Callable
    r_dot_x: Callable
    r_ddot_x: Callable
    rho: Callable
    V_rho: Callable
    g_x: Callable
    omega_x: float
    T: float

    def sample(self, t):
        t = np.asarray(t, dtype=float)
        return {"t": t, "r_x": self.r_x(t), "r_dot_x": self.r_dot_x(t), "r_ddot_x": self.r_ddot_x(t),
                "rho": self.rho(t), "V_rho": self.V_rho(t)}


def zero_controls(T):
    zero = lambda t: np.zeros_like(np.asarray(t, dtype=float))
    return ControlSignals(zero, zero, zero, zero, zero, zero, 0.0, T)


def map_controls(schedule, spectrum, config, omega_x=None, n_check=4001):
    """Shaking trajectory r_x(t) and polarisation phase rho(t) for a schedule.

    r_x = -Omega_x cos(omega_x t) / (omega_d^2 gamma_1); r_x' and r_x'' are the
    exact derivatives including the envelope terms.  V_rho = Omega_rho / (2 gamma_2)
    and rho = arcsin(V_rho / 2 V0).
    """
    wd, g1, g2, V0 = spectrum.omega_d, spectrum.gamma1, spectrum.gamma2, config.V0
    wx = -wd if omega_x is None else float(omega_x)
    scale = 1.0 / (wd**2 * g1)

    t = np.linspace(0.0, schedule.T, n_check)
    ratio = np.max(np.abs(schedule.omega_rho(t))) / (4 * V0 * g2)
    if ratio > 1:
        raise ControlInfeasibleError(
            f"|V_rho| would reach {ratio:.3f} x 2V0; increase V0 by at least a factor {ratio:.3f}",
            required_V0=V0 * ratio,
        )

    def g_x(t):
        return scale * schedule.omega_x(t)

    def r_x(t):
        t = np.asarray(t, dtype=float)
        return -scale * schedule.omega_x(t) * np.cos(wx * t)

    def r_dot_x(t):
        t = np.asarray(t, dtype=float)
        c, s = np.cos(wx * t), np.sin(wx * t)
        return -scale * (schedule.omega_x(t, 1) * c - wx * schedule.omega_x(t) * s)

    def r_ddot_x(t):
        t = np.asarray(t, dtype=float)
        c, s = np.cos(wx * t), np.sin(wx * t)
        om, dom, ddom = schedule.omega_x(t), schedule.omega_x(t, 1), schedule.omega_x(t, 2)
        return -scale * (ddom * c - 2 * wx * dom * s - wx**2 * om * c)

    def V_rho(t):
        return schedule.omega_rho(t) / (2 * g2)

    def rho(t):
        return np.arcsin(np.clip(V_rho(t) / (2 * V0), -1.0, 1.0))

    return ControlSignals(r_x, r_dot_x, r_ddot_x, rho, V_rho, g_x, wx, schedule.T)


@dataclass(frozen=True)
class _PotentialTerms:
    """V = static + b * sin(kx) sin(ky), kept as 1D factors."""

    vx: np.ndarray  # V0 sin^2(kx)
    vy: np.ndarray
    x: np.ndarray
    sx: np.ndarray  # sin(kx)
    sy: np.ndarray

    @property
    def static(self):
        return self.vx[:, None] + self.vy[None, :]

    @property
    def cross(self):
        return self.sx[:, None] * self.sy[None, :]

    def phase(self, cs, cb):
        return cs * self.static + cb * self.cross


def _potential_terms(spec, config):
    x, y = spec.axes()
    k, V0 = config.k, config.V0
    return _PotentialTerms(V0 * np.sin(k * x) ** 2, V0 * np.sin(k * y) ** 2, x, np.sin(k * x), np.sin(k * y))


def _kick_numpy(psi, terms, cs, cb):
    psi *= np.exp(-1j * terms.phase(cs, cb))


def _outer_multiply_numpy(a, ex, ey):
    a *= ex[:, None] * ey[None, :]


try:
    import numba

    @numba.njit(cache=True, fastmath=False)
    def _kick_kernel(psi, vx, vy, sx, sy, cs, cb):
        for i in range(psi.shape[0]):
            ai = cs * vx[i]
            bi = cb * sx[i]
            for j in range(psi.shape[1]):
                th = ai + cs * vy[j] + bi * sy[j]
                psi[i, j] *= complex(np.cos(th), -np.sin(th))

    @numba.njit(cache=True)
    def _outer_multiply(a, ex, ey):
        for i in range(a.shape[0]):
            for j in range(a.shape[1]):
                a[i, j] *= ex[i] * ey[j]

    def _kick(psi, terms, cs, cb):
        _kick_kernel(psi, terms.vx, terms.vy, terms.sx, terms.sy, cs, cb)

except ImportError:  # pragma: no cover
    _kick = _kick_numpy
    _outer_multiply = _outer_multiply_numpy


def lattice_frame_potential(t, x, y, controls, config):
    """V(t, x, y) on the given coordinates (broadcast), with the inertial force as a ramp."""
    k, V0 = config.k, config.V0
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    return (
        V0 * (np.sin(k * x) ** 2 + np.sin(k * y) ** 2)
        + controls.r_ddot_x(t) * x
        + controls.V_rho(t) * np.sin(k * x) * np.sin(k * y)
    )


# ---------------------------------------------------------------------------
# operators

def _kinetic_symbol(spec):
    kx, ky = spec.wavenumbers()
    return 0.5 * (kx[:, None] ** 2 + ky[None, :] ** 2)


def energy(state, potential):
    """<H> for a static potential field."""
    psi = state.psi
    kin = _kinetic_symbol(state.spec)
    phik = scipy.fft.fft2(psi)
    ek = np.sum(kin * np.abs(phik) ** 2) / psi.size
    ev = np.sum(np.asarray(potential) * np.abs(psi) ** 2)
    return float((ek + ev) / np.sum(np.abs(psi) ** 2))


def well_window(spec, center=(0.0, 0.0), half_width=None, order=WINDOW_ORDER):
    """Super-Gaussian window around a well; default half-width 0.9 ell."""
    hw = 0.9 * spec.ell if half_width is None else half_width
    X, Y = spec.mesh()
    return np.exp(-(((X - center[0]) / hw) ** order) - ((Y - center[1]) / hw) ** order)


def imaginary_time_ground_state(spec, config, window=None, initial=None,
                                stages=(0.1, 0.02, 0.005), tol=1e-10, max_steps=40000, check_every=10):
    """Ground state of the static lattice by imaginary-time split-operator steps.

    ``window`` (a field) is applied after every step, which pins the state to
    one well on multi-well domains.  Each stage runs until the energy changes by
    less than ``tol`` between checks; the final stage's dtau bias is O(dtau^2).
    """
    terms = _potential_terms(spec, config)
    V = terms.static
    kin = _kinetic_symbol(spec)
    if initial is None:
        X, Y = spec.mesh()
        psi = np.exp(-(X**2 + Y**2) / 2).astype(complex)
    else:
        psi = np.array(initial, dtype=complex)
    if window is not None:
        psi = psi * window
    state = GridState(psi, spec).normalized()
    history = []
    for dtau in stages:
        half = np.exp(-0.5 * dtau * V)
        full = np.exp(-dtau * kin)
        e_prev = np.inf
        converged = False
        for step in range(1, max_steps + 1):
            psi = half * scipy.fft.ifft2(full * scipy.fft.fft2(half * state.psi))
            if window is not None:
                psi = psi * window
            state = GridState(psi, spec).normalized()
            if step % check_every == 0:
                e = energy(state, V)
                history.append(e)
                if abs(e - e_prev) < tol:
                    converged = True
                    break
                e_prev = e
        if not converged:
            raise NumericalFailureError(
                f"imaginary-time evolution did not converge at dtau={dtau}", details={"energy_history": history}
            )
    return state


def _periodic_ground_1d(n, half_width, config):
    """Lowest eigenvector of the 1D periodic spectral Hamiltonian (dense)."""
    dx = 2 * half_width / n
    x = -half_width + dx * np.arange(n)
    kk = 2 * np.pi * scipy.fft.fftfreq(n, dx)
    F = scipy.fft.fft(np.eye(n), axis=0)
    T = (F.conj().T * (0.5 * kk**2)) @ F / n
    H = T.real + np.diag(config.V0 * np.sin(config.k * x) ** 2)
    w, v = np.linalg.eigh(H)
    g = v[:, 0]
    return g * np.sign(g[n // 2])


def delocalized_initial_state(spec, config, n_cell=64):
    """Tile the single-cell (q = 0 Bloch) ground state over the whole domain.

    The cell state is periodic, so its Fourier series evaluates it on any grid.
    The static Hamiltonian is separable, so the 2D state is a product.
    """
    g = _periodic_ground_1d(n_cell, spec.ell, config)
    coef = scipy.fft.fft(g) / n_cell
    q = 2 * np.pi * scipy.fft.fftfreq(n_cell, 2 * spec.ell / n_cell)
    x, y = spec.axes()

    def ev(u):
        return np.real(np.exp(1j * np.outer(u + spec.ell, q)) @ coef)

    return GridState((ev(x)[:, None] * ev(y)[None, :]).astype(complex), spec).normalized()


# ---------------------------------------------------------------------------
# real-time evolution

@dataclass
class GridTrajectory:
    t: np.ndarray
    rows: dict
    final: GridState
    norm_drift: float
    snapshots: list = field(default_factory=list)
    n_steps: int = 0

    def table(self):
        return {"t": self.t, **{k: np.asarray(v) for k, v in self.rows.items()}}


def _step_edges(t0, sample_times, dt):
    edges = [np.array([t0])]
    prev = t0
    for ts in sample_times:
        if ts > prev + 1e-12:
            n = int(np.ceil((ts - prev) / dt - 1e-9))
            edges.append(np.linspace(prev, ts, n + 1)[1:])
            prev = ts
    return np.concatenate(edges)


def split_step_evolve(state, controls, config, T, dt, sample_times=None, observe=None,
                      snapshot_times=(), chunk=8192):
    """Strang-split propagation from state.time to T.

    The potential and the shaking velocity of each step are evaluated at the
    step midpoint; both half-kicks of a step use the same potential, so
    consecutive half-kicks merge into one phase factor.  The state is carried in
    the velocity gauge and converted back before ``observe(GridState) -> dict``
    is called at every sample time.
    """
    spec = state.spec
    if T <= state.time or dt <= 0:
        raise InvalidParameterError(f"need T > t0 and dt > 0, got T={T}, t0={state.time}, dt={dt}")
    if sample_times is None:
        sample_times = np.array([state.time, T])
    sample_times = np.asarray(sample_times, dtype=float)
    snap_set = {float(s) for s in snapshot_times}
    all_marks = np.union1d(sample_times, np.asarray(sorted(snap_set), dtype=float))
    edges = _step_edges(state.time, all_marks[all_marks > state.time], dt)
    n_steps = edges.size - 1
    mark_idx = set(np.searchsorted(edges, all_marks[all_marks >= state.time]).tolist())

    terms = _potential_terms(spec, config)
    kx, ky = spec.wavenumbers()
    x_axis = spec.axes()[0]
    ky_cache = {}

    def kinetic_y(h):
        key = round(h, 15)
        if key not in ky_cache:
            ky_cache[key] = np.exp(-0.5j * h * ky**2)
        return ky_cache[key]

    def lattice_frame(psi, t):
        v = float(controls.r_dot_x(t))
        return psi if v == 0.0 else psi * np.exp(-1j * v * x_axis)[:, None]

    psi0 = state.psi.astype(complex, copy=True)
    v0 = float(controls.r_dot_x(state.time))
    psi = psi0 if v0 == 0.0 else psi0 * np.exp(1j * v0 * x_axis)[:, None]

    norm0 = float(np.sum(np.abs(psi) ** 2) * spec.dA)
    rows = {}
    t_out = []
    snaps = []
    drift = 0.0

    def record(i, psi):
        nonlocal drift
        t = edges[i]
        st = GridState(lattice_frame(psi, t).copy(), spec, float(t))
        nrm = float(np.sum(np.abs(psi) ** 2) * spec.dA)
        drift = max(drift, abs(nrm - norm0))
        if drift > NORM_FAIL:
            raise IntegratorFailureError(
                f"norm drift {drift:.2e} at t={t:.6g} (step {i}); reduce dt", details={"step": i, "drift": drift}
            )
        if np.any(np.isclose(sample_times, t, atol=1e-12, rtol=0)):
            t_out.append(float(t))
            if observe is not None:
                for key, val in observe(st).items():
                    rows.setdefault(key, []).append(val)
        if any(abs(t - s) < 1e-12 for s in snap_set):
            snaps.append(st)

    if 0 in mark_idx:
        record(0, psi)

    # half-kick still owed from the previous step, as (static, cross) coefficients
    owed = (0.0, 0.0)
    for c0 in range(0, n_steps, chunk):
        c1 = min(c0 + chunk, n_steps)
        h = np.diff(edges[c0 : c1 + 1])
        tm = edges[c0:c1] + h / 2
        b = controls.V_rho(tm) * h / 2
        vel = controls.r_dot_x(tm)
        for j in range(c1 - c0):
            i = c0 + j
            hh = h[j] / 2
            _kick(psi, terms, owed[0] + hh, owed[1] + b[j])
            phik = scipy.fft.fft2(psi, overwrite_x=True)
            _outer_multiply(phik, np.exp(-0.5j * h[j] * (kx - vel[j]) ** 2), kinetic_y(h[j]))
            psi = scipy.fft.ifft2(phik, overwrite_x=True)
            if not np.isfinite(psi[0, 0]):
                raise IntegratorFailureError(f"non-finite wavefunction at step {i}", details={"step": i})
            owed = (hh, b[j])
            if (i + 1) in mark_idx or i + 1 == n_steps:
                _kick(psi, terms, *owed)
                owed = (0.0, 0.0)
                record(i + 1, psi)

    final = GridState(lattice_frame(psi, edges[-1]), spec, float(edges[-1]))
    return GridTrajectory(np.array(t_out), rows, final, drift, snaps, n_steps)


# ---------------------------------------------------------------------------
# observables

def _cell_basis(spectrum, spec, center=(0.0, 0.0)):
    x, y = spec.axes()
    gx = spectrum.evaluate(x - center[0])  # (nx, 3)
    gy = spectrum.evaluate(y - center[1])
    return gx, gy


def overlaps(state, spectrum, center=(0.0, 0.0)):
    """c_ij = <Gamma_i(x) Gamma_j(y) | psi> for i, j in {0, 1, 2}."""
    gx, gy = _cell_basis(spectrum, state.spec, center)
    return gx.T @ state.psi @ gy * state.spec.dA


def project_populations(state, spectrum, center=(0.0, 0.0)):
    c = overlaps(state, spectrum, center)
    P = np.abs(c) ** 2
    out = {f"P{i}{j}": float(P[i, j]) for i in range(3) for j in range(3)}
    out["leakage"] = 1.0 - float(P[:2, :2].sum())
    out["fidelity"] = float(abs(c[1, 0] + 1j * c[0, 1]) ** 2 / 2)
    return out


def cell_population(state, center=(0.0, 0.0)):
    X, Y = state.spec.mesh()
    ell = state.spec.ell
    inside = (np.abs(X - center[0]) < ell) & (np.abs(Y - center[1]) < ell)
    return float(np.sum(np.abs(state.psi[inside]) ** 2) * state.spec.dA)


@dataclass(frozen=True)
class AngularMomentum:
    value: float
    window_norm: float
    warning: Optional[str] = None

    def __float__(self):
        return self.value


def angular_momentum(state, center=(0.0, 0.0), window=None):
    """<L_z> about ``center`` with spectral derivatives.

    On a single-cell domain the whole state is used; otherwise the state is
    multiplied by a super-Gaussian window around the well before differentiating.
    """
    spec = state.spec
    X, Y = spec.mesh()
    psi = state.psi
    if window is None and (spec.wells_x > 1 or spec.wells_y > 1):
        window = well_window(spec, center, half_width=spec.ell)
    if window is not None:
        psi = psi * window
    wn = float(np.sum(np.abs(psi) ** 2) * spec.dA) / max(state.norm(), 1e-300)
    kx, ky = spec.wavenumbers()
    phik = scipy.fft.fft2(psi)
    dpx = scipy.fft.ifft2(1j * kx[:, None] * phik)
    dpy = scipy.fft.ifft2(1j * ky[None, :] * phik)
    lpsi = -1j * ((X - center[0]) * dpy - (Y - center[1]) * dpx)
    val = float(np.real(np.vdot(psi, lpsi)) / np.real(np.vdot(psi, psi)))
    warn = None
    if wn < 0.5 and (spec.wells_x == 1 and spec.wells_y == 1):
        warn = f"windowed norm {wn:.3f} < 0.5; L_z estimate unreliable"
    return AngularMomentum(val, wn, warn)


def standard_observer(spectrum):
    """Trajectory row: P00, P10, P01, P11, leakage, fidelity, Lz."""

    def observe(state):
        pops = project_populations(state, spectrum)
        return {
            "P00": pops["P00"], "P10": pops["P10"], "P01": pops["P01"], "P11": pops["P11"],
            "leakage": pops["leakage"], "fidelity": pops["fidelity"],
            "Lz": angular_momentum(state).value,
        }

    return observe


TRAJECTORY_COLUMNS = ("t", "P00", "P10", "P01", "P11", "leakage", "fidelity", "Lz")


def simulate_single_well(schedule, config, n=64, dt=2.5e-3, omega_x=None, n_samples=101, spectrum=None,
                         snapshot_times=()):
    """Ground state -> driven evolution in one periodic lattice cell."""
    spectrum = well_spectrum(config) if spectrum is None else spectrum
    spec = single_well_grid(config, n)
    controls = map_controls(schedule, spectrum, config, omega_x)
    psi0 = imaginary_time_ground_state(spec, config)
    t = np.linspace(0.0, schedule.T, n_samples)
    return split_step_evolve(psi0, controls, config, schedule.T, dt, t, standard_observer(spectrum),
                             snapshot_times=snapshot_times)


# ---------------------------------------------------------------------------
# multi-well runs

def well_centers(spec):
    cx = 2 * spec.ell * (np.arange(spec.wells_x) - (spec.wells_x - 1) / 2)
    cy = 2 * spec.ell * (np.arange(spec.wells_y) - (spec.wells_y - 1) / 2)
    return cx, cy


def phase_map(state, center=(0.0, 0.0), probe=None):
    """|psi| arg(psi) with the global phase chosen so the branch cut through
    ``center`` runs horizontally (along the negative x direction)."""
    spec = state.spec
    x, y = spec.axes()
    px = center[0] + (spec.ell / 2 if probe is None else probe)
    i = int(np.argmin(np.abs(x - px)))
    j = int(np.argmin(np.abs(y - center[1])))
    rot = np.exp(-1j * np.angle(state.psi[i, j]))
    psi = state.psi * rot
    return np.abs(psi) * np.angle(psi)


@dataclass
class MultiWellResult:
    mode: str
    lz: np.ndarray  # (wells_x, wells_y)
    fidelity_minus: np.ndarray
    fidelity_plus: np.ndarray
    cell_population: np.ndarray
    leakage: float
    phase_map: np.ndarray
    trajectory: GridTrajectory

    def checkerboard_ok(self):
        s = np.sign(self.lz)
        return bool(np.all(s[1:, :] == -s[:-1, :]) and np.all(s[:, 1:] == -s[:, :-1]) and np.all(s != 0))


def multi_well_run(schedule, config, wells=3, mode="a", n=256, dt=2.5e-3, omega_x=None, n_samples=31,
                   spectrum=None, zero_drive=False):
    """3x3 (or wells x wells) run.

    mode 'a': ground state localised in the central well (windowed imaginary time);
    leakage = 1 - population of the central cell at T.
    mode 'b': atom delocalised over all wells; leakage = mean over wells of
    |cell population(T) - cell population(0)|.
    """
    if wells % 2 == 0:
        raise InvalidParameterError("wells must be odd so that a central well exists")
    spectrum = well_spectrum(config) if spectrum is None else spectrum
    spec = multi_well_grid(config, n, wells)
    controls = zero_controls(schedule.T) if zero_drive else map_controls(schedule, spectrum, config, omega_x)
    if mode == "a":
        psi0 = imaginary_time_ground_state(spec, config, window=well_window(spec))
    elif mode == "b":
        psi0 = delocalized_initial_state(spec, config)
        psi0 = imaginary_time_ground_state(spec, config, initial=psi0.psi, stages=(0.005,))
    else:
        raise InvalidParameterError(f"mode must be 'a' or 'b', got {mode!r}")

    cx, cy = well_centers(spec)
    p0 = np.array([[cell_population(psi0, (a, b)) for b in cy] for a in cx])

    def observe(st):
        return {"P_center": cell_population(st)}

    t = np.linspace(0.0, schedule.T, n_samples)
    traj = split_step_evolve(psi0, controls, config, schedule.T, dt, t, observe)
    final = traj.final
    pops = np.array([[cell_population(final, (a, b)) for b in cy] for a in cx])
    lz = np.array([[angular_momentum(final, (a, b)).value for b in cy] for a in cx])
    fm = np.zeros_like(pops)
    fp = np.zeros_like(pops)
    for i, a in enumerate(cx):
        for j, b in enumerate(cy):
            c = overlaps(final, spectrum, (a, b))
            fm[i, j] = abs(c[1, 0] + 1j * c[0, 1]) ** 2 / 2 / pops[i, j]
            fp[i, j] = abs(c[1, 0] - 1j * c[0, 1]) ** 2 / 2 / pops[i, j]
    mid = wells // 2
    if mode == "a":
        leakage = 1.0 - pops[mid, mid]
    else:
        leakage = float(np.mean(np.abs(pops - p0)))
    return MultiWellResult(mode, lz, fm, fp, pops, float(leakage), phase_map(final), traj)


# ---------------------------------------------------------------------------
# field snapshots

def write_snapshot(path, state, metadata=None):
    """Binary field dump plus a JSON sidecar (``path`` + '.json').

    Layout, little-endian: 32-byte header = b'SHKL', u32 nx, u32 ny,
    u32 reserved (0), f64 domain half-width (same on both axes), f64 time;
    then nx*ny (re, im) f64 pairs in row-major order, x index slowest.
    """
    spec = state.spec
    hx, hy = spec.half_widths
    if abs(hx - hy) > 1e-12 * hx:
        raise InvalidParameterError("snapshots require a square domain")
    header = _HEADER.pack(SNAPSHOT_MAGIC, spec.nx, spec.ny, 0, hx, state.time)
    body = np.ascontiguousarray(state.psi, dtype="<c16").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(body)
    side = {"nx": spec.nx, "ny": spec.ny, "ell": spec.ell, "wells_x": spec.wells_x, "wells_y": spec.wells_y,
            "half_width": hx, "time": state.time}
    side.update(metadata or {})
    with open(str(path) + ".json", "w") as fh:
        json.dump(side, fh, indent=2, default=float)


def read_snapshot(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, nx, ny, _, half, time = _HEADER.unpack_from(raw)
    if magic != SNAPSHOT_MAGIC:
        raise InvalidParameterError(f"{path}: not a field snapshot")
    psi = np.frombuffer(raw, dtype="<c16", offset=_HEADER.size).reshape(nx, ny).copy()
    try:
        with open(str(path) + ".json") as fh:
            side = json.load(fh)
        wells = side.get("wells_x", 1)
        ell = side.get("ell", half / wells)
    except FileNotFoundError:
        wells, ell = 1, half
    spec = GridSpec(nx, ny, ell, wells, wells)
    return GridState(psi, spec, time)
