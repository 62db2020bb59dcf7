"""Few-level models of a single shaken lattice site.

Basis order (|10>, |00>, |01>, |11>, |20>, |02>); the four-level models use the
first four.  hbar = 1.  All Hamiltonian builders accept a scalar or an array of
times and return (..., d, d) matrices so the integrator can precompute them.

The time-dependent models live in the interaction frame
U = diag(e^{-i w10 t}, e^{-i (w10 + wx) t}, e^{-i w10 t}, e^{-i w11 t}, e^{-i w20 t}, e^{-i w02 t})
with omega_y = omega_x and Omega_y = 0.
"""
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import IntegratorFailureError, InvalidParameterError

BASIS_4 = ("10", "00", "01", "11")
BASIS_6 = BASIS_4 + ("20", "02")

NORM_TOL = 1e-9
NORM_FAIL = 1e-6


@dataclass(frozen=True)
class LevelState:
    amplitudes: np.ndarray
    time: float = 0.0

    @property
    def dim(self):
        return self.amplitudes.size

    @property
    def basis(self):
        return BASIS_4 if self.dim == 4 else BASIS_6


def basis_state(label, dim=4):
    basis = BASIS_4 if dim == 4 else BASIS_6
    psi = np.zeros(dim, dtype=complex)
    psi[basis.index(label)] = 1.0
    return LevelState(psi, 0.0)


def minus_state(dim=4):
    psi = np.zeros(dim, dtype=complex)
    psi[0] = 1 / np.sqrt(2)
    psi[2] = -1j / np.sqrt(2)
    return psi


def plus_state(dim=4):
    return minus_state(dim).conj()


@dataclass(frozen=True)
class DriveTerms:
    """Shaking force along x reconstructed from an Omega_x envelope.

    The envelope g_x = Omega_x / (omega_d^2 gamma_1) is held fixed when the
    carrier omega_x is detuned from -omega_d.
    """

    omega_x_env: object  # callable t -> Omega_x(t)
    omega_x: float
    omega_d: float
    gamma1: float
    omega_y: float = None

    def g_x(self, t):
        return self.omega_x_env(t) / (self.omega_d**2 * self.gamma1)

    def f_x(self, t):
        t = np.asarray(t, dtype=float)
        return self.omega_x**2 * self.g_x(t) * np.cos(self.omega_x * t)

    def f_y(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))

    def g_y(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))


def _empty(t, dim):
    t = np.asarray(t, dtype=float)
    return t, np.zeros(t.shape + (dim, dim), dtype=complex)


def _hermitize(H):
    # fill the lower triangle from the upper one
    iu = np.triu_indices(H.shape[-1], 1)
    H[(..., iu[1], iu[0])] = np.conj(H[(..., iu[0], iu[1])])
    return H


def h4l_rwa(Omega_x, Omega_rho, Omega_y=0.0):
    """Resonant four-level Hamiltonian after the rotating-wave approximation.

    Arguments may be arrays of the same shape; the result has shape (..., 4, 4).
    """
    ox, orho, oy = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (Omega_x, Omega_rho, Omega_y)))
    H = np.zeros(ox.shape + (4, 4), dtype=complex)
    H[..., 0, 1] = ox / 2
    H[..., 0, 2] = orho / 2
    H[..., 0, 3] = -1j * oy / 2
    H[..., 1, 2] = -1j * oy / 2
    H[..., 2, 3] = ox / 2
    return _hermitize(H)


def _x_coupling(t, schedule, spectrum, omega_x):
    """gamma_1 f_x(t) = Omega_x (omega_x/omega_d)^2 cos(omega_x t)."""
    return schedule.omega_x(t) * (omega_x / spectrum.omega_d) ** 2 * np.cos(omega_x * t)


def h4l_detuned(t, schedule, spectrum, omega_x):
    """Four-level Hamiltonian before the RWA, for a carrier omega_x = omega_y.

    Keeps the counter-rotating terms and the |00> detuning -(omega_d + omega_x).
    """
    t, H = _empty(t, 4)
    wd = spectrum.omega_d
    fx = _x_coupling(t, schedule, spectrum, omega_x)
    half_rho = schedule.omega_rho(t) / 2
    H[..., 1, 1] = -(wd + omega_x)
    H[..., 0, 1] = fx * np.exp(-1j * omega_x * t)
    H[..., 0, 2] = half_rho
    H[..., 2, 3] = fx * np.exp(-1j * wd * t)
    H[..., 1, 3] = half_rho * np.exp(1j * (omega_x - wd) * t)
    return _hermitize(H)


def h6l(t, schedule, spectrum, omega_x):
    """Six-level extension with |20> and |02>.

    On top of :func:`h4l_detuned`, |10> couples to |20> through the dipole
    integral d1 = <2|x|1> and |11> couples to both |20> and |02> through the
    interference term with strength (Omega_rho/2) d2 / <0|sin kx|1>.
    """
    t, H = _empty(t, 6)
    H[..., :4, :4] = h4l_detuned(t, schedule, spectrum, omega_x)
    w = spectrum.omega_ij
    fx = _x_coupling(t, schedule, spectrum, omega_x)
    H[..., 0, 4] = spectrum.d1_integral / spectrum.gamma1 * fx * np.exp(1j * (w["10"] - w["20"]) * t)
    d2 = schedule.omega_rho(t) / 2 * spectrum.d2_integral / spectrum.sin_element
    H[..., 3, 4] = d2 * np.exp(-1j * (w["20"] - w["11"]) * t)
    H[..., 3, 5] = d2 * np.exp(-1j * (w["02"] - w["11"]) * t)
    # the lower triangle of the 4x4 block is already filled; redo the rest
    H[..., 4, 0] = np.conj(H[..., 0, 4])
    H[..., 4, 3] = np.conj(H[..., 3, 4])
    H[..., 5, 3] = np.conj(H[..., 3, 5])
    return H


def rwa_average(hamiltonian_fn, t, period, n=64):
    """Average of hamiltonian_fn over [t - period/2, t + period/2] (midpoint rule).

    With a slowly varying envelope this strips the e^{+-2 i omega_d t} terms and
    is how the RWA reduction is checked numerically.
    """
    s = t + period * ((np.arange(n) + 0.5) / n - 0.5)
    return np.mean(hamiltonian_fn(s), axis=0)


def hamiltonian(model, schedule, spectrum=None, omega_x=None):
    """Vectorized H(t) for ``model`` in {'4l_rwa', '4l_detuned', '6l'}."""
    if model == "4l_rwa":
        return lambda t: h4l_rwa(schedule.omega_x(t), schedule.omega_rho(t))
    if spectrum is None:
        raise InvalidParameterError(f"model {model!r} needs a well spectrum")
    if omega_x is None:
        omega_x = -spectrum.omega_d
    if model == "4l_detuned":
        return lambda t: h4l_detuned(t, schedule, spectrum, omega_x)
    if model == "6l":
        return lambda t: h6l(t, schedule, spectrum, omega_x)
    raise InvalidParameterError(f"unknown level model {model!r}")


@dataclass(frozen=True)
class LevelTrajectory:
    t: np.ndarray
    amplitudes: np.ndarray  # (len(t), dim)
    dt: float
    norm_drift: float

    def __len__(self):
        return self.t.size

    def __getitem__(self, i):
        return LevelState(self.amplitudes[i], float(self.t[i]))

    @property
    def final(self):
        return self[-1]

    def populations(self):
        return np.abs(self.amplitudes) ** 2

    def fidelity(self):
        return np.abs(self.amplitudes @ minus_state(self.amplitudes.shape[1]).conj()) ** 2

    def table(self):
        """Columns t, P10, P00, P01, P11[, P20, P02], fidelity."""
        basis = BASIS_4 if self.amplitudes.shape[1] == 4 else BASIS_6
        cols = {"t": self.t}
        pops = self.populations()
        for i, label in enumerate(basis):
            cols[f"P{label}"] = pops[:, i]
        cols["fidelity"] = self.fidelity()
        return cols


def _rk4_propagators(hamiltonian_fn, t0, h):
    """One-step RK4 matrices P_n with psi_{n+1} = P_n psi_n for steps t0[n] -> t0[n] + h[n]."""
    H1 = hamiltonian_fn(t0)
    H2 = hamiltonian_fn(t0 + h / 2)
    H3 = hamiltonian_fn(t0 + h)
    d = H1.shape[-1]
    eye = np.eye(d)
    hh = h[:, None, None]
    K1 = -1j * H1
    K2 = -1j * H2 @ (eye + hh / 2 * K1)
    K3 = -1j * H2 @ (eye + hh / 2 * K2)
    K4 = -1j * H3 @ (eye + hh * K3)
    return eye + hh / 6 * (K1 + 2 * K2 + 2 * K3 + K4)


def _time_grid(t_start, sample_times, dt):
    """Step boundaries that land exactly on every sample time."""
    edges = [np.array([t_start])]
    prev = t_start
    for ts in sample_times:
        if ts > prev:
            n = int(np.ceil((ts - prev) / dt - 1e-9))
            edges.append(np.linspace(prev, ts, n + 1)[1:])
            prev = ts
    grid = np.concatenate(edges)
    return grid


def _integrate(hamiltonian_fn, psi0, t_start, sample_times, dt, chunk=4096):
    grid = _time_grid(t_start, sample_times, dt)
    sample_idx = np.searchsorted(grid, sample_times)
    want = np.zeros(grid.size, dtype=bool)
    want[sample_idx] = True
    out = np.empty((sample_times.size, psi0.size), dtype=complex)
    psi = psi0.copy()
    k = 0
    if want[0]:
        out[k] = psi
        k += 1
    drift = 0.0
    for start in range(0, grid.size - 1, chunk):
        stop = min(start + chunk, grid.size - 1)
        P = _rk4_propagators(hamiltonian_fn, grid[start:stop], np.diff(grid[start : stop + 1]))
        for j in range(stop - start):
            psi = P[j] @ psi
            if want[start + j + 1]:
                out[k] = psi
                k += 1
        drift = max(drift, abs(np.linalg.norm(psi) - 1.0))
        if not np.isfinite(drift):
            break
    drift = max(drift, float(np.max(np.abs(np.linalg.norm(out, axis=1) - 1.0))))
    return out, drift


def evolve_levels(hamiltonian_fn, psi0, T, dt, sample_times=None, max_halvings=6):
    """Fixed-step RK4 from psi0.time to T.

    The step is halved until the norm drifts by less than 1e-9 over the run.
    Returns a :class:`LevelTrajectory` sampled at ``sample_times`` (default:
    start and end only).
    """
    if not isinstance(psi0, LevelState):
        psi0 = LevelState(np.asarray(psi0, dtype=complex), 0.0)
    amp = np.asarray(psi0.amplitudes, dtype=complex)
    if abs(np.linalg.norm(amp) - 1) > 1e-12:
        raise InvalidParameterError("initial state must have unit norm")
    if dt <= 0 or T <= psi0.time:
        raise InvalidParameterError(f"need dt > 0 and T > t0, got dt={dt}, T={T}, t0={psi0.time}")
    if sample_times is None:
        sample_times = np.array([psi0.time, T])
    sample_times = np.asarray(sample_times, dtype=float)
    if np.any(np.diff(sample_times) < 0) or sample_times[0] < psi0.time or sample_times[-1] > T + 1e-12:
        raise InvalidParameterError("sample times must be sorted and lie in [t0, T]")

    step = float(dt)
    for _ in range(max_halvings + 1):
        amps, drift = _integrate(hamiltonian_fn, amp, psi0.time, sample_times, step)
        if drift < NORM_TOL:
            return LevelTrajectory(sample_times, amps, step, drift)
        step /= 2
    step *= 2
    if drift > NORM_FAIL or not np.isfinite(drift):
        raise IntegratorFailureError(
            f"norm drift {drift:.2e} at dt={step:.3g}; try a smaller dt", details={"drift": drift, "dt": step}
        )
    warnings.warn(f"norm drift {drift:.2e} above {NORM_TOL:g} after {max_halvings} halvings", RuntimeWarning)
    return LevelTrajectory(sample_times, amps, step, drift)


def default_dt(schedule, omega_d=None, factor=0.01, n_samples=4001):
    """factor * min(1/omega_d, 1/max|Omega|)."""
    scale = max(schedule.max_abs(n_samples))
    bound = 1.0 / scale if scale > 0 else schedule.T
    if omega_d is not None:
        bound = min(bound, 1.0 / abs(omega_d))
    return factor * bound


def populations_and_fidelity(state):
    """Per-basis probabilities and |<state|->|^2."""
    amp = state.amplitudes if isinstance(state, LevelState) else np.asarray(state)
    basis = BASIS_4 if amp.size == 4 else BASIS_6
    pops = np.abs(amp) ** 2
    out = {f"P{label}": float(p) for label, p in zip(basis, pops)}
    out["fidelity"] = float(abs(np.vdot(minus_state(amp.size), amp)) ** 2)
    return out


def run_levels(schedule, model="4l_rwa", spectrum=None, omega_x=None, n_samples=201, dt=None):
    """Evolve |00> under ``model`` and return the sampled trajectory."""
    dim = 6 if model == "6l" else 4
    H = hamiltonian(model, schedule, spectrum, omega_x)
    if dt is None:
        wd = None if model == "4l_rwa" else spectrum.omega_d
        dt = default_dt(schedule, wd)
    t = np.linspace(0.0, schedule.T, n_samples)
    return evolve_levels(H, basis_state("00", dim), schedule.T, dt, sample_times=t)
