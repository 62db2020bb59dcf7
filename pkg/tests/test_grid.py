import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.sparse import diags
from scipy.sparse.linalg import eigsh

from shakenlattice import ControlInfeasibleError, InvalidParameterError, build_config, well_spectrum
from shakenlattice.grid import (
    GridSpec,
    GridState,
    _kick,
    _kick_numpy,
    _potential_terms,
    angular_momentum,
    energy,
    imaginary_time_ground_state,
    map_controls,
    project_populations,
    read_snapshot,
    single_well_grid,
    split_step_evolve,
    write_snapshot,
    zero_controls,
)
from shakenlattice.harness.runs import make_schedule


@pytest.fixture(scope="module")
def setup():
    cfg = build_config(3.0)
    spec = single_well_grid(cfg, 64)
    return cfg, well_spectrum(cfg), spec, imaginary_time_ground_state(spec, cfg)


def periodic_ground_energy(V0, n):
    """Lowest eigenvalue of -1/2 d^2/dx^2 + V0 sin^2(kx) on one periodic cell (finite differences)."""
    cfg = build_config(V0)
    L = 2 * cfg.ell
    h = L / n
    x = -cfg.ell + h * np.arange(n)
    main = 1 / h**2 + V0 * np.sin(cfg.k * x) ** 2
    A = diags([main, np.full(n - 1, -0.5 / h**2), np.full(n - 1, -0.5 / h**2)], [0, -1, 1]).tolil()
    A[0, n - 1] = A[n - 1, 0] = -0.5 / h**2
    return eigsh(A.tocsc(), k=1, sigma=0.0, which="LM")[0][0]


@pytest.mark.parametrize("V0", [3.0, 30.0])
def test_ground_state_energy_matches_finite_differences(V0):
    cfg = build_config(V0)
    spec = single_well_grid(cfg, 64)
    gs = imaginary_time_ground_state(spec, cfg)
    e1, e2 = periodic_ground_energy(V0, 2000), periodic_ground_energy(V0, 4000)
    oracle = 2 * (4 * e2 - e1) / 3  # separable, Richardson-extrapolated
    assert energy(gs, _potential_terms(spec, cfg).static) == pytest.approx(oracle, abs=1e-7)


def test_ground_state_is_the_00_level(setup):
    cfg, sp, spec, gs = setup
    assert gs.norm() == pytest.approx(1, abs=1e-12)
    assert project_populations(gs, sp)["P00"] > 0.9999


def test_static_evolution_is_stationary(setup):
    cfg, sp, spec, gs = setup
    tr = split_step_evolve(gs, zero_controls(10.0), cfg, 10.0, 2.5e-3)
    assert abs(np.vdot(gs.psi, tr.final.psi) * spec.dA) ** 2 == pytest.approx(1, abs=1e-8)
    assert tr.norm_drift < 1e-10


def test_energy_conserved_without_drive(setup):
    cfg, sp, spec, gs = setup
    X, Y = spec.mesh()
    kicked = GridState(gs.psi * np.exp(0.7j * np.sin(cfg.k * X)), spec).normalized()
    V = _potential_terms(spec, cfg).static
    e0 = energy(kicked, V)
    tr = split_step_evolve(kicked, zero_controls(20.0), cfg, 20.0, 2.5e-3)
    assert energy(tr.final, V) == pytest.approx(e0, abs=1e-5)


@given(st.floats(-1, 1), st.floats(-1, 1))
def test_fused_kick_matches_numpy(cs, cb):
    cfg = build_config(3.0)
    spec = single_well_grid(cfg, 16)
    terms = _potential_terms(spec, cfg)
    rng = np.random.default_rng(0)
    psi = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    a, b = psi.copy(), psi.copy()
    _kick(a, terms, cs, cb)
    _kick_numpy(b, terms, cs, cb)
    assert np.allclose(a, b, atol=1e-13)


def test_forcing_is_second_derivative_of_trajectory(setup):
    cfg, sp, spec, gs = setup
    ctl = map_controls(make_schedule("polynomial", 100.0), sp, cfg)
    t = np.linspace(5, 95, 13)
    h = 1e-3
    fd = (ctl.r_x(t + h) - 2 * ctl.r_x(t) + ctl.r_x(t - h)) / h**2
    assert np.allclose(fd, ctl.r_ddot_x(t), atol=1e-5 * np.max(np.abs(fd)))
    assert np.allclose(ctl.V_rho(t), 2 * cfg.V0 * np.sin(ctl.rho(t)))


def test_infeasible_polarisation_rejected():
    cfg = build_config(3.0)
    with pytest.raises(ControlInfeasibleError):
        map_controls(make_schedule("piecewise", 0.5), well_spectrum(cfg), cfg)


def test_parity_selection_without_polarisation(setup):
    cfg, sp, spec, gs = setup
    sched = make_schedule("piecewise", 40.0)  # Omega_rho off until t_S = 30
    ctl = map_controls(sched, sp, cfg)
    tr = split_step_evolve(gs, ctl, cfg, 29.0, 2.5e-3, np.linspace(0, 29, 30),
                           lambda s: {"P01": project_populations(s, sp)["P01"]})
    assert np.max(tr.rows["P01"]) < 1e-4


def test_second_order_in_dt(setup):
    cfg, sp, spec, gs = setup
    ctl = map_controls(make_schedule("polynomial", 20.0), sp, cfg)
    ref = split_step_evolve(gs, ctl, cfg, 20.0, 6.25e-4).final.psi
    err = [np.sqrt(np.sum(np.abs(split_step_evolve(gs, ctl, cfg, 20.0, dt).final.psi - ref) ** 2) * spec.dA)
           for dt in (1e-2, 5e-3)]
    assert err[1] < 1e-4
    assert 3.5 < err[0] / err[1] < 4.5


def test_angular_momentum_of_circular_state(setup):
    cfg, sp, spec, gs = setup
    x, y = spec.axes()
    gx, gy = sp.evaluate(x), sp.evaluate(y)
    for sign in (1, -1):
        psi = (np.outer(gx[:, 1], gy[:, 0]) + sign * 1j * np.outer(gx[:, 0], gy[:, 1])) / np.sqrt(2)
        st_ = GridState(psi, spec).normalized()
        lz = angular_momentum(st_).value
        assert np.sign(lz) == sign and 0.9 <= abs(lz) <= 1.1
        pops = project_populations(st_, sp)
        # |-> = (|10> - i|01>)/sqrt(2) circulates clockwise
        assert pops["fidelity"] == pytest.approx(1.0 if sign == -1 else 0.0, abs=1e-6)


@given(st.sampled_from([8, 16, 32]), st.sampled_from([8, 16]), st.sampled_from([1, 3]), st.floats(0, 500))
def test_snapshot_round_trip(tmp_path_factory, nx, ny, wells, t):
    path = tmp_path_factory.mktemp("snap") / "field.shkl"
    rng = np.random.default_rng(nx * ny)
    spec = GridSpec(nx, ny, 2.0, wells, wells)
    psi = rng.normal(size=(nx, ny)) + 1j * rng.normal(size=(nx, ny))
    write_snapshot(path, GridState(psi, spec, t), {"tag": "x"})
    raw = path.read_bytes()
    assert raw[:4] == b"SHKL" and len(raw) == 32 + 16 * nx * ny
    back = read_snapshot(path)
    assert np.array_equal(back.psi, psi) and back.time == t and back.spec == spec


def test_snapshot_needs_square_domain(tmp_path):
    spec = GridSpec(16, 16, 2.0, 1, 3)
    with pytest.raises(InvalidParameterError):
        write_snapshot(tmp_path / "f.shkl", GridState(np.zeros((16, 16), complex), spec))


@pytest.mark.parametrize("n", [0, 12, 100])
def test_grid_size_validation(n):
    with pytest.raises(InvalidParameterError):
        GridSpec(n, 64, 1.0)


def test_spacing_rule():
    cfg = build_config(3.0)
    assert single_well_grid(cfg, 64).meets_spacing_rule()
    assert not single_well_grid(cfg, 32).meets_spacing_rule()
