"""Figure data sets: per-point files, summary CSVs, PNGs and the manifest."""
import json
import logging
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from ..grid import write_snapshot
from . import plotting
from .artifacts import Manifest, read_csv, write_csv, write_json
from .runs import controls_table, couplings_table, run_multi_well, run_point

log = logging.getLogger(__name__)

FIGURES = ("couplings", "controls", "populations", "fidelity_vs_T", "resonance", "phase_map")


def _fmt_key(v):
    return f"{v:g}" if isinstance(v, float) else str(v)


def _point_name(kind, **kw):
    return kind + "_" + "_".join(f"{k}={_fmt_key(v)}" for k, v in kw.items())


def _common(cfg):
    return {"C1": cfg.C1, "C2": cfg.C2, "t_S_fraction": cfg.t_S_fraction}


def _point_job(args):
    kwargs = args
    try:
        return {"status": "ok", **run_point(**kwargs)}
    except Exception as exc:  # recorded per point, sweep continues
        return {"status": "error", "error": f"{type(exc).__name__}: {exc}", "traceback": traceback.format_exc()}


def _run_points(cfg, jobs, out_dir, manifest):
    """Run ``jobs`` (name -> run_point kwargs), reusing per-point files whose config hash matches."""
    results = {}
    todo = {}
    h = cfg.hash()
    for name, kwargs in jobs.items():
        meta = out_dir / "points" / f"{name}.json"
        if meta.exists():
            doc = json.loads(meta.read_text())
            if doc.get("config_hash") == h and doc.get("status") == "ok":
                results[name] = {"status": "ok", "summary": doc["summary"],
                                 "table": read_csv(out_dir / "points" / f"{name}.csv")}
                continue
        todo[name] = kwargs
    if todo:
        names = list(todo)
        if cfg.workers > 1 and len(names) > 1:
            with ProcessPoolExecutor(cfg.workers) as pool:
                outs = list(pool.map(_point_job, [todo[n] for n in names]))
        else:
            outs = [_point_job(todo[n]) for n in names]
        for name, res in zip(names, outs):
            doc = {"config_hash": h, "status": res["status"], "point": todo[name]}
            if res["status"] == "ok":
                manifest.add_file(write_csv(out_dir / "points" / f"{name}.csv", res["table"]))
                doc["summary"] = res["summary"]
            else:
                doc["error"] = res["error"]
                log.warning("point %s failed: %s", name, res["error"])
            manifest.add_file(write_json(out_dir / "points" / f"{name}.json", doc))
            results[name] = res
    for name in jobs:
        res = results[name]
        p = out_dir / "points"
        if (p / f"{name}.csv").exists():
            manifest.add_file(p / f"{name}.csv")
        if (p / f"{name}.json").exists():
            manifest.add_file(p / f"{name}.json")
        manifest.add_point(name=name, status=res["status"], error=res.get("error"))
    return results


def _summary_rows(results, keys):
    rows = {k: [] for k in keys}
    for res in results.values():
        if res["status"] != "ok":
            continue
        for k in keys:
            rows[k].append(res["summary"].get(k, np.nan))
    return {k: np.array(v) for k, v in rows.items()}


def _sort_rows(rows, by):
    order = np.lexsort(tuple(rows[k] for k in reversed(by)))
    return {k: v[order] for k, v in rows.items()}


def figure_couplings(cfg, out_dir, manifest):
    tables = {}
    for scheme in cfg.schemes:
        tables[scheme] = couplings_table(scheme, cfg.T, **_common(cfg))
        manifest.add_file(write_csv(out_dir / f"couplings_{scheme}.csv", tables[scheme]))
        manifest.add_point(name=f"couplings_{scheme}", status="ok")
    if cfg.render:
        manifest.add_file(plotting.couplings(tables, out_dir / "couplings.png"))


def figure_controls(cfg, out_dir, manifest):
    tables = {}
    for scheme in cfg.schemes:
        try:
            tables[scheme] = controls_table(scheme, cfg.T, cfg.V0, **_common(cfg))
        except Exception as exc:
            manifest.add_point(name=f"controls_{scheme}", status="error", error=str(exc))
            continue
        manifest.add_file(write_csv(out_dir / f"controls_{scheme}.csv", tables[scheme]))
        manifest.add_point(name=f"controls_{scheme}", status="ok")
    if cfg.render and tables:
        manifest.add_file(plotting.controls(tables, out_dir / "controls.png"))


def _point_kwargs(cfg, scheme, tier, T, V0, detuning):
    return dict(scheme=scheme, tier=tier, T=float(T), V0=float(V0), detuning=float(detuning), grid=cfg.grid,
                dt=cfg.dt, n_samples=cfg.n_samples, **_common(cfg))


def figure_populations(cfg, out_dir, manifest):
    jobs = {}
    for scheme in cfg.schemes:
        for tier in cfg.tiers:
            jobs[_point_name("populations", scheme=scheme, tier=tier, T=cfg.T, V0=cfg.V0)] = _point_kwargs(
                cfg, scheme, tier, cfg.T, cfg.V0, cfg.detuning)
    results = _run_points(cfg, jobs, out_dir, manifest)
    for scheme in cfg.schemes:
        tables = {}
        for tier in cfg.tiers:
            res = results[_point_name("populations", scheme=scheme, tier=tier, T=cfg.T, V0=cfg.V0)]
            if res["status"] == "ok":
                tables[tier] = res["table"]
                manifest.add_file(write_csv(out_dir / f"populations_{scheme}_{tier}.csv", res["table"]))
        if cfg.render and tables:
            manifest.add_file(plotting.populations(tables, out_dir / f"populations_{scheme}.png",
                                                   f"{scheme}, T={cfg.T:g}, V0={cfg.V0:g}"))


def figure_fidelity_vs_T(cfg, out_dir, manifest):
    jobs = {}
    for scheme in cfg.schemes:
        for tier in cfg.tiers:
            for V0 in cfg.V0_values:
                for T in cfg.T_values:
                    jobs[_point_name("fidelity", scheme=scheme, tier=tier, V0=float(V0), T=float(T))] = \
                        _point_kwargs(cfg, scheme, tier, T, V0, cfg.detuning)
    results = _run_points(cfg, jobs, out_dir, manifest)
    rows = _sort_rows(_summary_rows(results, ["scheme", "tier", "V0", "T", "fidelity", "leakage"]),
                      ["scheme", "tier", "V0", "T"])
    manifest.add_file(write_csv(out_dir / "fidelity_vs_T.csv", rows))
    if cfg.render and rows["T"].size:
        manifest.add_file(plotting.fidelity_vs_T(rows, out_dir / "fidelity_vs_T.png"))


def figure_resonance(cfg, out_dir, manifest):
    jobs = {}
    tiers = [t for t in cfg.tiers if t != "4L"]  # the RWA model has no carrier frequency
    for scheme in cfg.schemes:
        for tier in tiers:
            for d in cfg.detuning_values:
                jobs[_point_name("resonance", scheme=scheme, tier=tier, T=cfg.T, V0=cfg.V0, detuning=float(d))] = \
                    _point_kwargs(cfg, scheme, tier, cfg.T, cfg.V0, d)
    results = _run_points(cfg, jobs, out_dir, manifest)
    rows = _sort_rows(_summary_rows(results, ["scheme", "tier", "detuning", "fidelity"]),
                      ["scheme", "tier", "detuning"])
    manifest.add_file(write_csv(out_dir / "resonance.csv", rows))
    if cfg.render and rows["detuning"].size:
        manifest.add_file(plotting.resonance(rows, out_dir / "resonance.png"))


def figure_phase_map(cfg, out_dir, manifest):
    for scheme in cfg.schemes:
        name = f"phase_map_{scheme}"
        try:
            res = run_multi_well(scheme, cfg.T, cfg.V0, "b", wells=cfg.wells, grid=cfg.multi_well_grid, dt=cfg.dt,
                                 **_common(cfg))
        except Exception as exc:
            manifest.add_point(name=name, status="error", error=f"{type(exc).__name__}: {exc}")
            continue
        state = res.trajectory.final
        spec = state.spec
        x, y = spec.axes()
        X, Y = np.meshgrid(x, y, indexing="ij")
        manifest.add_file(write_csv(out_dir / f"{name}.csv", {
            "x": X.ravel(), "y": Y.ravel(), "abs_psi": np.abs(state.psi).ravel(), "phase_field": res.phase_map.ravel(),
        }))
        n = cfg.wells
        ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        manifest.add_file(write_csv(out_dir / f"{name}_wells.csv", {
            "i": ii.ravel(), "j": jj.ravel(), "Lz": res.lz.ravel(), "fidelity_minus": res.fidelity_minus.ravel(),
            "fidelity_plus": res.fidelity_plus.ravel(), "cell_population": res.cell_population.ravel(),
        }))
        snap = out_dir / f"{name}.shkl"
        write_snapshot(snap, state, {"scheme": scheme, "T": cfg.T, "V0": cfg.V0, "config_hash": cfg.hash()})
        manifest.add_file(snap)
        manifest.add_file(Path(str(snap) + ".json"))
        manifest.add_file(write_json(out_dir / f"{name}_summary.json", {
            "leakage": res.leakage, "checkerboard": res.checkerboard_ok(), "runtime_s": res.runtime_s,
        }))
        manifest.add_point(name=name, status="ok")
        if cfg.render:
            manifest.add_file(plotting.phase_map(res.phase_map, spec.half_widths[0], out_dir / f"{name}.png",
                                                 f"{scheme}, T={cfg.T:g}"))


_DISPATCH = {
    "couplings": figure_couplings,
    "controls": figure_controls,
    "populations": figure_populations,
    "fidelity_vs_T": figure_fidelity_vs_T,
    "resonance": figure_resonance,
    "phase_map": figure_phase_map,
}


def run_figure(cfg, figure_id, out_dir=None):
    """Compute and write one figure's data; returns the manifest."""
    if figure_id not in _DISPATCH:
        raise ValueError(f"unknown figure {figure_id!r}; choose from {FIGURES}")
    out_dir = Path(out_dir or cfg.out) / figure_id
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(out_dir, cfg)
    _DISPATCH[figure_id](cfg, out_dir, manifest)
    manifest.write()
    return manifest
