"""Command-line entry point: ``shakenlattice <subcommand> [flags]``.

Every flag overrides one key of the JSON run configuration; unset flags keep the
value from ``--config`` or the shipped defaults (printed by ``shakenlattice defaults``).
"""
import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

from . import __version__
from .errors import ShakenLatticeError
from .harness.artifacts import Manifest, write_csv, write_json
from .harness.config import SCHEMES, TIERS, default_values, load_config
from .harness.figures import FIGURES, run_figure
from .harness.runs import couplings_table, make_schedule, run_point
from .harness.si import CS133_MASS, SIParams, si_calculator
from .schemes import boundary_check, pulse_areas

log = logging.getLogger("shakenlattice")


def _common_flags(p):
    d = default_values()
    p.add_argument("--config", help="JSON run configuration (keys as in defaults.json)")
    p.add_argument("--out", help=f"output directory (default {d['out']!r})")
    p.add_argument("--workers", type=int, help=f"parallel worker processes for sweeps (default {d['workers']})")
    p.add_argument("--scheme", action="append", choices=SCHEMES,
                   help=f"pulse scheme, repeatable (default {d['schemes']})")
    p.add_argument("--tier", action="append", choices=TIERS, help=f"model tier, repeatable (default {d['tiers']})")
    p.add_argument("--T", type=float, nargs="+",
                   help=f"total time in 1/omega; first value is the single-run T, all values the T sweep "
                        f"(default {d['T']}, sweep {d['T_values'][0]}..{d['T_values'][-1]})")
    p.add_argument("--V0", type=float, nargs="+",
                   help=f"lattice depth in hbar*omega; first value single-run, all values the sweep "
                        f"(default {d['V0']}, sweep {d['V0_values']})")
    p.add_argument("--detuning", type=float, nargs="+",
                   help=f"(omega_x + omega_d)/omega; first value single-run, all values the sweep "
                        f"(default {d['detuning']}, sweep {d['detuning_values'][0]}..{d['detuning_values'][-1]})")
    p.add_argument("--grid", type=int, help=f"single-well grid points per axis (default {d['grid']})")
    p.add_argument("--dt", type=float, help=f"grid time step in 1/omega (default {d['dt']})")
    p.add_argument("--no-render", action="store_true", help="skip PNG rendering")


def _config(args):
    over = dict(out=args.out, workers=args.workers, schemes=args.scheme, tiers=args.tier, grid=args.grid,
                dt=args.dt)
    for key, sweep in (("T", "T_values"), ("V0", "V0_values"), ("detuning", "detuning_values")):
        vals = getattr(args, key)
        if vals:
            over[key] = vals[0]
            over[sweep] = vals
    if args.no_render:
        over["render"] = False
    return load_config(args.config, **over)


def cmd_synthesize(cfg, args):
    out = Path(cfg.out) / "synthesize"
    manifest = Manifest(out, cfg)
    for scheme in cfg.schemes:
        sched = make_schedule(scheme, cfg.T, cfg.C1, cfg.C2, cfg.t_S_fraction)
        manifest.add_file(write_csv(out / f"couplings_{scheme}.csv",
                                    couplings_table(scheme, cfg.T, cfg.C1, cfg.C2, cfg.t_S_fraction)))
        report = boundary_check(sched)
        ax, ar = pulse_areas(sched)
        doc = {"scheme": scheme, "T": cfg.T, "t_S": sched.t_S, "W": sched.W, "C1": cfg.C1, "C2": cfg.C2,
               "area_x": ax, "area_rho": ar, "boundary_ok": report.passed,
               "boundary_failures": [c.name for c in report.failures()]}
        manifest.add_file(write_json(out / f"schedule_{scheme}.json", doc))
        manifest.add_point(name=scheme, status="ok" if report.passed else "boundary")
        print(json.dumps(doc))
    manifest.write()
    return 0


def cmd_simulate(cfg, args):
    out = Path(cfg.out) / "simulate"
    manifest = Manifest(out, cfg)
    for scheme in cfg.schemes:
        for tier in cfg.tiers:
            name = f"{scheme}_{tier}_T={cfg.T:g}_V0={cfg.V0:g}_detuning={cfg.detuning:g}"
            try:
                res = run_point(scheme, tier, cfg.T, cfg.V0, cfg.detuning, cfg.C1, cfg.C2, cfg.t_S_fraction,
                                cfg.grid, cfg.dt, cfg.n_samples)
            except ShakenLatticeError as exc:
                log.error("%s: %s", name, exc)
                manifest.add_point(name=name, status="error", error=f"{type(exc).__name__}: {exc}")
                continue
            manifest.add_file(write_csv(out / f"{name}.csv", res["table"]))
            manifest.add_file(write_json(out / f"{name}.json", res["summary"]))
            manifest.add_point(name=name, status="ok")
            s = res["summary"]
            print(f"{scheme:10s} {tier:10s} fidelity={s['fidelity']:.6f}"
                  + (f" leakage={s['leakage']:.4f} Lz={s['Lz']:+.4f}" if tier == "grid" else ""))
    manifest.write()
    return 1 if manifest.failures else 0


def cmd_figure(cfg, args):
    ids = FIGURES if args.figure_id == "all" else [args.figure_id]
    status = 0
    for fid in ids:
        manifest = run_figure(cfg, fid)
        n_bad = len(manifest.failures)
        print(f"{fid}: {len(manifest.files)} files, {n_bad} failed points -> {manifest.out_dir}")
        status |= bool(n_bad)
    return int(status)


def cmd_si_calc(cfg, args):
    params = SIParams(args.mass, args.wavelength, args.depth, args.omega_T)
    print(json.dumps(si_calculator(params), indent=2))
    return 0


def cmd_validate(cfg, args):
    from .harness.acceptance import validate_all

    results = validate_all(cfg, only=args.only)
    report = [{"key": r.key, "title": r.title, "passed": r.passed, "runtime_s": r.runtime_s, "measured": r.measured}
              for r in results]
    write_json(Path(cfg.out) / "validate" / "report.json", {"config_hash": cfg.hash(), "criteria": report})
    n_fail = sum(not r.passed for r in results)
    print(f"{len(results) - n_fail}/{len(results)} criteria passed")
    return 1 if n_fail else 0


def build_parser():
    parser = argparse.ArgumentParser(prog="shakenlattice", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synthesize", help="build the pulse schedules and write couplings")
    _common_flags(p)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("simulate", help="evolve |00> for each scheme and tier at one (T, V0, detuning)")
    _common_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("figure", help="compute one figure data set (CSV, PNG, manifest)")
    p.add_argument("figure_id", choices=FIGURES + ("all",))
    _common_flags(p)
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("si-calc", help="convert dimensionless parameters to laboratory units")
    p.add_argument("--mass", type=float, default=CS133_MASS, help="atom mass in kg (default 133Cs)")
    p.add_argument("--wavelength", type=float, default=1064e-9, help="lattice laser wavelength in m")
    p.add_argument("--depth", type=float, default=36.0, help="lattice depth in recoil energies")
    p.add_argument("--omega-T", type=float, default=300.0, help="total time in 1/omega")
    p.set_defaults(func=cmd_si_calc, config=None)

    p = sub.add_parser("validate", help="run the acceptance criteria; exit status 1 on any failure")
    _common_flags(p)
    p.add_argument("--only", nargs="+", metavar="KEY", help="criterion keys to run, e.g. C1 C5")
    p.set_defaults(func=cmd_validate)

    sub.add_parser("defaults", help="print the default configuration").set_defaults(func=None)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if not args.verbose:
        warnings.simplefilter("ignore")
    if args.command == "defaults":
        print(json.dumps(default_values(), indent=2))
        return 0
    try:
        cfg = _config(args) if args.command != "si-calc" else None
        return args.func(cfg, args)
    except ShakenLatticeError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
