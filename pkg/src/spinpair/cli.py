"""Command-line interface: simulate, fit, anticross, dipole, extract.

Exit codes: 0 success, 1 usage error, 2 bad input data, 3 numerical failure.
"""

import argparse
import json
import logging
import sys

import numpy as np

from . import __version__
from .anticrossing import dark_state_analysis, find_anticrossings
from .eigen import ConvergenceError
from .fit import FitError, FitSpec, fit_model, fit_quality_report
from .interaction import dipole_coupling, exchange_report, min_exchange_scan
from .io import (
    DataError,
    config_for_preset,
    extract_peaks,
    load_config,
    read_peaks,
    read_raw_map,
    write_image,
    write_json,
    write_peaks,
    write_spectrum,
)
from .presets import PRESETS
from .spectrum import sweep
from .tracking import TrackingError

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("spinpair")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _floats(text, n=None, what="value"):
    try:
        vals = [float(t) for t in text.replace(";", ",").split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers for {what}, got {text!r}")
    if n is not None and len(vals) not in n:
        raise argparse.ArgumentTypeError(f"{what} needs {' or '.join(map(str, n))} numbers, got {len(vals)}")
    return vals


def _vector(text):
    return np.array(_floats(text, (3,), "vector"))


def _gtensor(text):
    """1 number -> diag(0, 0, g); 3 -> diagonal; 9 -> row-major matrix."""
    v = _floats(text, (1, 3, 9), "g tensor")
    if len(v) == 1:
        return np.diag([0.0, 0.0, v[0]])
    if len(v) == 3:
        return np.diag(v)
    return np.array(v).reshape(3, 3)


def _scan(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("scan must be rmin:rmax:steps")
    try:
        return float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad scan {text!r}")


def _config(args):
    if getattr(args, "config", None):
        return load_config(args.config)
    if getattr(args, "preset", None):
        return config_for_preset(args.preset)
    raise UsageError("either --config or --preset is required")


def _sweep_args(p):
    p.add_argument("--config", help="JSON model configuration")
    p.add_argument("--preset", choices=sorted(PRESETS), help="built-in model (if no --config)")
    p.add_argument("--axis", type=_vector, help="field direction x,y,z")
    p.add_argument("--bmin", type=float, help="start field (T)")
    p.add_argument("--bmax", type=float, help="end field (T)")
    p.add_argument("--steps", type=int, help="number of field points")


def _resolved_sweep(args, cfg):
    axis = args.axis if args.axis is not None else np.array(cfg.axis)
    b_min = cfg.b_min if args.bmin is None else args.bmin
    b_max = cfg.b_max if args.bmax is None else args.bmax
    steps = cfg.steps if args.steps is None else args.steps
    return axis, b_min, b_max, steps


def _report_dict(r):
    return {
        "field_T": r.field,
        "frequency_GHz": r.frequency,
        "gap_GHz": r.gap,
        "type": r.kind,
        "manifold": r.manifold,
        "doublets": r.doublets,
        "dark_branch": r.dark_branch,
        "brightness": list(r.brightness),
        "branches": list(r.branches),
        "labels": list(r.labels),
    }


def _anticrossings(cfg, res, axis, b_min, b_max, steps):
    reports = find_anticrossings(res)
    model = cfg.model
    if model.kappa != 0 and len(model.excited_states()) == 2:
        dark = {round(d.field, 9): d for d in dark_state_analysis(model, b_min, b_max, steps, axis)}
        for r in reports:
            d = dark.get(round(r.field, 9))
            if r.kind == "optical" and d is not None:
                r.dark_branch, r.brightness = d.dark_branch, d.brightness
    return reports


def cmd_simulate(args):
    cfg = _config(args)
    axis, b_min, b_max, steps = _resolved_sweep(args, cfg)
    width = cfg.width if args.width is None else args.width
    res = sweep(cfg.model, axis, b_min, b_max, steps, width=width, track=bool(args.anticross_out))
    write_spectrum(res.map, args.out)
    if args.png_out:
        write_image(res.map, args.png_out, cfg.color_floor)
    if args.anticross_out:
        reports = _anticrossings(cfg, res, axis, b_min, b_max, steps)
        write_json({"model": cfg.model.name, "anticrossings": [_report_dict(r) for r in reports]},
                   args.anticross_out)
    print(f"wrote {res.map.intensity.shape[0]} x {res.map.intensity.shape[1]} map to {args.out}")
    return EXIT_OK


def cmd_anticross(args):
    cfg = _config(args)
    axis, b_min, b_max, steps = _resolved_sweep(args, cfg)
    res = sweep(cfg.model, axis, b_min, b_max, steps)
    reports = _anticrossings(cfg, res, axis, b_min, b_max, steps)
    doc = {"model": cfg.model.name, "axis": list(map(float, axis)),
           "b_min_T": b_min, "b_max_T": b_max, "steps": steps,
           "anticrossings": [_report_dict(r) for r in reports]}
    write_json(doc, args.out)
    for r in reports:
        print(f"{r.manifold:8s} {r.kind:8s} B = {r.field:+.4f} T  gap = {r.gap:.4f} GHz  "
              f"dark = {r.dark_branch}")
    return EXIT_OK


def cmd_fit(args):
    cfg = _config(args)
    peaks = read_peaks(args.peaks)
    free = [f.strip() for f in args.free.split(",") if f.strip()]
    axis = args.axis if args.axis is not None else np.array(cfg.axis)
    spec = FitSpec(cfg.model, free, axis=tuple(axis), threshold=args.threshold,
                   restarts=args.restarts, seed=args.seed, max_evaluations=args.max_evaluations)
    result = fit_model(spec, peaks)
    doc = result.to_dict()
    doc["schema_version"] = 1
    write_json(doc, args.out)
    text, _ = fit_quality_report(result, peaks)
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    if not result.converged:
        print("fit did not converge within the evaluation budget", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_dipole(args):
    r = args.axis / np.linalg.norm(args.axis) * args.r_angstrom
    J = dipole_coupling(args.g1, args.g2, r)
    print(f"r = {args.r_angstrom:g} A along {np.round(args.axis / np.linalg.norm(args.axis), 6).tolist()}")
    print("J_dd (GHz):")
    for row in J:
        print("  " + "  ".join(f"{v:+12.6f}" for v in row))
    print(f"|J_dd,zz| = {abs(J[2, 2]):.1f} GHz")
    doc = {"r_angstrom": args.r_angstrom, "J_dd_GHz": J.tolist(), "abs_J_dd_zz_GHz": abs(J[2, 2])}
    if args.jobs:
        j = _floats(args.jobs, (1, 2, 3), "--jobs")
        g1e = args.g1_excited if args.g1_excited is not None else args.g1
        g2e = args.g2_excited if args.g2_excited is not None else args.g2
        states = ["00", "10", "01"][:len(j)]
        gt = {"00": (args.g1, args.g2), "10": (g1e, args.g2), "01": (args.g1, g2e)}
        j_obs = dict(zip(states, j))
        gt = {s: gt[s] for s in states}
        rep = exchange_report(j_obs, gt, args.axis, args.r_angstrom)
        print(f"exchange fraction at {args.r_angstrom:g} A: total {rep.total_fraction:.3f}, "
              + ", ".join(f"J{s} {f:.3f}" for s, f in rep.fractions.items()))
        doc["exchange"] = {"fractions": rep.fractions, "total_fraction": rep.total_fraction,
                           "min_fraction": rep.min_fraction, "admissible": rep.admissible}
        if args.scan:
            rmin, rmax, n = args.scan
            scan = min_exchange_scan(j_obs, gt, args.axis, np.linspace(rmin, rmax, n))
            print(f"worst-state fraction is smallest at r = {scan.r_min_worst:.3f} A "
                  f"({scan.worst_at_min:.3f}); smallest admissible r = {scan.r_admissible:.3f} A "
                  f"(total fraction {scan.total_at_admissible:.3f})")
            doc["scan"] = {
                "r_angstrom": [rep.r_angstrom for rep in scan.reports],
                "total_fraction": [rep.total_fraction for rep in scan.reports],
                "worst_fraction": [rep.worst_fraction for rep in scan.reports],
                "r_min_worst": scan.r_min_worst,
                "r_admissible": scan.r_admissible,
                "total_at_admissible": scan.total_at_admissible,
            }
    elif args.scan:
        raise UsageError("--scan needs --jobs")
    if args.out:
        write_json(doc, args.out)
    return EXIT_OK


def cmd_extract(args):
    raw = read_raw_map(args.map)
    peaks = extract_peaks(raw, args.kmad, args.min_separation, args.noise_scope)
    write_peaks(args.out, peaks)
    print(f"extracted {len(peaks)} peaks from {raw.fields.size} field columns")
    return EXIT_OK


def build_parser():
    p = _Parser(prog="spinpair", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("simulate", help="simulate a field sweep and write the spectral map")
    _sweep_args(s)
    s.add_argument("--width", type=float, help="Gaussian line width (GHz)")
    s.add_argument("--out", required=True, help="map CSV")
    s.add_argument("--png-out", help="16-bit PGM image of the map")
    s.add_argument("--anticross-out", help="anticrossing report (JSON)")
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("fit", help="fit model parameters to a peak list")
    f.add_argument("--peaks", required=True)
    f.add_argument("--config")
    f.add_argument("--preset", choices=sorted(PRESETS))
    f.add_argument("--free", required=True, help="comma-separated parameter names")
    f.add_argument("--out", required=True)
    f.add_argument("--report", help="write the text report here instead of stdout")
    f.add_argument("--axis", type=_vector)
    f.add_argument("--threshold", type=float, default=5.0, help="association threshold (GHz)")
    f.add_argument("--restarts", type=int, default=5)
    f.add_argument("--max-evaluations", type=int, default=20000)
    f.add_argument("--seed", type=int, default=0)
    f.set_defaults(func=cmd_fit)

    a = sub.add_parser("anticross", help="detect anticrossings and dark branches")
    _sweep_args(a)
    a.add_argument("--out", required=True)
    a.set_defaults(func=cmd_anticross)

    d = sub.add_parser("dipole", help="dipole-dipole coupling and exchange fractions")
    d.add_argument("--g1", type=_gtensor, required=True, help="g of ion 1: g_z, 3 diagonal or 9 values")
    d.add_argument("--g2", type=_gtensor, required=True)
    d.add_argument("--g1-excited", type=_gtensor, help="g of ion 1 in its excited level")
    d.add_argument("--g2-excited", type=_gtensor, help="g of ion 2 in its excited level")
    d.add_argument("--r-angstrom", type=float, required=True)
    d.add_argument("--axis", type=_vector, default=np.array([0.0, 0.0, 1.0]))
    d.add_argument("--scan", type=_scan, help="rmin:rmax:steps")
    d.add_argument("--jobs", help="observed J_zz for states 00,10,01 (GHz)")
    d.add_argument("--out", help="JSON output")
    d.set_defaults(func=cmd_dipole)

    e = sub.add_parser("extract", help="extract peaks from a raw map")
    e.add_argument("--map", required=True)
    e.add_argument("--kmad", type=float, default=5.0)
    e.add_argument("--min-separation", type=float, default=0.3)
    e.add_argument("--noise-scope", choices=("map", "column"), default="map",
                   help="estimate the MAD noise scale over the whole map or per column")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_extract)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return EXIT_OK if not exc.code else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"spinpair: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, TrackingError, ArithmeticError) as exc:
        print(f"spinpair: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, FitError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"spinpair: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
