"""Command-line entry points.

Subcommands:
  solve-neumann      run a Neumann experiment from flags or a config file
  solve-dirichlet    absorbed walk-on-spheres estimate at one point
  lattice-check      endpoint-moment check of the six-move lattice walk
  paper-repro        preset cube / sphere / ellipsoid error experiments

Every command prints a JSON report to stdout and exits 0 on success;
failures print {"error", "message"} JSON to stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .dirichlet import manufactured_dirichlet_data, solve_dirichlet
from .harness import ExperimentConfig, paper_defaults, run_experiment
from .lattice import appendix_time_law_check


class _JsonArgumentParser(argparse.ArgumentParser):
    """argparse parser whose usage errors come out as machine-readable JSON."""

    def error(self, message):
        print(json.dumps({"error": "usage", "message": message}),
              file=sys.stderr)
        raise SystemExit(2)


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.split(","))


def _load_point_list(path: str) -> list:
    p = Path(path)
    if p.suffix == ".json":
        pts = json.loads(p.read_text())
    else:
        raw = np.loadtxt(p, delimiter=",", ndmin=2, comments="#",
                         skiprows=_csv_header_rows(p))
        pts = raw[:, :3].tolist()
    return [list(map(float, row)) for row in pts]


def _csv_header_rows(path: Path) -> int:
    with open(path) as fh:
        first = fh.readline()
    try:
        [float(v) for v in first.strip().split(",")[:3]]
        return 0
    except ValueError:
        return 1


def _add_solver_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--dx", type=float, help="step size")
    sp.add_argument("--k-eps", type=int, dest="k_eps",
                    help="eps layer in units of dx")
    sp.add_argument("--paths", type=int, help="paths per evaluation point")
    sp.add_argument("--steps", type=int, help="steps per path")
    sp.add_argument("--seed", type=int, help="master RNG seed")
    sp.add_argument("--workers", type=int, help="process pool size")
    sp.add_argument("--chunk-size", type=int, dest="chunk_size",
                    help="paths per RNG chunk")
    sp.add_argument("--points", help="circle | segment | point file (csv/json)")
    sp.add_argument("--estimator", choices=("occupation", "levy"))
    sp.add_argument("--rbm", choices=("wos", "lattice"))
    sp.add_argument("--report-steps", dest="report_steps",
                    help="comma-separated checkpoint step counts")
    sp.add_argument("--out", help="directory for report.json / points.csv")
    sp.add_argument("--dump-paths", action="store_true", default=None,
                    help="also record one sample walk per point")


_FLAG_TO_FIELD = {
    "dx": "dx", "k_eps": "k_eps", "paths": "n_paths", "steps": "n_steps",
    "seed": "seed", "workers": "workers", "chunk_size": "chunk_size",
    "estimator": "estimator", "rbm": "rbm", "out": "out",
    "dump_paths": "dump_paths",
}


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    d = cfg.to_dict()
    for flag, fld in _FLAG_TO_FIELD.items():
        v = getattr(args, flag, None)
        if v is not None:
            d[fld] = v
    if getattr(args, "report_steps", None) is not None:
        d["report_steps"] = [int(s) for s in args.report_steps.split(",")]
    pts = getattr(args, "points", None)
    if pts is not None:
        if pts in ("circle", "segment"):
            d["points_kind"] = pts
            d.pop("points_list", None)
        else:
            d["points_kind"] = "list"
            d["points_list"] = _load_point_list(pts)
    return ExperimentConfig.from_dict(d)


def _cmd_solve_neumann(args) -> dict:
    if args.config:
        cfg = ExperimentConfig.load(args.config)
    else:
        cfg = ExperimentConfig()
        d = cfg.to_dict()
        if args.domain:
            d["domain_kind"] = args.domain
        if args.extent:
            d["domain_extent"] = list(_floats(args.extent))
        if args.center:
            d["domain_center"] = list(_floats(args.center))
        if args.flux_table:
            d["flux_table"] = args.flux_table
        cfg = ExperimentConfig.from_dict(d)
    cfg = _apply_overrides(cfg, args)
    return run_experiment(cfg).to_dict()


def _cmd_solve_dirichlet(args) -> dict:
    extent = _floats(args.extent) if args.extent else (1.0, 1.0, 1.0)
    center = _floats(args.center) if args.center else (0.0, 0.0, 0.0)
    cfg = ExperimentConfig(domain_kind=args.domain or "box",
                           domain_extent=extent, domain_center=center)
    problem = manufactured_dirichlet_data(cfg.domain())
    res = solve_dirichlet(
        problem, _floats(args.x0),
        n_paths=args.paths if args.paths is not None else 100000,
        seed=args.seed if args.seed is not None else 0,
        eps_abs=args.eps_abs,
        max_steps=args.max_steps,
        workers=args.workers if args.workers is not None else 1,
        chunk_size=args.chunk_size if args.chunk_size is not None else 4096,
    )
    out = res.to_dict()
    if problem.u_exact is not None:
        exact = float(problem.u_exact(np.asarray(_floats(args.x0))))
        out["exact"] = exact
        out["abs_error"] = abs(res.estimate - exact)
    if args.out:
        path = Path(args.out)
        path.mkdir(parents=True, exist_ok=True)
        (path / "dirichlet.json").write_text(json.dumps(out, indent=2) + "\n")
    return out


def _cmd_lattice_check(args) -> dict:
    report = appendix_time_law_check(
        n_steps=args.steps if args.steps is not None else 10000,
        h=args.h,
        samples=args.samples,
        seed=args.seed if args.seed is not None else 0,
    )
    out = report.to_dict()
    if args.out:
        path = Path(args.out)
        path.mkdir(parents=True, exist_ok=True)
        (path / "lattice_check.json").write_text(json.dumps(out, indent=2) + "\n")
    return out


def _cmd_paper_repro(args) -> dict:
    cfg = paper_defaults(args.domain, full=args.full)
    cfg = _apply_overrides(cfg, args)
    return run_experiment(cfg).to_dict()


def build_parser() -> argparse.ArgumentParser:
    parser = _JsonArgumentParser(prog="wosrbm",
                                 description="Walk-on-spheres solvers for "
                                             "reflecting Brownian motion")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    sn = sub.add_parser("solve-neumann", parents=[], add_help=True,
                        help="Neumann experiment over evaluation points")
    sn.add_argument("--config", help="TOML or JSON experiment config")
    sn.add_argument("--domain", choices=("box", "cube", "ball", "sphere",
                                         "ellipsoid"))
    sn.add_argument("--extent", help="comma-separated domain extent")
    sn.add_argument("--center", help="comma-separated domain center")
    sn.add_argument("--flux-table", dest="flux_table",
                    help="CSV x,y,z,phi boundary flux table")
    _add_solver_flags(sn)
    sn.set_defaults(func=_cmd_solve_neumann)

    sd = sub.add_parser("solve-dirichlet",
                        help="absorbed-walk estimate at one point")
    sd.add_argument("--domain", choices=("box", "cube", "ball", "sphere",
                                         "ellipsoid"))
    sd.add_argument("--extent", help="comma-separated domain extent")
    sd.add_argument("--center", help="comma-separated domain center")
    sd.add_argument("--x0", required=True, help="evaluation point x,y,z")
    sd.add_argument("--paths", type=int)
    sd.add_argument("--seed", type=int)
    sd.add_argument("--workers", type=int)
    sd.add_argument("--chunk-size", type=int, dest="chunk_size")
    sd.add_argument("--eps-abs", type=float, dest="eps_abs",
                    help="absorption shell width")
    sd.add_argument("--max-steps", type=int, dest="max_steps", default=10000)
    sd.add_argument("--out", help="directory for dirichlet.json")
    sd.set_defaults(func=_cmd_solve_dirichlet)

    lc = sub.add_parser("lattice-check",
                        help="lattice endpoint moments vs the time law")
    lc.add_argument("--steps", type=int, help="walk length")
    lc.add_argument("--h", type=float, default=0.01, help="lattice spacing")
    lc.add_argument("--samples", type=int, default=100000)
    lc.add_argument("--seed", type=int)
    lc.add_argument("--out", help="directory for lattice_check.json")
    lc.set_defaults(func=_cmd_lattice_check)

    pr = sub.add_parser("paper-repro",
                        help="preset benchmark error experiments")
    pr.add_argument("domain", choices=("cube", "sphere", "ellipsoid"))
    pr.add_argument("--full", action="store_true",
                    help="full-scale 2e5 paths per point")
    _add_solver_flags(pr)
    pr.set_defaults(func=_cmd_paper_repro)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        stream=sys.stderr, format="%(asctime)s %(name)s %(message)s")
    try:
        out = args.func(args)
    except Exception as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1
    json.dump(out, sys.stdout, indent=2, default=_json_default)
    print()
    return 0


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


if __name__ == "__main__":
    raise SystemExit(main())
