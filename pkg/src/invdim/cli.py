"""Command-line front end.

Exit codes: 0 success, 1 a bound failed to dominate (or a stage failed),
2 invalid usage or input.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bounds as bnd
from . import boxdim, cloud as cloudio
from .errors import InvdimError
from .report import (
    RunConfig,
    build_report,
    load_config_file,
    parse_params,
    parse_value,
    rows_to_csv,
    sweep,
    _jsonable,
)
from .systems import REGISTRY, make_system

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
_RUN_KEYS = ("system", "budget", "seed", "m_max", "delta_max", "ratio", "scales")


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def _run_config(args) -> RunConfig:
    """Defaults, then the config file, then explicit flags."""
    settings = load_config_file(args.config) if args.config else {}
    params = dict(settings.pop("params", {}))
    params.update(parse_params(args.param))
    for key in _RUN_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    unknown = set(settings) - set(_RUN_KEYS)
    if unknown:
        raise InvdimError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if "system" not in settings:
        raise InvdimError("no system given (use --system or a config file)")
    return RunConfig(params=params, deterministic=getattr(args, "deterministic", False), **settings)


def cmd_list_systems(args) -> int:
    rows = [make_system(name).describe() for name in REGISTRY]
    if args.format == "json":
        _emit(_dump(rows), args.out)
        return EXIT_OK
    header = f"{'name':<20} {'ambient':<14} {'invariance':<10} {'degree':<7} {'ref dim':<8} parameters"
    lines = [header, "-" * len(header)]
    for r in rows:
        amb = f"{r['ambient']['kind']}^{r['ambient']['dim']}"
        deg = "-" if r["degree"] is None else str(r["degree"])
        ref = "-" if r["reference_dimension"] is None else f"{r['reference_dimension']:.4f}"
        params = ", ".join(f"{k}={v:g}" for k, v in r["params"].items())
        lines.append(f"{r['name']:<20} {amb:<14} {r['invariance']:<10} {deg:<7} {ref:<8} {params}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_sample(args) -> int:
    cfg = _run_config(args)
    cfg.validate()
    system = make_system(cfg.system, **cfg.params)
    pc = system.sample(cfg.budget, cfg.seed)
    if not args.out:
        raise InvdimError("sample needs --out")
    fmt = args.format or ("bin" if str(args.out).endswith((".bin", ".idim")) else "csv")
    (cloudio.write_binary if fmt == "bin" else cloudio.write_csv)(pc, args.out)
    print(f"wrote {len(pc)} points of {system.name} to {args.out} ({fmt})")
    return EXIT_OK


def _load_or_sample(args):
    if args.input:
        ambient = None
        if args.torus:
            probe = (cloudio.read_binary if args.input.endswith((".bin", ".idim")) else cloudio.read_csv)(args.input)
            ambient = cloudio.AmbientSpace.torus(probe.dim)
        reader = cloudio.read_binary if args.input.endswith((".bin", ".idim")) else cloudio.read_csv
        return None, reader(args.input, ambient)
    cfg = _run_config(args)
    cfg.validate()
    system = make_system(cfg.system, **cfg.params)
    return system, system.sample(cfg.budget, cfg.seed)


def cmd_boxdim(args) -> int:
    system, pc = _load_or_sample(args)
    ratio = args.ratio or 0.5
    count = args.scales or 8
    if args.delta_max:
        sched = boxdim.ScaleSchedule.geometric(args.delta_max, ratio, count)
    else:
        sched = boxdim.default_schedule(system, pc, ratio, count)
    sched.check_domain(boxdim.domain_diameter(system, pc))
    out = {
        "box": boxdim.estimate_box_dimension(pc, sched).to_dict(),
        "lemma21": boxdim.lemma21_estimate(pc, sched).to_dict(),
        "size": len(pc),
    }
    _emit(_dump(out), args.out)
    return EXIT_OK


def cmd_bounds(args) -> int:
    cfg = _run_config(args)
    cfg.validate()
    system = make_system(cfg.system, **cfg.params)
    pc = system.sample(cfg.budget, cfg.seed)
    result = bnd.compute_bounds(system, pc, cfg.m_max)
    out = {
        "system": system.describe(),
        "bounds": [b.to_dict() for b in result["bounds"]],
        "growth_rates": {k: v.to_dict() for k, v in result["rates"].items()},
    }
    _emit(_dump(out), args.out)
    return EXIT_OK


def cmd_report(args) -> int:
    report = build_report(_run_config(args))
    if args.out:
        Path(args.out).write_text(report.to_json())
    if args.format == "json" and not args.out:
        sys.stdout.write(report.to_json())
    else:
        print(report.summary())
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_sweep(args) -> int:
    values = [parse_value(v) for v in args.values.split(",") if v.strip()]
    rows = sweep(_run_config(args), args.vary, values)
    _emit(rows_to_csv(rows), args.out)
    return EXIT_OK if all(r["verdict"] == "true" for r in rows) else EXIT_FAIL


def _run_flags(p: argparse.ArgumentParser, sampling_only: bool = False) -> None:
    p.add_argument("--config", help="INI file with [run], [schedule] and [params] sections")
    p.add_argument("--system", choices=sorted(REGISTRY), help="built-in system name")
    p.add_argument("--param", action="append", metavar="K=V", help="system parameter (repeatable)")
    p.add_argument("--budget", type=int, help="number of sample points (default 100000)")
    p.add_argument("--seed", type=int, help="sampler seed (default 0)")
    if sampling_only:
        return
    p.add_argument("--m-max", dest="m_max", type=int, help="largest iterate for growth rates (default 32)")
    p.add_argument("--delta-max", dest="delta_max", type=float, help="largest box size (default: auto)")
    p.add_argument("--ratio", type=float, help="ratio between consecutive box sizes (default 0.5)")
    p.add_argument("--scales", type=int, help="number of box sizes (default 8)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="invdim", description="Box-dimension bounds for invariant sets of maps.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("list-systems", help="list built-in systems")
    p.add_argument("--format", choices=["table", "json"], default="table")
    p.add_argument("--out")
    p.set_defaults(func=cmd_list_systems)

    p = sub.add_parser("sample", help="sample an invariant set to a file")
    _run_flags(p, sampling_only=True)
    p.add_argument("--format", choices=["csv", "bin"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("boxdim", help="empirical box dimension of a system sample or a cloud file")
    _run_flags(p)
    p.add_argument("--input", help="cloud file (.csv, or .bin / .idim binary) instead of sampling")
    p.add_argument("--torus", action="store_true", help="treat --input as a flat-torus cloud")
    p.add_argument("--out")
    p.set_defaults(func=cmd_boxdim)

    p = sub.add_parser("bounds", help="theorem bounds and growth rates as JSON")
    _run_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bounds)

    for name, func, fmt in (("report", cmd_report, ["text", "json"]), ("sweep", cmd_sweep, ["csv"])):
        p = sub.add_parser(name, help=f"{name} comparing empirical dimension with every bound")
        _run_flags(p)
        p.add_argument("--format", choices=fmt, default=fmt[0])
        p.add_argument("--out")
        p.add_argument("--deterministic", action="store_true", help="omit the timestamp from the report")
        p.set_defaults(func=func)
    p.add_argument("--vary", required=True, help="parameter to sweep")
    p.add_argument("--values", required=True, help="comma-separated parameter values")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvdimError as exc:
        print(f"error: {exc.tagged()}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
