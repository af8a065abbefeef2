"""Command-line front end: ``bdris {solve,sweep,verify,defaults}``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import verify
from .config import (
    FULL_SCALE_TRIALS,
    ConfigError,
    Method,
    ScenarioConfig,
    apply_overrides,
    from_dict,
    to_dict,
    to_json,
)
from .montecarlo import Axis, run_sweep, run_trial

log = logging.getLogger("bdris")


def load_config(args) -> ScenarioConfig:
    """Resolve --config, --set, --seed, --trials, --method and --full-scale."""
    data = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"{path}: no such file")
        text = path.read_text()
        try:
            data = json.loads(text) if text.strip() else {}
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: malformed JSON ({exc})") from None
    data = apply_overrides(data, args.set or [])
    config = from_dict(data)
    changes = {}
    if args.seed is not None:
        changes["base_seed"] = args.seed
    if getattr(args, "full_scale", False):
        changes["trials"] = FULL_SCALE_TRIALS
    if args.trials is not None:
        changes["trials"] = args.trials
    if args.method is not None:
        changes["method"] = Method(args.method)
    try:
        return dataclasses.replace(config, **changes) if changes else config
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _write(out: Path, name: str, text: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)
    log.info("wrote %s", out / name)


def cmd_solve(args) -> int:
    config = load_config(args)
    result = run_trial(config, 0)
    out = Path(args.out)
    m = result.metrics
    summary = {
        "config": to_dict(config),
        "method": config.method.value,
        "status": result.trace.status,
        "redraws": result.trace.redraws,
        "branch": result.decision.branch.value,
        "p_s_mw": result.decision.p_star,
        "gamma_s": m.gamma_s,
        "gamma_e": m.gamma_e,
        "rate_s": m.rate_s,
        "rate_e": m.rate_e,
        "secrecy_rate_bps_hz": m.secrecy_rate,
        "interference_at_pu_mw": m.interference_at_pu,
        "outer_iterations": len(result.trace.records),
        "phi_real": result.phi.real.tolist(),
        "phi_imag": result.phi.imag.tolist(),
    }
    _write(out, "trace.csv", result.trace.to_csv())
    _write(out, "summary.json", json.dumps(summary, indent=2, sort_keys=True))
    _write(out, "config.json", to_json(config))
    print(f"secrecy rate {m.secrecy_rate:.6g} bps/Hz, P_s {result.decision.p_star:.6g} mW "
          f"({result.trace.status}, {len(result.trace.records)} records)")
    return 0


def _parse_points(text: str, axis: Axis) -> list:
    values = [float(v) for v in text.split(",") if v.strip()]
    if axis in (Axis.M, Axis.ITERATIONS):
        return [int(v) for v in values]
    return values


def cmd_sweep(args) -> int:
    config = load_config(args)
    axis = Axis(args.axis)
    points = _parse_points(args.points, axis)
    if points != sorted(points):
        raise ConfigError("--points must be monotone increasing")
    methods = args.methods.split(",") if args.methods else None
    result = run_sweep(config, axis, points, methods, workers=args.workers)
    out = Path(args.out)
    _write(out, "sweep.csv", result.to_csv())
    _write(out, "sweep.json", result.to_json(config))
    _write(out, "config.json", to_json(config))
    sys.stdout.write(result.to_csv())
    return 0


def cmd_verify(args) -> int:
    names = args.suites.split(",") if args.suites else None
    failed = 0
    for name in names or verify.SUITES:
        if name not in verify.SUITES:
            raise ConfigError(f"unknown suite {name!r}; choose from {list(verify.SUITES)}")
        result = verify.SUITES[name]()
        print(result.line(), flush=True)
        failed += not result.passed
    print("all suites passed" if not failed else f"{failed} suite(s) failed")
    return 1 if failed else 0


def cmd_defaults(args) -> int:
    print(to_json(ScenarioConfig()))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bdris", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON scenario file (missing fields take defaults)")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, help="base seed (trial t uses seed + t)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="dotted-path override, repeatable")
        p.add_argument("--trials", type=int)
        p.add_argument("--method", choices=[m.value for m in Method])
        p.add_argument("--verbose", "-v", action="count", default=0)

    p = sub.add_parser("solve", help="one seeded trial: trace.csv + summary.json")
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="Monte Carlo sweep: sweep.csv + sweep.json")
    common(p)
    p.add_argument("--axis", required=True, choices=[a.value for a in Axis])
    p.add_argument("--points", required=True, help="comma-separated axis values (dBm for powers)")
    p.add_argument("--methods", help="comma-separated methods (default: the config's method)")
    p.add_argument("--workers", type=int, help="trial processes (default $BDRIS_THREADS, 0 = all cores)")
    p.add_argument("--full-scale", action="store_true", help=f"use {FULL_SCALE_TRIALS} trials")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run the oracle suites")
    p.add_argument("--suites", help=f"comma-separated subset of {','.join(verify.SUITES)}")
    p.add_argument("--verbose", "-v", action="count", default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("defaults", help="print the default configuration")
    p.add_argument("--verbose", "-v", action="count", default=0)
    p.set_defaults(func=cmd_defaults)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"bdris: config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"bdris: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
