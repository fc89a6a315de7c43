"""Command line entry point: ``fracinv run|study|suite``."""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import experiments as ex
from .grid import write_columns_csv


def _load(args) -> ex.ExperimentConfig:
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    if args.override_smallness:
        overrides["override_smallness"] = "true"
    if args.out:
        overrides["out"] = args.out
    return ex.load_config(args.config, overrides)


def _print_result(res: ex.ScenarioResult, label: str) -> None:
    status = "PASS" if res.passed else "FAIL"
    print(f"{status} {label}")
    if res.failure:
        print(f"    failure: {res.failure}")
    for name, c in res.checks.items():
        mark = "ok " if c.passed else "BAD"
        print(f"    {mark} {name} = {c.value!r} ({c.op} {c.tolerance!r})")


def _out_dir(cfg, args, default):
    return Path(args.out or cfg.out or default)


def cmd_run(args) -> int:
    cfg = _load(args)
    res = ex.run_scenario(cfg)
    out = _out_dir(cfg, args, Path("out") / cfg.scenario)
    ex.emit_report(res, out)
    _print_result(res, cfg.scenario)
    return 0 if res.passed else 1


def cmd_study(args) -> int:
    cfg = _load(args)
    try:
        levels = [int(t) for t in args.refine.split(",") if t.strip()]
    except ValueError:
        raise ex.ConfigError(f"--refine: expected comma-separated node counts, got {args.refine!r}") from None
    rows = ex.convergence_study(cfg, levels)
    target = min(2.0 - 2.0 * cfg.s, 1.0)
    res = ex.ScenarioResult("convergence_study", replace(cfg, refinements=levels))
    orders = [r["order"] for r in rows[1:]]
    res.check("order_min", min(orders), ">=", target)
    res.metrics["errors"] = [r["error"] for r in rows]
    res.metrics["orders"] = orders
    out = _out_dir(cfg, args, Path("out") / "study")
    ex.emit_report(res, out)
    write_columns_csv(out / "convergence.csv", {k: [r[k] for r in rows] for k in ("M", "h", "error", "order")})
    for r in rows:
        print(f"M={r['M']:6d}  h={r['h']:.6g}  error={r['error']:.6e}  order={r['order']:.4f}")
    _print_result(res, "convergence_study")
    return 0 if res.passed else 1


def cmd_suite(args) -> int:
    root = Path(args.out or "out/suite")
    ok = True
    for cfg in ex.suite_configs(0 if args.seed is None else args.seed):
        if args.override_smallness:
            cfg = replace(cfg, override_smallness=True)
        res = ex.run_scenario(cfg)
        ex.emit_report(res, root / ex.suite_dirname(cfg))
        _print_result(res, ex.suite_dirname(cfg))
        ok &= res.passed
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--override-smallness", action="store_true",
                        help="allow data outside the well-posedness ball")
    p = argparse.ArgumentParser(prog="fracinv", description=__doc__)
    sub = p.add_subparsers(dest="verb", required=True)
    r = sub.add_parser("run", parents=[common], help="run one scenario config")
    r.add_argument("config")
    r.set_defaults(func=cmd_run)
    s = sub.add_parser("study", parents=[common], help="refinement study of the Getoor benchmark")
    s.add_argument("config")
    s.add_argument("--refine", required=True, help="comma-separated node counts, e.g. 201,401,801")
    s.set_defaults(func=cmd_study)
    u = sub.add_parser("suite", parents=[common], help="run every acceptance scenario")
    u.set_defaults(func=cmd_suite)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ex.ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
