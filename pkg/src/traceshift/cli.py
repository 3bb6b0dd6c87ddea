"""Command-line front door: run verification suites, estimate sweeps, and
moment-table computations from flags or a JSON config file.

Exit codes are a stable contract: 0 = all checks passed, 1 = a mathematical
check failed, 2 = usage or configuration error.  Reports are deterministic
given the master seed and configuration, and are written atomically.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import tempfile

from .ensembles import ENSEMBLE_KINDS, EnsembleSpec, draw_path
from .estimates import SweepConfig, estimate_sweep
from .opderiv import DerivTermSpec
from .ssm import moment_table
from .suites import SUITE_NAMES, ConfigError, RunConfig, run_all, run_suite

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2

TERM_GRAMMAR = "comma-separated j^i with strictly increasing j >= 1 and i >= 1, e.g. \"1^2,3^1\""


def _atomic_write_json(path: str, payload: dict) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            json.dump(payload, handle, indent=2, sort_keys=True)
            handle.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path) as handle:
            payload = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(payload, dict):
        raise ConfigError("config file must hold a JSON object")
    return payload


_RUN_CONFIG_FLAGS = (
    "seed",
    "draws",
    "dim",
    "n_vars",
    "m_min",
    "m_max",
    "ensemble",
    "v_scale",
    "max_total_degree",
    "coeff_scale",
    "tol",
    "threads",
)


def _run_config(args: argparse.Namespace) -> RunConfig:
    payload = _load_config_file(getattr(args, "config", None))
    if isinstance(payload.get("ensemble"), dict):
        # a full ensemble-spec object is accepted and flattened
        spec = payload.pop("ensemble")
        payload.update(
            {
                "ensemble": spec["kind"],
                "n_vars": int(spec.get("n", payload.get("n_vars", 2))),
                "dim": int(spec.get("dim", payload.get("dim", 5))),
                "v_scale": float(spec.get("v_scale", payload.get("v_scale", 0.05))),
                "seed": int(spec.get("seed", payload.get("seed", 0))),
            }
        )
    for name in _RUN_CONFIG_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            payload[name] = value
    return RunConfig.from_dict(payload)


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its entries")
    parser.add_argument("--seed", type=int, help="master seed (default 0)")
    parser.add_argument("--draws", type=int, help="number of random draws")
    parser.add_argument("--dim", type=int, help="matrix dimension")
    parser.add_argument("--nvars", dest="n_vars", type=int, help="number of variables")
    parser.add_argument("--m-min", dest="m_min", type=int, help="lowest derivative order")
    parser.add_argument("--m-max", dest="m_max", type=int, help="highest derivative order")
    parser.add_argument("--ensemble", choices=ENSEMBLE_KINDS, help="input ensemble kind")
    parser.add_argument("--v-scale", dest="v_scale", type=float, help="perturbation magnitude")
    parser.add_argument("--tol", type=float, help="identity-check tolerance")
    parser.add_argument("--threads", type=int, help="draw-level worker threads")
    parser.add_argument("--out", help="report output path (JSON)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="traceshift",
        description="Verify higher-order perturbation-trace identities and bounds at matrix scale.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_verify = sub.add_parser("verify", help="run a named verification suite")
    p_verify.add_argument("--suite", default="all", choices=SUITE_NAMES + ("all",))
    _add_common_flags(p_verify)

    p_sweep = sub.add_parser("sweep", help="run the trace-estimate sweep")
    _add_common_flags(p_sweep)
    p_sweep.add_argument("--max-k", dest="max_k", type=int, default=3,
                         help="largest number of touched coordinates per term")
    p_sweep.add_argument("--adversarial", action="store_true",
                         help="include out-of-hypothesis ensembles (segregated in the report)")
    p_sweep.add_argument("--general-trace", dest="general_trace", action="store_true",
                         help="mark only m=2 cases as theorem-backed")
    p_sweep.add_argument("--max-ratio-csv", dest="max_ratio_csv",
                         help="write per-case sharpness telemetry CSV (term, m, t, ratio)")

    p_moments = sub.add_parser("moments", help="compute a moment table for one term")
    p_moments.add_argument("--term", required=True, help=f"derivative term: {TERM_GRAMMAR}")
    p_moments.add_argument("--m", type=int, default=None,
                           help="expected total order (redundant; checked against the term)")
    p_moments.add_argument("--max-degree", dest="max_degree", type=int, default=4,
                           help="per-variable moment degree cap")
    _add_common_flags(p_moments)

    return parser


def cmd_verify(args: argparse.Namespace) -> int:
    cfg = _run_config(args)
    suite = args.suite
    results = run_all(cfg) if suite == "all" else [run_suite(suite, cfg)]
    payload = {
        "schema": 1,
        "command": "verify",
        "suite": suite,
        "config": cfg.__dict__,
        "results": [r.to_json() for r in results],
        "all_passed": all(r.ok for r in results),
    }
    out = args.out or "verify_report.json"
    _atomic_write_json(out, payload)
    for r in results:
        print(f"suite {r.suite}: {r.passed}/{r.total} passed")
        for failure in r.failures[:5]:
            print(f"  FAIL {failure}", file=sys.stderr)
    print(f"report written to {out}")
    return EXIT_OK if payload["all_passed"] else EXIT_CHECK_FAILED


def cmd_sweep(args: argparse.Namespace) -> int:
    payload = _load_config_file(args.config)
    for name in ("seed", "draws", "dim", "n_vars", "v_scale", "threads"):
        value = getattr(args, name, None)
        if value is not None:
            payload[name] = value
    m_min = getattr(args, "m_min", None)
    m_max = getattr(args, "m_max", None)
    if m_min is not None or m_max is not None:
        lo = m_min if m_min is not None else 2
        hi = m_max if m_max is not None else max(lo, 4)
        payload["m_values"] = tuple(range(lo, hi + 1))
    if getattr(args, "ensemble", None) is not None:
        payload["ensemble_kinds"] = (args.ensemble,)
    known = {f for f in SweepConfig.__dataclass_fields__}
    bad = set(payload) - known - {"seed"}
    if bad:
        raise ConfigError(f"unknown sweep config keys: {sorted(bad)}")
    if "seed" in payload:
        payload["master_seed"] = payload.pop("seed")
    if "m_values" in payload:
        payload["m_values"] = tuple(payload["m_values"])
    if "ensemble_kinds" in payload:
        payload["ensemble_kinds"] = tuple(payload["ensemble_kinds"])
    try:
        cfg = SweepConfig(**payload)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    if args.max_k is not None:
        cfg.max_k = args.max_k
    cfg.include_adversarial = bool(args.adversarial)
    cfg.general_trace = bool(args.general_trace)
    cfg.validate()

    report = estimate_sweep(cfg)
    out = args.out or "sweep_report.json"
    _atomic_write_json(out, report.to_json())
    if args.max_ratio_csv:
        with open(args.max_ratio_csv, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["term", "m", "t", "ratio"])
            for rec in report.cases:
                if rec["ratio"] is not None:
                    writer.writerow([rec["term"], rec["m"], rec["t"], rec["ratio"]])
    print(
        f"sweep: {report.passed_sound}/{report.total} sound, "
        f"{report.passed_strict}/{report.total} strict, max ratio {report.max_ratio:.6f}, "
        f"{len(report.out_of_hypothesis)} out-of-hypothesis"
    )
    print(f"report written to {out}")
    return EXIT_OK if report.all_sound else EXIT_CHECK_FAILED


def cmd_moments(args: argparse.Namespace) -> int:
    cfg = _run_config(args)
    try:
        term = DerivTermSpec.parse(args.term)
    except ValueError as exc:
        raise ConfigError(f"{exc}; expected {TERM_GRAMMAR}") from exc
    if args.m is not None and args.m != term.m:
        raise ConfigError(f"--m {args.m} does not match the term order {term.m}")
    if term.coords[-1][0] > cfg.n_vars:
        raise ConfigError(
            f"term touches coordinate {term.coords[-1][0]} but --nvars is {cfg.n_vars}"
        )
    spec = EnsembleSpec(cfg.ensemble, cfg.n_vars, cfg.dim, cfg.v_scale, cfg.seed)
    path = draw_path(spec)
    table = moment_table(term, path, (args.max_degree,) * cfg.n_vars)
    payload = table.to_json()
    payload["ensemble"] = spec.to_json()
    out = args.out or "moments.json"
    _atomic_write_json(out, payload)
    print(f"term {term}: tv_bound {table.tv_bound:.6e}, max |entry| {table.max_abs_entry():.6e}")
    print(f"report written to {out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "verify":
            return cmd_verify(args)
        if args.command == "sweep":
            return cmd_sweep(args)
        if args.command == "moments":
            return cmd_moments(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
