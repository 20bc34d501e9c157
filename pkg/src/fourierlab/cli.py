"""Command line entry point: ``fourierlab verify | list | explain``.

Exit codes for ``verify``: 0 when every record passes, 1 when any record
fails, 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import fnmatch
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from .errors import ConfigError
from .quadrature import Certified, Fixed, QuadConfig
from .suites import SUITES, RunContext, run_suite

__all__ = ["RunConfig", "parse_config", "load_config", "select_suites", "run", "main"]

try:
    from importlib.metadata import version as _pkg_version
    TOOL_VERSION = _pkg_version("artifact")
except Exception:  # not installed; running from a source tree
    TOOL_VERSION = "0.1.0"


@dataclass
class RunConfig:
    """Everything that determines a report.

    ``suites`` holds suite ids or shell-style globs.  ``quad`` replaces the
    per-suite quadrature defaults when set.  ``tolerances`` maps suite ids to
    tolerances that replace the suite defaults.  ``corpus_size`` replaces the
    per-suite default corpus sizes when set.
    """

    suites: List[str] = field(default_factory=lambda: ["*"])
    seed: int = 20240101
    quad: Optional[QuadConfig] = None
    tolerances: Dict[str, float] = field(default_factory=dict)
    corpus_size: Optional[int] = None
    max_n_heis: int = 3
    max_n_su2: int = 4
    out_path: str = "report.json"
    tol_scale: float = 1.0
    jobs: int = 1

    def __post_init__(self):
        select_suites(self.suites)
        for key in self.tolerances:
            if key not in SUITES:
                raise ConfigError(f"tolerance given for unknown suite {key!r}")
            if not self.tolerances[key] > 0:
                raise ConfigError(f"tolerance for {key!r} must be positive")
        if self.corpus_size is not None and self.corpus_size < 0:
            raise ConfigError("corpus_size must be non-negative")
        if not 1 <= self.max_n_heis <= 6:
            raise ConfigError("max_n_heis must lie in 1..6")
        if not 0 <= self.max_n_su2 <= 8:
            raise ConfigError("max_n_su2 must lie in 0..8")
        if not self.tol_scale > 0:
            raise ConfigError("tol_scale must be positive")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    def echo(self) -> dict:
        """JSON form of the configuration, as recorded in reports."""
        out = dataclasses.asdict(self)
        out.pop("out_path")
        out.pop("jobs")
        out["quad"] = None if self.quad is None else _quad_echo(self.quad)
        out["tolerances"] = dict(sorted(self.tolerances.items()))
        return out


def _quad_echo(q: QuadConfig) -> dict:
    d = dataclasses.asdict(q)
    pol = q.b_cutoff_policy
    d["b_cutoff_policy"] = {"type": type(pol).__name__, **dataclasses.asdict(pol)}
    return d


# --- config parsing ----------------------------------------------------------------

_QUAD_FIELDS = {"rel_tol": float, "abs_tol": float, "base_order": int, "max_panels": int,
                "osc_panels_per_period": int}
_POLICY_FIELDS = {"target_tail": float, "relative": "bool", "floor": float, "ceiling": float,
                  "cutoff": float}


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {v!r}")


def _build_quad(d: dict) -> QuadConfig:
    kw = {}
    policy = dict(d.pop("b_cutoff_policy", None) or {})
    for k, v in d.items():
        if k not in _QUAD_FIELDS:
            raise ConfigError(f"unknown quad field {k!r}")
        kw[k] = _QUAD_FIELDS[k](v)
    if policy:
        kind = str(policy.pop("type", "Certified"))
        args = {}
        for k, v in policy.items():
            if k not in _POLICY_FIELDS:
                raise ConfigError(f"unknown cutoff policy field {k!r}")
            args[k] = _bool(v) if _POLICY_FIELDS[k] == "bool" else float(v)
        try:
            kw["b_cutoff_policy"] = {"Certified": Certified, "Fixed": Fixed}[kind](**args)
        except KeyError:
            raise ConfigError(f"unknown cutoff policy {kind!r}") from None
        except TypeError as exc:
            raise ConfigError(f"bad cutoff policy fields: {exc}") from None
    try:
        return QuadConfig(**kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _flat_to_nested(text: str) -> dict:
    """Parse ``key = value`` lines; dotted keys nest, ``#`` starts a comment."""
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key.startswith("tolerances."):
            out.setdefault("tolerances", {})[key[len("tolerances."):]] = value
        elif key.startswith("quad.b_cutoff_policy."):
            out.setdefault("quad", {}).setdefault("b_cutoff_policy", {})[key.rsplit(".", 1)[1]] = value
        elif key.startswith("quad."):
            out.setdefault("quad", {})[key[len("quad."):]] = value
        elif key == "suites":
            out["suites"] = [s.strip() for s in value.split(",") if s.strip()]
        else:
            out[key] = value
    return out


_TOP_FIELDS = {"suites", "seed", "quad", "tolerances", "corpus_size", "max_n_heis", "max_n_su2",
               "out_path", "tol_scale", "jobs"}


def parse_config(data: dict) -> RunConfig:
    """Build a RunConfig from nested key/value data (JSON or flat text)."""
    unknown = set(data) - _TOP_FIELDS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    kw = {}
    try:
        if "suites" in data:
            suites = data["suites"]
            kw["suites"] = [suites] if isinstance(suites, str) else [str(s) for s in suites]
        for k in ("seed", "max_n_heis", "max_n_su2", "jobs"):
            if k in data:
                kw[k] = int(data[k])
        if data.get("corpus_size") not in (None, ""):
            kw["corpus_size"] = int(data["corpus_size"])
        if "tol_scale" in data:
            kw["tol_scale"] = float(data["tol_scale"])
        if "out_path" in data:
            kw["out_path"] = str(data["out_path"])
        if data.get("quad"):
            kw["quad"] = _build_quad(dict(data["quad"]))
        if "tolerances" in data:
            kw["tolerances"] = {str(k): float(v) for k, v in dict(data["tolerances"]).items()}
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad config value: {exc}") from None
    return RunConfig(**kw)


def load_config(path: str) -> dict:
    """Read a config file: JSON when it parses as an object, flat key = value otherwise."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from None
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON config: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("JSON config must be an object")
        return data
    return _flat_to_nested(text)


def select_suites(patterns: List[str]) -> List[str]:
    """Suite ids matching the patterns, sorted; any pattern matching nothing is an error."""
    chosen = set()
    for pat in patterns:
        hits = [sid for sid in SUITES if fnmatch.fnmatchcase(sid, pat)]
        if not hits:
            raise ConfigError(f"no suite matches {pat!r}")
        chosen.update(hits)
    return sorted(chosen)


# --- running -------------------------------------------------------------------------

def _json_value(v):
    if isinstance(v, (complex, np.complexfloating)):
        return [_json_value(float(v.real)), _json_value(float(v.imag))]
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, (int, np.integer)):
        return int(v)
    return v


def _run_one(args):
    sid, ctx, tol, scale = args
    t0 = time.perf_counter()
    out = run_suite(SUITES[sid], ctx, tol, scale)
    out["wall_time_ms"] = (time.perf_counter() - t0) * 1e3
    return sid, out


def run(config: RunConfig) -> dict:
    """Execute the selected suites and return the report as a dict."""
    ids = select_suites(config.suites)
    ctx = RunContext(seed=config.seed, quad=config.quad, corpus_size=config.corpus_size,
                     max_n_heis=config.max_n_heis, max_n_su2=config.max_n_su2)
    jobs = [(sid, ctx, config.tolerances.get(sid), config.tol_scale) for sid in ids]
    if config.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = dict(pool.map(_run_one, jobs))
    else:
        results = dict(map(_run_one, jobs))

    records, suites = [], {}
    for sid in ids:
        res = results[sid]
        passed = sum(r.passed for r in res["records"])
        suites[sid] = {"corpus_digest": res["corpus_digest"], "records": len(res["records"]),
                       "passed": passed, "wall_time_ms": res["wall_time_ms"]}
        for r in res["records"]:
            records.append({"id": r.id, "inputs_digest": r.inputs_digest,
                            "lhs": _json_value(r.lhs), "rhs": _json_value(r.rhs),
                            "residual": _json_value(r.residual),
                            "tolerance": _json_value(r.tolerance),
                            "tail_bound": _json_value(r.tail_bound),
                            "wall_time_ms": r.wall_time_ms, "pass": r.passed})
    passed = sum(r["pass"] for r in records)
    return {"tool_version": TOOL_VERSION, "config": config.echo(), "suites": suites,
            "records": records,
            "summary": {"total": len(records), "passed": passed, "failed": len(records) - passed}}


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=1, sort_keys=True) + "\n"


# --- argument parsing -----------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fourierlab",
                                description="Numerical checks of derivations on Fourier algebras.")
    sub = p.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", help="run suites and write a JSON report")
    v.add_argument("--config", help="config file, JSON or flat key = value lines")
    v.add_argument("--suite", action="append", dest="suites", metavar="ID",
                   help="suite id or glob, repeatable (default: all)")
    v.add_argument("--seed", type=int, help="64-bit corpus seed")
    v.add_argument("--tol-scale", type=float, help="multiply every tolerance")
    v.add_argument("--jobs", type=int, help="suites run in parallel processes")
    v.add_argument("--corpus-size", type=int, help="items per seeded corpus")
    v.add_argument("--max-n-su2", type=int, help="largest SU(2) block")
    v.add_argument("--max-n-heis", type=int, help="largest |n| for Schroedinger terms")
    v.add_argument("--out", help="report path, '-' for standard output")
    sub.add_parser("list", help="print suite ids")
    e = sub.add_parser("explain", help="describe one suite")
    e.add_argument("id")
    return p


def _config_from_args(args) -> RunConfig:
    data = load_config(args.config) if args.config else {}
    overrides = {"suites": args.suites, "seed": args.seed, "tol_scale": args.tol_scale,
                 "jobs": args.jobs, "corpus_size": args.corpus_size,
                 "max_n_su2": args.max_n_su2, "max_n_heis": args.max_n_heis,
                 "out_path": args.out}
    data.update({k: v for k, v in overrides.items() if v is not None})
    return parse_config(data)


def _summary_line(report: dict) -> str:
    s = report["summary"]
    return f"{s['passed']}/{s['total']} records passed, {s['failed']} failed"


def main(argv: Optional[List[str]] = None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "list":
        for sid in sorted(SUITES):
            print(f"{sid:26s} {SUITES[sid].title}")
        return 0
    if args.command == "explain":
        suite = SUITES.get(args.id)
        if suite is None:
            print(f"error: unknown suite {args.id!r}", file=sys.stderr)
            return 2
        print(f"{suite.id}: {suite.title}")
        print(f"  identity:  {suite.statement}")
        print(f"  result:    {suite.source}")
        print(f"  tolerance: {suite.tolerance:g}")
        size = "none" if suite.kind is None else f"{suite.default_size} ({suite.kind})"
        print(f"  corpus:    {size}")
        return 0
    try:
        config = _config_from_args(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report = run(config)
    text = dumps_report(report)
    if config.out_path == "-":
        sys.stdout.write(text)
    else:
        Path(config.out_path).write_text(text)
        for sid, s in report["suites"].items():
            status = "PASS" if s["passed"] == s["records"] else "FAIL"
            print(f"{status} {sid} ({s['passed']}/{s['records']})")
        print(_summary_line(report))
    return 0 if report["summary"]["failed"] == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
