"""Command-line front end: ``supchain {bound,sweep,audit} --config FILE``.

Exit codes: 0 success, 1 runtime or I/O error, 2 configuration or
hypothesis error, 3 audit failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

from . import __version__
from .chaining import hypothesis_check, tail_bound
from .config import load_config
from .errors import ConfigurationError, DomainError, KernelAuditError
from .metric import UNIT_INTERVAL, build_partition_family
from .montecarlo import moment_audit, run_sweep, theory_for
from .processes import kernel_hoelder_audit

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG, EXIT_AUDIT = 0, 1, 2, 3

REPORT_COLUMNS = (
    "eps", "b_eps", "var_t0", "entropy_sum", "constant_C", "theory_bound",
    "empirical_prob", "ci_low", "ci_high", "replicates", "seed",
)
BOUND_COLUMNS = (
    "eps", "b_eps", "var_t0", "entropy_sum", "constant_C",
    "chain_bound", "center_bound", "total_bound",
)
MOMENT_COLUMNS = ("s", "t", "mc_moment", "stderr", "bound", "exact", "violation")
KERNEL_COLUMNS = ("family", "alpha", "c_omega", "samples", "worst_ratio", "worst_s", "worst_t", "worst_omega", "passed")


def fmt(x) -> str:
    """17 significant digits for floats so CSV values round-trip exactly."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def write_csv(columns, rows, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r[c]) for c in columns])


def read_report_csv(path) -> list:
    """Parse a sweep CSV back into dicts of floats/ints."""
    out = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            row = {}
            for k, v in rec.items():
                row[k] = int(v) if k in ("replicates", "seed") else float(v)
            out.append(row)
    return out


def _emit(columns, rows, path):
    if path is None:
        write_csv(columns, rows, sys.stdout)
        return
    buf = io.StringIO()
    write_csv(columns, rows, buf)
    Path(path).write_text(buf.getvalue())


def _check_hypotheses(exp) -> str | None:
    family = build_partition_family(UNIT_INTERVAL, exp.n_max, exp.t0)
    rep = hypothesis_check(exp.params, family)
    if rep.passed:
        return None
    return "hypothesis violation: " + "; ".join(f"{c.name} ({c.detail})" for c in rep.failures())


def cmd_bound(args, cfg) -> int:
    exp = cfg.experiment
    msg = _check_hypotheses(exp)
    if msg:
        print(msg, file=sys.stderr)
        return EXIT_CONFIG
    family = build_partition_family(UNIT_INTERVAL, exp.n_max, exp.t0)
    if cfg.bound_rows:
        inputs = [(r.eps, r.b_eps, r.var_t0) for r in cfg.bound_rows]
    else:
        inputs = [(e, *theory_for(exp, e, family)[:2]) for e in exp.eps_list]
    rows = []
    for eps, b, v in inputs:
        if math.isnan(b):
            rep = tail_bound(exp.params, family, 0.0, v)
            chain = math.nan
            total = math.nan
        else:
            rep = tail_bound(exp.params, family, b, v)
            chain, total = rep.chain_bound, rep.total_bound
        rows.append({
            "eps": eps, "b_eps": b, "var_t0": v, "entropy_sum": rep.entropy_sum,
            "constant_C": rep.constant, "chain_bound": chain,
            "center_bound": rep.center_bound, "total_bound": total,
        })
    _emit(BOUND_COLUMNS, rows, args.out)
    return EXIT_OK


def _summary(result) -> dict:
    checks = result.checks()
    return {
        "pass": all(c["passed"] for c in checks if c["hard"]),
        "checks": checks,
        "seed": result.config.seed,
        "replicates": result.config.replicates,
        "grid_exponent": result.config.grid_exponent,
        "sup_mode": result.config.sup_mode,
        "model": result.config.model,
    }


def cmd_sweep(args, cfg) -> int:
    exp = cfg.experiment.with_overrides(
        seed=args.seed, replicates=args.reps, grid_exponent=args.grid_exponent, workers=args.workers,
    )
    msg = _check_hypotheses(exp)
    if msg:
        print(msg, file=sys.stderr)
        return EXIT_CONFIG
    progress = None
    if args.verbose:
        progress = lambda r: print(
            f"eps={r.eps:g} empirical={r.empirical_prob:.4f} bound={r.theory_bound:.4g} "
            f"({r.runtime:.1f}s)", file=sys.stderr)
    result = run_sweep(exp, progress=progress)
    rows = [{c: getattr(r, c) for c in REPORT_COLUMNS} for r in result.rows]
    summary = json.dumps(_summary(result), indent=2, sort_keys=True)
    out = args.out or cfg.csv
    if out is None:
        write_csv(REPORT_COLUMNS, rows, sys.stdout)
        print(summary, file=sys.stderr)
        return EXIT_OK
    _emit(REPORT_COLUMNS, rows, out)
    json_path = cfg.json if (args.out is None and cfg.json) else str(Path(out).with_suffix(".json"))
    Path(json_path).write_text(summary + "\n")
    return EXIT_OK


def cmd_audit(args, cfg) -> int:
    exp = cfg.experiment.with_overrides(seed=args.seed, workers=args.workers)
    failure = None
    kernel_rows = []
    if exp.model == "cpp":
        try:
            rep = kernel_hoelder_audit(exp.kernel, cfg.audit.samples, seed=exp.seed, strict=True)
        except KernelAuditError as exc:
            rep = exc.report
            failure = str(exc)
        k = exp.kernel
        kernel_rows.append({
            "family": k.family, "alpha": k.alpha, "c_omega": k.c_omega, "samples": rep.samples,
            "worst_ratio": rep.worst_ratio, "worst_s": rep.worst_tuple[0],
            "worst_t": rep.worst_tuple[1], "worst_omega": rep.worst_tuple[2], "passed": rep.passed,
        })
    reps = args.reps or cfg.audit.replicates
    audit = moment_audit(exp, cfg.audit.eps, cfg.audit.pairs, replicates=reps)
    moment_rows = [{c: getattr(r, c) for c in MOMENT_COLUMNS} for r in audit]
    bad = [r for r in audit if r.violation]
    if bad and failure is None:
        w = max(bad, key=lambda r: r.mc_moment - r.bound)
        failure = f"moment audit failed at (s={w.s!r}, t={w.t!r}): {w.mc_moment!r} > {w.bound!r} + 4*{w.stderr!r}"

    if args.out is None:
        if kernel_rows:
            write_csv(KERNEL_COLUMNS, kernel_rows, sys.stdout)
            print()
        write_csv(MOMENT_COLUMNS, moment_rows, sys.stdout)
    else:
        _emit(MOMENT_COLUMNS, moment_rows, args.out)
        if kernel_rows:
            _emit(KERNEL_COLUMNS, kernel_rows, str(Path(args.out).with_suffix(".kernel.csv")))
    if failure:
        print(failure, file=sys.stderr)
        return EXIT_AUDIT
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="supchain", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="TOML experiment configuration")
        sp.add_argument("--out", default=None, help="output CSV path (default: stdout)")

    b = sub.add_parser("bound", help="evaluate the chaining tail bound per eps (no simulation)")
    common(b)
    s = sub.add_parser("sweep", help="Monte Carlo eps sweep against the bound")
    common(s)
    a = sub.add_parser("audit", help="kernel Hoelder audit and increment-moment audit")
    common(a)
    for sp in (s, a):
        sp.add_argument("--seed", type=int, default=None, help="u64 master seed")
        sp.add_argument("--reps", type=int, default=None, help="replicate count")
        sp.add_argument("--workers", type=int, default=None, help="worker threads")
    s.add_argument("--grid-exponent", type=int, default=None, help="grid is {i 2^-g}")
    s.add_argument("-v", "--verbose", action="store_true", help="per-eps progress on stderr")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        handler = {"bound": cmd_bound, "sweep": cmd_sweep, "audit": cmd_audit}[args.command]
        return handler(args, cfg)
    except (ConfigurationError, DomainError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
