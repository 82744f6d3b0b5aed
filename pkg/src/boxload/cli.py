"""Command-line interface: profiles in, CSV or JSON tables out.

Floats are written with 17 significant digits (full binary64 round trip)
so output files are byte-stable for a fixed configuration.

Exit codes: 0 success, 1 violated certified bound (verify), 2 invalid
configuration, 3 applicability failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

from .approx import (
    bounds_applicable,
    certify_bounds,
    covariance_expansion,
    make_bound_report,
    mean_expansion,
    r0_bounds,
    r0_residual,
    r1_bounds,
    residual_r1,
    residual_r2_cov,
    residual_r2_var,
    r2_bounds,
    variance_expansion,
    variance_residual_bounds,
)
from .errors import ApplicabilityError, BoxloadError
from .exact import exact_covariance, exact_mean, exact_variance
from .model import AllocationModel, parse_profile_spec
from .sim import default_grid, figure1_data, simulate

EXIT_OK = 0
EXIT_BOUND_VIOLATION = 1
EXIT_BAD_CONFIG = 2
EXIT_NOT_APPLICABLE = 3

SIM_COLUMNS = [
    "n", "N", "replicates", "seed", "r",
    "sim_mean", "sim_var", "se_mean", "se_var",
    "exact_mean", "approx_mean", "diff_mean", "bound_lo_mean", "bound_hi_mean",
    "exact_var", "approx_var", "diff_var", "bound_lo_var", "bound_hi_var",
]

BOUND_COLUMNS = ["model_id", "n", "N", "r", "t", "kind",
                 "remainder", "lower", "upper", "applicable", "satisfied"]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _emit(rows, columns, fmt, output):
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(c)) for c in columns])
        text = buf.getvalue()
    else:
        text = json.dumps([{c: row.get(c) for c in columns} for row in rows],
                          indent=None, separators=(",", ":")) + "\n"
    if output == "-":
        sys.stdout.write(text)
    else:
        with open(output, "w", newline="") as fh:
            fh.write(text)


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok != ""]
    except ValueError as exc:
        raise BoxloadError(f"bad integer list {text!r}: {exc}") from exc


def _parse_grid(text: str) -> list[int]:
    # either "a,b,c" or "start:stop:step" (stop inclusive)
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise BoxloadError(f"bad grid {text!r}; expected start:stop:step")
        start, stop, step = (int(p) for p in parts)
        if step <= 0 or stop < start:
            raise BoxloadError(f"bad grid {text!r}")
        return list(range(start, stop + 1, step))
    return _parse_int_list(text)


def _model_from_args(args) -> tuple[str, AllocationModel]:
    profile = parse_profile_spec(args.profile)
    return args.profile, AllocationModel(args.n, profile)


def _index_lists(args, n: int) -> tuple[list[int], list[int]]:
    r_list = _parse_int_list(args.r)
    if not r_list or any(r < 0 or r > n for r in r_list):
        raise BoxloadError(f"--r entries must lie in [0, {n}]")
    t_list = _parse_int_list(args.t) if args.t else []
    if any(t < 0 or t > n for t in t_list):
        raise BoxloadError(f"--t entries must lie in [0, {n}]")
    return r_list, t_list


def _cov_pairs(r_list, t_list):
    # product of the two index lists, diagonal skipped (r == t is a variance)
    return [(r, t) for r in r_list for t in t_list if r != t]


def cmd_exact(args) -> int:
    model_id, model = _model_from_args(args)
    r_list, t_list = _index_lists(args, model.ball_count)
    rows = []
    for r in r_list:
        rows.append({"model_id": model_id, "n": model.ball_count,
                     "N": model.profile.box_count, "r": r, "t": None,
                     "kind": "mean", "value": exact_mean(model, r)})
        rows.append({"model_id": model_id, "n": model.ball_count,
                     "N": model.profile.box_count, "r": r, "t": None,
                     "kind": "variance", "value": exact_variance(model, r)})
    for r, t in _cov_pairs(r_list, t_list):
        rows.append({"model_id": model_id, "n": model.ball_count,
                     "N": model.profile.box_count, "r": r, "t": t,
                     "kind": "covariance", "value": exact_covariance(model, r, t)})
    _emit(rows, ["model_id", "n", "N", "r", "t", "kind", "value"],
          args.format, args.output)
    return EXIT_OK


def cmd_approx(args) -> int:
    model_id, model = _model_from_args(args)
    r_list, t_list = _index_lists(args, model.ball_count)
    rows = []

    def row(r, t, kind, exp):
        return {"model_id": model_id, "n": model.ball_count,
                "N": model.profile.box_count, "r": r, "t": t, "kind": kind,
                "leading": exp.leading, "correction": exp.correction,
                "approximation": exp.value}

    for r in r_list:
        rows.append(row(r, None, "mean", mean_expansion(model, r)))
        rows.append(row(r, None, "variance", variance_expansion(model, r)))
    for r, t in _cov_pairs(r_list, t_list):
        rows.append(row(r, t, "covariance", covariance_expansion(model, r, t)))
    _emit(rows, ["model_id", "n", "N", "r", "t", "kind",
                 "leading", "correction", "approximation"],
          args.format, args.output)
    return EXIT_OK


def cmd_bounds(args) -> int:
    model_id, model = _model_from_args(args)
    n = model.ball_count
    r_list, t_list = _index_lists(args, n)
    beta = model.beta
    alpha = model.alpha
    applicable = bounds_applicable(model)
    rows = []

    def row(r, t, kind, residual, interval):
        report = make_bound_report(residual, interval[0], interval[1], applicable)
        return {"model_id": model_id, "n": n, "N": model.profile.box_count,
                "r": r, "t": t, "kind": kind, "remainder": report.remainder,
                "lower": report.lower, "upper": report.upper,
                "applicable": report.applicable, "satisfied": report.satisfied}

    for r in r_list:
        rows.append(row(r, None, "r0", r0_residual(model, r), r0_bounds(r, beta)))
        rows.append(row(r, None, "r1", residual_r1(model, r), r1_bounds(r, beta)))
        if 2 * r <= n:
            rows.append(row(r, r, "var", residual_r2_var(model, r),
                            variance_residual_bounds(r, beta, alpha)))
    for r, t in _cov_pairs(r_list, t_list):
        if r + t <= n:
            rows.append(row(r, t, "cov", residual_r2_cov(model, r, t),
                            r2_bounds(r, t, beta)))
    _emit(rows, BOUND_COLUMNS, args.format, args.output)
    if args.strict and not applicable:
        print(f"largest weight {model.profile.weights[0]} exceeds 1/4; "
              "bounds not certified", file=sys.stderr)
        return EXIT_NOT_APPLICABLE
    return EXIT_OK


def _sim_row(model, seed, replicates, r, summary):
    n = model.ball_count
    nsq = float(n) ** 2
    mean_exp = mean_expansion(model, r)
    var_exp = variance_expansion(model, r)
    m_lo, m_hi = r1_bounds(r, model.beta)
    v_lo, v_hi = ((variance_residual_bounds(r, model.beta, model.alpha))
                  if 2 * r <= n else (float("nan"), float("nan")))
    return {
        "n": n, "N": model.profile.box_count, "replicates": replicates,
        "seed": seed, "r": r,
        "sim_mean": summary.means[r], "sim_var": summary.variances[r],
        "se_mean": summary.std_errors[r], "se_var": summary.var_std_errors[r],
        "exact_mean": exact_mean(model, r),
        "approx_mean": mean_exp.value,
        "diff_mean": summary.means[r] - mean_exp.value,
        "bound_lo_mean": m_lo / nsq, "bound_hi_mean": m_hi / nsq,
        "exact_var": exact_variance(model, r),
        "approx_var": var_exp.value,
        "diff_var": summary.variances[r] - var_exp.value,
        "bound_lo_var": v_lo / nsq, "bound_hi_var": v_hi / nsq,
    }


def cmd_simulate(args) -> int:
    _, model = _model_from_args(args)
    r_list, _ = _index_lists(args, model.ball_count)
    summary = simulate(model, args.replicates, args.seed,
                       r_values=sorted(set(r_list)), workers=args.workers)
    rows = [_sim_row(model, args.seed, args.replicates, r, summary)
            for r in sorted(set(r_list))]
    _emit(rows, SIM_COLUMNS, args.format, args.output)
    return EXIT_OK


def cmd_figure1(args) -> int:
    n_values = _parse_grid(args.n_values) if args.n_values else default_grid()
    rows = figure1_data(args.N, n_values, args.replicates, args.seed,
                        workers=args.workers)
    _emit(rows, SIM_COLUMNS, args.format, args.output)
    return EXIT_OK


def cmd_verify(args) -> int:
    rows = certify_bounds()
    _emit(rows, BOUND_COLUMNS, args.format, args.output)
    violations = [row for row in rows if row["applicable"] and not row["satisfied"]]
    if violations:
        print(f"{len(violations)} certified bound(s) violated", file=sys.stderr)
        return EXIT_BOUND_VIOLATION
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boxload",
        description="Occupancy statistics for multinomial allocation: exact "
                    "moments, Poisson-limit approximations with certified "
                    "error bounds, and reproducible simulation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, profile=True, indices=True):
        if profile:
            p.add_argument("--profile", required=True,
                           help="equi:N, powerlaw:N:s, or file:PATH")
            p.add_argument("--n", type=int, required=True, help="ball count")
        if indices:
            p.add_argument("--r", required=True,
                           help="comma-separated occupancy counts")
            p.add_argument("--t", default="",
                           help="comma-separated counterpart counts for "
                                "covariances (pairs with r == t are skipped)")
        p.add_argument("--output", default="-", help="output path; '-' = stdout")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("exact", help="exact means/variances/covariances")
    add_common(p)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("approx", help="Poisson-limit expansions")
    add_common(p)
    p.set_defaults(func=cmd_approx)

    p = sub.add_parser("bounds", help="residuals with certified intervals")
    add_common(p)
    p.add_argument("--strict", action="store_true",
                   help="exit 3 when the largest weight exceeds 1/4")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("simulate", help="Monte Carlo moments with std errors")
    add_common(p)
    p.add_argument("--replicates", type=int, default=50_000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("figure1",
                       help="simulated vs approximate empty-box statistics "
                            "over a grid of ball counts")
    add_common(p, profile=False, indices=False)
    p.add_argument("--N", type=int, default=100, help="box count (>= 4)")
    p.add_argument("--n-values", default="",
                   help="grid: 'a,b,c' or start:stop:step (default 10:100:5)")
    p.add_argument("--replicates", type=int, default=50_000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_figure1)

    p = sub.add_parser("verify",
                       help="run the bound-certification corpus; exit 1 on "
                            "any violated certified bound")
    add_common(p, profile=False, indices=False)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ApplicabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_APPLICABLE
    except BoxloadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG


if __name__ == "__main__":
    sys.exit(main())
