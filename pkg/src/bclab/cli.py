"""Command-line front end.

Subcommands: pmf, moments, conditions, experiment, sweep, validate.
Runs are deterministic given --seed; CSV and JSON outputs are byte-stable
across repeated identical invocations. Exit codes: 0 success, 1 invalid
configuration or usage, 2 missing capability or resource cap, 3 internal
error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from .conditions import (
    Condition,
    eval_b,
    eval_cov,
    eval_d,
    eval_er,
    eval_ind,
    eval_io,
    eval_ks,
    eval_sub,
)
from .experiments import EXPERIMENT_NAMES, run_diagram_sweep, run_experiment
from .models import model_from_config
from .oracle import (
    FiniteSpace,
    discretize,
    enumerate_cov,
    enumerate_pmf,
    model_sampling_check,
    sampling_validation,
)
from .probability import (
    BclabError,
    CapabilityError,
    ConfigError,
    MomentSeries,
    SupportCapError,
    parse_ratio,
    ratio_str,
)
from . import reporting

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CAPABILITY = 2
EXIT_INTERNAL = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bclab",
        description=(
            "Exact occurrence-count laws, weak-independence diagnostics, and "
            "counterexample experiments for dependent event sequences."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, model=True):
        if model:
            p.add_argument(
                "--model",
                required=True,
                help="model config: path to JSON file or inline JSON object",
            )
        p.add_argument("--out", help="output directory (default: print to stdout)")
        p.add_argument(
            "--format",
            choices=("csv", "json", "both"),
            default="both",
            help="which delimited outputs to write (default both)",
        )
        fig = p.add_mutually_exclusive_group()
        fig.add_argument("--figures", dest="figures", action="store_true", default=True)
        fig.add_argument("--no-figures", dest="figures", action="store_false")
        p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")

    p_pmf = sub.add_parser("pmf", help="exact law of the count after n events")
    add_common(p_pmf)
    p_pmf.add_argument("--n", type=int, required=True)

    p_mom = sub.add_parser("moments", help="exact moment series of the count")
    add_common(p_mom)
    p_mom.add_argument("--horizon", type=int, required=True)
    p_mom.add_argument("--start", type=int, default=1)

    p_cond = sub.add_parser("conditions", help="evaluate conditions on a model")
    add_common(p_cond)
    p_cond.add_argument("--horizon", type=int, required=True)
    p_cond.add_argument(
        "--conditions",
        default="ER,KS,SUB",
        help="comma list from IND,PWI,NOP,ER,KS,D,SUB,B,IO (default ER,KS,SUB)",
    )
    p_cond.add_argument("--eps", default="1/4", help="deviation size as num/den")
    p_cond.add_argument("--paths", type=int, default=2000)
    p_cond.add_argument("--tail-start", type=int, default=None)
    p_cond.add_argument(
        "--cov-window", type=int, default=48, help="window end for pair scans"
    )

    p_exp = sub.add_parser("experiment", help="run a named experiment")
    add_common(p_exp, model=False)
    p_exp.add_argument("--name", required=True, choices=EXPERIMENT_NAMES)
    p_exp.add_argument("--horizon", type=int, default=None)
    p_exp.add_argument("--paths", type=int, default=1000)
    p_exp.add_argument("--max-exponent", type=int, default=40)

    p_sweep = sub.add_parser("sweep", help="model-by-condition verdict matrix")
    add_common(p_sweep, model=False)
    p_sweep.add_argument("--paths", type=int, default=1000)

    p_val = sub.add_parser(
        "validate", help="cross-check a small model against full enumeration"
    )
    add_common(p_val)
    p_val.add_argument("--n", type=int, default=8, help="events to enumerate")
    p_val.add_argument("--paths", type=int, default=10**5)

    return parser


def _emit(args, payload, name: str) -> None:
    if args.out:
        reporting.write_json(Path(args.out) / f"{name}.json", payload)
    else:
        print(json.dumps(reporting.json_ready(payload), indent=2, sort_keys=True))


def _cmd_pmf(args) -> int:
    model = model_from_config(args.model)
    pmf = model.exact_pmf(args.n)
    rows = list(pmf.items())
    if args.out:
        out = Path(args.out)
        if args.format in ("csv", "both"):
            reporting.write_series_csv(out / f"pmf_n{args.n}.csv", rows)
        if args.format in ("json", "both"):
            reporting.write_json(
                out / f"pmf_n{args.n}.json",
                {"n": args.n, "pmf": {str(c): m for c, m in rows}},
            )
        if args.figures:
            reporting.render_series_figure(
                out / f"pmf_n{args.n}.png",
                f"law of the count after {args.n} events",
                {"mass": rows},
                ylabel="mass",
            )
        print(f"wrote p.m.f. outputs to {out}")
    else:
        for count, mass in rows:
            print(f"{count},{ratio_str(mass)},{float(mass)!r}")
    return EXIT_OK


def _cmd_moments(args) -> int:
    model = model_from_config(args.model)
    series = MomentSeries.from_model(model, args.horizon, start=args.start)
    named = {
        "mu": [(r.n, r.mu) for r in series.iter_records()],
        "s2": [(r.n, r.s2) for r in series.iter_records()],
        "ex2": [(r.n, r.ex2) for r in series.iter_records()],
    }
    if args.out:
        out = Path(args.out)
        for label, rows in named.items():
            if args.format in ("csv", "both"):
                reporting.write_series_csv(out / f"moments_{label}.csv", rows)
            if args.figures:
                reporting.render_series_figure(
                    out / f"moments_{label}.png", f"{label} over n", {label: rows}
                )
        if args.format in ("json", "both"):
            reporting.write_json(out / "moments.json", named)
        print(f"wrote moment series to {out}")
    else:
        for r in series.iter_records():
            print(
                f"{r.n},{ratio_str(r.mu)},{ratio_str(r.s2)},{ratio_str(r.ex2)},{float(r.ex2)!r}"
            )
    return EXIT_OK


def _cmd_conditions(args) -> int:
    model = model_from_config(args.model)
    wanted = []
    for token in args.conditions.split(","):
        token = token.strip().upper()
        if not token:
            continue
        try:
            wanted.append(Condition(token))
        except ValueError as exc:
            raise ConfigError(f"unknown condition {token!r}") from exc
    eps = parse_ratio(args.eps)
    reports = []
    series = None
    for cond in wanted:
        if cond in (Condition.ER, Condition.KS):
            if series is None:
                series = MomentSeries.from_model(model, args.horizon)
            fn = eval_er if cond == Condition.ER else eval_ks
            reports.append(fn(series, args.tail_start))
        elif cond == Condition.SUB:
            reports.append(eval_sub(model, args.horizon, eps, tail_start=args.tail_start))
        elif cond == Condition.D:
            reports.append(
                eval_d(model, args.horizon, eps, paths=args.paths, seed=args.seed)
            )
        elif cond == Condition.IO:
            reports.append(
                eval_io(model, args.horizon, paths=max(1000, args.paths), seed=args.seed)
            )
        elif cond == Condition.B:
            reports.append(eval_b(model, args.horizon))
        elif cond in (Condition.NOP, Condition.PWI):
            scan = eval_cov(model, (0, min(args.cov_window, args.horizon)))
            reports.append(
                scan.nop_report if cond == Condition.NOP else scan.pwi_report
            )
        elif cond == Condition.IND:
            reports.append(eval_ind(model, (0, min(args.cov_window, args.horizon))))
    for report in reports:
        print(f"{report.condition.value}: {report.verdict.value} ({report.method.value})")
    if args.out:
        reporting.write_condition_outputs(
            reports, args.out, prefix="model", fmt=args.format, figures=args.figures
        )
        print(f"wrote condition reports to {args.out}")
    else:
        payload = [r.to_json_dict() for r in reports]
        print(json.dumps(reporting.json_ready(payload), indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_experiment(args) -> int:
    kwargs = {"seed": args.seed}
    if args.name in ("er-not-d", "io-not-sub", "nop-implies-d-demo"):
        kwargs["paths"] = args.paths
        if args.horizon is not None:
            kwargs["horizon"] = args.horizon
    elif args.name == "d-not-er":
        kwargs["paths"] = args.paths
        kwargs["max_exponent"] = args.max_exponent
    elif args.name == "bruss-demo":
        kwargs = {}
        if args.horizon is not None:
            kwargs["horizon"] = args.horizon
    elif args.name == "diagram-sweep":
        kwargs["paths"] = args.paths
    result = run_experiment(args.name, **kwargs)
    if args.name == "diagram-sweep":
        print(f"sweep sound: {result.sound}")
        if args.out:
            reporting.write_sweep_outputs(
                result, args.out, fmt=args.format, figures=args.figures
            )
            print(f"wrote sweep outputs to {args.out}")
        else:
            print(json.dumps(result.to_json_dict(), indent=2, sort_keys=True))
        return EXIT_OK if result.sound else EXIT_INTERNAL
    for check in result.checks:
        mark = "pass" if check.passed else "FAIL"
        detail = f" ({check.detail})" if check.detail else ""
        print(f"[{mark}] {check.label}{detail}")
    if args.out:
        reporting.write_experiment_outputs(
            result, args.out, fmt=args.format, figures=args.figures
        )
        print(f"wrote experiment outputs to {args.out}")
    else:
        print(json.dumps(result.to_json_dict(), indent=2, sort_keys=True))
    return EXIT_OK if result.passed else EXIT_INTERNAL


def _cmd_sweep(args) -> int:
    result = run_diagram_sweep(paths=args.paths, seed=args.seed)
    for model, row in result.matrix.items():
        cells = " ".join(f"{c.value}={r.verdict.value.split('-')[0]}" for c, r in row.items())
        print(f"{model}: {cells}")
    print(f"sweep sound: {result.sound}")
    if args.out:
        reporting.write_sweep_outputs(
            result, args.out, fmt=args.format, figures=args.figures
        )
        print(f"wrote sweep outputs to {args.out}")
    return EXIT_OK if result.sound else EXIT_INTERNAL


def _cmd_validate(args) -> int:
    model = model_from_config(args.model)
    space = discretize(model, args.n)
    mismatches = []
    for n in range(1, args.n + 1):
        if enumerate_pmf(space, n) != model.exact_pmf(n):
            mismatches.append(n)
    cov_mismatches = []
    if model.has_pairwise:
        for i in range(args.n):
            for j in range(i + 1, args.n):
                exact = model.pairwise(i, j) - model.marginal(i) * model.marginal(j)
                if enumerate_cov(space, i, j) != exact:
                    cov_mismatches.append((i, j))
    sampling = sampling_validation(space, args.paths, args.seed)
    model_check = model_sampling_check(model, args.n, args.paths, args.seed)
    payload = {
        "n": args.n,
        "paths": args.paths,
        "seed": args.seed,
        "pmf_mismatches": mismatches,
        "cov_mismatches": cov_mismatches,
        "pattern_sampling_passed": sampling.passed,
        "pattern_max_se_units": sampling.max_se_units,
        "count_sampling_passed": model_check.passed,
        "count_max_se_units": model_check.max_se_units,
    }
    _emit(args, payload, "validate")
    if mismatches or cov_mismatches:
        print("enumeration disagrees with the exact engines", file=sys.stderr)
        return EXIT_INTERNAL
    print(
        f"enumeration matches exactly; sampling within "
        f"{max(sampling.max_se_units, model_check.max_se_units):.2f} standard errors"
    )
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    handlers = {
        "pmf": _cmd_pmf,
        "moments": _cmd_moments,
        "conditions": _cmd_conditions,
        "experiment": _cmd_experiment,
        "sweep": _cmd_sweep,
        "validate": _cmd_validate,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CapabilityError, SupportCapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    except BclabError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
