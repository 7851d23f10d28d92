"""Counterexample reproducers and the implication-diagram sweep.

Each runner builds its models, certifies the exact facts that make the
construction work, attaches evaluator reports, and returns a reproducible
ExperimentReport. Nothing here touches the filesystem; serialization and
figures live in ``reporting``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

from .conditions import (
    IMPLICATIONS,
    Condition,
    ConditionReport,
    Method,
    Verdict,
    bruss_sum,
    build_nk_subsequence,
    chebyshev_tail_check,
    eval_b,
    eval_cov,
    eval_d,
    eval_er,
    eval_io,
    eval_ind,
    eval_ks,
    eval_sub,
    variance_bound_check,
)
from .galton import GaltonCoefficients, GaltonModel, absorption_probability, closed_form_pmf
from .models import (
    BernoulliModel,
    IntervalModel,
    RunModel,
    RunPattern,
    run_model_from_selection,
    run_second_moment_ratio,
    select_run_lengths,
)
from .probability import (
    ONE,
    ZERO,
    DomainError,
    EventModel,
    HorizonError,
    MomentSeries,
    iter_moment_records,
    pmf_moments,
    ratio_law,
)

QUARTER = Fraction(1, 4)
EXPERIMENT_NAMES = (
    "er-not-d",
    "d-not-er",
    "io-not-sub",
    "nop-implies-d-demo",
    "bruss-demo",
    "diagram-sweep",
)


@dataclass(frozen=True)
class Check:
    label: str
    passed: bool
    detail: str = ""


@dataclass
class ExperimentReport:
    name: str
    params: dict
    checks: list[Check] = field(default_factory=list)
    series: dict[str, list[tuple[int, Fraction]]] = field(default_factory=dict)
    condition_reports: list[ConditionReport] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, label: str, passed: bool, detail: str = "") -> None:
        self.checks.append(Check(label, bool(passed), detail))

    def to_json_dict(self) -> dict:
        from .reporting import json_ready

        return {
            "name": self.name,
            "params": json_ready(self.params),
            "passed": self.passed,
            "checks": [
                {"label": c.label, "passed": c.passed, "detail": c.detail}
                for c in self.checks
            ],
            "series": {k: json_ready(v) for k, v in self.series.items()},
            "condition_reports": [r.to_json_dict() for r in self.condition_reports],
            "notes": list(self.notes),
        }


# ---------------------------------------------------------------------------
# ER holds, D fails: alternating runs
# ---------------------------------------------------------------------------


def run_er_not_d(
    horizon: int = 4000, *, paths: int = 1000, seed: int = 0
) -> ExperimentReport:
    """Alternating-run model: second moments certified to 1, ratio stuck.

    Sure-run ends carry exact certificates E[X_n^2] - 1 < 2^-i (i the run
    number); every half-run end has the exact two-point ratio law
    {4/3: 1/2, 2/3: 1/2}, so P(|X_n - 1| >= 1/4) = 1 there.
    """
    count = 0
    selection = None
    while True:
        trial = select_run_lengths(count + 1)
        if not trial.complete or 2 * sum(trial.lengths) > horizon:
            break
        selection = trial
        count += 1
    if selection is None:
        raise HorizonError(f"horizon {horizon} is shorter than the first block")
    model = run_model_from_selection(selection)
    pattern = model.pattern
    model_horizon = pattern.total_events()
    report = ExperimentReport(
        name="er-not-d",
        params={
            "horizon": horizon,
            "model_horizon": model_horizon,
            "paths": paths,
            "seed": seed,
            "run_lengths": list(selection.lengths),
        },
    )

    gap_series = []
    for cert in selection.certificates:
        gap_series.append((cert.end_index, cert.gap))
        report.check(
            f"sure-run {cert.run} end n={cert.end_index}: gap < 2^-{cert.run}",
            cert.gap < cert.target,
            f"gap={cert.gap}",
        )
        prefix = pattern.prefix_total(cert.run)
        a = pattern.run_lengths[cert.run - 1]
        formula = run_second_moment_ratio(prefix, a)
        pmf = model.exact_pmf(cert.end_index)
        mu, s2 = pmf_moments(pmf)
        report.check(
            f"sure-run {cert.run}: closed formula equals p.m.f. ratio",
            formula == s2 / (mu * mu),
            f"value={formula}",
        )
    report.series["second_moment_gap_at_run_ends"] = gap_series
    report.series["per_index_certificate"] = [
        (c.end_index, ONE if c.meets_index_target else ZERO)
        for c in selection.certificates
    ]
    report.notes.append(
        "The stronger per-index certificate gap < 2^-n is met only by the "
        "first two runs; it is infeasible afterwards because the gap decays "
        "polynomially in the run length while 2^-n decays exponentially."
    )

    two_point = {Fraction(2, 3): Fraction(1, 2), Fraction(4, 3): Fraction(1, 2)}
    for i in range(1, len(selection.lengths) + 1):
        n = pattern.low_run_end(i)
        pmf = model.exact_pmf(n)
        mu = pmf.mean()
        law = dict(ratio_law(pmf, mu))
        dev = pmf.mass_where(lambda c, mu=mu: abs(Fraction(c) - mu) >= QUARTER * mu)
        report.check(
            f"half-run {i} end n={n}: ratio law is {{4/3, 2/3}} fair",
            law == two_point,
            f"law={sorted(law.items())}",
        )
        report.check(
            f"half-run {i} end n={n}: P(|X-1| >= 1/4) = 1",
            dev == 1,
            f"mass={dev}",
        )

    series = MomentSeries.from_model(model, model_horizon)
    report.series["ex2"] = [(r.n, r.ex2) for r in series.iter_records()]
    tail_start = max(1, model_horizon // 2)
    tail_certs = [c for c in selection.certificates if c.end_index >= tail_start]
    matched_tol = tail_certs[-1].target if tail_certs else selection.certificates[-1].target
    er_report = eval_er(series, tail_start, tolerance=matched_tol)
    report.notes.append(
        "The second-moment tolerance is matched to the certificate level "
        f"2^-{len(selection.lengths)} reached inside the tail window; the "
        "1e-6 default would need astronomically long runs."
    )
    d_report = eval_d(model, model_horizon, QUARTER, paths=paths, seed=seed)
    report.condition_reports += [er_report, d_report]
    report.check("second-moment condition holds at horizon", er_report.verdict == Verdict.HOLDS)
    report.check("ratio convergence fails at horizon", d_report.verdict == Verdict.FAILS)
    return report


# ---------------------------------------------------------------------------
# D holds, ER fails: logarithmic-curve recursive sampling
# ---------------------------------------------------------------------------


def run_d_not_er(
    max_exponent: int = 40,
    *,
    ladder_horizon: int = 2**12,
    paths: int = 1000,
    seed: int = 0,
    growth_bar: Fraction = Fraction(10),
) -> ExperimentReport:
    """Log-curve model: count absorbed onto floor(log2 n), second moment grows.

    Cross-validates the closed-form law against the one-event recursion,
    tracks the absorbed mass toward 1, and evaluates E[X^2] at powers of two
    until it passes the growth bar.
    """
    if not 2 <= max_exponent <= 64:
        raise DomainError(f"max_exponent must be in [2, 64], got {max_exponent}")
    model = GaltonModel(GaltonCoefficients.log_curve())
    report = ExperimentReport(
        name="d-not-er",
        params={
            "max_exponent": max_exponent,
            "ladder_horizon": ladder_horizon,
            "paths": paths,
            "seed": seed,
            "growth_bar": growth_bar,
        },
    )

    mismatches = [
        n
        for n in range(2, ladder_horizon + 1)
        if closed_form_pmf(n) != model.exact_pmf(n)
    ]
    report.check(
        f"closed form equals recursion for 2 <= n <= {ladder_horizon}",
        not mismatches,
        f"first mismatch: {mismatches[0]}" if mismatches else "exact equality",
    )

    absorb_series = []
    prev = ZERO
    increasing = True
    for j in range(1, min(max_exponent, 30) + 1):
        val = absorption_probability(2**j)
        increasing &= val >= prev
        prev = val
        absorb_series.append((2**j, val))
    report.series["absorbed_mass"] = absorb_series
    report.check("absorbed mass is nondecreasing toward 1", increasing and prev < 1)

    d_report = eval_d(model, ladder_horizon, QUARTER, paths=paths, seed=seed)
    report.condition_reports.append(d_report)
    report.check("ratio convergence holds at horizon", d_report.verdict == Verdict.HOLDS)
    attach = d_report.details.get("not_absorbed_at_m", {})
    if attach:
        m, exact_rest = sorted(attach.items())[-1]
        est = dict(d_report.diagnostics)[m]
        radius = d_report.details["confidence_radii"][m]
        report.check(
            "Monte Carlo deviation rate matches the exact unabsorbed mass",
            abs(float(est) - float(exact_rest)) <= max(4 * radius, 0.01),
            f"estimate={float(est):.4f} exact={float(exact_rest):.4f}",
        )

    ex2_series = []
    first_crossing = None
    increasing_from = None
    prev_val = None
    for j in range(1, max_exponent + 1):
        pmf = closed_form_pmf(2**j)
        mu, s2 = pmf_moments(pmf)
        val = s2 / (mu * mu)
        ex2_series.append((j, val))
        if prev_val is not None:
            if val > prev_val:
                if increasing_from is None:
                    increasing_from = j - 1
            else:
                increasing_from = None
        if first_crossing is None and val > growth_bar:
            first_crossing = j
        prev_val = val
    report.series["ex2_at_powers_of_two"] = ex2_series
    report.check(
        f"E[X^2] at 2^j exceeds {growth_bar} by j <= {max_exponent}",
        first_crossing is not None,
        f"first crossing at j={first_crossing}",
    )
    report.check(
        "E[X^2] at 2^j is eventually increasing",
        increasing_from is not None,
        f"increasing from j={increasing_from}",
    )
    report.params["first_crossing"] = first_crossing
    report.params["increasing_from"] = increasing_from

    series = MomentSeries.from_model(model, ladder_horizon)
    er_report = eval_er(series)
    ks_report = eval_ks(series)
    report.condition_reports += [er_report, ks_report]
    report.check("second-moment condition fails at horizon", er_report.verdict == Verdict.FAILS)
    report.check("moment-ratio condition fails at horizon", ks_report.verdict == Verdict.FAILS)
    return report


# ---------------------------------------------------------------------------
# IO holds, SUB fails: period-2 thresholds
# ---------------------------------------------------------------------------


def period2_model() -> IntervalModel:
    return IntervalModel.cycle([ONE, Fraction(1, 2)])


def run_io_not_sub(
    horizon: int = 10**4, *, paths: int = 1000, seed: int = 0
) -> ExperimentReport:
    """Period-2 threshold model: events keep occurring, no subsequence settles.

    With eps = 1/4 the deviation mass d(n) = P(|X_n - 1| > 1/4) is exactly 1
    at every even n >= 2 and at every odd n >= 7, so it converges to 1.
    """
    if horizon < 4:
        raise DomainError(f"horizon must be >= 4, got {horizon}")
    model = period2_model()
    report = ExperimentReport(
        name="io-not-sub",
        params={"horizon": horizon, "paths": paths, "seed": seed, "eps": QUARTER},
    )
    d_series = []
    bad_even = []
    bad_odd_tail = []
    for n, pmf in model.iter_pmfs(horizon):
        mu = pmf.mean()
        d = pmf.mass_where(lambda c, mu=mu: abs(Fraction(c) - mu) > QUARTER * mu)
        d_series.append((n, d))
        if n % 2 == 0 and n >= 2 and d != 1:
            bad_even.append(n)
        if n % 2 == 1 and n >= 7 and d != 1:
            bad_odd_tail.append(n)
    report.series["deviation_mass"] = d_series
    report.check("d(n) = 1 exactly at every even n >= 2", not bad_even)
    report.check("d(n) = 1 exactly at every odd n >= 7", not bad_odd_tail)
    report.check("d(horizon) = 1 exactly", d_series[-1][1] == 1)

    sure_marginals_ok = all(model.marginal(i) == 1 for i in range(0, min(horizon, 64), 2))
    report.check(
        "every other event is sure (occurrence witness)",
        sure_marginals_ok,
        "thresholds 1 sit at even 0-based indices",
    )

    bruss_ok = True
    detail = ""
    for m in (0, 1, 5):
        series = bruss_sum(model, m, min(horizon, 512))
        if any(t != 1 for t in series.terms):
            bruss_ok = False
            detail = f"non-unit term for window start {m}"
            break
        if any(s != idx + 1 for idx, s in enumerate(series.partial_sums)):
            bruss_ok = False
            detail = f"partial sums not counting for window start {m}"
            break
    report.check("conditional-sum terms are all 1 (sure-event convention)", bruss_ok, detail)

    sub_report = eval_sub(model, horizon, QUARTER)
    io_report = eval_io(model, min(horizon, 2048), paths=paths, seed=seed)
    b_report = eval_b(model, min(horizon, 512))
    report.condition_reports += [sub_report, io_report, b_report]
    report.check("subsequence condition fails at horizon", sub_report.verdict == Verdict.FAILS)
    report.check("occurrence condition holds at horizon", io_report.verdict == Verdict.HOLDS)
    report.check("conditional-sum condition holds at horizon", b_report.verdict == Verdict.HOLDS)
    return report


# ---------------------------------------------------------------------------
# Positive-direction demos
# ---------------------------------------------------------------------------


def run_nop_implies_d_demo(
    horizon: int = 512, *, paths: int = 2000, seed: int = 0
) -> ExperimentReport:
    """Machinery of the nonpositive-covariance route to ratio convergence.

    On the fair independent model: variance bound, tail bounds, the
    square-targeted subsequence with its mean sandwich, and the Monte Carlo
    ratio check.
    """
    model = BernoulliModel.constant(Fraction(1, 2))
    report = ExperimentReport(
        name="nop-implies-d-demo",
        params={"horizon": horizon, "paths": paths, "seed": seed},
    )

    scan = eval_cov(model, (0, min(48, horizon - 1)))
    report.condition_reports += [scan.nop_report, scan.pwi_report]
    report.check("pair covariances vanish on the window", scan.pwi_violations == 0)

    var_records = variance_bound_check(model, horizon)
    report.series["variance"] = [(r.n, r.var) for r in var_records]
    report.check("Var(S_n) <= mu_n at every n", all(r.holds for r in var_records))

    eps_values = (QUARTER, Fraction(1, 2), ONE)
    violations = chebyshev_tail_check(model, min(horizon, 256), eps_values)
    report.check(
        "exact tails respect 1/(eps^2 mu_n)",
        not violations,
        f"violations: {len(violations)}",
    )

    series = MomentSeries.from_model(model, horizon)
    nk = build_nk_subsequence(series)
    report.series["nu_k"] = [(r.k, r.nu_k) for r in nk]
    report.check(
        "square-targeted means satisfy k^2 <= nu_k <= k^2 + 1",
        all(r.lower_ok and r.upper_ok for r in nk),
        f"k up to {nk[-1].k}",
    )
    majorant = [(r.k, Fraction(1, r.k * r.k)) for r in nk]
    report.series["tail_majorant"] = majorant

    d_report = eval_d(model, horizon, QUARTER, paths=paths, seed=seed)
    report.condition_reports.append(d_report)
    report.check("ratio convergence holds at horizon", d_report.verdict == Verdict.HOLDS)
    return report


def run_bruss_demo(horizon: int = 64) -> ExperimentReport:
    """Conditional sums over increasing unions on four reference models."""
    report = ExperimentReport(name="bruss-demo", params={"horizon": horizon})
    cases = {
        "sure": (IntervalModel.constant(ONE), ONE),
        "half-interval": (IntervalModel.constant(Fraction(1, 2)), ZERO),
        "fair-independent": (BernoulliModel.constant(Fraction(1, 2)), Fraction(1, 2)),
        "period-2": (period2_model(), ONE),
    }
    for name, (model, expected_term) in cases.items():
        series = bruss_sum(model, 0, horizon)
        report.series[f"partial_sums_{name}"] = list(
            zip(series.indices, series.partial_sums)
        )
        report.check(
            f"{name}: product form of never-occurrence matches the direct value",
            series.product_no_occurrence == series.no_occurrence,
            f"value={series.no_occurrence}",
        )
        report.check(
            f"{name}: every term equals {expected_term}",
            all(t == expected_term for t in series.terms),
        )
    return report


# ---------------------------------------------------------------------------
# Diagram sweep
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepCell:
    verdict: Verdict
    method: Method
    horizon: int


@dataclass
class SweepResult:
    matrix: dict[str, dict[Condition, ConditionReport]]
    contradictions: list[dict]
    params: dict

    @property
    def sound(self) -> bool:
        return not self.contradictions

    def cells(self) -> dict[str, dict[str, SweepCell]]:
        return {
            model: {
                cond.value: SweepCell(r.verdict, r.method, r.horizon)
                for cond, r in row.items()
            }
            for model, row in self.matrix.items()
        }

    def to_json_dict(self) -> dict:
        from .reporting import json_ready

        return {
            "params": json_ready(self.params),
            "sound": self.sound,
            "contradictions": json_ready(self.contradictions),
            "matrix": {
                model: {cond.value: r.to_json_dict() for cond, r in row.items()}
                for model, row in self.matrix.items()
            },
        }


def sweep_zoo() -> dict[str, Callable[[], EventModel]]:
    """Shipped model zoo for the sweep, freshly constructed per call."""
    return {
        "fair-independent": lambda: BernoulliModel.constant(Fraction(1, 2)),
        "half-interval": lambda: IntervalModel.constant(Fraction(1, 2)),
        "period-2": period2_model,
        "alternating-runs": lambda: run_model_from_selection(select_run_lengths(8)),
        "log-curve": lambda: GaltonModel(GaltonCoefficients.log_curve()),
    }


_SWEEP_PLANS: dict[str, dict] = {
    "fair-independent": {
        "moment_horizon": 2**20,
        "moment_stream": True,
        "sub_horizon": 512,
        "cov_window": (0, 48),
        "b_horizon": 256,
        "d_horizon": 512,
        "io_horizon": 256,
    },
    "half-interval": {
        "moment_horizon": 512,
        "sub_horizon": 512,
        "cov_window": (0, 48),
        "b_horizon": 256,
        "d_horizon": 512,
        "io_horizon": 256,
    },
    "period-2": {
        "moment_horizon": 2048,
        "sub_horizon": 2048,
        "cov_window": (0, 48),
        "b_horizon": 256,
        "d_horizon": 512,
        "io_horizon": 256,
    },
    "alternating-runs": {
        "moment_horizon": None,  # the full pattern
        "sub_horizon": None,
        "cov_window": (0, 48),
        "b_horizon": None,
        "d_horizon": None,
        "io_horizon": None,
        "er_tolerance": Fraction(1, 2**8),
    },
    "log-curve": {
        "moment_horizon": 2**12,
        "sub_horizon": 2**12,
        "cov_window": (0, 40),
        "b_horizon": 256,
        "d_horizon": 2**12,
        "io_horizon": 512,
    },
}


def _evaluate_model(name: str, model: EventModel, paths: int, seed: int):
    plan = dict(_SWEEP_PLANS[name])
    if isinstance(model, RunModel):
        total = model.pattern.total_events()
        for key in ("moment_horizon", "sub_horizon", "b_horizon", "d_horizon", "io_horizon"):
            if plan.get(key) is None:
                plan[key] = total if key != "b_horizon" else min(total, 512)
    row: dict[Condition, ConditionReport] = {}

    horizon = plan["moment_horizon"]
    tolerance = plan.get("er_tolerance", Fraction(1, 10**6))
    if plan.get("moment_stream"):
        start = max(1, horizon // 2)
        row[Condition.ER] = eval_er(
            iter_moment_records(model, horizon, start=start), tolerance=tolerance
        )
        row[Condition.KS] = eval_ks(
            iter_moment_records(model, horizon, start=start), tolerance=tolerance
        )
    else:
        series = MomentSeries.from_model(model, horizon)
        row[Condition.ER] = eval_er(series, tolerance=tolerance)
        row[Condition.KS] = eval_ks(series, tolerance=tolerance)

    row[Condition.SUB] = eval_sub(model, plan["sub_horizon"], QUARTER)
    scan = eval_cov(model, plan["cov_window"])
    row[Condition.NOP] = scan.nop_report
    row[Condition.PWI] = scan.pwi_report
    row[Condition.IND] = eval_ind(model, plan["cov_window"])
    row[Condition.B] = eval_b(model, plan["b_horizon"])
    row[Condition.D] = eval_d(model, plan["d_horizon"], QUARTER, paths=paths, seed=seed)
    row[Condition.IO] = eval_io(
        model, plan["io_horizon"], paths=max(1000, paths // 2), seed=seed
    )
    return row


def run_diagram_sweep(
    models: Mapping[str, EventModel] | None = None,
    *,
    paths: int = 1000,
    seed: int = 0,
) -> SweepResult:
    """All nine conditions on every zoo model, with edge-soundness checking.

    A contradiction is an implication edge P -> Q with P holding and Q
    failing, both by exact methods, on the same model. Monte Carlo verdicts
    never participate: finite sampling cannot refute an implication.
    """
    if models is None:
        models = {name: build() for name, build in sweep_zoo().items()}
    matrix: dict[str, dict[Condition, ConditionReport]] = {}
    for name, model in models.items():
        if name not in _SWEEP_PLANS:
            raise DomainError(f"no sweep plan for model {name!r}")
        matrix[name] = _evaluate_model(name, model, paths, seed)
    contradictions = []
    for name, row in matrix.items():
        for premise, conclusion in IMPLICATIONS:
            p, q = row.get(premise), row.get(conclusion)
            if p is None or q is None:
                continue
            if (
                p.verdict == Verdict.HOLDS
                and q.verdict == Verdict.FAILS
                and p.method == Method.EXACT
                and q.method == Method.EXACT
            ):
                contradictions.append(
                    {
                        "model": name,
                        "edge": f"{premise.value} -> {conclusion.value}",
                        "premise_horizon": p.horizon,
                        "conclusion_horizon": q.horizon,
                    }
                )
    return SweepResult(
        matrix=matrix,
        contradictions=contradictions,
        params={"paths": paths, "seed": seed, "models": sorted(models)},
    )


def run_experiment(name: str, **kwargs):
    """Dispatch an experiment by its public name."""
    runners = {
        "er-not-d": run_er_not_d,
        "d-not-er": run_d_not_er,
        "io-not-sub": run_io_not_sub,
        "nop-implies-d-demo": run_nop_implies_d_demo,
        "bruss-demo": run_bruss_demo,
        "diagram-sweep": run_diagram_sweep,
    }
    if name not in runners:
        raise DomainError(f"unknown experiment {name!r}; choose from {EXPERIMENT_NAMES}")
    return runners[name](**kwargs)
