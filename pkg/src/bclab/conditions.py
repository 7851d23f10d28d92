"""Finite-horizon evaluators for the nine weak-independence conditions.

Every verdict is explicitly "-at-horizon": a finite diagnostic cannot decide
a liminf/limsup statement, so each evaluator records its tail window and
thresholds, answers holds/fails only on decisive evidence, and says
inconclusive otherwise. Exact evaluators keep every diagnostic rational;
Monte Carlo evaluators report binomial confidence radii.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

from .probability import (
    ONE,
    ZERO,
    CapabilityError,
    DomainError,
    EventModel,
    HorizonError,
    MomentRecord,
    MomentSeries,
    SparsePmf,
    chebyshev_bound,
    pmf_moments,
    ratio_deviation_mass,
    spawn_rng,
)


class Condition(str, enum.Enum):
    IND = "IND"  # mutually independent events (eventually)
    PWI = "PWI"  # pairwise independent events (eventually)
    NOP = "NOP"  # nonpositive indicator covariances (eventually)
    ER = "ER"  # liminf E[X_n^2] = 1
    KS = "KS"  # limsup E[S_n]^2 / E[S_n^2] = 1
    D = "D"  # X_n -> 1 almost surely
    SUB = "SUB"  # some subsequence of X_n -> 1 in probability
    B = "B"  # divergent conditional sums over the increasing union events
    IO = "IO"  # almost surely infinitely many events occur


class Verdict(str, enum.Enum):
    HOLDS = "holds-at-horizon"
    FAILS = "fails-at-horizon"
    INCONCLUSIVE = "inconclusive"


class Method(str, enum.Enum):
    EXACT = "exact"
    MONTE_CARLO = "monte-carlo"


#: Edges of the implication diagram among the nine conditions. ER and KS are
#: equivalent, as are B and IO; the two counterexample directions (ER vs D)
#: and the missing IO -> SUB edge are deliberately absent.
IMPLICATIONS: tuple[tuple[Condition, Condition], ...] = (
    (Condition.IND, Condition.PWI),
    (Condition.PWI, Condition.NOP),
    (Condition.NOP, Condition.ER),
    (Condition.NOP, Condition.D),
    (Condition.ER, Condition.KS),
    (Condition.KS, Condition.ER),
    (Condition.ER, Condition.SUB),
    (Condition.D, Condition.SUB),
    (Condition.SUB, Condition.IO),
    (Condition.IO, Condition.B),
    (Condition.B, Condition.IO),
)


@dataclass(frozen=True)
class ConditionReport:
    condition: Condition
    horizon: int
    diagnostics: tuple[tuple[int, Fraction | float], ...]
    verdict: Verdict
    method: Method
    details: Mapping = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        from .reporting import json_ready

        return {
            "condition": self.condition.value,
            "horizon": self.horizon,
            "verdict": self.verdict.value,
            "method": self.method.value,
            "diagnostics": json_ready(list(self.diagnostics)),
            "details": json_ready(dict(self.details)),
        }


DEFAULT_TOLERANCE = Fraction(1, 10**6)
DEFAULT_GAP_BAR = Fraction(1, 100)
DEFAULT_PROB_THRESHOLD = Fraction(1, 20)
DEFAULT_FAIL_BAR = Fraction(1, 2)
DEFAULT_DIVERGENCE_BAR = Fraction(5)


def _iter_records(series) -> Iterator[MomentRecord]:
    if isinstance(series, MomentSeries):
        return series.iter_records()
    return iter(series)


def _default_tail_start(series, tail_start):
    if tail_start is not None:
        return tail_start
    if isinstance(series, MomentSeries):
        return max(series.start, series.horizon // 2)
    return None  # iterator input: the whole stream is the tail


def eval_er(
    series,
    tail_start: int | None = None,
    *,
    tolerance: Fraction = DEFAULT_TOLERANCE,
    fail_gap: Fraction = DEFAULT_GAP_BAR,
) -> ConditionReport:
    """Running minimum of E[X_n^2] over the tail window.

    Holds at horizon when the minimum is within ``tolerance`` of 1; fails
    when it stays at least ``fail_gap`` above 1 (a construction-scale gap);
    inconclusive in between. Exact equality with 1 is reported separately.
    """
    tail_start = _default_tail_start(series, tail_start)
    best = None
    best_n = None
    horizon = None
    steps: list[tuple[int, Fraction]] = []
    for rec in _iter_records(series):
        horizon = rec.n
        if tail_start is not None and rec.n < tail_start:
            continue
        if best is None or rec.ex2 < best:
            best = rec.ex2
            best_n = rec.n
            steps.append((rec.n, best))
    if best is None:
        raise HorizonError("empty tail window for the second-moment scan")
    if steps[-1][0] != horizon:
        steps.append((horizon, best))
    steps = list(_thin(steps))
    if best <= 1 + tolerance:
        verdict = Verdict.HOLDS
    elif best >= 1 + fail_gap:
        verdict = Verdict.FAILS
    else:
        verdict = Verdict.INCONCLUSIVE
    return ConditionReport(
        condition=Condition.ER,
        horizon=horizon,
        diagnostics=tuple(steps),
        verdict=verdict,
        method=Method.EXACT,
        details={
            "tail_start": tail_start,
            "tolerance": tolerance,
            "fail_gap": fail_gap,
            "minimum": best,
            "argmin": best_n,
            "attains_one_exactly": best == 1,
        },
    )


def eval_ks(
    series,
    tail_start: int | None = None,
    *,
    tolerance: Fraction = DEFAULT_TOLERANCE,
    fail_gap: Fraction = DEFAULT_GAP_BAR,
) -> ConditionReport:
    """Running maximum of E[S_n]^2 / E[S_n^2] over the tail window.

    The statistic is exactly 1/E[X_n^2], so the verdict is defined through
    the dual thresholds and agrees with ``eval_er`` on the same series.
    """
    tail_start = _default_tail_start(series, tail_start)
    best = None
    best_n = None
    horizon = None
    steps: list[tuple[int, Fraction]] = []
    for rec in _iter_records(series):
        horizon = rec.n
        if tail_start is not None and rec.n < tail_start:
            continue
        value = 1 / rec.ex2
        if best is None or value > best:
            best = value
            best_n = rec.n
            steps.append((rec.n, best))
    if best is None:
        raise HorizonError("empty tail window for the moment-ratio scan")
    if steps[-1][0] != horizon:
        steps.append((horizon, best))
    steps = list(_thin(steps))
    if best >= 1 / (1 + tolerance):
        verdict = Verdict.HOLDS
    elif best <= 1 / (1 + fail_gap):
        verdict = Verdict.FAILS
    else:
        verdict = Verdict.INCONCLUSIVE
    return ConditionReport(
        condition=Condition.KS,
        horizon=horizon,
        diagnostics=tuple(steps),
        verdict=verdict,
        method=Method.EXACT,
        details={
            "tail_start": tail_start,
            "tolerance": tolerance,
            "fail_gap": fail_gap,
            "maximum": best,
            "argmax": best_n,
            "attains_one_exactly": best == 1,
        },
    )


def _thin(points: Sequence[tuple[int, Fraction]], keep: int = 512) -> tuple:
    if len(points) <= keep:
        return tuple(points)
    stride = len(points) / (keep - 1)
    picked = [points[min(len(points) - 1, round(i * stride))] for i in range(keep - 1)]
    picked.append(points[-1])
    seen = set()
    out = []
    for p in picked:
        if p[0] not in seen:
            seen.add(p[0])
            out.append(p)
    return tuple(out)


def eval_sub(
    model: EventModel,
    horizon: int,
    eps: Fraction,
    *,
    tail_start: int | None = None,
    threshold: Fraction = DEFAULT_PROB_THRESHOLD,
    fail_bar: Fraction = DEFAULT_FAIL_BAR,
) -> ConditionReport:
    """Exact d(n) = P(|X_n - 1| > eps) scan for a convergent subsequence.

    Holds when the tail infimum of d drops to ``threshold`` or below (those
    indices are the candidate subsequence); fails when the tail infimum
    stays at or above ``fail_bar``.
    """
    if not model.has_exact_pmf:
        raise CapabilityError("the subsequence scan needs exact p.m.f.s")
    if tail_start is None:
        tail_start = max(1, horizon // 2, model.zero_mean_prefix() + 1)
    series: list[tuple[int, Fraction]] = []
    best = None
    candidates: list[int] = []
    for n, pmf in model.iter_pmfs(horizon):
        mu = pmf.mean()
        d = ratio_deviation_mass(pmf, eps, mu=mu, strict=True)
        series.append((n, d))
        if n >= tail_start:
            if best is None or d < best:
                best = d
            if d <= threshold and len(candidates) < 64:
                candidates.append(n)
    if best is None:
        raise HorizonError("empty tail window for the subsequence scan")
    if best <= threshold:
        verdict = Verdict.HOLDS
    elif best >= fail_bar:
        verdict = Verdict.FAILS
    else:
        verdict = Verdict.INCONCLUSIVE
    return ConditionReport(
        condition=Condition.SUB,
        horizon=horizon,
        diagnostics=_thin(series),
        verdict=verdict,
        method=Method.EXACT,
        details={
            "eps": eps,
            "tail_start": tail_start,
            "threshold": threshold,
            "fail_bar": fail_bar,
            "tail_minimum": best,
            "candidate_subsequence": candidates,
        },
    )


def _deviation_bounds(mu: Fraction, eps: Fraction) -> tuple[int | None, int | None]:
    """Integer cutoffs for |S/mu - 1| > eps (strict), None when impossible."""
    if mu == 0:
        return None, None
    lo = mu * (1 - eps)  # deviation iff S < lo or S > hi
    hi = mu * (1 + eps)
    lo_int = -((-lo.numerator) // lo.denominator) - 1  # max int strictly below lo
    hi_int = hi.numerator // hi.denominator + 1  # min int strictly above hi
    return lo_int, hi_int


def eval_d(
    model: EventModel,
    horizon: int,
    eps: Fraction,
    *,
    m_grid: Sequence[int] | None = None,
    paths: int = 2000,
    seed: int = 0,
    threshold: float = 0.05,
) -> ConditionReport:
    """Monte Carlo estimate of P(sup_{m <= n <= horizon} |X_n - 1| > eps).

    One estimate per m in the grid; the verdict reads the largest m:
    holds when its estimate is at most ``threshold``, fails when at least
    1 - ``threshold``. Estimates are exact path fractions; normal-theory
    confidence radii are attached. When the model exposes an absorption
    law, the exact not-yet-absorbed mass at each m is attached as a
    cross-check.
    """
    if paths < 1000:
        raise DomainError(f"need at least 1000 paths, got {paths}")
    if m_grid is None:
        m_grid = sorted({1, max(1, horizon // 4), max(1, horizon // 2)})
    else:
        m_grid = sorted(set(int(m) for m in m_grid))
    if not m_grid or m_grid[0] < 1 or m_grid[-1] > horizon:
        raise DomainError(f"m grid {m_grid} inconsistent with horizon {horizon}")

    mu = ZERO
    cutoffs: list[tuple[int | None, int | None]] = []
    for n in range(1, horizon + 1):
        mu += model.marginal(n - 1)
        cutoffs.append(_deviation_bounds(mu, eps))

    exceed_counts = {m: 0 for m in m_grid}
    for p in range(paths):
        path = model.sample_path(horizon, spawn_rng(seed, p))
        s = 0
        last_dev = 0
        for n in range(1, horizon + 1):
            s += path[n - 1]
            lo, hi = cutoffs[n - 1]
            if lo is not None and (s <= lo or s >= hi):
                last_dev = n
        for m in m_grid:
            if last_dev >= m:
                exceed_counts[m] += 1

    estimates = {m: Fraction(exceed_counts[m], paths) for m in m_grid}
    radii = {
        m: 1.96 * (float(est) * (1 - float(est)) / paths) ** 0.5
        for m, est in estimates.items()
    }
    last = estimates[m_grid[-1]]
    if last <= Fraction(threshold).limit_denominator(10**9):
        verdict = Verdict.HOLDS
    elif last >= 1 - Fraction(threshold).limit_denominator(10**9):
        verdict = Verdict.FAILS
    else:
        verdict = Verdict.INCONCLUSIVE
    details = {
        "eps": eps,
        "paths": paths,
        "seed": seed,
        "threshold": threshold,
        "confidence_radii": radii,
    }
    if getattr(model, "has_absorption", False):
        details["not_absorbed_at_m"] = {
            m: 1 - model.absorption_probability(m) for m in m_grid if m >= 2
        }
    return ConditionReport(
        condition=Condition.D,
        horizon=horizon,
        diagnostics=tuple((m, estimates[m]) for m in m_grid),
        verdict=verdict,
        method=Method.MONTE_CARLO,
        details=details,
    )


def eval_io(
    model: EventModel,
    horizon: int,
    *,
    paths: int = 1000,
    seed: int = 0,
    threshold: float = 0.05,
) -> ConditionReport:
    """Monte Carlo check that occurrences keep arriving late in the horizon.

    Holds when the fraction of paths with an occurrence in the final window
    [horizon/2, horizon) exceeds 1 - ``threshold``. Exact union and
    conditional-sum cross-checks are attached when the model supports them.
    """
    if paths < 1000:
        raise DomainError(f"need at least 1000 paths, got {paths}")
    window_start = horizon // 2
    occurred = 0
    last_occurrence: list[int] = []
    total_counts = 0
    for p in range(paths):
        path = model.sample_path(horizon, spawn_rng(seed, p))
        total_counts += sum(path)
        last = -1
        for i in range(horizon - 1, -1, -1):
            if path[i]:
                last = i
                break
        last_occurrence.append(last)
        if last >= window_start:
            occurred += 1
    fraction = Fraction(occurred, paths)
    radius = 1.96 * (float(fraction) * (1 - float(fraction)) / paths) ** 0.5
    thr = Fraction(threshold).limit_denominator(10**9)
    verdict = Verdict.HOLDS if fraction > 1 - thr else Verdict.FAILS
    ordered = sorted(last_occurrence)
    details = {
        "paths": paths,
        "seed": seed,
        "threshold": threshold,
        "window_start": window_start,
        "confidence_radius": radius,
        "mean_count_at_horizon": total_counts / paths,
        "last_occurrence_quartiles": [
            ordered[0],
            ordered[paths // 4],
            ordered[paths // 2],
            ordered[(3 * paths) // 4],
            ordered[-1],
        ],
    }
    if model.has_union and horizon >= 1:
        details["window_union_prob"] = model.union_prob(window_start, horizon - 1)
        series = bruss_sum(model, window_start, horizon - 1)
        if series.partial_sums:
            details["bruss_partial_sum"] = series.partial_sums[-1]
    return ConditionReport(
        condition=Condition.IO,
        horizon=horizon,
        diagnostics=((window_start, fraction),),
        verdict=verdict,
        method=Method.MONTE_CARLO,
        details=details,
    )


# ---------------------------------------------------------------------------
# Covariance scans (NOP, PWI, IND)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CovarianceScan:
    window: tuple[int, int]
    pairs_checked: int
    nop_violations: int
    pwi_violations: int
    min_clean_start_nop: int | None
    min_clean_start_pwi: int | None
    worst_pair: tuple[int, int, Fraction] | None
    nop_report: ConditionReport
    pwi_report: ConditionReport


def eval_cov(model: EventModel, window: tuple[int, int]) -> CovarianceScan:
    """Exact covariance scan over all pairs in an index window.

    The NOP verdict asks every covariance to be <= 0 and the PWI verdict
    asks them to be exactly 0; both also report the minimal window start
    that would clear all violations (the "eventually" search).
    """
    if not model.has_pairwise:
        raise CapabilityError("covariance scan needs pairwise joints")
    start, end = window
    if not 0 <= start < end:
        raise DomainError(f"bad window {window}")
    marginals = {i: model.marginal(i) for i in range(start, end + 1)}
    nop_bad: list[tuple[int, int, Fraction]] = []
    pwi_bad: list[tuple[int, int, Fraction]] = []
    worst = None
    per_j: list[tuple[int, Fraction]] = []
    pairs = 0
    for j in range(start + 1, end + 1):
        worst_j = None
        for i in range(start, j):
            pairs += 1
            cov = model.pairwise(i, j) - marginals[i] * marginals[j]
            if worst_j is None or cov > worst_j:
                worst_j = cov
            if cov > 0:
                nop_bad.append((i, j, cov))
            if cov != 0:
                pwi_bad.append((i, j, cov))
            if worst is None or abs(cov) > abs(worst[2]):
                worst = (i, j, cov)
        per_j.append((j, worst_j))

    def clean_start(bad):
        if not bad:
            return start
        needed = max(min(i, j) for i, j, _ in bad) + 1
        return needed if needed < end else None

    nop_report = ConditionReport(
        condition=Condition.NOP,
        horizon=end,
        diagnostics=_thin(per_j),
        verdict=Verdict.HOLDS if not nop_bad else Verdict.FAILS,
        method=Method.EXACT,
        details={
            "window": list(window),
            "violations": len(nop_bad),
            "min_clean_start": clean_start(nop_bad),
        },
    )
    pwi_report = ConditionReport(
        condition=Condition.PWI,
        horizon=end,
        diagnostics=_thin(per_j),
        verdict=Verdict.HOLDS if not pwi_bad else Verdict.FAILS,
        method=Method.EXACT,
        details={
            "window": list(window),
            "violations": len(pwi_bad),
            "min_clean_start": clean_start(pwi_bad),
        },
    )
    return CovarianceScan(
        window=(start, end),
        pairs_checked=pairs,
        nop_violations=len(nop_bad),
        pwi_violations=len(pwi_bad),
        min_clean_start_nop=clean_start(nop_bad),
        min_clean_start_pwi=clean_start(pwi_bad),
        worst_pair=worst,
        nop_report=nop_report,
        pwi_report=pwi_report,
    )


def eval_ind(model: EventModel, window: tuple[int, int]) -> ConditionReport:
    """Independence verdict: by construction, or refuted through pair joints.

    Product-form models hold exactly. Otherwise any nonzero pair covariance
    refutes independence; a clean pairwise scan alone cannot certify mutual
    independence, so that outcome stays inconclusive.
    """
    start, end = window
    if model.independent_events:
        return ConditionReport(
            condition=Condition.IND,
            horizon=end,
            diagnostics=(),
            verdict=Verdict.HOLDS,
            method=Method.EXACT,
            details={"window": list(window), "by_construction": True},
        )
    if not model.has_pairwise:
        return ConditionReport(
            condition=Condition.IND,
            horizon=end,
            diagnostics=(),
            verdict=Verdict.INCONCLUSIVE,
            method=Method.EXACT,
            details={"window": list(window), "reason": "no pairwise capability"},
        )
    scan = eval_cov(model, window)
    verdict = Verdict.FAILS if scan.pwi_violations else Verdict.INCONCLUSIVE
    return ConditionReport(
        condition=Condition.IND,
        horizon=end,
        diagnostics=scan.pwi_report.diagnostics,
        verdict=verdict,
        method=Method.EXACT,
        details={
            "window": list(window),
            "by_construction": False,
            "pairwise_violations": scan.pwi_violations,
        },
    )


# ---------------------------------------------------------------------------
# Conditional sums over increasing unions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BrussSeries:
    """Exact conditional-sum series over the unions E_m^i of A_m..A_i.

    ``terms[t]`` is P(E_m^{i+1} | complement of E_m^i) at i = indices[t],
    with the convention that the term is 1 once P(E_m^i) = 1. The product
    form of the never-occurrence probability is carried alongside and must
    equal the direct value exactly.
    """

    m: int
    indices: tuple[int, ...]
    terms: tuple[Fraction, ...]
    partial_sums: tuple[Fraction, ...]
    unions: tuple[Fraction, ...]
    no_occurrence: Fraction
    product_no_occurrence: Fraction


def bruss_sum(model: EventModel, m: int, horizon: int) -> BrussSeries:
    """Partial sums of P(E_m^{i+1} | complement E_m^i) for i = m..horizon-1."""
    if not model.has_union:
        raise CapabilityError("conditional sums need exact union events")
    if not 0 <= m <= horizon:
        raise DomainError(f"need 0 <= m <= horizon, got ({m}, {horizon})")
    unions = []
    for _, u in model.iter_union_probs(m, horizon):
        unions.append(u)
    terms = []
    sums = []
    total = ZERO
    product = 1 - unions[0]
    for idx in range(len(unions) - 1):
        prev, nxt = unions[idx], unions[idx + 1]
        if prev == 1:
            term = ONE
        else:
            term = (nxt - prev) / (1 - prev)
        terms.append(term)
        total += term
        sums.append(total)
        product *= 1 - term
    return BrussSeries(
        m=m,
        indices=tuple(range(m, horizon)),
        terms=tuple(terms),
        partial_sums=tuple(sums),
        unions=tuple(unions),
        no_occurrence=1 - unions[-1],
        product_no_occurrence=product,
    )


def eval_b(
    model: EventModel,
    horizon: int,
    *,
    m_grid: Sequence[int] | None = None,
    divergence_bar: Fraction = DEFAULT_DIVERGENCE_BAR,
) -> ConditionReport:
    """Exact conditional-sum divergence probe for a grid of window starts.

    Holds when every probed start accumulates at least ``divergence_bar``.
    Fails only on decisive evidence: some window saw no conditional growth
    at all while a positive never-occurrence mass remains. Anything else is
    inconclusive; growth events can be arbitrarily sparse, so a quiet
    stretch alone refutes nothing.
    """
    if m_grid is None:
        m_grid = sorted({0, 1, max(1, horizon // 4)})
    finals = {}
    frozen = {}
    stalled = {}
    for m in m_grid:
        series = bruss_sum(model, m, horizon)
        total = series.partial_sums[-1] if series.partial_sums else ZERO
        finals[m] = total
        frozen[m] = total == 0 and series.no_occurrence > 0
        half = len(series.terms) // 2
        stalled[m] = all(t == 0 for t in series.terms[half:]) if series.terms else True
    worst_m = min(finals, key=lambda m: finals[m])
    worst = finals[worst_m]
    if worst >= divergence_bar:
        verdict = Verdict.HOLDS
    elif any(frozen.values()):
        verdict = Verdict.FAILS
    else:
        verdict = Verdict.INCONCLUSIVE
    return ConditionReport(
        condition=Condition.B,
        horizon=horizon,
        diagnostics=tuple((m, finals[m]) for m in sorted(finals)),
        verdict=verdict,
        method=Method.EXACT,
        details={
            "m_grid": list(m_grid),
            "divergence_bar": divergence_bar,
            "worst_m": worst_m,
            "stalled": {m: bool(v) for m, v in stalled.items()},
        },
    )


# ---------------------------------------------------------------------------
# Variance and subsequence machinery
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class VarianceRecord:
    n: int
    var: Fraction
    mu: Fraction
    holds: bool  # Var(S_n) <= mu_n


def variance_bound_check(model: EventModel, horizon: int) -> tuple[VarianceRecord, ...]:
    """Exact Var(S_n) against mu_n for every n up to the horizon.

    The bound is guaranteed under nonpositive covariances; for other models
    the records are descriptive.
    """
    out = []
    from .probability import iter_moment_records

    for rec in iter_moment_records(model, horizon):
        var = rec.s2 - rec.mu * rec.mu
        out.append(VarianceRecord(rec.n, var, rec.mu, var <= rec.mu))
    return tuple(out)


def chebyshev_tail_check(
    model: EventModel,
    horizon: int,
    eps_values: Sequence[Fraction],
) -> list[tuple[int, Fraction, Fraction, Fraction]]:
    """Violations of exact tail mass <= 1/(eps^2 mu_n); empty means all hold.

    Each violation row is (n, eps, tail mass, bound).
    """
    if not model.has_exact_pmf:
        raise CapabilityError("tail comparison needs exact p.m.f.s")
    violations = []
    for n, pmf in model.iter_pmfs(horizon):
        mu = pmf.mean()
        if mu == 0:
            continue
        for eps in eps_values:
            tail = pmf.mass_where(lambda c: abs(Fraction(c) - mu) >= eps * mu)
            bound = chebyshev_bound(mu, eps)
            if tail > bound:
                violations.append((n, eps, tail, bound))
    return violations


@dataclass(frozen=True, slots=True)
class NkRecord:
    k: int
    n_k: int
    nu_k: Fraction
    lower_ok: bool  # k^2 <= nu_k
    upper_ok: bool  # nu_k <= k^2 + 1 (guaranteed when marginals <= 1)


def build_nk_subsequence(series: MomentSeries) -> tuple[NkRecord, ...]:
    """Indices n_k = min{n : mu_n >= k^2} with their means nu_k.

    Emits every k whose square the horizon mean reaches; raises when even
    k = 1 is out of reach.
    """
    records = []
    k = 1
    it = series.iter_records()
    current = next(it, None)
    while current is not None:
        target = k * k
        while current is not None and current.mu < target:
            current = next(it, None)
        if current is None:
            break
        records.append(
            NkRecord(
                k=k,
                n_k=current.n,
                nu_k=current.mu,
                lower_ok=current.mu >= target,
                upper_ok=current.mu <= target + 1,
            )
        )
        k += 1
    if not records:
        raise HorizonError(
            f"mu never reaches 1 on [{series.start}, {series.horizon}]"
        )
    return tuple(records)


@dataclass(frozen=True)
class SubsequenceWitness:
    """Greedy fast subsequence: P(|X_{n_l} - 1| > 1/2) < 2^-l per entry."""

    indices: tuple[int, ...]
    bounds: tuple[Fraction, ...]

    def __len__(self) -> int:
        return len(self.indices)


def extract_fast_subsequence(
    model: EventModel, horizon: int, *, max_terms: int | None = None
) -> SubsequenceWitness:
    """Least n_l > n_{l-1} with exact P(|X_n - 1| > 1/2) < 2^-l, greedily.

    Stops with a partial witness when the horizon is exhausted; partial
    witnesses are valid.
    """
    if not model.has_exact_pmf:
        raise CapabilityError("fast-subsequence extraction needs exact p.m.f.s")
    half = Fraction(1, 2)
    indices: list[int] = []
    bounds: list[Fraction] = []
    l = 1
    for n, pmf in model.iter_pmfs(horizon):
        if max_terms is not None and len(indices) >= max_terms:
            break
        d = ratio_deviation_mass(pmf, half, strict=True)
        if d < Fraction(1, 2**l):
            indices.append(n)
            bounds.append(d)
            l += 1
    return SubsequenceWitness(tuple(indices), tuple(bounds))


def lower_tail_inclusion_gap(pmf: SparsePmf) -> tuple[Fraction, Fraction]:
    """Exact masses of {S < mu/2} and {|S/mu - 1| > 1/2}; the first never
    exceeds the second (the sets are nested)."""
    mu = pmf.mean()
    if mu == 0:
        return ZERO, ZERO
    lower = pmf.mass_where(lambda c: Fraction(c) < mu / 2)
    outer = ratio_deviation_mass(pmf, Fraction(1, 2), mu=mu, strict=True)
    return lower, outer
