"""Concrete event-sequence models.

Independent Bernoulli sequences, nested interval-threshold sequences on
(0, 1] with the uniform measure, and the alternating-run threshold pattern
whose block lengths are chosen by ``select_run_lengths``.
"""

from __future__ import annotations

import bisect
import json
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from .probability import (
    ONE,
    ZERO,
    ConfigError,
    DomainError,
    EventModel,
    SparsePmf,
    SupportCapError,
    as_prob,
    support_cap,
)

HALF = Fraction(1, 2)


class Schedule:
    """Infinite exact-valued sequence: finite prefix plus a tail rule.

    Tail rules: ``"repeat-last"`` repeats the final prefix value forever;
    a cycle repeats a fixed block. Either the prefix or the cycle may be
    empty, not both.
    """

    __slots__ = ("prefix", "cycle")

    def __init__(self, prefix: Sequence[Fraction], cycle: Sequence[Fraction] | None = None):
        self.prefix = tuple(prefix)
        if cycle is None:
            if not self.prefix:
                raise ConfigError("repeat-last tail needs a nonempty prefix")
            self.cycle = (self.prefix[-1],)
        else:
            self.cycle = tuple(cycle)
            if not self.cycle:
                raise ConfigError("cycle tail must be nonempty")

    def value(self, i: int) -> Fraction:
        if i < 0:
            raise DomainError(f"negative event index {i}")
        if i < len(self.prefix):
            return self.prefix[i]
        return self.cycle[(i - len(self.prefix)) % len(self.cycle)]

    def counts_up_to(self, n: int) -> dict[Fraction, int]:
        """Multiplicity of each distinct value among the first n entries."""
        counts: dict[Fraction, int] = {}
        head = min(n, len(self.prefix))
        for i in range(head):
            v = self.prefix[i]
            counts[v] = counts.get(v, 0) + 1
        rest = n - head
        if rest > 0:
            full, partial = divmod(rest, len(self.cycle))
            for v in self.cycle:
                counts[v] = counts.get(v, 0) + full
            for i in range(partial):
                v = self.cycle[i]
                counts[v] = counts.get(v, 0) + 1
        return counts

    def max_in_window(self, lo: int, hi: int) -> Fraction:
        """Maximum value over indices lo..hi inclusive."""
        if lo > hi:
            raise DomainError(f"empty window [{lo}, {hi}]")
        best = None
        for i in range(lo, min(hi + 1, len(self.prefix))):
            v = self.prefix[i]
            best = v if best is None else max(best, v)
        if hi >= len(self.prefix):
            tail_lo = max(lo, len(self.prefix)) - len(self.prefix)
            tail_hi = hi - len(self.prefix)
            if tail_hi - tail_lo + 1 >= len(self.cycle):
                candidates = self.cycle
            else:
                candidates = [
                    self.cycle[i % len(self.cycle)] for i in range(tail_lo, tail_hi + 1)
                ]
            m = max(candidates)
            best = m if best is None else max(best, m)
        return best

    def first_nonzero(self) -> int | None:
        """Index of the first nonzero entry, or None if all entries are zero."""
        for i, v in enumerate(self.prefix):
            if v != 0:
                return i
        for i, v in enumerate(self.cycle):
            if v != 0:
                return len(self.prefix) + i

        return None

    def distinct_values(self) -> frozenset[Fraction]:
        return frozenset(self.prefix) | frozenset(self.cycle)


def _schedule_from_config(values, tail, *, what: str) -> Schedule:
    prefix = [as_prob(v, what=what) for v in values]
    if tail in (None, "repeat-last"):
        return Schedule(prefix)
    if isinstance(tail, dict) and set(tail) == {"cycle"}:
        cycle = [as_prob(v, what=what) for v in tail["cycle"]]
        return Schedule(prefix, cycle)
    raise ConfigError(f"unknown tail rule {tail!r}")


class _FloatCache:
    """Per-model cache of double-rounded values for the sampling hot loop."""

    __slots__ = ("_schedule", "_values")

    def __init__(self, schedule: Schedule):
        self._schedule = schedule
        self._values: list[float] = []

    def upto(self, horizon: int) -> list[float]:
        while len(self._values) < horizon:
            self._values.append(float(self._schedule.value(len(self._values))))
        return self._values


class BernoulliModel(EventModel):
    """Mutually independent events with exact per-event probabilities.

    The exact p.m.f. of S_n is built by the usual one-event convolution
    ladder kept as integer weights over a running common denominator, so
    masses never leave exact arithmetic.
    """

    has_pairwise = True
    has_exact_pmf = True
    has_union = True
    independent_events = True

    def __init__(self, probs: Schedule):
        self.probs = probs
        self._floats = _FloatCache(probs)
        self._ladder_n = 0
        self._ladder_weights = [1]
        self._ladder_den = 1

    @classmethod
    def constant(cls, p) -> "BernoulliModel":
        return cls(Schedule([as_prob(p)]))

    def marginal(self, i: int) -> Fraction:
        return self.probs.value(i)

    def pairwise(self, i: int, j: int) -> Fraction:
        if i == j:
            raise DomainError("pairwise needs two distinct indices")
        return self.probs.value(i) * self.probs.value(j)

    def union_prob(self, m: int, i: int) -> Fraction:
        none = ONE
        for t in range(m, i + 1):
            none *= 1 - self.probs.value(t)
        return 1 - none

    def iter_union_probs(self, m: int, horizon: int) -> Iterator[tuple[int, Fraction]]:
        none = ONE
        for i in range(m, horizon + 1):
            none *= 1 - self.probs.value(i)
            yield i, 1 - none

    def _advance_ladder(self, n: int) -> None:
        cap = support_cap()
        while self._ladder_n < n:
            p = self.probs.value(self._ladder_n)
            num, den = p.numerator, p.denominator
            w = self._ladder_weights
            nxt = [0] * (len(w) + 1)
            for i, wi in enumerate(w):
                if wi == 0:
                    continue
                nxt[i] += wi * (den - num)
                nxt[i + 1] += wi * num
            while nxt and nxt[-1] == 0:
                nxt.pop()
            if len(nxt) > cap:
                raise SupportCapError(f"p.m.f. support exceeds cap {cap}")
            self._ladder_weights = nxt
            self._ladder_den *= den
            self._ladder_n += 1

    def exact_pmf(self, n: int) -> SparsePmf:
        if n < 1:
            raise DomainError(f"n must be >= 1, got {n}")
        if n < self._ladder_n:
            self._ladder_n = 0
            self._ladder_weights = [1]
            self._ladder_den = 1
        self._advance_ladder(n)
        den = self._ladder_den
        return SparsePmf(
            {i: Fraction(w, den) for i, w in enumerate(self._ladder_weights) if w}
        )

    def iter_pmfs(self, horizon: int) -> Iterator[tuple[int, SparsePmf]]:
        self._ladder_n = 0
        self._ladder_weights = [1]
        self._ladder_den = 1
        for n in range(1, horizon + 1):
            yield n, self.exact_pmf(n)

    def window_count_pmf(self, start: int, n: int) -> SparsePmf:
        if not 0 <= start <= n:
            raise DomainError(f"bad window [{start}, {n})")
        weights = [1]
        den = 1
        for t in range(start, n):
            p = self.probs.value(t)
            num, d = p.numerator, p.denominator
            nxt = [0] * (len(weights) + 1)
            for i, wi in enumerate(weights):
                if wi:
                    nxt[i] += wi * (d - num)
                    nxt[i + 1] += wi * num
            while nxt and nxt[-1] == 0:
                nxt.pop()
            weights = nxt
            den *= d
        return SparsePmf({i: Fraction(w, den) for i, w in enumerate(weights) if w})

    def moment_records(self, horizon: int, *, start: int = 1):
        """Exact fast path: independence gives E[S_n^2] from running sums."""
        from .probability import _record

        mu = ZERO
        pair_sum = ZERO
        for n in range(1, horizon + 1):
            p = self.probs.value(n - 1)
            pair_sum += p * mu
            mu += p
            if n >= start:
                yield _record(n, mu, mu + 2 * pair_sum)

    def sample_path(self, horizon: int, rng: random.Random) -> list[int]:
        floats = self._floats.upto(horizon)
        return [1 if rng.random() < floats[i] else 0 for i in range(horizon)]

    def zero_mean_prefix(self) -> int:
        first = self.probs.first_nonzero()
        if first is None:
            raise DomainError("all event probabilities are zero")
        return first


class IntervalModel(EventModel):
    """Events (0, t_i] on the unit interval with the uniform measure.

    The events are nested, so P(A_i  A_j) = min(t_i, t_j) and the count
    S_n(w) is a step function of w; its exact p.m.f. comes from sorting the
    distinct thresholds of the first n events.
    """

    has_pairwise = True
    has_exact_pmf = True
    has_union = True

    def __init__(self, thresholds: Schedule):
        for v in thresholds.distinct_values():
            if not ZERO < v <= ONE:
                raise ConfigError(f"interval thresholds must lie in (0, 1], got {v}")
        self.thresholds = thresholds
        self._floats = _FloatCache(thresholds)

    @classmethod
    def constant(cls, t) -> "IntervalModel":
        return cls(Schedule([as_prob(t)]))

    @classmethod
    def cycle(cls, values) -> "IntervalModel":
        return cls(Schedule([], [as_prob(v) for v in values]))

    def marginal(self, i: int) -> Fraction:
        return self.thresholds.value(i)

    def pairwise(self, i: int, j: int) -> Fraction:
        if i == j:
            raise DomainError("pairwise needs two distinct indices")
        return min(self.thresholds.value(i), self.thresholds.value(j))

    def union_prob(self, m: int, i: int) -> Fraction:
        return self.thresholds.max_in_window(m, i)

    def iter_union_probs(self, m: int, horizon: int) -> Iterator[tuple[int, Fraction]]:
        best = ZERO
        for i in range(m, horizon + 1):
            v = self.thresholds.value(i)
            if v > best:
                best = v
            yield i, best

    def exact_pmf(self, n: int) -> SparsePmf:
        return interval_exact_pmf(self, n)

    def window_count_pmf(self, start: int, n: int) -> SparsePmf:
        if not 0 <= start <= n:
            raise DomainError(f"bad window [{start}, {n})")
        hi = self.thresholds.counts_up_to(n)
        lo = self.thresholds.counts_up_to(start)
        counts = {v: c - lo.get(v, 0) for v, c in hi.items() if c - lo.get(v, 0) > 0}
        return _pmf_from_threshold_counts(counts)

    def sample_path(self, horizon: int, rng: random.Random) -> list[int]:
        floats = self._floats.upto(horizon)
        omega = 1.0 - rng.random()  # uniform on (0, 1]
        return [1 if omega <= floats[i] else 0 for i in range(horizon)]


def _pmf_from_threshold_counts(counts: dict[Fraction, int]) -> SparsePmf:
    if not counts:
        return SparsePmf({0: ONE})
    values = sorted(counts, reverse=True)
    masses: dict[int, Fraction] = {}
    if values[0] < ONE:
        masses[0] = 1 - values[0]
    running = 0
    for idx, v in enumerate(values):
        running += counts[v]
        lower = values[idx + 1] if idx + 1 < len(values) else ZERO
        masses[running] = masses.get(running, ZERO) + (v - lower)
    return SparsePmf(masses)


def interval_exact_pmf(model: IntervalModel, n: int) -> SparsePmf:
    """Exact law of S_n for a threshold model; support is at most n + 1."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    return _pmf_from_threshold_counts(model.thresholds.counts_up_to(n))


# ---------------------------------------------------------------------------
# Alternating-run construction
# ---------------------------------------------------------------------------


class RunPattern:
    """Alternating blocks of sure events and half events.

    Block i contributes ``run_lengths[i]`` thresholds equal to 1 followed by
    the same number of thresholds equal to 1/2.
    """

    __slots__ = ("run_lengths", "_block_ends", "_prefix_sums")

    def __init__(self, run_lengths: Sequence[int]):
        lengths = tuple(int(a) for a in run_lengths)
        if not lengths or any(a < 1 for a in lengths):
            raise ConfigError("run lengths must be positive integers")
        self.run_lengths = lengths
        acc = 0
        prefix = []
        ends = []
        for a in lengths:
            prefix.append(acc)
            acc += a
            ends.append(2 * acc)
        self._prefix_sums = tuple(prefix)  # a_1 + .. + a_{i-1} per block
        self._block_ends = tuple(ends)  # event count at the end of block i

    def total_events(self) -> int:
        return self._block_ends[-1]

    def high_run_end(self, i: int) -> int:
        """Event count n at the last sure event of block i (1-based)."""
        return 2 * self._prefix_sums[i - 1] + self.run_lengths[i - 1]

    def low_run_end(self, i: int) -> int:
        """Event count n at the last half event of block i (1-based)."""
        return self._block_ends[i - 1]

    def prefix_total(self, i: int) -> int:
        """a_1 + ... + a_{i-1}."""
        return self._prefix_sums[i - 1]

    def threshold(self, index: int) -> Fraction:
        if index < 0 or index >= self.total_events():
            raise DomainError(f"event index {index} outside the pattern")
        block = bisect.bisect_right(self._block_ends, index)
        offset = index - (self._block_ends[block - 1] if block else 0)
        return ONE if offset < self.run_lengths[block] else HALF

    def counts_up_to(self, n: int) -> dict[Fraction, int]:
        if n > self.total_events():
            raise DomainError(f"n = {n} beyond the pattern ({self.total_events()})")
        block = bisect.bisect_right(self._block_ends, n - 1) if n else 0
        done = self._block_ends[block - 1] if block else 0
        ones_done = done // 2
        rest = n - done
        counts: dict[Fraction, int] = {}
        if block < len(self.run_lengths):
            a = self.run_lengths[block]
            ones = ones_done + min(rest, a)
            halves = ones_done + max(0, rest - a)
        else:
            ones = ones_done
            halves = ones_done
        if ones:
            counts[ONE] = ones
        if halves:
            counts[HALF] = halves
        return counts


class RunModel(IntervalModel):
    """IntervalModel over a RunPattern, valid up to the pattern's length."""

    def __init__(self, pattern: RunPattern):
        self.pattern = pattern
        schedule = _RunSchedule(pattern)
        super().__init__(schedule)


class _RunSchedule(Schedule):
    """Schedule view of a RunPattern (finite; raises past its end)."""

    __slots__ = ("_pattern",)

    def __init__(self, pattern: RunPattern):
        self._pattern = pattern
        self.prefix = ()
        self.cycle = (ONE,)  # placeholder; all access goes through the pattern

    def value(self, i: int) -> Fraction:
        return self._pattern.threshold(i)

    def counts_up_to(self, n: int) -> dict[Fraction, int]:
        return self._pattern.counts_up_to(n)

    def max_in_window(self, lo: int, hi: int) -> Fraction:
        if lo > hi:
            raise DomainError(f"empty window [{lo}, {hi}]")
        for i in range(lo, hi + 1):
            if self._pattern.threshold(i) == ONE:
                return ONE
        return HALF

    def first_nonzero(self) -> int | None:
        return 0

    def distinct_values(self) -> frozenset[Fraction]:
        return frozenset((ONE, HALF))


def run_second_moment_ratio(prefix_sum: int, a_i: int) -> Fraction:
    """E[X_n^2] at the end of a sure-run, in closed form.

    With A = a_1 + ... + a_{i-1} completed blocks and the current sure-run of
    length a_i, the count is two-valued (2A + a_i on (0, 1/2], A + a_i above)
    and mu_n = (3/2)A + a_i, which gives the ratio directly.
    """
    if prefix_sum < 0:
        raise DomainError(f"prefix_sum must be >= 0, got {prefix_sum}")
    if a_i < 1:
        raise DomainError(f"a_i must be >= 1, got {a_i}")
    mu = Fraction(3, 2) * prefix_sum + a_i
    hi = Fraction(2 * prefix_sum + a_i)
    lo = Fraction(prefix_sum + a_i)
    return (hi * hi + lo * lo) / (2 * mu * mu)


@dataclass(frozen=True, slots=True)
class RunCertificate:
    """Second-moment certificate at the end of one sure-run."""

    run: int
    end_index: int
    gap: Fraction  # E[X_n^2] - 1, exact
    target: Fraction
    meets_index_target: bool  # does gap < 2^-n hold as well?


@dataclass(frozen=True, slots=True)
class RunSelection:
    lengths: tuple[int, ...]
    certificates: tuple[RunCertificate, ...]
    requested: int
    stopped: str | None  # None, "run-length-cap" or "no-feasible-length"

    @property
    def complete(self) -> bool:
        return self.stopped is None and len(self.lengths) == self.requested


def _run_gap(prefix_sum: int, a: int) -> Fraction:
    # E[X^2] - 1 = (A/2)^2 / mu^2 at a sure-run end
    mu = Fraction(3, 2) * prefix_sum + a
    return Fraction(prefix_sum * prefix_sum, 4) / (mu * mu)


def select_run_lengths(
    count: int,
    *,
    target: str = "per-run",
    max_run_length: int = 2**24,
) -> RunSelection:
    """Minimal run lengths whose sure-run ends meet a vanishing gap target.

    ``target="per-run"`` certifies E[X_n^2] - 1 < 2^-i at the end of the
    i-th sure-run; the gap is strictly decreasing in the run length, so the
    minimal length is found by exponential-then-binary search. Lengths grow
    roughly like 2^(i/2) times the total so far, hence the cap: certification
    stops (with the prefix kept) once the minimal length would exceed it.

    ``target="per-index"`` certifies the stronger gap < 2^-n with n the event
    index at the run end. That inequality is infeasible from the third run
    on: the ratio gap / 2^-n is at least 2 at length 1 once earlier blocks
    total at least 2, and it only grows with the length, so certification
    stops with reason "no-feasible-length".
    """
    if count < 1:
        raise DomainError(f"count must be >= 1, got {count}")
    if target not in ("per-run", "per-index"):
        raise DomainError(f"unknown target {target!r}")

    lengths: list[int] = []
    certs: list[RunCertificate] = []
    prefix = 0
    stopped = None
    for i in range(1, count + 1):
        if target == "per-run":
            bar = Fraction(1, 2**i)
            a = _minimal_run_length(prefix, bar, max_run_length)
            if a is None:
                stopped = "run-length-cap"
                break
        else:
            a = _minimal_index_certified_length(prefix, max_run_length)
            if a is None:
                stopped = "no-feasible-length"
                break
            bar = Fraction(1, 2 ** (2 * prefix + a))
        n = 2 * prefix + a
        gap = _run_gap(prefix, a)
        certs.append(
            RunCertificate(
                run=i,
                end_index=n,
                gap=gap,
                target=bar,
                meets_index_target=gap < Fraction(1, 2**n),
            )
        )
        lengths.append(a)
        prefix += a
    return RunSelection(tuple(lengths), tuple(certs), count, stopped)


def _minimal_run_length(prefix: int, bar: Fraction, cap: int) -> int | None:
    if _run_gap(prefix, 1) < bar:
        return 1
    lo, hi = 1, 2
    while hi <= cap and not _run_gap(prefix, hi) < bar:
        lo, hi = hi, hi * 2
    if hi > cap:
        if _run_gap(prefix, cap) < bar:
            hi = cap
        else:
            return None
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if _run_gap(prefix, mid) < bar:
            hi = mid
        else:
            lo = mid
    return hi


def _minimal_index_certified_length(prefix: int, cap: int) -> int | None:
    # gap / 2^-n doubles per unit length once mu >= 2/ln 2 < 3, so scanning
    # a short initial segment decides feasibility.
    prev_ratio = None
    for a in range(1, cap + 1):
        n = 2 * prefix + a
        gap = _run_gap(prefix, a)
        if gap < Fraction(1, 2**n):
            return a
        ratio = gap * 2**n
        if prev_ratio is not None and ratio >= prev_ratio and ratio > 1:
            return None  # log-convex ratio is now increasing and above 1
        prev_ratio = ratio
    return None


def run_model_from_selection(selection: RunSelection) -> RunModel:
    if not selection.lengths:
        raise DomainError("selection certified no runs")
    return RunModel(RunPattern(selection.lengths))


# ---------------------------------------------------------------------------
# Prefix nullification
# ---------------------------------------------------------------------------


class NullifiedModel(EventModel):
    """A model with its first N events replaced by impossible events.

    Path-wise S_n - N <= S'_n <= S_n and mu_n - N <= mu'_n <= mu_n.
    """

    def __init__(self, base: EventModel, null_count: int):
        if null_count < 0:
            raise DomainError(f"N must be >= 0, got {null_count}")
        self.base = base
        self.null_count = null_count
        self.has_pairwise = base.has_pairwise
        self.has_union = base.has_union
        self.has_exact_pmf = _has_window_pmf(base)

    def marginal(self, i: int) -> Fraction:
        if i < self.null_count:
            return ZERO
        return self.base.marginal(i)

    def pairwise(self, i: int, j: int) -> Fraction:
        if i == j:
            raise DomainError("pairwise needs two distinct indices")
        if min(i, j) < self.null_count:
            return ZERO
        return self.base.pairwise(i, j)

    def union_prob(self, m: int, i: int) -> Fraction:
        if i < self.null_count:
            return ZERO
        return self.base.union_prob(max(m, self.null_count), i)

    def exact_pmf(self, n: int) -> SparsePmf:
        if n < 1:
            raise DomainError(f"n must be >= 1, got {n}")
        if n <= self.null_count:
            return SparsePmf({0: ONE})
        return self.base.window_count_pmf(self.null_count, n)

    def sample_path(self, horizon: int, rng: random.Random) -> list[int]:
        path = self.base.sample_path(horizon, rng)
        for i in range(min(self.null_count, horizon)):
            path[i] = 0
        return path

    def zero_mean_prefix(self) -> int:
        n0 = self.null_count
        probe_limit = n0 + 2**20
        while n0 < probe_limit and self.base.marginal(n0) == 0:
            n0 += 1
        return n0


def _has_window_pmf(model: EventModel) -> bool:
    return type(model).window_count_pmf is not EventModel.window_count_pmf


def nullify_prefix(model: EventModel, null_count: int) -> EventModel:
    """Replace the first N events by impossible ones; N = 0 is the identity."""
    if null_count == 0:
        return model
    if isinstance(model, NullifiedModel):
        return NullifiedModel(model.base, max(model.null_count, null_count))
    return NullifiedModel(model, null_count)


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


def model_from_config(config) -> EventModel:
    """Build a model from a config dict, JSON string, or path to a JSON file.

    Schema: {"type": "bernoulli" | "interval" | "runs" | "galton", ...} with
    probabilities given as "num/den" strings.
    """
    if isinstance(config, str):
        text = config.strip()
        if text.startswith("{"):
            try:
                config = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid JSON: {exc}") from exc
        else:
            try:
                with open(config, "r", encoding="utf-8") as fh:
                    config = json.load(fh)
            except OSError as exc:
                raise ConfigError(f"cannot read model config: {exc}") from exc
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid JSON in {text!r}: {exc}") from exc
    if not isinstance(config, dict):
        raise ConfigError(f"model config must be an object, got {type(config).__name__}")
    kind = config.get("type")
    if kind == "bernoulli":
        probs = config.get("probs")
        if not isinstance(probs, list) or (not probs and "tail" not in config):
            raise ConfigError("bernoulli config needs a 'probs' list")
        return BernoulliModel(
            _schedule_from_config(probs, config.get("tail"), what="event probability")
        )
    if kind == "interval":
        thresholds = config.get("thresholds")
        if not isinstance(thresholds, list):
            raise ConfigError("interval config needs a 'thresholds' list")
        return IntervalModel(
            _schedule_from_config(thresholds, config.get("tail"), what="threshold")
        )
    if kind == "runs":
        if "run_lengths" in config:
            return RunModel(RunPattern(config["run_lengths"]))
        if "auto_count" in config:
            selection = select_run_lengths(
                int(config["auto_count"]),
                target=config.get("certificate", "per-run"),
                max_run_length=int(config.get("max_run_length", 2**24)),
            )
            return run_model_from_selection(selection)
        raise ConfigError("runs config needs 'run_lengths' or 'auto_count'")
    if kind == "galton":
        from .galton import galton_model_from_config

        return galton_model_from_config(config)
    raise ConfigError(f"unknown model type {kind!r}")
