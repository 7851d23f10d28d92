"""Brute-force ground truth on small finite probability spaces.

A FiniteSpace enumerates atoms with exact weights, so every quantity the
scalable engines compute (count laws, covariances, unions) can be checked
by summation. The enumeration budget is capped: exactness over scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .probability import (
    ONE,
    ZERO,
    ConfigError,
    DomainError,
    EventModel,
    SparsePmf,
    spawn_rng,
)

ATOM_BUDGET = 2**20


class FiniteSpace:
    """Weighted atoms plus events as atom subsets."""

    __slots__ = ("labels", "weights", "events")

    def __init__(
        self,
        atoms: Sequence[tuple[str, Fraction]],
        events: Sequence[Iterable[int]],
    ):
        if not atoms:
            raise ConfigError("a finite space needs at least one atom")
        if len(atoms) > ATOM_BUDGET:
            raise DomainError(f"atom count {len(atoms)} exceeds budget {ATOM_BUDGET}")
        self.labels = tuple(label for label, _ in atoms)
        if len(set(self.labels)) != len(self.labels):
            raise ConfigError("atom labels must be distinct")
        self.weights = tuple(weight for _, weight in atoms)
        for w in self.weights:
            if not isinstance(w, Fraction) or w <= 0:
                raise ConfigError(f"atom weights must be positive rationals, got {w!r}")
        if sum(self.weights, ZERO) != 1:
            raise ConfigError("atom weights must sum to exactly 1")
        self.events = tuple(frozenset(e) for e in events)
        for e in self.events:
            for a in e:
                if not 0 <= a < len(self.labels):
                    raise ConfigError(f"event references unknown atom index {a}")

    @classmethod
    def from_config(cls, config) -> "FiniteSpace":
        """Schema: {"atoms": [["a", "1/2"], ...], "events": [["a", "b"], ...]}."""
        from .probability import parse_ratio

        if not isinstance(config, dict):
            raise ConfigError("finite space config must be an object")
        try:
            atom_rows = list(config["atoms"])
            event_rows = list(config["events"])
        except (KeyError, TypeError) as exc:
            raise ConfigError("finite space config needs 'atoms' and 'events'") from exc
        atoms = []
        index = {}
        for row in atom_rows:
            try:
                label, weight = row
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad atom row {row!r}") from exc
            index[label] = len(atoms)
            atoms.append((str(label), parse_ratio(weight)))
        events = []
        for row in event_rows:
            try:
                events.append([index[label] for label in row])
            except KeyError as exc:
                raise ConfigError(f"event references unknown atom {exc}") from exc
        return cls(atoms, events)

    def atom_count(self) -> int:
        return len(self.labels)

    def event_count(self) -> int:
        return len(self.events)

    def event_prob(self, i: int) -> Fraction:
        return sum((self.weights[a] for a in self.events[i]), ZERO)


def enumerate_pmf(space: FiniteSpace, n: int) -> SparsePmf:
    """Exact law of the count among the first n events, by atom enumeration."""
    if not 0 <= n <= space.event_count():
        raise DomainError(f"n = {n} outside [0, {space.event_count()}]")
    masses: dict[int, Fraction] = {}
    for a, weight in enumerate(space.weights):
        count = sum(1 for e in space.events[:n] if a in e)
        masses[count] = masses.get(count, ZERO) + weight
    return SparsePmf(masses)


def enumerate_event_prob(space: FiniteSpace, i: int) -> Fraction:
    return space.event_prob(i)


def enumerate_cov(space: FiniteSpace, i: int, j: int) -> Fraction:
    """Exact Cov(I_i, I_j) by enumeration."""
    if not (0 <= i < space.event_count() and 0 <= j < space.event_count()):
        raise DomainError(f"event indices ({i}, {j}) out of range")
    joint = sum(
        (space.weights[a] for a in space.events[i] & space.events[j]), ZERO
    )
    return joint - space.event_prob(i) * space.event_prob(j)


def enumerate_union(space: FiniteSpace, m: int, i: int) -> Fraction:
    atoms = frozenset().union(*space.events[m : i + 1]) if i >= m else frozenset()
    return sum((space.weights[a] for a in atoms), ZERO)


def pattern_distribution(space: FiniteSpace) -> dict[tuple[int, ...], Fraction]:
    """Exact joint law of the full event indicator vector."""
    out: dict[tuple[int, ...], Fraction] = {}
    for a, weight in enumerate(space.weights):
        pattern = tuple(1 if a in e else 0 for e in space.events)
        out[pattern] = out.get(pattern, ZERO) + weight
    return out


def sample_atom_indices(space: FiniteSpace, paths: int, seed: int) -> list[int]:
    """Seeded atom draws; the uniform variate is compared against exact
    cumulative weights, so only the variate itself is double-rounded."""
    cumulative = []
    acc = ZERO
    for w in space.weights:
        acc += w
        cumulative.append(acc)
    rng = spawn_rng(seed, 0)
    picks = []
    for _ in range(paths):
        u = rng.random()
        for idx, cut in enumerate(cumulative):
            if u < cut:
                picks.append(idx)
                break
        else:
            picks.append(len(cumulative) - 1)
    return picks


@dataclass(frozen=True)
class ValidationRow:
    pattern: tuple[int, ...]
    exact: Fraction
    observed: Fraction
    se_units: float


@dataclass(frozen=True)
class ValidationReport:
    paths: int
    seed: int
    rows: tuple[ValidationRow, ...]
    max_se_units: float
    passed: bool


def sampling_validation(
    space: FiniteSpace, paths: int, seed: int, *, se_limit: float = 4.0
) -> ValidationReport:
    """Empirical indicator-pattern frequencies against enumeration.

    Flags any pattern whose observed frequency sits more than ``se_limit``
    standard errors from its exact probability. Patterns with exact
    probability 0 or 1 must match exactly.
    """
    if paths < 10**4:
        raise DomainError(f"need at least 10^4 paths, got {paths}")
    exact = pattern_distribution(space)
    picks = sample_atom_indices(space, paths, seed)
    counts: dict[tuple[int, ...], int] = {}
    patterns_by_atom = [
        tuple(1 if a in e else 0 for e in space.events)
        for a in range(space.atom_count())
    ]
    for a in picks:
        p = patterns_by_atom[a]
        counts[p] = counts.get(p, 0) + 1
    rows = []
    worst = 0.0
    ok = True
    for pattern in sorted(set(exact) | set(counts)):
        p = exact.get(pattern, ZERO)
        obs = Fraction(counts.get(pattern, 0), paths)
        pf = float(p)
        if pf in (0.0, 1.0) and p in (ZERO, ONE):
            units = 0.0 if obs == p else float("inf")
        else:
            se = (pf * (1 - pf) / paths) ** 0.5
            units = abs(float(obs) - pf) / se
        worst = max(worst, units)
        if units > se_limit:
            ok = False
        rows.append(ValidationRow(pattern, p, obs, units))
    return ValidationReport(paths, seed, tuple(rows), worst, ok)


# ---------------------------------------------------------------------------
# Discretizers: finite stand-ins for the scalable models
# ---------------------------------------------------------------------------


def interval_space(model, n: int) -> FiniteSpace:
    """Partition (0, 1] along the distinct thresholds of the first n events."""
    from .models import IntervalModel

    if not isinstance(model, IntervalModel):
        raise DomainError("interval_space needs an IntervalModel")
    counts = model.thresholds.counts_up_to(n)
    cuts = sorted(counts)
    if not cuts:
        raise DomainError("no events to discretize")
    uppers = cuts + ([ONE] if cuts[-1] != ONE else [])
    atoms = []
    lower = ZERO
    for upper in uppers:
        atoms.append((f"({lower},{upper}]", upper - lower))
        lower = upper
    events = []
    for i in range(n):
        t = model.thresholds.value(i)
        events.append([idx for idx, upper in enumerate(uppers) if upper <= t])
    return FiniteSpace(atoms, events)


def bernoulli_space(model, n: int) -> FiniteSpace:
    """Full product space over the first n events; prunes null outcomes."""
    from .models import BernoulliModel

    if not isinstance(model, BernoulliModel):
        raise DomainError("bernoulli_space needs a BernoulliModel")
    if 2**n > ATOM_BUDGET:
        raise DomainError(f"2^{n} outcomes exceed the enumeration budget")
    probs = [model.probs.value(i) for i in range(n)]
    atoms = []
    patterns = []
    for mask in range(2**n):
        weight = ONE
        bits = []
        for i in range(n):
            bit = (mask >> i) & 1
            bits.append(bit)
            weight *= probs[i] if bit else 1 - probs[i]
            if weight == 0:
                break
        if weight == 0:
            continue
        atoms.append(("".join(map(str, bits)), weight))
        patterns.append(bits)
    events = [
        [idx for idx, bits in enumerate(patterns) if bits[i]] for i in range(n)
    ]
    return FiniteSpace(atoms, events)


def galton_space(coefficients, n: int) -> FiniteSpace:
    """All positive-weight occurrence paths of length n, with product weights."""
    paths: list[tuple[str, Fraction, list[int]]] = []

    def grow(t: int, count: int, weight: Fraction, bits: list[int]) -> None:
        if len(paths) > ATOM_BUDGET:
            raise DomainError("path count exceeds the enumeration budget")
        if t == n:
            paths.append(("".join(map(str, bits)), weight, list(bits)))
            return
        c = coefficients.entry(t, count)
        if c != 0:
            grow(t + 1, count + 1, weight * c, bits + [1])
        if c != 1:
            grow(t + 1, count, weight * (1 - c), bits + [0])

    grow(0, 0, ONE, [])
    atoms = [(label, weight) for label, weight, _ in paths]
    events = [
        [idx for idx, (_, _, bits) in enumerate(paths) if bits[i]] for i in range(n)
    ]
    return FiniteSpace(atoms, events)


def discretize(model: EventModel, n: int) -> FiniteSpace:
    """Finite stand-in for the first n events of a supported model."""
    from .galton import GaltonModel
    from .models import BernoulliModel, IntervalModel, NullifiedModel

    if isinstance(model, IntervalModel):
        return interval_space(model, n)
    if isinstance(model, BernoulliModel):
        return bernoulli_space(model, n)
    if isinstance(model, GaltonModel):
        return galton_space(model.coefficients, n)
    if isinstance(model, NullifiedModel):
        base = discretize(model.base, n)
        null = min(model.null_count, n)
        events = [frozenset()] * null + list(base.events[null:n])
        return FiniteSpace(list(zip(base.labels, base.weights)), events)
    raise DomainError(f"no discretizer for {type(model).__name__}")


@dataclass(frozen=True)
class SamplingCheckRow:
    count: int
    exact: Fraction
    observed: Fraction
    se_units: float


@dataclass(frozen=True)
class SamplingCheck:
    n: int
    paths: int
    seed: int
    rows: tuple[SamplingCheckRow, ...]
    max_se_units: float
    passed: bool


def model_sampling_check(
    model: EventModel, n: int, paths: int, seed: int, *, se_limit: float = 4.0
) -> SamplingCheck:
    """Empirical law of S_n from seeded paths against the exact p.m.f."""
    exact = model.exact_pmf(n)
    counts: dict[int, int] = {}
    for p in range(paths):
        path = model.sample_path(n, spawn_rng(seed, p))
        s = sum(path)
        counts[s] = counts.get(s, 0) + 1
    rows = []
    worst = 0.0
    ok = True
    support = set(exact.support()) | set(counts)
    for s in sorted(support):
        p_exact = exact.mass(s)
        obs = Fraction(counts.get(s, 0), paths)
        pf = float(p_exact)
        if p_exact in (ZERO, ONE):
            units = 0.0 if obs == p_exact else float("inf")
        else:
            se = (pf * (1 - pf) / paths) ** 0.5
            units = abs(float(obs) - pf) / se
        worst = max(worst, units)
        if units > se_limit:
            ok = False
        rows.append(SamplingCheckRow(s, p_exact, obs, units))
    return SamplingCheck(n, paths, seed, tuple(rows), worst, ok)
