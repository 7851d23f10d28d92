"""Exact probability primitives.

Rational probability values, finite-support counting distributions, moment
series of the running occurrence count, and the abstract event-sequence
model every engine in this package builds on.

All exact computation flows through ``fractions.Fraction``; floats appear
only in Monte Carlo estimators and in serialized "float view" columns.
"""

from __future__ import annotations

import os
import random
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

Prob = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)

_SUPPORT_ENV = "BC_LAB_MAX_SUPPORT"
_SUPPORT_DEFAULT = 10**6


class BclabError(Exception):
    """Base class for every error raised by this package."""


class DomainError(BclabError, ValueError):
    """Arguments violate a documented precondition."""


class ConfigError(BclabError, ValueError):
    """Malformed model or space configuration."""


class CapabilityError(BclabError):
    """The model does not expose the capability an operation needs."""


class SupportCapError(BclabError):
    """A distribution support grew past the configured cap."""


class HorizonError(BclabError):
    """The requested horizon is too short for the operation."""


def support_cap() -> int:
    """Maximum p.m.f. support size, configurable via BC_LAB_MAX_SUPPORT."""
    raw = os.environ.get(_SUPPORT_ENV)
    if raw is None:
        return _SUPPORT_DEFAULT
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{_SUPPORT_ENV} must be an integer, got {raw!r}") from exc
    if cap < 1:
        raise ConfigError(f"{_SUPPORT_ENV} must be positive, got {cap}")
    return cap


def parse_ratio(text: str) -> Fraction:
    """Parse a "num/den" (or plain integer) string into an exact rational.

    Decimal and float notation are rejected on purpose: configuration values
    must round-trip bit-exactly.
    """
    if not isinstance(text, str):
        raise ConfigError(f"expected a rational string, got {type(text).__name__}")
    parts = text.strip().split("/")
    try:
        if len(parts) == 1:
            return Fraction(int(parts[0]))
        if len(parts) == 2:
            return Fraction(int(parts[0]), int(parts[1]))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"invalid rational {text!r}") from exc
    raise ConfigError(f"invalid rational {text!r}")


def ratio_str(value: Fraction) -> str:
    """Render a rational as the canonical "num/den" string."""
    return f"{value.numerator}/{value.denominator}"


def as_prob(value, *, what: str = "probability") -> Fraction:
    """Coerce ints, Fractions or "num/den" strings to a probability in [0, 1]."""
    if isinstance(value, str):
        value = parse_ratio(value)
    elif isinstance(value, int):
        value = Fraction(value)
    elif not isinstance(value, Fraction):
        raise ConfigError(f"{what} must be rational, got {type(value).__name__}")
    if not ZERO <= value <= ONE:
        raise ConfigError(f"{what} {value} outside [0, 1]")
    return value


class SparsePmf:
    """Finite-support law of a nonnegative integer count.

    Entries are kept as a sorted tuple of ``(count, mass)`` pairs with
    positive rational masses that sum to exactly one. Instances are
    immutable and safe to share.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries):
        if isinstance(entries, Mapping):
            pairs = list(entries.items())
        else:
            pairs = list(entries)
        merged: dict[int, Fraction] = {}
        for count, mass in pairs:
            if not isinstance(count, int) or count < 0:
                raise DomainError(f"counts must be nonnegative integers, got {count!r}")
            if not isinstance(mass, Fraction):
                raise DomainError(f"masses must be Fractions, got {type(mass).__name__}")
            if mass < 0:
                raise DomainError(f"negative mass {mass} at count {count}")
            if mass > 0:
                merged[count] = merged.get(count, ZERO) + mass
        if len(merged) > support_cap():
            raise SupportCapError(
                f"support size {len(merged)} exceeds cap {support_cap()}"
            )
        total = sum(merged.values(), ZERO)
        if total != 1:
            raise DomainError(f"masses sum to {total}, expected exactly 1")
        self._entries = tuple(sorted(merged.items()))

    @property
    def entries(self) -> tuple[tuple[int, Fraction], ...]:
        return self._entries

    def support(self) -> tuple[int, ...]:
        return tuple(count for count, _ in self._entries)

    def mass(self, count: int) -> Fraction:
        for c, m in self._entries:
            if c == count:
                return m
        return ZERO

    def items(self) -> Iterator[tuple[int, Fraction]]:
        return iter(self._entries)

    def mean(self) -> Fraction:
        return sum((Fraction(c) * m for c, m in self._entries), ZERO)

    def second_moment(self) -> Fraction:
        return sum((Fraction(c * c) * m for c, m in self._entries), ZERO)

    def mass_where(self, predicate) -> Fraction:
        return sum((m for c, m in self._entries if predicate(c)), ZERO)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparsePmf):
            return NotImplemented
        return self._entries == other._entries

    def __hash__(self) -> int:
        return hash(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __repr__(self) -> str:
        body = ", ".join(f"{c}: {m}" for c, m in self._entries)
        return f"SparsePmf({{{body}}})"


def pmf_moments(pmf: SparsePmf) -> tuple[Fraction, Fraction]:
    """Exact mean and second moment of a count distribution."""
    return pmf.mean(), pmf.second_moment()


def centered_tail_mass(
    pmf: SparsePmf, delta: Fraction, *, mu: Fraction | None = None, strict: bool = False
) -> Fraction:
    """Exact mass of {|S - mu| >= delta} (or strictly > with ``strict``)."""
    if mu is None:
        mu = pmf.mean()
    if strict:
        return pmf.mass_where(lambda c: abs(Fraction(c) - mu) > delta)
    return pmf.mass_where(lambda c: abs(Fraction(c) - mu) >= delta)


def ratio_deviation_mass(
    pmf: SparsePmf, eps: Fraction, *, mu: Fraction | None = None, strict: bool = True
) -> Fraction:
    """Exact mass of {|S/mu - 1| > eps}, with S/mu read as 1 when mu = 0."""
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    if mu is None:
        mu = pmf.mean()
    if mu == 0:
        return ZERO
    return centered_tail_mass(pmf, eps * mu, mu=mu, strict=strict)


def ratio_law(pmf: SparsePmf, mu: Fraction) -> tuple[tuple[Fraction, Fraction], ...]:
    """Law of S/mu as sorted (value, mass) pairs; requires mu > 0."""
    if mu <= 0:
        raise DomainError(f"mu must be positive, got {mu}")
    return tuple((Fraction(c) / mu, m) for c, m in pmf.items())


def chebyshev_bound(mu: Fraction, eps: Fraction) -> Fraction:
    """Tail bound 1/(eps^2 mu) for P(|S_n - mu_n| >= eps mu_n).

    The bound is returned as-is even when it exceeds one; callers compare it
    against exact tail mass.
    """
    if mu <= 0:
        raise DomainError(f"mu must be positive, got {mu}")
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    return 1 / (eps * eps * mu)


@dataclass(frozen=True, slots=True)
class MomentRecord:
    """Exact moments of the occurrence count after the first ``n`` events.

    ``ex2`` is E[(S_n/mu_n)^2] with the convention that the ratio is 1 when
    mu_n = 0, so ex2 = 1 there.
    """

    n: int
    mu: Fraction
    s2: Fraction
    ex2: Fraction


def _record(n: int, mu: Fraction, s2: Fraction) -> MomentRecord:
    if mu == 0:
        if s2 != 0:
            raise DomainError(f"mu_{n} = 0 but E[S^2] = {s2}")
        return MomentRecord(n, mu, s2, ONE)
    ex2 = s2 / (mu * mu)
    if ex2 < 1:
        raise DomainError(f"E[X_{n}^2] = {ex2} < 1; moments are inconsistent")
    return MomentRecord(n, mu, s2, ex2)


def iter_moment_records(
    model: "EventModel", horizon: int, *, start: int = 1, method: str = "auto"
) -> Iterator[MomentRecord]:
    """Stream exact moment records for n = start..horizon.

    Uses, in order of preference: a model-provided fast path, the exact
    p.m.f. ladder, or marginals plus pairwise joints
    (E[S_n^2] = mu_n + 2 sum_{i<j<n} P(A_i  A_j)).
    """
    if horizon < 1:
        raise DomainError(f"horizon must be >= 1, got {horizon}")
    if not 1 <= start <= horizon:
        raise DomainError(f"start {start} outside [1, {horizon}]")
    if method not in ("auto", "pmf", "pairwise"):
        raise DomainError(f"unknown method {method!r}")

    if method == "auto":
        fast = getattr(model, "moment_records", None)
        if fast is not None:
            yield from _checked(fast(horizon, start=start))
            return
        if model.has_exact_pmf:
            method = "pmf"
        elif model.has_pairwise:
            method = "pairwise"
        else:
            raise CapabilityError(
                "model exposes neither exact p.m.f.s nor pairwise joints"
            )

    if method == "pmf":
        if not model.has_exact_pmf:
            raise CapabilityError("model does not expose exact p.m.f.s")

        def gen():
            for n, pmf in model.iter_pmfs(horizon):
                if n < start:
                    continue
                mu, s2 = pmf_moments(pmf)
                yield _record(n, mu, s2)

        yield from _checked(gen())
        return

    if not model.has_pairwise:
        raise CapabilityError("model does not expose pairwise joints")

    def gen_pairwise():
        mu = ZERO
        pair_sum = ZERO
        for n in range(1, horizon + 1):
            i = n - 1
            for j in range(i):
                pair_sum += model.pairwise(j, i)
            mu += model.marginal(i)
            if n >= start:
                yield _record(n, mu, mu + 2 * pair_sum)

    yield from _checked(gen_pairwise())


def _checked(records: Iterable[MomentRecord]) -> Iterator[MomentRecord]:
    prev_mu = None
    for rec in records:
        if prev_mu is not None and rec.mu < prev_mu:
            raise DomainError(f"mu decreased at n = {rec.n}")
        prev_mu = rec.mu
        yield rec


class MomentSeries:
    """Materialized, validated sequence of MomentRecords over [start, horizon]."""

    __slots__ = ("records", "start", "horizon", "method")

    def __init__(self, records: Sequence[MomentRecord], *, method: str = "pmf"):
        records = tuple(records)
        if not records:
            raise DomainError("empty moment series")
        self.records = records
        self.start = records[0].n
        self.horizon = records[-1].n
        self.method = method
        expected = range(self.start, self.horizon + 1)
        if [r.n for r in records] != list(expected):
            raise DomainError("moment records must cover consecutive n")

    @classmethod
    def from_model(
        cls, model: "EventModel", horizon: int, *, start: int = 1, method: str = "auto"
    ) -> "MomentSeries":
        records = list(iter_moment_records(model, horizon, start=start, method=method))
        return cls(records, method=method)

    def record(self, n: int) -> MomentRecord:
        if not self.start <= n <= self.horizon:
            raise DomainError(f"n = {n} outside [{self.start}, {self.horizon}]")
        return self.records[n - self.start]

    def iter_records(self) -> Iterator[MomentRecord]:
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)


def moment_series(
    model: "EventModel", horizon: int, *, start: int = 1, method: str = "auto"
) -> MomentSeries:
    """Exact moment series of the running occurrence count; see MomentSeries."""
    return MomentSeries.from_model(model, horizon, start=start, method=method)


class EventModel(ABC):
    """A generator of event sequences over a fixed probability space.

    Events are indexed from 0. ``sample_path`` must be a pure function of
    (horizon, rng state): identical inputs give identical bit vectors.
    Capabilities beyond sampling and marginals are optional and advertised
    through the ``has_*`` flags.
    """

    has_pairwise = False
    has_exact_pmf = False
    has_union = False
    independent_events = False

    @abstractmethod
    def marginal(self, i: int) -> Fraction:
        """Exact P(A_i)."""

    @abstractmethod
    def sample_path(self, horizon: int, rng: random.Random) -> list[int]:
        """One seeded 0/1 path over events 0..horizon-1."""

    def pairwise(self, i: int, j: int) -> Fraction:
        raise CapabilityError(f"{type(self).__name__} has no pairwise joints")

    def exact_pmf(self, n: int) -> SparsePmf:
        raise CapabilityError(f"{type(self).__name__} has no exact p.m.f.s")

    def union_prob(self, m: int, i: int) -> Fraction:
        """Exact P(at least one of A_m..A_i occurs)."""
        raise CapabilityError(f"{type(self).__name__} has no exact union events")

    def iter_pmfs(self, horizon: int) -> Iterator[tuple[int, SparsePmf]]:
        """Yield (n, law of S_n) for n = 1..horizon."""
        for n in range(1, horizon + 1):
            yield n, self.exact_pmf(n)

    def iter_union_probs(self, m: int, horizon: int) -> Iterator[tuple[int, Fraction]]:
        """Yield (i, P(union of A_m..A_i)) for i = m..horizon."""
        for i in range(m, horizon + 1):
            yield i, self.union_prob(m, i)

    def window_count_pmf(self, start: int, n: int) -> SparsePmf:
        """Law of the occurrence count among events start..n-1."""
        raise CapabilityError(f"{type(self).__name__} has no window count laws")

    def zero_mean_prefix(self) -> int:
        """Largest n0 with mu_{n0} = 0, i.e. the count of leading null events."""
        return 0


def mean_count(model: EventModel, n: int) -> Fraction:
    """mu_n = E[S_n] directly from marginals."""
    return sum((model.marginal(i) for i in range(n)), ZERO)


_MIX_MULT = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + _MIX_MULT) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def spawn_rng(seed: int, stream: int = 0) -> random.Random:
    """Deterministic substream rng derived from (master seed, stream index)."""
    state = _splitmix64((seed & _MASK64) ^ _splitmix64(stream & _MASK64))
    return random.Random(state)


def sample_paths(
    model: EventModel, horizon: int, paths: int, seed: int
) -> Iterator[list[int]]:
    """Seeded independent paths; path i uses substream (seed, i)."""
    for i in range(paths):
        yield model.sample_path(horizon, spawn_rng(seed, i))
