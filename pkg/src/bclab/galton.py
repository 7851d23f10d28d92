"""Recursively sampled event sequences driven by count-dependent chances.

An event sequence is generated by a table of coefficients: event number n
occurs with probability entry(n, k) where k is the number of occurrences so
far, which makes the running count a Markov chain. The built-in
logarithmic-curve table concentrates the count on floor(log2 n) with
1/3-chance escape branches at powers of two; its exact law has a closed
form with support of size O(log n).
"""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Iterator, NamedTuple

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

THIRD = Fraction(1, 3)


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def galton_coefficient(n: int, k: int) -> Fraction:
    """Logarithmic-curve transition chance for event n at current count k.

    Four cases: sure when n + 1 is a power of two and k = floor(log2 n)
    (the curve steps up just before each power), 1/3 when n is a power of
    two and k = n (the escape branch of the all-occurrences path), sure when
    n is not a power of two and k = n, impossible otherwise. Powers of two
    include 2^0 = 1; entry(0, 0) = 1 falls under the third case since
    floor(log2 0) matches nothing.
    """
    if n < 0 or k < 0 or k > n:
        raise DomainError(f"need 0 <= k <= n, got (n, k) = ({n}, {k})")
    if n >= 1 and _is_pow2(n + 1) and k == n.bit_length() - 1:
        return ONE
    if _is_pow2(n) and k == n:
        return THIRD
    if not _is_pow2(n) and k == n:
        return ONE
    return ZERO


class GaltonCoefficients:
    """Coefficient table entry(n, k) in [0, 1] for 0 <= k <= n."""

    __slots__ = ("kind", "_entry", "_floats")

    def __init__(self, kind: str, entry_fn):
        self.kind = kind
        self._entry = entry_fn
        self._floats: dict[tuple[int, int], float] = {}

    @classmethod
    def log_curve(cls) -> "GaltonCoefficients":
        return cls("log-curve", galton_coefficient)

    @classmethod
    def constant(cls, p) -> "GaltonCoefficients":
        p = as_prob(p, what="coefficient")

        def entry(n: int, k: int) -> Fraction:
            if n < 0 or k < 0 or k > n:
                raise DomainError(f"need 0 <= k <= n, got (n, k) = ({n}, {k})")
            return p

        return cls("constant", entry)

    @classmethod
    def from_table(cls, entries, default=ZERO) -> "GaltonCoefficients":
        default = as_prob(default, what="default coefficient")
        table: dict[tuple[int, int], Fraction] = {}
        for row in entries:
            try:
                n, k = int(row["n"]), int(row["k"])
                p = as_prob(row["p"], what="coefficient")
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"bad coefficient row {row!r}") from exc
            if not 0 <= k <= n:
                raise ConfigError(f"coefficient row has k > n: {row!r}")
            table[(n, k)] = p

        def entry(n: int, k: int) -> Fraction:
            if n < 0 or k < 0 or k > n:
                raise DomainError(f"need 0 <= k <= n, got (n, k) = ({n}, {k})")
            return table.get((n, k), default)

        return cls("table", entry)

    def entry(self, n: int, k: int) -> Fraction:
        return self._entry(n, k)

    def entry_float(self, n: int, k: int) -> float:
        key = (n, k)
        val = self._floats.get(key)
        if val is None:
            val = float(self._entry(n, k))
            self._floats[key] = val
        return val


def pmf_step(pmf: SparsePmf, n: int, coeffs: GaltonCoefficients) -> SparsePmf:
    """One-event update: the law of S_n becomes the law of S_{n+1}."""
    out: dict[int, Fraction] = {}
    for count, mass in pmf.items():
        c = coeffs.entry(n, count)
        if c != 1:
            key = count
            out[key] = out.get(key, ZERO) + mass * (1 - c)
        if c != 0:
            key = count + 1
            out[key] = out.get(key, ZERO) + mass * c
    return SparsePmf(out)


class GaltonModel(EventModel):
    """Event sequence sampled from a coefficient table.

    Keeps an immutable p.m.f. ladder p_0, p_1, ... as it is demanded;
    pairwise joints and window unions are obtained by propagating small
    augmented state spaces forward along the same transitions.
    """

    has_pairwise = True
    has_exact_pmf = True
    has_union = True

    def __init__(self, coefficients: GaltonCoefficients):
        self.coefficients = coefficients
        self._ladder: list[SparsePmf] = [SparsePmf({0: ONE})]
        self._marginals: list[Fraction] = []

    @property
    def has_absorption(self) -> bool:
        return self.coefficients.kind == "log-curve"

    def _ensure(self, n: int) -> None:
        while len(self._ladder) <= n:
            t = len(self._ladder) - 1
            self._ladder.append(pmf_step(self._ladder[t], t, self.coefficients))

    def exact_pmf(self, n: int) -> SparsePmf:
        if n < 0:
            raise DomainError(f"n must be >= 0, got {n}")
        self._ensure(n)
        return self._ladder[n]

    def iter_pmfs(self, horizon: int) -> Iterator[tuple[int, SparsePmf]]:
        for n in range(1, horizon + 1):
            yield n, self.exact_pmf(n)

    def marginal(self, i: int) -> Fraction:
        if i < 0:
            raise DomainError(f"negative event index {i}")
        while len(self._marginals) <= i:
            t = len(self._marginals)
            pmf = self.exact_pmf(t)
            self._marginals.append(
                sum(
                    (m * self.coefficients.entry(t, s) for s, m in pmf.items()),
                    ZERO,
                )
            )
        return self._marginals[i]

    def pairwise(self, i: int, j: int) -> Fraction:
        if i == j:
            raise DomainError("pairwise needs two distinct indices")
        if i > j:
            i, j = j, i
        return self.pairwise_row(i, j)[j]

    def pairwise_row(self, i: int, horizon: int) -> dict[int, Fraction]:
        """Exact P(A_i  A_j) for every j in (i, horizon]."""
        if not 0 <= i < horizon:
            raise DomainError(f"need 0 <= i < horizon, got ({i}, {horizon})")
        coeffs = self.coefficients
        cap = 2 * support_cap()
        states: dict[tuple[int, bool], Fraction] = {}
        for s, mass in self.exact_pmf(i).items():
            c = coeffs.entry(i, s)
            if c != 0:
                states[(s + 1, True)] = states.get((s + 1, True), ZERO) + mass * c
            if c != 1:
                states[(s, False)] = states.get((s, False), ZERO) + mass * (1 - c)
        row: dict[int, Fraction] = {}
        for t in range(i + 1, horizon + 1):
            row[t] = sum(
                (mass * coeffs.entry(t, s) for (s, flag), mass in states.items() if flag),
                ZERO,
            )
            if t == horizon:
                break
            nxt: dict[tuple[int, bool], Fraction] = {}
            for (s, flag), mass in states.items():
                c = coeffs.entry(t, s)
                if c != 0:
                    key = (s + 1, flag)
                    nxt[key] = nxt.get(key, ZERO) + mass * c
                if c != 1:
                    key = (s, flag)
                    nxt[key] = nxt.get(key, ZERO) + mass * (1 - c)
            if len(nxt) > cap:
                raise SupportCapError(f"joint state space exceeds cap {cap}")
            states = nxt
        return row

    def union_prob(self, m: int, i: int) -> Fraction:
        for idx, value in self.iter_union_probs(m, i):
            if idx == i:
                return value
        raise DomainError(f"need m <= i, got ({m}, {i})")

    def iter_union_probs(self, m: int, horizon: int) -> Iterator[tuple[int, Fraction]]:
        if m < 0:
            raise DomainError(f"negative start index {m}")
        coeffs = self.coefficients
        cap = 2 * support_cap()
        states: dict[tuple[int, bool], Fraction] = {
            (s, False): mass for s, mass in self.exact_pmf(m).items()
        }
        for t in range(m, horizon + 1):
            nxt: dict[tuple[int, bool], Fraction] = {}
            for (s, flag), mass in states.items():
                c = coeffs.entry(t, s)
                if c != 0:
                    key = (s + 1, True)
                    nxt[key] = nxt.get(key, ZERO) + mass * c
                if c != 1:
                    key = (s, flag)
                    nxt[key] = nxt.get(key, ZERO) + mass * (1 - c)
            if len(nxt) > cap:
                raise SupportCapError(f"union state space exceeds cap {cap}")
            states = nxt
            yield t, sum((mass for (s, flag), mass in states.items() if flag), ZERO)

    def window_count_pmf(self, start: int, n: int) -> SparsePmf:
        if not 0 <= start <= n:
            raise DomainError(f"bad window [{start}, {n})")
        coeffs = self.coefficients
        cap = 2 * support_cap()
        states: dict[tuple[int, int], Fraction] = {
            (s, 0): mass for s, mass in self.exact_pmf(start).items()
        }
        for t in range(start, n):
            nxt: dict[tuple[int, int], Fraction] = {}
            for (s, d), mass in states.items():
                c = coeffs.entry(t, s)
                if c != 0:
                    key = (s + 1, d + 1)
                    nxt[key] = nxt.get(key, ZERO) + mass * c
                if c != 1:
                    key = (s, d)
                    nxt[key] = nxt.get(key, ZERO) + mass * (1 - c)
            if len(nxt) > cap:
                raise SupportCapError(f"window state space exceeds cap {cap}")
            states = nxt
        out: dict[int, Fraction] = {}
        for (_, d), mass in states.items():
            out[d] = out.get(d, ZERO) + mass
        return SparsePmf(out)

    def sample_path(self, horizon: int, rng: random.Random) -> list[int]:
        coeffs = self.coefficients
        bits = []
        count = 0
        for t in range(horizon):
            p = coeffs.entry_float(t, count)
            if p >= 1.0:
                hit = 1
            elif p <= 0.0:
                hit = 0
            else:
                hit = 1 if rng.random() < p else 0
            bits.append(hit)
            count += hit
        return bits

    def absorption_probability(self, n: int) -> Fraction:
        if not self.has_absorption:
            raise DomainError("absorption mass is defined for log-curve coefficients")
        return absorption_probability(n)


def _curve_parameters(n: int) -> tuple[int, int, int, int]:
    """(k, m, l, log2 l) with k = floor(log2 n), m = ceil(log2 n), and l the
    least power of two exceeding k."""
    if n < 2:
        raise DomainError(f"n must be >= 2, got {n}")
    k = n.bit_length() - 1
    m = k if _is_pow2(n) else k + 1
    l = 1
    while l <= k:
        l <<= 1
    return k, m, l, l.bit_length() - 1


def closed_form_pmf(n: int) -> SparsePmf:
    """Exact law of S_n under the logarithmic-curve coefficients, n >= 2.

    Mass 1 - 3^-log(l) sits at k, a geometric band 2/3^(j+log l) at the
    doubling points 2^(j-1) l, and 3^-m at n itself.
    """
    k, m, l, logl = _curve_parameters(n)
    entries: dict[int, Fraction] = {k: 1 - Fraction(1, 3**logl)}
    for j in range(1, m - logl + 1):
        point = 2 ** (j - 1) * l
        entries[point] = entries.get(point, ZERO) + Fraction(2, 3 ** (j + logl))
    entries[n] = entries.get(n, ZERO) + Fraction(1, 3**m)
    return SparsePmf(entries)


class MuBounds(NamedTuple):
    lower: int
    upper_holds: bool
    mu: Fraction


def galton_mu_bounds(n: int) -> MuBounds:
    """Exact mu_n with the floor(log2 n) lower bound and the +1 upper check.

    The lower bound holds for every n >= 2; the upper one is only promised
    for large n, so it is reported rather than asserted.
    """
    k, _, _, _ = _curve_parameters(n)
    mu = closed_form_pmf(n).mean()
    if mu < k:
        raise DomainError(f"mu_{n} = {mu} fell below its lower bound {k}")
    return MuBounds(lower=k, upper_holds=mu <= k + 1, mu=mu)


def absorption_probability(n: int) -> Fraction:
    """Mass already sitting on the logarithmic curve at time n (n >= 2)."""
    _, _, _, logl = _curve_parameters(n)
    return 1 - Fraction(1, 3**logl)


def galton_pairwise(model: GaltonModel, i: int, j: int) -> Fraction:
    """Exact P(A_i  A_j) via forward propagation of (count, I_i)."""
    if i == j:
        raise DomainError("pairwise needs two distinct indices")
    return model.pairwise(i, j)


def galton_model_from_config(config: dict) -> GaltonModel:
    kind = config.get("kind", "log-curve")
    if kind == "log-curve":
        return GaltonModel(GaltonCoefficients.log_curve())
    if kind == "constant":
        if "p" not in config:
            raise ConfigError("constant coefficients need a 'p' value")
        return GaltonModel(GaltonCoefficients.constant(config["p"]))
    if kind == "table":
        entries = config.get("entries")
        if not isinstance(entries, list):
            raise ConfigError("table coefficients need an 'entries' list")
        return GaltonModel(
            GaltonCoefficients.from_table(entries, config.get("default", "0"))
        )
    raise ConfigError(f"unknown coefficient kind {kind!r}")
