"""Cookie and Topics channels, their closed forms, taxonomy noise and the leakage sweep."""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .core import Channel, convex_combination, log10_value

DEFAULT_TAXONOMY_SIZE = 350
DEFAULT_K = 5
DEFAULT_NOISE_P = Fraction(5, 100)
DEFAULT_EPOCHS = 3

# Published magnitudes that the binomial-sum formula does not reproduce.
# Keyed by number of tracked contexts; see README "Cookie leakage magnitudes".
UNREPRODUCED_COOKIE_FIGURES = {
    500: "1.8e238",
}
UNREPRODUCED_COOKIE_FIGURE_40PCT = "1.3e95"


def natural_key(s) -> tuple:
    """Sort key that orders ``D2`` before ``D10``."""
    parts = re.split(r"(\d+)", str(s))
    return tuple(int(p) if p.isdigit() else p for p in parts)


@dataclass(frozen=True)
class ModelParams:
    n_users: int
    n_contexts: int
    history_min: int = 2
    taxonomy_size: int = DEFAULT_TAXONOMY_SIZE
    k: int = DEFAULT_K
    noise_p: float | Fraction = DEFAULT_NOISE_P
    epochs: int = DEFAULT_EPOCHS

    def __post_init__(self):
        if self.n_users < 1:
            raise ValueError("n_users must be >= 1")
        if self.n_contexts < 1:
            raise ValueError("n_contexts must be >= 1")
        if self.history_min < 2:
            raise ValueError("history_min must be >= 2")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.taxonomy_size < 1 or self.k > self.taxonomy_size:
            raise ValueError(f"need 1 <= k <= taxonomy_size, got k={self.k}, T={self.taxonomy_size}")
        if not 0 <= self.noise_p <= 1:
            raise ValueError(f"noise_p must lie in [0, 1], got {self.noise_p}")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@dataclass(frozen=True)
class Taxonomy:
    """Topics ``t1..tT``; index ``i`` (0-based) is the topic identifier order."""

    size: int
    labels: tuple = field(init=False, repr=False, compare=False)
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("taxonomy needs at least one topic")
        labels = tuple(f"t{i}" for i in range(1, self.size + 1))
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(labels)})

    def __len__(self):
        return self.size

    def __contains__(self, label):
        return label in self._index

    def index(self, label) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise ValueError(f"{label!r} is not in a taxonomy of size {self.size}") from None


def _as_taxonomy(taxonomy: Taxonomy | int) -> Taxonomy:
    return taxonomy if isinstance(taxonomy, Taxonomy) else Taxonomy(int(taxonomy))


# ---------------------------------------------------------------------------
# third-party cookies


def history_label(contexts: Iterable) -> str:
    return "{" + ",".join(sorted(map(str, contexts), key=natural_key)) + "}"


def build_cookies_channel(
    histories: Sequence[Iterable], user_labels: Sequence | None = None
) -> Channel:
    """Deterministic channel from users to their (set-valued) browsing histories.

    One column per distinct realized history, ordered by size and then
    context name.
    """
    sets = [frozenset(map(str, h)) for h in histories]
    if not sets:
        raise ValueError("no histories given")
    for i, s in enumerate(sets):
        if len(s) < 2:
            raise ValueError(f"history {i} has {len(s)} context(s); at least 2 are required")
    distinct = sorted(set(sets), key=lambda s: (len(s), sorted(map(natural_key, s))))
    col_of = {s: j for j, s in enumerate(distinct)}
    entries = np.empty((len(sets), len(distinct)), dtype=object)
    entries[...] = Fraction(0)
    for i, s in enumerate(sets):
        entries[i, col_of[s]] = Fraction(1)
    if user_labels is None:
        user_labels = tuple(f"x{i}" for i in range(1, len(sets) + 1))
    return Channel(tuple(user_labels), tuple(history_label(s) for s in distinct), entries)


def saturated_histories(m_prime: int, min_size: int = 2) -> list[tuple[str, ...]]:
    """Every subset of ``D1..D{m_prime}`` with at least ``min_size`` contexts."""
    contexts = [f"D{i}" for i in range(1, m_prime + 1)]
    return [
        combo
        for r in range(min_size, m_prime + 1)
        for combo in itertools.combinations(contexts, r)
    ]


def cookie_history_count(m_prime: int) -> int:
    """Number of histories with at least two of ``m_prime`` contexts: 2^M' - M' - 1."""
    if m_prime < 2:
        raise ValueError(f"need at least 2 contexts, got {m_prime}")
    return (1 << m_prime) - m_prime - 1


def cookie_binomial_sum(m_prime: int) -> int:
    if m_prime < 2:
        raise ValueError(f"need at least 2 contexts, got {m_prime}")
    return sum(math.comb(m_prime, r) for r in range(2, m_prime + 1))


def cookies_closed_form_vulnerability(m_prime: int, n_users: int) -> Fraction:
    if n_users < 1:
        raise ValueError("n_users must be >= 1")
    count = cookie_history_count(m_prime)
    if cookie_binomial_sum(m_prime) != count:  # pragma: no cover - arithmetic identity
        raise AssertionError("binomial sum disagrees with 2^M' - M' - 1")
    v = Fraction(count, n_users)
    if v > 1:
        raise ValueError(
            f"{n_users} users cannot realize all {count} histories over {m_prime} contexts"
        )
    return v


@dataclass(frozen=True)
class CookieLeakage:
    m_prime: int
    value: int
    log10: float

    @property
    def published_figure(self) -> str | None:
        return UNREPRODUCED_COOKIE_FIGURES.get(self.m_prime)


def cookies_closed_form_leakage(m_prime: int) -> CookieLeakage:
    value = cookie_history_count(m_prime)
    return CookieLeakage(m_prime, value, math.log10(value))


# ---------------------------------------------------------------------------
# Topics API


def build_topics_channel(
    profiles: Sequence[Iterable],
    taxonomy: Taxonomy | int,
    k: int | None = None,
    user_labels: Sequence | None = None,
) -> Channel:
    """Channel from users to the topics observed in their top-k sets.

    Columns are the topics present in at least one profile, in taxonomy order.
    """
    tax = _as_taxonomy(taxonomy)
    sets = [list(p) for p in profiles]
    if not sets:
        raise ValueError("no profiles given")
    if k is None:
        k = len(set(sets[0]))
    if k < 1:
        raise ValueError("k must be >= 1")
    for i, p in enumerate(sets):
        if len(p) != k or len(set(p)) != k:
            raise ValueError(f"profile {i} has {len(set(p))} distinct topics, expected k={k}")
        for t in p:
            tax.index(t)
    observed = sorted({t for p in sets for t in p}, key=tax.index)
    col_of = {t: j for j, t in enumerate(observed)}
    entries = np.empty((len(sets), len(observed)), dtype=object)
    entries[...] = Fraction(0)
    for i, p in enumerate(sets):
        for t in p:
            entries[i, col_of[t]] = Fraction(1, k)
    if user_labels is None:
        user_labels = tuple(f"x{i}" for i in range(1, len(sets) + 1))
    return Channel(tuple(user_labels), tuple(observed), entries)


def topics_closed_form_vulnerability(n_users: int, m_topics: int, k: int) -> Fraction:
    if k < 1 or n_users < 1:
        raise ValueError("k and n_users must be >= 1")
    if m_topics < k:
        raise ValueError(f"M={m_topics} observed topics cannot be fewer than k={k}")
    if m_topics > k * n_users:
        raise ValueError(f"{n_users} users with k={k} cannot realize {m_topics} topics")
    return Fraction(m_topics, k * n_users)


def topics_closed_form_leakage(m_topics: int, k: int) -> Fraction:
    if k < 1:
        raise ValueError("k must be >= 1")
    if m_topics < k:
        raise ValueError(f"M={m_topics} observed topics cannot be fewer than k={k}")
    return Fraction(m_topics, k)


def uniform_taxonomy_channel(row_labels: Sequence, taxonomy: Taxonomy | int, exact: bool = True) -> Channel:
    tax = _as_taxonomy(taxonomy)
    shape = (len(row_labels), tax.size)
    if exact:
        entries = np.empty(shape, dtype=object)
        entries[...] = Fraction(1, tax.size)
    else:
        entries = np.full(shape, 1.0 / tax.size)
    return Channel(tuple(row_labels), tax.labels, entries)


def apply_taxonomy_noise(channel: Channel, taxonomy: Taxonomy | int, p) -> Channel:
    """Mix ``channel`` with uniform draws from the whole taxonomy: (1-p)C + pU."""
    tax = _as_taxonomy(taxonomy)
    if len(channel.col_labels) > tax.size:
        raise ValueError(
            f"taxonomy of {tax.size} topics is smaller than the channel's {len(channel.col_labels)} columns"
        )
    for c in channel.col_labels:
        tax.index(c)
    if not 0 <= p <= 1:
        raise ValueError(f"noise probability must lie in [0, 1], got {p}")
    exact = channel.exact and isinstance(p, (int, Fraction))
    base = channel.pad_columns(tax.labels)
    if not exact:
        base = base.to_float()
    noise = uniform_taxonomy_channel(channel.row_labels, tax, exact=exact)
    if exact:
        p = Fraction(p)
        return convex_combination([base, noise], [1 - p, p])
    return convex_combination([base, noise], [1.0 - float(p), float(p)])


# ---------------------------------------------------------------------------
# leakage sweep


@dataclass(frozen=True)
class SweepRow:
    m: int
    k: int
    leakage: Fraction

    @property
    def log10_leakage(self) -> float:
        return log10_value(self.leakage)


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    skipped: tuple[tuple[int, int], ...]

    def to_csv(self) -> str:
        lines = ["m,k,leakage,log10_leakage"]
        for r in self.rows:
            lines.append(f"{r.m},{r.k},{format_sig(r.leakage)},{format_sig(r.log10_leakage)}")
        return "\n".join(lines) + "\n"


def leakage_sweep(m_values: Iterable[int], k_values: Iterable[int]) -> SweepResult:
    """Topics leakage M/k for every (M, k), M-major; pairs with M < k are skipped."""
    rows, skipped = [], []
    k_values = list(k_values)
    for m in m_values:
        for k in k_values:
            if k < 1 or m < k:
                skipped.append((m, k))
                continue
            rows.append(SweepRow(m, k, topics_closed_form_leakage(m, k)))
    return SweepResult(tuple(rows), tuple(skipped))


def format_sig(value, digits: int = 6) -> str:
    """Decimal rendering with ``digits`` significant digits."""
    return f"{float(value):.{digits}g}"


def fraction_json(value) -> dict | float:
    """JSON form of an exact rational: numerator/denominator strings plus a decimal."""
    if isinstance(value, int) and not isinstance(value, bool):
        value = Fraction(value)
    if isinstance(value, Fraction):
        return {
            "numerator": str(value.numerator),
            "denominator": str(value.denominator),
            "decimal": format_sig(value) if abs(value.numerator) < 10**300 else None,
            "log10": format_sig(log10_value(value)) if value > 0 else None,
        }
    return float(value)
