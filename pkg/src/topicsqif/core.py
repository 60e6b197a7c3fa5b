"""Priors, channels, joints, hypers and Bayes vulnerability.

Values come in two numeric modes that share one code path:

* exact: entries are :class:`fractions.Fraction` held in ``object`` arrays;
  stochasticity is checked with zero tolerance.
* float: entries are ``float64``; rows must sum to 1 within a tolerance
  (``FLOAT_TOL`` by default).

All containers are frozen dataclasses over read-only arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from . import _kernels

FLOAT_TOL = 1e-9
MIXTURE_TOL = 1e-12

Label = Hashable


class InvalidChannelError(ValueError):
    """A matrix failed the row-stochastic checks."""

    def __init__(self, message: str, row: int | None = None, column: int | None = None):
        super().__init__(message)
        self.row = row
        self.column = column


class InvalidDistributionError(ValueError):
    pass


def _is_exact_value(v) -> bool:
    return isinstance(v, (Rational, int)) and not isinstance(v, bool)


def as_array(values, exact: bool | None = None) -> np.ndarray:
    """Coerce nested numbers into an exact (object/Fraction) or float64 array.

    With ``exact=None`` the mode is inferred: exact when every element is an
    int or rational, float otherwise.
    """
    if isinstance(values, np.ndarray) and values.dtype != object:
        if exact:
            raise TypeError("cannot build an exact array from a float array")
        return np.array(values, dtype=np.float64)
    arr = np.array(values, dtype=object)
    if exact is None:
        exact = all(_is_exact_value(v) for v in arr.flat)
    if exact:
        out = np.empty(arr.shape, dtype=object)
        for idx, v in np.ndenumerate(arr):
            if not _is_exact_value(v):
                raise TypeError(f"non-rational entry {v!r} in exact mode")
            out[idx] = Fraction(v)
        return out
    return arr.astype(np.float64)


def is_exact(arr: np.ndarray) -> bool:
    return arr.dtype == object


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def _check_labels(labels: Sequence[Label], what: str) -> tuple:
    labels = tuple(labels)
    if len(set(labels)) != len(labels):
        raise ValueError(f"{what} labels are not unique")
    return labels


def _default_labels(prefix: str, n: int) -> tuple[str, ...]:
    return tuple(f"{prefix}{i}" for i in range(1, n + 1))


def _row_sum_ok(total, exact: bool, tol: float) -> bool:
    if exact:
        return total == 1
    return abs(float(total) - 1.0) <= tol


@dataclass(frozen=True)
class Distribution:
    labels: tuple
    probs: np.ndarray

    def __post_init__(self):
        labels = _check_labels(self.labels, "distribution")
        probs = self.probs if isinstance(self.probs, np.ndarray) else as_array(self.probs)
        if probs.ndim != 1 or probs.shape[0] != len(labels):
            raise InvalidDistributionError(
                f"expected {len(labels)} probabilities, got shape {probs.shape}"
            )
        if len(labels) == 0:
            raise InvalidDistributionError("empty distribution")
        if any(p < 0 for p in probs):
            raise InvalidDistributionError("negative probability")
        total = probs.sum()
        if not _row_sum_ok(total, is_exact(probs), FLOAT_TOL):
            raise InvalidDistributionError(f"probabilities sum to {total}, not 1")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "probs", _freeze(probs.copy()))

    @property
    def exact(self) -> bool:
        return is_exact(self.probs)

    def __len__(self):
        return len(self.labels)

    def __getitem__(self, label):
        return self.probs[self.labels.index(label)]

    def as_dict(self) -> dict:
        return dict(zip(self.labels, self.probs))

    @classmethod
    def from_mapping(cls, mapping: Mapping[Label, object]) -> "Distribution":
        return cls(tuple(mapping), as_array(list(mapping.values())))


@dataclass(frozen=True)
class Channel:
    """Row-stochastic matrix from secrets (rows) to observables (columns)."""

    row_labels: tuple
    col_labels: tuple
    entries: np.ndarray
    tolerance: float = FLOAT_TOL

    def __post_init__(self):
        rows = _check_labels(self.row_labels, "row")
        cols = _check_labels(self.col_labels, "column")
        entries = self.entries if isinstance(self.entries, np.ndarray) else as_array(self.entries)
        if entries.ndim != 2 or entries.shape != (len(rows), len(cols)):
            raise InvalidChannelError(
                f"entries have shape {entries.shape}, labels imply {(len(rows), len(cols))}"
            )
        if entries.size == 0:
            raise InvalidChannelError("empty channel")
        exact = is_exact(entries)
        for i in range(entries.shape[0]):
            row = entries[i]
            for j, v in enumerate(row):
                if v < 0:
                    raise InvalidChannelError(
                        f"negative entry {v} at row {i} ({rows[i]!r}), column {j} ({cols[j]!r})",
                        row=i,
                        column=j,
                    )
            total = row.sum()
            if not _row_sum_ok(total, exact, self.tolerance):
                raise InvalidChannelError(
                    f"row {i} ({rows[i]!r}) sums to {total}, not 1", row=i
                )
        object.__setattr__(self, "row_labels", rows)
        object.__setattr__(self, "col_labels", cols)
        object.__setattr__(self, "entries", _freeze(entries.copy()))

    @property
    def exact(self) -> bool:
        return is_exact(self.entries)

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def is_deterministic(self) -> bool:
        return all(v == 0 or v == 1 for v in self.entries.flat)

    def to_float(self) -> "Channel":
        return Channel(self.row_labels, self.col_labels, self.entries.astype(np.float64))

    def reorder_rows(self, labels: Sequence[Label]) -> "Channel":
        idx = [self.row_labels.index(x) for x in labels]
        return Channel(tuple(labels), self.col_labels, self.entries[idx], self.tolerance)

    def pad_columns(self, col_labels: Sequence[Label]) -> "Channel":
        """Re-express over a superset of columns, filling absent ones with zeros."""
        col_labels = tuple(col_labels)
        missing = set(self.col_labels) - set(col_labels)
        if missing:
            raise ValueError(f"target columns lack {sorted(map(str, missing))}")
        out = np.zeros((len(self.row_labels), len(col_labels)), dtype=self.entries.dtype)
        if self.exact:
            out[...] = Fraction(0)
        pos = {c: j for j, c in enumerate(col_labels)}
        for j, c in enumerate(self.col_labels):
            out[:, pos[c]] = self.entries[:, j]
        return Channel(self.row_labels, col_labels, out, self.tolerance)


@dataclass(frozen=True)
class JointMatrix:
    row_labels: tuple
    col_labels: tuple
    entries: np.ndarray

    @property
    def exact(self) -> bool:
        return is_exact(self.entries)

    def column_masses(self) -> np.ndarray:
        return self.entries.sum(axis=0)

    def row_masses(self) -> np.ndarray:
        return self.entries.sum(axis=1)


@dataclass(frozen=True)
class Hyper:
    """Outer distribution over realized outputs, one posterior per output."""

    outer: Distribution
    inners: tuple

    def __iter__(self):
        return iter(zip(self.outer.labels, self.outer.probs, self.inners))

    def inner(self, output) -> Distribution:
        return self.inners[self.outer.labels.index(output)]

    def mixture(self) -> np.ndarray:
        """Outer-weighted average of the inners; equals the prior."""
        total = None
        for w, inner in zip(self.outer.probs, self.inners):
            term = inner.probs * w
            total = term if total is None else total + term
        return total

    def expected_vulnerability(self):
        total = None
        for w, inner in zip(self.outer.probs, self.inners):
            term = w * bayes_vulnerability(inner)
            total = term if total is None else total + term
        return total


@dataclass(frozen=True)
class VulnerabilityReport:
    prior_v: object
    posterior_v: object
    mult_leakage: object
    add_leakage: object
    log10_mult_leakage: float

    def as_dict(self) -> dict:
        return {
            "prior_vulnerability": self.prior_v,
            "posterior_vulnerability": self.posterior_v,
            "multiplicative_leakage": self.mult_leakage,
            "additive_leakage": self.add_leakage,
            "log10_multiplicative_leakage": self.log10_mult_leakage,
        }


# ---------------------------------------------------------------------------
# operations


def uniform_prior(n: int, labels: Sequence[Label] | None = None, exact: bool = True) -> Distribution:
    if n < 1:
        raise ValueError(f"uniform prior needs n >= 1, got {n}")
    if labels is None:
        labels = _default_labels("x", n)
    elif len(labels) != n:
        raise ValueError(f"{len(labels)} labels given for n={n}")
    if exact:
        probs = np.empty(n, dtype=object)
        probs[:] = Fraction(1, n)
    else:
        probs = np.full(n, 1.0 / n)
    return Distribution(tuple(labels), probs)


def validate_channel(
    rows: Sequence[Sequence] | np.ndarray,
    row_labels: Sequence[Label] | None = None,
    col_labels: Sequence[Label] | None = None,
    tolerance: float = FLOAT_TOL,
    exact: bool | None = None,
) -> Channel:
    """Build a :class:`Channel` from raw rows, raising InvalidChannelError on failure."""
    if isinstance(rows, np.ndarray):
        width = {rows.shape[1]} if rows.ndim == 2 else {-1}
        n_rows = rows.shape[0]
    else:
        rows = [list(r) for r in rows]
        width = {len(r) for r in rows}
        n_rows = len(rows)
    if n_rows == 0 or 0 in width:
        raise InvalidChannelError("channel matrix is empty")
    if len(width) != 1 or -1 in width:
        raise InvalidChannelError("channel matrix is not rectangular")
    (n_cols,) = width
    entries = as_array(rows, exact)
    if row_labels is None:
        row_labels = _default_labels("x", n_rows)
    if col_labels is None:
        col_labels = _default_labels("y", n_cols)
    return Channel(tuple(row_labels), tuple(col_labels), entries, tolerance)


def _common_mode(prior: Distribution, channel: Channel) -> tuple[np.ndarray, np.ndarray]:
    if tuple(prior.labels) != tuple(channel.row_labels):
        raise ValueError("prior labels do not match channel row labels")
    if prior.exact and channel.exact:
        return prior.probs, channel.entries
    return prior.probs.astype(np.float64), channel.entries.astype(np.float64)


def joint(prior: Distribution, channel: Channel) -> JointMatrix:
    p, c = _common_mode(prior, channel)
    entries = _freeze(c * p[:, None])
    return JointMatrix(channel.row_labels, channel.col_labels, entries)


def hyper(prior: Distribution, channel: Channel) -> Hyper:
    j = joint(prior, channel)
    masses = j.column_masses()
    keep = [y for y in range(len(j.col_labels)) if masses[y] > 0]
    outer_probs = np.array([masses[y] for y in keep], dtype=masses.dtype)
    outer = Distribution(tuple(j.col_labels[y] for y in keep), outer_probs)
    inners = tuple(
        Distribution(j.row_labels, j.entries[:, y] / masses[y]) for y in keep
    )
    return Hyper(outer, inners)


def bayes_vulnerability(dist: Distribution):
    return dist.probs.max()


def posterior_bayes_vulnerability(prior: Distribution, channel: Channel):
    """Sum of the column maxima of the joint matrix."""
    j = joint(prior, channel)
    if j.exact:
        return sum(j.entries.max(axis=0), Fraction(0))
    return _kernels.active().column_max_sum(j.entries)


def posterior_bayes_vulnerability_deterministic_uniform(channel: Channel) -> Fraction:
    """Posterior Bayes vulnerability of a 0/1 channel under a uniform prior: M/N."""
    if not channel.is_deterministic():
        raise ValueError("channel is not deterministic")
    used = int(np.count_nonzero((channel.entries == 1).any(axis=0)))
    return Fraction(used, channel.shape[0])


def _ratio(num, den):
    if isinstance(num, Fraction) and isinstance(den, Fraction):
        return num / den
    return float(num) / float(den)


def log10_value(v) -> float:
    if isinstance(v, Fraction):
        if v <= 0:
            return -math.inf
        return math.log10(v.numerator) - math.log10(v.denominator)
    if isinstance(v, int):
        return math.log10(v) if v > 0 else -math.inf
    return math.log10(v) if v > 0 else -math.inf


def multiplicative_leakage(prior: Distribution, channel: Channel):
    return _ratio(posterior_bayes_vulnerability(prior, channel), bayes_vulnerability(prior))


def additive_leakage(prior: Distribution, channel: Channel):
    return posterior_bayes_vulnerability(prior, channel) - bayes_vulnerability(prior)


def vulnerability_report(prior: Distribution, channel: Channel) -> VulnerabilityReport:
    prior_v = bayes_vulnerability(prior)
    post_v = posterior_bayes_vulnerability(prior, channel)
    if not (prior.exact and channel.exact):
        prior_v = float(prior_v)
    mult = _ratio(post_v, prior_v)
    return VulnerabilityReport(prior_v, post_v, mult, post_v - prior_v, log10_value(mult))


def convex_combination(channels: Sequence[Channel], weights: Iterable) -> Channel:
    channels = list(channels)
    weights = list(weights)
    if not channels or len(channels) != len(weights):
        raise ValueError("need one weight per channel")
    first = channels[0]
    for ch in channels[1:]:
        if ch.row_labels != first.row_labels or ch.col_labels != first.col_labels:
            raise ValueError("channels do not share row and column labels")
    exact = all(ch.exact for ch in channels) and all(_is_exact_value(w) for w in weights)
    if exact:
        weights = [Fraction(w) for w in weights]
        if sum(weights) != 1:
            raise ValueError(f"weights sum to {sum(weights)}, not 1")
    else:
        weights = [float(w) for w in weights]
        if abs(sum(weights) - 1.0) > FLOAT_TOL:
            raise ValueError(f"weights sum to {sum(weights)}, not 1")
    if any(w < 0 for w in weights):
        raise ValueError("weights must be non-negative")
    total = None
    for ch, w in zip(channels, weights):
        e = ch.entries if exact else ch.entries.astype(np.float64)
        term = e * w
        total = term if total is None else total + term
    return Channel(first.row_labels, first.col_labels, total, first.tolerance)
