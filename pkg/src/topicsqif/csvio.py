"""Channel and distribution CSV files.

Channel layout: the header's first cell is empty and the rest are column
labels; each following line is a row label and its entries.  Distribution
layout: two columns, label and probability.  Entries are decimals or exact
fractions ``a/b``.
"""

from __future__ import annotations

import csv
import io
from fractions import Fraction
from pathlib import Path

import numpy as np

from .core import Channel, Distribution, Hyper, InvalidChannelError, InvalidDistributionError, as_array


def parse_number(text: str) -> Fraction:
    """Parse ``"0.25"``, ``"1/4"`` or ``"1e-3"`` exactly."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError, OverflowError):
        raise ValueError(f"not a number: {text!r}") from None


def format_number(v) -> str:
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    return repr(float(v))


def _rows(text: str) -> list[list[str]]:
    return [r for r in csv.reader(io.StringIO(text)) if any(c.strip() for c in r)]


def _auto_mode(values: list[list[Fraction]], exact: bool | None) -> bool:
    if exact is not None:
        return exact
    return all(sum(r, Fraction(0)) == 1 for r in values)


def read_channel(path, exact: bool | None = None, tolerance: float = 1e-9) -> Channel:
    return parse_channel(Path(path).read_text(encoding="utf-8"), exact, tolerance)


def parse_channel(text: str, exact: bool | None = None, tolerance: float = 1e-9) -> Channel:
    """Parse channel CSV text.

    With ``exact=None`` the channel is exact when every row sums to exactly 1
    as parsed; otherwise entries become floats and rows are checked within
    ``tolerance``.
    """
    rows = _rows(text)
    if not rows:
        raise InvalidChannelError("empty channel file")
    header = rows[0]
    if header[0].strip():
        raise InvalidChannelError("first header cell must be empty")
    cols = [c.strip() for c in header[1:]]
    row_labels, values = [], []
    for i, r in enumerate(rows[1:]):
        if len(r) != len(header):
            raise InvalidChannelError(
                f"row {i} ({r[0].strip()!r}) has {len(r) - 1} entries, header has {len(cols)}", row=i
            )
        row_labels.append(r[0].strip())
        parsed = []
        for j, cell in enumerate(r[1:]):
            try:
                parsed.append(parse_number(cell))
            except ValueError as exc:
                raise InvalidChannelError(f"row {i}, column {j}: {exc}", row=i, column=j) from None
        values.append(parsed)
    if not values:
        raise InvalidChannelError("channel file has no rows")
    exact = _auto_mode(values, exact)
    entries = as_array(values, exact=True)
    if not exact:
        entries = entries.astype(np.float64)
    return Channel(tuple(row_labels), tuple(cols), entries, tolerance)


def write_channel(channel: Channel) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([""] + [str(c) for c in channel.col_labels])
    for label, row in zip(channel.row_labels, channel.entries):
        w.writerow([str(label)] + [format_number(v) for v in row])
    return buf.getvalue()


def read_distribution(path, exact: bool | None = None) -> Distribution:
    return parse_distribution(Path(path).read_text(encoding="utf-8"), exact)


def parse_distribution(text: str, exact: bool | None = None) -> Distribution:
    rows = _rows(text)
    labels, probs = [], []
    for i, r in enumerate(rows):
        if len(r) != 2:
            raise InvalidDistributionError(f"line {i} has {len(r)} fields, expected 2")
        try:
            p = parse_number(r[1])
        except ValueError as exc:
            if i == 0:
                continue  # header line
            raise InvalidDistributionError(f"line {i}: {exc}") from None
        labels.append(r[0].strip())
        probs.append(p)
    if exact is None:
        exact = sum(probs, Fraction(0)) == 1
    arr = as_array(probs, exact=True)
    if not exact:
        arr = arr.astype(np.float64)
    return Distribution(tuple(labels), arr)


def write_distribution(dist: Distribution) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label", "probability"])
    for label, p in zip(dist.labels, dist.probs):
        w.writerow([str(label), format_number(p)])
    return buf.getvalue()


def write_hyper(h: Hyper) -> str:
    """One line per realized output: output label, outer probability, posterior over secrets."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    secrets = h.inners[0].labels if h.inners else ()
    w.writerow(["output", "outer"] + [str(s) for s in secrets])
    for y, w_y, inner in h:
        w.writerow([str(y), format_number(w_y)] + [format_number(p) for p in inner.probs])
    return buf.getvalue()
