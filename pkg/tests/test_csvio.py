from fractions import Fraction as F

import numpy as np
import pytest

from topicsqif import csvio
from topicsqif.core import InvalidChannelError, InvalidDistributionError, hyper, uniform_prior
from topicsqif.models import build_topics_channel

TOPICS_CSV = """\
,t1,t2,t3
x1,1/2,0,1/2
x2,0.5,0.5,0
"""


def test_parse_channel_exact():
    ch = csvio.parse_channel(TOPICS_CSV)
    assert ch.exact
    assert ch.row_labels == ("x1", "x2") and ch.col_labels == ("t1", "t2", "t3")
    assert ch.entries[1, 0] == F(1, 2)


def test_parse_channel_falls_back_to_float():
    ch = csvio.parse_channel(",a,b,c\nx,0.3333333333,0.3333333333,0.3333333333\n")
    assert not ch.exact
    with pytest.raises(InvalidChannelError):
        csvio.parse_channel(",a,b\nx,0.3,0.3\n")


def test_parse_channel_forced_float():
    assert not csvio.parse_channel(TOPICS_CSV, exact=False).exact


@pytest.mark.parametrize(
    "text, row",
    [
        ("x,a\nr,1\n", None),
        (",a,b\nr1,1,0\nr2,1\n", 1),
        (",a,b\nr1,1,zero\n", 0),
        (",a,b\nr1,0.5,0.6\n", 0),
        (",a,b\nr1,1,0\nr2,3/2,-1/2\n", 1),
    ],
)
def test_parse_channel_diagnostics(text, row):
    with pytest.raises(InvalidChannelError) as err:
        csvio.parse_channel(text)
    assert err.value.row == row


def test_channel_roundtrip(tmp_path):
    ch = build_topics_channel([("t1", "t2", "t3"), ("t2", "t5", "t7")], 8)
    path = tmp_path / "c.csv"
    path.write_text(csvio.write_channel(ch))
    back = csvio.read_channel(path)
    assert back.exact and back.col_labels == ch.col_labels
    assert back.entries.tolist() == ch.entries.tolist()


def test_float_channel_roundtrip():
    ch = csvio.parse_channel(",a,b\nx,0.1,0.9\n", exact=False)
    back = csvio.parse_channel(csvio.write_channel(ch), exact=False)
    assert np.array_equal(back.entries, ch.entries)


def test_distribution_roundtrip(tmp_path):
    text = "label,probability\nx1,1/6\nx2,0.5\nx3,1/3\n"
    d = csvio.parse_distribution(text)
    assert d.exact and list(d.probs) == [F(1, 6), F(1, 2), F(1, 3)]
    path = tmp_path / "p.csv"
    path.write_text(csvio.write_distribution(d))
    assert csvio.read_distribution(path).as_dict() == d.as_dict()


def test_distribution_headerless_and_errors():
    assert len(csvio.parse_distribution("a,1/2\nb,1/2\n")) == 2
    with pytest.raises(InvalidDistributionError):
        csvio.parse_distribution("a,1/2\nb,1/3\n")
    with pytest.raises(InvalidDistributionError):
        csvio.parse_distribution("a,1/2,3\n")


def test_write_hyper():
    ch = csvio.parse_channel(",a,b\nx1,1,0\nx2,0,1\nx3,0,1\n")
    text = csvio.write_hyper(hyper(uniform_prior(3), ch))
    assert text.splitlines() == ["output,outer,x1,x2,x3", "a,1/3,1,0,0", "b,2/3,0,1/2,1/2"]
