import math
import random
from datetime import date

import pytest
from hypothesis import given, strategies as st

from crisisnet.errors import ConfigError, ContractError
from crisisnet.sentiment import (
    classify,
    compound_score,
    load_lexicon,
    score,
    sentiment_timeseries,
    write_timeseries_csv,
)
from crisisnet.textprep import Document

LEX = {"safe": 1.9, "help": 1.7, "love": 3.2, "hate": -2.7, "fear": -2.2, "good": 2.0, "bad": -2.0}
D1 = date(2020, 8, 27)


def doc(tokens, day=D1, tid="t"):
    return Document(tid, tuple(tokens), day)


def test_no_hits_is_zero():
    assert compound_score(doc(["storm", "surge"]), LEX) == 0.0
    assert compound_score([], LEX) == 0.0


def test_single_token_value():
    expected = 1.9 / math.sqrt(1.9**2 + 15)
    assert compound_score(["safe"], LEX) == pytest.approx(expected, abs=1e-15)
    assert round(compound_score(["safe"], LEX), 4) == 0.4404


def test_cancellation():
    assert compound_score(["good", "bad"], LEX) == 0.0


def test_repeated_tokens_count_each_time():
    s = 2 * 1.9
    assert compound_score(["safe", "safe"], LEX) == pytest.approx(s / math.sqrt(s * s + 15))


@pytest.mark.parametrize(
    "value, label",
    [(0.0, "neutral"), (0.4404, "positive"), (-0.05, "negative"), (0.05, "positive"),
     (0.0499, "neutral"), (-0.0499, "neutral"), (1.0, "positive"), (-1.0, "negative")],
)
def test_classify(value, label):
    assert classify(value) == label


@pytest.mark.parametrize("value", [1.0001, -1.5, float("nan"), float("inf")])
def test_classify_out_of_range(value):
    with pytest.raises(ContractError):
        classify(value)


@given(st.floats(min_value=-1.0, max_value=1.0))
def test_classify_partitions(c):
    hits = [c >= 0.05, c <= -0.05, -0.05 < c < 0.05]
    assert sum(hits) == 1
    assert classify(c) == ["positive", "negative", "neutral"][hits.index(True)]


@given(st.lists(st.floats(min_value=-4, max_value=4, allow_nan=False), max_size=30))
def test_score_bounded_and_consistent(valences):
    lex = {f"w{i}": v for i, v in enumerate(valences)}
    res = score(list(lex), lex)
    assert -1.0 < res.compound < 1.0
    assert res.label == classify(res.compound)


def test_monotone_under_positive_tokens():
    rng = random.Random(11)
    for _ in range(1000):
        lex = {f"w{i}": rng.uniform(-4, 4) for i in range(12)}
        lex["up"] = rng.uniform(0.01, 4)
        toks = [rng.choice(list(lex)) for _ in range(rng.randrange(0, 15))]
        before = compound_score(toks, lex)
        after = compound_score(toks + ["up"] * rng.randint(1, 3), lex)
        assert after >= before


def test_timeseries_examples():
    assert len(sentiment_timeseries([], LEX)) == 0
    docs = [doc(["love"]), doc(["safe", "help"]), doc(["hate"])]
    assert dict(sentiment_timeseries(docs, LEX)) == {D1: (1, 0, 2)}
    neutral = [doc(["storm"], tid=str(i)) for i in range(5)]
    assert dict(sentiment_timeseries(neutral, LEX)) == {D1: (0, 5, 0)}


def test_timeseries_zero_fills_gaps():
    docs = [doc(["love"], date(2020, 8, 25)), doc(["fear"], date(2020, 8, 28))]
    series = sentiment_timeseries(docs, LEX)
    assert list(series) == [date(2020, 8, d) for d in (25, 26, 27, 28)]
    assert series[date(2020, 8, 26)] == (0, 0, 0)


@given(st.lists(st.tuples(st.integers(0, 6), st.lists(st.sampled_from(sorted(LEX) + ["x"]), max_size=5)), max_size=40))
def test_daily_counts_sum_to_documents(rows):
    docs = [doc(toks, date(2020, 8, 20 + d), str(i)) for i, (d, toks) in enumerate(rows)]
    series = sentiment_timeseries(docs, LEX)
    for day, counts in series.items():
        assert sum(counts) == sum(1 for x in docs if x.day == day)


def test_write_csv(tmp_path):
    path = tmp_path / "s.csv"
    write_timeseries_csv(sentiment_timeseries([doc(["love"]), doc(["x"])], LEX), path)
    assert path.read_text().splitlines() == ["day,negative,neutral,positive", "2020-08-27,0,1,1"]


def test_load_lexicon(tmp_path):
    p = tmp_path / "lex.tsv"
    p.write_text("# comment\nSafe\t1.9\t0.5\t[1, 2]\n\nhate\t-2.7\n", encoding="utf-8")
    assert load_lexicon(p) == {"safe": 1.9, "hate": -2.7}


@pytest.mark.parametrize("body", ["safe\t1.9\nsafe\t2.0\n", "safe\tnan\n", "safe\n", "safe\tabc\n"])
def test_load_lexicon_rejects(tmp_path, body):
    p = tmp_path / "lex.tsv"
    p.write_text(body, encoding="utf-8")
    with pytest.raises(ConfigError):
        load_lexicon(p)
