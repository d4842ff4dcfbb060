import pytest
from hypothesis import given, settings, strategies as st

from crisisnet.textprep import (
    DEFAULT_STOPWORDS,
    load_stoplist,
    make_document,
    normalize,
    remove_stopwords,
    tokenize,
)


@pytest.mark.parametrize(
    "raw, expected",
    [
        ("", ""),
        (
            "Me waiting patiently to get the internet and cable fix and back on.... I hate hurricane season",
            "me waiting patiently to get the internet and cable fix and back on i hate hurricane season",
        ),
        ("Stay safe! <b>LAURA</b> http://t.co/xyz 🌀", "stay safe laura"),
        ("@fox4beaumont Hurricane Laura death toll", "fox4beaumont hurricane laura death toll"),
        ("#HelpLakeCharles now", "helplakecharles now"),
        ("see www.example.com/path &amp; more", "see more"),
        ("tab\tand\nnewline\x07bell", "tab and newline bell"),
        ("🙏🏽 praying ❤️ for swla", "praying for swla"),
        ("power's out", "power's out"),
    ],
)
def test_normalize(raw, expected):
    assert normalize(raw) == expected


@given(st.text())
@settings(max_examples=500)
def test_normalize_idempotent(text):
    once = normalize(text)
    assert normalize(once) == once


@given(st.text())
def test_normalized_tokens_are_clean(text):
    for tok in tokenize(normalize(text)):
        assert tok and not any(c.isspace() for c in tok)
        assert tok == tok.lower()


@pytest.mark.parametrize(
    "text, expected",
    [
        ("", []),
        ("hurricane laura landfall", ["hurricane", "laura", "landfall"]),
        ("power's out, again.", ["power's", "out", "again"]),
        ("category 4 storm 15 feet", ["category", "storm", "15", "feet"]),
        ("... -- '", []),
    ],
)
def test_tokenize(text, expected):
    assert tokenize(text) == expected


@given(st.text())
def test_tokenize_rejoin_is_stable(text):
    toks = tokenize(text)
    assert tokenize(" ".join(toks)) == toks


def test_remove_stopwords_examples():
    assert remove_stopwords(["the", "storm", "is", "here"], {"the", "is"}) == ["storm", "here"]
    assert remove_stopwords(["storm"], set()) == ["storm"]


def test_remove_stopwords_twenty_token_fixture():
    tokens = [
        "the", "storm", "surge", "is", "coming", "to", "lake", "charles", "and",
        "power", "crews", "wait", "near", "the", "levee", "for", "an", "update",
        "tonight", "cameron",
    ]
    stop = {"the", "is", "to", "and", "for", "an"}
    assert len(tokens) == 20
    # hand count: the x2, is, to, and, for, an
    kept = remove_stopwords(tokens, stop)
    assert len(kept) == 13
    assert kept == [
        "storm", "surge", "coming", "lake", "charles", "power", "crews",
        "wait", "near", "levee", "update", "tonight", "cameron",
    ]


@given(st.lists(st.sampled_from(["a", "b", "the", "storm", "is", "x"])), st.sets(st.sampled_from(["a", "the", "is"])))
def test_remove_stopwords_is_order_preserving_subsequence(tokens, stop):
    out = remove_stopwords(tokens, stop)
    it = iter(tokens)
    assert all(tok in it for tok in out)
    assert not set(out) & stop


def test_default_stoplist_size():
    assert 150 <= len(DEFAULT_STOPWORDS) <= 200
    assert all(w == w.lower() for w in DEFAULT_STOPWORDS)


def test_load_stoplist(tmp_path):
    p = tmp_path / "stop.txt"
    p.write_text("# comment\nThe\nis  # trailing\n\nand\n", encoding="utf-8")
    assert load_stoplist(p) == {"the", "is", "and"}


def test_make_document_uses_day_and_offset():
    from datetime import datetime, timezone

    ts = datetime(2020, 8, 27, 2, 0, tzinfo=timezone.utc)
    doc = make_document("1", "The STORM is here http://x.co", ts)
    assert doc.tokens == ("storm",)
    assert str(doc.day) == "2020-08-27"
    assert str(make_document("1", "x", ts, utc_offset_hours=-5).day) == "2020-08-26"
