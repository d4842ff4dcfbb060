import json
import math
from datetime import date

import pytest
from hypothesis import given, strategies as st

from crisisnet.errors import ConfigError
from crisisnet.ingest import (
    UNASSIGNED,
    CorpusStats,
    GeoPoint,
    Region,
    assign_region,
    bbox_centroid,
    bucket_counts,
    dedupe,
    extract_mentions,
    load_archive,
    load_corpus,
    load_regions,
    relevance_filter,
    write_corpus,
)

from conftest import make_tweet, write_jsonl


def rec(tid, text="hurricane laura", author="bob", **extra):
    r = {"id": tid, "author_id": "1", "author_handle": author, "text": text,
         "created_at": "2020-08-27T10:00:00Z"}
    r.update(extra)
    return r


# --- load_archive -------------------------------------------------------------


def test_empty_file(tmp_path):
    tweets, stats = load_archive(write_jsonl(tmp_path / "e.jsonl", []))
    assert tweets == []
    assert stats == CorpusStats()


def test_garbage_line_is_counted(tmp_path):
    path = write_jsonl(tmp_path / "a.jsonl", [rec("1"), "garbage {", rec("2"), rec("3")])
    tweets, stats = load_archive(path)
    assert [t.id for t in tweets] == ["1", "2", "3"]
    assert stats.malformed_skipped == 1
    assert stats.total_loaded == 3


def test_structurally_invalid_records_are_skipped(tmp_path):
    lines = [
        rec("1"),
        json.dumps([1, 2]),
        json.dumps({"id": "x", "text": "no author"}),
        rec("2", created_at="yesterday"),
        rec("3", geo={"bbox": [1, 2, 3]}),
        rec("4", geo={"bbox": [0, 0, 200, 0, 200, 1, 0, 1]}),
    ]
    tweets, stats = load_archive(write_jsonl(tmp_path / "a.jsonl", lines))
    assert [t.id for t in tweets] == ["1"]
    assert stats.malformed_skipped == 5


def test_unreadable_file_is_fatal(tmp_path):
    with pytest.raises(OSError):
        load_archive(tmp_path / "missing.jsonl")


def test_field_mapping(tmp_path):
    r = rec(
        "9", text="@KPLC7News stay safe", author="@Cajun_Mike",
        geo={"bbox": [-93.4, 29.9, -93.0, 29.9, -93.0, 30.3, -93.4, 30.3]},
        place_name="Lake Charles, LA", created_at="2020-08-27T01:02:03.456-05:00",
    )
    (t,), _ = load_archive(write_jsonl(tmp_path / "a.jsonl", [r]))
    assert t.author_handle == "cajun_mike"
    assert t.mentions == ("kplc7news",)
    assert t.place_name == "Lake Charles, LA"
    assert t.created_at.isoformat() == "2020-08-27T06:02:03+00:00"
    assert t.bbox[2] == GeoPoint(-93.0, 30.3)


def test_antimeridian_box_is_dropped_with_warning(tmp_path, caplog):
    r = rec("1", geo={"bbox": [179.5, 10, -179.5, 10, -179.5, 11, 179.5, 11]})
    (t,), stats = load_archive(write_jsonl(tmp_path / "a.jsonl", [r]))
    assert t.bbox is None
    assert stats.malformed_skipped == 0
    assert "antimeridian" in caplog.text


# --- mentions -------------------------------------------------------------------


def test_self_and_duplicate_mentions_removed():
    assert extract_mentions("thanks @Bob @Bob", "bob") == ()


def test_mentions_order_and_case():
    assert extract_mentions("@KATC hi @klfy and @katc again", "x") == ("katc", "klfy")


def test_mention_pattern_rules():
    text = "mail me@example.com @this_handle_is_way_too_long @ok_1 @"
    assert extract_mentions(text, "x") == ("ok_1",)


def test_structured_mentions_take_precedence():
    structured = [{"username": "GOHSEP"}, "@redcross_la", {"username": "me"}]
    assert extract_mentions("@ignored text", "me", structured) == ("gohsep", "redcross_la")


# --- dedupe / relevance ------------------------------------------------------------


def test_dedupe_examples():
    assert dedupe([]) == []
    t1, t2 = make_tweet(1), make_tweet(2)
    assert dedupe([t1, t1, t2]) == [t1, t2]


def test_dedupe_ten_with_three_sharing_an_id():
    tweets = [make_tweet(i) for i in range(7)] + [make_tweet(99, text=f"v{i}") for i in range(3)]
    stats = CorpusStats()
    out = dedupe(tweets, stats)
    assert len(out) == 8
    assert stats.duplicates_dropped == 2
    assert out[-1].text == "v0"


@given(st.lists(st.integers(0, 5)))
def test_dedupe_idempotent(ids):
    tweets = [make_tweet(i, text=str(n)) for n, i in enumerate(ids)]
    once = dedupe(tweets)
    assert dedupe(once) == once
    assert len({t.id for t in once}) == len(once)


def test_relevance_examples():
    assert relevance_filter([make_tweet(1, text="Hurricane Laura is coming")], {"hurricane"})
    assert not relevance_filter([make_tweet(1, text="nice weather today")], {"hurricane", "laura"})


def test_relevance_fixture_of_five():
    texts = ["Laura is here", "sunny day", "go tigers", "#Laura update", "lauraville news"]
    tweets = [make_tweet(i, text=t) for i, t in enumerate(texts)]
    stats = CorpusStats()
    kept = relevance_filter(tweets, {"laura"}, stats)
    assert [t.id for t in kept] == ["0", "3"]
    assert stats.irrelevant_dropped == 3


def test_relevance_empty_keywords():
    with pytest.raises(ConfigError):
        relevance_filter([], set())


WORDS = ["storm", "laura", "surge", "sun", "food", "power"]


@given(
    st.lists(st.lists(st.sampled_from(WORDS), max_size=4), max_size=8),
    st.sets(st.sampled_from(WORDS), min_size=1),
    st.sets(st.sampled_from(WORDS), min_size=1),
)
def test_relevance_union(texts, k1, k2):
    tweets = [make_tweet(i, text=" ".join(t)) for i, t in enumerate(texts)]
    ids = lambda ts: {t.id for t in ts}  # noqa: E731
    union = ids(relevance_filter(tweets, k1 | k2))
    assert union == ids(relevance_filter(tweets, k1)) | ids(relevance_filter(tweets, k2))


def test_corpus_accounting(data_dir):
    tweets, stats = load_corpus([data_dir / "tweets.jsonl"])
    lines = [ln for ln in (data_dir / "tweets.jsonl").read_text().splitlines() if ln.strip()]
    assert stats.kept == len(tweets)
    assert stats.kept + stats.duplicates_dropped + stats.irrelevant_dropped == stats.total_loaded
    assert stats.lines_read == len(lines)
    assert stats.kept + stats.duplicates_dropped + stats.irrelevant_dropped + stats.malformed_skipped == len(lines)
    assert stats.unique_users == len({t.author_handle for t in tweets})


def test_stats_text_roundtrip():
    s = CorpusStats(10, 2, 3, 1, 4)
    text = s.to_text()
    assert "duplicates_dropped=2" in text and "kept=5" in text
    assert CorpusStats.from_text(text) == s


# --- geography ---------------------------------------------------------------------


def corners(*pts):
    return tuple(GeoPoint(*p) for p in pts)


def test_centroid_examples():
    assert bbox_centroid(corners((0, 0), (2, 0), (2, 2), (0, 2))) == (1, 1)
    c = bbox_centroid(corners((-93.4, 29.9), (-93.0, 29.9), (-93.0, 30.3), (-93.4, 30.3)))
    assert c.lon == pytest.approx(-93.2, abs=1e-12)
    assert c.lat == pytest.approx(30.1, abs=1e-12)
    assert bbox_centroid(corners(*[(-92, 30)] * 4)) == (-92, 30)
    assert bbox_centroid(None) is None


def test_centroid_rejects_antimeridian():
    with pytest.raises(ValueError):
        bbox_centroid(corners((179, 0), (-179, 0), (-179, 1), (179, 1)))


lon = st.floats(-180, 180, allow_nan=False)
lat = st.floats(-90, 90, allow_nan=False)


@given(st.lists(st.tuples(lon, lat), min_size=4, max_size=4))
def test_centroid_within_extent(pts):
    box = corners(*pts)
    if max(p.lon for p in box) - min(p.lon for p in box) > 180:
        return
    c = bbox_centroid(box)
    assert min(p.lon for p in box) - 1e-9 <= c.lon <= max(p.lon for p in box) + 1e-9
    assert min(p.lat for p in box) - 1e-9 <= c.lat <= max(p.lat for p in box) + 1e-9


UNIT = [(0, 0), (1, 0), (1, 1), (0, 1)]


def test_assign_region_examples():
    a = Region("A", [UNIT])
    b = Region("B", [[(1, 0), (2, 0), (2, 1), (1, 1)]])
    assert assign_region(GeoPoint(0.5, 0.5), [a]) == "A"
    assert assign_region(GeoPoint(5, 5), [a]) == UNASSIGNED
    assert assign_region(GeoPoint(1, 0.5), [a, b]) == "A"
    assert assign_region(GeoPoint(1, 0.5), [b, a]) == "B"
    assert assign_region(GeoPoint(0, 0), [a]) == "A"
    assert assign_region(None, [a]) == UNASSIGNED


def test_assign_region_hole():
    outer = [(0, 0), (10, 0), (10, 10), (0, 10)]
    hole = [(4, 4), (6, 4), (6, 6), (4, 6)]
    donut = Region("D", [outer, hole])
    assert assign_region(GeoPoint(5, 5), [donut]) == UNASSIGNED
    assert assign_region(GeoPoint(4, 5), [donut]) == "D"
    assert assign_region(GeoPoint(2, 5), [donut]) == "D"


def test_assign_region_concave():
    # U shape opening upwards
    u = Region("U", [[(0, 0), (3, 0), (3, 3), (2, 3), (2, 1), (1, 1), (1, 3), (0, 3)]])
    assert assign_region(GeoPoint(1.5, 2), [u]) == UNASSIGNED
    assert assign_region(GeoPoint(0.5, 2), [u]) == "U"
    assert assign_region(GeoPoint(1.5, 0.5), [u]) == "U"


def test_load_regions(tmp_path, data_dir):
    regions = load_regions(data_dir / "regions.geojson")
    assert [r.name for r in regions] == ["Calcasieu", "Cameron", "Lafayette"]
    assert assign_region(GeoPoint(-93.2, 30.2), regions) == "Calcasieu"
    multi = {
        "type": "FeatureCollection",
        "features": [{
            "type": "Feature", "properties": {"name": "M"},
            "geometry": {"type": "MultiPolygon", "coordinates": [
                [[[0, 0], [1, 0], [1, 1], [0, 0]]], [[[5, 5], [6, 5], [6, 6], [5, 5]]]]},
        }],
    }
    p = tmp_path / "m.geojson"
    p.write_text(json.dumps(multi))
    (m,) = load_regions(p)
    assert assign_region(GeoPoint(5.9, 5.1), [m]) == "M"


@pytest.mark.parametrize(
    "doc",
    [
        "not json",
        {"type": "Feature"},
        {"type": "FeatureCollection", "features": [{"geometry": {"type": "Polygon", "coordinates": []}}]},
        {"type": "FeatureCollection", "features": [
            {"properties": {"name": "x"}, "geometry": {"type": "Point", "coordinates": [0, 0]}}]},
        {"type": "FeatureCollection", "features": [
            {"properties": {"name": "x"}, "geometry": {"type": "Polygon", "coordinates": [[[0, 0], [1, 1]]]}}]},
    ],
)
def test_malformed_region_file(tmp_path, doc):
    p = tmp_path / "bad.geojson"
    p.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    with pytest.raises(ConfigError):
        load_regions(p)


# --- buckets & output -----------------------------------------------------------------


def test_bucket_counts_examples():
    assert bucket_counts([]) == {}
    tweets = [make_tweet(i, when=f"2020-08-27T0{i}:00:00") for i in range(3)]
    tweets.append(make_tweet(9, when="2020-08-29T23:59:59"))
    counts = bucket_counts(tweets)
    assert list(counts.items()) == [
        (date(2020, 8, 27), 3), (date(2020, 8, 28), 0), (date(2020, 8, 29), 1),
    ]
    assert list(bucket_counts(tweets[:1]).values()) == [1]


def test_bucket_counts_offset():
    t = make_tweet(1, when="2020-08-27T03:00:00")
    assert list(bucket_counts([t], utc_offset_hours=-5)) == [date(2020, 8, 26)]


@given(st.lists(st.integers(0, 20 * 86400), max_size=30))
def test_bucket_counts_sum(offsets):
    from datetime import datetime, timedelta, timezone

    base = datetime(2020, 8, 13, tzinfo=timezone.utc)
    tweets = [make_tweet(i) for i in range(len(offsets))]
    tweets = [
        t.__class__(**{**t.__dict__, "created_at": base + timedelta(seconds=s)})
        for t, s in zip(tweets, offsets)
    ]
    counts = bucket_counts(tweets)
    assert sum(counts.values()) == len(tweets)
    days = list(counts)
    assert all((b - a).days == 1 for a, b in zip(days, days[1:]))


def test_write_corpus_schema(tmp_path, data_dir):
    tweets, _ = load_corpus([data_dir / "tweets.jsonl"])
    regions = load_regions(data_dir / "regions.geojson")
    out = tmp_path / "corpus.jsonl"
    write_corpus(tweets, out, regions)
    rows = [json.loads(line) for line in out.read_text().splitlines()]
    assert len(rows) == len(tweets)
    for row in rows:
        assert {"id", "author_handle", "text", "created_at", "centroid_lon", "centroid_lat", "region"} <= set(row)
        if row["centroid_lon"] is None:
            assert row["region"] == UNASSIGNED
        else:
            assert math.isfinite(row["centroid_lon"])
    assert {r["region"] for r in rows} >= {"Calcasieu", "Lafayette"}
    # the normalized corpus reloads losslessly
    again, stats = load_archive(out)
    assert [t.id for t in again] == [t.id for t in tweets]
    assert [t.mentions for t in again] == [t.mentions for t in tweets]
    assert stats.malformed_skipped == 0
