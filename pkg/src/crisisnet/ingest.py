"""Loading, deduplication, relevance filtering and geo-localization of tweets."""

from __future__ import annotations

import json
import logging
import math
import re
from collections import OrderedDict
from dataclasses import dataclass, field, fields
from datetime import date, datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Sequence

from crisisnet.errors import ConfigError
from crisisnet.textprep import normalize, tokenize

log = logging.getLogger(__name__)

DEFAULT_KEYWORDS = frozenset({"hurricane", "laura", "storm", "evacuation", "surge", "landfall"})
UNASSIGNED = "unassigned"

_HANDLE_RE = re.compile(r"(?<![A-Za-z0-9_])@([A-Za-z0-9_]{1,15})(?![A-Za-z0-9_])")


class GeoPoint(NamedTuple):
    lon: float
    lat: float


@dataclass(frozen=True)
class Tweet:
    id: str
    author_id: str
    author_handle: str
    text: str
    created_at: datetime
    bbox: tuple[GeoPoint, ...] | None = None
    place_name: str | None = None
    mentions: tuple[str, ...] = ()


@dataclass
class CorpusStats:
    total_loaded: int = 0
    duplicates_dropped: int = 0
    irrelevant_dropped: int = 0
    malformed_skipped: int = 0
    unique_users: int = 0

    @property
    def kept(self) -> int:
        return self.total_loaded - self.duplicates_dropped - self.irrelevant_dropped

    @property
    def lines_read(self) -> int:
        return self.total_loaded + self.malformed_skipped

    def merge(self, other: "CorpusStats") -> "CorpusStats":
        # unique_users is not additive across shards; recompute after merging tweets
        return CorpusStats(
            total_loaded=self.total_loaded + other.total_loaded,
            duplicates_dropped=self.duplicates_dropped + other.duplicates_dropped,
            irrelevant_dropped=self.irrelevant_dropped + other.irrelevant_dropped,
            malformed_skipped=self.malformed_skipped + other.malformed_skipped,
        )

    def to_text(self) -> str:
        lines = [f"{f.name}={getattr(self, f.name)}" for f in fields(self)]
        lines.append(f"kept={self.kept}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "CorpusStats":
        values = {}
        for line in text.splitlines():
            if "=" in line:
                key, _, val = line.partition("=")
                values[key.strip()] = int(val)
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in values.items() if k in names})


class MalformedRecord(ValueError):
    pass


# --- parsing ---------------------------------------------------------------


def _parse_time(value) -> datetime:
    if not isinstance(value, str) or not value:
        raise MalformedRecord("created_at missing")
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    try:
        ts = datetime.fromisoformat(text)
    except ValueError as exc:
        raise MalformedRecord(f"bad created_at {value!r}") from exc
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).replace(microsecond=0)


def _parse_bbox(raw) -> tuple[GeoPoint, ...] | None:
    if raw is None:
        return None
    if not isinstance(raw, list) or len(raw) not in (4, 8):
        raise MalformedRecord("geo.bbox must hold 8 numbers")
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw):
        raise MalformedRecord("geo.bbox must hold numbers")
    nums = [float(v) for v in raw]
    if len(nums) == 4:
        # [west, south, east, north] as served by the platform API
        w, s, e, n = nums
        nums = [w, s, e, s, e, n, w, n]
    corners = tuple(GeoPoint(nums[i], nums[i + 1]) for i in range(0, 8, 2))
    for p in corners:
        if not (-180.0 <= p.lon <= 180.0 and -90.0 <= p.lat <= 90.0):
            raise MalformedRecord(f"bbox corner out of range: {p}")
    return corners


def extract_mentions(text: str, author_handle: str, structured=None) -> tuple[str, ...]:
    """Lowercased mentioned handles, in order, without duplicates or self-mentions.

    ``structured`` (an ``entities.mentions`` array of strings or of objects
    with a ``username`` key) takes precedence over scanning the text.
    """
    if structured is not None:
        raw = []
        for item in structured:
            if isinstance(item, dict):
                item = item.get("username") or item.get("screen_name")
            if isinstance(item, str) and item.strip():
                raw.append(item.strip())
    else:
        raw = _HANDLE_RE.findall(text)
    me = author_handle.lower()
    seen = []
    for handle in raw:
        h = handle.lstrip("@").lower()
        if h and h != me and h not in seen:
            seen.append(h)
    return tuple(seen)


def parse_record(obj) -> Tweet:
    if not isinstance(obj, dict):
        raise MalformedRecord("record is not an object")
    tid = obj.get("id")
    if isinstance(tid, int) and not isinstance(tid, bool):
        tid = str(tid)
    if not isinstance(tid, str) or not tid:
        raise MalformedRecord("missing id")
    handle = obj.get("author_handle")
    if not isinstance(handle, str) or not handle.lstrip("@"):
        raise MalformedRecord("missing author_handle")
    handle = handle.lstrip("@").lower()
    text = obj.get("text")
    if not isinstance(text, str):
        raise MalformedRecord("missing text")
    author_id = obj.get("author_id")
    author_id = str(author_id) if author_id not in (None, "") else handle
    geo = obj.get("geo") or {}
    if not isinstance(geo, dict):
        raise MalformedRecord("geo must be an object")
    bbox = _parse_bbox(geo.get("bbox"))
    if bbox is not None and crosses_antimeridian(bbox):
        log.warning("tweet %s: bounding box crosses the antimeridian; geography dropped", tid)
        bbox = None
    entities = obj.get("entities") or {}
    structured = entities.get("mentions") if isinstance(entities, dict) else None
    place = obj.get("place_name")
    return Tweet(
        id=tid,
        author_id=author_id,
        author_handle=handle,
        text=text,
        created_at=_parse_time(obj.get("created_at")),
        bbox=bbox,
        place_name=place if isinstance(place, str) else None,
        mentions=extract_mentions(text, handle, structured),
    )


def iter_archive(path: str | Path, stats: CorpusStats | None = None) -> Iterator[Tweet]:
    """Yield tweets from a JSONL archive, counting malformed lines in ``stats``.

    Blank lines are ignored. Raises ``OSError`` if the file cannot be read.
    """
    stats = stats if stats is not None else CorpusStats()
    with open(path, encoding="utf-8", errors="replace") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                tweet = parse_record(json.loads(line))
            except (json.JSONDecodeError, MalformedRecord) as exc:
                stats.malformed_skipped += 1
                log.debug("%s:%d skipped: %s", path, lineno, exc)
                continue
            stats.total_loaded += 1
            yield tweet


def load_archive(path: str | Path) -> tuple[list[Tweet], CorpusStats]:
    stats = CorpusStats()
    tweets = list(iter_archive(path, stats))
    stats.unique_users = len({t.author_handle for t in tweets})
    return tweets, stats


def dedupe(tweets: Iterable[Tweet], stats: CorpusStats | None = None) -> list[Tweet]:
    seen = set()
    out = []
    for t in tweets:
        if t.id in seen:
            if stats is not None:
                stats.duplicates_dropped += 1
            continue
        seen.add(t.id)
        out.append(t)
    return out


def relevance_filter(
    tweets: Iterable[Tweet], keywords: Iterable[str], stats: CorpusStats | None = None
) -> list[Tweet]:
    """Keep tweets with at least one normalized token in ``keywords``."""
    keys = {k.lower() for k in keywords}
    if not keys:
        raise ConfigError("relevance keyword set is empty")
    out = []
    for t in tweets:
        if keys.intersection(tokenize(normalize(t.text))):
            out.append(t)
        elif stats is not None:
            stats.irrelevant_dropped += 1
    return out


def load_corpus(
    paths: Sequence[str | Path], keywords: Iterable[str] = DEFAULT_KEYWORDS
) -> tuple[list[Tweet], CorpusStats]:
    """Load several archive shards, then dedupe and relevance-filter the union."""
    stats = CorpusStats()
    tweets: list[Tweet] = []
    for path in paths:
        shard, shard_stats = load_archive(path)
        tweets.extend(shard)
        stats = stats.merge(shard_stats)
    tweets = dedupe(tweets, stats)
    tweets = relevance_filter(tweets, keywords, stats)
    stats.unique_users = len({t.author_handle for t in tweets})
    return tweets, stats


# --- geography -------------------------------------------------------------


def crosses_antimeridian(bbox: Sequence[GeoPoint]) -> bool:
    lons = [p.lon for p in bbox]
    return max(lons) - min(lons) > 180.0


def bbox_centroid(bbox: Sequence[GeoPoint] | None) -> GeoPoint | None:
    """Arithmetic mean of the corners; ``None`` when the tweet has no box."""
    if bbox is None:
        return None
    if crosses_antimeridian(bbox):
        raise ValueError("bounding box crosses the antimeridian")
    n = len(bbox)
    return GeoPoint(sum(p.lon for p in bbox) / n, sum(p.lat for p in bbox) / n)


Ring = list[tuple[float, float]]


@dataclass
class Region:
    name: str
    rings: list[Ring] = field(default_factory=list)


def _on_segment(px, py, ax, ay, bx, by, eps=1e-12) -> bool:
    cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
    scale = max(abs(bx - ax), abs(by - ay), 1.0)
    if abs(cross) > eps * scale * scale:
        return False
    return (
        min(ax, bx) - eps <= px <= max(ax, bx) + eps
        and min(ay, by) - eps <= py <= max(ay, by) + eps
    )


def point_in_region(p: GeoPoint, region: Region) -> bool:
    """Even-odd test over every ring of the region; boundary points are inside."""
    x, y = p
    inside = False
    for ring in region.rings:
        n = len(ring)
        for i in range(n):
            ax, ay = ring[i]
            bx, by = ring[(i + 1) % n]
            if _on_segment(x, y, ax, ay, bx, by):
                return True
            if (ay > y) != (by > y):
                xcross = ax + (y - ay) * (bx - ax) / (by - ay)
                if x < xcross:
                    inside = not inside
    return inside


def assign_region(p: GeoPoint | None, regions: Sequence[Region]) -> str:
    if p is None:
        return UNASSIGNED
    for region in regions:
        if point_in_region(p, region):
            return region.name
    return UNASSIGNED


def _ring(coords) -> Ring:
    if not isinstance(coords, list) or len(coords) < 3:
        raise ConfigError("polygon ring needs at least 3 positions")
    ring = []
    for pos in coords:
        if (
            not isinstance(pos, list)
            or len(pos) < 2
            or not all(isinstance(v, (int, float)) for v in pos[:2])
        ):
            raise ConfigError(f"bad polygon position {pos!r}")
        ring.append((float(pos[0]), float(pos[1])))
    if ring[0] == ring[-1]:
        ring.pop()
    if len(ring) < 3:
        raise ConfigError("degenerate polygon ring")
    return ring


def load_regions(path: str | Path) -> list[Region]:
    """Read a GeoJSON FeatureCollection of (Multi)Polygons named by ``properties.name``."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise ConfigError(f"{path}: expected a GeoJSON FeatureCollection")
    regions = []
    for i, feat in enumerate(doc.get("features") or []):
        try:
            name = feat["properties"]["name"]
            geom = feat["geometry"]
            kind, coords = geom["type"], geom["coordinates"]
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"{path}: feature {i} lacks name or geometry") from exc
        if kind == "Polygon":
            polys = [coords]
        elif kind == "MultiPolygon":
            polys = coords
        else:
            raise ConfigError(f"{path}: feature {i} has unsupported geometry {kind!r}")
        if not isinstance(polys, list):
            raise ConfigError(f"{path}: feature {i} has malformed coordinates")
        rings = []
        for poly in polys:
            if not isinstance(poly, list) or not poly:
                raise ConfigError(f"{path}: feature {i} has an empty polygon")
            rings.extend(_ring(r) for r in poly)
        regions.append(Region(str(name), rings))
    return regions


# --- time ------------------------------------------------------------------


def tweet_day(t: Tweet, utc_offset_hours: float = 0.0) -> date:
    return (t.created_at + timedelta(hours=utc_offset_hours)).date()


def day_range(days: Iterable[date]) -> list[date]:
    days = list(days)
    if not days:
        return []
    lo, hi = min(days), max(days)
    return [lo + timedelta(days=i) for i in range((hi - lo).days + 1)]


def bucket_counts(tweets: Iterable[Tweet], utc_offset_hours: float = 0.0) -> "OrderedDict[date, int]":
    """Tweets per calendar day, zero-filled between the first and last day."""
    counts: dict[date, int] = {}
    for t in tweets:
        d = tweet_day(t, utc_offset_hours)
        counts[d] = counts.get(d, 0) + 1
    return OrderedDict((d, counts.get(d, 0)) for d in day_range(counts))


# --- output ----------------------------------------------------------------


def tweet_record(t: Tweet, regions: Sequence[Region] = ()) -> dict:
    rec = {
        "id": t.id,
        "author_id": t.author_id,
        "author_handle": t.author_handle,
        "text": t.text,
        "created_at": t.created_at.strftime("%Y-%m-%dT%H:%M:%SZ"),
    }
    if t.bbox is not None:
        rec["geo"] = {"bbox": [c for p in t.bbox for c in p]}
    if t.place_name is not None:
        rec["place_name"] = t.place_name
    rec["entities"] = {"mentions": list(t.mentions)}
    centroid = bbox_centroid(t.bbox)
    rec["centroid_lon"] = None if centroid is None else round(centroid.lon, 7)
    rec["centroid_lat"] = None if centroid is None else round(centroid.lat, 7)
    rec["region"] = assign_region(centroid, regions) if regions else UNASSIGNED
    return rec


def write_corpus(tweets: Iterable[Tweet], path: str | Path, regions: Sequence[Region] = ()) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for t in tweets:
            fh.write(json.dumps(tweet_record(t, regions), ensure_ascii=False, sort_keys=True))
            fh.write("\n")
