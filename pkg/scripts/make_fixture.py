"""Regenerate the synthetic 200-tweet fixture under tests/data/.

The corpus mimics a hurricane-week archive: two loosely coupled mention
communities (local news + residents, agencies + volunteers), a small
detached component and a handful of isolated accounts. A few records are
duplicated, off-topic or malformed so every ingest counter is exercised.

    python scripts/make_fixture.py [outdir]
"""

import json
import random
import sys
from datetime import datetime, timedelta, timezone
from pathlib import Path

NEWS = ["kplc7news", "katc", "klfy", "fox4beaumont", "theadvocatebr"]
RESIDENTS_A = ["cajun_mike", "lakecharles_jo", "sulphur_sam", "moss_bluff_amy", "westlake_tom", "ragin_fan"]
AGENCIES = ["gohsep", "lafayettela", "redcross_la", "foodbank_swla", "mcneese"]
RESIDENTS_B = ["volunteer_kay", "nurse_dana", "teacher_lou", "pastor_ray", "coach_ben"]
DETACHED = ["shrimp_boat_al", "bayou_bella", "gumbo_gary"]
ISOLATED = ["quiet_quinn", "solo_sara", "lone_lee"]

TOPIC_A = [
    "hurricane laura knocked out power across lake charles",
    "roof damage everywhere in lake charles after the storm surge",
    "still no power no internet hurricane laura destroyed the roof",
    "storm surge flooded cameron parish hurricane damage is terrible",
    "power crews working hard after hurricane laura landfall",
    "lake charles roof damage photos from the hurricane",
]
TOPIC_B = [
    "evacuation shelter open with covid masks required hurricane laura",
    "food bank distribution today for hurricane evacuation families",
    "covid pandemic shelter rules during hurricane evacuation stay safe",
    "emergency food and water for storm victims thanks volunteers",
    "pandemic plus hurricane laura means shelter safety and masks",
    "help neighbors with food water and shelter after the storm",
]
OFF_TOPIC = [
    "nice weather today going fishing",
    "great game last night go tigers",
    "coffee and breakfast with friends",
]
MOOD = ["stay safe", "thanks for the help", "love this community", "i hate this", "so much fear", "", "", "praying for everyone"]

REGIONS = [
    ("Calcasieu", -93.95, 29.95, -93.0, 30.45),
    ("Cameron", -93.95, 29.5, -92.6, 29.95),
    ("Lafayette", -92.3, 30.05, -91.9, 30.35),
]

LEXICON = {
    "safe": 1.9, "thanks": 1.9, "help": 1.7, "love": 3.2, "great": 3.1, "nice": 1.8,
    "praying": 1.0, "hard": -0.4, "hate": -2.7, "fear": -2.2, "destroyed": -2.6,
    "damage": -1.7, "terrible": -2.5, "flooded": -1.6, "victims": -1.8, "emergency": -1.6,
    "no": -1.2, "knocked": -0.8, "support": 1.7, "relief": 2.1, "welcome": 2.0,
}


def box(rng, region):
    _, w, s, e, n = region
    lon = rng.uniform(w + 0.05, e - 0.1)
    lat = rng.uniform(s + 0.05, n - 0.1)
    d = 0.04
    return [lon, lat, lon + d, lat, lon + d, lat + d, lon, lat + d]


def make(outdir: Path) -> None:
    rng = random.Random(2020)
    start = datetime(2020, 8, 20, tzinfo=timezone.utc)
    records = []

    def tweet(author, text, region, structured=None):
        ts = start + timedelta(seconds=rng.randrange(14 * 86400))
        rec = {
            "id": str(1296000000000000000 + len(records) * 7919),
            "author_id": f"u{sum(map(ord, author))}",
            "author_handle": author,
            "text": text,
            "created_at": ts.strftime("%Y-%m-%dT%H:%M:%SZ"),
        }
        if region is not None:
            rec["geo"] = {"bbox": [round(v, 5) for v in box(rng, region)]}
            rec["place_name"] = region[0] + " Parish, LA"
        if structured is not None:
            rec["entities"] = {"mentions": structured}
        records.append(rec)

    def group_tweets(members, hubs, topic, region, n):
        for _ in range(n):
            author = rng.choice(members)
            targets = rng.sample([m for m in members if m != author], k=rng.choice([0, 1, 1, 2]))
            if rng.random() < 0.5:
                targets = [rng.choice([h for h in hubs if h != author])] + targets
            text = " ".join(f"@{t}" for t in dict.fromkeys(targets))
            text += " " + rng.choice(topic) + " " + rng.choice(MOOD)
            if rng.random() < 0.2:
                text += " https://t.co/" + "".join(rng.choice("abcdef0123") for _ in range(8))
            if rng.random() < 0.15:
                text = text.replace("hurricane laura", "#HurricaneLaura", 1)
            tweet(author, text.strip(), region)

    group_tweets(NEWS + RESIDENTS_A, NEWS, TOPIC_A, REGIONS[0], 97)
    group_tweets(AGENCIES + RESIDENTS_B, AGENCIES, TOPIC_B, REGIONS[2], 72)
    # two bridge tweets between the communities
    tweet("kplc7news", "@gohsep hurricane laura evacuation update for lake charles", REGIONS[0])
    tweet("redcross_la", "@klfy shelter info for hurricane evacuation families stay safe", REGIONS[2])
    # detached component, structured mentions
    for i in range(9):
        a = DETACHED[i % 3]
        b = DETACHED[(i + 1) % 3]
        tweet(a, f"storm surge hit the bayou again day {i + 2} fear and damage", REGIONS[1], [b])
    for a in ISOLATED:
        tweet(a, "hurricane laura landfall coverage all night", None)
    # off-topic posts
    for i in range(12):
        tweet(rng.choice(RESIDENTS_A + RESIDENTS_B), rng.choice(OFF_TOPIC), rng.choice(REGIONS))
    # exact duplicates of earlier records
    dups = [dict(records[i]) for i in (3, 40, 77, 120, 150)]
    records.extend(dups)
    assert len(records) == 200, len(records)
    rng.shuffle(records)

    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "tweets.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for i, rec in enumerate(records):
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
            if i == 50:
                fh.write("{not json at all\n")
            if i == 120:
                fh.write(json.dumps({"id": "broken", "text": "missing author"}) + "\n")

    with open(outdir / "lexicon.tsv", "w", encoding="utf-8", newline="\n") as fh:
        for term, val in sorted(LEXICON.items()):
            fh.write(f"{term}\t{val}\n")

    features = [
        {
            "type": "Feature",
            "properties": {"name": name},
            "geometry": {"type": "Polygon", "coordinates": [[[w, s], [e, s], [e, n], [w, n], [w, s]]]},
        }
        for name, w, s, e, n in REGIONS
    ]
    (outdir / "regions.geojson").write_text(
        json.dumps({"type": "FeatureCollection", "features": features}, indent=1) + "\n", encoding="utf-8"
    )

    agency_rows = ["handle,agency_type"]
    agency_rows += [f"{h},television news channel" for h in NEWS]
    agency_rows += ["gohsep,incident management", "lafayettela,local government",
                    "redcross_la,social organization", "foodbank_swla,food bank", "mcneese,educator"]
    (outdir / "agencies.csv").write_text("\n".join(agency_rows) + "\n", encoding="utf-8")

    (outdir / "config.toml").write_text(
        """seed = 7
out = "out"

[input]
paths = ["tweets.jsonl"]
lexicon = "lexicon.tsv"
regions = "regions.geojson"
agency_types = "agencies.csv"

[terms]
top_k = 100

[bigrams]
top_k = 20

[topics]
k_values = [1, 2, 3]
sweeps = 200
top_words = 5
coherence_words = 10
min_documents = 5

[graph]
method = "modularity"
top_nodes = 5
""",
        encoding="utf-8",
    )


if __name__ == "__main__":
    make(Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parents[1] / "tests" / "data")
