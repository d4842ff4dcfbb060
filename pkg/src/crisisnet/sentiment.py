"""Lexicon sentiment: summed valence squashed into [-1, 1], three classes."""

from __future__ import annotations

import csv
import math
from collections import OrderedDict
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from crisisnet.errors import ConfigError, ContractError
from crisisnet.ingest import day_range
from crisisnet.textprep import Document

NORMALIZATION = 15.0
THRESHOLD = 0.05
LABELS = ("negative", "neutral", "positive")

Lexicon = Mapping[str, float]


@dataclass(frozen=True)
class SentimentResult:
    compound: float
    label: str


def load_lexicon(path: str | Path) -> dict[str, float]:
    """Read ``term<TAB>valence`` lines. Extra columns (VADER's std/ratings) are ignored."""
    lex: dict[str, float] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) < 2:
                raise ConfigError(f"{path}:{lineno}: expected term<TAB>valence")
            term = parts[0].strip().lower()
            try:
                valence = float(parts[1])
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad valence {parts[1]!r}") from exc
            if not term or not math.isfinite(valence):
                raise ConfigError(f"{path}:{lineno}: empty term or non-finite valence")
            if term in lex:
                raise ConfigError(f"{path}:{lineno}: duplicate term {term!r}")
            lex[term] = valence
    return lex


def _tokens(doc) -> Sequence[str]:
    return doc.tokens if isinstance(doc, Document) else doc


def compound_score(doc: Document | Sequence[str], lex: Lexicon) -> float:
    s = 0.0
    hit = False
    for tok in _tokens(doc):
        v = lex.get(tok)
        if v is not None:
            s += v
            hit = True
    if not hit or s == 0.0:
        return 0.0
    return s / math.sqrt(s * s + NORMALIZATION)


def classify(compound: float) -> str:
    if not (-1.0 <= compound <= 1.0):
        raise ContractError(f"compound score {compound!r} outside [-1, 1]")
    if compound >= THRESHOLD:
        return "positive"
    if compound <= -THRESHOLD:
        return "negative"
    return "neutral"


def score(doc: Document | Sequence[str], lex: Lexicon) -> SentimentResult:
    c = compound_score(doc, lex)
    return SentimentResult(c, classify(c))


def sentiment_timeseries(
    docs: Iterable[Document], lex: Lexicon
) -> "OrderedDict[date, tuple[int, int, int]]":
    """Per-day (negative, neutral, positive) counts, zero-filled across the day range."""
    per_day: dict[date, list[int]] = {}
    for doc in docs:
        row = per_day.setdefault(doc.day, [0, 0, 0])
        row[LABELS.index(classify(compound_score(doc, lex)))] += 1
    return OrderedDict((d, tuple(per_day.get(d, (0, 0, 0)))) for d in day_range(per_day))


def write_timeseries_csv(series: Mapping[date, tuple[int, int, int]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["day", *LABELS])
        for day, counts in series.items():
            w.writerow([day.isoformat(), *counts])
