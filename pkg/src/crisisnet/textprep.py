"""Tweet text normalization, tokenization and stopword removal."""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path
from typing import Iterable, Sequence

_URL_RE = re.compile(r"(?:\b[a-z][a-z0-9+.\-]*://|\bwww\.)\S*", re.IGNORECASE)
_TAG_RE = re.compile(r"<[^<>]*>")
_ENTITY_RE = re.compile(r"&(?:[a-z][a-z0-9]*|#[0-9]+|#x[0-9a-f]+);", re.IGNORECASE)
_WS_RE = re.compile(r"\s+")

# characters kept only when flanked by alphanumerics ("power's", "covid-19")
_JOINERS = frozenset("'-_")

# Unicode blocks that carry emoji and pictographs; some codepoints inside
# are not category So, hence the explicit ranges.
_EMOJI_RANGES = (
    (0x2190, 0x21FF),
    (0x2300, 0x23FF),
    (0x2460, 0x24FF),
    (0x25A0, 0x27BF),
    (0x2900, 0x297F),
    (0x2B00, 0x2BFF),
    (0x3030, 0x3030),
    (0x303D, 0x303D),
    (0x3297, 0x3299),
    (0xFE00, 0xFE0F),
    (0x1F000, 0x1FAFF),
    (0xE0000, 0xE007F),
)

_NOISE_CATEGORIES = frozenset({"So", "Sk", "Cs", "Co", "Cn", "Cc", "Cf", "Mn", "Me", "Mc"})

DEFAULT_STOPWORDS = frozenset(
    """
    a about above after again against all am an and any are aren't as at be
    because been before being below between both but by can can't cannot could
    couldn't did didn't do does doesn't doing don't down during each few for from
    further had hadn't has hasn't have haven't having he he'd he'll he's her here
    here's hers herself him himself his how how's i i'd i'll i'm i've if in into is
    isn't it it's its itself just let's me more most mustn't my myself no nor not
    now of off on once only or other ought our ours ourselves out over own same
    shan't she she'd she'll she's should shouldn't so some such than that that's
    the their theirs them themselves then there there's these they they'd they'll
    they're they've this those through to too under until up very was wasn't we
    we'd we'll we're we've were weren't what what's when when's where where's which
    while who who's whom why why's will with won't would wouldn't you you'd you'll
    you're you've your yours yourself yourselves amp rt via im dont get got also
    """.split()
)


@dataclass(frozen=True)
class Document:
    """A tokenized tweet body tagged with its calendar day."""

    tweet_id: str
    tokens: tuple[str, ...]
    day: date


def _is_emoji(cp: int) -> bool:
    for lo, hi in _EMOJI_RANGES:
        if lo <= cp <= hi:
            return True
    return False


def _strip_char(ch: str) -> bool:
    if ch.isspace():
        return False
    if unicodedata.category(ch) in _NOISE_CATEGORIES:
        return True
    return _is_emoji(ord(ch))


def normalize(text: str) -> str:
    """Strip URLs, HTML, emoji, control codes and punctuation; lowercase.

    Mention and hashtag markers are dropped but their word is retained, so
    ``"@KPLC7News #HelpLakeCharles"`` becomes ``"kplc7news helplakecharles"``.
    Apostrophes, hyphens and underscores survive only between two
    alphanumeric characters.
    """
    if not text:
        return ""
    text = text.lower()
    text = _ENTITY_RE.sub(" ", text)
    text = _TAG_RE.sub(" ", text)
    text = _URL_RE.sub(" ", text)
    text = text.replace("’", "'")

    chars = [" " if _strip_char(ch) else ch for ch in text]
    out = []
    last = len(chars) - 1
    for i, ch in enumerate(chars):
        if ch.isalnum() or ch.isspace():
            out.append(ch)
        elif (
            ch in _JOINERS
            and 0 < i < last
            and chars[i - 1].isalnum()
            and chars[i + 1].isalnum()
        ):
            out.append(ch)
        else:
            out.append(" ")
    return _WS_RE.sub(" ", "".join(out)).strip()


def _strip_edges(piece: str) -> str:
    start, end = 0, len(piece)
    while start < end and not piece[start].isalnum():
        start += 1
    while end > start and not piece[end - 1].isalnum():
        end -= 1
    return piece[start:end]


def tokenize(text: str) -> list[str]:
    """Split normalized text on whitespace.

    Leading/trailing non-alphanumerics are trimmed from each piece; empty
    pieces and single-digit numbers are dropped.
    """
    tokens = []
    for piece in text.split():
        tok = _strip_edges(piece)
        if not tok or (len(tok) == 1 and tok.isdigit()):
            continue
        tokens.append(tok)
    return tokens


def remove_stopwords(tokens: Iterable[str], stoplist: Iterable[str]) -> list[str]:
    stop = stoplist if isinstance(stoplist, (set, frozenset)) else set(stoplist)
    return [t for t in tokens if t not in stop]


def load_stoplist(path: str | Path) -> frozenset[str]:
    """Read a stoplist: one token per line, ``#`` starts a comment."""
    words = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip().lower()
            if line:
                words.add(line)
    return frozenset(words)


def make_document(
    tweet_id: str,
    text: str,
    created_at,
    stoplist: Iterable[str] = DEFAULT_STOPWORDS,
    utc_offset_hours: float = 0.0,
) -> Document:
    day = (created_at + timedelta(hours=utc_offset_hours)).date()
    tokens = remove_stopwords(tokenize(normalize(text)), stoplist)
    return Document(tweet_id=tweet_id, tokens=tuple(tokens), day=day)


def documents_from_tweets(
    tweets: Sequence, stoplist: Iterable[str] = DEFAULT_STOPWORDS, utc_offset_hours: float = 0.0
) -> list[Document]:
    stop = frozenset(stoplist)
    return [
        make_document(t.id, t.text, t.created_at, stop, utc_offset_hours) for t in tweets
    ]
