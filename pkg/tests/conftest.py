import json
from datetime import datetime, timezone
from pathlib import Path

import pytest

from crisisnet.ingest import Tweet

DATA = Path(__file__).parent / "data"

# filled by test_acceptance, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def data_dir():
    return DATA


def make_tweet(tid, author="user", text="hurricane", when="2020-08-27T12:00:00", mentions=(), bbox=None):
    ts = datetime.fromisoformat(when).replace(tzinfo=timezone.utc)
    return Tweet(
        id=str(tid),
        author_id=author,
        author_handle=author,
        text=text,
        created_at=ts,
        bbox=bbox,
        mentions=tuple(mentions),
    )


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(rec if isinstance(rec, str) else json.dumps(rec))
            fh.write("\n")
    return path
