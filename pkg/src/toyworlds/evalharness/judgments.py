"""Human judgment records and their aggregation.

Ratings are binary; an episode succeeds only on a strict majority, so an
even split fails (strictness bias). One rating per (episode, judge).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

RATINGS = ("success", "failure")


class IngestionError(Exception):
    pass


@dataclass(frozen=True)
class JudgmentRecord:
    episode_id: str
    judge_id: str
    rating: str
    note: str = ""

    def validate(self) -> None:
        if self.rating not in RATINGS:
            raise IngestionError(f"bad rating {self.rating!r}")
        if not self.episode_id or not self.judge_id:
            raise IngestionError("episode_id and judge_id are required")


def aggregate_judgments(records: list[JudgmentRecord]) -> bool:
    """Strict majority of success ratings wins; ties fail."""
    if not records:
        raise IngestionError("no judgments to aggregate")
    episode_ids = {r.episode_id for r in records}
    if len(episode_ids) != 1:
        raise IngestionError(f"records span multiple episodes: {sorted(episode_ids)}")
    seen_judges = set()
    for r in records:
        r.validate()
        if r.judge_id in seen_judges:
            raise IngestionError(
                f"duplicate rating from judge {r.judge_id!r} on {r.episode_id!r}")
        seen_judges.add(r.judge_id)
    successes = sum(1 for r in records if r.rating == "success")
    return successes > len(records) - successes


def ingest_judgment_file(path: str | Path) -> dict[str, list[JudgmentRecord]]:
    """One JSON record per line; duplicates are an ingestion error."""
    by_episode: dict[str, list[JudgmentRecord]] = {}
    seen: set[tuple[str, str]] = set()
    for i, line in enumerate(Path(path).read_text().splitlines()):
        line = line.strip()
        if not line:
            continue
        try:
            doc = json.loads(line)
            record = JudgmentRecord(
                episode_id=doc["episode_id"], judge_id=doc["judge_id"],
                rating=doc["rating"], note=doc.get("note", ""))
        except (json.JSONDecodeError, KeyError) as e:
            raise IngestionError(f"line {i + 1}: {e}") from e
        record.validate()
        key = (record.episode_id, record.judge_id)
        if key in seen:
            raise IngestionError(f"line {i + 1}: duplicate rating for {key}")
        seen.add(key)
        by_episode.setdefault(record.episode_id, []).append(record)
    return by_episode
