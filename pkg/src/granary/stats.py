"""Retention accounting: hours and record counts before/after filtration."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

from .manifest import read_manifest_path
from .records import UtteranceRecord

TOTAL_KEY = ("total", "*")


@dataclass
class KeyStats:
    unfiltered_hours: float = 0.0
    filtered_hours: float = 0.0
    unfiltered_count: int = 0
    filtered_count: int = 0

    @property
    def retention_rate(self) -> float:
        """Filtered hours over unfiltered hours, in [0, 1]; 0 for an empty key."""
        if self.unfiltered_hours <= 0:
            return 0.0
        return self.filtered_hours / self.unfiltered_hours

    def check(self) -> None:
        if self.unfiltered_hours < 0 or self.filtered_hours < 0:
            raise ValueError("hours must be non-negative")
        if self.filtered_hours > self.unfiltered_hours + 1e-9:
            raise ValueError(
                f"filtered hours {self.filtered_hours} exceed unfiltered {self.unfiltered_hours}"
            )

    def merged(self, other: "KeyStats") -> "KeyStats":
        return KeyStats(
            unfiltered_hours=self.unfiltered_hours + other.unfiltered_hours,
            filtered_hours=self.filtered_hours + other.filtered_hours,
            unfiltered_count=self.unfiltered_count + other.unfiltered_count,
            filtered_count=self.filtered_count + other.filtered_count,
        )


@dataclass
class CorpusStats:
    """Per-(corpus, language) retention accounting, additive across shards."""

    per_key: dict[tuple[str, str], KeyStats] = field(default_factory=dict)
    flag_counts: Counter = field(default_factory=Counter)
    dropped_count: int = 0
    parse_errors: int = 0

    def _key(self, record: UtteranceRecord) -> tuple[str, str]:
        return (record.corpus or "unknown", record.lang_target or "unknown")

    def add_input(self, record: UtteranceRecord) -> None:
        stats = self.per_key.setdefault(self._key(record), KeyStats())
        stats.unfiltered_hours += record.hours()
        stats.unfiltered_count += 1

    def add_output(self, record: UtteranceRecord) -> None:
        stats = self.per_key.setdefault(self._key(record), KeyStats())
        stats.filtered_hours += record.hours()
        stats.filtered_count += 1

    def add_dropped(self, record: UtteranceRecord) -> None:
        self.dropped_count += 1
        for flag in record.flags:
            self.flag_counts[flag] += 1

    def merge(self, other: "CorpusStats") -> None:
        for key, stats in other.per_key.items():
            self.per_key[key] = self.per_key.get(key, KeyStats()).merged(stats)
        self.flag_counts.update(other.flag_counts)
        self.dropped_count += other.dropped_count
        self.parse_errors += other.parse_errors

    def totals(self) -> KeyStats:
        total = KeyStats()
        for stats in self.per_key.values():
            total = total.merged(stats)
        return total

    @classmethod
    def from_totals(cls, rows: dict[tuple[str, str], tuple[float, float]]) -> "CorpusStats":
        """Build stats from (unfiltered_hours, filtered_hours) fixtures."""
        out = cls()
        for key, (unfiltered, filtered) in rows.items():
            stats = KeyStats(unfiltered_hours=unfiltered, filtered_hours=filtered)
            stats.check()
            out.per_key[key] = stats
        return out

    def to_json_obj(self) -> dict:
        rows = []
        for (corpus, lang), stats in sorted(self.per_key.items()):
            rows.append(
                {
                    "corpus": corpus,
                    "lang": lang,
                    "unfiltered_hours": stats.unfiltered_hours,
                    "filtered_hours": stats.filtered_hours,
                    "unfiltered_count": stats.unfiltered_count,
                    "filtered_count": stats.filtered_count,
                    "retention_rate": stats.retention_rate,
                }
            )
        total = self.totals()
        return {
            "rows": rows,
            "total": {
                "unfiltered_hours": total.unfiltered_hours,
                "filtered_hours": total.filtered_hours,
                "unfiltered_count": total.unfiltered_count,
                "filtered_count": total.filtered_count,
                "retention_rate": total.retention_rate,
            },
            "flag_counts": dict(sorted(self.flag_counts.items())),
            "dropped_count": self.dropped_count,
            "parse_errors": self.parse_errors,
        }


def compute_stats(
    input_records: Iterable[UtteranceRecord],
    output_records: Iterable[UtteranceRecord],
    dropped_records: Iterable[UtteranceRecord] = (),
) -> CorpusStats:
    """Aggregate retention accounting from record streams."""
    stats = CorpusStats()
    for record in input_records:
        stats.add_input(record)
    for record in output_records:
        stats.add_output(record)
    for record in dropped_records:
        stats.add_dropped(record)
    return stats


def compute_stats_from_paths(input_path, output_path, sidecar_path=None) -> CorpusStats:
    """Aggregate from manifest files; unparseable lines count as parse errors.

    Sidecar lines recording the original run's parse failures are not
    records, so they land in ``parse_errors`` here as well, keeping the
    two accountings consistent.
    """
    stats = CorpusStats()

    def note(_err) -> None:
        stats.parse_errors += 1

    for record in read_manifest_path(input_path, on_error=note):
        stats.add_input(record)
    for record in read_manifest_path(output_path, on_error=note):
        stats.add_output(record)
    if sidecar_path:
        for record in read_manifest_path(sidecar_path, on_error=note):
            stats.add_dropped(record)
    return stats


def render_report(stats: CorpusStats, fmt: str = "text") -> str:
    """Render retention accounting as a text table or one JSON object."""
    if fmt == "json":
        return json.dumps(stats.to_json_obj(), ensure_ascii=False)
    if fmt != "text":
        raise ValueError(f"unknown report format {fmt!r}; expected 'text' or 'json'")

    header = f"{'corpus':<12} {'lang':<6} {'unfilt_h':>14} {'filt_h':>14} {'unfilt_n':>10} {'filt_n':>10} {'retention%':>11}"
    lines = [header, "-" * len(header)]
    for (corpus, lang), key_stats in sorted(stats.per_key.items()):
        lines.append(
            f"{corpus:<12} {lang:<6} {key_stats.unfiltered_hours:>14.2f} {key_stats.filtered_hours:>14.2f} "
            f"{key_stats.unfiltered_count:>10d} {key_stats.filtered_count:>10d} {key_stats.retention_rate * 100:>11.2f}"
        )
    total = stats.totals()
    lines.append("-" * len(header))
    lines.append(
        f"{'total':<12} {'*':<6} {total.unfiltered_hours:>14.2f} {total.filtered_hours:>14.2f} "
        f"{total.unfiltered_count:>10d} {total.filtered_count:>10d} {total.retention_rate * 100:>11.2f}"
    )
    if stats.flag_counts:
        lines.append("")
        lines.append("drop flags:")
        for flag, count in sorted(stats.flag_counts.items()):
            lines.append(f"  {flag:<20} {count:>10d}")
    if stats.parse_errors:
        lines.append(f"parse errors: {stats.parse_errors}")
    return "\n".join(lines)
