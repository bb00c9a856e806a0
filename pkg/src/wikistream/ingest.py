"""
File ingestion: parse edit-event files, validate, aggregate per
contributor-day and emit a time-ordered stream.

Two on-disk schemas are supported:

* the event schema (one raw edit per row), and
* the aggregate schema (one contributor-day per row) used to persist
  balanced / synthetic streams. Aggregate files carry a ``synthetic``
  provenance column.
"""

from __future__ import annotations

import csv
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path

from .model import (
    FEATURE_IDS,
    FEATURE_INDEX,
    DailyAggregate,
    EditEvent,
    ValidationError,
    joint_class,
)

EVENT_COLUMNS = (
    "contributor_id", "is_bot", "page_id", "timestamp",
    "review_length", "links", "repeated_links",
    "chars_inserted", "chars_deleted", "was_reverted",
    "dmg_t", "dmg_f", "gf_t", "gf_f",
    "item_a", "item_b", "item_c", "item_d", "item_e",
    "art_ok", "art_attack", "art_spam", "art_vandalism",
    "wp10_b", "wp10_c", "wp10_fa", "wp10_ga", "wp10_start", "wp10_stub",
)

# Probability columns share names between the event and aggregate schemas.
PROB_COLUMNS = EVENT_COLUMNS[10:]

PROB_COLUMN_TO_FEATURE = {
    "dmg_t": "15.damaging_true",
    "dmg_f": "15.damaging_false",
    "gf_t": "15.goodfaith_true",
    "gf_f": "15.goodfaith_false",
    "item_a": "16.A",
    "item_b": "16.B",
    "item_c": "16.C",
    "item_d": "16.D",
    "item_e": "16.E",
    "art_ok": "17.ok",
    "art_attack": "17.attack",
    "art_spam": "17.spam",
    "art_vandalism": "17.vandalism",
    "wp10_b": "18.B",
    "wp10_c": "18.C",
    "wp10_fa": "18.FA",
    "wp10_ga": "18.GA",
    "wp10_start": "18.start",
    "wp10_stub": "18.stub",
}

FEATURE_TO_PROB_COLUMN = {v: k for k, v in PROB_COLUMN_TO_FEATURE.items()}

AGGREGATE_COLUMNS = (
    ("contributor_id", "day", "is_bot", "synthetic")
    + tuple(f"f{fid}" for fid in FEATURE_IDS[:12])
    + PROB_COLUMNS
)


def _aggregate_column(feature_id):
    if feature_id in FEATURE_TO_PROB_COLUMN:
        return FEATURE_TO_PROB_COLUMN[feature_id]
    return f"f{feature_id}"


@dataclass
class StreamSource:
    """A file to read events or aggregates from.

    ``format`` is inferred from the file suffix when not given:
    ``.jsonl`` reads JSON lines, anything else is treated as CSV.
    """

    path: Path
    format: str = ""
    ordering: str = "sort-by-day"

    def __post_init__(self):
        self.path = Path(self.path)
        if not self.format:
            self.format = "jsonl" if self.path.suffix == ".jsonl" else "csv"
        if self.format not in ("csv", "jsonl"):
            raise ValidationError(f"unknown format {self.format!r}", field="format")
        if self.ordering not in ("as-is", "sort-by-day"):
            raise ValidationError(
                f"unknown ordering {self.ordering!r}", field="ordering")


def _parse_bool(raw, name, line):
    if raw in ("0", "false", "False"):
        return False
    if raw in ("1", "true", "True"):
        return True
    raise ValidationError(f"expected 0/1 boolean, got {raw!r}", field=name, line=line)


def _parse_float(raw, name, line):
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise ValidationError(f"not a number: {raw!r}", field=name, line=line)
    if not math.isfinite(value):
        raise ValidationError(f"non-finite value {raw!r}", field=name, line=line)
    return value


def _parse_day(raw, name, line):
    try:
        return datetime.fromisoformat(str(raw)).date()
    except ValueError:
        raise ValidationError(
            f"not an ISO-8601 date or datetime: {raw!r}", field=name, line=line)


_EVENT_PROB_FIELDS = {
    "dmg_t": "damaging_true", "dmg_f": "damaging_false",
    "gf_t": "goodfaith_true", "gf_f": "goodfaith_false",
    "item_a": "item_a", "item_b": "item_b", "item_c": "item_c",
    "item_d": "item_d", "item_e": "item_e",
    "art_ok": "art_ok", "art_attack": "art_attack",
    "art_spam": "art_spam", "art_vandalism": "art_vandalism",
    "wp10_b": "wp10_b", "wp10_c": "wp10_c", "wp10_fa": "wp10_fa",
    "wp10_ga": "wp10_ga", "wp10_start": "wp10_start", "wp10_stub": "wp10_stub",
}


def _event_from_record(record, line):
    missing = [c for c in EVENT_COLUMNS if record.get(c) in (None, "")]
    if missing:
        raise ValidationError(f"missing column(s) {missing}", line=line)
    event = EditEvent(
        contributor_id=str(record["contributor_id"]),
        is_bot=_parse_bool(str(record["is_bot"]), "is_bot", line),
        page_id=str(record["page_id"]),
        timestamp=_parse_day(record["timestamp"], "timestamp", line),
        review_length=_parse_float(record["review_length"], "review_length", line),
        links=_parse_float(record["links"], "links", line),
        repeated_links=_parse_float(record["repeated_links"], "repeated_links", line),
        chars_inserted=_parse_float(record["chars_inserted"], "chars_inserted", line),
        chars_deleted=_parse_float(record["chars_deleted"], "chars_deleted", line),
        was_reverted=_parse_bool(str(record["was_reverted"]), "was_reverted", line),
        **{_EVENT_PROB_FIELDS[c]: _parse_float(record[c], c, line)
           for c in PROB_COLUMNS},
    )
    return event.validate(line=line)


def _iter_records(source):
    """Yield (record dict, line number) pairs from a source file."""
    if not source.path.exists():
        raise ValidationError(f"file not found: {source.path}", field="path")
    if source.format == "csv":
        with open(source.path, newline="", encoding="utf-8") as handle:
            reader = csv.DictReader(handle)
            if reader.fieldnames is None:
                return
            for record in reader:
                yield record, reader.line_num
    else:
        with open(source.path, encoding="utf-8") as handle:
            for line_num, raw in enumerate(handle, start=1):
                raw = raw.strip()
                if not raw:
                    continue
                try:
                    record = json.loads(raw)
                except json.JSONDecodeError as exc:
                    raise ValidationError(f"invalid JSON: {exc}", line=line_num)
                yield record, line_num


def parse_events(source):
    """Parse and validate all edit events of a source.

    Raises ValidationError carrying the offending line number and field.
    """
    events = []
    for record, line in _iter_records(source):
        events.append(_event_from_record(record, line))
    if source.ordering == "sort-by-day":
        events.sort(key=lambda e: (e.day, e.contributor_id))
    return events


def aggregate_daily(events):
    """Fold validated events into one DailyAggregate per (contributor, day).

    Counts are summed, probabilities averaged; the link ratios divide the
    day's total links by the day's total review characters. Output sorted
    by day then contributor id.
    """
    groups = defaultdict(list)
    for event in events:
        groups[(event.contributor_id, event.day)].append(event)

    aggregates = []
    for (contributor_id, day), members in groups.items():
        n = len(members)
        total_chars = sum(e.review_length for e in members)
        n_pages = len({e.page_id for e in members})
        n_reverts = sum(1 for e in members if e.was_reverted)
        values = [0.0] * len(FEATURE_IDS)
        values[FEATURE_INDEX["3"]] = float(n)
        values[FEATURE_INDEX["4"]] = total_chars / n
        values[FEATURE_INDEX["5"]] = float(n_pages)
        values[FEATURE_INDEX["6"]] = n / n_pages
        # One calendar day spans a single week, so the weekly rates
        # coincide with the day's counts.
        values[FEATURE_INDEX["7"]] = float(n)
        values[FEATURE_INDEX["8"]] = float(n_pages)
        values[FEATURE_INDEX["9"]] = float(n_reverts)
        values[FEATURE_INDEX["10"]] = n_reverts / n
        links = sum(e.links for e in members)
        repeated = sum(e.repeated_links for e in members)
        values[FEATURE_INDEX["11"]] = links / total_chars if total_chars else 0.0
        values[FEATURE_INDEX["12"]] = repeated / total_chars if total_chars else 0.0
        values[FEATURE_INDEX["13"]] = sum(e.chars_inserted for e in members)
        values[FEATURE_INDEX["14"]] = sum(e.chars_deleted for e in members)
        for column, feature_id in PROB_COLUMN_TO_FEATURE.items():
            attr = _EVENT_PROB_FIELDS[column]
            values[FEATURE_INDEX[feature_id]] = (
                sum(getattr(e, attr) for e in members) / n)
        aggregates.append(DailyAggregate(
            contributor_id=contributor_id,
            day=day,
            is_bot=members[0].is_bot,
            values=tuple(values),
        ))
    aggregates.sort(key=lambda a: (a.day, a.contributor_id))
    return aggregates


@dataclass
class DatasetSummary:
    """Headline counts of a stream, at contributor granularity."""

    n_pages: int = 0
    n_contributors: int = 0
    n_events: int = 0
    n_bots: int = 0
    n_humans: int = 0
    joint_histogram: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "schema_version": 1,
            "n_pages": self.n_pages,
            "n_contributors": self.n_contributors,
            "n_events": self.n_events,
            "n_bots": self.n_bots,
            "n_humans": self.n_humans,
            "joint_histogram": dict(self.joint_histogram),
        }


def summarize(aggregates, events=None):
    """Summarize a stream of aggregates.

    A contributor's joint class is the majority over its aggregates'
    labels, ties broken toward malign. ``n_pages`` needs the raw events
    (aggregates only keep per-day distinct page counts) and is zero when
    they are not supplied.
    """
    per_contributor = defaultdict(list)
    for agg in aggregates:
        per_contributor[agg.contributor_id].append(agg)

    histogram = {name: 0 for name in
                 ("human-benign", "human-malign", "bot-benign", "bot-malign")}
    n_bots = 0
    for members in per_contributor.values():
        user_type = members[0].user_type
        n_bots += user_type
        positives = sum(1 for a in members if a.contribution_type == 0)
        negatives = len(members) - positives
        contribution = 0 if positives > negatives else 1
        histogram[joint_class(user_type, contribution)] += 1

    return DatasetSummary(
        n_pages=len({e.page_id for e in events}) if events else 0,
        n_contributors=len(per_contributor),
        n_events=int(round(sum(a.value("3") for a in aggregates))),
        n_bots=n_bots,
        n_humans=len(per_contributor) - n_bots,
        joint_histogram=histogram,
    )


def _aggregate_from_record(record, line):
    missing = [c for c in AGGREGATE_COLUMNS if record.get(c) in (None, "")]
    if missing:
        raise ValidationError(f"missing column(s) {missing}", line=line)
    values = [0.0] * len(FEATURE_IDS)
    for fid in FEATURE_IDS:
        values[FEATURE_INDEX[fid]] = _parse_float(
            record[_aggregate_column(fid)], _aggregate_column(fid), line)
    return DailyAggregate(
        contributor_id=str(record["contributor_id"]),
        day=_parse_day(record["day"], "day", line),
        is_bot=_parse_bool(str(record["is_bot"]), "is_bot", line),
        values=tuple(values),
        synthetic=_parse_bool(str(record["synthetic"]), "synthetic", line),
    )


def read_aggregates(source):
    """Read a stream persisted in the aggregate schema."""
    aggregates = []
    for record, line in _iter_records(source):
        aggregates.append(_aggregate_from_record(record, line))
    if source.ordering == "sort-by-day":
        aggregates.sort(key=lambda a: (a.day, a.contributor_id))
    return aggregates


def aggregate_to_record(agg):
    record = {
        "contributor_id": agg.contributor_id,
        "day": agg.day.isoformat(),
        "is_bot": int(agg.is_bot),
        "synthetic": int(agg.synthetic),
    }
    for fid in FEATURE_IDS:
        record[_aggregate_column(fid)] = repr(float(agg.value(fid)))
    return record


def write_aggregates(aggregates, path, format=""):
    """Persist aggregates in the aggregate schema (CSV or JSONL)."""
    path = Path(path)
    if not format:
        format = "jsonl" if path.suffix == ".jsonl" else "csv"
    if format == "csv":
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.DictWriter(handle, fieldnames=AGGREGATE_COLUMNS)
            writer.writeheader()
            for agg in aggregates:
                writer.writerow(aggregate_to_record(agg))
    else:
        with open(path, "w", encoding="utf-8") as handle:
            for agg in aggregates:
                record = aggregate_to_record(agg)
                for fid in FEATURE_IDS:
                    record[_aggregate_column(fid)] = agg.value(fid)
                handle.write(json.dumps(record) + "\n")


def is_aggregate_file(path):
    """Sniff whether a file uses the aggregate schema (vs raw events)."""
    path = Path(path)
    if path.suffix == ".jsonl":
        with open(path, encoding="utf-8") as handle:
            for raw in handle:
                raw = raw.strip()
                if raw:
                    return "f3" in json.loads(raw)
        return False
    with open(path, newline="", encoding="utf-8") as handle:
        header = handle.readline()
    return "f3" in header.split(",")


def load_stream(path, format="", ordering="sort-by-day"):
    """Load a time-ordered aggregate stream from either schema."""
    source = StreamSource(path, format=format, ordering=ordering)
    if is_aggregate_file(source.path):
        return read_aggregates(source)
    return aggregate_daily(parse_events(source))
