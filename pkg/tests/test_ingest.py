import csv
from datetime import date

import pytest

from wikistream.ingest import (
    AGGREGATE_COLUMNS,
    EVENT_COLUMNS,
    StreamSource,
    aggregate_daily,
    load_stream,
    parse_events,
    read_aggregates,
    summarize,
    write_aggregates,
)
from wikistream.model import ValidationError
from tests.test_model import make_event


def event_row(event):
    from wikistream.sim import event_to_record
    return event_to_record(event)


def write_event_csv(path, events):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=EVENT_COLUMNS)
        writer.writeheader()
        for event in events:
            writer.writerow(event_row(event))


class TestParseEvents:
    def test_well_formed_file(self, tmp_path):
        path = tmp_path / "events.csv"
        write_event_csv(path, [make_event(contributor_id=f"c{i}")
                               for i in range(3)])
        events = parse_events(StreamSource(path))
        assert len(events) == 3

    def test_probability_group_violation_names_line(self, tmp_path):
        path = tmp_path / "events.csv"
        bad = make_event()
        row = event_row(bad)
        row["dmg_t"] = "0.7"
        row["dmg_f"] = "0.7"
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.DictWriter(handle, fieldnames=EVENT_COLUMNS)
            writer.writeheader()
            writer.writerow(event_row(make_event()))
            writer.writerow(row)
        with pytest.raises(ValidationError) as exc:
            parse_events(StreamSource(path))
        assert "probability group sum" in str(exc.value)
        assert "line 3" in str(exc.value)

    def test_empty_file_yields_empty_sequence(self, tmp_path):
        path = tmp_path / "events.csv"
        path.write_text("", encoding="utf-8")
        assert parse_events(StreamSource(path)) == []

    def test_malformed_number_reports_field(self, tmp_path):
        path = tmp_path / "events.csv"
        row = event_row(make_event())
        row["links"] = "many"
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.DictWriter(handle, fieldnames=EVENT_COLUMNS)
            writer.writeheader()
            writer.writerow(row)
        with pytest.raises(ValidationError) as exc:
            parse_events(StreamSource(path))
        assert "links" in str(exc.value)

    def test_missing_path(self, tmp_path):
        with pytest.raises(ValidationError):
            parse_events(StreamSource(tmp_path / "nope.csv"))

    def test_jsonl_round_trip(self, tmp_path):
        import json
        path = tmp_path / "events.jsonl"
        rows = [event_row(make_event(contributor_id=f"c{i}")) for i in range(2)]
        with open(path, "w", encoding="utf-8") as handle:
            for row in rows:
                handle.write(json.dumps(row) + "\n")
        assert len(parse_events(StreamSource(path))) == 2


class TestAggregateDaily:
    def test_mean_review_length(self):
        events = [make_event(review_length=10.0),
                  make_event(review_length=30.0)]
        aggs = aggregate_daily(events)
        assert len(aggs) == 1
        assert aggs[0].value("3") == 2
        assert aggs[0].value("4") == 20

    def test_revert_count(self):
        aggs = aggregate_daily([make_event(was_reverted=True)])
        assert aggs[0].value("9") == 1
        assert aggs[0].value("10") == 1.0

    def test_two_contributors_two_aggregates(self):
        events = [make_event(contributor_id="a"),
                  make_event(contributor_id="b")]
        assert len(aggregate_daily(events)) == 2

    def test_links_ratio_uses_total_characters(self):
        events = [make_event(review_length=50.0, links=5.0),
                  make_event(review_length=50.0, links=0.0)]
        aggs = aggregate_daily(events)
        assert aggs[0].value("11") == pytest.approx(5.0 / 100.0)

    def test_idempotent_on_one_event_per_day(self):
        events = [make_event(contributor_id=f"c{i}",
                             timestamp=date(2020, 1, 1 + i))
                  for i in range(4)]
        once = aggregate_daily(events)
        assert sum(a.value("3") for a in once) == len(events)
        assert all(a.value("3") == 1 for a in once)

    def test_event_count_preserved(self):
        events = [make_event(contributor_id=f"c{i % 3}",
                             timestamp=date(2020, 1, 1 + i % 2))
                  for i in range(20)]
        aggs = aggregate_daily(events)
        assert sum(a.value("3") for a in aggs) == 20

    def test_sorted_by_day_then_contributor(self):
        events = [make_event(contributor_id="z", timestamp=date(2020, 1, 2)),
                  make_event(contributor_id="a", timestamp=date(2020, 1, 2)),
                  make_event(contributor_id="m", timestamp=date(2020, 1, 1))]
        aggs = aggregate_daily(events)
        keys = [(a.day, a.contributor_id) for a in aggs]
        assert keys == sorted(keys)

    def test_probability_groups_stay_normalized(self):
        events = [make_event(art_ok=0.7, art_attack=0.1, art_spam=0.1,
                             art_vandalism=0.1),
                  make_event(art_ok=0.3, art_attack=0.3, art_spam=0.2,
                             art_vandalism=0.2)]
        agg = aggregate_daily(events)[0]
        total = sum(agg.value(f) for f in
                    ("17.ok", "17.attack", "17.spam", "17.vandalism"))
        assert total == pytest.approx(1.0, abs=1e-6)


class TestSummarize:
    def test_bot_and_human_counts(self):
        events = [make_event(contributor_id="bot1", is_bot=True),
                  make_event(contributor_id="h1"),
                  make_event(contributor_id="h2")]
        summary = summarize(aggregate_daily(events), events)
        assert summary.n_bots == 1
        assert summary.n_humans == 2
        assert summary.n_contributors == 3
        assert sum(summary.joint_histogram.values()) == 3

    def test_empty_stream(self):
        summary = summarize([])
        assert summary.n_contributors == 0
        assert summary.n_events == 0
        assert summary.n_bots == summary.n_humans == 0

    def test_tie_breaks_toward_malign(self):
        events = [make_event(timestamp=date(2020, 1, 1), art_ok=0.9,
                             art_attack=0.04, art_spam=0.03,
                             art_vandalism=0.03),
                  make_event(timestamp=date(2020, 1, 2), art_ok=0.1,
                             art_attack=0.4, art_spam=0.3,
                             art_vandalism=0.2)]
        summary = summarize(aggregate_daily(events))
        assert summary.joint_histogram["human-malign"] == 1


class TestAggregateSchema:
    def test_round_trip(self, tmp_path):
        events = [make_event(contributor_id=f"c{i}", is_bot=i % 2 == 0)
                  for i in range(4)]
        aggs = aggregate_daily(events)
        path = tmp_path / "aggs.csv"
        write_aggregates(aggs, path)
        back = read_aggregates(StreamSource(path))
        assert back == aggs

    def test_jsonl_round_trip(self, tmp_path):
        aggs = aggregate_daily([make_event()])
        path = tmp_path / "aggs.jsonl"
        write_aggregates(aggs, path)
        assert read_aggregates(StreamSource(path)) == aggs

    def test_load_stream_detects_schema(self, tmp_path):
        events = [make_event(contributor_id=f"c{i}") for i in range(3)]
        event_path = tmp_path / "events.csv"
        write_event_csv(event_path, events)
        aggs = load_stream(event_path)
        agg_path = tmp_path / "aggs.csv"
        write_aggregates(aggs, agg_path)
        assert load_stream(agg_path) == aggs

    def test_synthetic_column_present(self):
        assert "synthetic" in AGGREGATE_COLUMNS
