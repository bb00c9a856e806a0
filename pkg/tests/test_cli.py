import hashlib
import json
from pathlib import Path

from click.testing import CliRunner

from wikistream.cli import main


def run(*args):
    return CliRunner().invoke(main, [str(a) for a in args])


def simulate_stream(out_dir, humans=6, bots=6, days=8, seed=0):
    result = run("simulate", "--human-benign", humans // 2,
                 "--human-malign", humans - humans // 2,
                 "--bot-benign", bots // 2,
                 "--bot-malign", bots - bots // 2,
                 "--days", days, "--seed", seed, "--out", out_dir)
    assert result.exit_code == 0, result.output
    return Path(out_dir) / "events.csv"


class TestSimulateCommand:
    def test_writes_events_and_labels(self, tmp_path):
        events = simulate_stream(tmp_path / "sim")
        assert events.exists()
        assert (tmp_path / "sim" / "labels.csv").exists()

    def test_config_file_defaults_with_flag_override(self, tmp_path):
        config = tmp_path / "sim.conf"
        config.write_text("days = 3\nseed = 5\n", encoding="utf-8")
        out = tmp_path / "sim"
        result = run("simulate", "--config", config, "--seed", 6,
                     "--out", out)
        assert result.exit_code == 0, result.output
        # seed 6 from the flag, days 3 from the file
        reference = tmp_path / "ref"
        run("simulate", "--days", 3, "--seed", 6, "--out", reference)
        assert (out / "events.csv").read_bytes() == \
            (reference / "events.csv").read_bytes()

    def test_bad_noise_exits_validation(self, tmp_path):
        result = run("simulate", "--noise", 2.0, "--out", tmp_path / "x")
        assert result.exit_code == 2


class TestAnalyzeCommand:
    def test_reports_written(self, tmp_path):
        events = simulate_stream(tmp_path / "sim")
        result = run("analyze", events, "--out", tmp_path / "analysis")
        assert result.exit_code == 0, result.output
        assert (tmp_path / "analysis" / "report.csv").exists()
        payload = json.loads((tmp_path / "analysis" / "report.json")
                             .read_text(encoding="utf-8"))
        assert payload["target"] == "user_type"

    def test_missing_input_exits_validation(self, tmp_path):
        result = run("analyze", tmp_path / "missing.csv")
        assert result.exit_code == 2
        assert "error:" in result.output


class TestSelectCommand:
    def test_selected_features_json(self, tmp_path):
        events = simulate_stream(tmp_path / "sim", humans=10, bots=10)
        out = tmp_path / "selected.json"
        result = run("select", events, "--count", 5, "--out", out)
        assert result.exit_code == 0, result.output
        payload = json.loads(out.read_text(encoding="utf-8"))
        assert len(payload["selected"]) == 5
        assert len(payload["elimination_order"]) == 31 - 5


class TestSynthesizeCommand:
    def test_fills_gap_by_default(self, tmp_path):
        events = simulate_stream(tmp_path / "sim", humans=8, bots=4)
        result = run("synthesize", events, "--out", tmp_path / "syn")
        assert result.exit_code == 0, result.output
        assert "generated 4 samples" in result.output
        assert (tmp_path / "syn" / "synthetic.csv").exists()
        assert (tmp_path / "syn" / "comparison.csv").exists()

    def test_balanced_input_warns_zero(self, tmp_path):
        events = simulate_stream(tmp_path / "sim", humans=5, bots=5)
        result = run("synthesize", events, "--out", tmp_path / "syn")
        assert result.exit_code == 0, result.output
        assert "0 samples" in result.output
        assert not (tmp_path / "syn" / "synthetic.csv").exists()

    def test_same_seed_identical_output(self, tmp_path):
        events = simulate_stream(tmp_path / "sim", humans=8, bots=4)
        for name in ("a", "b"):
            result = run("synthesize", events, "--seed", 3,
                         "--out", tmp_path / name)
            assert result.exit_code == 0, result.output
        digest = lambda p: hashlib.sha256(p.read_bytes()).hexdigest()
        assert digest(tmp_path / "a" / "synthetic.csv") == \
            digest(tmp_path / "b" / "synthetic.csv")


class TestBalanceCommand:
    def test_balanced_stream_written(self, tmp_path):
        events = simulate_stream(tmp_path / "sim", humans=8, bots=4)
        out = tmp_path / "balanced.csv"
        result = run("balance", events, "--out", out)
        assert result.exit_code == 0, result.output
        assert "4 synthetic" in result.output
        from wikistream.ingest import load_stream
        balanced = load_stream(out)
        contributors = {a.contributor_id: a.is_bot for a in balanced}
        n_bots = sum(1 for b in contributors.values() if b)
        assert n_bots * 2 == len(contributors)


class TestProfileCommand:
    def test_profiles_exported(self, tmp_path):
        events = simulate_stream(tmp_path / "sim")
        out = tmp_path / "profiles.jsonl"
        result = run("profile", events, "--out", out)
        assert result.exit_code == 0, result.output
        lines = out.read_text(encoding="utf-8").strip().splitlines()
        assert len(lines) == 12  # one per contributor
        assert all("contributor_id" in line for line in lines)


class TestEvaluateCommand:
    def test_metrics_and_table(self, tmp_path):
        events = simulate_stream(tmp_path / "sim", humans=10, bots=10)
        out = tmp_path / "eval"
        result = run("evaluate", events, "--classifier", "nb",
                     "--features", "set1", "--out", out)
        assert result.exit_code == 0, result.output
        assert "Accuracy" in result.output  # table header
        assert "ms/event" in result.output
        assert (out / "metrics.json").exists()
        assert (out / "predictions.csv").exists()
        assert (out / "window_series.csv").exists()

    def test_stacking_writes_both_reports(self, tmp_path):
        events = simulate_stream(tmp_path / "sim", humans=6, bots=6, days=5)
        out = tmp_path / "eval"
        result = run("evaluate", events, "--classifier", "stacking",
                     "--out", out)
        assert result.exit_code == 0, result.output
        assert (out / "metrics.json").exists()
        assert (out / "metrics_user.json").exists()

    def test_report_renders_metrics(self, tmp_path):
        events = simulate_stream(tmp_path / "sim")
        out = tmp_path / "eval"
        run("evaluate", events, "--classifier", "nb", "--out", out)
        result = run("report", out / "metrics.json")
        assert result.exit_code == 0, result.output
        assert "Accuracy" in result.output
        assert "nb" in result.output
