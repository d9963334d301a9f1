"""Command-line surface: subcommands, exit codes, and file outputs."""

import json

import pytest

from pmixed import EpsMode, PrivacyParams, accountant_record
from pmixed.cli import main


class TestAccount:
    def test_prints_the_reference_record(self, capsys):
        code = main([
            "account", "--eps-g", "8", "--delta", "1e-5", "--queries", "1024",
            "--alpha", "3", "--q", "0.03", "--n-models", "80",
            "--mode", "conservative",
        ])
        assert code == 0
        line = json.loads(capsys.readouterr().out)
        expected = accountant_record(
            PrivacyParams(8.0, 1e-5, 1024, 3, 0.03, 80), EpsMode.CONSERVATIVE
        )
        assert line["record"] == "accountant"
        assert line["beta_star"] == pytest.approx(expected["beta_star"], rel=1e-8)
        assert line["composed_eps"] == pytest.approx(8.0, abs=1e-6)
        assert line["dp_eps"] == pytest.approx(expected["dp_eps"], rel=1e-8)

    def test_writes_output_file(self, tmp_path):
        out = tmp_path / "account.jsonl"
        code = main(["account", "--eps-g", "1", "--queries", "16",
                     "--n-models", "4", "--q", "1.0", "--output", str(out)])
        assert code == 0
        assert json.loads(out.read_text())["T"] == 16

    def test_invalid_parameters_exit_2(self, capsys):
        code = main(["account", "--eps-g", "-3"])
        assert code == 2
        assert "usage" in capsys.readouterr().err


class TestUsageErrors:
    def test_unknown_subcommand(self, capsys):
        assert main(["frobnicate"]) == 2

    def test_missing_required_flag(self, capsys):
        assert main(["compare"]) == 2

    def test_help_exits_zero(self, capsys):
        assert main(["--help"]) == 0


class TestTrainAndPredict:
    @pytest.fixture
    def snapshot(self, tiny_corpus, tmp_path_factory):
        path = tmp_path_factory.mktemp("snap") / "ensemble.jsonl"
        code = main([
            "train",
            "--private-corpus", str(tiny_corpus["root"] / "private.txt"),
            "--public-corpus", str(tiny_corpus["root"] / "public.txt"),
            "--vocab", str(tiny_corpus["root"] / "vocab.txt"),
            "--n-models", "4", "--order", "2", "--smoothing-k", "0.1",
            "--seed", "7", "--output", str(path),
        ])
        assert code == 0
        return path

    def test_snapshot_written(self, snapshot):
        records = [json.loads(line) for line in snapshot.read_text().splitlines()]
        assert records[0]["kind"] == "vocab"
        roles = [r["role"] for r in records[1:]]
        assert roles == ["public"] + ["member"] * 4

    def test_predict_batch(self, snapshot, capsys, tmp_path):
        trace = tmp_path / "trace.jsonl"
        code = main([
            "predict", "--snapshot", str(snapshot),
            "--context", "v1 v2", "--context", "v5",
            "--steps", "2", "--eps-g", "2", "--queries", "16",
            "--q", "0.5", "--seed", "11", "--trace", str(trace),
        ])
        assert code == 0
        lines = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
        assert [line["context"] for line in lines] == [["v1", "v2"], ["v5"]]
        assert all(len(line["generated"]) == 2 for line in lines)
        trace_lines = [json.loads(line) for line in trace.read_text().splitlines()]
        assert len(trace_lines) == 5
        assert trace_lines[0]["record"] == "accountant"
        assert trace_lines[0]["queries_answered"] == 4

    def test_predict_is_deterministic(self, snapshot, capsys):
        argv = ["predict", "--snapshot", str(snapshot), "--context", "v1 v2",
                "--steps", "3", "--eps-g", "2", "--queries", "16",
                "--q", "0.5", "--seed", "3"]
        assert main(argv) == 0
        first = capsys.readouterr().out
        assert main(argv) == 0
        assert capsys.readouterr().out == first

    def test_predict_refuses_after_budget(self, snapshot, capsys):
        code = main([
            "predict", "--snapshot", str(snapshot),
            "--context", "v1", "--steps", "3",
            "--eps-g", "2", "--queries", "2", "--q", "0.5",
        ])
        assert code == 1
        assert "refused" in capsys.readouterr().err

    def test_predict_reads_input_file(self, snapshot, capsys, tmp_path):
        contexts = tmp_path / "contexts.txt"
        contexts.write_text("v1 v2\nv3\n", encoding="utf-8")
        code = main(["predict", "--snapshot", str(snapshot),
                     "--input", str(contexts), "--eps-g", "2",
                     "--queries", "8", "--q", "0.5"])
        assert code == 0
        assert len(capsys.readouterr().out.splitlines()) == 2


class TestCompareAndSweep:
    def test_compare_writes_report(self, tiny_corpus, tmp_path):
        out = tmp_path / "report.jsonl"
        code = main(["compare", "--config", str(tiny_corpus["config_path"]),
                     "--output", str(out)])
        assert code == 0
        records = [json.loads(line) for line in out.read_text().splitlines()]
        arms = {r["arm"] for r in records if r["record"] == "arm_summary"}
        assert arms == {"public", "ensemble", "pmixed"}

    def test_compare_missing_corpus_exits_2(self, tiny_corpus, capsys):
        code = main(["compare", "--config", str(tiny_corpus["config_path"]),
                     "--test-corpus", "/nonexistent/test.txt"])
        assert code == 2
        err = capsys.readouterr().err
        assert "usage" in err and "not found" in err

    def test_compare_override_changes_the_config_record(self, tiny_corpus, tmp_path):
        out = tmp_path / "report.jsonl"
        code = main(["compare", "--config", str(tiny_corpus["config_path"]),
                     "--runs", "1", "--mode", "paper-faithful",
                     "--output", str(out)])
        assert code == 0
        config_record = json.loads(out.read_text().splitlines()[0])
        assert config_record["runs"] == 1
        assert config_record["mode"] == "paper-faithful"

    def test_sweep_writes_table(self, tiny_corpus, tmp_path):
        out = tmp_path / "sweep.jsonl"
        code = main(["sweep", "--config", str(tiny_corpus["config_path"]),
                     "--runs", "1", "--axis", "eps_G", "--values", "0.5,2",
                     "--output", str(out)])
        assert code == 0
        table = (tmp_path / "sweep.jsonl.tsv").read_text().splitlines()
        assert table[0].startswith("axis\tvalue\tarm")
        assert len(table) == 7  # header + 2 values x 3 arms

    def test_sweep_rejects_bad_axis(self, tiny_corpus):
        assert main(["sweep", "--config", str(tiny_corpus["config_path"]),
                     "--axis", "zeta", "--values", "1"]) == 2
