"""
命令行集成测试
"""
import csv
import io
import json
import os

import pytest

import main
from models.run_record import content_hash
from utils.verifiers import verify_sort


def _run(*argv):
    return main.main(["--no-log-file", *argv])


def _csv_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestGenData:
    """gen-data 命令"""

    @pytest.mark.integration
    def test_sort_records_are_strictly_increasing(self, temp_dir, capsys):
        out = os.path.join(temp_dir, "sort.jsonl")
        assert _run("gen-data", "--task", "sort", "--k", "6", "--len", "4",
                    "--n", "100", "--seed", "7", "--out", out) == 0
        with open(out, encoding="utf-8") as f:
            records = [json.loads(line) for line in f]
        assert len(records) == 100
        assert all(verify_sort(r["truth"]) for r in records)

        summary = json.loads(capsys.readouterr().out)
        assert summary["n"] == 100
        assert summary["task"] == "sort"

    @pytest.mark.integration
    def test_same_flags_give_identical_files(self, temp_dir):
        paths = [os.path.join(temp_dir, f"run{i}.jsonl") for i in range(2)]
        for path in paths:
            assert _run("gen-data", "--task", "addition", "--base", "3", "--n", "25",
                        "--seed", "11", "--out", path) == 0
        with open(paths[0], "rb") as a, open(paths[1], "rb") as b:
            assert a.read() == b.read()

    @pytest.mark.integration
    def test_missing_task_is_usage_error(self, temp_dir):
        with pytest.raises(SystemExit) as exc_info:
            _run("gen-data", "--n", "10", "--out", os.path.join(temp_dir, "x.jsonl"))
        assert exc_info.value.code == 2

    @pytest.mark.integration
    def test_infeasible_task_exit_code(self, temp_dir):
        code = _run("gen-data", "--task", "sort", "--k", "4", "--len", "5",
                    "--out", os.path.join(temp_dir, "x.jsonl"))
        assert code == 3

    @pytest.mark.integration
    def test_missing_parameters_exit_code(self, temp_dir):
        code = _run("gen-data", "--task", "sort", "--out", os.path.join(temp_dir, "x.jsonl"))
        assert code == 2


class TestAnalyzeSymmetry:
    """analyze-symmetry 命令"""

    @pytest.mark.integration
    def test_alldiff_upper_bound_is_one(self, capsys):
        assert _run("analyze-symmetry", "--task", "alldiff", "--k", "3") == 0
        report = json.loads(capsys.readouterr().out)
        assert report["r_up"] == 1.0
        assert report["group_order"] == 6
        assert report["orbits"] == [[0, 1, 2]]
        assert report["symbols"] == ["0", "1", "2"]

    @pytest.mark.integration
    @pytest.mark.parametrize("base", ["2", "3"])
    def test_addition_upper_bound_is_zero(self, base, capsys):
        assert _run("analyze-symmetry", "--task", "addition", "--base", base, "--digits", "1") == 0
        report = json.loads(capsys.readouterr().out)
        assert report["r_up"] == 0.0
        assert report["group_order"] == 1
        assert report["lengths"] == [4]

    @pytest.mark.integration
    def test_sort_upper_bound_is_zero(self, capsys):
        assert _run("analyze-symmetry", "--task", "sort", "--k", "5") == 0
        report = json.loads(capsys.readouterr().out)
        assert report["r_up"] == 0.0
        assert report["check_length"] == 4

    @pytest.mark.integration
    def test_chess_reports_piece_names(self, capsys):
        assert _run("analyze-symmetry", "--task", "chess", "--len", "3", "--pieces", "3", "--seed", "2") == 0
        report = json.loads(capsys.readouterr().out)
        assert report["symbols"] == ["bishop", "king", "knight"]
        assert report["boards_seed"] == 2

    @pytest.mark.integration
    def test_large_alphabet_is_capability_error(self):
        assert _run("analyze-symmetry", "--task", "alldiff", "--k", "9", "--len", "1") == 3


class TestEnumerate:
    """enumerate 调试命令"""

    @pytest.mark.integration
    def test_grid_file_ranking(self, temp_dir, capsys):
        path = os.path.join(temp_dir, "grid.json")
        with open(path, "w", encoding="utf-8") as f:
            json.dump([[0.9, 0.1], [0.6, 0.4]], f)
        assert _run("enumerate", "--grid", path, "--limit", "0") == 0
        rows = _csv_rows(capsys.readouterr().out)
        assert [r["assignment"] for r in rows] == ["0 0", "0 1", "1 0", "1 1"]
        assert [float(r["secondary"]) for r in rows] == pytest.approx([0.54, 0.36, 0.06, 0.04])

    @pytest.mark.integration
    def test_oracle_output_matches_dcs(self, capsys):
        assert _run("enumerate", "--rows", "3", "--cols", "3", "--seed", "4", "--limit", "0") == 0
        dcs_out = capsys.readouterr().out
        assert _run("enumerate", "--rows", "3", "--cols", "3", "--seed", "4", "--limit", "0", "--oracle") == 0
        assert capsys.readouterr().out == dcs_out

    @pytest.mark.integration
    def test_verified_column(self, capsys):
        assert _run("enumerate", "--rows", "4", "--cols", "2", "--task", "addition", "--base", "2",
                    "--limit", "0") == 0
        rows = _csv_rows(capsys.readouterr().out)
        assert len(rows) == 16
        # 二进制一位加法共有 4 个合法等式
        assert sum(int(r["verified"]) for r in rows) == 4

    @pytest.mark.integration
    def test_grid_required(self):
        assert _run("enumerate") == 2

    @pytest.mark.integration
    def test_task_dimension_mismatch(self):
        assert _run("enumerate", "--rows", "3", "--cols", "2", "--task", "addition", "--base", "2") == 2


class TestTrainEvalReplay:
    """train / eval / replay / runs 全流程"""

    @pytest.fixture
    def train_args(self, temp_dir):
        return [
            "train", "--task", "sort", "--k", "4", "--len", "3", "--n", "30",
            "--epochs", "2", "--batch", "10", "--lr", "0.5", "--seed", "5", "--no-timing",
            "--out-stats", os.path.join(temp_dir, "stats.csv"),
            "--out-model", os.path.join(temp_dir, "model.json"),
            "--out-record", os.path.join(temp_dir, "record.json"),
            "--db", os.path.join(temp_dir, "runs.db"),
        ]

    @pytest.mark.integration
    def test_full_flow(self, temp_dir, train_args, capsys):
        assert _run(*train_args) == 0
        stdout = capsys.readouterr().out
        with open(os.path.join(temp_dir, "stats.csv"), encoding="utf-8") as f:
            assert f.read() == stdout
        assert stdout.splitlines()[0] == (
            "epoch,mean_rank_K,mean_verifications,fraction_exhausted,"
            "pseudo_label_accuracy,symbol_accuracy,adjusted_accuracy,wall_time_s"
        )
        assert len(_csv_rows(stdout)) == 2

        assert _run("eval", "--task", "sort", "--k", "4", "--len", "3", "--n", "20", "--seed", "6",
                    "--model", os.path.join(temp_dir, "model.json")) == 0
        metrics = _csv_rows(capsys.readouterr().out)
        assert len(metrics) == 1
        assert float(metrics[0]["verified_fraction"]) == pytest.approx(1.0 - float(metrics[0]["uncorrected_fraction"]))

        assert _run("replay", "--record", os.path.join(temp_dir, "record.json")) == 0
        result = json.loads(capsys.readouterr().out)
        assert result["matches"] is True
        assert result["differences"] == []

        assert _run("runs", "--db", os.path.join(temp_dir, "runs.db")) == 0
        rows = _csv_rows(capsys.readouterr().out)
        assert rows[0]["run_id"] == result["run_id"]
        assert rows[0]["task"] == "sort"

    @pytest.mark.integration
    def test_repeated_runs_are_byte_identical(self, temp_dir, train_args, capsys):
        assert _run(*train_args) == 0
        first = capsys.readouterr().out
        assert _run(*train_args) == 0
        assert capsys.readouterr().out == first

    @pytest.mark.integration
    def test_no_timing_record_is_byte_identical(self, temp_dir, train_args, capsys):
        record_path = os.path.join(temp_dir, "record.json")
        assert _run(*train_args, "--no-registry") == 0
        with open(record_path, "rb") as f:
            first = f.read()
        assert _run(*train_args, "--no-registry") == 0
        with open(record_path, "rb") as f:
            assert f.read() == first
        record = json.loads(first)
        assert record["created_at"] is None
        assert record["run_id"] == content_hash(b"train", record["input_hash"].encode("utf-8"))[:12]

    @pytest.mark.integration
    def test_replay_detects_tampered_metrics(self, temp_dir, train_args, capsys):
        assert _run(*train_args, "--no-registry") == 0
        record_path = os.path.join(temp_dir, "record.json")
        with open(record_path, encoding="utf-8") as f:
            record = json.load(f)
        record["final_metrics"]["raw_accuracy"] = -1.0
        with open(record_path, "w", encoding="utf-8") as f:
            json.dump(record, f)
        capsys.readouterr()

        assert _run("replay", "--record", record_path) == 1
        result = json.loads(capsys.readouterr().out)
        assert result["differences"] == ["final_metrics"]


class TestBench:

    @pytest.mark.integration
    @pytest.mark.slow
    def test_addition_base_sweep_shape(self, capsys):
        assert _run("bench", "--task", "addition", "--bases", "2..4", "--seeds", "3",
                    "--n", "20", "--epochs", "1", "--batch", "10", "--lr", "0.5", "--no-timing") == 0
        rows = _csv_rows(capsys.readouterr().out)
        assert len(rows) == 9
        assert [int(r["param"]) for r in rows] == [2, 2, 2, 3, 3, 3, 4, 4, 4]
        for row in rows:
            assert all(value != "" for value in row.values())

    @pytest.mark.integration
    def test_missing_sweep_axis(self):
        assert _run("bench", "--task", "sort", "--k", "4", "--len", "3") == 2
