import argparse
import json

import pytest
from fastapi.testclient import TestClient

from acuity import cli
from acuity.service.app import create_app


def run_cli(argv):
    cli.main(argv)


class TestStudyCommands:
    def test_benchmark_writes_deterministic_csv(self, tmp_path):
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["benchmark", "--seed", "3", "--patients", "15", "--questions", "4",
                "--policies", "const,adaptive"]
        run_cli(args + ["--out", str(out1)])
        run_cli(args + ["--out", str(out2)])
        assert out1.read_bytes() == out2.read_bytes()
        lines = out1.read_text().strip().split("\n")
        assert lines[0] == "policy,mean_relative_error,mean_test_length,stderr,n_runs,failures"
        assert len(lines) == 3

    def test_sweep_length_rows(self, tmp_path):
        out = tmp_path / "sweep.csv"
        run_cli([
            "sweep-length", "--seed", "3", "--patients", "8",
            "--policies", "const,adaptive", "--lengths", "2,4", "--out", str(out),
        ])
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "policy,x,y,stderr,n_runs"
        assert len(lines) == 1 + 4  # |policies| x |lengths|

    def test_config_file_merges(self, tmp_path, capsys):
        cfg = tmp_path / "sim.json"
        cfg.write_text(json.dumps({"n_patients": 5, "truth_beta": 0.4}))
        run_cli(["benchmark", "--seed", "1", "--questions", "2",
                 "--policies", "const", "--config", str(cfg)])
        outp = capsys.readouterr().out.strip().split("\n")
        assert outp[1].split(",")[4] == "5"  # n_runs from config

    def test_unknown_config_key_rejected(self, tmp_path):
        cfg = tmp_path / "sim.json"
        cfg.write_text(json.dumps({"banana": 1}))
        with pytest.raises(SystemExit):
            run_cli(["benchmark", "--config", str(cfg)])

    def test_sweep_optotypes(self, tmp_path):
        out = tmp_path / "opt.csv"
        run_cli(["sweep-optotypes", "--seed", "2", "--patients", "6",
                 "--counts", "2,4", "--out", str(out)])
        assert len(out.read_text().strip().split("\n")) == 3


class TestExamThinClient:
    def test_auto_exam_completes_against_service(self, tmp_path):
        app = create_app(data_dir=tmp_path / "sessions")
        with TestClient(app) as http:
            client = cli.ExamClient(client=http)
            args = argparse.Namespace(
                questions=6, until_confident=False, prior_mu=None,
                prior_beta=None, seed=123,
            )
            correct_count = {"n": 0}

            def reader(stim):
                correct_count["n"] += 1
                return stim["optotype"]

            result = cli.run_exam_client(args, client, answer=reader)
        assert correct_count["n"] == 6
        assert result["questions_asked"] == 6
        assert result["predicted_arcmin"] > 0

    def test_until_confident_exam(self, tmp_path):
        app = create_app(data_dir=tmp_path / "sessions")
        with TestClient(app) as http:
            client = cli.ExamClient(client=http)
            args = argparse.Namespace(
                questions=None, until_confident=True, prior_mu=0.3,
                prior_beta=0.5, seed=9,
            )
            result = cli.run_exam_client(args, client, answer=lambda s: s["optotype"])
        assert result["converged"] is True
        assert result["confidence"] >= 0.95
