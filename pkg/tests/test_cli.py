import json

import numpy as np
import pytest

from promptfill.cli import main
from promptfill.geom import load_xyz, save_xyz


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert main(["gen-data", "chair", "10", "--seed", "0", "--out", str(d / "data")]) == 0
    assert (
        main(["bench", str(d / "data"), "--mode", "partnet", "--split", "all", "--out", str(d / "bench.jsonl")])
        == 0
    )
    return d


class TestGenData:
    def test_deterministic_output_files(self, tmp_path):
        for name in ("a", "b"):
            assert main(["gen-data", "chair", "10", "--seed", "0", "--out", str(tmp_path / name)]) == 0
        assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()
        assert (tmp_path / "a.split.json").read_bytes() == (tmp_path / "b.split.json").read_bytes()

    def test_split_written(self, workdir):
        split = json.loads((workdir / "data.split.json").read_text())
        assert set(split) == {"train", "val", "test"}
        assert len(split["train"]) == 7


class TestBench:
    def test_instances_written(self, workdir):
        lines = (workdir / "bench.jsonl").read_text().splitlines()
        assert len(lines) == 10
        rec = json.loads(lines[0])
        assert rec["mode"] == "partnet"
        assert len(rec["partial"]) == 2048


class TestEvalOracle:
    def test_oracle_cd_zero(self, workdir, capsys):
        out_json = workdir / "report.json"
        code = main(["eval", str(workdir / "bench.jsonl"), "--oracle", "--json", str(out_json)])
        assert code == 0
        table = capsys.readouterr().out
        assert "CD" in table
        report = json.loads(out_json.read_text())
        assert report["metrics"]["cd_scaled"] == 0.0
        assert report["metrics"]["fscore"] == 1.0

    def test_eval_without_ckpt_is_usage_error(self, workdir):
        assert main(["eval", str(workdir / "bench.jsonl")]) == 2


class TestUsageErrors:
    def test_unknown_flag_exits_2(self):
        with pytest.raises(SystemExit) as e:
            main(["gen-data", "chair", "10", "--bogus"])
        assert e.value.code == 2

    def test_no_command_exits_2(self):
        with pytest.raises(SystemExit) as e:
            main([])
        assert e.value.code == 2

    def test_missing_file_runtime_error(self, tmp_path):
        assert main(["eval", str(tmp_path / "missing.jsonl"), "--oracle"]) == 1


@pytest.mark.slow
class TestTrainedPipeline:
    """End-to-end through the CLI with a briefly trained desk model."""

    @pytest.fixture(scope="class")
    def trained(self, workdir):
        ckpt = workdir / "model.ckpt"
        code = main(
            [
                "train", str(workdir / "bench.jsonl"),
                "--out", str(ckpt), "--epochs", "1", "--no-pretrained",
            ]
        )
        assert code == 0
        return ckpt

    def test_complete_size_contract(self, workdir, trained, tmp_path):
        bench = json.loads((workdir / "bench.jsonl").read_text().splitlines()[0])
        in_xyz = tmp_path / "in.xyz"
        out_xyz = tmp_path / "out.xyz"
        save_xyz(in_xyz, np.asarray(bench["partial"]))
        code = main(["complete", str(in_xyz), "curved back", str(trained), str(out_xyz)])
        assert code == 0
        full = load_xyz(out_xyz)
        assert len(full) == 2048 + 64 * 16

    def test_eval_runs_on_trained(self, workdir, trained, capsys):
        assert main(["eval", str(workdir / "bench.jsonl"), str(trained)]) == 0
        assert "CD" in capsys.readouterr().out

    def test_pretrain_then_export(self, workdir, tmp_path, capsys):
        pre = tmp_path / "pre.ckpt"
        code = main(
            [
                "pretrain", str(workdir / "data"),
                "--out", str(pre), "--epochs", "1", "--batch", "8",
            ]
        )
        assert code == 0
        emb = tmp_path / "emb.csv"
        assert main(["export-emb", str(workdir / "data"), str(pre), str(emb)]) == 0
        header = emb.read_text().splitlines()[0].split(",")
        assert len(header) == 5 + 256
