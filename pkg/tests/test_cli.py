import json

import pytest
from click.testing import CliRunner

from mmffc.cli import main
from mmffc.data import builtin_path

IRIS = str(builtin_path("iris"))
FAST = {"dataset": "iris", "global_rounds": 3, "pop_size": 12, "ns_max": 6, "local_iters": 2, "n_clients": 4}


@pytest.fixture
def runner():
    return CliRunner()


def write_config(tmp_path, **kw):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({**FAST, **kw}))
    return str(p)


class TestPartition:
    def test_iid_sizes(self, runner, tmp_path):
        out = tmp_path / "p.json"
        res = runner.invoke(main, ["partition", "--input", IRIS, "--clients", "10", "--seed", "7", "--out", str(out)])
        assert res.exit_code == 0
        doc = json.loads(out.read_text())
        assert [len(v) for v in doc["clients"].values()] == [15] * 10
        assert res.output.count("n=15") == 10

    def test_noniid_histograms(self, runner, tmp_path):
        res = runner.invoke(main, ["partition", "--input", IRIS, "--clients", "10", "--mode", "noniid",
                                   "--shards", "2", "--seed", "7", "--out", str(tmp_path / "p.json")])
        assert res.exit_code == 0
        for line in res.output.strip().splitlines():
            counts = [int(tok.split("=")[1]) for tok in line.split()[3:]]
            assert sum(c > 0 for c in counts) <= 2

    def test_single_client(self, runner, tmp_path):
        res = runner.invoke(main, ["partition", "--input", IRIS, "--clients", "1", "--out", str(tmp_path / "p.json")])
        assert res.exit_code == 2 and "M >= 2" in res.output

    def test_unknown_flag(self, runner):
        assert runner.invoke(main, ["partition", "--bogus"]).exit_code == 2


class TestRun:
    def test_outputs_and_rerun_identical(self, runner, tmp_path):
        cfg = write_config(tmp_path)
        blobs = []
        for name in ("a", "b"):
            res = runner.invoke(main, ["run", "--config", cfg, "--out", str(tmp_path / name), "--threads", "1"])
            assert res.exit_code == 0, res.output
            blobs.append({f: (tmp_path / name / f).read_bytes() for f in ("results.json", "rounds.jsonl", "features.json")})
        assert blobs[0] == blobs[1]
        results = json.loads(blobs[0]["results.json"])
        assert {"acc_constructed", "acc_baseline", "tf", "cf", "fr", "seed", "rounds", "config"} <= set(results)
        assert results["config"]["beta_max"] == 3 and results["config"]["igr_threshold"] == 0.01
        assert len(blobs[0]["rounds.jsonl"].splitlines()) == 3

    def test_zero_rounds(self, runner, tmp_path):
        res = runner.invoke(main, ["run", "--config", write_config(tmp_path, global_rounds=0), "--out", str(tmp_path / "o")])
        assert res.exit_code == 2 and "at least 1 round" in res.output
        assert not (tmp_path / "o" / "results.json").exists()

    def test_missing_partition(self, runner, tmp_path):
        missing = tmp_path / "nowhere.json"
        res = runner.invoke(main, ["run", "--config", write_config(tmp_path), "--partition", str(missing),
                                   "--out", str(tmp_path / "o")])
        assert res.exit_code == 2 and str(missing) in res.output

    def test_partition_file(self, runner, tmp_path):
        part = tmp_path / "p.json"
        runner.invoke(main, ["partition", "--input", IRIS, "--clients", "4", "--seed", "1", "--out", str(part)])
        cfg = write_config(tmp_path, dataset=IRIS, partition="p.json")
        res = runner.invoke(main, ["run", "--config", cfg, "--out", str(tmp_path / "o"), "--threads", "1"])
        assert res.exit_code == 0, res.output

    def test_unknown_config_key(self, runner, tmp_path):
        res = runner.invoke(main, ["run", "--config", write_config(tmp_path, colour="red"), "--out", str(tmp_path / "o")])
        assert res.exit_code == 2 and "colour" in res.output

    def test_failure_clears_stale_outputs(self, runner, tmp_path):
        out = tmp_path / "o"
        out.mkdir()
        (out / "results.json").write_text("{}")
        res = runner.invoke(main, ["run", "--config", write_config(tmp_path, n_clients=1), "--out", str(out)])
        assert res.exit_code == 2 and not (out / "results.json").exists()

    def test_env_threads(self, runner, tmp_path, monkeypatch):
        monkeypatch.setenv("FFC_THREADS", "zero")
        res = runner.invoke(main, ["run", "--config", write_config(tmp_path), "--out", str(tmp_path / "o")])
        assert res.exit_code == 2 and "FFC_THREADS" in res.output


class TestEvaluateAndBaseline:
    def test_evaluate_reproduces_run(self, runner, tmp_path):
        cfg = write_config(tmp_path)
        runner.invoke(main, ["run", "--config", cfg, "--out", str(tmp_path / "o"), "--threads", "1"])
        results = json.loads((tmp_path / "o" / "results.json").read_text())
        res = runner.invoke(main, ["evaluate", "--config", cfg, "--features", str(tmp_path / "o" / "features.json")])
        assert res.exit_code == 0, res.output
        doc = json.loads(res.output)
        assert doc["acc_constructed"] == results["acc_constructed"] and doc["fr"] == results["fr"]

    def test_evaluate_bad_features(self, runner, tmp_path):
        bad = tmp_path / "f.json"
        bad.write_text('[{"expr": "(pow f0 f1)"}]')
        res = runner.invoke(main, ["evaluate", "--dataset", "iris", "--features", str(bad)])
        assert res.exit_code == 2

    def test_evaluate_feature_out_of_range(self, runner, tmp_path):
        bad = tmp_path / "f.json"
        bad.write_text('[{"expr": "(add f0 f9)"}]')
        res = runner.invoke(main, ["evaluate", "--dataset", "iris", "--features", str(bad)])
        assert res.exit_code == 2

    def test_baseline_matches_run(self, runner, tmp_path):
        cfg = write_config(tmp_path)
        runner.invoke(main, ["run", "--config", cfg, "--out", str(tmp_path / "o"), "--threads", "1"])
        results = json.loads((tmp_path / "o" / "results.json").read_text())
        res = runner.invoke(main, ["baseline", "--config", cfg])
        assert res.exit_code == 0 and json.loads(res.output)["acc_baseline"] == results["acc_baseline"]

    def test_internal_error_exit_1(self, runner, tmp_path, monkeypatch):
        import mmffc.cli as cli

        def boom(*a, **k):
            raise RuntimeError("kaboom")

        monkeypatch.setattr(cli, "baseline_no_fc", boom)
        res = runner.invoke(main, ["baseline", "--dataset", "iris"])
        assert res.exit_code == 1 and "kaboom" in res.output
