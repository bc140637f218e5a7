"""
命令行端到端测试：退出码、输出文件与运行清单
"""

import json

import numpy as np
import pandas as pd
import pytest

from main import build_parser, main
from src.certify import SafetyDomain, load_domains, save_domains
from src.core import manifest_path
from src.core import reporting
from src.followsim.scenario import SCENARIO_DIR
from src.models.scenario_models import ScenarioResult
from src.tensorcore import Network, load_model, save_dataset, save_model
from src.tensorcore.layers import Dense

from tests.conftest import two_clusters


def _linear_model(path):
    w = np.array([[-1.0, -1.0], [1.0, 1.0]], dtype=np.float32)
    save_model(Network([Dense(w, np.zeros(2, dtype=np.float32))], 2), path)
    return path


def _result(name: str, success: bool, scenario_id: int = 1) -> ScenarioResult:
    return ScenarioResult(scenario_id=scenario_id, name=name, success=success, collision=not success,
                          final_distance=1.0, final_bearing_deg=0.0,
                          failure_reason=None if success else "collision")


@pytest.fixture
def data_dir(tmp_path):
    d = tmp_path / "data"
    d.mkdir()
    save_dataset(two_clusters(seed=1), d / "train.sdt")
    save_dataset(two_clusters(n_per_class=10, seed=2), d / "val.sdt")
    return d


class TestParser:
    def test_requires_subcommand(self):
        with pytest.raises(SystemExit) as info:
            build_parser().parse_args([])
        assert info.value.code == 2

    async def test_non_positive_count(self, tmp_path):
        with pytest.raises(SystemExit) as info:
            await main(["gen-data", "--train", "0", "--out", str(tmp_path)])
        assert info.value.code == 2

    async def test_domain_sources_are_exclusive(self, tmp_path):
        with pytest.raises(SystemExit) as info:
            await main(["certify", "--model", "m.json", "--level", "1", "--domains", "d.json"])
        assert info.value.code == 2

    async def test_eval_scenarios_needs_controller(self):
        with pytest.raises(SystemExit) as info:
            await main(["eval-scenarios", "--standard"])
        assert info.value.code == 2


class TestGenerate:
    async def test_gen_data_is_reproducible(self, tmp_path):
        for name in ("a", "b"):
            code = await main(["gen-data", "--seed", "3", "--train", "4", "--val", "2", "--out", str(tmp_path / name)])
            assert code == 0
        assert (tmp_path / "a" / "train.sdt").read_bytes() == (tmp_path / "b" / "train.sdt").read_bytes()
        manifest = json.loads((tmp_path / "a" / "gen-data.manifest.json").read_text(encoding="utf-8"))
        assert manifest["command"] == "gen-data"
        assert manifest["seed"] == 3
        assert manifest["exit_code"] == 0

    async def test_gen_domains(self, tmp_path):
        out = tmp_path / "level2.json"
        assert await main(["gen-domains", "--level", "2", "--out", str(out)]) == 0
        assert len(load_domains(out, 541)) == 240
        assert (tmp_path / "level2.manifest.json").exists()

    async def test_gen_domains_explicit(self, tmp_path):
        out = tmp_path / "level1.json"
        assert await main(["gen-domains", "--level", "1", "--explicit", "--out", str(out)]) == 0
        assert len(json.loads(out.read_text(encoding="utf-8"))["domains"]) == 240


class TestTrain:
    async def test_train_writes_outputs(self, tmp_path, data_dir):
        domains = tmp_path / "domains.json"
        save_domains([SafetyDomain.create([-1.2, -1.2], [-0.8, -0.8], [0])], 2, domains)
        prefix = tmp_path / "models" / "run"
        code = await main(["train", "--data", str(data_dir), "--domains", str(domains),
                           "--max-epochs", "1", "--out", str(prefix)])
        assert code == 0
        net = load_model(prefix.with_name("run.json"))
        assert (net.input_dim, net.output_dim) == (2, 2)
        report = json.loads(prefix.with_name("run.report.json").read_text(encoding="utf-8"))
        assert report["epochs_run"] == 1
        assert report["num_domains"] == 1
        trace = pd.read_csv(prefix.with_name("run.trace.csv"))
        assert len(trace) == 1
        manifest = json.loads(prefix.with_name("run.manifest.json").read_text(encoding="utf-8"))
        assert manifest["config"]["train"]["max_epochs"] == 1

    async def test_missing_data_dir(self, tmp_path):
        code = await main(["train", "--data", str(tmp_path / "nope"), "--out", str(tmp_path / "m")])
        assert code == 1

    async def test_level_needs_lidar_input(self, tmp_path, data_dir):
        code = await main(["train", "--data", str(data_dir), "--level", "1", "--max-epochs", "1",
                           "--out", str(tmp_path / "m")])
        assert code == 1


class TestCertify:
    @pytest.fixture
    def inputs(self, tmp_path):
        model = _linear_model(tmp_path / "linear.json")
        domains = tmp_path / "domains.json"
        save_domains([SafetyDomain.create([0.5, 0.5], [1.0, 1.0], [1])], 2, domains)
        return model, domains

    async def test_certified(self, tmp_path, inputs):
        model, domains = inputs
        out = tmp_path / "cert.json"
        code = await main(["certify", "--model", str(model), "--domains", str(domains), "--delta", "0.2",
                           "--out", str(out)])
        assert code == 0
        report = json.loads(out.read_text(encoding="utf-8"))
        assert report["all_certified"]
        # 最坏情况 logits 为 (-1, 1)
        assert report["safety_bound"] == pytest.approx(np.log1p(np.exp(-2.0)), rel=1e-4)

    async def test_not_certified(self, tmp_path, inputs):
        model, domains = inputs
        out = tmp_path / "cert.json"
        code = await main(["certify", "--model", str(model), "--domains", str(domains), "--delta", "0.1",
                           "--out", str(out)])
        assert code == 3
        assert json.loads(manifest_path(out).read_text(encoding="utf-8"))["exit_code"] == 3

    async def test_missing_model(self, tmp_path, inputs):
        _, domains = inputs
        code = await main(["certify", "--model", str(tmp_path / "missing.json"), "--domains", str(domains)])
        assert code == 1


class TestAttackAndAnalyze:
    async def test_attack_dataset(self, tmp_path, data_dir):
        model = _linear_model(tmp_path / "linear.json")
        out = tmp_path / "attack.json"
        code = await main(["attack", "--model", str(model), "--data", str(data_dir / "train.sdt"),
                           "--method", "fgsm", "--eps", "0.1", "--out", str(out)])
        assert code == 0
        report = json.loads(out.read_text(encoding="utf-8"))
        assert report["num_attacks"] == 80
        lines = (tmp_path / "attack.records.jsonl").read_text(encoding="utf-8").splitlines()
        assert len(lines) == 80

    async def test_attack_without_target(self, tmp_path):
        model = _linear_model(tmp_path / "linear.json")
        assert await main(["attack", "--model", str(model), "--out", str(tmp_path / "a.json")]) == 1

    async def test_analyze(self, tmp_path, data_dir):
        model = _linear_model(tmp_path / "linear.json")
        out = tmp_path / "analyze.json"
        code = await main(["analyze", "--model", str(model), "--data", str(data_dir / "train.sdt"),
                           "--eta", "0.5", "--epsilon", "0.3", "--out", str(out)])
        assert code == 0
        report = json.loads(out.read_text(encoding="utf-8"))
        assert "transient" in report
        assert report["theorem1"] is None


class TestScenarios:
    async def test_oracle_on_plain(self, tmp_path):
        out = tmp_path / "scenarios"
        code = await main(["eval-scenarios", "--oracle", "--scenario", str(SCENARIO_DIR / "plain.json"),
                           "--out", str(out)])
        assert code == 0
        results = json.loads((out / "results.json").read_text(encoding="utf-8"))
        assert results["scenarios"] == ["plain"]
        assert results["totals"] == {"oracle": 1}
        traj = pd.read_csv(out / "oracle" / "01_plain.csv")
        assert list(traj.columns) == ["t", "x", "y", "theta", "mode", "label"]
        assert (out / "eval-scenarios.manifest.json").exists()

    def test_scenario_grid(self):
        columns = {
            "l0": [_result("plain", True), _result("gate", False, 2)],
            "l1": [_result("plain", True), _result("gate", True, 2)],
        }
        grid = reporting.scenario_grid(columns)
        assert grid["l0"].tolist() == ["✓", "✗", "1/2"]
        assert grid["l1"].tolist()[-1] == "2/2"

    def test_grid_rejects_mismatched_order(self):
        with pytest.raises(ValueError):
            reporting.scenario_grid({"a": [_result("x", True)], "b": [_result("y", True)]})

    def test_nesting_violations(self):
        columns = {
            "l0": [_result("plain", False), _result("gate", True, 2)],
            "l1": [_result("plain", True), _result("gate", False, 2)],
            "l2": [_result("plain", True), _result("gate", False, 2)],
        }
        assert reporting.nesting_violations(columns) == [("plain", "l0", "l1")]

    def test_failure_frame(self):
        frame = reporting.failure_frame([_result("plain", True), _result("gate", False, 2)])
        assert frame["场景"].tolist() == ["gate"]
        assert frame["原因"].tolist() == ["collision"]


class TestPlotDomain:
    async def test_domain_only(self, tmp_path):
        out = tmp_path / "d.png"
        assert await main(["plot-domain", "--level", "1", "--index", "3", "--out", str(out)]) == 0
        assert out.exists()
        assert (tmp_path / "d.manifest.json").exists()

    async def test_with_attack(self, tmp_path):
        from src.tensorcore import follow_network

        model = tmp_path / "follow.json"
        save_model(follow_network(seed=1), model)
        out = tmp_path / "attacked.png"
        code = await main(["plot-domain", "--level", "2", "--model", str(model), "--steps", "2", "--out", str(out)])
        assert code == 0
        assert out.exists()

    async def test_index_out_of_range(self, tmp_path):
        assert await main(["plot-domain", "--level", "1", "--index", "240", "--out", str(tmp_path / "x.png")]) == 1


class TestManifestPath:
    def test_file_output(self, tmp_path):
        assert manifest_path(tmp_path / "run.json") == tmp_path / "run.manifest.json"
        assert manifest_path(tmp_path / "run") == tmp_path / "run.manifest.json"

    def test_directory_output(self, tmp_path):
        assert manifest_path(tmp_path, "gen-data") == tmp_path / "gen-data.manifest.json"
