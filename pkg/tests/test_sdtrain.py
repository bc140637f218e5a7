"""
安全域训练测试
"""

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

from src.certify import SafetyDomain, safety_bound
from src.models.train_models import TrainConfig
from src.sdtrain import (
    check_non_conflicting,
    confusion_matrix,
    empirical_risk_grad,
    eps_ball_domains,
    evaluate,
    fgsm_training_config,
    per_sample_losses,
    safety_term_grad,
    save_trace_csv,
    train,
)
from src.tensorcore import Dataset, mlp
from src.utils.exceptions import ConflictError, DomainError


def _config(**kwargs) -> TrainConfig:
    base = dict(learning_rate=0.1, batch_train=16, batch_safety=2, min_epochs=2, max_epochs=2, seed=5)
    base.update(kwargs)
    return TrainConfig(**base)


def _params_equal(a, b) -> bool:
    return all(np.array_equal(p, q) for p, q in zip(a.params(), b.params()))


class TestConfig:
    def test_lambda_alias(self):
        cfg = TrainConfig.model_validate({"lambda": 0.5})
        assert cfg.lambda_ == 0.5
        assert cfg.model_dump(by_alias=True)["lambda"] == 0.5

    def test_max_below_min(self):
        with pytest.raises(ValidationError):
            TrainConfig(min_epochs=5, max_epochs=3)

    def test_non_positive_delta(self):
        with pytest.raises(ValidationError):
            TrainConfig(delta=0.0)


class TestConflicts:
    def test_point_inside_domain_with_wrong_label(self, toy_dataset):
        domains = [SafetyDomain.create([0.5, 0.5], [1.5, 1.5], [0])]
        with pytest.raises(ConflictError) as info:
            check_non_conflicting(toy_dataset, domains)
        assert info.value.domain_index == 0
        assert toy_dataset.y[info.value.sample_index] == 1

    def test_train_checks_conflicts(self, toy_net, toy_dataset):
        domains = [SafetyDomain.create([0.5, 0.5], [1.5, 1.5], [0])]
        with pytest.raises(ConflictError):
            train(toy_net, toy_dataset, domains, _config(), progress=False)

    def test_consistent_domains_pass(self, toy_dataset):
        check_non_conflicting(toy_dataset, [SafetyDomain.create([0.5, 0.5], [1.5, 1.5], [1])])


class TestDegenerateCases:
    def test_zero_lambda_equals_empty_domains(self, toy_net, toy_dataset):
        domains = [SafetyDomain.create([-0.2, -0.2], [0.2, 0.2], [0])]
        net_a, report_a = train(toy_net, toy_dataset, domains,
                                _config(lambda_=0.0, delta=1e-12, min_epochs=2, max_epochs=8), progress=False)
        net_b, report_b = train(toy_net, toy_dataset, [], _config(delta=1e-12, min_epochs=2, max_epochs=8),
                                progress=False)
        assert report_a.epochs_run == report_b.epochs_run == 2
        assert _params_equal(net_a, net_b)
        # 认证界仍然计算并报告
        assert np.isfinite(report_a.final_safety_bound)
        assert report_a.trace[-1].certified_bound == report_a.final_safety_bound

    def test_empty_domains_stop_at_min_epochs(self, toy_net, toy_dataset):
        _, report = train(toy_net, toy_dataset, [], _config(min_epochs=2, max_epochs=10), progress=False)
        assert report.epochs_run == 2
        assert report.final_safety_bound == 0.0
        assert report.converged
        assert report.num_domains == 0

    def test_large_delta_stops_at_min_epochs(self, toy_net, toy_dataset):
        domains = [SafetyDomain.create([-1.2, -1.2], [-0.8, -0.8], [0])]
        _, report = train(toy_net, toy_dataset, domains, _config(delta=1e6, min_epochs=2, max_epochs=10),
                          progress=False)
        assert report.epochs_run == 2
        assert report.converged

    def test_unreachable_delta_runs_to_max(self, toy_net, toy_dataset):
        # 两类输出的规范损失恒为正，δ 极小时无法收敛
        domains = [SafetyDomain.create([-3.0, -3.0], [-2.5, -2.5], [0])]
        _, report = train(toy_net, toy_dataset, domains, _config(delta=1e-12, min_epochs=1, max_epochs=3),
                          progress=False)
        assert report.epochs_run == 3
        assert not report.converged
        assert len(report.trace) == 3

    def test_training_is_deterministic(self, toy_net, toy_dataset):
        domains = [SafetyDomain.create([-0.2, -0.2], [0.2, 0.2], [0, 1])]
        a, _ = train(toy_net, toy_dataset, domains, _config(), progress=False)
        b, _ = train(toy_net, toy_dataset, domains, _config(), progress=False)
        assert _params_equal(a, b)


class TestCertifiedTraining:
    def test_bound_decreases(self, toy_dataset):
        net = mlp([2, 16, 2], seed=11)
        domains = [
            SafetyDomain.create([-1.3, -1.3], [-0.7, -0.7], [0]),
            SafetyDomain.create([0.7, 0.7], [1.3, 1.3], [1]),
        ]
        before = safety_bound(net, domains)
        cfg = _config(lambda_=1.0, learning_rate=0.2, min_epochs=30, max_epochs=30, delta=1e-3)
        trained, report = train(net, toy_dataset, domains, cfg, progress=False)
        after = safety_bound(trained, domains)
        assert after < before
        assert report.final_safety_bound == pytest.approx(after)
        assert report.train_accuracy >= 0.9
        assert report.trace[-1].certified_bound == pytest.approx(after)

    def test_report_side_condition(self, toy_net, toy_dataset):
        domains = [SafetyDomain.create([-1.2, -1.2], [-0.8, -0.8], [0])]
        _, report = train(toy_net, toy_dataset, domains, _config(delta=1e6), progress=False)
        assert report.total_training_loss is not None
        assert report.delta_lower_bounds_loss is False

    def test_safety_check_period(self, toy_net, toy_dataset):
        domains = [SafetyDomain.create([-3.0, -3.0], [-2.5, -2.5], [0])]
        cfg = _config(delta=1e-12, min_epochs=1, max_epochs=4, safety_check_period=2)
        _, report = train(toy_net, toy_dataset, domains, cfg, progress=False)
        evaluated = [t.certified_bound is not None for t in report.trace]
        assert evaluated == [False, True, False, True]

    def test_ramp_schedule_runs(self, toy_net, toy_dataset):
        domains = [SafetyDomain.create([-1.3, -1.3], [-0.7, -0.7], [0])]
        _, report = train(toy_net, toy_dataset, domains, _config(ramp_epochs=2, max_epochs=3, min_epochs=3),
                          progress=False)
        assert report.epochs_run == 3

    def test_trace_csv(self, toy_net, toy_dataset, tmp_path):
        domains = [SafetyDomain.create([-1.2, -1.2], [-0.8, -0.8], [0])]
        _, report = train(toy_net, toy_dataset, domains, _config(), progress=False)
        path = tmp_path / "run.trace.csv"
        save_trace_csv(report, path)
        df = pd.read_csv(path)
        assert list(df.columns) == ["epoch", "train_loss", "safety_term", "certified_bound"]
        assert df["epoch"].tolist() == [1, 2]


class TestObjectives:
    def test_safety_term_needs_domains(self, toy_net):
        with pytest.raises(DomainError):
            safety_term_grad(toy_net, [])

    def test_empirical_term_not_above_certified(self, toy_net):
        domains = [SafetyDomain.create([-0.5, -0.5], [0.5, 0.5], [0])]
        certified, _ = safety_term_grad(toy_net, domains, "certified")
        empirical, _ = safety_term_grad(toy_net, domains, "empirical")
        assert empirical <= certified + 1e-4

    def test_empirical_risk_is_mean_loss(self, toy_net, toy_dataset):
        loss, grad = empirical_risk_grad(toy_net, toy_dataset)
        assert loss == pytest.approx(per_sample_losses(toy_net, toy_dataset).mean(), rel=1e-6)
        assert grad.input is None


class TestAdversarialTraining:
    def test_eps_ball_domains(self, toy_dataset):
        domains = eps_ball_domains(toy_dataset, 0.1)
        assert len(domains) == len(toy_dataset)
        for d, sample in zip(domains[:5], toy_dataset):
            assert d.acceptable == frozenset({sample.y})
            assert d.box.contains(sample.x)
        check_non_conflicting(toy_dataset, domains)

    def test_eps_ball_with_clamp(self, rng):
        ds = Dataset(rng.uniform(0.0, 1.0, size=(10, 2)), [0] * 10, 2)
        domains = eps_ball_domains(ds, 0.1, clamp=(0.0, 1.0))
        assert all(np.all(d.lower >= 0.0) and np.all(d.upper <= 1.0) for d in domains)

    def test_fgsm_training_config(self):
        cfg = fgsm_training_config(TrainConfig(), 0.05)
        assert cfg.inner_mode == "empirical"
        assert cfg.attack.steps == 1
        assert not cfg.attack.random_init

    def test_empirical_training_smoke(self, toy_net, toy_dataset):
        domains = eps_ball_domains(toy_dataset, 0.05)
        cfg = fgsm_training_config(_config(delta=1e6), 0.05)
        trained, report = train(toy_net, toy_dataset, domains, cfg, progress=False)
        assert report.inner_mode == "empirical"
        assert report.epochs_run == 2
        assert 0.0 <= evaluate(trained, toy_dataset) <= 1.0


class TestMetrics:
    def test_confusion_matrix_is_consistent(self, toy_net, toy_dataset):
        matrix = confusion_matrix(toy_net, toy_dataset)
        assert matrix.shape == (2, 2)
        assert matrix.sum() == len(toy_dataset)
        assert np.trace(matrix) / len(toy_dataset) == pytest.approx(evaluate(toy_net, toy_dataset))
        assert matrix.sum(axis=1).tolist() == toy_dataset.label_histogram().tolist()
