"""
FGSM / PGD 攻击测试
"""

import json

import numpy as np
import pytest

from src.attacks import (
    adversarial_accuracy,
    attack_dataset,
    attack_domains,
    fgsm,
    fgsm_batch,
    pgd_batch,
    pgd_in_box,
    pixel_epsilon,
    save_attack_records,
)
from src.certify import BoxDomain, SafetyDomain, certified_worst_case_loss
from src.models.attack_models import AttackConfig
from src.sdtrain import evaluate
from src.tensorcore import Network, Sample, mlp, spec_loss
from src.tensorcore.layers import Dense
from src.utils.exceptions import DomainError


def _linear_two_class() -> Network:
    # logit_1 - logit_0 = 2(x_0 + x_1)
    w = np.array([[-1.0, -1.0], [1.0, 1.0]], dtype=np.float32)
    return Network([Dense(w, np.zeros(2, dtype=np.float32))], 2)


class TestFGSM:
    def test_zero_epsilon_is_identity(self, toy_net, toy_dataset):
        cfg = AttackConfig(epsilon=0.0)
        adv = fgsm_batch(toy_net, toy_dataset.x, toy_dataset.y, cfg)
        assert np.array_equal(adv, toy_dataset.x)
        assert adversarial_accuracy(toy_net, toy_dataset, cfg) == evaluate(toy_net, toy_dataset)

    def test_step_direction_on_linear_model(self):
        net = _linear_two_class()
        x = np.array([0.2, 0.1], dtype=np.float32)
        adv = fgsm(net, Sample(x, 1), AttackConfig(epsilon=0.05))
        assert np.allclose(adv, x - 0.05)
        assert spec_loss(net.forward_batch(adv[None, :])[0], [1]) > spec_loss(net.forward_batch(x[None, :])[0], [1])

    def test_stays_in_ball_and_clamp(self, toy_net, rng):
        x = rng.uniform(0.0, 1.0, size=(30, 2)).astype(np.float32)
        y = rng.integers(0, 2, size=30)
        cfg = AttackConfig(epsilon=0.3, clamp=(0.0, 1.0))
        adv = fgsm_batch(toy_net, x, y, cfg)
        assert np.all(np.abs(adv - x) <= 0.3 + 1e-6)
        assert np.all(adv >= 0.0) and np.all(adv <= 1.0)

    def test_pixel_epsilon(self):
        assert pixel_epsilon(255) == pytest.approx(1.0)
        assert pixel_epsilon(8) == pytest.approx(8 / 255)

    def test_accuracy_does_not_increase_on_linear_model(self, toy_dataset):
        net = _linear_two_class()
        clean = evaluate(net, toy_dataset)
        assert adversarial_accuracy(net, toy_dataset, AttackConfig(epsilon=0.5)) <= clean
        assert adversarial_accuracy(net, toy_dataset, AttackConfig(epsilon=5.0)) == 0.0


class TestPGD:
    def test_never_exceeds_certified_bound(self):
        for i in range(100):
            rng = np.random.default_rng(i)
            net = mlp([6, 10, 4], seed=i)
            center = rng.normal(size=6)
            half = rng.uniform(0.01, 0.4, size=6)
            box = BoxDomain(center - half, center + half)
            acceptable = {int(rng.integers(0, 4))}
            _, loss = pgd_in_box(net, box, acceptable, AttackConfig(steps=10, seed=i))
            assert loss <= certified_worst_case_loss(net, box, acceptable) + 1e-4

    def test_result_stays_inside_box(self, toy_net, rng):
        lower = rng.normal(size=(8, 2)).astype(np.float32)
        upper = lower + 0.3
        masks = np.zeros((8, 2), dtype=bool)
        masks[:, 0] = True
        x, losses = pgd_batch(toy_net, lower, upper, masks, AttackConfig(steps=15))
        assert np.all(x >= lower) and np.all(x <= upper)
        assert losses.shape == (8,)

    def test_improves_on_start_point(self, toy_net):
        box = BoxDomain([-0.5, -0.5], [0.5, 0.5])
        cfg = AttackConfig(steps=20, random_init=False)
        center_loss = spec_loss(toy_net.forward_batch(box.center[None, :].astype(np.float32))[0], [0])
        _, loss = pgd_in_box(toy_net, box, [0], cfg)
        assert loss >= center_loss - 1e-6

    def test_deterministic_given_seed(self, toy_net):
        box = BoxDomain([-1.0, -1.0], [1.0, 1.0])
        a = pgd_in_box(toy_net, box, [1], AttackConfig(steps=5, seed=7))
        b = pgd_in_box(toy_net, box, [1], AttackConfig(steps=5, seed=7))
        assert np.array_equal(a[0], b[0])
        assert a[1] == b[1]

    def test_clamp_without_overlap(self, toy_net):
        box = BoxDomain([2.0, 2.0], [3.0, 3.0])
        with pytest.raises(DomainError):
            pgd_in_box(toy_net, box, [0], AttackConfig(clamp=(0.0, 1.0)))


class TestEvaluation:
    def test_attack_dataset_records(self, toy_net, toy_dataset, tmp_path):
        records = attack_dataset(toy_net, toy_dataset, AttackConfig(epsilon=0.2, steps=5), "pgd")
        assert [r.sample_index for r in records] == list(range(len(toy_dataset)))
        assert all(r.success == (r.attacked_label != int(y)) for r, y in zip(records, toy_dataset.y))
        path = tmp_path / "records.jsonl"
        save_attack_records(records, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert len(lines) == len(records)
        assert json.loads(lines[0])["sample_index"] == 0

    def test_attack_domains_success_flag(self):
        net = _linear_two_class()
        domains = [
            SafetyDomain.create([0.5, 0.5], [1.0, 1.0], [1]),
            SafetyDomain.create([-0.2, -0.2], [0.2, 0.2], [1]),
        ]
        records = attack_domains(net, domains, AttackConfig(steps=10, random_init=False))
        assert [r.sample_index for r in records] == [0, 1]
        assert not records[0].success
        assert records[1].success
        assert records[1].attacked_label == 0
