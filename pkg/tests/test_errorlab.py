"""
误差剖面测试：与逐条穷举的参考实现对照
"""

import numpy as np
import pandas as pd
import pytest

from src.certify import SafetyDomain
from src.errorlab import (
    IndexDomain,
    analyze,
    boundary_localization,
    conditional_errors,
    conditional_from_losses,
    histogram_frame,
    inside_any,
    nearest_domain_distance,
    neighbor_lists,
    save_histogram_csv,
    singleton_candidates,
    singleton_consistent,
    systematic_error,
    theorem1_check,
    transient_errors,
    transient_from_losses,
    whole_domain_exceeds,
)
from src.errorlab.profiles import sample_losses
from src.models.error_models import BoundaryStats, ErrorAnalysisConfig
from src.sdtrain import per_sample_losses
from src.tensorcore import Dataset, Network, mlp
from src.tensorcore.layers import Dense
from src.utils.exceptions import DomainError, EmptyDatasetError


def _cfg(**kwargs) -> ErrorAnalysisConfig:
    base = dict(eta=1.0, epsilon=0.15)
    base.update(kwargs)
    return ErrorAnalysisConfig(**base)


def _brute_transient(x, losses, eta, eps):
    x = np.asarray(x, dtype=np.float64)
    out = []
    for i in range(len(x)):
        if losses[i] <= eta:
            continue
        nbrs = [j for j in range(len(x)) if 0 < np.abs(x[i] - x[j]).max() <= eps]
        if nbrs and all(losses[j] < eta for j in nbrs):
            out.append(i)
    return out


def _brute_conditional(x, losses, boxes, eta):
    out = []
    for cid, (lo, up) in enumerate(boxes):
        inside = [i for i in range(len(x)) if np.all(x[i] >= lo) and np.all(x[i] <= up)]
        outside = [i for i in range(len(x)) if i not in inside]
        if not inside or not outside:
            continue
        if np.mean(losses[inside]) > eta and np.mean(losses[outside]) < eta:
            out.append(cid)
    return out


class TestTransient:
    def test_hand_example(self):
        x = np.array([[0.0], [0.1], [0.2], [5.0], [5.05], [10.0]], dtype=np.float32)
        losses = np.array([0.1, 2.0, 0.1, 2.0, 2.0, 2.0])
        transient, isolated, undersampled = transient_from_losses(x, losses, _cfg())
        assert transient == [1]
        assert isolated == [5]
        assert undersampled == []

    def test_matches_brute_force(self):
        for seed in range(10):
            rng = np.random.default_rng(seed)
            x = rng.uniform(0, 1, size=(60, 2)).astype(np.float32)
            losses = rng.exponential(0.5, size=60)
            transient, _, _ = transient_from_losses(x, losses, _cfg(eta=0.8, epsilon=0.12))
            assert transient == _brute_transient(x, losses, 0.8, 0.12)

    def test_min_neighbors(self):
        x = np.array([[0.0], [0.1], [1.0], [1.1], [1.05]], dtype=np.float32)
        losses = np.array([2.0, 0.1, 2.0, 0.1, 0.1])
        transient, isolated, undersampled = transient_from_losses(x, losses, _cfg(min_neighbors=2))
        assert transient == [2]
        assert isolated == []
        assert undersampled == [0]

    def test_high_loss_neighbor_is_not_undersampled(self):
        x = np.array([[0.0], [0.1]], dtype=np.float32)
        losses = np.array([2.0, 2.0])
        transient, isolated, undersampled = transient_from_losses(x, losses, _cfg(min_neighbors=2))
        assert (transient, isolated, undersampled) == ([], [], [])

    def test_duplicates_are_not_neighbors(self):
        x = np.array([[0.0], [0.0], [0.1]], dtype=np.float32)
        nbrs = neighbor_lists(x, [0], 0.15)
        assert nbrs[0].tolist() == [2]

    def test_l2_norm(self):
        x = np.array([[0.0, 0.0], [0.1, 0.1]], dtype=np.float32)
        assert neighbor_lists(x, [0], 0.12, "l_inf")[0].tolist() == [1]
        assert neighbor_lists(x, [0], 0.12, "l2")[0].tolist() == []

    def test_on_network(self, toy_net, toy_dataset):
        cfg = _cfg(eta=0.5, epsilon=0.3)
        losses = per_sample_losses(toy_net, toy_dataset)
        expected = _brute_transient(toy_dataset.x, losses, 0.5, 0.3)
        assert transient_errors(toy_net, toy_dataset, cfg) == expected


class TestSystematic:
    def test_all_high(self, toy_net, toy_dataset):
        losses = per_sample_losses(toy_net, toy_dataset)
        assert systematic_error(toy_net, toy_dataset, _cfg(eta=losses.min() / 2))
        assert not systematic_error(toy_net, toy_dataset, _cfg(eta=losses.max() + 1))

    def test_whole_domain_mean(self):
        x = np.zeros((3, 1), dtype=np.float32)
        # 有一个样本低于 η，不是系统误差，但整域平均仍 > η
        assert whole_domain_exceeds(x, np.array([2.0, 2.0, 0.1]), 1.0)
        assert not whole_domain_exceeds(x, np.array([2.0, 0.1, 0.1]), 1.0)
        assert not whole_domain_exceeds(np.zeros((0, 1)), np.zeros(0), 1.0)

    def test_systematic_implies_whole_domain_flag(self, toy_net, toy_dataset):
        losses = per_sample_losses(toy_net, toy_dataset)
        for eta in (losses.min() / 2, float(np.median(losses)), losses.max() + 1):
            report = analyze(toy_net, toy_dataset, [], _cfg(eta=eta))
            assert report.systematic == bool(np.all(losses > eta))
            assert report.systematic_as_conditional == (losses.mean() > eta)
            if report.systematic:
                assert report.systematic_as_conditional

    def test_zero_one_loss(self, toy_net, toy_dataset):
        losses = sample_losses(toy_net, toy_dataset, "zero_one")
        assert set(np.unique(losses)).issubset({0.0, 1.0})


class TestConditional:
    def test_matches_brute_force(self):
        for seed in range(10):
            rng = np.random.default_rng(100 + seed)
            x = rng.uniform(0, 1, size=(80, 2)).astype(np.float32)
            losses = np.where(x[:, 0] < 0.3, 2.0, 0.1) + rng.normal(0, 0.05, size=80)
            boxes = []
            for _ in range(6):
                lo = rng.uniform(0, 0.7, size=2)
                boxes.append((lo, lo + rng.uniform(0.05, 0.5, size=2)))
            candidates = [SafetyDomain.create(lo, up, [0]) for lo, up in boxes]
            found, _ = conditional_from_losses(x, losses, candidates, 1.0)
            brute = _brute_conditional(x, losses, [(c.lower, c.upper) for c in candidates], 1.0)
            assert [e.domain_id for e in found] == brute

    def test_empty_side_is_skipped(self):
        x = np.array([[0.0], [1.0]], dtype=np.float32)
        losses = np.array([2.0, 0.1])
        candidates = [
            SafetyDomain.create([5.0], [6.0], [0]),
            SafetyDomain.create([-1.0], [2.0], [0]),
            SafetyDomain.create([-0.5], [0.5], [0]),
        ]
        found, skipped = conditional_from_losses(x, losses, candidates, 1.0)
        assert [s.domain_id for s in skipped] == [0, 1]
        assert [e.domain_id for e in found] == [2]
        assert found[0].mean_inside == pytest.approx(2.0)
        assert found[0].n_outside == 1

    def test_index_domain_with_complement(self):
        x = np.zeros((4, 1), dtype=np.float32)
        losses = np.array([3.0, 0.1, 0.2, 5.0])
        found, _ = conditional_from_losses(x, losses, [IndexDomain((0,), (1, 2))], 1.0)
        assert len(found) == 1
        assert found[0].n_outside == 2

    def test_transient_errors_are_singleton_conditional_errors(self):
        for seed in range(5):
            rng = np.random.default_rng(seed)
            x = rng.uniform(0, 1, size=(50, 2)).astype(np.float32)
            losses = rng.exponential(0.5, size=50)
            cfg = _cfg(eta=0.8, epsilon=0.15)
            transient, _, _ = transient_from_losses(x, losses, cfg)
            assert singleton_consistent(x, losses, transient, cfg)
            found, _ = conditional_from_losses(x, losses, singleton_candidates(x, transient, 0.15), 0.8)
            assert len(found) == len(transient)

    def test_network_wrapper(self, toy_net, toy_dataset):
        candidates = [SafetyDomain.create([-3.0, -3.0], [0.0, 0.0], [0])]
        cfg = _cfg(eta=0.5)
        found, skipped = conditional_errors(toy_net, toy_dataset, candidates, cfg)
        losses = per_sample_losses(toy_net, toy_dataset)
        assert [e.domain_id for e in found] == _brute_conditional(
            toy_dataset.x, losses, [(c.lower, c.upper) for c in candidates], 0.5
        )
        assert skipped == []


class TestDomainLosses:
    def _domains(self):
        return [SafetyDomain.create([-1.5, -1.5], [-0.5, -0.5], [0])]

    def test_theorem1_check_matches_manual(self, toy_net, toy_dataset):
        domains = self._domains()
        result = theorem1_check(toy_net, toy_dataset, domains, training_loss=0.5, delta=0.1)
        inside = np.all((toy_dataset.x >= -1.5) & (toy_dataset.x <= -0.5), axis=1)
        losses = per_sample_losses(toy_net, toy_dataset)
        assert result.n_in == int(inside.sum())
        assert result.mean_in == pytest.approx(losses[inside].mean())
        assert result.mean_out == pytest.approx(losses[~inside].mean())
        assert result.holds == (result.mean_in <= result.mean_out)
        assert result.training_loss_ge_delta is True

    def test_theorem1_check_empty_side(self, toy_net, toy_dataset):
        with pytest.raises(EmptyDatasetError):
            theorem1_check(toy_net, toy_dataset, [SafetyDomain.create([9.0, 9.0], [10.0, 10.0], [0])])

    def test_inside_any_and_distance(self):
        x = np.array([[0.5, 0.5], [2.0, 0.5], [5.0, 5.0]], dtype=np.float32)
        domains = [SafetyDomain.create([0.0, 0.0], [1.0, 1.0], [0]), SafetyDomain.create([4.0, 4.0], [4.5, 4.5], [0])]
        assert inside_any(x, domains).tolist() == [True, False, False]
        assert np.allclose(nearest_domain_distance(x, domains), [0.0, 1.0, 0.5])

    def test_distance_without_domains(self):
        with pytest.raises(DomainError):
            nearest_domain_distance(np.zeros((1, 2)), [])

    def test_boundary_same_network_has_no_new_errors(self, toy_net, toy_dataset):
        stats = boundary_localization(toy_net, toy_net, toy_dataset, self._domains(), _cfg())
        assert stats.n_new_errors == 0
        assert stats.counts == []

    def test_boundary_histogram(self, toy_dataset):
        good = mlp([2, 8, 2], seed=1)
        bad = good.with_params([p * 0 for p in good.params()][:-1] + [np.array([5.0, -5.0], dtype=np.float32)])
        cfg = _cfg(eta=0.5, histogram_bins=4, locality_K=10.0)
        stats = boundary_localization(bad, good, toy_dataset, self._domains(), cfg)
        assert stats.n_new_errors == len(stats.error_indices) == len(stats.distances)
        assert sum(stats.counts) == stats.n_new_errors
        assert len(stats.bin_edges) == 5
        assert stats.fraction_within_K == pytest.approx(1.0)

    def test_new_errors_are_loss_increases_above_eta(self, toy_dataset):
        def constant(bias):
            return Network([Dense(np.zeros((2, 2), dtype=np.float32), np.array(bias, dtype=np.float32))], 2)

        # 两个网络都把类 0 误分为类 1，但类 0 的损失上升超过 η
        erm, sd = constant([0.0, 1.0]), constant([0.0, 5.0])
        stats = boundary_localization(sd, erm, toy_dataset, self._domains(), _cfg(eta=0.5))
        assert stats.error_indices == np.flatnonzero(toy_dataset.y == 0).tolist()
        stats = boundary_localization(sd, erm, toy_dataset, self._domains(), _cfg(eta=4.0))
        assert stats.n_new_errors == 0

    def test_histogram_csv(self, tmp_path):
        stats = BoundaryStats(bin_edges=[0.0, 0.5, 1.0], counts=[3, 1], n_new_errors=4, locality_K=1.0)
        path = tmp_path / "hist.csv"
        save_histogram_csv(stats, path)
        df = pd.read_csv(path)
        assert df.equals(histogram_frame(stats))


class TestAnalyze:
    def test_full_report(self, toy_net, toy_dataset):
        domains = [SafetyDomain.create([-1.5, -1.5], [-0.5, -0.5], [0])]
        report = analyze(toy_net, toy_dataset, domains, _cfg(eta=0.5, epsilon=0.3), baseline=toy_net,
                         training_loss=1.0, delta=0.1)
        assert report.transient == transient_errors(toy_net, toy_dataset, _cfg(eta=0.5, epsilon=0.3))
        assert report.theorem1 is not None
        assert report.boundary_stats is not None
        assert report.boundary_stats.n_new_errors == 0
        assert report.singleton_consistent

    def test_without_domains(self, toy_net, toy_dataset):
        report = analyze(toy_net, toy_dataset, [], _cfg())
        assert report.theorem1 is None
        assert report.conditional == []

    def test_empty_dataset(self, toy_net):
        with pytest.raises(EmptyDatasetError):
            analyze(toy_net, Dataset(np.zeros((0, 2)), [], 2), [], _cfg())
