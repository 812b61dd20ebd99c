import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gradcheck import hybrid_case
from schmidt_circuits import dataio, hybrid


class TestFolds:
    def test_balanced(self):
        labels = np.repeat([0, 1], 50)
        for _, va in hybrid.stratified_folds(labels, 5, seed=0):
            assert np.bincount(labels[va]).tolist() == [10, 10]

    def test_deterministic(self):
        labels = np.random.default_rng(0).integers(0, 3, 60)
        a = hybrid.stratified_folds(labels, 5, seed=4)
        b = hybrid.stratified_folds(labels, 5, seed=4)
        assert all(np.array_equal(x[1], y[1]) for x, y in zip(a, b))

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.integers(0, 3), min_size=20, max_size=120), st.integers(2, 5), st.integers(0, 99))
    def test_partition(self, raw, folds, seed):
        labels = np.array(raw)
        if np.bincount(labels)[np.unique(labels)].min() < folds:
            return
        splits = hybrid.stratified_folds(labels, folds, seed)
        val = np.concatenate([va for _, va in splits])
        assert sorted(val.tolist()) == list(range(len(labels)))
        for tr, va in splits:
            assert not set(tr) & set(va)
            assert len(tr) + len(va) == len(labels)
            for c in np.unique(labels):
                expected = np.sum(labels == c) / folds
                assert abs(np.sum(labels[va] == c) - expected) <= 1

    def test_small_class(self):
        with pytest.raises(ValueError, match="fewer than 5"):
            hybrid.stratified_folds(np.array([0] * 10 + [1] * 3), 5)


class TestCounts:
    @pytest.mark.parametrize("name,total", [("iris", 2565), ("breast_cancer", 2734), ("wine", 2695)])
    def test_hybrid_totals(self, name, total):
        q, c, t = hybrid.count_parameters(hybrid.ExperimentConfig(name))
        assert t == total == q + c

    def test_classical_modes(self):
        assert hybrid.count_parameters(hybrid.ExperimentConfig("iris", mode="classical-original")) == (0, 2691, 2691)
        assert hybrid.count_parameters(hybrid.ExperimentConfig("digits", mode="classical-reduced")) == (0, 6762, 6762)

    def test_k_override(self):
        assert hybrid.count_parameters(hybrid.ExperimentConfig("ionosphere", k=2))[0] == 14


class TestConfig:
    def test_bad_mode(self):
        with pytest.raises(ValueError):
            hybrid.ExperimentConfig("iris", mode="quantum")

    def test_bad_folds(self):
        with pytest.raises(ValueError):
            hybrid.ExperimentConfig("iris", folds=1)

    def test_sample_floor(self):
        with pytest.raises(ValueError, match="max_samples"):
            hybrid.run(hybrid.ExperimentConfig("iris", max_samples=10))

    def test_regression_rejected(self, tmp_path, monkeypatch):
        dataio.write_csv(tmp_path / "diabetes.csv", np.ones((20, 10)), np.linspace(0, 1, 20))
        monkeypatch.setenv(dataio.DATA_DIR_ENV, str(tmp_path))
        with pytest.warns(UserWarning):
            with pytest.raises(ValueError, match="regression"):
                hybrid.run(hybrid.ExperimentConfig("diabetes"))

    def test_mode_guards(self):
        with pytest.raises(ValueError):
            hybrid.run_classical(hybrid.ExperimentConfig("iris"))
        with pytest.raises(ValueError):
            hybrid.run_hybrid(hybrid.ExperimentConfig("iris", mode="classical-original"))


def test_end_to_end_chain_rule_two_qubits():
    errors = [hybrid_case(seed, n=2) for seed in range(20)]
    assert max(errors) <= 1e-3


def test_end_to_end_chain_rule_random():
    assert max(hybrid_case(seed) for seed in range(100, 160)) <= 1e-3


def test_separable_synthetic():
    ds = dataio.make_classification(dataio.SyntheticSpec(n=3, separation=6.0, samples=300, seed=2))
    cfg = hybrid.ExperimentConfig("sep", mode="classical-original", epochs=30, data=ds)
    reports = hybrid.run_classical(cfg)
    assert hybrid.summarize(reports)["mean_acc"] >= 0.99


def test_fold_reports_and_results(tmp_path):
    ds = dataio.make_classification(dataio.SyntheticSpec(n=2, samples=60, seed=3))
    cfg = hybrid.ExperimentConfig("toy", mode="hybrid", k=2, folds=3, epochs=4, data=ds)
    reports = hybrid.run_hybrid(cfg)
    assert len(reports) == 3
    for r in reports:
        assert r.k == 2 and r.quantum_params == 2 * 1 + 2 * 2
        assert len(r.train_loss) == len(r.val_acc) == 4
        assert 0 <= r.final_acc <= 1
    summary = hybrid.write_results(reports, cfg, tmp_path)
    acc = np.array([r.final_acc for r in reports])
    assert summary["mean_acc"] == pytest.approx(acc.mean())
    assert summary["std_acc"] == pytest.approx(acc.std(ddof=0))
    assert (tmp_path / "curves.csv").read_text().count("\n") == 1 + 1 + 3 * 4


def test_per_fold_k_from_training_mean():
    # unregistered data: k comes from each fold's training mean vector
    ds = dataio.make_classification(dataio.SyntheticSpec(n=3, samples=50, seed=4))
    reports = hybrid.run(hybrid.ExperimentConfig("toy", mode="classical-reduced", folds=2, epochs=2, data=ds))
    vectors, _ = dataio.to_vectors(ds)
    folds = hybrid.stratified_folds(ds.labels, 2, 0)
    assert [r.k for r in reports] == [hybrid.select_k(vectors[tr])[0] for tr, _ in folds]


def test_frozen_quantum_ablation():
    joint = hybrid.summarize(hybrid.run(hybrid.ExperimentConfig("iris")))["mean_acc"]
    frozen = hybrid.summarize(hybrid.run(hybrid.ExperimentConfig("iris", freeze_quantum=True)))["mean_acc"]
    assert frozen <= joint + 0.05


def test_wine_reduced_accuracy():
    # raw wine features are dominated by one column (proline); per-feature
    # min-max scaling is what keeps the reduced representation informative
    reports = hybrid.run_classical(hybrid.ExperimentConfig("wine", mode="classical-reduced", scaling="minmax"))
    acc = hybrid.summarize(reports)["mean_acc"]
    assert 0.80 <= acc <= 0.95
