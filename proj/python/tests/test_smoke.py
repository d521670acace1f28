import itertools

import numpy as np
import pytest

import pyei


def brute_auc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = sum((p > n) + 0.5 * (p == n) for p, n in itertools.product(pos, neg))
    return wins / (len(pos) * len(neg))


def test_metrics_match_pairwise_counting():
    rng = np.random.default_rng(0)
    for _ in range(200):
        n = int(rng.integers(2, 13))
        y = rng.integers(0, 2, n)
        if y.min() == y.max():
            continue
        s = rng.integers(0, 5, n) / 5.0
        assert pyei.roc_auc(s, y.tolist()) == brute_auc(s, y)
    assert pyei.roc_auc(np.array([0.1, 0.4, 0.35, 0.8]), [0, 0, 1, 1]) == 0.75
    assert pyei.fmax(np.array([0.9, 0.2, 0.6]), [1, 0, 1]) == (1.0, 0.6)


def test_gradient_against_finite_differences():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(5, 3))
    y = [0, 1, 1, 0, 1]
    w = rng.normal(size=3)
    b = 0.3

    def loss(w_, b_):
        return pyei.logistic_loss_gradient(w_, b_, x, y, 0.1)[2]

    gw, gb, _ = pyei.logistic_loss_gradient(w, b, x, y, 0.1)
    h = 1e-5
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        fd = (loss(w + e, b) - loss(w - e, b)) / (2 * h)
        assert abs(fd - gw[j]) <= 1e-6 * max(abs(fd), 1e-8)
    assert abs((loss(w, b + h) - loss(w, b - h)) / (2 * h) - gb) <= 1e-6 * max(abs(gb), 1e-8)


def test_stratified_folds():
    folds = pyei.stratified_k_fold([1] * 5 + [0] * 3, 2, seed=4)
    pos = sorted(sum(1 for f in folds[:5] if f == k) for k in range(2))
    neg = sorted(sum(1 for f in folds[5:] if f == k) for k in range(2))
    assert pos == [2, 3] and neg == [1, 2]


def test_knn_memorizes_training_set():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(20, 3))
    y = [0, 1] * 10
    scores = pyei.fit_predict({"algorithm": "knn", "params": {"k": 1}}, x, y, x)
    assert scores.tolist() == [float(v) for v in y]


def test_end_to_end_pipeline(tmp_path):
    ds = pyei.generate_synthetic(120, [(5, 2, 0.5), (5, 2, 0.5)], complementarity=1.0, seed=1)
    assert ds.n == 120 and len(ds.modalities) == 2
    ei = pyei.EnsembleIntegration(k_outer=3, k_inner=3, seed=1, workers=2)
    ei.fit_base(ds, modalities=["mod0"]).fit_base(ds, modalities=["mod1"]).fit_ensemble()
    assert len(ei.base_summary) == 10
    assert [r["name"] for r in ei.ensemble_summary] != []
    assert len(ei.ensemble_summary) == 4
    best = ei.ensemble_summary[0]["name"]

    samples = {m.name: m.features for m in ds.modalities}
    scores = ei.predict(samples, best)
    assert scores.shape == (120,)
    assert ((scores >= 0) & (scores <= 1)).all()

    path = tmp_path / "model.json"
    ei.save(path)
    loaded = pyei.EnsembleIntegration.load(path)
    assert np.array_equal(loaded.predict(samples, best), scores)

    ranking = ei.interpret(best, n_repeats=3)
    assert len(ranking) == 10
    assert ranking[0][3] == 1
    with pytest.raises(pyei.UsageError):
        loaded.interpret(best)
    assert loaded.interpret(best, dataset=ds, n_repeats=3) == ranking


def test_single_call_matches_per_modality():
    ds = pyei.generate_synthetic(60, [(3, 1, 0.5), (3, 1, 0.5)], complementarity=0.5, seed=3)
    a = pyei.EnsembleIntegration(k_outer=3, k_inner=2, seed=3).fit_base(ds, ["gnb", "tree"])
    b = pyei.EnsembleIntegration(k_outer=3, k_inner=2, seed=3)
    b.fit_base(ds, ["gnb", "tree"], modalities=["mod1"]).fit_base(ds, ["gnb", "tree"], modalities=["mod0"])
    assert np.array_equal(a.final_training_matrix(), b.final_training_matrix())
    for fa, fb in zip(a.outer_folds(), b.outer_folds()):
        assert np.array_equal(fa[2], fb[2]) and np.array_equal(fa[3], fb[3])


def test_errors_map_to_exceptions(tmp_path):
    with pytest.raises(pyei.DataError):
        pyei.roc_auc(np.array([0.1, 0.2]), [1, 1])
    with pytest.raises(pyei.UsageError):
        pyei.generate_synthetic(3, [(1, 0, 1.0)])
    bad = tmp_path / "bad.json"
    bad.write_text('{"format_version": 999}')
    with pytest.raises(pyei.SchemaError):
        pyei.EnsembleIntegration.load(bad)
    ds = pyei.generate_synthetic(20, [(2, 1, 0.5)], seed=0)
    with pytest.raises(pyei.TrainingError):
        pyei.EnsembleIntegration(2, 2).fit_base(ds, [{"algorithm": "logistic", "params": {"learning_rate": 1e300}}])
