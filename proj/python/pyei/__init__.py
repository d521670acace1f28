"""Multi-modal heterogeneous ensembles trained by nested cross-validation.

Thin wrapper over the C++ core. Learner and ensemble specs may be given as
names ("logistic", "mean") or dicts matching the CLI config format.
"""

import json

from ._core import (
    DataError,
    Dataset,
    EIError,
    Modality,
    SchemaError,
    TrainingError,
    UsageError,
    fmax,
    generate_synthetic,
    load_manifest,
    logistic_loss_gradient,
    roc_auc,
    stratified_k_fold,
    validate_dataset,
    write_dataset,
)
from . import _core

DEFAULT_LEARNERS = ["logistic", "tree", "forest", "knn", "gnb"]
DEFAULT_ENSEMBLES = ["mean", "median", "stacker", "greedy"]

__all__ = [
    "DataError",
    "Dataset",
    "EIError",
    "EnsembleIntegration",
    "Modality",
    "SchemaError",
    "TrainingError",
    "UsageError",
    "fit_predict",
    "fmax",
    "generate_synthetic",
    "load_manifest",
    "logistic_loss_gradient",
    "roc_auc",
    "stratified_k_fold",
    "validate_dataset",
    "write_dataset",
]


def _learner(spec):
    return json.dumps({"algorithm": spec} if isinstance(spec, str) else spec)


def _ensemble(spec):
    return json.dumps({"kind": spec} if isinstance(spec, str) else spec)


def fit_predict(learner, x, y, query, seed=0):
    """Fit one base learner on (x, y) and score `query`."""
    return _core._fit_predict(_learner(learner), x, list(y), query, seed)


class EnsembleIntegration:
    def __init__(self, k_outer=5, k_inner=5, seed=0, mode="both", workers=1):
        self._engine = _core._Engine(k_outer, k_inner, seed, mode, workers)
        self._dataset = None

    @classmethod
    def load(cls, path):
        obj = cls.__new__(cls)
        obj._engine = _core._Engine.load(str(path))
        obj._dataset = None
        return obj

    def fit_base(self, dataset, learners=None, modalities=None):
        """Train base predictors. `learners` is a list applied to every
        selected modality, or a dict modality -> list."""
        learners = DEFAULT_LEARNERS if learners is None else learners
        names = modalities or [m.name for m in dataset.modalities]
        if isinstance(learners, dict):
            assignment = [(name, [_learner(s) for s in learners[name]]) for name in names]
        else:
            assignment = [(name, [_learner(s) for s in learners]) for name in names]
        self._engine.fit_base(dataset, assignment)
        self._dataset = dataset
        return self

    def fit_ensemble(self, ensembles=None):
        specs = DEFAULT_ENSEMBLES if ensembles is None else ensembles
        self._engine.fit_ensemble([_ensemble(s) for s in specs])
        return self

    @property
    def base_summary(self):
        return self._engine.base_summary()

    @property
    def ensemble_summary(self):
        return self._engine.ensemble_summary()

    @property
    def column_keys(self):
        return self._engine.column_keys()

    @property
    def ensemble_ids(self):
        return self._engine.ensemble_ids()

    def outer_folds(self):
        """List of (train_rows, test_rows, train_matrix, test_matrix)."""
        return self._engine.outer_folds()

    def final_training_matrix(self):
        return self._engine.final_training_matrix()

    def predict(self, samples, ensemble_id):
        """`samples` maps modality name to a (q, f) array."""
        return self._engine.predict(dict(samples), ensemble_id)

    def interpret(self, ensemble_id, dataset=None, metric="auc", n_repeats=10, seed=0):
        """Ranked (modality, feature, score, rank) tuples."""
        return self._engine.interpret(dataset or self._dataset, ensemble_id, metric, n_repeats, seed)

    def save(self, path):
        self._engine.save(str(path))
