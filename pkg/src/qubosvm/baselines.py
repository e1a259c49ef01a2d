"""Classical reference classifiers behind a uniform fit/predict contract.

All kinds consume a :class:`~qubosvm.svm.TrainingSet` with +/-1 labels and
emit +/-1 labels.  Fitting is delegated to scikit-learn; the JSON form
stores the kind, parameters, seed, and training data, and deserialization
refits, which reproduces the model exactly because fitting is seeded.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.ensemble import RandomForestClassifier
from sklearn.linear_model import LogisticRegression
from sklearn.naive_bayes import GaussianNB
from sklearn.neighbors import KNeighborsClassifier
from sklearn.svm import SVC
from sklearn.tree import DecisionTreeClassifier

from .svm import TrainingSet

BASELINE_KINDS = (
    "knn",
    "gaussian_nb",
    "logistic_regression",
    "decision_tree",
    "random_forest",
    "svm_linear",
    "svm_rbf",
)

DEFAULT_PARAMS: dict[str, dict] = {
    "knn": {"n_neighbors": 3},
    "gaussian_nb": {"var_smoothing": 1e-9},
    "logistic_regression": {"tol": 1e-6, "max_iter": 10_000, "C": 1.0},
    "decision_tree": {"max_depth": 4},
    "random_forest": {"n_estimators": 50, "max_depth": 4},
    "svm_linear": {"C": 1.0},
    "svm_rbf": {"C": 1.0, "gamma": "scale"},
}


def _build_estimator(kind: str, params: dict, seed: int):
    if kind == "knn":
        return KNeighborsClassifier(**params)
    if kind == "gaussian_nb":
        return GaussianNB(**params)
    if kind == "logistic_regression":
        return LogisticRegression(random_state=seed, **params)
    if kind == "decision_tree":
        return DecisionTreeClassifier(random_state=seed, **params)
    if kind == "random_forest":
        return RandomForestClassifier(random_state=seed, **params)
    if kind == "svm_linear":
        return SVC(kernel="linear", random_state=seed, **params)
    if kind == "svm_rbf":
        return SVC(kernel="rbf", random_state=seed, **params)
    raise ValueError(f"unknown baseline kind {kind!r}; expected one of {BASELINE_KINDS}")


@dataclass
class BaselineModel:
    """A fitted classical classifier."""

    kind: str
    params: dict
    seed: int
    train: TrainingSet
    estimator: object = field(repr=False)

    def predict(self, xs) -> np.ndarray:
        xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
        if xs.shape[1] != self.train.n_features:
            raise ValueError(
                f"expected {self.train.n_features} features, got {xs.shape[1]}"
            )
        if hasattr(self.estimator, "decision_function"):
            # shared tie rule: a decision value of exactly 0 reads as +1
            scores = self.estimator.decision_function(xs)
            return np.where(scores >= 0, 1, -1)
        return np.asarray(self.estimator.predict(xs), dtype=np.int64)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "params": self.params,
            "seed": self.seed,
            "train": self.train.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "BaselineModel":
        train = TrainingSet.from_json(obj["train"])
        return fit_baseline(obj["kind"], train, seed=int(obj["seed"]), params=obj["params"])


def fit_baseline(
    kind: str,
    train: TrainingSet,
    seed: int = 0,
    params: dict | None = None,
) -> BaselineModel:
    """Fit one classical model; deterministic for a fixed seed.

    Single-class training sets are rejected for every kind except
    gaussian_nb, which degenerates gracefully to its prior.
    """
    if kind not in BASELINE_KINDS:
        raise ValueError(f"unknown baseline kind {kind!r}; expected one of {BASELINE_KINDS}")
    merged = dict(DEFAULT_PARAMS[kind])
    merged.update(params or {})
    if kind == "knn":
        merged["n_neighbors"] = min(merged["n_neighbors"], train.n_samples)
    if not train.has_both_classes() and kind != "gaussian_nb":
        raise ValueError(f"{kind} requires samples from both classes")
    estimator = _build_estimator(kind, merged, seed)
    estimator.fit(train.samples, train.labels)
    return BaselineModel(kind=kind, params=merged, seed=seed, train=train, estimator=estimator)


def save_baseline(model: BaselineModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model.to_json()))


def load_baseline(path: str | Path) -> BaselineModel:
    return BaselineModel.from_json(json.loads(Path(path).read_text()))
