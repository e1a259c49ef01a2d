"""Ensembles over sampled models: average voting and stacking.

A shot histogram holds up to 2^(N*K) candidate models.  Voting averages
member decision values (or hard labels) over the most frequent states;
the member count can be tuned against a validation set.  Stacking trains
a QUBO SVM on the +/-1 predictions of classical base models.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analog import ShotHistogram, key_to_bits
from .data import Dataset, evaluate_predictions
from .qubo import Bitstring
from .svm import (
    EncodingConfig,
    KernelSpec,
    SvmModel,
    TrainingSet,
    build_qubo,
    decision_values,
    model_from_state,
)


@dataclass
class RankedModels:
    """Candidate models by sampling frequency (desc), ties lexicographic."""

    entries: list[tuple[Bitstring, int, SvmModel]]

    def __len__(self) -> int:
        return len(self.entries)

    def models(self) -> list[SvmModel]:
        return [m for _, _, m in self.entries]

    def top_model(self) -> SvmModel:
        return self.entries[0][2]


def rank_models(
    hist: ShotHistogram,
    train: TrainingSet,
    cfg: EncodingConfig,
    max_models: int = 32,
) -> RankedModels:
    """Decode the most frequent distinct bitstrings into classifiers."""
    expected = train.n_samples * cfg.bits_per_alpha
    for key in hist.counts:
        if len(key) != expected:
            raise ValueError(f"histogram bitstring length {len(key)} != N*K = {expected}")
    ordered = sorted(hist.counts.items(), key=lambda kv: (-kv[1], kv[0]))[:max_models]
    entries = [
        (key_to_bits(key), count, model_from_state(key_to_bits(key), train, cfg))
        for key, count in ordered
    ]
    return RankedModels(entries)


@dataclass
class VotingEnsemble:
    """Uniform average of member outputs; ``mode`` picks what is averaged.

    ``decision`` averages decision values (default); ``label`` averages
    hard +/-1 predictions.
    """

    models: list[SvmModel]
    mode: str = "decision"

    def __post_init__(self):
        if not self.models:
            raise ValueError("ensemble needs at least one model")
        if self.mode not in ("decision", "label"):
            raise ValueError(f"unknown voting mode {self.mode!r}")

    @property
    def size(self) -> int:
        return len(self.models)

    def to_json(self) -> dict:
        return {"mode": self.mode, "models": [m.to_json() for m in self.models]}

    @classmethod
    def from_json(cls, obj: dict) -> "VotingEnsemble":
        return cls([SvmModel.from_json(m) for m in obj["models"]], obj["mode"])


def vote_values(ens: VotingEnsemble, xs) -> np.ndarray:
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    member = np.stack([decision_values(m, xs) for m in ens.models])
    if ens.mode == "label":
        member = np.where(member >= 0, 1.0, -1.0)
    return member.mean(axis=0)


def vote_predict(ens: VotingEnsemble, x) -> int:
    """Sign of the averaged member output; 0 reads as +1."""
    return 1 if vote_values(ens, np.atleast_2d(x))[0] >= 0 else -1


def vote_predict_batch(ens: VotingEnsemble, xs) -> np.ndarray:
    return np.where(vote_values(ens, xs) >= 0, 1, -1)


def optimize_ensemble_size(
    ranked: RankedModels,
    validation: Dataset,
    metric: str = "f1",
    mode: str = "decision",
) -> VotingEnsemble:
    """Smallest prefix of the ranked models maximizing a validation metric."""
    if len(ranked) == 0:
        raise ValueError("no ranked models")
    if validation.n_samples == 0:
        raise ValueError("validation set is empty")
    best_k, best_value = 1, -np.inf
    models = ranked.models()
    for k in range(1, len(models) + 1):
        ens = VotingEnsemble(models[:k], mode=mode)
        preds = vote_predict_batch(ens, validation.samples)
        value = evaluate_predictions(validation.labels, preds)[metric]
        if value > best_value + 1e-12:
            best_k, best_value = k, value
    return VotingEnsemble(models[:best_k], mode=mode)


@dataclass
class StackedModel:
    """Two-level classifier: classical bases, QUBO SVM meta-model.

    The meta-model consumes the vector of base +/-1 predictions, so its
    feature dimension equals the number of base models.
    """

    base_models: list
    meta: SvmModel

    def __post_init__(self):
        if self.meta.train.n_features != len(self.base_models):
            raise ValueError("meta feature dimension must equal the base model count")

    def to_json(self) -> dict:
        return {
            "base_models": [b.to_json() for b in self.base_models],
            "meta": self.meta.to_json(),
        }


def stacking_encoding(n_bases: int, base: float = 2.0, bits_per_alpha: int = 2,
                      xi: float = 1.0) -> EncodingConfig:
    """Encoding for the meta problem over +/-1 base predictions.

    Meta feature vectors have squared norm n_bases; the kernel scale
    1/(2*n_bases) puts the balanced one-support-pair-per-class optimum on
    the coefficient grid (alpha = 1) instead of between grid points.
    """
    return EncodingConfig(
        base=base,
        bits_per_alpha=bits_per_alpha,
        xi=xi,
        kernel=KernelSpec("linear", scale=1.0 / (2.0 * n_bases)),
    )


def _base_features(base_models: list, xs) -> np.ndarray:
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    return np.column_stack([b.predict(xs) for b in base_models]).astype(np.float64)


def stack_train(
    base_models: list,
    train: TrainingSet,
    solver,
    cfg: EncodingConfig,
) -> StackedModel:
    """Train the meta QUBO SVM on base-model predictions.

    ``solver`` maps a QuboMatrix to a ShotHistogram; the most frequent
    state becomes the meta-model.
    """
    if len(base_models) < 2:
        raise ValueError("stacking needs at least 2 base models")
    meta_features = _base_features(base_models, train.samples)
    meta_train = TrainingSet(meta_features, train.labels)
    qubo = build_qubo(meta_train, cfg)
    hist = solver(qubo)
    ranked = rank_models(hist, meta_train, cfg, max_models=1)
    return StackedModel(base_models=base_models, meta=ranked.top_model())


def stack_predict(model: StackedModel, x) -> int:
    features = _base_features(model.base_models, np.atleast_2d(x))
    values = decision_values(model.meta, features)
    return 1 if values[0] >= 0 else -1


def stack_predict_batch(model: StackedModel, xs) -> np.ndarray:
    features = _base_features(model.base_models, xs)
    return np.where(decision_values(model.meta, features) >= 0, 1, -1)


def save_ensemble(ens: VotingEnsemble, path: str | Path) -> None:
    Path(path).write_text(json.dumps(ens.to_json()))


def load_ensemble(path: str | Path) -> VotingEnsemble:
    return VotingEnsemble.from_json(json.loads(Path(path).read_text()))
