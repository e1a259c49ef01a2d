"""SVM dual training encoded as a QUBO, and decoding of sampled bitstrings.

Each dual coefficient alpha_n is represented by K bits with base-B place
values, so the training problem over N samples becomes a QUBO over N*K
binary variables.  Any sampled bitstring decodes back into a ready-to-use
classifier (coefficients, bias, kernel, support samples).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .qubo import QuboMatrix, symmetrize


@dataclass
class KernelSpec:
    """Kernel kind plus parameters.

    ``linear`` computes ``scale * <x1, x2>`` (scale defaults to 1, i.e. the
    plain dot product); ``rbf`` computes ``exp(-gamma * ||x1 - x2||^2)``.
    """

    kind: str = "linear"
    scale: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if self.kind not in ("linear", "rbf"):
            raise ValueError(f"unknown kernel kind: {self.kind!r}")

    def to_json(self) -> dict:
        return {"kind": self.kind, "scale": self.scale, "gamma": self.gamma}

    @classmethod
    def from_json(cls, obj: dict) -> "KernelSpec":
        return cls(**obj)


def kernel_eval(kernel: KernelSpec, x1, x2) -> float:
    x1 = np.asarray(x1, dtype=np.float64)
    x2 = np.asarray(x2, dtype=np.float64)
    if x1.shape != x2.shape:
        raise ValueError(f"feature dimensions differ: {x1.shape} vs {x2.shape}")
    if kernel.kind == "linear":
        return float(kernel.scale * (x1 @ x2))
    return float(np.exp(-kernel.gamma * ((x1 - x2) ** 2).sum()))


def kernel_matrix(kernel: KernelSpec, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    """Pairwise kernel values between the rows of x1 and x2."""
    x1 = np.atleast_2d(np.asarray(x1, dtype=np.float64))
    x2 = np.atleast_2d(np.asarray(x2, dtype=np.float64))
    if x1.shape[1] != x2.shape[1]:
        raise ValueError(f"feature dimensions differ: {x1.shape[1]} vs {x2.shape[1]}")
    if kernel.kind == "linear":
        return kernel.scale * (x1 @ x2.T)
    sq = ((x1[:, None, :] - x2[None, :, :]) ** 2).sum(-1)
    return np.exp(-kernel.gamma * sq)


@dataclass
class TrainingSet:
    """Labeled feature vectors; labels are strictly -1 or +1."""

    samples: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=np.float64))
        self.labels = np.asarray(self.labels, dtype=np.int64).ravel()
        if self.samples.shape[0] != self.labels.shape[0]:
            raise ValueError("sample count does not match label count")
        if self.samples.shape[0] < 1:
            raise ValueError("training set must contain at least one sample")
        if not np.isin(self.labels, (-1, 1)).all():
            raise ValueError("labels must be -1 or +1")

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def n_features(self) -> int:
        return self.samples.shape[1]

    def has_both_classes(self) -> bool:
        return (self.labels == 1).any() and (self.labels == -1).any()

    def to_json(self) -> dict:
        return {"samples": self.samples.tolist(), "labels": self.labels.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "TrainingSet":
        return cls(np.asarray(obj["samples"]), np.asarray(obj["labels"]))


@dataclass
class EncodingConfig:
    """Binary encoding of the dual coefficients plus the balance multiplier.

    Each alpha is a K-bit number with place values B^0 .. B^(K-1), so the
    encoding caps every coefficient at ``cap = sum_k B^k`` and the QUBO has
    dimension K*N.  ``xi`` weighs the penalty absorbing the balance
    constraint sum_n alpha_n y_n = 0.
    """

    base: float = 2.0
    bits_per_alpha: int = 2
    xi: float = 1.0
    kernel: KernelSpec = field(default_factory=KernelSpec)

    def __post_init__(self):
        if self.base <= 0:
            raise ValueError("base must be positive")
        if self.bits_per_alpha < 1:
            raise ValueError("bits_per_alpha must be >= 1")
        if self.xi < 0:
            raise ValueError("xi must be >= 0")

    @property
    def place_values(self) -> np.ndarray:
        return self.base ** np.arange(self.bits_per_alpha)

    @property
    def cap(self) -> float:
        """Largest representable coefficient; the active box bound."""
        return float(self.place_values.sum())

    def to_json(self) -> dict:
        return {
            "base": self.base,
            "bits_per_alpha": self.bits_per_alpha,
            "xi": self.xi,
            "kernel": self.kernel.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EncodingConfig":
        obj = dict(obj)
        obj["kernel"] = KernelSpec.from_json(obj["kernel"])
        return cls(**obj)


def build_qubo(train: TrainingSet, cfg: EncodingConfig) -> QuboMatrix:
    """QUBO matrix of the encoded dual problem (symmetrized).

    Entry (K*n+k, K*m+j) is ``B^(k+j)/2 * y_n y_m (k(x_n,x_m) + xi)`` minus
    ``B^k`` on the diagonal, so that a^T Q a equals the dual objective
    evaluated at the decoded coefficients.
    """
    km = kernel_matrix(cfg.kernel, train.samples, train.samples)
    y = train.labels.astype(np.float64)
    place = cfg.place_values
    blocks = 0.5 * np.outer(y, y) * (km + cfg.xi)
    q = np.kron(blocks, np.outer(place, place))
    q -= np.diag(np.tile(place, train.n_samples))
    return symmetrize(QuboMatrix(q))


def decode_alphas(a, cfg: EncodingConfig, n_samples: int) -> np.ndarray:
    """Dual coefficients from a bitstring: alpha_n = sum_k B^k a[K*n+k]."""
    bits = np.asarray(a, dtype=np.float64).ravel()
    expected = n_samples * cfg.bits_per_alpha
    if bits.shape[0] != expected:
        raise ValueError(f"bitstring length {bits.shape[0]} != N*K = {expected}")
    return bits.reshape(n_samples, cfg.bits_per_alpha) @ cfg.place_values


def compute_bias(alphas, train: TrainingSet, c: float, kernel: KernelSpec) -> float:
    """Bias from the box-interior support vectors.

    b = sum_n a_n(C-a_n)[y_n - f0(x_n)] / sum_n a_n(C-a_n) with
    f0(x) = sum_m a_m y_m k(x_m, x).  When no coefficient is strictly
    inside (0, C) the ratio degenerates; fall back to the mean residual
    over samples with a_n > 0, and to 0 when all coefficients vanish.
    """
    alphas = np.asarray(alphas, dtype=np.float64)
    y = train.labels.astype(np.float64)
    km = kernel_matrix(kernel, train.samples, train.samples)
    residuals = y - km @ (alphas * y)
    weights = alphas * (c - alphas)
    denom = weights.sum()
    if denom > 0:
        return float(weights @ residuals / denom)
    active = alphas > 0
    if active.any():
        return float(residuals[active].mean())
    return 0.0


@dataclass
class SvmModel:
    """Decoded classifier: dual coefficients, bias, kernel, support samples."""

    alphas: np.ndarray
    bias: float
    train: TrainingSet
    kernel: KernelSpec

    def __post_init__(self):
        self.alphas = np.asarray(self.alphas, dtype=np.float64).ravel()
        if self.alphas.shape[0] != self.train.n_samples:
            raise ValueError("one coefficient per training sample required")

    def to_json(self) -> dict:
        return {
            "alphas": self.alphas.tolist(),
            "bias": self.bias,
            "kernel": self.kernel.to_json(),
            "support": self.train.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SvmModel":
        return cls(
            alphas=np.asarray(obj["alphas"]),
            bias=float(obj["bias"]),
            train=TrainingSet.from_json(obj["support"]),
            kernel=KernelSpec.from_json(obj["kernel"]),
        )


def save_model(model: SvmModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model.to_json()))


def load_model(path: str | Path) -> SvmModel:
    return SvmModel.from_json(json.loads(Path(path).read_text()))


def decision_value(model: SvmModel, x) -> float:
    """f(x) = sum_n alpha_n y_n k(x_n, x) + b."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.train.n_features,):
        raise ValueError(f"expected feature vector of dim {model.train.n_features}")
    return float(decision_values(model, x[None, :])[0])


def decision_values(model: SvmModel, xs: np.ndarray) -> np.ndarray:
    """Decision function over rows of xs."""
    km = kernel_matrix(model.kernel, model.train.samples, np.atleast_2d(xs))
    return (model.alphas * model.train.labels) @ km + model.bias


def predict_label(model: SvmModel, x) -> int:
    """sign(f(x)) with the deterministic tie rule f(x)=0 -> +1."""
    return 1 if decision_value(model, x) >= 0 else -1


def predict_labels(model: SvmModel, xs: np.ndarray) -> np.ndarray:
    return np.where(decision_values(model, xs) >= 0, 1, -1)


def model_from_state(a, train: TrainingSet, cfg: EncodingConfig) -> SvmModel:
    """Compose decoding and bias computation into a ready classifier."""
    alphas = decode_alphas(a, cfg, train.n_samples)
    bias = compute_bias(alphas, train, cfg.cap, cfg.kernel)
    return SvmModel(alphas=alphas, bias=bias, train=train, kernel=cfg.kernel)
