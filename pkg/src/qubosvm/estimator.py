"""Scikit-learn compatible front end for the QUBO-trained SVM.

`QuboSvmClassifier` runs the full pipeline inside ``fit``: encode the dual
problem as a QUBO, solve it with the chosen backend (exhaustive search,
annealing, or simulated analog evolution), and decode the sampled states
into a classifier.  The QUBO has ``bits_per_alpha * n_samples`` binary
variables, so the estimator targets the few-shot regime (roughly
n_samples <= 12 for the exact backend at the default encoding).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .analog import NoiseConfig
from .backends import train_qubo
from .embedding import EmbedOptions, HardwareConstraints
from .ensemble import VotingEnsemble, rank_models, vote_values
from .svm import EncodingConfig, KernelSpec, build_qubo, decision_values, TrainingSet


class QuboSvmClassifier(ClassifierMixin, BaseEstimator):
    """Binary SVM trained by minimizing its encoded dual as a QUBO.

    Parameters
    ----------
    base, bits_per_alpha, xi : encoding of the dual coefficients.
    kernel : "linear" or "rbf".
    kernel_scale : linear-kernel prefactor; "auto" uses 1/n_features,
        which keeps kernel values commensurate with the coefficient grid.
    gamma : rbf width (ignored for linear).
    backend : "brute_force", "simulated_anneal", "analog_ideal",
        or "analog_noisy".
    shots : samples drawn from the backend (ignored by brute_force).
    n_vote_models : size of the average-voting ensemble built from the
        most frequent states; 1 keeps only the top model.
    tau, dt : analog schedule parameters (us).
    noise : NoiseConfig for the analog_noisy backend (None = defaults).
    random_state : master seed for every stochastic stage.

    Attributes
    ----------
    classes_ : original class labels, mapped onto (-1, +1).
    model_ : fitted VotingEnsemble over decoded states.
    qubo_ : the training QUBO actually solved.
    """

    def __init__(
        self,
        base: float = 2.0,
        bits_per_alpha: int = 2,
        xi: float = 1.0,
        kernel: str = "linear",
        kernel_scale="auto",
        gamma: float = 1.0,
        backend: str = "brute_force",
        shots: int = 1000,
        n_vote_models: int = 1,
        tau: float = 10.0,
        dt: float = 1e-3,
        noise: NoiseConfig | None = None,
        constraints: HardwareConstraints | None = None,
        embed_options: EmbedOptions | None = None,
        random_state: int = 0,
    ):
        self.base = base
        self.bits_per_alpha = bits_per_alpha
        self.xi = xi
        self.kernel = kernel
        self.kernel_scale = kernel_scale
        self.gamma = gamma
        self.backend = backend
        self.shots = shots
        self.n_vote_models = n_vote_models
        self.tau = tau
        self.dt = dt
        self.noise = noise
        self.constraints = constraints
        self.embed_options = embed_options
        self.random_state = random_state

    def _encoding(self, n_features: int) -> EncodingConfig:
        scale = self.kernel_scale
        if scale == "auto":
            scale = 1.0 / n_features
        return EncodingConfig(
            base=self.base,
            bits_per_alpha=self.bits_per_alpha,
            xi=self.xi,
            kernel=KernelSpec(self.kernel, scale=float(scale), gamma=self.gamma),
        )

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        classes = np.unique(y)
        if classes.shape[0] != 2:
            raise ValueError(f"binary classifier; got classes {classes}")
        self.classes_ = classes
        signed = np.where(y == classes[1], 1, -1)
        train = TrainingSet(X, signed)
        cfg = self._encoding(train.n_features)
        self.encoding_ = cfg
        self.qubo_ = build_qubo(train, cfg)
        result = train_qubo(
            self.qubo_,
            backend=self.backend,
            shots=self.shots,
            seed=self.random_state,
            constraints=self.constraints,
            embed_options=self.embed_options,
            noise=self.noise,
            tau=self.tau,
            dt=self.dt,
        )
        self.histogram_ = result.histogram
        ranked = rank_models(result.histogram, train, cfg,
                             max_models=max(self.n_vote_models, 1))
        self.ranked_ = ranked
        self.model_ = VotingEnsemble(ranked.models()[: max(self.n_vote_models, 1)])
        self.n_features_in_ = train.n_features
        return self

    def decision_function(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"expected {self.n_features_in_} features, got {X.shape[1]}"
            )
        return vote_values(self.model_, X)

    def predict(self, X):
        signed = np.where(self.decision_function(X) >= 0, 1, -1)
        return np.where(signed == 1, self.classes_[1], self.classes_[0])

    def support_alphas(self) -> np.ndarray:
        """Dual coefficients of the top decoded model."""
        check_is_fitted(self, "model_")
        return self.model_.models[0].alphas
