import numpy as np
import pytest

from qubosvm.analog import ShotHistogram
from qubosvm.backends import make_solver
from qubosvm.baselines import fit_baseline
from qubosvm.data import Dataset
from qubosvm.ensemble import (
    RankedModels,
    stacking_encoding,
    VotingEnsemble,
    load_ensemble,
    optimize_ensemble_size,
    rank_models,
    save_ensemble,
    stack_predict,
    stack_predict_batch,
    stack_train,
    vote_predict,
    vote_predict_batch,
)
from qubosvm.svm import (
    EncodingConfig,
    KernelSpec,
    SvmModel,
    TrainingSet,
    model_from_state,
    predict_labels,
)


def toy_train():
    samples = np.array([[0.5, 0.5], [0.9, 0.5], [-0.5, -0.5], [-0.8, -0.6]])
    return TrainingSet(samples, np.array([1, 1, -1, -1]))


def model_with_constant_value(train, value):
    """Zero-coefficient model whose decision value is a constant bias."""
    return SvmModel(np.zeros(train.n_samples), value, train, KernelSpec())


class TestRankModels:
    def test_single_state(self):
        train = toy_train()
        hist = ShotHistogram({"10000000": 5}, 5)
        ranked = rank_models(hist, train, EncodingConfig())
        assert len(ranked) == 1
        assert ranked.entries[0][0] == (1, 0, 0, 0, 0, 0, 0, 0)

    def test_frequency_order_and_cut(self):
        train = toy_train()
        hist = ShotHistogram({"10000000": 10, "01000000": 5, "00100000": 1}, 16)
        ranked = rank_models(hist, train, EncodingConfig(), max_models=2)
        assert [e[0] for e in ranked.entries] == [
            (1, 0, 0, 0, 0, 0, 0, 0),
            (0, 1, 0, 0, 0, 0, 0, 0),
        ]
        assert [e[1] for e in ranked.entries] == [10, 5]

    def test_zero_top_state_gives_zero_model(self):
        train = toy_train()
        hist = ShotHistogram({"00000000": 3, "10000000": 1}, 4)
        ranked = rank_models(hist, train, EncodingConfig())
        assert np.array_equal(ranked.top_model().alphas, np.zeros(4))

    def test_tie_breaks_lexicographic(self):
        train = toy_train()
        hist = ShotHistogram({"01000000": 2, "00100000": 2}, 4)
        ranked = rank_models(hist, train, EncodingConfig())
        assert ranked.entries[0][0] == (0, 0, 1, 0, 0, 0, 0, 0)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length"):
            rank_models(ShotHistogram({"101": 1}, 1), toy_train(), EncodingConfig())


class TestVoting:
    def test_k1_equals_member_predict(self):
        train = toy_train()
        model = model_from_state([1, 0, 0, 0, 1, 0, 0, 0], train, EncodingConfig())
        ens = VotingEnsemble([model])
        xs = np.random.default_rng(0).normal(size=(25, 2))
        assert np.array_equal(vote_predict_batch(ens, xs), predict_labels(model, xs))

    def test_mean_of_decision_values(self):
        train = toy_train()
        ens = VotingEnsemble([
            model_with_constant_value(train, 2.0),
            model_with_constant_value(train, -1.0),
        ])
        assert vote_predict(ens, [0.0, 0.0]) == 1  # mean +0.5

    def test_duplicate_member_no_change(self):
        train = toy_train()
        m = model_from_state([1, 0, 0, 0, 0, 0, 1, 0], train, EncodingConfig())
        xs = np.random.default_rng(1).normal(size=(10, 2))
        once = vote_predict_batch(VotingEnsemble([m]), xs)
        twice = vote_predict_batch(VotingEnsemble([m, m]), xs)
        assert np.array_equal(once, twice)

    def test_label_mode(self):
        train = toy_train()
        ens = VotingEnsemble(
            [model_with_constant_value(train, 5.0), model_with_constant_value(train, -0.1),
             model_with_constant_value(train, -0.2)],
            mode="label",
        )
        # labels (+1, -1, -1) -> mean -1/3 -> -1, despite mean value +1.57
        assert vote_predict(ens, [0.0, 0.0]) == -1

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="at least one"):
            VotingEnsemble([])

    def test_tie_reads_positive(self):
        train = toy_train()
        ens = VotingEnsemble([
            model_with_constant_value(train, 1.0),
            model_with_constant_value(train, -1.0),
        ])
        assert vote_predict(ens, [3.0, -3.0]) == 1


class TestOptimizeSize:
    def make_ranked(self, values, train):
        entries = [
            ((0,) * 8, 10 - i, model_with_constant_value(train, v))
            for i, v in enumerate(values)
        ]
        return RankedModels(entries)

    def test_single_candidate(self):
        train = toy_train()
        ranked = self.make_ranked([1.0], train)
        validation = Dataset([[0.0, 0.0]], [1])
        ens = optimize_ensemble_size(ranked, validation, metric="accuracy")
        assert ens.size == 1

    def test_known_optimum_at_k3(self):
        train = toy_train()
        # member values: +1, -3, +3, -9, -9; prefix means: 1, -1, 1/3, -2, -3.4
        ranked = self.make_ranked([1.0, -3.0, 3.0, -9.0, -9.0], train)
        validation = Dataset([[0.0, 0.0], [1.0, 1.0]], [1, 1])
        # prefixes 1 and 3 predict +1 (accuracy 1); 2, 4, 5 predict -1 (0)
        ens = optimize_ensemble_size(ranked, validation, metric="accuracy")
        assert ens.size == 1  # smallest k attaining the max

    def test_strict_improvement_at_larger_k(self):
        train = toy_train()
        # k=1 wrong, k=2 mean positive -> right
        ranked = self.make_ranked([-1.0, 5.0], train)
        validation = Dataset([[0.0, 0.0]], [1])
        ens = optimize_ensemble_size(ranked, validation, metric="accuracy")
        assert ens.size == 2

    def test_never_below_k1(self):
        rng = np.random.default_rng(2)
        train = toy_train()
        validation = Dataset(rng.normal(size=(12, 2)), rng.choice([-1, 1], 12))
        ranked = self.make_ranked(list(rng.normal(size=6)), train)
        from qubosvm.ensemble import vote_predict_batch as vpb
        from qubosvm.data import evaluate_predictions

        ens = optimize_ensemble_size(ranked, validation, metric="f1")
        chosen = evaluate_predictions(
            validation.labels, vpb(ens, validation.samples)
        )["f1"]
        k1 = evaluate_predictions(
            validation.labels,
            vpb(VotingEnsemble(ranked.models()[:1]), validation.samples),
        )["f1"]
        assert chosen >= k1


class TestStacking:
    def base_roster(self, train_big):
        kinds = ("gaussian_nb", "random_forest", "logistic_regression", "knn")
        return [fit_baseline(k, train_big, seed=1) for k in kinds]

    def big_blobs(self, seed=0):
        # 8 samples -> 16-qubit meta QUBO, within the enumeration limit
        rng = np.random.default_rng(seed)
        pos = rng.normal(2.0, 1.0, (4, 3))
        neg = rng.normal(-2.0, 1.0, (4, 3))
        return TrainingSet(np.vstack([pos, neg]), np.array([1] * 4 + [-1] * 4))

    def meta_cfg(self, n_bases=4):
        return stacking_encoding(n_bases)

    def test_meta_dimension_is_base_count(self):
        train = self.big_blobs()
        bases = self.base_roster(train)
        stacked = stack_train(bases, train, make_solver("brute_force"), self.meta_cfg())
        assert stacked.meta.train.n_features == 4

    def test_perfect_bases_give_perfect_training_accuracy(self):
        train = self.big_blobs(seed=3)
        bases = self.base_roster(train)
        # bases are all perfect on these blobs
        for b in bases:
            assert (b.predict(train.samples) == train.labels).all()
        stacked = stack_train(bases, train, make_solver("brute_force"), self.meta_cfg())
        preds = stack_predict_batch(stacked, train.samples)
        assert (preds == train.labels).mean() == 1.0

    def test_identical_bases_still_train(self):
        train = self.big_blobs(seed=4)
        base = fit_baseline("gaussian_nb", train, seed=0)
        bases = [base, base, base]
        stacked = stack_train(bases, train, make_solver("brute_force"), self.meta_cfg(3))
        preds = stack_predict_batch(stacked, train.samples)
        base_preds = base.predict(train.samples)
        correct = base_preds == train.labels
        assert (preds[correct] == base_preds[correct]).all()

    def test_fewer_than_two_bases_rejected(self):
        train = self.big_blobs()
        base = fit_baseline("knn", train)
        with pytest.raises(ValueError, match="at least 2"):
            stack_train([base], train, make_solver("brute_force"), self.meta_cfg(1))

    def test_base_order_permutation_invariant(self):
        train = self.big_blobs(seed=5)
        bases = self.base_roster(train)
        solver = make_solver("brute_force")
        s1 = stack_train(bases, train, solver, self.meta_cfg())
        s2 = stack_train(bases[::-1], train, solver, self.meta_cfg())
        xs = np.random.default_rng(6).normal(size=(30, 3))
        assert np.array_equal(stack_predict_batch(s1, xs), stack_predict_batch(s2, xs))

    def test_unanimous_bases_predict_their_label(self):
        train = self.big_blobs(seed=7)
        bases = self.base_roster(train)
        stacked = stack_train(bases, train, make_solver("brute_force"), self.meta_cfg())
        x = np.array([5.0, 5.0, 5.0])  # deep in the positive blob
        assert all(b.predict([x])[0] == 1 for b in bases)
        assert stack_predict(stacked, x) == 1


class TestEnsembleSerialization:
    def test_roundtrip(self, tmp_path):
        train = toy_train()
        models = [
            model_from_state([1, 0, 0, 0, 1, 0, 0, 0], train, EncodingConfig()),
            model_from_state([0, 0, 1, 0, 0, 0, 0, 0], train, EncodingConfig()),
        ]
        ens = VotingEnsemble(models)
        path = tmp_path / "ens.json"
        save_ensemble(ens, path)
        loaded = load_ensemble(path)
        xs = np.random.default_rng(3).normal(size=(8, 2))
        assert np.array_equal(vote_predict_batch(loaded, xs), vote_predict_batch(ens, xs))
