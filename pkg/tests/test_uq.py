import numpy as np
import pytest

from castguard.classifiers.base import Standardizer
from castguard.dataio import FeatureDataset, SplitSpec, SynthSpec, gen_synth, split_dataset
from castguard.errors import ValidationError
from castguard.mlp import MlpArchitecture, MlpModel, TrainConfig
from castguard.uq import (
    EnsembleConfig,
    EnsembleModel,
    UqAssessment,
    UqConfusion,
    assess,
    ensemble_mean,
    ensemble_train,
    entropy_histogram,
    predictive_entropy,
    sample_architecture,
    threshold_sweep,
    uncertainty_accuracy,
    uq_confusion,
    write_assessment_csv,
)


def constant_member(p_ok: float, input_dim: int = 2) -> MlpModel:
    """An MLP that outputs (p_ok, 1-p_ok) for every input: zero weights,
    output biases set to the log-probabilities."""
    arch = MlpArchitecture(layer_sizes=(input_dim, 2, 2), seed=0)
    return MlpModel(
        architecture=arch,
        weights=(np.zeros((input_dim, 2)), np.zeros((2, 2))),
        biases=(np.zeros(2), np.log(np.array([p_ok, 1.0 - p_ok]))),
    )


def identity_scaler(dim: int) -> Standardizer:
    return Standardizer(mean=np.zeros(dim), scale=np.ones(dim))


def tiny_config(**overrides) -> EnsembleConfig:
    defaults = dict(
        n_members=2,
        depth_choices=(1,),
        width_ranges=((4, 8),),
        member_seed_base=0,
        train_config=TrainConfig(epochs=3),
    )
    defaults.update(overrides)
    return EnsembleConfig(**defaults)


def make_assessment(entropy, correct, threshold=0.4):
    entropy = np.asarray(entropy, dtype=np.float64)
    correct = np.asarray(correct, dtype=bool)
    n = entropy.shape[0]
    predicted = correct.astype(np.uint8)  # truths fixed at 1
    return UqAssessment(
        mean_probs=np.column_stack([1.0 - entropy, entropy]),
        entropy=entropy,
        predicted=predicted,
        true_labels=np.ones(n, dtype=np.uint8),
        certain=entropy < threshold,
        correct=correct,
        threshold=threshold,
    )


class TestPredictiveEntropy:
    def test_certainty_is_zero(self):
        assert predictive_entropy([1.0, 0.0]) == 0.0

    def test_maximal_binary_entropy_is_one(self):
        assert predictive_entropy([0.5, 0.5]) == 1.0

    def test_worked_example(self):
        assert predictive_entropy([0.7, 0.3]) == pytest.approx(0.8813, abs=1e-4)
        assert predictive_entropy([0.7, 0.3]) == pytest.approx(0.8812908992306927, abs=1e-12)

    def test_near_certain_mean(self):
        assert predictive_entropy([0.99, 0.01]) == pytest.approx(0.0808, abs=1e-4)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            p = rng.dirichlet([1.0, 1.0])
            assert predictive_entropy(p) == predictive_entropy(p[::-1])

    def test_concavity_spot_check(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            p, q = rng.dirichlet([1, 1]), rng.dirichlet([1, 1])
            mid = predictive_entropy(0.5 * (p + q))
            avg = 0.5 * (predictive_entropy(p) + predictive_entropy(q))
            assert mid >= avg - 1e-12

    def test_rejects_non_distribution(self):
        with pytest.raises(ValidationError):
            predictive_entropy([0.9, 0.3])


class TestEnsembleMean:
    def test_two_member_average(self):
        model = EnsembleModel(
            members=(constant_member(0.6), constant_member(0.8)),
            scaler=identity_scaler(2),
            config=tiny_config(),
        )
        np.testing.assert_allclose(ensemble_mean(model, np.zeros(2)), [0.7, 0.3], atol=1e-12)

    @pytest.mark.parametrize("n_copies", [2, 7, 10])
    def test_duplicated_members_equal_single_bitwise(self, n_copies):
        from castguard.mlp import mlp_forward

        member = constant_member(0.37)
        model = EnsembleModel(
            members=(member,) * n_copies,
            scaler=identity_scaler(2),
            config=tiny_config(n_members=n_copies),
        )
        x = np.array([1.0, -2.0])
        mean = ensemble_mean(model, x)
        single = mlp_forward(member, x)
        assert mean.tobytes() == single.tobytes()

    def test_mean_stays_in_simplex(self):
        rng = np.random.default_rng(2)
        members = tuple(constant_member(float(rng.uniform(0.01, 0.99))) for _ in range(10))
        model = EnsembleModel(members=members, scaler=identity_scaler(2), config=tiny_config(n_members=10))
        mean = ensemble_mean(model, np.zeros(2))
        assert abs(mean.sum() - 1.0) < 1e-9
        assert (mean > 0).all()


class TestArchitectureSampling:
    def test_defaults_match_sampling_ranges(self):
        config = EnsembleConfig(member_seed_base=5)
        for i in range(10):
            arch, _ = sample_architecture(config, i, input_dim=20)
            hidden = arch.layer_sizes[1:-1]
            assert len(hidden) in (2, 3)
            assert 256 <= hidden[0] <= 512
            assert 128 <= hidden[1] <= 256
            if len(hidden) == 3:
                assert 64 <= hidden[2] <= 128

    def test_members_differ(self):
        config = EnsembleConfig(n_members=2, depth_choices=(2,), member_seed_base=1)
        a, _ = sample_architecture(config, 0, input_dim=8)
        b, _ = sample_architecture(config, 1, input_dim=8)
        assert a.layer_sizes != b.layer_sizes or a.seed != b.seed

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            EnsembleConfig(n_members=1)
        with pytest.raises(ValidationError):
            EnsembleConfig(depth_choices=(4,))  # more depth than width ranges
        with pytest.raises(ValidationError):
            EnsembleConfig(width_ranges=((512, 256), (128, 256), (64, 128)))


class TestEnsembleTraining:
    def small_data(self):
        ds = gen_synth(SynthSpec(n_per_class=40, dim=5, class_separation=6.0, noise_sigma=1.0, seed=3))
        return split_dataset(ds, SplitSpec(seed=3))

    def test_deterministic_assessments(self):
        train, test = self.small_data()
        config = tiny_config(member_seed_base=9)
        a = assess(ensemble_train(config, train), test)
        b = assess(ensemble_train(config, train), test)
        assert a.mean_probs.tobytes() == b.mean_probs.tobytes()
        np.testing.assert_array_equal(a.predicted, b.predicted)

    def test_member_count(self):
        train, _ = self.small_data()
        model = ensemble_train(tiny_config(n_members=3), train)
        assert len(model.members) == 3

    def test_single_class_rejected(self):
        train, _ = self.small_data()
        bad = FeatureDataset(features=train.features, labels=np.ones_like(train.labels))
        with pytest.raises(Exception, match="degenerate"):
            ensemble_train(tiny_config(), bad)


class TestAssessment:
    def test_confident_correct_sample_is_tc(self):
        members = (constant_member(0.01), constant_member(0.01))
        model = EnsembleModel(members=members, scaler=identity_scaler(2), config=tiny_config())
        test = FeatureDataset(
            features=np.zeros((1, 2), dtype=np.float32), labels=np.array([1], dtype=np.uint8)
        )
        a = assess(model, test, threshold=0.4)
        assert a.entropy[0] == pytest.approx(0.0808, abs=1e-4)
        assert bool(a.certain[0]) and bool(a.correct[0])
        conf = uq_confusion(a)
        assert (conf.tc, conf.tu, conf.fu, conf.fc) == (1, 0, 0, 0)

    def test_maximal_entropy_sample_is_uncertain(self):
        members = (constant_member(0.5), constant_member(0.5))
        model = EnsembleModel(members=members, scaler=identity_scaler(2), config=tiny_config())
        test = FeatureDataset(
            features=np.zeros((1, 2), dtype=np.float32), labels=np.array([0], dtype=np.uint8)
        )
        a = assess(model, test, threshold=0.9)
        assert a.entropy[0] == 1.0
        assert not a.certain[0]
        # the 50/50 argmax tie goes to defect, so truth 0 makes this TU
        assert a.predicted[0] == 1
        conf = uq_confusion(a)
        assert (conf.tc, conf.tu, conf.fu, conf.fc) == (0, 1, 0, 0)

    def test_permissive_threshold_marks_everything_certain(self):
        rng = np.random.default_rng(4)
        members = tuple(constant_member(float(rng.uniform(0.2, 0.8))) for _ in range(4))
        model = EnsembleModel(members=members, scaler=identity_scaler(2), config=tiny_config(n_members=4))
        test = FeatureDataset(
            features=rng.standard_normal((10, 2)).astype(np.float32),
            labels=rng.integers(0, 2, size=10).astype(np.uint8),
        )
        a = assess(model, test, threshold=0.999)
        assert a.certain.sum() >= 9  # everything below max entropy

    def test_threshold_range_enforced(self):
        model = EnsembleModel(
            members=(constant_member(0.5), constant_member(0.5)),
            scaler=identity_scaler(2),
            config=tiny_config(),
        )
        test = FeatureDataset(
            features=np.zeros((1, 2), dtype=np.float32), labels=np.array([1], dtype=np.uint8)
        )
        with pytest.raises(ValidationError):
            assess(model, test, threshold=1.0)


class TestUqConfusion:
    def test_one_sample_per_category(self):
        a = make_assessment(entropy=[0.1, 0.9, 0.9, 0.1], correct=[True, False, True, False])
        conf = uq_confusion(a)
        assert (conf.tc, conf.tu, conf.fu, conf.fc) == (1, 1, 1, 1)
        assert conf.total == 4

    def test_all_correct_and_certain(self):
        a = make_assessment(entropy=[0.0] * 5, correct=[True] * 5)
        conf = uq_confusion(a)
        assert (conf.tc, conf.tu, conf.fu, conf.fc) == (5, 0, 0, 0)

    def test_counts_partition_for_any_threshold(self):
        rng = np.random.default_rng(5)
        a = make_assessment(entropy=rng.uniform(0, 1, 50), correct=rng.integers(0, 2, 50) == 1)
        for t in (0.0, 0.2, 0.5, 0.8, 1.0):
            assert uq_confusion(a, threshold=t).total == 50

    def test_matches_per_sample_loop(self):
        rng = np.random.default_rng(6)
        entropy = rng.uniform(0, 1, 30)
        correct = rng.integers(0, 2, 30) == 1
        a = make_assessment(entropy=entropy, correct=correct, threshold=0.4)
        conf = uq_confusion(a)
        tc = tu = fu = fc = 0
        for e, c in zip(entropy, correct):
            certain = e < 0.4
            if c and certain:
                tc += 1
            elif not c and not certain:
                tu += 1
            elif c:
                fu += 1
            else:
                fc += 1
        assert (conf.tc, conf.tu, conf.fu, conf.fc) == (tc, tu, fu, fc)


class TestUncertaintyAccuracy:
    def test_worked_example(self):
        conf = UqConfusion(tc=96, tu=2, fu=1, fc=1, threshold=0.4)
        assert uncertainty_accuracy(conf) == 0.98

    def test_ideal_model(self):
        assert uncertainty_accuracy(UqConfusion(tc=10, tu=5, fu=0, fc=0, threshold=0.4)) == 1.0

    def test_worst_model(self):
        assert uncertainty_accuracy(UqConfusion(tc=0, tu=0, fu=3, fc=7, threshold=0.4)) == 0.0

    def test_zero_total_rejected(self):
        with pytest.raises(ValidationError):
            uncertainty_accuracy(UqConfusion(tc=0, tu=0, fu=0, fc=0, threshold=0.4))


class TestThresholdSweep:
    def test_default_grid(self):
        rng = np.random.default_rng(7)
        a = make_assessment(entropy=rng.uniform(0, 1, 40), correct=rng.integers(0, 2, 40) == 1)
        sweep = threshold_sweep(a)
        assert len(sweep) == 9
        at_04 = next(conf for t, conf, _ in sweep if t == 0.4)
        direct = uq_confusion(a, threshold=0.4)
        assert (at_04.tc, at_04.tu, at_04.fu, at_04.fc) == (
            direct.tc,
            direct.tu,
            direct.fu,
            direct.fc,
        )

    def test_zero_threshold_marks_all_uncertain(self):
        rng = np.random.default_rng(8)
        a = make_assessment(entropy=rng.uniform(0.01, 1, 20), correct=rng.integers(0, 2, 20) == 1)
        (_, conf, _) = threshold_sweep(a, thresholds=[0.0])[0]
        assert conf.tc == 0 and conf.fc == 0

    def test_certain_count_monotone(self):
        rng = np.random.default_rng(9)
        a = make_assessment(entropy=rng.uniform(0, 1, 60), correct=rng.integers(0, 2, 60) == 1)
        certain_counts = [conf.tc + conf.fc for _, conf, _ in threshold_sweep(a)]
        assert certain_counts == sorted(certain_counts)

    def test_empty_grid_rejected(self):
        a = make_assessment(entropy=[0.5], correct=[True])
        with pytest.raises(ValidationError):
            threshold_sweep(a, thresholds=[])


class TestEntropyHistogram:
    def test_zero_entropy_mass_in_first_bin(self):
        a = make_assessment(entropy=[0.0] * 7, correct=[True] * 7)
        _, correct_counts, incorrect_counts = entropy_histogram(a, n_bins=10)
        assert correct_counts[0] == 7
        assert incorrect_counts.sum() == 0

    def test_counts_conserved(self):
        rng = np.random.default_rng(10)
        a = make_assessment(entropy=rng.uniform(0, 1, 10), correct=rng.integers(0, 2, 10) == 1)
        _, correct_counts, incorrect_counts = entropy_histogram(a, n_bins=20)
        assert correct_counts.sum() + incorrect_counts.sum() == 10

    def test_entropy_one_lands_in_last_bin(self):
        a = make_assessment(entropy=[1.0], correct=[False])
        _, _, incorrect_counts = entropy_histogram(a, n_bins=5)
        assert incorrect_counts[-1] == 1


def test_assessment_csv_export(tmp_path):
    a = make_assessment(entropy=[0.1, 0.9], correct=[True, False])
    path = tmp_path / "assessment.csv"
    write_assessment_csv(a, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "sample_index,p_defect,entropy,predicted,true,certain,correct"
    assert len(lines) == 3
    assert lines[1].split(",")[0] == "0"
