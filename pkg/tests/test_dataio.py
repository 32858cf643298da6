import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from castguard.dataio import (
    FeatureDataset,
    SplitSpec,
    SynthSpec,
    gen_synth,
    inspect_fmx,
    read_csv,
    read_fmx,
    split_dataset,
    write_fmx,
)
from castguard.errors import DataFormatError, ValidationError


def fmx_size(n_rows: int, n_cols: int, tag: str = "") -> int:
    # independent byte-count oracle straight from the format definition:
    # 4 magic + 1 version + 4 rows + 4 cols + 1 has_labels, then payload,
    # labels, u16 tag length, tag bytes
    return 4 + 1 + 4 + 4 + 1 + 4 * n_rows * n_cols + n_rows + 2 + len(tag.encode())


def small_dataset(tag=""):
    return FeatureDataset(
        features=np.array([[1, 2, 3], [4, 5, 6]], dtype=np.float32),
        labels=np.array([1, 0], dtype=np.uint8),
        source_tag=tag,
    )


class TestFmx:
    def test_byte_count_matches_format(self, tmp_path):
        path = tmp_path / "d.fmx"
        write_fmx(small_dataset(), path)
        assert path.stat().st_size == fmx_size(2, 3) == 42

    def test_byte_count_with_tag(self, tmp_path):
        path = tmp_path / "d.fmx"
        write_fmx(small_dataset(tag="vgg16"), path)
        assert path.stat().st_size == fmx_size(2, 3, "vgg16")

    def test_roundtrip_identity(self, tmp_path):
        path = tmp_path / "d.fmx"
        original = small_dataset(tag="")
        write_fmx(original, path)
        loaded = read_fmx(path)
        np.testing.assert_array_equal(loaded.features, original.features)
        np.testing.assert_array_equal(loaded.labels, original.labels)
        assert loaded.source_tag == ""

    def test_nan_rejected_before_write(self, tmp_path):
        path = tmp_path / "bad.fmx"
        with pytest.raises(ValidationError):
            FeatureDataset(
                features=np.array([[1.0, np.nan]], dtype=np.float32),
                labels=np.array([1], dtype=np.uint8),
            )
        assert not path.exists()

    def test_wrong_magic(self, tmp_path):
        path = tmp_path / "x.fmx"
        path.write_bytes(b"XXXX" + bytes(40))
        with pytest.raises(DataFormatError, match="not an FMX file"):
            read_fmx(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "t.fmx"
        write_fmx(small_dataset(), path)
        blob = bytearray(path.read_bytes())
        # claim 1000 rows in the header while keeping the 2-row payload
        blob[5:9] = (1000).to_bytes(4, "little")
        path.write_bytes(bytes(blob))
        with pytest.raises(DataFormatError, match="truncated/corrupt"):
            read_fmx(path)

    def test_bad_label_byte(self, tmp_path):
        path = tmp_path / "l.fmx"
        write_fmx(small_dataset(), path)
        blob = bytearray(path.read_bytes())
        blob[14 + 24] = 7  # first label byte
        path.write_bytes(bytes(blob))
        with pytest.raises(ValidationError):
            read_fmx(path)

    def test_trailing_garbage_rejected(self, tmp_path):
        path = tmp_path / "g.fmx"
        write_fmx(small_dataset(), path)
        path.write_bytes(path.read_bytes() + b"!")
        with pytest.raises(DataFormatError, match="truncated/corrupt"):
            read_fmx(path)

    def test_inspect_header(self, tmp_path):
        path = tmp_path / "d.fmx"
        write_fmx(small_dataset(), path)
        header = inspect_fmx(path)
        assert header == {
            "version": 1,
            "n_rows": 2,
            "n_cols": 3,
            "has_labels": True,
            "payload_bytes": 24,
        }

    @settings(max_examples=50, deadline=None)
    @given(
        feats=arrays(
            dtype=np.float32,
            shape=st.tuples(st.integers(1, 8), st.integers(1, 6)),
            elements=st.floats(width=32, allow_nan=False, allow_infinity=False),
        ),
        tag=st.text(max_size=20),
    )
    def test_roundtrip_is_bit_exact(self, feats, tag):
        import tempfile
        from pathlib import Path

        labels = (np.arange(feats.shape[0]) % 2).astype(np.uint8)
        ds = FeatureDataset(features=feats, labels=labels, source_tag=tag)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "prop.fmx"
            write_fmx(ds, path)
            loaded = read_fmx(path)
        assert loaded.features.tobytes() == ds.features.tobytes()
        np.testing.assert_array_equal(loaded.labels, ds.labels)
        assert loaded.source_tag == tag


class TestCsv:
    def test_basic_transcription(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("f1,f2,y\n1,2,1\n3,4,0\n5,6,1\n")
        ds = read_csv(path, label_column="y")
        np.testing.assert_array_equal(ds.features, [[1, 2], [3, 4], [5, 6]])
        np.testing.assert_array_equal(ds.labels, [1, 0, 1])

    def test_missing_label_column(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("f1,f2\n1,2\n")
        with pytest.raises(DataFormatError, match="'y'"):
            read_csv(path, label_column="y")

    def test_unparsable_cell_cites_row(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("f1,y\n1,1\nabc,0\n")
        with pytest.raises(DataFormatError, match="row 2"):
            read_csv(path, label_column="y")

    def test_label_column_excluded_in_middle(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("f1,y,f2\n1,0,2\n3,1,4\n")
        ds = read_csv(path, label_column="y")
        np.testing.assert_array_equal(ds.features, [[1, 2], [3, 4]])


class TestSplit:
    def make_imbalanced(self):
        # the benchmark dataset shape: 781 defect, 519 non-defect
        rng = np.random.default_rng(0)
        features = rng.standard_normal((1300, 4)).astype(np.float32)
        labels = np.concatenate([np.ones(781, dtype=np.uint8), np.zeros(519, dtype=np.uint8)])
        return FeatureDataset(features=features, labels=labels)

    def test_75_25_counts(self):
        # per-class floor(0.75 * n + 0.5): 586 of 781 defect, 389 of 519 ok
        train, test = split_dataset(self.make_imbalanced(), SplitSpec(train_fraction=0.75, seed=3))
        n_ok, n_defect = train.class_counts()
        assert (n_defect, n_ok) == (586, 389)
        assert train.n_samples + test.n_samples == 1300

    def test_balanced_half_split(self):
        ds = FeatureDataset(
            features=np.arange(8, dtype=np.float32).reshape(4, 2),
            labels=np.array([0, 1, 0, 1], dtype=np.uint8),
        )
        train, test = split_dataset(ds, SplitSpec(train_fraction=0.5, seed=1))
        assert train.class_counts() == (1, 1)
        assert test.class_counts() == (1, 1)

    def test_same_seed_same_partition(self):
        ds = self.make_imbalanced()
        spec = SplitSpec(train_fraction=0.75, seed=99)
        a_train, a_test = split_dataset(ds, spec)
        b_train, b_test = split_dataset(ds, spec)
        np.testing.assert_array_equal(a_train.features, b_train.features)
        np.testing.assert_array_equal(a_test.features, b_test.features)

    def test_no_overlap_and_union(self):
        ds = self.make_imbalanced()
        train, test = split_dataset(ds, SplitSpec(seed=5))
        combined = np.vstack([train.features, test.features])
        assert combined.shape[0] == ds.n_samples
        # every original row appears exactly once
        original = {row.tobytes() for row in ds.features}
        recovered = [row.tobytes() for row in combined]
        assert len(recovered) == len(set(recovered))
        assert set(recovered) == original

    def test_proportion_within_one_sample_per_class(self):
        ds = self.make_imbalanced()
        for seed in range(5):
            train, _ = split_dataset(ds, SplitSpec(train_fraction=0.6, seed=seed))
            n_ok, n_defect = train.class_counts()
            assert abs(n_defect - 0.6 * 781) <= 1
            assert abs(n_ok - 0.6 * 519) <= 1

    def test_small_class_rejected(self):
        ds = FeatureDataset(
            features=np.zeros((3, 2), dtype=np.float32),
            labels=np.array([0, 0, 1], dtype=np.uint8),
        )
        with pytest.raises(ValidationError, match="class"):
            split_dataset(ds, SplitSpec(seed=0))

    def test_unstratified_mode(self):
        ds = self.make_imbalanced()
        train, test = split_dataset(ds, SplitSpec(train_fraction=0.75, seed=2, stratified=False))
        assert train.n_samples == int(np.floor(0.75 * 1300 + 0.5))
        assert train.n_samples + test.n_samples == 1300

    def test_bad_fraction(self):
        with pytest.raises(ValidationError):
            SplitSpec(train_fraction=1.0)


class TestSynth:
    def test_class_means_separated_by_spec(self):
        spec = SynthSpec(n_per_class=2000, dim=10, class_separation=8.0, noise_sigma=1.0, seed=4)
        ds = gen_synth(spec)
        mean0 = ds.features[ds.labels == 0].mean(axis=0)
        mean1 = ds.features[ds.labels == 1].mean(axis=0)
        assert np.linalg.norm(mean1 - mean0) == pytest.approx(8.0, abs=0.2)

    def test_zero_separation_is_chance_level(self):
        from castguard.classifiers import ClassifierSpec, fit

        ds = gen_synth(SynthSpec(n_per_class=100, dim=5, class_separation=0.0, noise_sigma=1.0, seed=8))
        train, test = split_dataset(ds, SplitSpec(seed=8))
        model = fit(ClassifierSpec(kind="knn", seed=8), train)
        acc = float(np.mean(model.predict(test.features) == test.labels))
        assert abs(acc - 0.5) <= 0.15

    def test_same_seed_bitwise_identical(self):
        spec = SynthSpec(n_per_class=50, dim=6, class_separation=3.0, noise_sigma=1.0, seed=123)
        a = gen_synth(spec)
        b = gen_synth(spec)
        assert a.features.tobytes() == b.features.tobytes()
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_spec_validation(self):
        with pytest.raises(ValidationError):
            SynthSpec(dim=1)
        with pytest.raises(ValidationError):
            SynthSpec(n_per_class=0)
        with pytest.raises(ValidationError):
            SynthSpec(noise_sigma=0.0)
