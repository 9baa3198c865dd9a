import numpy as np
import pytest

from cutselect import (
    Dataset,
    EmbeddingMatrix,
    FormatError,
    LabelMatrix,
    ParameterError,
    PseudoLabeling,
    load_embeddings,
    load_gold,
    load_label_matrix,
    validate_dataset,
    write_embeddings,
    write_gold,
    write_label_matrix,
)
from cutselect.data_model import EMBEDDING_MAGIC


class TestLabelMatrixLoading:
    def test_direct_parse(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("1,-1\n0,0\n")
        lm = load_label_matrix(path, num_classes=2)
        assert lm.n == 2 and lm.m == 2
        assert lm.values.tolist() == [[1, -1], [0, 0]]

    def test_out_of_range_label(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("2,0\n")
        with pytest.raises(FormatError, match=r"label 2 out of range \[0,1\]"):
            load_label_matrix(path, num_classes=2)

    def test_ragged_row(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("1\n0,1\n")
        with pytest.raises(FormatError, match="ragged row 2"):
            load_label_matrix(path, num_classes=2)

    def test_non_integer_field(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("1,x\n")
        with pytest.raises(FormatError, match="row 1, column 2"):
            load_label_matrix(path, num_classes=2)

    def test_below_abstain_sentinel(self):
        with pytest.raises(FormatError, match="out of range"):
            LabelMatrix(np.array([[-2, 0]]), num_classes=2)

    def test_num_classes_too_small(self):
        with pytest.raises(ParameterError):
            LabelMatrix(np.array([[0, 0]]), num_classes=1)

    def test_values_are_read_only(self):
        lm = LabelMatrix(np.array([[0, 1]]), num_classes=2)
        with pytest.raises(ValueError):
            lm.values[0, 0] = 1


class TestEmbeddingIO:
    def test_binary_parse(self, tmp_path):
        path = tmp_path / "emb.bin"
        payload = np.arange(6, dtype="<f4").tobytes()
        path.write_bytes(EMBEDDING_MAGIC + (2).to_bytes(4, "little") + (3).to_bytes(4, "little") + payload)
        emb = load_embeddings(path)
        assert emb.values.shape == (2, 3)
        assert emb.values.dtype == np.float64
        np.testing.assert_array_equal(emb.values, np.arange(6.0).reshape(2, 3))

    def test_csv_parse(self, tmp_path):
        path = tmp_path / "emb.csv"
        path.write_text("1.0,2.0\n3.0,4.0\n")
        emb = load_embeddings(path)
        np.testing.assert_array_equal(emb.values, [[1.0, 2.0], [3.0, 4.0]])

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "emb.bin"
        path.write_bytes(EMBEDDING_MAGIC + (2).to_bytes(4, "little") + (3).to_bytes(4, "little") + b"\x00" * 8)
        with pytest.raises(FormatError, match="truncated"):
            load_embeddings(path)

    def test_trailing_bytes(self, tmp_path):
        path = tmp_path / "emb.bin"
        payload = np.zeros(6, dtype="<f4").tobytes()
        path.write_bytes(EMBEDDING_MAGIC + (2).to_bytes(4, "little") + (3).to_bytes(4, "little") + payload + b"xx")
        with pytest.raises(FormatError, match="trailing"):
            load_embeddings(path)

    def test_nan_payload(self, tmp_path):
        path = tmp_path / "emb.bin"
        vals = np.array([1.0, np.nan, 2.0, 3.0], dtype="<f4")
        path.write_bytes(EMBEDDING_MAGIC + (2).to_bytes(4, "little") + (2).to_bytes(4, "little") + vals.tobytes())
        with pytest.raises(FormatError, match=r"non-finite value at \(row 1, column 2\)"):
            load_embeddings(path)

    def test_bad_csv_number(self, tmp_path):
        path = tmp_path / "emb.csv"
        path.write_text("1.0,oops\n")
        with pytest.raises(FormatError, match="row 1, column 2"):
            load_embeddings(path)

    def test_round_trip_is_bit_exact_on_binary_format(self, tmp_path):
        rng = np.random.default_rng(42)
        original = tmp_path / "a.bin"
        rewritten = tmp_path / "b.bin"
        data = rng.standard_normal((17, 5)).astype(np.float32)
        write_embeddings(original, data.astype(np.float64))
        emb = load_embeddings(original)
        write_embeddings(rewritten, emb)
        assert original.read_bytes() == rewritten.read_bytes()

    def test_round_trip_many_shapes(self, tmp_path):
        rng = np.random.default_rng(7)
        for trial in range(20):
            n = int(rng.integers(1, 30))
            d = int(rng.integers(1, 12))
            data = (rng.standard_normal((n, d)) * 10.0 ** rng.integers(-3, 4)).astype(np.float32)
            path = tmp_path / f"t{trial}.bin"
            write_embeddings(path, data.astype(np.float64))
            loaded = load_embeddings(path)
            np.testing.assert_array_equal(loaded.values, data.astype(np.float64))


class TestGoldIO:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "gold.txt"
        write_gold(path, [0, 1, 1, 0])
        np.testing.assert_array_equal(load_gold(path, num_classes=2), [0, 1, 1, 0])

    def test_out_of_range(self, tmp_path):
        path = tmp_path / "gold.txt"
        path.write_text("0\n3\n")
        with pytest.raises(FormatError, match="out of range"):
            load_gold(path, num_classes=2)

    def test_label_matrix_writer_round_trip(self, tmp_path):
        path = tmp_path / "labels.csv"
        lm = LabelMatrix(np.array([[1, -1], [0, 1]]), num_classes=2)
        write_label_matrix(path, lm)
        again = load_label_matrix(path, num_classes=2)
        np.testing.assert_array_equal(again.values, lm.values)


class TestPseudoLabeling:
    def test_soft_rows_must_normalize(self):
        with pytest.raises(FormatError, match="sums to"):
            PseudoLabeling(hard=np.array([0]), num_classes=2, soft=np.array([[0.5, 0.3]]))

    def test_hard_must_match_argmax(self):
        with pytest.raises(FormatError, match="argmax"):
            PseudoLabeling(hard=np.array([0]), num_classes=2, soft=np.array([[0.2, 0.8]]))

    def test_abstain_rows_exempt_from_argmax(self):
        p = PseudoLabeling(hard=np.array([-1]), num_classes=2, soft=np.array([[0.2, 0.8]]))
        assert p.covered().size == 0

    def test_coverage(self):
        p = PseudoLabeling(hard=np.array([0, -1, 1, 1]), num_classes=2)
        assert p.coverage == 0.75
        np.testing.assert_array_equal(p.covered(), [0, 2, 3])


class TestDatasetValidation:
    def _dataset(self, n_labels, n_emb, gold=None):
        labels = LabelMatrix(np.zeros((n_labels, 2), dtype=int), num_classes=2)
        emb = EmbeddingMatrix(np.zeros((n_emb, 3)))
        return Dataset(labels=labels, embeddings=emb, gold=gold)

    def test_consistent_passes(self):
        d = self._dataset(10, 10)
        validate_dataset(d)

    def test_mismatch_names_pair(self):
        with pytest.raises(FormatError, match="labels n=10, embeddings n=9"):
            self._dataset(10, 9)

    def test_gold_length_checked(self):
        with pytest.raises(FormatError, match="gold"):
            self._dataset(10, 10, gold=np.zeros(9, dtype=int))

    def test_gold_range_checked(self):
        with pytest.raises(FormatError, match="out of range"):
            self._dataset(3, 3, gold=np.array([0, 1, 2]))
