"""Dataset containers and file I/O.

Label matrices are integer CSV with -1 for abstention. Embeddings live either
in a small binary format (magic ``WSEMB1\\x00\\x00``, two little-endian u32
dims, then float32 payload) or in headerless CSV. All containers validate on
construction and are immutable afterward, so they are safe to share between
threads.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, ParameterError

ABSTAIN = -1

EMBEDDING_MAGIC = b"WSEMB1\x00\x00"


def _freeze(arr):
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class LabelMatrix:
    """n x m labeling-function outputs; entries in {-1} | {0..C-1}, -1 = abstain."""

    values: np.ndarray
    num_classes: int

    def __post_init__(self):
        if self.num_classes < 2:
            raise ParameterError(f"num_classes must be >= 2, got {self.num_classes}")
        v = np.array(self.values, dtype=np.int64, order="C", copy=True)
        if v.ndim != 2:
            raise FormatError(f"label matrix must be 2-d, got shape {v.shape}")
        if v.shape[0] < 1 or v.shape[1] < 1:
            raise FormatError(f"label matrix must be at least 1x1, got shape {v.shape}")
        bad = np.argwhere((v < ABSTAIN) | (v >= self.num_classes))
        if bad.size:
            r, c = bad[0]
            raise FormatError(
                f"label {v[r, c]} out of range [0,{self.num_classes - 1}] "
                f"at row {r + 1}, column {c + 1}"
            )
        object.__setattr__(self, "values", _freeze(v))

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def m(self):
        return self.values.shape[1]


@dataclass(frozen=True)
class EmbeddingMatrix:
    """n x d real representation matrix, one example per row."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, order="C", copy=True)
        if v.ndim != 2:
            raise FormatError(f"embedding matrix must be 2-d, got shape {v.shape}")
        if v.shape[0] < 1 or v.shape[1] < 1:
            raise FormatError(f"embedding matrix must be at least 1x1, got shape {v.shape}")
        bad = np.argwhere(~np.isfinite(v))
        if bad.size:
            r, c = bad[0]
            raise FormatError(f"non-finite value at (row {r + 1}, column {c + 1})")
        object.__setattr__(self, "values", _freeze(v))

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def d(self):
        return self.values.shape[1]


@dataclass(frozen=True)
class PseudoLabeling:
    """Per-example hard pseudolabel (-1 = abstain) plus optional soft distribution."""

    hard: np.ndarray
    num_classes: int
    soft: np.ndarray | None = None

    def __post_init__(self):
        if self.num_classes < 2:
            raise ParameterError(f"num_classes must be >= 2, got {self.num_classes}")
        h = np.array(self.hard, dtype=np.int64, copy=True).reshape(-1)
        if h.size < 1:
            raise FormatError("empty pseudolabeling")
        bad = np.flatnonzero((h < ABSTAIN) | (h >= self.num_classes))
        if bad.size:
            i = bad[0]
            raise FormatError(
                f"pseudolabel {h[i]} out of range [0,{self.num_classes - 1}] at row {i + 1}"
            )
        object.__setattr__(self, "hard", _freeze(h))
        if self.soft is not None:
            s = np.array(self.soft, dtype=np.float64, order="C", copy=True)
            if s.shape != (h.size, self.num_classes):
                raise FormatError(
                    f"soft labels must have shape {(h.size, self.num_classes)}, got {s.shape}"
                )
            if (s < 0).any() or not np.isfinite(s).all():
                raise FormatError("soft labels must be finite and non-negative")
            sums = s.sum(axis=1)
            off = np.flatnonzero(np.abs(sums - 1.0) > 1e-6)
            if off.size:
                i = off[0]
                raise FormatError(f"soft label row {i + 1} sums to {sums[i]!r}, expected 1")
            cov = h != ABSTAIN
            mismatch = np.flatnonzero(cov & (h != np.argmax(s, axis=1)))
            if mismatch.size:
                i = mismatch[0]
                raise FormatError(
                    f"hard label {h[i]} at row {i + 1} is not the argmax of its soft row"
                )
            object.__setattr__(self, "soft", _freeze(s))

    @property
    def n(self):
        return self.hard.size

    def covered(self):
        """Indices of examples with a non-abstain hard label, ascending."""
        return np.flatnonzero(self.hard != ABSTAIN)

    @property
    def coverage(self):
        return float(np.count_nonzero(self.hard != ABSTAIN)) / self.hard.size


@dataclass(frozen=True)
class Dataset:
    labels: LabelMatrix
    embeddings: EmbeddingMatrix
    gold: np.ndarray | None = None

    def __post_init__(self):
        if self.gold is not None:
            g = np.array(self.gold, dtype=np.int64, copy=True).reshape(-1)
            object.__setattr__(self, "gold", _freeze(g))
        validate_dataset(self)


def validate_dataset(d):
    """Check cross-field consistency of a Dataset; silent on success."""
    if d.labels.n != d.embeddings.n:
        raise FormatError(
            f"dimension mismatch: labels n={d.labels.n}, embeddings n={d.embeddings.n}"
        )
    if d.gold is not None:
        if d.gold.size != d.labels.n:
            raise FormatError(
                f"dimension mismatch: labels n={d.labels.n}, gold n={d.gold.size}"
            )
        bad = np.flatnonzero((d.gold < 0) | (d.gold >= d.labels.num_classes))
        if bad.size:
            i = bad[0]
            raise FormatError(
                f"gold label {d.gold[i]} out of range "
                f"[0,{d.labels.num_classes - 1}] at row {i + 1}"
            )


def _parse_int_csv(path):
    rows = []
    width = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if width is None:
                width = len(fields)
            elif len(fields) != width:
                raise FormatError(
                    f"ragged row {lineno}: expected {width} values, got {len(fields)}"
                )
            parsed = []
            for col, field in enumerate(fields, start=1):
                try:
                    parsed.append(int(field))
                except ValueError:
                    raise FormatError(
                        f"bad integer {field.strip()!r} at row {lineno}, column {col}"
                    ) from None
            rows.append(parsed)
    if not rows:
        raise FormatError(f"{path}: no data rows")
    return np.array(rows, dtype=np.int64)


def load_label_matrix(path, num_classes):
    """Read a headerless integer CSV into a validated LabelMatrix."""
    return LabelMatrix(_parse_int_csv(path), num_classes)


def load_gold(path, num_classes=None):
    """Read gold labels, one integer per line; optionally range-check them."""
    arr = _parse_int_csv(path)
    if arr.shape[1] != 1:
        raise FormatError(f"gold file must have one value per line, got {arr.shape[1]}")
    g = arr[:, 0]
    if num_classes is not None:
        bad = np.flatnonzero((g < 0) | (g >= num_classes))
        if bad.size:
            i = bad[0]
            raise FormatError(
                f"gold label {g[i]} out of range [0,{num_classes - 1}] at row {i + 1}"
            )
    return g


def load_embeddings(path):
    """Read embeddings from the binary format, falling back to CSV text."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[: len(EMBEDDING_MAGIC)] == EMBEDDING_MAGIC:
        header_len = len(EMBEDDING_MAGIC) + 8
        if len(raw) < header_len:
            raise FormatError(f"{path}: truncated header")
        n, d = struct.unpack_from("<II", raw, len(EMBEDDING_MAGIC))
        if n < 1 or d < 1:
            raise FormatError(f"{path}: bad dimensions n={n}, d={d}")
        expected = header_len + 4 * n * d
        if len(raw) < expected:
            raise FormatError(
                f"{path}: truncated payload, expected {expected} bytes, got {len(raw)}"
            )
        if len(raw) > expected:
            raise FormatError(
                f"{path}: trailing bytes, expected {expected} bytes, got {len(raw)}"
            )
        flat = np.frombuffer(raw, dtype="<f4", count=n * d, offset=header_len)
        return EmbeddingMatrix(flat.reshape(n, d).astype(np.float64))
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError:
        raise FormatError(f"{path}: bad magic and not decodable as CSV text") from None
    rows = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        fields = line.split(",")
        if width is None:
            width = len(fields)
        elif len(fields) != width:
            raise FormatError(
                f"ragged row {lineno}: expected {width} values, got {len(fields)}"
            )
        parsed = []
        for col, field in enumerate(fields, start=1):
            try:
                parsed.append(float(field))
            except ValueError:
                raise FormatError(
                    f"bad number {field.strip()!r} at row {lineno}, column {col}"
                ) from None
        rows.append(parsed)
    if not rows:
        raise FormatError(f"{path}: no data rows")
    return EmbeddingMatrix(np.array(rows, dtype=np.float64))


def write_embeddings(path, emb):
    """Write the binary embedding format (float32 payload)."""
    values = emb.values if isinstance(emb, EmbeddingMatrix) else np.asarray(emb, dtype=np.float64)
    n, d = values.shape
    with open(path, "wb") as fh:
        fh.write(EMBEDDING_MAGIC)
        fh.write(struct.pack("<II", n, d))
        fh.write(np.ascontiguousarray(values, dtype="<f4").tobytes())


def write_label_matrix(path, labels):
    values = labels.values if isinstance(labels, LabelMatrix) else np.asarray(labels, dtype=np.int64)
    with open(path, "w", encoding="utf-8") as fh:
        for row in values:
            fh.write(",".join(str(int(v)) for v in row))
            fh.write("\n")


def write_gold(path, gold):
    with open(path, "w", encoding="utf-8") as fh:
        for v in np.asarray(gold, dtype=np.int64).reshape(-1):
            fh.write(f"{int(v)}\n")
