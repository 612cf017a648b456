"""Dataset ingestion, synthetic problem generation, and index partitioning.

Datasets are finite-sum problems given by a feature matrix A (row i = a_i)
and a label vector b. Partitionings split the index set {0..n-1} into
disjoint cells, each carrying a selection probability.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

# Rows denser than this are stored as a plain ndarray, sparser as CSR.
DENSE_THRESHOLD = 0.25

PROB_SUM_TOL = 1e-12


class LibsvmParseError(ValueError):
    """Malformed LIBSVM input; carries the offending 1-based line number."""

    def __init__(self, lineno, message):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class Dataset:
    """Feature matrix (n x d) plus an n-vector of real labels.

    ``features`` is either a dense ndarray or a scipy CSR matrix; both
    support the operations used downstream (matvec, row slicing, Gram
    products). Treat instances as immutable.
    """

    features: object
    labels: np.ndarray

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def d(self):
        return self.features.shape[1]

    @property
    def is_sparse(self):
        return sp.issparse(self.features)

    def row_sq_norms(self):
        """Per-example squared row norms ||a_i||^2, shape (n,)."""
        if self.is_sparse:
            return np.asarray(self.features.multiply(self.features).sum(axis=1)).ravel()
        return np.einsum("ij,ij->i", self.features, self.features)

    def dense_features(self):
        if self.is_sparse:
            return self.features.toarray()
        return self.features

    def __post_init__(self):
        n, d = self.features.shape
        if n < 1 or d < 1:
            raise ValueError(f"need n >= 1 and d >= 1, got shape ({n}, {d})")
        if self.labels.shape != (n,):
            raise ValueError(f"labels shape {self.labels.shape} does not match n={n}")


def _pack_features(rows_idx, rows_val, n, d):
    """Build the feature matrix from per-row (index, value) lists.

    Dense when the overall density exceeds DENSE_THRESHOLD, CSR otherwise.
    The contract is identical either way.
    """
    nnz = sum(len(ix) for ix in rows_idx)
    density = nnz / float(n * d)
    if density > DENSE_THRESHOLD:
        A = np.zeros((n, d))
        for r, (ix, vals) in enumerate(zip(rows_idx, rows_val)):
            A[r, ix] = vals
        return A
    indptr = np.zeros(n + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(ix) for ix in rows_idx])
    indices = np.concatenate([np.asarray(ix, dtype=np.int64) for ix in rows_idx]) if nnz else np.zeros(0, dtype=np.int64)
    values = np.concatenate([np.asarray(v, dtype=np.float64) for v in rows_val]) if nnz else np.zeros(0)
    return sp.csr_matrix((values, indices, indptr), shape=(n, d))


def parse_libsvm(source, dimension=None):
    """Parse LIBSVM text (``label idx:val idx:val ...``, 1-based indices).

    ``source`` may be a str, bytes, or an iterable of lines. Feature
    indices must be positive and strictly increasing within a line; they
    are mapped to 0-based columns. The number of columns is the largest
    referenced index, unless ``dimension`` overrides it.

    Raises LibsvmParseError on malformed lines (with the line number) and
    on empty input.
    """
    if isinstance(source, bytes):
        source = source.decode("ascii")
    if isinstance(source, str):
        lines = source.splitlines()
    else:
        lines = [ln.decode("ascii") if isinstance(ln, bytes) else ln for ln in source]

    labels = []
    rows_idx = []
    rows_val = []
    max_idx = 0
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        try:
            label = float(tokens[0])
        except ValueError:
            raise LibsvmParseError(lineno, f"non-numeric label {tokens[0]!r}") from None
        idx = []
        vals = []
        prev = 0
        for tok in tokens[1:]:
            head, sep, tail = tok.partition(":")
            if not sep:
                raise LibsvmParseError(lineno, f"expected idx:val, got {tok!r}")
            try:
                j = int(head)
                v = float(tail)
            except ValueError:
                raise LibsvmParseError(lineno, f"bad feature entry {tok!r}") from None
            if j <= 0:
                raise LibsvmParseError(lineno, f"feature index {j} is not positive")
            if j <= prev:
                raise LibsvmParseError(lineno, f"feature indices not strictly increasing at {tok!r}")
            if dimension is not None and j > dimension:
                raise LibsvmParseError(lineno, f"feature index {j} exceeds dimension {dimension}")
            prev = j
            idx.append(j - 1)
            vals.append(v)
        max_idx = max(max_idx, prev)
        labels.append(label)
        rows_idx.append(idx)
        rows_val.append(vals)

    if not labels:
        raise LibsvmParseError(0, "empty input")
    d = dimension if dimension is not None else max_idx
    if d < 1:
        raise LibsvmParseError(0, "no feature indices present and no dimension given")
    features = _pack_features(rows_idx, rows_val, len(labels), d)
    return Dataset(features=features, labels=np.asarray(labels, dtype=np.float64))


def load_libsvm(path, dimension=None):
    with open(path, "rb") as fh:
        return parse_libsvm(fh.read(), dimension=dimension)


def dump_libsvm(dataset):
    """Serialize a Dataset back to LIBSVM text (zeros omitted).

    Values are written with 17 significant digits so that parsing the
    output reproduces the matrix bit for bit. Reparse with
    ``dimension=dataset.d`` in case trailing columns are all zero.
    """
    A = dataset.features.tocsr() if dataset.is_sparse else None
    out = []
    for i in range(dataset.n):
        parts = [f"{dataset.labels[i]:.17g}"]
        if A is not None:
            row = A.getrow(i)
            cols, vals = row.indices, row.data
            order = np.argsort(cols)
            cols, vals = cols[order], vals[order]
        else:
            row = dataset.features[i]
            cols = np.nonzero(row)[0]
            vals = row[cols]
        parts.extend(f"{j + 1}:{v:.17g}" for j, v in zip(cols, vals))
        out.append(" ".join(parts))
    return "\n".join(out) + "\n"


def generate_synthetic(n, d, seed, noise=0.0):
    """Gaussian design with labels from a planted linear model.

    Rows are standard normal; labels are A @ x_true plus centered Gaussian
    noise scaled by ``noise``. Deterministic for a fixed seed.
    """
    if n < 1 or d < 1:
        raise ValueError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, d))
    x_true = rng.standard_normal(d)
    b = A @ x_true
    if noise:
        b = b + noise * rng.standard_normal(n)
    return Dataset(features=A, labels=b)


def with_sign_labels(dataset):
    """Copy of the dataset with labels mapped to {-1, +1} via sign (0 -> +1).

    Used to turn regression labels into classification targets for the
    logistic model.
    """
    s = np.where(dataset.labels >= 0.0, 1.0, -1.0)
    return Dataset(features=dataset.features, labels=s)


@dataclass(frozen=True)
class Partitioning:
    """Disjoint index cells covering {0..n-1} with selection probabilities."""

    cells: tuple
    probs: np.ndarray
    n: int
    sizes: np.ndarray = field(init=False)

    def __post_init__(self):
        sizes = np.asarray([len(c) for c in self.cells], dtype=np.int64)
        object.__setattr__(self, "sizes", sizes)
        if np.any(sizes < 1):
            raise ValueError("every cell must be non-empty")
        all_idx = np.concatenate(self.cells)
        if len(all_idx) != self.n or len(np.unique(all_idx)) != self.n:
            raise ValueError("cells must be disjoint and cover all indices")
        if all_idx.min() != 0 or all_idx.max() != self.n - 1:
            raise ValueError("cell indices must cover exactly 0..n-1")
        if np.any(self.probs <= 0.0):
            raise ValueError("cell probabilities must be positive")
        if abs(self.probs.sum() - 1.0) > PROB_SUM_TOL:
            raise ValueError(f"cell probabilities sum to {self.probs.sum()!r}, not 1")

    @property
    def num_cells(self):
        return len(self.cells)

    @property
    def min_cell_size(self):
        return int(self.sizes.min())

    def cell_of(self):
        """Index -> cell id lookup, shape (n,)."""
        owner = np.empty(self.n, dtype=np.int64)
        for j, c in enumerate(self.cells):
            owner[c] = j
        return owner


def partition(n, num_cells, scheme="contiguous", seed=None, prob_rule="proportional"):
    """Split {0..n-1} into ``num_cells`` cells.

    contiguous: blocks of ceil(n/K), last cell takes the remainder.
    shuffled: seeded permutation first, then a balanced split (sizes
    differing by at most one).

    prob_rule "proportional" sets q_j = n_j / n (uniform per-example
    inclusion under the fixed-size law); "uniform" sets q_j = 1/K.
    """
    if num_cells < 1 or num_cells > n:
        raise ValueError(f"need 1 <= num_cells <= n, got K={num_cells}, n={n}")
    if scheme == "contiguous":
        block = -(-n // num_cells)
        tail = n - (num_cells - 1) * block
        if tail < 1:
            raise ValueError(
                f"contiguous blocks of {block} leave an empty final cell for n={n}, "
                f"K={num_cells}; use scheme='shuffled'"
            )
        cells = [np.arange(j * block, min((j + 1) * block, n)) for j in range(num_cells)]
    elif scheme == "shuffled":
        perm = np.random.default_rng(seed).permutation(n)
        cells = [np.sort(part) for part in np.array_split(perm, num_cells)]
    else:
        raise ValueError(f"unknown scheme {scheme!r}")

    sizes = np.array([len(c) for c in cells], dtype=np.float64)
    if prob_rule == "proportional":
        probs = sizes / n
    elif prob_rule == "uniform":
        probs = np.full(num_cells, 1.0 / num_cells)
    else:
        raise ValueError(f"unknown prob_rule {prob_rule!r}")
    return Partitioning(cells=tuple(cells), probs=probs, n=n)
