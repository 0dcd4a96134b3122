"""Multi-block data model, preprocessing and permutation schemes.

A dataset holds ``k`` blocks, each a ``p_i x n`` matrix of variables (rows)
measured on a shared, ordered set of ``n`` samples (columns). Values are
immutable; every operation returns a new dataset.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import DegenerateBlockError, InputError
from .linalg import as_matrix, frobenius_norm


def _frozen(a):
    a = np.array(a, dtype=np.float64, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Block:
    """One datatype: a ``p_i x n`` matrix plus its row labels.

    ``total_variation`` is the Frobenius norm recorded by
    :func:`scale_blocks`; it stays ``None`` until scaling is applied.
    """

    name: str
    data: np.ndarray
    variable_labels: tuple = None
    total_variation: float = None

    def __post_init__(self):
        data = as_matrix(self.data, name=f"block {self.name!r}")
        object.__setattr__(self, "data", _frozen(data))
        labels = self.variable_labels
        if labels is None:
            labels = tuple(f"{self.name}_{j}" for j in range(data.shape[0]))
        labels = tuple(str(x) for x in labels)
        if len(labels) != data.shape[0]:
            raise InputError(
                f"block {self.name!r} has {data.shape[0]} rows but "
                f"{len(labels)} variable labels"
            )
        object.__setattr__(self, "variable_labels", labels)

    @property
    def shape(self):
        return self.data.shape


@dataclass(frozen=True)
class MultiBlockDataset:
    """Ordered blocks sharing one sample axis."""

    blocks: tuple
    sample_labels: tuple = None
    row_centered: bool = False
    block_scaled: bool = False
    _offsets: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        blocks = tuple(self.blocks)
        if not blocks:
            raise InputError("a dataset needs at least one block")
        for b in blocks:
            if not isinstance(b, Block):
                raise InputError(f"expected Block instances, got {type(b).__name__}")
        n = blocks[0].data.shape[1]
        for b in blocks[1:]:
            if b.data.shape[1] != n:
                raise InputError(
                    f"block {b.name!r} has {b.data.shape[1]} samples, "
                    f"block {blocks[0].name!r} has {n}"
                )
        names = [b.name for b in blocks]
        if len(set(names)) != len(names):
            raise InputError(f"block names must be unique, got {names}")
        labels = self.sample_labels
        if labels is None:
            labels = tuple(f"sample_{j}" for j in range(n))
        labels = tuple(str(x) for x in labels)
        if len(labels) != n:
            raise InputError(f"{len(labels)} sample labels for {n} samples")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "sample_labels", labels)
        offsets = np.concatenate([[0], np.cumsum([b.data.shape[0] for b in blocks])])
        object.__setattr__(self, "_offsets", tuple(int(o) for o in offsets))

    @classmethod
    def from_arrays(cls, arrays, names=None, sample_labels=None, variable_labels=None):
        """Build a dataset from ``p_i x n`` arrays."""
        arrays = list(arrays)
        if names is None:
            names = [f"block{i + 1}" for i in range(len(arrays))]
        if variable_labels is None:
            variable_labels = [None] * len(arrays)
        blocks = tuple(
            Block(name, a, labels)
            for name, a, labels in zip(names, arrays, variable_labels)
        )
        return cls(blocks, sample_labels)

    @property
    def n_blocks(self):
        return len(self.blocks)

    @property
    def n_samples(self):
        return self.blocks[0].data.shape[1]

    @property
    def names(self):
        return tuple(b.name for b in self.blocks)

    @property
    def dims(self):
        return tuple(b.data.shape[0] for b in self.blocks)

    @property
    def offsets(self):
        """Row offsets of each block inside the concatenated matrix."""
        return self._offsets

    @property
    def matrices(self):
        return [b.data for b in self.blocks]

    def split(self, stacked):
        """Cut a ``p x m`` matrix into per-block row slices."""
        o = self._offsets
        return [stacked[o[i]:o[i + 1]] for i in range(self.n_blocks)]

    def with_matrices(self, matrices, **flags):
        """Copy of the dataset with each block's data replaced."""
        blocks = tuple(
            replace(b, data=m) for b, m in zip(self.blocks, matrices)
        )
        return replace(self, blocks=blocks, **flags)


def center_rows(ds):
    """Subtract each row's mean, in every block.

    Zero-variance rows become all-zero rows.
    """
    if ds.n_samples < 1:
        raise InputError("cannot center a dataset with no samples")
    centered = [m - m.mean(axis=1, keepdims=True) for m in ds.matrices]
    return ds.with_matrices(centered, row_centered=True)


def scale_blocks(ds):
    """Divide each block by its Frobenius norm so that every block has norm 1.

    The original norm is kept in ``Block.total_variation``. Scaling an
    already scaled dataset returns it unchanged.
    """
    if ds.block_scaled:
        return ds
    blocks = []
    for b in ds.blocks:
        norm = frobenius_norm(b.data)
        if norm == 0.0:
            raise DegenerateBlockError(f"block {b.name!r} has zero total variation")
        blocks.append(replace(b, data=b.data / norm, total_variation=norm))
    return replace(ds, blocks=tuple(blocks), block_scaled=True)


def preprocess(ds, center=True, scale=True):
    """Row-center, then block-scale."""
    if center and not ds.row_centered:
        ds = center_rows(ds)
    if scale:
        ds = scale_blocks(ds)
    return ds


def concatenate(ds):
    """Stack all blocks vertically into one ``(sum p_i) x n`` matrix."""
    return np.vstack(ds.matrices)


def _rng(seed):
    return np.random.default_rng(seed)


def permute_within_rows(m, seed=None):
    """Shuffle the entries of every row independently.

    Each row keeps its multiset of values; associations between rows are
    destroyed.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.size == 0:
        return m.copy()
    rng = _rng(seed)
    order = np.argsort(rng.random(m.shape), axis=1, kind="stable")
    return np.take_along_axis(m, order, axis=1)


def permute_columns_per_block(ds, seed=None):
    """Apply an independent column permutation to each block.

    Rows inside a block move together, so within-block covariance is kept
    while the sample alignment between blocks is broken.
    """
    rng = _rng(seed)
    permuted = [m[:, rng.permutation(m.shape[1])] for m in ds.matrices]
    return ds.with_matrices(permuted)
