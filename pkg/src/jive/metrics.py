"""Consensus PCA baseline and subtype-separation (SWISS) scores."""

import numpy as np

from .exceptions import DegenerateBlockError, InputError, RankBoundsError
from .linalg import as_matrix, truncated_svd
from .multiblock import MultiBlockDataset, concatenate


def consensus_pca(ds, r):
    """Principal components of the concatenated (block-scaled) data.

    Returns
    -------
    scores : ndarray of shape (r, n)
        ``diag(s) @ vt`` of the leading ``r`` singular triples.
    loadings : ndarray of shape (p, r)
        Orthonormal left singular vectors.
    """
    X = concatenate(ds) if isinstance(ds, MultiBlockDataset) else as_matrix(ds)
    if not 0 <= r <= min(X.shape):
        raise RankBoundsError(f"rank {r} outside [0, {min(X.shape)}]")
    svd = truncated_svd(X, r)
    return svd.s[:, None] * svd.vt, svd.u


def _groups(labels, n):
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.shape[0] != n:
        raise InputError(f"expected {n} group labels, got shape {labels.shape}")
    groups, inverse = np.unique(labels, return_inverse=True)
    if groups.size < 2:
        raise InputError("SWISS needs at least two groups")
    return groups.size, inverse


def _within_ss(m, inverse, n_groups):
    counts = np.bincount(inverse, minlength=n_groups)
    sums = np.zeros((m.shape[0], n_groups))
    np.add.at(sums.T, inverse, m.T)
    means = sums / counts
    return float(np.sum((m - means[:, inverse]) ** 2))


def swiss_score(m, labels):
    """Within-group sum of squares over total sum of squares.

    Columns of `m` are samples. Lower values mean the groups are better
    separated; 0 means every column equals its group mean.
    """
    m = as_matrix(m)
    n_groups, inverse = _groups(labels, m.shape[1])
    total = float(np.sum((m - m.mean(axis=1, keepdims=True)) ** 2))
    if total == 0.0:
        raise DegenerateBlockError("matrix has zero total variability")
    return _within_ss(m, inverse, n_groups) / total


def swiss_permutation_test(m_a, m_b, labels, n_perm=999, seed=None):
    """Two-sided label-permutation test of equal SWISS scores.

    The statistic is ``|SWISS(m_a) - SWISS(m_b)|``. Each replicate applies
    one random permutation of the labels to both matrices. Returns the
    add-one p-value.
    """
    m_a = as_matrix(m_a, "m_a")
    m_b = as_matrix(m_b, "m_b")
    if m_a.shape[1] != m_b.shape[1]:
        raise InputError(f"column counts differ: {m_a.shape[1]} vs {m_b.shape[1]}")
    n_groups, inverse = _groups(labels, m_a.shape[1])
    ca = m_a - m_a.mean(axis=1, keepdims=True)
    cb = m_b - m_b.mean(axis=1, keepdims=True)
    ta, tb = float(np.sum(ca ** 2)), float(np.sum(cb ** 2))
    if ta == 0.0 or tb == 0.0:
        raise DegenerateBlockError("matrix has zero total variability")

    def stat(inv):
        return abs(_within_ss(ca, inv, n_groups) / ta - _within_ss(cb, inv, n_groups) / tb)

    observed = stat(inverse)
    rng = np.random.default_rng(seed)
    null = np.array([stat(rng.permutation(inverse)) for _ in range(int(n_perm))])
    # ties within rounding count against significance
    hits = np.count_nonzero(null >= observed - 1e-12 * max(1.0, observed))
    return float((1 + hits) / (1 + n_perm))
