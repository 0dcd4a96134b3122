"""Dense linear-algebra primitives.

Every routine here is a pure function of its inputs. Singular vectors follow a
fixed sign convention so that repeated calls give identical factors.
"""

from typing import NamedTuple

import numpy as np
import scipy.linalg

from .exceptions import InputError, RankBoundsError

# Singular values below RANK_RTOL * s_max are treated as zero.
RANK_RTOL = 1e-10


class TruncatedSVD(NamedTuple):
    """Leading singular triples ``m ~= u @ diag(s) @ vt``."""

    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray

    @property
    def rank(self):
        return self.s.shape[0]

    def reconstruct(self):
        return (self.u * self.s) @ self.vt


def as_matrix(m, name="matrix"):
    """Return `m` as a 2-d float64 array, rejecting NaN and Inf."""
    arr = np.asarray(m, dtype=np.float64)
    if arr.ndim != 2:
        raise InputError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))[0]
        raise InputError(
            f"{name} has a non-finite entry at row {bad[0]}, column {bad[1]}"
        )
    return arr


def _fix_signs(u, vt):
    # largest-magnitude entry of each u column made nonnegative; magnitudes
    # within rounding of the maximum count as tied and the lowest row wins
    if u.shape[1] == 0 or u.shape[0] == 0:
        return u, vt
    mag = np.abs(u)
    top = mag.max(axis=0)
    idx = np.argmax(mag >= top * (1 - 1e-12), axis=0)
    signs = np.sign(u[idx, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs, vt * signs[:, None]


def truncated_svd(m, r):
    """Leading `r` singular triples of `m`.

    Parameters
    ----------
    m : array-like of shape (p, n)
    r : int
        Number of triples, ``0 <= r <= min(p, n)``.

    Returns
    -------
    TruncatedSVD
        ``u`` is (p, r) with orthonormal columns, ``s`` is nonincreasing and
        ``vt`` is (r, n) with orthonormal rows. Within each triple the
        largest-magnitude entry of the ``u`` column is nonnegative.
    """
    m = as_matrix(m)
    p, n = m.shape
    r = int(r)
    if r < 0 or r > min(p, n):
        raise RankBoundsError(f"rank {r} outside [0, {min(p, n)}] for a {p}x{n} matrix")
    if r == 0:
        return TruncatedSVD(np.zeros((p, 0)), np.zeros(0), np.zeros((0, n)))
    try:
        u, s, vt = scipy.linalg.svd(m, full_matrices=False, check_finite=False)
    except np.linalg.LinAlgError:
        u, s, vt = scipy.linalg.svd(
            m, full_matrices=False, check_finite=False, lapack_driver="gesvd"
        )
    u, vt = _fix_signs(u[:, :r], vt[:r])
    return TruncatedSVD(np.ascontiguousarray(u), s[:r].copy(), np.ascontiguousarray(vt))


def gram_svd(m, r):
    """Leading `r` singular triples from an eigendecomposition of the smaller Gram matrix.

    Several times faster than :func:`truncated_svd` on small dense matrices
    but accurate only to about ``eps * s[0]**2 / s[k]**2`` relative error, so
    it is meant for statistics evaluated at loose tolerances. Triples with a
    zero singular value get zero vectors.
    """
    m = np.asarray(m, dtype=np.float64)
    p, n = m.shape
    r = int(r)
    if r < 0 or r > min(p, n):
        raise RankBoundsError(f"rank {r} outside [0, {min(p, n)}] for a {p}x{n} matrix")
    if r == 0:
        return TruncatedSVD(np.zeros((p, 0)), np.zeros(0), np.zeros((0, n)))
    wide = p <= n
    g = m @ m.T if wide else m.T @ m
    d = g.shape[0]
    w, vecs = scipy.linalg.eigh(g, subset_by_index=[d - r, d - 1], check_finite=False,
                                driver="evr")
    w, vecs = w[::-1], vecs[:, ::-1]
    s = np.sqrt(np.maximum(w, 0.0))
    inv = np.divide(1.0, s, out=np.zeros_like(s), where=s > 0)
    if wide:
        u = vecs
        vt = (u.T @ m) * inv[:, None]
    else:
        vt = vecs.T
        u = (m @ vecs) * inv
    u, vt = _fix_signs(u, vt)
    return TruncatedSVD(u, s, vt)


def singular_values(m):
    """All singular values of `m`, in nonincreasing order."""
    m = as_matrix(m)
    if m.size == 0:
        return np.zeros(0)
    return scipy.linalg.svdvals(m, check_finite=False)


def leading_singular_value(m):
    """Largest singular value, via the eigenvalues of the smaller Gram matrix.

    Cheaper than a full SVD and accurate to working precision for the
    comparisons made in permutation tests.
    """
    if m.size == 0:
        return 0.0
    g = m @ m.T if m.shape[0] <= m.shape[1] else m.T @ m
    top = scipy.linalg.eigvalsh(g, subset_by_index=[g.shape[0] - 1, g.shape[0] - 1],
                                check_finite=False)[0]
    return float(np.sqrt(max(top, 0.0)))


def numerical_rank(m, rtol=RANK_RTOL):
    s = singular_values(m)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def row_space_basis(m, rtol=RANK_RTOL):
    """Orthonormal basis (as rows) of the row space of `m`."""
    m = as_matrix(m)
    n = m.shape[1]
    if m.size == 0:
        return np.zeros((0, n))
    _, s, vt = scipy.linalg.svd(m, full_matrices=False, check_finite=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((0, n))
    k = int(np.sum(s > rtol * s[0]))
    return vt[:k]


def row_space_projector(m):
    """Orthogonal projector onto the row space of `m`.

    Returns the symmetric idempotent (n, n) matrix ``P`` with ``m @ P == m``
    built from the right singular vectors whose singular values exceed
    ``RANK_RTOL`` times the largest one.
    """
    basis = row_space_basis(m)
    return basis.T @ basis


def frobenius_norm(m):
    """Square root of the sum of squared entries."""
    m = np.asarray(m, dtype=np.float64)
    return float(np.sqrt(np.sum(m * m)))


def squared_norm(m):
    m = np.asarray(m, dtype=np.float64)
    return float(np.sum(m * m))
