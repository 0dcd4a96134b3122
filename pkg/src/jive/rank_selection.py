"""Two-stage permutation selection of joint and individual ranks.

Stage one finds the effective rank of every block on its own: the leading
singular value is tested against within-row permutations, removed when
significant, and the test repeated. Stage two raises the joint rank while
the residual ``X_i - J_i`` still holds more cross-block structure than the
same blocks with their sample order shuffled independently.
"""

from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from .core import JiveRanks, _fit, reduce_blocks
from .exceptions import InputError
from .linalg import (
    RANK_RTOL,
    as_matrix,
    gram_svd,
    leading_singular_value,
    squared_norm,
    truncated_svd,
)
from .multiblock import MultiBlockDataset, permute_within_rows

DEFAULT_N_PERM = 1000
DEFAULT_ALPHA = 0.01
# Refits inside the joint test stop early and use Gram-based triples: the
# statistic is a single sum of squares and observed and permuted data are
# treated identically.
REFIT_MAX_ITER = 50
REFIT_TOL = 1e-5


@dataclass(frozen=True)
class RankSelection:
    effective_ranks: tuple
    joint_rank: int
    individual_ranks: tuple
    stage1_pvalues: tuple
    stage2_pvalues: tuple
    n_perm: int
    alpha: float
    seed: object = None

    @property
    def ranks(self):
        return JiveRanks(self.joint_rank, self.individual_ranks)

    def as_dict(self):
        return {
            "effective_ranks": list(self.effective_ranks),
            "joint_rank": self.joint_rank,
            "individual_ranks": list(self.individual_ranks),
            "stage1_pvalues": [list(p) for p in self.stage1_pvalues],
            "stage2_pvalues": list(self.stage2_pvalues),
            "n_perm": self.n_perm,
            "alpha": self.alpha,
            "seed": self.seed,
        }


def permutation_pvalue(observed, null):
    """Add-one p-value ``(1 + #{null >= observed}) / (1 + len(null))``."""
    null = np.asarray(null)
    return float((1 + np.count_nonzero(null >= observed)) / (1 + null.size))


def _check_test_params(n_perm, alpha):
    if int(n_perm) < 1:
        raise InputError(f"n_perm must be >= 1, got {n_perm}")
    if not 0 < alpha < 1:
        raise InputError(f"alpha must lie in (0, 1), got {alpha}")


def _seed_sequence(seed):
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def _run_replicates(func, args, seeds, n_jobs):
    # results come back in seed order, whatever the worker count
    if n_jobs in (None, 1):
        return [func(*args, s) for s in seeds]
    chunks = np.array_split(np.arange(len(seeds)), max(1, min(len(seeds), 4 * abs(n_jobs))))
    out = Parallel(n_jobs=n_jobs)(
        delayed(_chunk)(func, args, [seeds[j] for j in idx]) for idx in chunks if len(idx)
    )
    return [v for part in out for v in part]


def _chunk(func, args, seeds):
    return [func(*args, s) for s in seeds]


def _stage1_null(residual, left, right, seed):
    perm = permute_within_rows(residual, seed)
    # same deflation geometry as the observed residual
    if left.shape[1]:
        perm = perm - left @ (left.T @ perm)
        perm = perm - (perm @ right.T) @ right
    norm = np.sqrt(squared_norm(perm))
    if norm == 0.0:
        return 0.0
    return leading_singular_value(perm) / norm


def effective_rank(block, n_perm=DEFAULT_N_PERM, alpha=DEFAULT_ALPHA, seed=None, n_jobs=None):
    """Number of singular values of `block` that stand out from permutation noise.

    At step ``k`` the leading ``k`` singular triples have been subtracted. The
    largest remaining singular value, as a fraction of the remaining
    Frobenius norm, is compared with the same quantity for within-row
    permutations of the residual that are projected off the ``k`` removed
    left and right singular directions, so both sides span the same number of
    dimensions. The step is significant when the add-one p-value is below
    `alpha`.

    Returns
    -------
    rank : int
    pvalues : list of float
        One p-value per test performed; the last is the first non-significant
        one unless the block ran out of dimensions.
    """
    _check_test_params(n_perm, alpha)
    m = as_matrix(block, "block")
    ss = _seed_sequence(seed)
    limit = min(m.shape)
    if limit == 0:
        return 0, []
    svd = truncated_svd(m, limit)
    s = svd.s
    pvalues = []
    k = 0
    while k < limit:
        if s[0] == 0.0 or s[k] <= RANK_RTOL * s[0]:
            break
        residual = m - (svd.u[:, :k] * s[:k]) @ svd.vt[:k]
        norm = np.sqrt(squared_norm(residual))
        observed = s[k] / norm
        seeds = ss.spawn(int(n_perm))
        null = _run_replicates(
            _stage1_null, (residual, svd.u[:, :k], svd.vt[:k]), seeds, n_jobs
        )
        # rounding in the ratio must not count as a tie-breaking win
        p = permutation_pvalue(observed * (1 - 1e-12), null)
        pvalues.append(p)
        if p >= alpha:
            break
        k += 1
    return k, pvalues


def _shared_direction(blocks, dims):
    # sample direction closest to every block's leading row space at once
    bases = [gram_svd(b, min(d, *b.shape)).vt for b, d in zip(blocks, dims)]
    return gram_svd(np.vstack(bases), 1).vt


def _explained(blocks, ind_ranks, max_iter, tol):
    """Sum of squares explained by a rank-1-joint fit.

    The fit is not convex in the joint direction and starting from ``J = 0``
    can stall on a plateau far from the optimum within the refit budget, so
    it starts from the direction shared by the blocks' leading ``r_i + 1``
    dimensional row spaces.
    """
    total = sum(squared_norm(b) for b in blocks)
    ranks = JiveRanks(1, ind_ranks)
    start = _shared_direction(blocks, [r + 1 for r in ind_ranks])
    d = _fit(blocks, ranks, max_iter, tol, svd=gram_svd, start=start)
    return total - d.residual_ss


def _stage2_null(blocks, ind_ranks, max_iter, tol, seed):
    rng = np.random.default_rng(seed)
    shuffled = [b[:, rng.permutation(b.shape[1])] for b in blocks]
    return _explained(shuffled, ind_ranks, max_iter, tol)


def joint_structure_test(residual_blocks, individual_ranks, n_perm=DEFAULT_N_PERM,
                         seed=None, n_jobs=None, max_iter=REFIT_MAX_ITER, tol=REFIT_TOL):
    """P-value for remaining joint structure among residual blocks.

    The statistic is the sum of squares explained by a fit with joint rank 1
    and individual ranks ``max(r_i - 1, 0)``, fitted from the start
    described in :func:`_explained`. The null shuffles the columns of
    each block independently.
    """
    blocks, _ = reduce_blocks([as_matrix(b) for b in residual_blocks])
    ind = tuple(max(int(r) - 1, 0) for r in individual_ranks)
    observed = _explained(blocks, ind, max_iter, tol)
    seeds = _seed_sequence(seed).spawn(int(n_perm))
    null = _run_replicates(_stage2_null, (blocks, ind, max_iter, tol), seeds, n_jobs)
    return permutation_pvalue(observed, null)


def _candidate_fit(blocks, ranks, eff, max_iter, tol):
    # the plain start can need thousands of iterations when joint and
    # individual directions are close; a start on the row space shared by
    # the blocks' significant components usually converges in tens
    plain = _fit(blocks, ranks, max_iter, tol)
    if ranks.joint == 0:
        return plain
    bases = np.vstack([truncated_svd(b, e).vt for b, e in zip(blocks, eff)])
    start = truncated_svd(bases, ranks.joint).vt
    shared = _fit(blocks, ranks, max_iter, tol, start=start)
    return shared if shared.residual_ss <= plain.residual_ss else plain


def select_ranks(ds, n_perm=DEFAULT_N_PERM, alpha=DEFAULT_ALPHA, seed=None, n_jobs=None,
                 max_iter=500, tol=1e-8, refit_max_iter=REFIT_MAX_ITER, refit_tol=REFIT_TOL):
    """Estimate effective, joint and individual ranks by permutation testing.

    Parameters
    ----------
    ds : MultiBlockDataset or list of arrays
        Preprocessed blocks (``p_i x n``).
    n_perm : int
    alpha : float
    seed : int, SeedSequence or None
        Fixes every permutation; identical inputs and seed give identical
        results for any `n_jobs`.
    n_jobs : int or None
        Workers for the permutation replicates.
    max_iter, tol :
        Settings for the fit with the candidate ranks.
    refit_max_iter, refit_tol :
        Settings for the test refits, shared by observed and permuted data.

    Returns
    -------
    RankSelection
    """
    _check_test_params(n_perm, alpha)
    blocks = ds.matrices if isinstance(ds, MultiBlockDataset) else [as_matrix(b) for b in ds]
    root = _seed_sequence(seed)
    stage1_seeds = root.spawn(len(blocks))
    stage2_seed = root.spawn(1)[0]

    eff, stage1 = [], []
    for b, s in zip(blocks, stage1_seeds):
        k, pv = effective_rank(b, n_perm, alpha, s, n_jobs)
        eff.append(k)
        stage1.append(tuple(pv))

    reduced, _ = reduce_blocks(blocks)
    stage2 = []
    r = 0
    cap = min(eff)
    while r < cap:
        ranks = JiveRanks(r, tuple(e - r for e in eff))
        fit = _candidate_fit(reduced, ranks, eff, max_iter, tol)
        residual = [b - j for b, j in zip(reduced, fit.joint)]
        p = joint_structure_test(
            residual, ranks.individual, n_perm, stage2_seed.spawn(1)[0], n_jobs,
            refit_max_iter, refit_tol,
        )
        stage2.append(p)
        if p >= alpha:
            break
        r += 1
    return RankSelection(
        effective_ranks=tuple(eff),
        joint_rank=r,
        individual_ranks=tuple(max(e - r, 0) for e in eff),
        stage1_pvalues=tuple(stage1),
        stage2_pvalues=tuple(stage2),
        n_perm=int(n_perm),
        alpha=float(alpha),
        seed=seed if isinstance(seed, (int, type(None))) else str(seed),
    )
