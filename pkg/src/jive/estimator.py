"""scikit-learn compatible estimators.

These follow the scikit-learn orientation: every view is an
``(n_samples, n_features_i)`` array. Internally blocks are handled as
``n_features_i x n_samples`` matrices.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .core import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    JiveRanks,
    estimate_jive,
    reduce_then_estimate,
    variation_explained,
)
from .exceptions import InputError
from .multiblock import MultiBlockDataset, preprocess
from .rank_selection import DEFAULT_ALPHA, DEFAULT_N_PERM, select_ranks
from .sparse import SparsityConfig, estimate_sparse_jive
from .validation import check_blocks, check_feature_counts


class JIVE(TransformerMixin, BaseEstimator):
    """Joint and Individual Variation Explained.

    Splits several views of the same samples into a low-rank joint part
    shared by all views, a low-rank individual part per view whose sample
    patterns are orthogonal to the joint ones, and a residual.

    Parameters
    ----------
    joint_rank : int or None, default=None
        Rank of the joint structure. When either rank argument is None both
        are chosen by permutation testing.
    individual_ranks : list of int or None, default=None
    center : bool, default=True
        Subtract each feature's mean.
    scale : bool, default=True
        Divide each view by its Frobenius norm after centering.
    n_perm : int, default=1000
        Permutations per test when ranks are estimated.
    alpha : float, default=0.01
        Significance level of the rank tests.
    max_iter : int, default=500
    tol : float, default=1e-8
        Relative decrease of the residual sum of squares that ends the
        iteration.
    reduce_dims : bool, default=True
        Work on ``n x n`` reductions of views with more features than
        samples; the result is the same, only faster.
    n_jobs : int or None, default=None
        Workers for permutation replicates.
    random_state : int or None, default=None

    Attributes
    ----------
    joint_rank_ : int
    individual_ranks_ : list of int
    decomposition_ : JiveDecomposition
        Components in ``p_i x n`` orientation, on the preprocessed scale.
    rank_selection_ : RankSelection or None
    joint_scores_ : ndarray of shape (n_samples, joint_rank_)
    joint_loadings_ : list of ndarray of shape (n_features_i, joint_rank_)
    individual_scores_ : list of ndarray of shape (n_samples, individual_ranks_[i])
    individual_loadings_ : list of ndarray of shape (n_features_i, individual_ranks_[i])
    means_ : list of ndarray
    norms_ : list of float
    n_iter_ : int
    converged_ : bool

    Examples
    --------
    >>> import numpy as np
    >>> from jive import JIVE
    >>> rng = np.random.default_rng(0)
    >>> z = rng.standard_normal((60, 1))
    >>> Xs = [z @ rng.standard_normal((1, 20)) + 0.1 * rng.standard_normal((60, 20)),
    ...       z @ rng.standard_normal((1, 15)) + 0.1 * rng.standard_normal((60, 15))]
    >>> jive = JIVE(joint_rank=1, individual_ranks=[0, 0]).fit(Xs)
    >>> jive.joint_scores_.shape
    (60, 1)
    """

    def __init__(self, joint_rank=None, individual_ranks=None, center=True, scale=True,
                 n_perm=DEFAULT_N_PERM, alpha=DEFAULT_ALPHA, max_iter=DEFAULT_MAX_ITER,
                 tol=DEFAULT_TOL, reduce_dims=True, n_jobs=None, random_state=None):
        self.joint_rank = joint_rank
        self.individual_ranks = individual_ranks
        self.center = center
        self.scale = scale
        self.n_perm = n_perm
        self.alpha = alpha
        self.max_iter = max_iter
        self.tol = tol
        self.reduce_dims = reduce_dims
        self.n_jobs = n_jobs
        self.random_state = random_state

    def _dataset(self, Xs, fit):
        arrays = check_blocks(Xs)
        if fit:
            ds = MultiBlockDataset.from_arrays([a.T for a in arrays])
            self.n_features_in_ = [a.shape[1] for a in arrays]
            self.means_ = [a.mean(axis=0) if self.center else np.zeros(a.shape[1])
                           for a in arrays]
            ds = preprocess(ds, center=self.center, scale=self.scale)
            self.norms_ = [b.total_variation if self.scale else 1.0 for b in ds.blocks]
            return ds
        check_feature_counts(arrays, self.n_features_in_)
        return [((a - mu) / nrm).T for a, mu, nrm in zip(arrays, self.means_, self.norms_)]

    def _ranks(self, ds):
        if self.joint_rank is None or self.individual_ranks is None:
            self.rank_selection_ = select_ranks(
                ds, n_perm=self.n_perm, alpha=self.alpha, seed=self.random_state,
                n_jobs=self.n_jobs,
            )
            return self.rank_selection_.ranks
        self.rank_selection_ = None
        return JiveRanks(self.joint_rank, tuple(self.individual_ranks))

    def _estimate(self, ds, ranks):
        fit = reduce_then_estimate if self.reduce_dims else estimate_jive
        return fit(ds, ranks, max_iter=self.max_iter, tol=self.tol)

    def fit(self, Xs, y=None):
        """Estimate ranks if needed, then the decomposition.

        Parameters
        ----------
        Xs : list of array-like of shape (n_samples, n_features_i)
        y : ignored

        Returns
        -------
        self
        """
        ds = self._dataset(Xs, fit=True)
        ranks = self._ranks(ds)
        d = self._estimate(ds, ranks)
        self.decomposition_ = d
        self.joint_rank_ = ranks.joint
        self.individual_ranks_ = list(ranks.individual)
        self.joint_scores_ = d.joint_scores.T
        self.joint_loadings_ = list(d.joint_loadings)
        self.individual_scores_ = [s.T for s in d.individual_scores]
        self.individual_loadings_ = list(d.individual_loadings)
        self.variation_explained_ = variation_explained(d, ds.matrices)
        self.n_iter_ = d.n_iter
        self.converged_ = d.converged
        return self

    def transform(self, Xs):
        """Joint scores of (possibly new) samples.

        Each view is centered and scaled with the fitted statistics and the
        stacked features are projected on the orthonormal joint loadings.
        For the training samples this differs slightly from
        ``joint_scores_``, which also removes the fitted individual
        structure; :meth:`fit_transform` returns ``joint_scores_``.

        Returns
        -------
        ndarray of shape (n_samples, joint_rank_)
        """
        check_is_fitted(self, "decomposition_")
        blocks = self._dataset(Xs, fit=False)
        X = np.vstack(blocks)
        U = np.vstack(self.joint_loadings_)
        return (U.T @ X).T

    def fit_transform(self, Xs, y=None):
        return self.fit(Xs, y).joint_scores_

    def components(self, scale="fitted"):
        """Joint, individual and residual matrices per view, as (n_samples, n_features_i).

        ``scale="original"`` undoes the block scaling (centering is not
        undone).
        """
        check_is_fitted(self, "decomposition_")
        if scale not in ("fitted", "original"):
            raise InputError("scale must be 'fitted' or 'original'")
        d = self.decomposition_
        factor = self.norms_ if scale == "original" else [1.0] * d.n_blocks
        return {
            "joint": [j.T * f for j, f in zip(d.joint, factor)],
            "individual": [a.T * f for a, f in zip(d.individual, factor)],
            "residual": [r.T * f for r, f in zip(d.residual, factor)],
        }


class SparseJIVE(JIVE):
    """JIVE with L1-penalized loadings.

    Parameters
    ----------
    joint_penalty : float or "bic", default="bic"
    individual_penalties : float, "bic" or list, default="bic"
    inner_tol : float, default=1e-12
    inner_max_iter : int, default=500

    The remaining parameters are those of :class:`JIVE`. Views are never
    reduced before sparse fitting since sparsity refers to the original
    features.
    """

    def __init__(self, joint_rank=None, individual_ranks=None, joint_penalty="bic",
                 individual_penalties="bic", center=True, scale=True,
                 n_perm=DEFAULT_N_PERM, alpha=DEFAULT_ALPHA, max_iter=DEFAULT_MAX_ITER,
                 tol=DEFAULT_TOL, inner_tol=1e-12, inner_max_iter=500, n_jobs=None,
                 random_state=None):
        super().__init__(joint_rank=joint_rank, individual_ranks=individual_ranks,
                         center=center, scale=scale, n_perm=n_perm, alpha=alpha,
                         max_iter=max_iter, tol=tol, reduce_dims=False, n_jobs=n_jobs,
                         random_state=random_state)
        self.joint_penalty = joint_penalty
        self.individual_penalties = individual_penalties
        self.inner_tol = inner_tol
        self.inner_max_iter = inner_max_iter

    def _estimate(self, ds, ranks):
        w = self.individual_penalties
        config = SparsityConfig(
            joint_weight=self.joint_penalty,
            individual_weights=w if isinstance(w, (str, int, float)) else tuple(w),
            inner_tol=self.inner_tol,
            inner_max_iter=self.inner_max_iter,
        )
        return estimate_sparse_jive(ds, ranks, config, max_iter=self.max_iter, tol=self.tol)
