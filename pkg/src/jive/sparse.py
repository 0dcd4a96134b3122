"""L1-penalized joint and individual structure.

Loadings are made sparse with a rank-one sparse SVD that alternates an
ordinary right-singular-direction update with entrywise soft thresholding of
the left factor. Multi-rank components are extracted greedily with
deflation. Penalty weights are fixed or chosen by BIC at every extraction.
"""

from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import numpy as np

from . import core
from .core import DEFAULT_MAX_ITER, DEFAULT_TOL, JiveDecomposition, JiveRanks, _as_arrays
from .exceptions import InputError
from .linalg import as_matrix, row_space_basis, squared_norm, truncated_svd

BIC = "bic"
BIC_GRID_SIZE = 20
BIC_GRID_SPAN = 1e-3

Weight = Union[float, str]


@dataclass(frozen=True)
class SparsityConfig:
    """Penalty weights for joint loadings and for each block's individual loadings.

    A weight is a nonnegative float or ``"bic"``. `individual_weights` may be
    a single value applied to every block.
    """

    joint_weight: Weight = 0.0
    individual_weights: Union[Weight, Sequence[Weight]] = 0.0
    inner_tol: float = 1e-12
    inner_max_iter: int = 500

    def __post_init__(self):
        object.__setattr__(self, "joint_weight", _check_weight(self.joint_weight))
        w = self.individual_weights
        if isinstance(w, (str, int, float)):
            w = _check_weight(w)
        else:
            w = tuple(_check_weight(x) for x in w)
        object.__setattr__(self, "individual_weights", w)

    def block_weights(self, k):
        w = self.individual_weights
        if isinstance(w, tuple):
            if len(w) != k:
                raise InputError(f"{len(w)} individual weights for {k} blocks")
            return w
        return (w,) * k

    @property
    def fixed(self):
        w = self.individual_weights
        w = w if isinstance(w, tuple) else (w,)
        return BIC not in (self.joint_weight,) + w


def _check_weight(w):
    if isinstance(w, str):
        if w.lower() != BIC:
            raise InputError(f"weight must be a number or 'bic', got {w!r}")
        return BIC
    w = float(w)
    if not np.isfinite(w) or w < 0:
        raise InputError(f"weights must be finite and nonnegative, got {w}")
    return w


class SparseTriple(NamedTuple):
    """``m ~= s * outer(u, v)`` with unit `u` and `v`; ``s * u`` carries the penalty."""

    u: np.ndarray
    s: float
    v: np.ndarray
    weight: float


def soft_threshold(x, level):
    """Shrink toward zero by `level`; entries within `level` of zero become exactly 0."""
    return np.sign(x) * np.maximum(np.abs(x) - level, 0.0)


def bic_weight(m, v, grid_size=BIC_GRID_SIZE):
    """Pick the weight minimizing ``N log(RSS / N) + df log(N)`` for fixed `v`.

    Candidates are log-spaced up to the smallest weight that zeroes every
    entry of ``m @ v``; ``df`` is the number of nonzero loadings and ``N``
    the number of entries of `m`.
    """
    z = m @ v
    top = 2.0 * float(np.max(np.abs(z))) if z.size else 0.0
    if top == 0.0:
        return 0.0
    N = m.size
    total = squared_norm(m)
    floor = np.finfo(float).tiny
    best, best_w = np.inf, 0.0
    for w in np.geomspace(top * BIC_GRID_SPAN, top, grid_size):
        u = soft_threshold(z, w / 2.0)
        rss = max(total - 2.0 * float(u @ z) + float(u @ u), floor)
        df = np.count_nonzero(u)
        score = N * np.log(rss / N) + df * np.log(N)
        if score < best:
            best, best_w = score, float(w)
    return best_w


def sparse_rank1(m, weight=0.0, tol=1e-12, max_iter=500, start=None):
    """Rank-one sparse SVD of `m`.

    Minimizes ``||m - a v'||^2 + weight * sum|a|`` over vectors ``a`` and unit
    ``v`` by alternating ``a = soft(m v, weight / 2)`` and
    ``v = m' a / ||m' a||``. With ``weight="bic"`` the weight is re-chosen
    by :func:`bic_weight` before every update of ``a``.

    Parameters
    ----------
    start : ndarray of shape (n,), optional
        Starting direction for ``v``; defaults to the leading right singular
        vector. A zero vector also selects the default.

    Returns
    -------
    SparseTriple
        ``u = a / ||a||`` and ``s = ||a||``; an all-zero triple when the
        matrix is zero or the penalty removes every loading.
    """
    m = as_matrix(m)
    p, n = m.shape
    zero = SparseTriple(np.zeros(p), 0.0, np.zeros(n), 0.0)
    if m.size == 0 or squared_norm(m) == 0.0:
        return zero
    weight = _check_weight(weight)
    use_bic = weight == BIC
    norm = 0.0 if start is None else float(np.linalg.norm(start))
    v = np.asarray(start, dtype=float) / norm if norm > 0.0 else truncated_svd(m, 1).vt[0]
    a = None
    w = 0.0
    for _ in range(int(max_iter)):
        w = bic_weight(m, v) if use_bic else weight
        a_new = soft_threshold(m @ v, w / 2.0)
        if not np.any(a_new):
            return SparseTriple(np.zeros(p), 0.0, np.zeros(n), w)
        y = m.T @ a_new
        ny = np.sqrt(float(y @ y))
        if ny == 0.0:
            return SparseTriple(np.zeros(p), 0.0, np.zeros(n), w)
        v_new = y / ny
        done = a is not None and (
            np.max(np.abs(v_new - v)) <= tol
            and np.max(np.abs(a_new - a)) <= tol * max(1.0, np.max(np.abs(a)))
        )
        a, v = a_new, v_new
        if done:
            break
    # final loadings consistent with the returned v
    a = soft_threshold(m @ v, w / 2.0)
    s = float(np.sqrt(a @ a))
    if s == 0.0:
        return SparseTriple(np.zeros(p), 0.0, np.zeros(n), w)
    u = a / s
    j = int(np.argmax(np.abs(u)))
    if u[j] < 0:
        u, v = -u, -v
    return SparseTriple(u, s, v, w)


def _greedy(m, rank, weight, tol, max_iter):
    p, n = m.shape
    loadings = np.zeros((p, rank))
    scores = np.zeros((rank, n))
    weights = np.zeros(rank)
    rest = m
    for k in range(rank):
        t = sparse_rank1(rest, weight, tol, max_iter)
        loadings[:, k] = t.u
        scores[k] = t.s * t.v
        weights[k] = t.weight
        rest = rest - np.outer(t.u, scores[k])
    return loadings, scores, weights


def _cyclic(m, weight, tol, max_iter, loadings, scores):
    # each term refitted to the data minus all other terms, from its own direction
    loadings, scores = loadings.copy(), scores.copy()
    fitted = loadings @ scores
    for k in range(loadings.shape[1]):
        term = np.outer(loadings[:, k], scores[k])
        t = sparse_rank1(m - (fitted - term), weight, tol, max_iter, start=scores[k])
        loadings[:, k] = t.u
        scores[k] = t.s * t.v
        fitted = fitted - term + np.outer(t.u, scores[k])
    return loadings, scores, np.full(loadings.shape[1], weight)


def _penalty(loadings, scores, weights):
    magnitudes = np.linalg.norm(scores, axis=1)
    return float(np.sum(weights * magnitudes * np.sum(np.abs(loadings), axis=0)))


def sparse_components(m, rank, weight, tol=1e-12, max_iter=500, previous=None):
    """Sparse rank-`rank` approximation built from rank-one terms.

    Terms are extracted greedily with deflation. When `previous` holds the
    ``(loadings, scores)`` of an earlier fit and the weight is fixed, one
    cyclic pass also refits every earlier term against the others, and the
    candidate with the lower penalized objective is returned; the result
    then never scores worse than `previous`.

    Returns loadings ``(p, rank)`` with unit columns, scores ``(rank, n)``
    with rows ``s_k v_k``, the fitted matrix, and the penalty
    ``sum_k weight_k * s_k * ||u_k||_1``.
    """
    loadings, scores, weights = _greedy(m, rank, weight, tol, max_iter)
    fitted = loadings @ scores
    penalty = _penalty(loadings, scores, weights)
    if previous is not None and rank and _check_weight(weight) != BIC:
        cl, cs, cw = _cyclic(m, weight, tol, max_iter, *previous)
        cf = cl @ cs
        cp = _penalty(cl, cs, cw)
        if squared_norm(m - cf) + cp < squared_norm(m - fitted) + penalty:
            loadings, scores, fitted, penalty = cl, cs, cf, cp
    return loadings, scores, fitted, penalty


def estimate_sparse_jive(ds, ranks, config=None, max_iter=DEFAULT_MAX_ITER, tol=DEFAULT_TOL):
    """Joint and individual structure with L1-sparse loadings.

    Same alternating scheme as :func:`jive.core.estimate_jive` with each
    truncated SVD replaced by :func:`sparse_components`. Individual
    structure is fitted to ``(X_i - J_i)(I - P)`` where ``P`` projects onto
    the row space of the joint matrix, so joint and individual rows stay
    orthogonal; loadings are not orthogonalized. ``trace`` records the
    penalized objective. With all weights zero the result matches the dense
    estimator.

    Shrunken joint terms leave residual inside their own row space, so
    moving the individual terms off a new joint row space can cost a little.
    With fixed weights an outer update that would raise the objective is
    rejected: the previous iterate is returned and the run counts as
    converged. Weights chosen by BIC change between iterations and give no
    common objective to compare.
    """
    config = config or SparsityConfig()
    core._check_opts(max_iter, tol)
    blocks, names = _as_arrays(ds)
    ranks = ranks if isinstance(ranks, JiveRanks) else JiveRanks(ranks[0], ranks[1])
    dims = [b.shape[0] for b in blocks]
    ranks.check(dims, blocks[0].shape[1])
    block_w = config.block_weights(len(blocks))
    offsets = np.concatenate([[0], np.cumsum(dims)])
    X = np.vstack(blocks)
    itol, imax = config.inner_tol, config.inner_max_iter
    trace, notes = [], []
    converged = False
    state = None
    for it in range(1, int(max_iter) + 1):
        x_joint = X if state is None else X - state["A"]
        joint_prev = None if state is None else (state["U"], state["S"])
        U, S, J, pen = sparse_components(x_joint, ranks.joint, config.joint_weight, itol, imax,
                                         joint_prev)
        basis = row_space_basis(J)
        individual, ind_scores, ind_loadings = [], [], []
        for i, b in enumerate(blocks):
            unique = b - J[offsets[i]:offsets[i + 1]]
            unique = unique - (unique @ basis.T) @ basis
            previous = None
            if state is not None:
                # earlier terms moved off the new joint row space stay feasible
                Si = state["ind_scores"][i]
                previous = (state["ind_loadings"][i], Si - (Si @ basis.T) @ basis)
            W, Si, Ai, pen_i = sparse_components(unique, ranks.individual[i], block_w[i],
                                                 itol, imax, previous)
            # drop leftover components along the joint row space
            individual.append(Ai - (Ai @ basis.T) @ basis)
            ind_scores.append(Si - (Si @ basis.T) @ basis)
            ind_loadings.append(W)
            pen += pen_i
        A = np.vstack(individual)
        objective = squared_norm(X - J - A) + pen
        prev = None if state is None else trace[-1]
        if prev is not None and config.fixed and objective > prev:
            notes.append(f"stopped at iteration {it}: the update would raise the objective "
                         f"by {objective - prev:.3e}")
            converged = True
            it -= 1
            break
        trace.append(objective)
        state = {"U": U, "S": S, "J": J, "A": A, "individual": individual,
                 "ind_scores": ind_scores, "ind_loadings": ind_loadings}
        if prev is not None and prev - objective <= tol * prev:
            converged = True
            break
    U, J = state["U"], state["J"]
    joint = [J[offsets[i]:offsets[i + 1]] for i in range(len(blocks))]
    d = JiveDecomposition(
        joint=joint,
        individual=state["individual"],
        residual=[b - j - a for b, j, a in zip(blocks, joint, state["individual"])],
        ranks=ranks,
        joint_scores=state["S"],
        joint_loadings=[U[offsets[i]:offsets[i + 1]] for i in range(len(blocks))],
        individual_scores=state["ind_scores"],
        individual_loadings=state["ind_loadings"],
        trace=np.asarray(trace),
        n_iter=it,
        converged=converged,
        block_names=tuple(names),
    )
    d.notes.extend(notes)
    if not converged:
        d.notes.append(f"did not converge within {it} iterations")
    if core.STRICT:
        # the penalized objective is only comparable across iterations when
        # the weights are fixed
        slack = max(core.MONOTONE_SLACK, 10 * itol) if config.fixed else np.inf
        core.audit(d, blocks, penalized=True, slack=slack)
    return d
