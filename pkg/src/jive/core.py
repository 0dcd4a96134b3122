"""Joint and individual structure estimation.

The model writes each block as ``X_i = J_i + A_i + R_i`` where the stacked
joint matrix ``J`` has rank ``r``, each individual matrix ``A_i`` has rank
``r_i`` and the rows of ``J`` are orthogonal to the rows of every ``A_i``.
Estimation alternates two exact least-squares updates until the residual
sum of squares stops decreasing.
"""

import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegenerateBlockError, InputError, RankBoundsError
from .linalg import row_space_projector, squared_norm, truncated_svd
from .multiblock import MultiBlockDataset

DEFAULT_MAX_ITER = 500
DEFAULT_TOL = 1e-8

# Self-audit of every decomposition built; switched on by the test suite.
STRICT = os.environ.get("JIVE_STRICT", "") not in ("", "0")
AUDIT_LOG = []
# worst relative objective rise of every internal fit, rank-selection refits included
FIT_RISES = []
MONOTONE_SLACK = 1e-12
ORTHOGONALITY_TOL = 1e-8
CLOSURE_TOL_PCT = 0.5


@dataclass(frozen=True)
class JiveRanks:
    """Joint rank and one individual rank per block."""

    joint: int
    individual: tuple

    def __post_init__(self):
        object.__setattr__(self, "joint", int(self.joint))
        object.__setattr__(self, "individual", tuple(int(x) for x in self.individual))
        if self.joint < 0 or any(x < 0 for x in self.individual):
            raise RankBoundsError(f"ranks must be nonnegative, got {self}")

    @classmethod
    def parse(cls, text):
        """Parse ``"r:r1,r2,..."``."""
        try:
            joint, rest = text.split(":")
            individual = [int(x) for x in rest.split(",") if x.strip()]
            return cls(int(joint), tuple(individual))
        except ValueError as exc:
            raise InputError(f"cannot parse ranks {text!r}; expected 'r:r1,...,rk'") from exc

    def __str__(self):
        return f"{self.joint}:{','.join(str(x) for x in self.individual)}"

    def check(self, dims, n_samples):
        """Raise unless ``r + r_i <= min(p_i, n)`` for every block."""
        if len(self.individual) != len(dims):
            raise RankBoundsError(
                f"{len(self.individual)} individual ranks for {len(dims)} blocks"
            )
        for i, (p, ri) in enumerate(zip(dims, self.individual)):
            if self.joint + ri > min(p, n_samples):
                raise RankBoundsError(
                    f"block {i}: joint rank {self.joint} + individual rank {ri} "
                    f"exceeds min(p_i, n) = {min(p, n_samples)}"
                )
        if self.joint > min(sum(dims), n_samples):
            raise RankBoundsError(f"joint rank {self.joint} exceeds the data dimensions")

    def saturated(self, dims, n_samples):
        """Indices of blocks where ``r + r_i == min(p_i, n)``."""
        return [
            i for i, (p, ri) in enumerate(zip(dims, self.individual))
            if self.joint + ri == min(p, n_samples) and self.joint + ri > 0
        ]


@dataclass
class JiveDecomposition:
    """Fitted joint, individual and residual components.

    ``joint_scores`` is the ``r x n`` matrix ``S`` and ``joint_loadings[i]``
    the ``p_i x r`` matrix ``U_i``, so ``joint[i] == U_i @ S``. Likewise
    ``individual[i] == individual_loadings[i] @ individual_scores[i]``. The
    stacked joint loadings and each ``individual_loadings[i]`` have
    orthonormal columns. ``trace`` holds the objective after each iteration:
    the residual sum of squares, plus the penalty for sparse fits.
    """

    joint: list
    individual: list
    residual: list
    ranks: JiveRanks
    joint_scores: np.ndarray
    joint_loadings: list
    individual_scores: list
    individual_loadings: list
    trace: np.ndarray
    n_iter: int
    converged: bool
    block_names: tuple = None
    notes: list = field(default_factory=list)

    @property
    def n_blocks(self):
        return len(self.joint)

    @property
    def joint_matrix(self):
        return np.vstack(self.joint)

    @property
    def individual_matrix(self):
        return np.vstack(self.individual)

    @property
    def residual_ss(self):
        return float(sum(squared_norm(r) for r in self.residual))

    def data(self):
        """Reassemble the blocks ``J_i + A_i + R_i``."""
        return [j + a + r for j, a, r in zip(self.joint, self.individual, self.residual)]


def _as_arrays(ds):
    if isinstance(ds, MultiBlockDataset):
        return ds.matrices, ds.names
    arrays = [np.asarray(m, dtype=np.float64) for m in ds]
    return arrays, tuple(f"block{i + 1}" for i in range(len(arrays)))


def _check_opts(max_iter, tol):
    if int(max_iter) < 1:
        raise InputError(f"max_iter must be >= 1, got {max_iter}")
    if tol < 0:
        raise InputError(f"tol must be >= 0, got {tol}")


def _fit(blocks, ranks, max_iter=DEFAULT_MAX_ITER, tol=DEFAULT_TOL, svd=truncated_svd,
         start=None):
    """Alternating estimation on plain arrays; returns a JiveDecomposition.

    `start`, when given, is an ``(m, n)`` matrix with orthonormal rows; the
    first individual update is then made against that row space instead of
    starting from ``J = 0``.
    """
    offsets = np.concatenate([[0], np.cumsum([b.shape[0] for b in blocks])])
    X = np.vstack(blocks)
    r = ranks.joint
    x_joint = X
    if start is not None:
        warm = []
        for b, ri in zip(blocks, ranks.individual):
            unique = b - (b @ start.T) @ start
            isvd = svd(unique, ri)
            warm.append(isvd.u @ (isvd.s[:, None] * isvd.vt))
        x_joint = X - np.vstack(warm)
    trace = []
    converged = False
    prev = None
    for it in range(1, int(max_iter) + 1):
        jsvd = svd(x_joint, r)
        S = jsvd.s[:, None] * jsvd.vt
        J = jsvd.u @ S
        individual, ind_scores, ind_loadings = [], [], []
        for i, b in enumerate(blocks):
            lo, hi = offsets[i], offsets[i + 1]
            unique = b - J[lo:hi]
            # keep individual rows orthogonal to the joint row space
            unique = unique - (unique @ jsvd.vt.T) @ jsvd.vt
            isvd = svd(unique, ranks.individual[i])
            Si = isvd.s[:, None] * isvd.vt
            individual.append(isvd.u @ Si)
            ind_scores.append(Si)
            ind_loadings.append(isvd.u)
        A = np.vstack(individual) if individual else np.zeros_like(X)
        rss = squared_norm(X - J - A)
        trace.append(rss)
        x_joint = X - A
        if prev is not None and prev - rss <= tol * prev:
            converged = True
            break
        prev = rss
    if STRICT:
        diffs = np.diff(trace)
        FIT_RISES.append(float(diffs.max()) / max(1.0, squared_norm(X)) if diffs.size else 0.0)
    joint = [J[offsets[i]:offsets[i + 1]] for i in range(len(blocks))]
    residual = [b - j - a for b, j, a in zip(blocks, joint, individual)]
    return JiveDecomposition(
        joint=joint,
        individual=individual,
        residual=residual,
        ranks=ranks,
        joint_scores=S,
        joint_loadings=[jsvd.u[offsets[i]:offsets[i + 1]] for i in range(len(blocks))],
        individual_scores=ind_scores,
        individual_loadings=ind_loadings,
        trace=np.asarray(trace),
        n_iter=it,
        converged=converged,
    )


def _finish(decomp, blocks, names, ranks):
    decomp.block_names = tuple(names)
    dims = [b.shape[0] for b in blocks]
    for i in ranks.saturated(dims, blocks[0].shape[1]):
        decomp.notes.append(
            f"block {names[i]!r}: joint + individual rank equals min(p_i, n); "
            "its residual is determined by the orthogonality constraint alone"
        )
    if not decomp.converged:
        decomp.notes.append(f"did not converge within {decomp.n_iter} iterations")
    if STRICT:
        audit(decomp, blocks)
    return decomp


def estimate_jive(ds, ranks, max_iter=DEFAULT_MAX_ITER, tol=DEFAULT_TOL):
    """Fit joint and individual structure for fixed ranks.

    Parameters
    ----------
    ds : MultiBlockDataset or list of arrays
        Blocks as ``p_i x n`` matrices, used as given: apply
        :func:`jive.multiblock.preprocess` first for the usual centering and
        scaling.
    ranks : JiveRanks
    max_iter : int
    tol : float
        Stop once the residual sum of squares decreases by less than
        ``tol`` times its previous value.

    Returns
    -------
    JiveDecomposition
        ``converged`` is False when `max_iter` was reached first.
    """
    _check_opts(max_iter, tol)
    blocks, names = _as_arrays(ds)
    ranks = ranks if isinstance(ranks, JiveRanks) else JiveRanks(ranks[0], ranks[1])
    ranks.check([b.shape[0] for b in blocks], blocks[0].shape[1])
    decomp = _fit(blocks, ranks, max_iter, tol)
    return _finish(decomp, blocks, names, ranks)


def reduce_blocks(blocks):
    """Replace every block with more rows than columns by ``diag(s) @ vt``.

    Returns the reduced blocks and, per block, the left singular vectors
    that map reduced rows back (``None`` where no reduction was made).
    Distances and inner products between columns are unchanged.
    """
    reduced, bases = [], []
    for b in blocks:
        p, n = b.shape
        if p > n:
            svd = truncated_svd(b, n)
            reduced.append(svd.s[:, None] * svd.vt)
            bases.append(svd.u)
        else:
            reduced.append(b)
            bases.append(None)
    return reduced, bases


def reduce_then_estimate(ds, ranks, max_iter=DEFAULT_MAX_ITER, tol=DEFAULT_TOL):
    """Estimate on ``n x n`` reductions of the tall blocks, then map back.

    Gives the same components as :func:`estimate_jive` (the iterates are
    equivalent up to rounding) at a fraction of the cost when ``p_i >> n``.
    """
    _check_opts(max_iter, tol)
    blocks, names = _as_arrays(ds)
    ranks = ranks if isinstance(ranks, JiveRanks) else JiveRanks(ranks[0], ranks[1])
    ranks.check([b.shape[0] for b in blocks], blocks[0].shape[1])
    reduced, bases = reduce_blocks(blocks)
    d = _fit(reduced, ranks, max_iter, tol)

    def lift(mats, i):
        return mats[i] if bases[i] is None else bases[i] @ mats[i]

    k = len(blocks)
    d.joint = [lift(d.joint, i) for i in range(k)]
    d.individual = [lift(d.individual, i) for i in range(k)]
    d.joint_loadings = [lift(d.joint_loadings, i) for i in range(k)]
    d.individual_loadings = [lift(d.individual_loadings, i) for i in range(k)]
    d.residual = [b - j - a for b, j, a in zip(blocks, d.joint, d.individual)]
    return _finish(d, blocks, names, ranks)


def orthogonalize(joint_blocks, individual_blocks):
    """Rewrite ``J_i + A_i`` so that joint and individual rows are orthogonal.

    Uses ``J_i' = J_i + A_i P`` and ``A_i' = A_i (I - P)`` with ``P`` the
    projector onto the row space of the stacked joint matrix. Sums are
    preserved; when ``rank(J_i + A_i) = rank(J) + rank(A_i)`` for every block
    the ranks are preserved as well.
    """
    J = [np.asarray(j, dtype=np.float64) for j in joint_blocks]
    A = [np.asarray(a, dtype=np.float64) for a in individual_blocks]
    if len(J) != len(A):
        raise InputError(f"{len(J)} joint blocks but {len(A)} individual blocks")
    if not J:
        raise InputError("no blocks given")
    n = J[0].shape[1]
    for i, (j, a) in enumerate(zip(J, A)):
        if j.shape != a.shape or j.shape[1] != n:
            raise InputError(
                f"block {i}: joint shape {j.shape} and individual shape {a.shape} "
                f"must match and have {n} columns"
            )
    P = row_space_projector(np.vstack(J))
    moved = [a @ P for a in A]
    return [j + m for j, m in zip(J, moved)], [a - m for a, m in zip(A, moved)]


def variation_explained(decomp, data=None):
    """Percent of each block's sum of squares in joint, individual and residual.

    Returns a list of dicts with keys ``block``, ``joint``, ``individual`` and
    ``residual``. Each component's own squared norm is divided by
    ``||X_i||^2``; the three figures sum to 100 up to the small cross terms
    left between components before full convergence.
    """
    data = decomp.data() if data is None else data
    names = decomp.block_names or tuple(f"block{i + 1}" for i in range(decomp.n_blocks))
    rows = []
    for name, x, j, a, r in zip(names, data, decomp.joint, decomp.individual,
                                decomp.residual):
        total = squared_norm(x)
        if total == 0.0:
            raise DegenerateBlockError(f"block {name!r} has zero total variation")
        rows.append({
            "block": name,
            "joint": 100.0 * squared_norm(j) / total,
            "individual": 100.0 * squared_norm(a) / total,
            "residual": 100.0 * squared_norm(r) / total,
        })
    return rows


def audit(decomp, blocks, penalized=False, slack=MONOTONE_SLACK):
    """Check monotone objective, orthogonality and variance closure.

    Raises AssertionError on failure and records one entry in ``AUDIT_LOG``.
    Closure is asserted only for least-squares fits: a penalized fit shrinks
    its components, leaving a positive inner product with the residual.
    Tolerances scale with ``max(1, ||X||^2)`` so unscaled data is judged by
    the same relative standard.
    """
    scale = max(1.0, sum(squared_norm(b) for b in blocks))
    trace = np.asarray(decomp.trace)
    rise = float(np.max(np.diff(trace))) if trace.size > 1 else 0.0
    J = decomp.joint_matrix
    cross = float(np.max(np.abs(J @ decomp.individual_matrix.T))) if J.size else 0.0
    closure = 0.0
    for b, j, a, r in zip(blocks, decomp.joint, decomp.individual, decomp.residual):
        total = squared_norm(b)
        if total > 0:
            parts = squared_norm(j) + squared_norm(a) + squared_norm(r)
            closure = max(closure, abs(100.0 * parts / total - 100.0))
    entry = {
        "n_iter": decomp.n_iter,
        "max_rise": rise,
        "max_cross": cross,
        "closure_pp": closure,
        "penalized": penalized,
        "slack": slack,
        "converged": decomp.converged,
        "scale": scale,
    }
    AUDIT_LOG.append(entry)
    assert rise <= slack * scale, f"objective rose by {rise:.3e} between iterations"
    assert cross < ORTHOGONALITY_TOL * scale, f"joint/individual cross product {cross:.3e}"
    if not penalized and closure > CLOSURE_TOL_PCT:
        assert not decomp.converged, f"variation percentages off by {closure:.3f}pp"
        warnings.warn(f"unconverged fit: variation percentages off by {closure:.3f}pp")
    return entry
