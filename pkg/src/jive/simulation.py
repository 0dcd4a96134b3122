"""Synthetic multi-block data with known joint and individual structure."""

from dataclasses import asdict, dataclass, field

import numpy as np

from .core import JiveRanks
from .exceptions import InputError
from .multiblock import Block, MultiBlockDataset, permute_columns_per_block

DISTRIBUTIONS = ("normal", "uniform", "bernoulli")
PROTOCOL_DIM_RANGE = (10, 100)
PROTOCOL_MAX_RANK = 4
PROTOCOL_MAX_SIGMA = 2.0


@dataclass(frozen=True)
class SimulationSpec:
    """Parameters of a random factor model ``X_i = U_i S + W_i S_i + E_i``.

    ``factor_distributions`` maps factor names (``"S"``, ``"U1"``, ``"W1"``,
    ``"S1"``, ...) to one of ``"normal"``, ``"uniform"`` or ``"bernoulli"``;
    factors left out get a distribution drawn from the seed. Score
    matrices are centered across samples when ``center_scores`` is set, so
    the planted structure survives row-centering.
    """

    n: int
    dims: tuple
    ranks: JiveRanks
    noise_sigma: float = 0.0
    seed: int = 0
    factor_distributions: dict = field(default_factory=dict)
    center_scores: bool = True

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(p) for p in self.dims))
        if not isinstance(self.ranks, JiveRanks):
            object.__setattr__(self, "ranks", JiveRanks(*self.ranks))
        if self.n < 1 or any(p < 1 for p in self.dims):
            raise InputError(f"dimensions must be positive: n={self.n}, dims={self.dims}")
        if self.noise_sigma < 0:
            raise InputError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        for name, dist in self.factor_distributions.items():
            if dist not in DISTRIBUTIONS:
                raise InputError(f"factor {name}: unknown distribution {dist!r}")
        self.ranks.check(self.dims, self.n)

    @classmethod
    def random(cls, seed, noisy=True, k=2):
        """Draw a model as in the random-model protocol.

        ``n`` and each ``p_i`` are uniform on 10..100, every rank uniform on
        0..4, and the noise standard deviation uniform on (0, 2) (zero when
        `noisy` is False).
        """
        rng = np.random.default_rng(seed)
        lo, hi = PROTOCOL_DIM_RANGE
        n = int(rng.integers(lo, hi + 1))
        dims = tuple(int(p) for p in rng.integers(lo, hi + 1, size=k))
        ranks = rng.integers(0, PROTOCOL_MAX_RANK + 1, size=k + 1)
        sigma = float(rng.uniform(0, PROTOCOL_MAX_SIGMA)) if noisy else 0.0
        return cls(n, dims, JiveRanks(ranks[0], tuple(ranks[1:])), sigma,
                   seed=int(rng.integers(2**31)))

    def check_protocol(self):
        """Raise unless the model lies within the random-model protocol bounds."""
        lo, hi = PROTOCOL_DIM_RANGE
        if not all(lo <= d <= hi for d in (self.n,) + self.dims):
            raise InputError(f"dimensions outside [{lo}, {hi}]")
        if max((self.ranks.joint,) + self.ranks.individual) > PROTOCOL_MAX_RANK:
            raise InputError(f"ranks above {PROTOCOL_MAX_RANK}")
        if not 0 <= self.noise_sigma <= PROTOCOL_MAX_SIGMA:
            raise InputError(f"noise_sigma outside [0, {PROTOCOL_MAX_SIGMA}]")

    def to_dict(self):
        d = asdict(self)
        d["ranks"] = {"joint": self.ranks.joint, "individual": list(self.ranks.individual)}
        d["dims"] = list(self.dims)
        return d


@dataclass
class SimulationResult:
    """A generated dataset with its ground truth.

    ``truth`` holds lists ``joint``, ``individual`` and ``noise`` (one matrix
    per block) plus the factors ``joint_scores``, ``joint_loadings``,
    ``individual_scores`` and ``individual_loadings``.
    """

    dataset: MultiBlockDataset
    truth: dict
    spec: object = None


def _draw(rng, dist, shape):
    if dist == "normal":
        return rng.standard_normal(shape)
    if dist == "uniform":
        return rng.uniform(0.0, 1.0, shape)
    return rng.integers(0, 2, shape).astype(np.float64)


def generate_random_model(spec):
    """Sample blocks ``U_i S + W_i S_i + E_i`` from a :class:`SimulationSpec`.

    One distribution is used per factor matrix. Noise entries are
    ``N(0, sigma^2)`` and are added only when ``sigma > 0``.
    """
    if not isinstance(spec, SimulationSpec):
        raise InputError("generate_random_model expects a SimulationSpec")
    rng = np.random.default_rng(spec.seed)
    k = len(spec.dims)
    dists = dict(spec.factor_distributions)

    def factor(name, shape, score):
        dist = dists.get(name)
        if dist is None:
            dist = DISTRIBUTIONS[int(rng.integers(len(DISTRIBUTIONS)))]
            dists[name] = dist
        f = _draw(rng, dist, shape)
        if score and spec.center_scores and f.size:
            f = f - f.mean(axis=1, keepdims=True)
        return f

    r = spec.ranks.joint
    S = factor("S", (r, spec.n), True)
    U, W, Si = [], [], []
    for i, p in enumerate(spec.dims):
        U.append(factor(f"U{i + 1}", (p, r), False))
        W.append(factor(f"W{i + 1}", (p, spec.ranks.individual[i]), False))
        Si.append(factor(f"S{i + 1}", (spec.ranks.individual[i], spec.n), True))
    joint = [u @ S for u in U]
    individual = [w @ s for w, s in zip(W, Si)]
    if spec.noise_sigma > 0:
        noise = [spec.noise_sigma * rng.standard_normal((p, spec.n)) for p in spec.dims]
    else:
        noise = [np.zeros((p, spec.n)) for p in spec.dims]
    data = [j + a + e for j, a, e in zip(joint, individual, noise)]
    ds = MultiBlockDataset.from_arrays(data, names=[f"X{i + 1}" for i in range(k)])
    truth = {
        "joint": joint,
        "individual": individual,
        "noise": noise,
        "joint_scores": S,
        "joint_loadings": U,
        "individual_scores": Si,
        "individual_loadings": W,
        "factor_distributions": dists,
    }
    return SimulationResult(ds, truth, spec)


TOY_SHAPE = (50, 100)
TOY_GROUP_OFFSETS = (-2.0, -1.0, 0.0, 1.0, 2.0)


def generate_toy(seed=0):
    """Two 50 x 100 blocks sharing one joint pattern, each with its own groups.

    A standard normal sample pattern ``V`` is added to the first 25 rows of
    both blocks. Each block's samples are split at random into five groups
    of 20 (independently for the two blocks) and ``-2, -1, 0, 1, 2`` is added
    to every row for groups 1 to 5. Independent ``N(0, 1)`` noise follows.

    Returns
    -------
    result : SimulationResult
        ``truth["V"]`` holds the joint pattern.
    labels_x, labels_y : ndarray of int
        Group (1 to 5) of every sample in each block.
    """
    rng = np.random.default_rng(seed)
    p, n = TOY_SHAPE
    half = p // 2
    V = rng.standard_normal(n)
    joint_loading = np.zeros((p, 1))
    joint_loading[:half] = 1.0
    labels, individual, noise, scores = [], [], [], []
    for _ in range(2):
        groups = np.repeat(np.arange(1, 6), n // 5)
        rng.shuffle(groups)
        offsets = np.asarray(TOY_GROUP_OFFSETS)[groups - 1]
        labels.append(groups)
        scores.append(offsets[None, :])
        individual.append(np.ones((p, 1)) @ offsets[None, :])
        noise.append(rng.standard_normal((p, n)))
    joint = [joint_loading @ V[None, :] for _ in range(2)]
    data = [j + a + e for j, a, e in zip(joint, individual, noise)]
    ds = MultiBlockDataset.from_arrays(data, names=["X", "Y"])
    truth = {
        "joint": joint,
        "individual": individual,
        "noise": noise,
        "V": V,
        "joint_scores": V[None, :],
        "joint_loadings": [joint_loading.copy(), joint_loading.copy()],
        "individual_scores": scores,
        "individual_loadings": [np.ones((p, 1)), np.ones((p, 1))],
    }
    return SimulationResult(ds, truth, {"protocol": "toy", "seed": seed}), labels[0], labels[1]


def plant_cluster_signal(ds, fraction=0.05, seed=None):
    """Break cross-block alignment, then plant a shared two-cluster signal.

    Each block's columns are shuffled independently. In the first
    ``ceil(fraction * p_i)`` rows of each block the row standard deviation
    is added to the first half of the samples and subtracted from the rest.

    Returns
    -------
    dataset : MultiBlockDataset
    labels : ndarray of int
        0 for the first half of the samples, 1 for the second.
    """
    if not 0 < fraction <= 1:
        raise InputError(f"fraction must lie in (0, 1], got {fraction}")
    shuffled = permute_columns_per_block(ds, seed)
    n = ds.n_samples
    first = n // 2
    sign = np.where(np.arange(n) < first, 1.0, -1.0)
    planted = []
    for m in shuffled.matrices:
        m = m.copy()
        rows = int(np.ceil(fraction * m.shape[0]))
        sd = m[:rows].std(axis=1, ddof=1) if n > 1 else np.zeros(rows)
        m[:rows] += sd[:, None] * sign[None, :]
        planted.append(m)
    labels = (np.arange(n) >= first).astype(int)
    return shuffled.with_matrices(planted), labels


def generate_subtype_model(seed=0, n_per_group=30, n_groups=4, dims=(400, 200),
                           signal_fraction=0.05, joint_rank=2, individual_ranks=(2, 2),
                           noise_sigma=2.0, signal_strength=1.2, individual_strength=0.3):
    """Blocks whose joint structure separates sample subtypes on a few variables.

    Subtype centroids in ``joint_rank`` dimensions drive the joint scores,
    which load only on the first ``signal_fraction`` of each block's rows
    with ``N(0, signal_strength^2)`` loadings. Individual structure (dense,
    Gaussian, unrelated to subtype, scores with standard deviation
    `individual_strength`) and noise make subtypes hard to see in the raw
    data. With the defaults most variables carry only noise, which is the
    setting where sparse loadings give cleaner joint scores than dense ones.

    Returns
    -------
    result : SimulationResult
    labels : ndarray of int
    """
    rng = np.random.default_rng(seed)
    n = n_per_group * n_groups
    labels = np.repeat(np.arange(n_groups), n_per_group)
    centroids = rng.standard_normal((joint_rank, n_groups)) * 2.0
    S = centroids[:, labels] + 0.5 * rng.standard_normal((joint_rank, n))
    S -= S.mean(axis=1, keepdims=True)
    joint, individual, noise, U, W, Si = [], [], [], [], [], []
    for p, ri in zip(dims, individual_ranks):
        rows = max(1, int(round(signal_fraction * p)))
        u = np.zeros((p, joint_rank))
        u[:rows] = signal_strength * rng.standard_normal((rows, joint_rank))
        w = rng.standard_normal((p, ri))
        s = individual_strength * rng.standard_normal((ri, n))
        s -= s.mean(axis=1, keepdims=True)
        U.append(u)
        W.append(w)
        Si.append(s)
        joint.append(u @ S)
        individual.append(w @ s)
        noise.append(noise_sigma * rng.standard_normal((p, n)))
    data = [j + a + e for j, a, e in zip(joint, individual, noise)]
    ds = MultiBlockDataset.from_arrays(data, names=[f"X{i + 1}" for i in range(len(dims))])
    truth = {
        "joint": joint,
        "individual": individual,
        "noise": noise,
        "joint_scores": S,
        "joint_loadings": U,
        "individual_scores": Si,
        "individual_loadings": W,
    }
    spec = {"protocol": "subtype", "seed": seed, "ranks": [joint_rank, list(individual_ranks)]}
    return SimulationResult(ds, truth, spec), labels
