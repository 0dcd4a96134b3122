import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from jive import JIVE, SparseJIVE
from jive.exceptions import InputError
from jive.simulation import generate_toy


@pytest.fixture(scope="module")
def views():
    res, _, _ = generate_toy(0)
    return [m.T for m in res.dataset.matrices], res.truth["V"]


class TestJIVE:
    def test_params_round_trip(self):
        est = JIVE(joint_rank=2, individual_ranks=[1, 1], alpha=0.05)
        assert est.get_params()["alpha"] == 0.05
        est.set_params(joint_rank=1)
        assert clone(est).joint_rank == 1

    def test_fit_shapes(self, views):
        Xs, V = views
        est = JIVE(joint_rank=1, individual_ranks=[1, 1]).fit(Xs)
        assert est.joint_scores_.shape == (100, 1)
        assert [l.shape for l in est.joint_loadings_] == [(50, 1), (50, 1)]
        assert [s.shape for s in est.individual_scores_] == [(100, 1), (100, 1)]
        assert est.n_features_in_ == [50, 50]
        assert est.converged_
        assert abs(np.corrcoef(est.joint_scores_[:, 0], V)[0, 1]) > 0.9

    def test_fit_transform_returns_joint_scores(self, views):
        Xs, _ = views
        est = JIVE(joint_rank=1, individual_ranks=[1, 1])
        np.testing.assert_array_equal(est.fit_transform(Xs), est.joint_scores_)

    def test_transform_projects_new_samples(self, views):
        Xs, _ = views
        est = JIVE(joint_rank=1, individual_ranks=[1, 1], tol=1e-15, max_iter=5000).fit(Xs)
        scores = est.transform(Xs)
        assert scores.shape == (100, 1)
        # training joint scores are the same projection with individual structure removed
        U = np.vstack(est.joint_loadings_)
        A = est.decomposition_.individual_matrix
        np.testing.assert_allclose(scores - est.joint_scores_, (U.T @ A).T, atol=1e-8)
        single = est.transform([x[:3] for x in Xs])
        np.testing.assert_allclose(single, scores[:3], atol=1e-12)

    def test_components_rebuild_data(self, views):
        Xs, _ = views
        est = JIVE(joint_rank=1, individual_ranks=[1, 1]).fit(Xs)
        parts = est.components(scale="original")
        for x, mu, j, a, r in zip(Xs, est.means_, parts["joint"], parts["individual"],
                                  parts["residual"]):
            np.testing.assert_allclose(j + a + r, x - mu, atol=1e-10)
        with pytest.raises(InputError):
            est.components(scale="raw")

    def test_reduction_matches_direct(self, rng):
        z = rng.standard_normal((15, 1))
        Xs = [z @ rng.standard_normal((1, 40)) + 0.2 * rng.standard_normal((15, 40)),
              z @ rng.standard_normal((1, 30)) + 0.2 * rng.standard_normal((15, 30))]
        a = JIVE(1, [1, 1], reduce_dims=True, tol=0.0, max_iter=30).fit(Xs)
        b = JIVE(1, [1, 1], reduce_dims=False, tol=0.0, max_iter=30).fit(Xs)
        for x, y in zip(a.components()["joint"], b.components()["joint"]):
            np.testing.assert_allclose(x, y, atol=1e-8)

    def test_estimated_ranks(self, views):
        Xs, _ = views
        est = JIVE(n_perm=50, alpha=0.05, random_state=1).fit(Xs)
        assert est.rank_selection_ is not None
        assert est.joint_rank_ == est.rank_selection_.joint_rank
        assert est.joint_rank_ >= 1

    def test_variation_explained(self, views):
        Xs, _ = views
        est = JIVE(joint_rank=1, individual_ranks=[1, 1]).fit(Xs)
        for row in est.variation_explained_:
            assert row["joint"] + row["individual"] + row["residual"] == pytest.approx(100, abs=0.5)

    def test_errors(self, views):
        Xs, _ = views
        with pytest.raises(NotFittedError):
            JIVE().transform(Xs)
        est = JIVE(joint_rank=1, individual_ranks=[1, 1]).fit(Xs)
        with pytest.raises(InputError):
            est.transform([Xs[0][:, :10], Xs[1]])
        with pytest.raises(InputError):
            JIVE(1, [0, 0]).fit([Xs[0], Xs[1][:50]])
        bad = Xs[0].copy()
        bad[0, 0] = np.inf
        with pytest.raises(InputError):
            JIVE(1, [0, 0]).fit([bad, Xs[1]])


class TestSparseJIVE:
    def test_zero_penalties_match_dense(self, views):
        Xs, _ = views
        dense = JIVE(1, [1, 1], reduce_dims=False, tol=1e-14, max_iter=2000).fit(Xs)
        sparse = SparseJIVE(1, [1, 1], joint_penalty=0.0, individual_penalties=0.0,
                            tol=1e-14, max_iter=2000).fit(Xs)
        np.testing.assert_allclose(np.abs(sparse.joint_scores_), np.abs(dense.joint_scores_),
                                   atol=1e-8)

    def test_penalty_gives_exact_zeros(self, views):
        Xs, _ = views
        est = SparseJIVE(1, [1, 1], joint_penalty=0.05, individual_penalties=[0.0, 0.0]).fit(Xs)
        assert np.any(np.vstack(est.joint_loadings_) == 0.0)
        assert "joint_penalty" in est.get_params()
