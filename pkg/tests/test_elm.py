import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustkbr.data import Dataset, gen_sinc, inject_outliers
from robustkbr.elm import (
    ElmModel, fit_elm, fit_irls_elm, hidden_output, init_hidden, predict_elm, solve_output_weights,
)
from robustkbr.errors import InvalidArgumentError
from robustkbr.irls import IrlsConfig
from robustkbr.weights import WeightSpec

# init_hidden(3, 2, seed=7), generated once and pinned
W7 = np.array([
    [0.25019093320933394, 0.794427601939151],
    [0.551371380490387, -0.5495856200188163],
    [-0.39966743017754913, 0.7471068907925238],
])
B7 = np.array([-0.9894693908688506, 0.6424568367655326, 0.5941388575040925])
X7 = np.array([[0.0, 0.0], [1.0, -1.0], [0.5, 2.0]])
H7 = np.array([
    [0.27101689562794246, 0.6553086205609859, 0.6443142272843055],
    [0.1774520919844802, 0.8511201673141511, 0.3652531777514562],
    [0.6735930610351809, 0.4548660131155839, 0.8685865669764268],
])
BETA7 = np.array([1.0, -2.0, 0.5])
PRED7 = np.array([-0.7174432318518766, -1.3421616537680938, 0.19815431829222652])


def dense_oracle(H, Y, d, C):
    """Normal equations (I/C + H^T D H) beta = H^T D Y via a generic dense solve."""
    L = H.shape[1]
    D = np.diag(d)
    return np.linalg.solve(np.eye(L) / C + H.T @ D @ H, H.T @ D @ Y)


class TestHidden:
    def test_pinned_fixture(self):
        W, b = init_hidden(3, 2, 7)
        np.testing.assert_array_equal(W, W7)
        np.testing.assert_array_equal(b, B7)

    def test_pinned_hidden_output(self):
        np.testing.assert_allclose(hidden_output((W7, B7), X7), H7, rtol=1e-15)

    def test_pinned_predictions(self):
        model = ElmModel(W7, B7, BETA7, 1.0, 7)
        np.testing.assert_allclose(predict_elm(model, X7), PRED7, rtol=1e-14)

    @settings(max_examples=30)
    @given(L=st.integers(1, 40), n=st.integers(1, 6), seed=st.integers(0, 2**63))
    def test_deterministic_and_in_range(self, L, n, seed):
        W, b = init_hidden(L, n, seed)
        W2, b2 = init_hidden(L, n, seed)
        np.testing.assert_array_equal(W, W2)
        np.testing.assert_array_equal(b, b2)
        assert W.shape == (L, n) and b.shape == (L,)
        assert np.all(np.abs(W) <= 1) and np.all(np.abs(b) <= 1)

    def test_zero_parameters_give_half(self):
        H = hidden_output((np.zeros((1, 2)), np.zeros(1)), np.random.default_rng(0).normal(size=(5, 2)))
        np.testing.assert_array_equal(H, 0.5)

    def test_sigmoid_limits(self):
        H = hidden_output((np.ones((1, 1)), np.zeros(1)), [[0.0], [800.0]])
        assert H[0, 0] == 0.5
        assert H[1, 0] == 1.0

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            hidden_output((W7, B7), np.zeros((2, 3)))

    @pytest.mark.parametrize("L,n", [(0, 1), (1, 0), (2.5, 1)])
    def test_bad_sizes(self, L, n):
        with pytest.raises(InvalidArgumentError):
            init_hidden(L, n, 0)


class TestSolve:
    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), N=st.integers(2, 20), L=st.integers(1, 10))
    def test_matches_dense_oracle(self, seed, N, L):
        rng = np.random.default_rng(seed)
        H = rng.uniform(0, 1, (N, L))
        Y = rng.normal(size=N)
        d = rng.uniform(0.05, 2.0, N)
        C = float(rng.choice([0.1, 1.0, 10.0]))
        beta = solve_output_weights(H, Y, d, C)
        assert np.max(np.abs(beta - dense_oracle(H, Y, d, C))) <= 1e-9

    @pytest.mark.parametrize("L", [19, 21])
    def test_branches_against_oracle(self, L):
        rng = np.random.default_rng(11)
        H_all = rng.uniform(0, 1, (20, 21))
        H = H_all[:, :L]
        Y = rng.normal(size=20)
        d = rng.uniform(0.2, 1.5, 20)
        beta = solve_output_weights(H, Y, d, 2.0)
        np.testing.assert_allclose(beta, dense_oracle(H, Y, d, 2.0), atol=1e-9)

    def test_branch_identity(self):
        # the dual-form expression equals the primal normal equations for the same problem
        rng = np.random.default_rng(12)
        H = rng.uniform(0, 1, (8, 15))
        Y = rng.normal(size=8)
        d = rng.uniform(0.1, 3.0, 8)
        C = 5.0
        dual = solve_output_weights(H, Y, d, C)
        np.testing.assert_allclose(dual, dense_oracle(H, Y, d, C), atol=1e-8)
        alt = H.T @ np.linalg.solve(np.eye(8) / C + np.diag(d) @ H @ H.T, d * Y)
        np.testing.assert_allclose(dual, alt, atol=1e-8)

    def test_large_C_pseudoinverse(self):
        rng = np.random.default_rng(13)
        H = rng.uniform(0, 1, (40, 6))
        Y = rng.normal(size=40)
        beta = solve_output_weights(H, Y, np.ones(40), 1e12)
        np.testing.assert_allclose(beta, np.linalg.pinv(H) @ Y, atol=1e-5)

    def test_realizable_targets(self):
        rng = np.random.default_rng(14)
        H = rng.uniform(0, 1, (30, 5))
        beta0 = rng.normal(size=5)
        beta = solve_output_weights(H, H @ beta0, np.ones(30), 1e10)
        np.testing.assert_allclose(beta, beta0, atol=1e-5)

    def test_rejects_bad_weights(self):
        with pytest.raises(InvalidArgumentError):
            solve_output_weights(np.ones((3, 2)), np.zeros(3), np.array([1.0, 0.0, 1.0]), 1.0)


def sinc_data(seed=0, n=80):
    train, _ = gen_sinc(n, 10, seed)
    return train


class TestFit:
    def test_deterministic(self):
        d = sinc_data()
        a = fit_elm(d, 1.0, 15, seed=3)
        b = fit_elm(d, 1.0, 15, seed=3)
        np.testing.assert_array_equal(a.beta, b.beta)

    def test_gauss_irls_equals_elm(self):
        d = sinc_data(1)
        plain = fit_elm(d, 4.0, 20, seed=2)
        model, trace = fit_irls_elm(d, 4.0, 20, seed=2, cfg=IrlsConfig(weight_spec=WeightSpec.gauss()))
        np.testing.assert_array_equal(model.beta, plain.beta)
        assert trace.n_iter == 1

    def test_gauss_irls_equals_elm_wide(self):
        d = sinc_data(1, n=15)
        plain = fit_elm(d, 4.0, 30, seed=2)
        model, _ = fit_irls_elm(d, 4.0, 30, seed=2, cfg=IrlsConfig(weight_spec=WeightSpec.gauss()))
        np.testing.assert_array_equal(model.beta, plain.beta)

    def test_single_pass_baseline(self):
        d = sinc_data(2)
        spec = WeightSpec.sigmoid(4.0)
        model, trace = fit_irls_elm(d, 1.0, 20, seed=0, cfg=IrlsConfig(max_iter=1, weight_spec=spec))
        plain = fit_elm(d, 1.0, 20, seed=0)
        H = hidden_output(plain, d.features)
        xi = d.targets - H @ plain.beta
        np.testing.assert_array_equal(model.beta, solve_output_weights(H, d.targets, spec.weight(xi), 1.0))

    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 10_000), L=st.sampled_from([5, 20, 60]),
           lam=st.sampled_from([1.0, 4.0, 8.0]))
    def test_descent(self, seed, L, lam):
        d = inject_outliers(sinc_data(seed, n=40), 0.2, 10.0, seed)
        cfg = IrlsConfig(max_iter=30, tol=1e-12, weight_spec=WeightSpec.sigmoid(lam))
        _, trace = fit_irls_elm(d, 8.0, L, seed=seed, cfg=cfg)
        assert np.all(np.diff(trace.risks) <= 1e-10)

    @pytest.mark.parametrize("seed", range(5))
    def test_corrupted_points_downweighted(self, seed):
        d = inject_outliers(sinc_data(seed, n=200), 0.2, 10.0, seed=100 + seed)
        _, trace = fit_irls_elm(d, 1.0, 40, seed=seed, cfg=IrlsConfig(weight_spec=WeightSpec.sigmoid(4.0)))
        bad = d.provenance["outlier_indices"]
        good = np.setdiff1d(np.arange(d.n_samples), bad)
        w = trace.final_weights
        # a near-zero clean label barely moves when multiplied by 10; only
        # count samples whose label changed by more than 0.45
        real = [i for i in bad if abs(0.9 * d.targets[i]) > 0.45]
        assert np.all(w[real] < np.percentile(w[good], 10))

    def test_zero_beta_predicts_zero(self):
        model = ElmModel(W7, B7, np.zeros(3), 1.0, 7)
        np.testing.assert_array_equal(model.predict(X7), 0.0)

    def test_single_node(self):
        model = ElmModel(np.array([[0.5]]), np.array([0.1]), np.array([2.0]), 1.0, 0)
        x = np.array([[-1.0], [3.0]])
        np.testing.assert_allclose(model.predict(x), 2.0 / (1.0 + np.exp(-(0.5 * x[:, 0] + 0.1))))

    @pytest.mark.parametrize("C,L", [(0.0, 5), (1.0, 0)])
    def test_bad_arguments(self, C, L):
        with pytest.raises(InvalidArgumentError):
            fit_elm(sinc_data(), C, L)
