import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sepsense.graph import BlockStructure, sequential_graph
from sepsense.models import heat_lqr
from sepsense.riccati import care_closed_form
from sepsense.sensitivity import (DecayModel, FunctionOracle, block_norm_matrix,
                                  decay_profile, empirical_lipschitz, fit_decay,
                                  gamma_from_quadratic, quadratic_oracle)


def random_symmetric(n, seed):
    X = np.random.default_rng(seed).standard_normal((n, n))
    return (X + X.T) / 2


def central_difference(f, x, h=1e-6):
    g = np.zeros_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        g[k] = (f(x + e) - f(x - e)) / (2 * h)
    return g


class TestFunctionOracle:
    def test_single_and_batch(self):
        P = random_symmetric(4, 0)
        V = quadratic_oracle(P)
        X = np.random.default_rng(1).uniform(-1, 1, (5, 4))
        vals = V.evaluate(X)
        assert vals.shape == (5,)
        assert V.evaluate(X[0]) == pytest.approx(X[0] @ P @ X[0])
        np.testing.assert_allclose(V.evaluate_gradient(X), 2 * X @ P)

    def test_gradient_matches_finite_differences(self):
        V = quadratic_oracle(random_symmetric(6, 2))
        x = np.random.default_rng(3).uniform(-1, 1, 6)
        np.testing.assert_allclose(V.evaluate_gradient(x), central_difference(V.evaluate, x),
                                   rtol=1e-5, atol=1e-8)

    def test_pointwise_oracle(self):
        V = FunctionOracle(3, lambda x: float(np.sum(x ** 2)), lambda x: 2 * x,
                           vectorized=False)
        X = np.arange(6.0).reshape(2, 3)
        np.testing.assert_allclose(V.evaluate(X), [5.0, 50.0])
        np.testing.assert_allclose(V.evaluate_gradient(X), 2 * X)

    def test_missing_gradient(self):
        with pytest.raises(ValueError):
            FunctionOracle(2, lambda X: X.sum(1)).evaluate_gradient(np.zeros(2))

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            FunctionOracle(2, np.sum, domain="sphere")
        with pytest.raises(ValueError):
            FunctionOracle(3, np.sum, blocks=BlockStructure((1, 1)))
        with pytest.raises(ValueError):
            quadratic_oracle(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestBlockNormMatrix:
    def test_block_diagonal(self):
        H = np.zeros((4, 4))
        H[:2, :2] = 1.0
        H[2:, 2:] = 2.0
        N = block_norm_matrix(H, BlockStructure((2, 2)))
        assert N[0, 1] == 0.0 and N[1, 0] == 0.0

    def test_scalar_blocks(self):
        H = random_symmetric(5, 4)
        np.testing.assert_array_equal(block_norm_matrix(H, BlockStructure((1,) * 5)), np.abs(H))

    def test_matches_svd(self):
        H = np.random.default_rng(5).standard_normal((5, 5))
        blocks = BlockStructure((2, 3))
        N = block_norm_matrix(H, blocks)
        for i in range(2):
            for j in range(2):
                blk = H[blocks.state_slice(i), blocks.state_slice(j)]
                np.testing.assert_allclose(N[i, j], np.linalg.svd(blk, compute_uv=False)[0],
                                           rtol=1e-10)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            block_norm_matrix(np.eye(3), BlockStructure((1, 1)))


class TestGammaFromQuadratic:
    def test_identity(self):
        samples = gamma_from_quadratic(np.eye(4), sequential_graph(4))
        assert samples == {1: 0.0, 2: 0.0, 3: 0.0}

    def test_single_coupling(self):
        P = np.eye(3)
        P[0, 1] = P[1, 0] = 0.1
        samples = gamma_from_quadratic(P, sequential_graph(3))
        assert samples[1] == pytest.approx(0.2)
        assert samples[2] == 0.0

    def test_unreachable_pairs_omitted(self):
        from sepsense.graph import InteractionGraph
        g = InteractionGraph.from_edges(3, [(0, 1)], symmetric=True)
        assert set(gamma_from_quadratic(np.eye(3), g)) == {1}

    def test_heat_rates_order_with_diffusion(self):
        rates = []
        for sigma in (1e-3, 1e-2):
            prob = heat_lqr(60, sigma, 0.01)
            P = care_closed_form(prob.A, *prob.scaled_identity_costs()).P
            samples = gamma_from_quadratic(P, sequential_graph(60))
            rates.append(fit_decay({k: v for k, v in samples.items() if k <= 15}).rate)
        assert rates[0] < rates[1]

    @pytest.mark.parametrize("seed", range(3))
    def test_dominates_empirical_lipschitz(self, seed):
        n = 8
        P = random_symmetric(n, seed)
        g = sequential_graph(n)
        gam = gamma_from_quadratic(P, g)
        V = quadratic_oracle(P)
        rng = np.random.default_rng(seed + 10)
        for _ in range(10):
            x = rng.uniform(-1, 1, n)
            for j in range(n):
                L = empirical_lipschitz(V, x, j)
                for i in range(n):
                    if i != j:
                        assert L[i] <= gam[abs(i - j)] * abs(x[j]) + 1e-10


class TestEmpiricalLipschitz:
    def test_hand_value(self):
        P = np.eye(2)
        P[0, 1] = P[1, 0] = 0.1
        L = empirical_lipschitz(quadratic_oracle(P), np.array([0.5, 0.3]), 1)
        assert L[0] == pytest.approx(0.06, abs=1e-15)
        assert np.isnan(L[1])

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2 ** 16), st.integers(2, 7))
    def test_exact_for_quadratics(self, seed, n):
        P = random_symmetric(n, seed)
        x = np.random.default_rng(seed).uniform(-1, 1, n)
        j = seed % n
        L = empirical_lipschitz(quadratic_oracle(P), x, j)
        for i in range(n):
            if i != j:
                np.testing.assert_allclose(L[i], 2 * abs(P[i, j]) * abs(x[j]),
                                           rtol=1e-9, atol=1e-14)

    def test_zero_component(self):
        x = np.array([0.4, 0.0, -0.2])
        L = empirical_lipschitz(quadratic_oracle(random_symmetric(3, 1)), x, 1)
        np.testing.assert_array_equal(L[[0, 2]], 0.0)

    def test_zero_probe_is_absent(self):
        x = np.array([0.0, 0.3, 0.2])
        L = empirical_lipschitz(quadratic_oracle(random_symmetric(3, 1)), x, 1)
        assert np.isnan(L[0]) and np.isfinite(L[2])

    def test_index_error(self):
        with pytest.raises(IndexError):
            empirical_lipschitz(quadratic_oracle(np.eye(2)), np.ones(2), 2)


class TestFitDecay:
    def test_exact_exponential(self):
        model = fit_decay({k: 3 * 0.5 ** k for k in range(1, 11)})
        np.testing.assert_allclose([model.C, model.rate], [3.0, 0.5], rtol=1e-12)
        assert model.fit_residual <= 1e-12

    def test_exact_polynomial(self):
        model = fit_decay({k: 2 * (k + 1.0) ** -3 for k in range(1, 11)}, "polynomial")
        np.testing.assert_allclose([model.C, model.rate], [2.0, 3.0], rtol=1e-12)
        np.testing.assert_allclose(model(np.arange(1, 4)), 2 * np.arange(2.0, 5.0) ** -3)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(1e-3, 1e3), st.floats(0.05, 0.95), st.integers(0, 2 ** 16))
    def test_scale_equivariance(self, lam, rho, seed):
        noise = np.random.default_rng(seed).uniform(0.5, 2.0, 8)
        samples = {k: rho ** k * noise[k - 1] for k in range(1, 9)}
        base = fit_decay(samples)
        scaled = fit_decay({k: lam * v for k, v in samples.items()})
        np.testing.assert_allclose(scaled.C, lam * base.C, rtol=1e-9)
        np.testing.assert_allclose(scaled.rate, base.rate, rtol=1e-9)

    def test_drops_underflow(self):
        model = fit_decay({1: 0.5, 2: 0.25, 3: 0.0, 4: 1e-301})
        assert set(model.samples) == {1, 2}

    def test_too_few_samples(self):
        with pytest.raises(ValueError):
            fit_decay({1: 1.0, 2: 0.0})

    def test_increasing_data_rejected(self):
        with pytest.raises(ValueError):
            fit_decay({1: 1.0, 2: 2.0, 3: 4.0})

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            fit_decay({1: 1.0, 2: 0.5}, "gaussian")


class TestDecayModel:
    @pytest.mark.parametrize("kind, C, rate", [("exponential", 1.0, 1.0),
                                               ("exponential", 1.0, 0.0),
                                               ("polynomial", 1.0, 0.0),
                                               ("exponential", 0.0, 0.5),
                                               ("linear", 1.0, 0.5)])
    def test_invalid(self, kind, C, rate):
        with pytest.raises(ValueError):
            DecayModel(kind, C, rate)

    def test_strictly_decreasing(self):
        for model in (DecayModel("exponential", 2.0, 0.7), DecayModel("polynomial", 2.0, 1.5)):
            assert np.all(np.diff(model(np.arange(20))) < 0)

    def test_decay_profile(self):
        M = np.array([[1.0, -0.5, 0.1], [0.4, 1.0, 0.2], [0.05, 0.3, 1.0]])
        assert decay_profile(M) == {1: 0.5, 2: 0.1}
