"""Acceptance suite: one test per criterion, reported as PASS/FAIL in the summary."""

import math

import mpmath
import numpy as np
import pytest

from sepsense.experiments import lqr_graph, make_split, minimal_width, train_snn
from sepsense.graph import sequential_graph
from sepsense.models import heat_lqr, random_banded_lqr, sin_product_oracle
from sepsense.riccati import (LQRProblem, care_closed_form, care_newton, care_residual,
                              certificate_constants, decay_certificate, solve_care, solve_dare)
from sepsense.sensitivity import (block_norm_matrix, decay_profile, fit_decay,
                                  gamma_from_quadratic, quadratic_oracle)
from sepsense.separable import (AnchoredDecomposition, SeparableApprox, anchored_psi_component,
                                error_bound_matrix)
from sepsense.snn import (TrainConfig, build_snn, count, input_gradient, loss_and_grad,
                          make_dataset, train)

SEEDS = (0, 1, 2)


@pytest.mark.criterion(1, "parameter counts")
def test_parameter_counts(detail):
    big = count(build_snn(sequential_graph(200), 10, 16)).parameters
    small = count(build_snn(sequential_graph(50), 3, 32)).parameters
    detail(f"{big}, {small}")
    assert (big, small) == (40721, 9409)


@pytest.mark.criterion(2, "closed-form CARE against Newton-Kleinman")
def test_closed_form_against_newton(detail):
    n = 20
    worst_diff = worst_res = 0.0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        A = np.diag(rng.standard_normal(n))
        off = rng.standard_normal(n - 1)
        A += np.diag(off, 1) + np.diag(off, -1)
        c, gamma = 10.0 ** rng.uniform(-1, 1, 2)
        I = np.eye(n)
        prob = LQRProblem(A, I, c * I, gamma * I)
        closed = care_closed_form(A, c, gamma)
        # stabilizing start from a Gershgorin bound, independent of the closed form
        shift = np.max(np.sum(np.abs(A), axis=1)) + 1.0
        newton = care_newton(prob, K0=shift * I)
        P1, P2 = closed.P, newton.P
        diff = np.linalg.norm(P1 - P2) / np.linalg.norm(P2)
        worst_diff = max(worst_diff, diff)
        assert diff <= 1e-8
        for P in (P1, P2):
            res = np.linalg.norm(care_residual(P, A, I, c * I, gamma * I))
            worst_res = max(worst_res, res / (1 + np.linalg.norm(P)))
            assert res <= 1e-8 * (1 + np.linalg.norm(P))
        assert newton.iterations > 1
    detail(f"max rel diff {worst_diff:.1e}, max scaled residual {worst_res:.1e}")


@pytest.mark.criterion(3, "decay certificate on the heat equation")
def test_heat_certificate(detail):
    rates = {}
    for sigma in (1e-3, 1e-2):
        prob = heat_lqr(200, sigma, 0.01)
        c, gamma = prob.scaled_identity_costs()
        cert = decay_certificate(prob.A, c, gamma, verify=False)
        P = care_closed_form(prob.A, c, gamma, method="chebyshev", bandwidth_hint=1).P
        violations, ratio = cert.verify(P)
        assert violations == 0, f"sigma={sigma}: worst ratio {ratio}"
        rates[sigma] = fit_decay(decay_profile(P)).rate
        detail(f"sigma={sigma:g}: K={cert.K:.3e} rho={cert.rho:.4f} worst ratio {ratio:.2e} "
               f"fitted rho {rates[sigma]:.4f}")
    assert rates[1e-2] > rates[1e-3]


@pytest.mark.criterion(4, "hand-checkable certificate")
def test_hand_certificate(detail):
    cert = certificate_constants(-1.0, 1.0, 1.0, 1.0, 1)
    chi = 1 + math.sqrt(2)
    got = (cert.theta, cert.chi, cert.rho, cert.M_F)
    want = (1.0, chi, 1 / chi, math.sqrt(3) + math.sqrt(2))
    detail(f"max abs diff {max(abs(a - b) for a, b in zip(got, want)):.1e}, K={cert.K:.6f}")
    np.testing.assert_allclose(got, want, rtol=0, atol=1e-12)


@pytest.mark.criterion(5, "separable error bound")
def test_separable_error_bound(detail):
    n = 20
    prob = random_banded_lqr(n, 1, seed=0)
    P = solve_care(prob).P
    graph = lqr_graph(prob)
    V = quadratic_oracle(P, domain="ball")
    gam = gamma_from_quadratic(P, graph)
    X = np.random.default_rng(0).standard_normal((1000, n))
    X *= (np.random.default_rng(1).random(1000) ** (1 / n) / np.linalg.norm(X, axis=1))[:, None]
    sq = np.sum(X * X, axis=1)
    margins = []
    for l in range(7):
        err = SeparableApprox(V, graph, l).error(X)
        bound = sq * error_bound_matrix(graph, gam, l).norm2_exact
        margins.append(float(np.max(err - bound)))
        assert np.all(err <= bound + 1e-9), f"l={l}"
    full = SeparableApprox(V, graph, n - 1).error(X)
    scaled = float(np.max(full / (1 + np.abs(V.evaluate(X)))))
    detail(f"max(err - bound) over l=0..6: {max(margins):.1e}; l=19 scaled error {scaled:.1e}")
    assert scaled <= 1e-10


@pytest.mark.criterion(6, "anchored-decomposition identity")
def test_anchored_identity(detail):
    n = 4
    graph = sequential_graph(n)
    rng = np.random.default_rng(0)
    worst = 0.0
    for x in rng.uniform(-1, 1, (100, n)):
        S = rng.standard_normal((n, n))
        V = quadratic_oracle((S + S.T) / 2)
        dec = AnchoredDecomposition(V)
        for l in range(n):
            sa = SeparableApprox(V, graph, l)
            for j in range(n):
                lhs = sa.psi_component(j, x[sa.index_sets[j]])
                worst = max(worst, abs(lhs - anchored_psi_component(dec, graph, j, l, x)))
    detail(f"max difference {worst:.1e}")
    assert worst <= 1e-9


def mp_network(model, theta, x):
    """Value and input gradient of the network in mpmath, read from the flat layout."""
    M, pos = model.M, 0
    value, grad = mpmath.mpf(0), [mpmath.mpf(0)] * model.n
    for g in model.groups:
        d = g.size
        w_in = theta[pos:pos + d * M]
        b = theta[pos + d * M:pos + d * M + M]
        w_out = theta[pos + d * M + M:pos + d * M + 2 * M]
        pos += d * M + 2 * M
        for m in range(M):
            a = b[m] + mpmath.fsum(x[g[i]] * w_in[i * M + m] for i in range(d))
            s = 1 / (1 + mpmath.exp(-a))
            value += w_out[m] * s
            for i in range(d):
                grad[g[i]] += w_out[m] * s * (1 - s) * w_in[i * M + m]
    return value + theta[pos], grad


def mp_loss(model, theta, X, V, G, cfg):
    total = mpmath.mpf(0)
    for x, v, gv in zip(X, V, G):
        w, gw = mp_network(model, theta, [mpmath.mpf(t) for t in x])
        total += (v - w) ** 2 + cfg.nu_g * mpmath.fsum((a - b) ** 2 for a, b in zip(gv, gw))
    w0, g0 = mp_network(model, theta, [mpmath.mpf(0)] * model.n)
    return total / len(X) + cfg.nu_z * (w0 ** 2 + mpmath.fsum(t * t for t in g0))


@pytest.mark.criterion(7, "exact gradients")
def test_gradient_exactness(detail):
    # 50-digit central differences, so the oracle error sits far below 1e-6 relative
    h = mpmath.mpf("1e-20")
    worst_theta = worst_x = 0.0
    with mpmath.workdps(50):
        for seed in range(3):
            n = 8
            model = build_snn(sequential_graph(n), 2, 4, seed=seed)
            rng = np.random.default_rng(seed)
            model.theta = 0.7 * rng.standard_normal(model.n_params)
            X = rng.uniform(-1, 1, (16, n))
            V, G = rng.standard_normal(16), rng.standard_normal((16, n))
            cfg = TrainConfig(nu_g=0.5, nu_z=0.5)
            _, grad = loss_and_grad(model, X, V, G, cfg)
            theta = [mpmath.mpf(t) for t in model.theta]
            for k in rng.choice(len(theta), 20, replace=False):
                up, dn = list(theta), list(theta)
                up[k] += h
                dn[k] -= h
                fd = float((mp_loss(model, up, X, V, G, cfg) - mp_loss(model, dn, X, V, G, cfg))
                           / (2 * h))
                worst_theta = max(worst_theta, abs(grad[k] - fd) / abs(fd))
            for x in rng.uniform(-1, 1, (20, n)):
                g = input_gradient(model, x)
                xm = [mpmath.mpf(t) for t in x]
                for i in range(n):
                    up, dn = list(xm), list(xm)
                    up[i] += h
                    dn[i] -= h
                    fd = float((mp_network(model, theta, up)[0]
                                - mp_network(model, theta, dn)[0]) / (2 * h))
                    worst_x = max(worst_x, abs(g[i] - fd) / abs(fd))
    detail(f"max relative error: theta probes {worst_theta:.1e}, input probes {worst_x:.1e}")
    assert worst_theta <= 1e-6 and worst_x <= 1e-6


@pytest.mark.slow
@pytest.mark.criterion(8, "training reaches tolerance on a 50-dim LQR")
def test_training_reproduction(detail):
    n = 50
    prob = random_banded_lqr(n, 1, seed=0)
    P = solve_care(prob).P
    oracle = quadratic_oracle(P)
    graph = lqr_graph(prob)
    passed, log = 0, []
    for seed in SEEDS:
        tr = make_dataset(oracle, 2 ** 15, "cube", seed=10 * seed + 1)
        va = make_dataset(oracle, 2 ** 15, "cube", seed=10 * seed + 2)
        model = build_snn(graph, 10, 16, seed=seed)
        rep = train(model, tr, va, TrainConfig(nu_g=0.5, nu_z=0.5, tolerance=1e-3,
                                               max_epochs=2000, seed=seed))
        ok = rep.stop_reason == "tolerance"
        passed += ok
        log.append(f"seed {seed}: {rep.epochs} epochs, {rep.stop_reason}")
        if passed >= 2:
            break
    detail("; ".join(log))
    assert passed >= 2


@pytest.mark.slow
@pytest.mark.criterion(9, "stronger decay gives lower test error")
def test_decay_strength_monotonicity(detail):
    n, size, l, M = 30, 2048, 5, 16
    graph = sequential_graph(n)
    cases = {"rho=1/8": dict(rho=0.125), "rho=1": dict(rho=1.0),
             "alpha=3": dict(alpha=3.0), "alpha=0": dict(alpha=0.0)}
    wins = {"rho": 0, "alpha": 0}
    log = []
    for seed in SEEDS:
        errs = {}
        for name, kw in cases.items():
            data = make_split(sin_product_oracle(n, **kw), size, size, size, "cube", 1.0, seed)
            cfg = TrainConfig(nu_g=0.5, nu_z=0.5, tolerance=1e-12, max_epochs=1000, seed=seed)
            errs[name] = train_snn(graph, l, M, data, cfg, init_seed=seed).test_mse
        wins["rho"] += errs["rho=1/8"] < errs["rho=1"]
        wins["alpha"] += errs["alpha=3"] < errs["alpha=0"]
        log.append(f"seed {seed}: " + ", ".join(f"{k} {v:.1e}" for k, v in errs.items()))
        if min(wins.values()) >= 2:
            break
    detail("; ".join(log))
    assert wins["rho"] >= 2 and wins["alpha"] >= 2


@pytest.mark.slow
@pytest.mark.criterion(10, "scaling study shape")
def test_scaling_shape(detail):
    dims = (20, 40, 60)
    cfg = TrainConfig(nu_g=0.5, nu_z=0.5, tolerance=1e-4, max_epochs=3000)
    rows = [minimal_width(random_banded_lqr(n, 1, seed=0), 3, cfg, target=1e-4, M_max=4)
            for n in dims]
    detail("; ".join(f"n={r.dim}: M_min={r.M_min} mse={r.test_mse:.1e} epochs={r.epochs}"
                     for r in rows))
    assert all(r.M_min <= 4 for r in rows)
    for M in sorted({1, 2, 4, *(r.M_min for r in rows)}):
        params = [count(build_snn(sequential_graph(n), 3, M)).parameters for n in dims]
        # exact affine fit in integers: equal increments over equal dimension steps
        slope = (params[1] - params[0]) // (dims[1] - dims[0])
        residual = [p - (params[0] + slope * (n - dims[0])) for n, p in zip(dims, params)]
        assert residual == [0, 0, 0], f"M={M}: {params}"
        assert (params[1] - params[0]) % (dims[1] - dims[0]) == 0


@pytest.mark.criterion(11, "DARE properties")
def test_dare_properties(detail):
    prob = LQRProblem([[1.0]], [[1.0]], [[1.0]], [[1.0]], time_mode="discrete")
    p = solve_dare(prob).P[0, 0]
    phi = (1 + math.sqrt(5)) / 2
    assert abs(p - phi) <= 1e-10

    banded = random_banded_lqr(30, 1, seed=0, time_mode="discrete")
    sol = solve_dare(banded)
    model = fit_decay(decay_profile(block_norm_matrix(sol.P, banded.blocks)))
    detail(f"|p - phi| {abs(p - phi):.1e}; rho_P {model.rate:.4f}, "
           f"fit residual {model.fit_residual:.3f}")
    assert 0 < model.rate < 1
    assert math.isfinite(model.fit_residual)
