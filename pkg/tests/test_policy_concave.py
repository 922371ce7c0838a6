import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import kernel_cell_average, softmax
from profitbandit.core import NormalizedLoss, ParameterError, PoisonedStateError
from profitbandit.policy_concave import (
    ConcaveParams,
    ConcavePolicy,
    CostGrid,
    DomainError,
    KernelSpec,
    ResolutionError,
    apply_kernel,
    kernel_density,
    kernel_intervals,
    kernel_matrix,
    kernel_mean,
)
from profitbandit.policy_monotonic import Chosen


def losses(*values):
    arr = np.array(values, dtype=float)
    return NormalizedLoss(per_market=arr, total=float(arr.sum()))


def random_density(grid, rng, spikes=False):
    if spikes:
        u = np.full(grid.m, 1e-6)
        u[rng.integers(grid.m, size=2)] += rng.random(2) * 50
    else:
        u = rng.gamma(0.3, size=grid.m) + 1e-12
    return u / grid.integrate(u)


class TestCostGrid:
    def test_layout(self):
        g = CostGrid(0.1, 9)
        assert g.points[0] == 0.1 and g.points[-1] == pytest.approx(0.9)
        np.testing.assert_allclose(np.diff(g.points), 0.1)
        assert g.integrate(np.ones(9)) == pytest.approx(0.8)
        assert g.widths[0] == pytest.approx(0.05) and g.widths[4] == pytest.approx(0.1)

    def test_uniform_density_value(self):
        g = CostGrid(0.1, 64)
        np.testing.assert_allclose(g.uniform(), 1.25)
        assert g.integrate(g.uniform()) == pytest.approx(1.0, abs=1e-14)

    @pytest.mark.parametrize("kw", [dict(delta=0.0, m=16), dict(delta=0.5, m=16), dict(delta=0.1, m=4)])
    def test_invalid(self, kw):
        with pytest.raises(ParameterError):
            CostGrid(**kw)


class TestKernelMean:
    def test_uniform(self):
        g = CostGrid(0.05, 256)
        assert kernel_mean(g, g.uniform()) == pytest.approx(0.5, abs=1e-12)

    def test_point_mass(self):
        g = CostGrid(0.05, 101)
        u = np.zeros(g.m)
        j = 37
        u[j] = 1.0 / g.widths[j]
        assert kernel_mean(g, u) == pytest.approx(g.points[j], abs=1e-12)

    def test_linear_density_closed_form(self):
        g = CostGrid(0.1, 4001)
        # cell averages of the density 2x / (0.9^2 - 0.1^2), exactly piecewise linear
        u = (g.edges[1:] + g.edges[:-1]) / (0.9**2 - 0.1**2)
        assert g.integrate(u) == pytest.approx(1.0, abs=1e-12)
        closed = (0.9**3 - 0.1**3) / 3 / ((0.9**2 - 0.1**2) / 2)
        assert closed == pytest.approx(0.60667, abs=1e-5)
        assert kernel_mean(g, u) == pytest.approx(closed, abs=1e-6)

    def test_unnormalized_rejected(self):
        g = CostGrid(0.1, 32)
        with pytest.raises(ParameterError):
            kernel_mean(g, 2 * g.uniform())


class TestKernelDensity:
    spec = KernelSpec(epsilon=0.01, delta=0.1)

    def test_far_branch(self):
        assert kernel_density(self.spec, 0.5, 0.6, 0.8) == pytest.approx(1 / 0.3)

    def test_near_branch_left(self):
        assert kernel_density(self.spec, 0.5, 0.495, 0.505) == pytest.approx(100.0)
        assert kernel_density(self.spec, 0.5, 0.502, 0.505) == 0.0

    def test_near_branch_right(self):
        assert kernel_density(self.spec, 0.105, 0.11, 0.106) == pytest.approx(100.0)
        assert kernel_density(self.spec, 0.105, 0.1, 0.106) == 0.0

    def test_outside_support(self):
        assert kernel_density(self.spec, 0.5, 0.6, 0.55) == 0.0

    def test_domain(self):
        with pytest.raises(DomainError):
            kernel_density(self.spec, 0.5, 0.05, 0.6)
        with pytest.raises(DomainError):
            kernel_density(self.spec, 0.95, 0.5, 0.6)

    @settings(max_examples=200)
    @given(st.floats(0.1, 0.9), st.floats(0.1, 0.9), st.floats(0.1, 0.9))
    def test_bounded_by_branch_max(self, mu, x, y):
        v = kernel_density(self.spec, mu, x, y)
        assert 0.0 <= v <= max(1 / self.spec.epsilon, 1 / max(abs(y - mu), 1e-300)) + 1e-9
        if abs(y - mu) < self.spec.epsilon:
            assert v in (0.0, 1 / self.spec.epsilon)

    def test_spec_validation(self):
        with pytest.raises(ParameterError):
            KernelSpec(epsilon=0.5, delta=0.1)
        with pytest.raises(ParameterError):
            KernelSpec(epsilon=0.01, delta=0.5)


class TestApplyKernel:
    @pytest.mark.parametrize("eps", [0.01, 0.001, 1e-9])
    def test_matches_dense_matrix(self, eps):
        g = CostGrid(0.05, 256)
        spec = KernelSpec(eps, 0.05)
        rng = np.random.default_rng(0)
        for spikes in (False, True):
            u = random_density(g, rng, spikes)
            mu = kernel_mean(g, u)
            dense = kernel_matrix(spec, g, mu) @ (u * g.widths)
            np.testing.assert_allclose(apply_kernel(spec, g, u), dense / g.integrate(dense), rtol=1e-9, atol=1e-9)

    def test_kernel_matrix_columns_integrate_to_one(self):
        g = CostGrid(0.05, 128)
        spec = KernelSpec(0.003, 0.05)
        for mu in (0.05, 0.051, 0.3, 0.95):
            M = kernel_matrix(spec, g, mu)
            np.testing.assert_allclose(g.widths @ M, 1.0, atol=1e-12)

    def test_matrix_entries_are_cell_averages_of_the_continuous_kernel(self):
        g = CostGrid(0.1, 17)
        spec = KernelSpec(0.02, 0.1)
        for mu in (0.5, 0.11):
            M = kernel_matrix(spec, g, mu)
            for k in (0, 5, 8, 16):
                for j in range(g.m):
                    ref = kernel_cell_average(mu, spec.epsilon, spec.delta, g.points[k], g.edges[j], g.edges[j + 1])
                    assert M[j, k] == pytest.approx(ref, abs=2e-3 * max(1.0, ref))

    def test_converges_to_pointwise_kernel(self):
        # q(x) for a smooth u approaches the integral of K(x, y) u(y) dy as m grows
        spec = KernelSpec(0.01, 0.1)
        x0 = 0.3
        errors = []
        for m in (64, 256, 1024):
            g = CostGrid(0.1, m)
            u = 1.0 + 0.5 * np.cos(3 * g.points)
            u /= g.integrate(u)
            mu = kernel_mean(g, u)
            ys = np.linspace(0.1, 0.9, 200001)
            uy = np.interp(ys, g.points, u)
            ref = np.mean([kernel_density(spec, mu, x0, y) * v for y, v in zip(ys[::50], uy[::50])]) * 0.8
            errors.append(abs(apply_kernel(spec, g, u)[g.cell_of(x0)] - ref))
        assert errors[-1] < 0.02 and errors[-1] <= errors[0]

    def test_point_mass_goes_to_epsilon_window(self):
        g = CostGrid(0.1, 801)
        spec = KernelSpec(0.01, 0.1)
        j = 400
        u = np.zeros(g.m)
        u[j] = 1 / g.widths[j]
        q = apply_kernel(spec, g, u)
        support = g.points[q > 1e-12]
        assert support.min() >= g.points[j] - 0.01 - g.spacing and support.max() <= g.points[j] + g.spacing / 2

    def test_uniform_normalized(self):
        g = CostGrid(0.05, 256)
        q = apply_kernel(KernelSpec(0.01, 0.05), g, g.uniform())
        assert g.integrate(q) == pytest.approx(1.0, abs=1e-6)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from([0.01, 0.001]), st.booleans())
    def test_random_densities(self, seed, eps, spikes):
        g = CostGrid(0.05, 256)
        spec = KernelSpec(eps, 0.05)
        u = random_density(g, np.random.default_rng(seed), spikes)
        mu = kernel_mean(g, u)
        q = apply_kernel(spec, g, u, mu)
        assert np.all(q >= 0)
        assert g.integrate(q) == pytest.approx(1.0, abs=1e-6)
        lo, hi = kernel_intervals(spec, mu, g.points)
        covered = np.zeros(g.m, dtype=bool)
        for a, b in zip(lo[u > 0], hi[u > 0]):
            covered |= (g.edges[1:] > a) & (g.edges[:-1] < b)
        assert np.all(q[~covered] == 0)
        # the kernel only moves mass toward the mean
        assert abs(kernel_mean(g, q) - mu) <= 2 * eps + g.spacing

    def test_resolution_error(self):
        g = CostGrid(0.1, 16)
        u = g.uniform() * 1.01
        with pytest.raises(ResolutionError):
            apply_kernel(KernelSpec(0.01, 0.1), g, u, mu=0.5)


def small_policy(**kw):
    base = dict(n=1, K=1, eta=0.01, epsilon=0.01, delta=0.1, gamma=0.1, m=81)
    base.update(kw)
    return ConcavePolicy(ConcaveParams(**base))


class TestEstimators:
    def test_f_zero_at_other_price(self):
        pol = small_policy()
        j = pol.grid.cell_of(0.7)
        ch = Chosen(price=0, options=(j,))
        assert pol.estimator_f(ch, losses(0.4), 0, 5, 1) == 0.0
        assert not np.any(pol.estimator_f(ch, losses(0.4), 0, p_idx=1))

    def test_f_zero_when_query_interval_misses_chosen(self):
        pol = small_policy()
        j = pol.grid.cell_of(0.6)
        k = pol.grid.cell_of(0.55)
        assert pol.u_mean(0, 0) == pytest.approx(0.5)
        assert pol.estimator_f(Chosen(0, (j,)), losses(0.4), 0, k, 0) == 0.0

    def test_f_hand_example(self):
        pol = small_policy()
        j = pol.grid.cell_of(0.7)
        assert pol.grid.points[j] == pytest.approx(0.7)
        k = pol.grid.m - 1
        # the worked example takes the playing density to be uniform, 1/0.8 = 1.25
        pol._q[0, 0] = pol.grid.uniform()
        value = pol.estimator_f(Chosen(0, (j,)), losses(0.4), 0, k, 0)
        assert 0.4 / (1.25 * (0.5 + 0.1)) * (1 / (0.9 - 0.5)) == pytest.approx(1.3333333333)
        assert value == pytest.approx(1.3333333333, abs=1e-9)

    def test_f_uses_the_smoothed_density(self):
        pol = small_policy()
        j, k = pol.grid.cell_of(0.7), pol.grid.m - 1
        q = pol.q_density(0, 0)[j]
        assert q < 1.25  # smoothing pulls mass toward the mean 0.5
        value = pol.estimator_f(Chosen(0, (j,)), losses(0.4), 0, k, 0)
        assert value == pytest.approx(0.4 / (q * 0.6) * 2.5, abs=1e-9)

    def test_h_hand_example(self):
        eps = math.e * 1e-3
        pol = small_policy(eta=0.01, epsilon=eps, gamma=None)
        L = math.log(1000.0)
        assert pol.gamma == pytest.approx(0.01 * L, abs=1e-12)
        assert pol.gamma == pytest.approx(0.069078, abs=1e-6)
        h = pol.estimator_h(Chosen(0, (3,)), losses(0.4), 0)
        oracle = 0.4 / (0.5 + 0.01 * L) + 3 * 0.01 * L * (1 / (0.01 * L) - 1 / (0.5 + 0.01 * L))
        assert h == pytest.approx(oracle, abs=1e-12)
        assert h == pytest.approx(3.338737, abs=1e-6)

    def test_h_zero_loss_only_exploration(self):
        pol = small_policy(K=3)
        pol.set_price_logweights(np.array([0.0, 1.0, -1.0, 0.5]))
        h = pol.estimator_h(Chosen(1, (0,)), losses(0.0))
        q = pol.price_probs
        coef = pol.params.exploration_coef
        np.testing.assert_allclose(h, coef * (1 / pol.gamma - 1 / (q + pol.gamma)), atol=1e-14)

    @pytest.mark.parametrize("gamma", [1e-2, 1e-4, 1e-6])
    def test_h_limit_is_mixture_loss(self, gamma):
        pol = small_policy(gamma=gamma, m=33)
        pol.set_price_logweights(np.array([0.3, -0.2]))
        grid = pol.grid
        q0 = pol.price_probs.copy()

        def lbar(c, p):
            return 0.5 * (1 - (p * (1 - p) * math.sqrt(c) - c))

        for p in range(2):
            qc = pol.q_density(0, p) * grid.widths
            expect = 0.0
            for pt in range(2):
                for j in range(grid.m):
                    prob = q0[pt] * pol.q_density(0, pt)[j] * grid.widths[j]
                    expect += prob * pol.estimator_h(Chosen(pt, (j,)), losses(lbar(grid.points[j], float(pt))), p)
            explore = pol.params.exploration_coef * (1 / gamma - 1 / (q0[p] + gamma))
            mixture = float(np.sum(qc * [lbar(c, float(p)) for c in grid.points]))
            assert abs(expect - explore - mixture) / mixture <= gamma / q0[p] + 1e-9


class TestUpdate:
    def test_zero_loss_round(self):
        pol = small_policy(K=2)
        u_before = pol.u_logdensity.copy()
        q = pol.price_probs.copy()
        pol.update(Chosen(1, (10,)), losses(0.0))
        np.testing.assert_allclose(pol.u_logdensity, u_before, atol=1e-12)
        explore = pol.params.exploration_coef * (1 / pol.gamma - 1 / (q + pol.gamma))
        np.testing.assert_allclose(pol.price_probs, softmax(np.log(q) - pol.eta * explore), atol=1e-12)

    def test_positivity_and_normalization(self):
        pol = small_policy(n=2, K=2, eta=0.2)
        rng = np.random.default_rng(0)
        for _ in range(200):
            ch = pol.sample_indices(rng)
            before = pol.u_density(0, ch.price)
            pol.update(ch, losses(*rng.random(2)))
            after = pol.u_density(0, ch.price)
            assert np.all(after[before > 0] > 0)
            for i in range(2):
                for p in range(3):
                    assert pol.grid.integrate(pol.u_density(i, p)) == pytest.approx(1.0, abs=1e-6)
                    assert pol.grid.integrate(pol.q_density(i, p)) == pytest.approx(1.0, abs=1e-6)

    def test_only_chosen_price_slices_change(self):
        pol = small_policy(n=2, K=3)
        before = pol.u_logdensity.copy()
        pol.update(Chosen(2, (5, 70)), losses(0.6, 0.2))
        changed = {tuple(ix) for ix in np.argwhere(np.any(pol.u_logdensity != before, axis=-1))}
        assert changed == {(0, 2), (1, 2)}

    def test_cached_q_is_kernel_of_u(self):
        pol = small_policy(n=1, K=1)
        rng = np.random.default_rng(1)
        for _ in range(30):
            pol.update(pol.sample_indices(rng), losses(rng.random()))
        for p in range(2):
            u = pol.u_density(0, p)
            np.testing.assert_allclose(pol.q_density(0, p), apply_kernel(pol.spec, pol.grid, u), rtol=1e-12)

    def test_sampling_matches_q(self):
        pol = small_policy(m=17)
        u = np.full(17, 1e-3)
        u[[3, 12]] = 5.0
        u /= pol.grid.integrate(u)
        pol.u_logdensity[0, 0] = np.log(u)
        pol._stale[0, 0] = True
        probs = pol.q_density(0, 0) * pol.grid.widths
        rng = np.random.default_rng(2)
        draws = np.bincount([pol.sample_cost(0, 0, rng) for _ in range(50000)], minlength=17) / 50000
        sd = np.sqrt(probs * (1 - probs) / 50000)
        assert np.all(np.abs(draws - probs) <= 4 * sd + 1e-12)

    def test_poisoned(self):
        pol = small_policy()
        with pytest.raises(PoisonedStateError):
            pol.update(Chosen(0, (0,)), NormalizedLoss(per_market=np.array([np.inf]), total=np.inf))
        with pytest.raises(PoisonedStateError):
            pol.update(Chosen(0, (0,)), losses(0.1))


def test_default_gamma():
    T = 4096
    prm = ConcaveParams(n=1, K=16, eta=T ** (-2 / 3), epsilon=T**-2.0, delta=1 / T, m=64)
    assert prm.gamma == pytest.approx((1 / 256) * (1 + 2 * math.log(T)), rel=1e-12)
    assert prm.gamma == pytest.approx(0.068889, abs=1e-6)


def test_checkpoint_round_trip():
    pol = small_policy(n=2, K=2)
    rng = np.random.default_rng(3)
    for _ in range(25):
        pol.update(pol.sample_indices(rng), losses(*rng.random(2)))
    back = ConcavePolicy.from_dict(json.loads(json.dumps(pol.to_dict())))
    assert back.round == pol.round
    np.testing.assert_allclose(back.q_density(1, 2), pol.q_density(1, 2), atol=1e-12)
    r1, r2 = np.random.default_rng(4), np.random.default_rng(4)
    assert [pol.sample_indices(r1) for _ in range(10)] == [back.sample_indices(r2) for _ in range(10)]
