import numpy as np
import pytest

from adabatch import (
    DegenerateLinesError,
    GradNormStats,
    Objective,
    Partitioning,
    SamplingLaw,
    expected_smoothness,
    generate_synthetic,
    grad,
    grad_norm_stats,
    gradient_noise,
    minimize_max_linear,
    noise_line,
    optimal_batch,
    partition,
    per_example_grads,
    sigma_lower_bound_factor,
    smoothness_constants,
    smoothness_lines,
    solve_reference,
    total_complexity,
    value,
    with_sign_labels,
)
from helpers import (
    enum_matrices,
    enum_second_moment,
    exhaustive_tau_argmin,
    grid_scan_argmin,
)


def toy_problem(kind="ridge", n=6, d=3, lam=0.3, k=2, seed=0):
    ds = generate_synthetic(n, d, seed=seed, noise=0.8)
    if kind == "logistic":
        ds = with_sign_labels(ds)
    obj = Objective(kind, lam=lam)
    part = partition(n, k, scheme="shuffled", seed=seed)
    constants = smoothness_constants(obj, ds, part)
    return obj, ds, part, constants


def random_stats(part, rng, scale=1.0):
    """Consistent GradNormStats from a random per-example gradient table."""
    d = 3
    G = scale * rng.standard_normal((part.n, d))
    h = np.einsum("ij,ij->i", G, G)
    mean_sq = np.asarray([h[c].mean() for c in part.cells])
    full_sq = np.asarray([np.sum(G[c].mean(0) ** 2) for c in part.cells])
    return GradNormStats(h, mean_sq, full_sq), G


class TestExpectedSmoothness:
    def test_full_batch_collapses_to_cell_constant(self):
        obj, ds, _, _ = toy_problem(n=5, k=1)
        part = partition(5, 1)
        constants = smoothness_constants(obj, ds, part)
        got = expected_smoothness(constants, part, "nice", 5)
        assert got == pytest.approx(constants.L_cell[0], rel=1e-12)

    def test_tau_one_collapses_to_max_constant(self):
        obj, ds, _, _ = toy_problem(n=5, k=1)
        part = partition(5, 1)
        constants = smoothness_constants(obj, ds, part)
        got = expected_smoothness(constants, part, "nice", 1)
        assert got == pytest.approx(constants.L_i.max(), rel=1e-12)

    def test_against_independent_transcription(self):
        # K=2, sizes (3,2), q=(0.6,0.4): a literal re-coding of the bound
        part = partition(5, 2)
        np.testing.assert_allclose(part.probs, [0.6, 0.4])
        obj, ds, _, _ = toy_problem(n=5, k=2)
        constants = smoothness_constants(obj, ds, part)
        tau = 2
        n = 5
        candidates = []
        for j in range(2):
            n_j = float(part.sizes[j])
            q_j = part.probs[j]
            L_j = constants.L_cell[j]
            L_max = constants.L_max_cell[j]
            candidates.append(
                n_j / (q_j * (n_j - 1.0)) * ((tau - 1.0) * L_j * n_j + (n_j - tau) * L_max)
            )
        expected = max(candidates) / (n * tau)
        got = expected_smoothness(constants, part, "nice", tau)
        assert got == pytest.approx(expected, rel=1e-14)

    def test_singleton_cell_rejected_for_fixed_size_law(self):
        part = Partitioning(
            cells=(np.array([0]), np.array([1, 2])), probs=np.array([0.4, 0.6]), n=3
        )
        obj = Objective("ridge", lam=0.1)
        ds = generate_synthetic(3, 2, seed=1)
        constants = smoothness_constants(obj, ds, part)
        with pytest.raises(ValueError):
            expected_smoothness(constants, part, "nice", 1)
        # the independent law tolerates singleton cells
        assert expected_smoothness(constants, part, "independent", 1) > 0

    def test_tau_out_of_range(self):
        obj, ds, part, constants = toy_problem()
        with pytest.raises(ValueError):
            expected_smoothness(constants, part, "nice", part.min_cell_size + 1)


class TestGradientNoise:
    def test_full_batch_is_squared_gradient_norm(self):
        obj, ds, _, _ = toy_problem(n=5)
        part = partition(5, 1)
        x = np.array([0.7, -0.1, 0.4])
        stats = grad_norm_stats(Objective("ridge", lam=0.3), ds, part, x)
        g = grad(Objective("ridge", lam=0.3), ds, x)
        got = gradient_noise(stats, part, "nice", 5)
        assert got == pytest.approx(float(g @ g), rel=1e-12)

    @pytest.mark.parametrize("kind", ["nice", "independent"])
    def test_interpolation_gives_zero(self, kind):
        part = partition(6, 2)
        zero = GradNormStats(np.zeros(6), np.zeros(2), np.zeros(2))
        for tau in range(1, part.min_cell_size + 1):
            assert gradient_noise(zero, part, kind, tau) == 0.0

    def test_toy_gradients_match_enumeration(self):
        # unit gradients on the axes, cancelling in pairs
        part = partition(4, 1)
        G = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
        h = np.ones(4)
        stats = GradNormStats(h, np.array([1.0]), np.array([0.0]))
        law = SamplingLaw("nice", 2, part)
        V, p = enum_matrices(law)
        want = enum_second_moment(V, p, G, 4)
        got = gradient_noise(stats, part, "nice", 2)
        assert got == pytest.approx(want, rel=1e-12)
        assert got == pytest.approx(1.0 / 3.0, rel=1e-12)

    @pytest.mark.parametrize("kind", ["nice", "independent"])
    @pytest.mark.parametrize("k", [1, 2])
    def test_exact_against_enumeration(self, kind, k):
        obj, ds, part, constants = toy_problem(kind="ridge", n=6, k=k, seed=3)
        rng = np.random.default_rng(6)
        for tau in range(1, part.min_cell_size + 1):
            law = SamplingLaw(kind, tau, part)
            V, p = enum_matrices(law)
            for _ in range(5):
                x = rng.standard_normal(ds.d)
                G = per_example_grads(obj, ds, x)
                stats = grad_norm_stats(obj, ds, part, x)
                want = enum_second_moment(V, p, G, ds.n)
                got = gradient_noise(stats, part, kind, tau)
                assert got == pytest.approx(want, rel=1e-10)

    def test_jensen_invariant(self):
        obj, ds, part, _ = toy_problem(seed=8)
        stats = grad_norm_stats(obj, ds, part, np.array([0.5, 0.5, -0.2]))
        assert np.all(stats.cell_grad_sq_norm <= stats.cell_mean_sq_norm + 1e-12)


class TestPiecewiseLinearity:
    @pytest.mark.parametrize("kind", ["nice", "independent"])
    def test_noise_is_affine_and_smoothness_is_max_of_lines(self, kind):
        obj, ds, part, constants = toy_problem(n=12, k=2, seed=5)
        stats = grad_norm_stats(obj, ds, part, np.array([1.0, -2.0, 0.3]))
        taus = np.arange(1, part.min_cell_size + 1)
        t_sigma = np.asarray(
            [t * gradient_noise(stats, part, kind, int(t)) for t in taus]
        )
        if len(taus) >= 3:
            second = np.diff(t_sigma, 2)
            assert np.all(np.abs(second) <= 1e-9 * max(1.0, np.abs(t_sigma).max()))
        slope, intercept = noise_line(stats, part, kind)
        np.testing.assert_allclose(t_sigma, slope * taus + intercept, rtol=1e-10)

        slopes, intercepts = smoothness_lines(constants, part, kind)
        for t in taus:
            want = np.max(slopes * t + intercepts)
            got = t * expected_smoothness(constants, part, kind, int(t))
            assert got == pytest.approx(want, rel=1e-10)


class TestExpectedSmoothnessCertificate:
    @pytest.mark.parametrize("kind_obj", ["ridge", "logistic"])
    @pytest.mark.parametrize("kind_law", ["nice", "independent"])
    def test_upper_bounds_enumerated_second_moment(self, kind_obj, kind_law):
        obj, ds, part, constants = toy_problem(kind=kind_obj, n=6, k=2, lam=0.2, seed=2)
        x_star = solve_reference(obj, ds, tol=1e-12)
        G_star = per_example_grads(obj, ds, x_star)
        f_star = value(obj, ds, x_star)
        rng = np.random.default_rng(4)
        for tau in range(1, part.min_cell_size + 1):
            law = SamplingLaw(kind_law, tau, part)
            V, p = enum_matrices(law)
            L_tau = expected_smoothness(constants, part, kind_law, tau)
            for _ in range(250):
                x = x_star + rng.standard_normal(ds.d)
                lhs = enum_second_moment(V, p, per_example_grads(obj, ds, x) - G_star, ds.n)
                rhs = 2.0 * L_tau * (value(obj, ds, x) - f_star)
                assert lhs <= rhs * (1 + 1e-9) + 1e-12


class TestTotalComplexity:
    def test_plain_arithmetic(self):
        eps = 0.3
        r0 = np.e * eps / 2.0  # makes the log factor exactly 1
        got = total_complexity(1, 3.0, eps * 1.0 / 2.0 * 5.0 / 1.0, mu=1.0, eps=eps, r0=r0)
        assert got == pytest.approx(10.0, rel=1e-12)

    def test_zero_noise_branch_increases_with_tau(self):
        obj, ds, part, constants = toy_problem(n=10, k=1, seed=7)
        mu = constants.require_mu()
        vals = [
            total_complexity(
                t, expected_smoothness(constants, part, "nice", t), 0.0, mu, 0.1, 5.0
            )
            for t in range(1, 11)
        ]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_v_shape_around_optimum(self):
        obj, ds, part, constants = toy_problem(n=40, k=1, lam=0.4, seed=9)
        mu = constants.require_mu()
        x_star = solve_reference(obj, ds, tol=1e-12)
        stats = grad_norm_stats(obj, ds, part, x_star)
        eps = 1e-3
        tau_star = optimal_batch(constants, stats, part, "nice", mu, eps)
        T = [
            total_complexity(
                t,
                expected_smoothness(constants, part, "nice", t),
                gradient_noise(stats, part, "nice", t),
                mu,
                eps,
                5.0,
            )
            for t in range(1, 41)
        ]
        diffs = np.diff(T)
        # decreasing before the optimum, increasing after (up to a one-step
        # neighborhood around tau*)
        assert tau_star > 1
        assert np.all(diffs[: tau_star - 2] < 0)
        assert np.all(diffs[tau_star:] > 0)

    def test_input_validation(self):
        with pytest.raises(ValueError):
            total_complexity(1, 1.0, 1.0, mu=0.0, eps=0.1, r0=1.0)


class TestMinimizeMaxLinear:
    def test_single_crossing(self):
        assert minimize_max_linear([(1.0, 0.0)], (-1.0, 2.0)) == pytest.approx(1.0)

    def test_two_lines(self):
        got = minimize_max_linear([(2.0, 0.0), (1.0, 3.0)], (-1.0, 12.0))
        assert got == pytest.approx(4.0)

    def test_random_instances_match_grid_scan(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            k = rng.integers(1, 5)
            lines = [(rng.uniform(0.1, 3.0), rng.uniform(-5.0, 5.0)) for _ in range(k)]
            r = (-rng.uniform(0.1, 3.0), rng.uniform(0.0, 10.0))
            got = minimize_max_linear(lines, r)
            lo, hi = got - 10.0, got + 10.0
            scan = grid_scan_argmin(lines, r, lo, hi)
            assert abs(got - scan) <= (hi - lo) / 100_000 * 1.01

    def test_degenerate_inputs_rejected(self):
        with pytest.raises(DegenerateLinesError):
            minimize_max_linear([(0.0, 1.0)], (-1.0, 0.0))
        with pytest.raises(DegenerateLinesError):
            minimize_max_linear([(1.0, 1.0)], (0.0, 0.0))
        with pytest.raises(DegenerateLinesError):
            minimize_max_linear([], (-1.0, 0.0))


class TestOptimalBatch:
    def test_growing_noise_forces_tau_one(self):
        # one dominant aligned gradient direction per cell makes tau*sigma increasing
        part = partition(6, 1)
        G = np.tile(np.array([1.0, 1.0]), (6, 1))
        h = np.full(6, 2.0)
        stats = GradNormStats(h, np.array([2.0]), np.array([2.0]))
        obj, ds, _, constants = toy_problem(n=6, k=1, seed=1)
        assert optimal_batch(constants, stats, part, "nice", mu=0.3, eps=0.1) == 1
        assert optimal_batch(constants, stats, part, "independent", mu=0.3, eps=0.1) == 1

    def test_interpolation_returns_one_via_clamping(self):
        obj, ds, part, constants = toy_problem(n=8, k=2, seed=2)
        zero = GradNormStats(np.zeros(8), np.zeros(2), np.zeros(2))
        for kind in ("nice", "independent"):
            assert optimal_batch(constants, zero, part, kind, mu=0.3, eps=0.1) == 1

    @pytest.mark.parametrize("kind", ["nice", "independent"])
    def test_matches_exhaustive_scan(self, kind):
        rng = np.random.default_rng(21)
        for trial in range(100):
            n = int(rng.integers(4, 30))
            k = int(rng.integers(1, min(3, n // 2) + 1))
            ds = generate_synthetic(n, 3, seed=trial, noise=1.0)
            part = partition(n, k, scheme="shuffled", seed=trial)
            if part.min_cell_size < 2:
                continue
            obj = Objective("ridge", lam=float(rng.uniform(0.05, 1.0)))
            constants = smoothness_constants(obj, ds, part)
            stats, _ = random_stats(part, rng, scale=float(rng.uniform(0.1, 3.0)))
            mu = constants.require_mu()
            eps = float(rng.uniform(1e-4, 1e-1))
            got = optimal_batch(constants, stats, part, kind, mu, eps)
            want = exhaustive_tau_argmin(constants, stats, part, kind, mu, eps)
            assert got == want

    def test_rescale_invariance_of_scanned_argmin(self):
        obj, ds, part, constants = toy_problem(n=12, k=2, seed=4)
        rng = np.random.default_rng(3)
        stats, _ = random_stats(part, rng)
        mu = constants.require_mu()
        eps = 0.01
        base = exhaustive_tau_argmin(constants, stats, part, "nice", mu, eps)
        for c in (1e-3, 0.5, 7.0, 1e4):
            scaled_stats = GradNormStats(
                c * stats.sq_norms, c * stats.cell_mean_sq_norm, c * stats.cell_grad_sq_norm
            )
            scaled_constants = type(constants)(
                L=c * constants.L,
                L_i=c * constants.L_i,
                L_cell=c * constants.L_cell,
                L_bar_cell=c * constants.L_bar_cell,
                L_max_cell=c * constants.L_max_cell,
                mu=constants.mu,
            )
            assert (
                exhaustive_tau_argmin(scaled_constants, scaled_stats, part, "nice", mu, eps)
                == base
            )
            assert optimal_batch(scaled_constants, scaled_stats, part, "nice", mu, eps) == base


class TestEstimateRates:
    def test_bundles_both_quantities(self):
        from adabatch.rates import estimate_rates

        obj, ds, part, constants = toy_problem(seed=12)
        stats = grad_norm_stats(obj, ds, part, np.array([0.1, -0.3, 0.8]))
        est = estimate_rates(constants, stats, part, "nice", 2)
        assert est.tau == 2
        assert est.Ltau == expected_smoothness(constants, part, "nice", 2)
        assert est.sigma == gradient_noise(stats, part, "nice", 2)


class TestSigmaLowerBound:
    def test_limit_value(self):
        assert sigma_lower_bound_factor(0.0, 5.0, 2.0) == pytest.approx(1.0)
        assert sigma_lower_bound_factor(0.0, 0.0, 0.7) == pytest.approx(1.0)

    def test_closed_form_value(self):
        mu = 1.3
        # L_exp * L equal to mu^2
        got = sigma_lower_bound_factor(mu, mu, mu)
        assert got == pytest.approx((np.sqrt(2.0) - 1.0) ** 2, rel=1e-12)

    @pytest.mark.parametrize("kind", ["nice", "independent"])
    def test_lower_bounds_noise_everywhere(self, kind):
        obj, ds, part, constants = toy_problem(kind="ridge", n=6, k=2, lam=0.4, seed=6)
        mu = constants.require_mu()
        x_star = solve_reference(obj, ds, tol=1e-12)
        rng = np.random.default_rng(9)
        for tau in range(1, part.min_cell_size + 1):
            L_tau = expected_smoothness(constants, part, kind, tau)
            eta = sigma_lower_bound_factor(L_tau, constants.L, mu)
            stats_star = grad_norm_stats(obj, ds, part, x_star)
            sigma_star = gradient_noise(stats_star, part, kind, tau)
            law = SamplingLaw(kind, tau, part)
            V, p = enum_matrices(law)
            for _ in range(1000):
                x = x_star + rng.standard_normal(ds.d) * rng.uniform(0.01, 3.0)
                sigma_x = enum_second_moment(V, p, per_example_grads(obj, ds, x), ds.n)
                assert eta * sigma_star <= sigma_x * (1 + 1e-9) + 1e-15
