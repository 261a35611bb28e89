import json
import math

import numpy as np
import pytest

from sphkern.cubature import (
    CubatureRule,
    Generator,
    WeightMode,
    discrepancy_between,
    equal_weight_rule,
    generate_points,
    gram_cross,
    gram_matrix,
    kernel_mean_uniform,
    optimal_weights,
    rate_study,
    read_rule_csv,
    worst_case_error,
    write_rule_csv,
)
from sphkern.errors import DimensionMismatchError
from sphkern.kernels import IsotropicKernel, SpherePoint, eval_kernel
from sphkern.schoenberg import schoenberg_coeffs

MATERN = IsotropicKernel.matern(1.5, 0.7)
FFAM = IsotropicKernel.ffamily(2.0, 1.5, 1.0)
WEND = IsotropicKernel.wendland(4.0, 1.0, 0.75)
CONST = IsotropicKernel.custom([1.0])
COS = IsotropicKernel.custom([0.0, 1.0])
FAMILIES = [MATERN, FFAM, WEND]


def rule(points, weights):
    return CubatureRule(np.asarray(points, dtype=float), weights)


class TestPoints:
    def test_random_reproducible(self):
        a = generate_points("UniformRandom", 10, 2, seed=42)
        b = generate_points("UniformRandom", 10, 2, seed=42)
        assert a.shape == (10, 3)
        assert np.array_equal(a, b)
        np.testing.assert_allclose(np.linalg.norm(a, axis=1), 1.0, rtol=1e-15)

    def test_fibonacci_single_point(self):
        np.testing.assert_array_equal(generate_points(Generator.FIBONACCI, 1, 2), [[0.0, 0.0, 1.0]])

    def test_fibonacci_unit_and_balanced(self):
        p = generate_points(Generator.FIBONACCI, 500, 2)
        np.testing.assert_allclose(np.linalg.norm(p, axis=1), 1.0, rtol=1e-15)
        assert abs(p[:, 2].mean()) < 1e-15
        with pytest.raises(ValueError):
            generate_points(Generator.FIBONACCI, 10, 3)

    def test_uniform_mean(self):
        p = generate_points("UniformRandom", 100_000, 2, seed=7)
        assert np.all(np.abs(p.mean(axis=0)) < 3 / math.sqrt(100_000))

    def test_bad_sizes(self):
        with pytest.raises(ValueError):
            generate_points("UniformRandom", 0, 2)
        with pytest.raises(ValueError):
            generate_points("UserSupplied", 3, 2)


class TestRule:
    def test_renormalised_and_frozen(self):
        r = rule([[2.0, 0.0, 0.0], [0.0, 0.0, 3.0]], [0.5, 0.5])
        np.testing.assert_allclose(r.points, [[1, 0, 0], [0, 0, 1]])
        assert r.dim == 2 and r.n == 2
        with pytest.raises(ValueError):
            r.points[0, 0] = 5.0

    def test_mismatch(self):
        with pytest.raises(ValueError):
            rule([[1.0, 0.0]], [0.5, 0.5])

    def test_from_sphere_points(self):
        r = CubatureRule([SpherePoint((1, 0, 0)), SpherePoint((0, 1, 0))], [0.5, 0.5])
        assert r.points.shape == (2, 3)
        assert r.sphere_points()[1] == SpherePoint((0, 1, 0))
        with pytest.raises(DimensionMismatchError):
            CubatureRule([SpherePoint((1, 0, 0)), SpherePoint((0, 1))], [0.5, 0.5])

    def test_csv_round_trip(self, tmp_path):
        r = equal_weight_rule("UniformRandom", 7, 3, seed=1)
        p = tmp_path / "rule.csv"
        write_rule_csv(r, p)
        assert p.read_text().splitlines()[0] == "x0,x1,x2,x3,weight"
        back = read_rule_csv(p)
        assert np.array_equal(back.points, r.points) and np.array_equal(back.weights, r.weights)


class TestGram:
    def test_single(self):
        assert gram_matrix(MATERN, np.array([[0.0, 0.0, 1.0]])).tolist() == [[1.0]]

    def test_antipodal(self):
        G = gram_matrix(MATERN, np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]]))
        psi_pi = eval_kernel(MATERN, math.pi)
        np.testing.assert_allclose(G, [[1.0, psi_pi], [psi_pi, 1.0]], rtol=1e-14)

    @pytest.mark.parametrize("k", FAMILIES)
    def test_positive_definite(self, k):
        G = gram_matrix(k, generate_points("UniformRandom", 25, 2, seed=3))
        ev = np.linalg.eigvalsh(G)
        assert ev.min() > -1e-8 * ev.max()
        assert np.array_equal(G, G.T)

    def test_matches_pointwise(self):
        a = generate_points("UniformRandom", 6, 2, seed=4)
        b = generate_points("UniformRandom", 4, 2, seed=5)
        G = gram_cross(FFAM, a, b)
        t = np.arccos(np.clip(a @ b.T, -1, 1))
        np.testing.assert_allclose(G, eval_kernel(FFAM, t), rtol=1e-12)


class TestKernelMean:
    def test_constant_and_cosine(self):
        assert kernel_mean_uniform(CONST, 2) == pytest.approx(1.0, abs=1e-15)
        assert kernel_mean_uniform(COS, 3) == pytest.approx(0.0, abs=1e-15)

    def test_monte_carlo(self):
        y = generate_points("UniformRandom", 1_000_000, 2, seed=11)
        vals = eval_kernel(MATERN, np.arccos(np.clip(y[:, 2], -1, 1)))
        se = vals.std() / math.sqrt(vals.size)
        assert abs(kernel_mean_uniform(MATERN, 2) - vals.mean()) < 4 * se

    @pytest.mark.parametrize("k", [FFAM, IsotropicKernel.custom([0.2, 0.3, 0.5])])
    def test_route_consistency(self, k):
        vals = [kernel_mean_uniform(k, 2, truncation=8, route=r) for r in ("closed", "projection", "quadrature")]
        assert max(vals) - min(vals) < 1e-10

    def test_matches_b0(self):
        assert kernel_mean_uniform(WEND, 3) == schoenberg_coeffs(WEND, 3, 0).coeffs[0]


class TestWorstCaseError:
    def test_collapsed_points(self):
        x = [0.0, 0.6, 0.8]
        r = rule([x, x, x], [0.2, 0.3, 0.5])
        b0 = kernel_mean_uniform(MATERN, 2)
        assert worst_case_error(MATERN, r).wce_sq == pytest.approx(1 - b0, rel=1e-12)

    def test_cosine_antipodal(self):
        r = rule([[0, 0, 1], [0, 0, -1]], [0.5, 0.5])
        assert worst_case_error(COS, r).wce_sq == pytest.approx(0.0, abs=1e-16)

    def test_report_fields(self):
        rep = worst_case_error(MATERN, equal_weight_rule("Fibonacci", 50, 2))
        d = rep.to_dict()
        assert d["n_points"] == 50 and d["kernel"]["family"] == "Matern"
        assert rep.gram_condition > 1

    @pytest.mark.parametrize("k", FAMILIES)
    def test_nonnegative(self, k):
        for seed in range(5):
            r = equal_weight_rule("UniformRandom", 30, 2, seed=seed)
            assert worst_case_error(k, r).wce_sq >= -1e-10

    def test_truncation_robust(self):
        r = equal_weight_rule("Fibonacci", 60, 2)
        s = schoenberg_coeffs(MATERN, 2, 20)
        a = worst_case_error(MATERN, r, truncation=20).wce
        b = worst_case_error(MATERN, r, truncation=40).wce
        assert abs(a - b) <= s.tail_bound


class TestOptimalWeights:
    def test_single_point(self):
        r = optimal_weights(MATERN, np.array([[1.0, 0.0, 0.0]]))
        b0 = kernel_mean_uniform(MATERN, 2)
        assert r.weights[0] == pytest.approx(b0, rel=1e-10)
        assert worst_case_error(MATERN, r).wce_sq == pytest.approx(b0 * (1 - b0), rel=1e-10)

    def test_symmetric_pair(self):
        r = optimal_weights(MATERN, np.array([[0, 0, 1.0], [0, 0, -1.0]]))
        assert r.weights[0] == pytest.approx(r.weights[1], rel=1e-14)
        assert r.weight_mode is WeightMode.OPTIMAL

    def test_beats_equal_weights(self):
        eq = equal_weight_rule("Fibonacci", 200, 2)
        opt = optimal_weights(MATERN, eq)
        assert worst_case_error(MATERN, opt).wce < worst_case_error(MATERN, eq).wce
        assert opt.generator is Generator.FIBONACCI

    def test_frozen_value(self):
        opt = optimal_weights(MATERN, generate_points("Fibonacci", 100, 2))
        assert worst_case_error(MATERN, opt).wce == pytest.approx(0.0036602091721771443, rel=1e-8)

    def test_perturbations_never_better(self):
        rng = np.random.default_rng(9)
        pts = generate_points("UniformRandom", 40, 2, seed=9)
        opt = optimal_weights(MATERN, pts)
        best = worst_case_error(MATERN, opt).wce
        for _ in range(20):
            w = opt.weights * (1 + 0.05 * rng.normal(size=40))
            assert worst_case_error(MATERN, opt.with_weights(w, WeightMode.EQUAL)).wce >= best - 1e-12

    def test_duplicate_points_need_jitter(self):
        pts = np.vstack([generate_points("UniformRandom", 5, 2, seed=1)] * 2)
        r = optimal_weights(MATERN, pts)
        assert r.jitter > 0 and np.all(np.isfinite(r.weights))


class TestDiscrepancy:
    def test_identical(self):
        a = equal_weight_rule("UniformRandom", 20, 2, seed=1)
        assert discrepancy_between(MATERN, a, a) == pytest.approx(0.0, abs=1e-8)

    def test_symmetric_and_triangle(self):
        a, b, c = (equal_weight_rule("UniformRandom", n, 2, seed=s) for n, s in ((15, 1), (25, 2), (35, 3)))
        ab, ba = discrepancy_between(WEND, a, b), discrepancy_between(WEND, b, a)
        assert ab == pytest.approx(ba, abs=1e-12)
        assert ab <= discrepancy_between(WEND, a, c) + discrepancy_between(WEND, c, b) + 1e-12

    def test_dimension_check(self):
        with pytest.raises(DimensionMismatchError):
            discrepancy_between(MATERN, equal_weight_rule("UniformRandom", 3, 2, 0), equal_weight_rule("UniformRandom", 3, 3, 0))


class TestRateStudy:
    def test_matern_slope(self, tmp_path):
        st = rate_study(MATERN, 2, [100, 200, 400, 800], "Fibonacci")
        assert -1.25 * 1.15 <= st.slope <= -1.25 * 0.85
        out = tmp_path / "rate.csv"
        st.write(out)
        assert out.read_text().splitlines()[0] == "n,wce"
        meta = json.loads(out.with_name("rate.csv.json").read_text())
        assert meta["slope"] == st.slope and meta["n_grid"] == [100, 200, 400, 800]

    def test_random_points_decrease(self):
        grid = [50, 100, 200, 400, 800]
        reps = [rate_study(MATERN, 2, grid, "UniformRandom", seed=s).wce for s in range(3)]
        med = np.median(np.array(reps), axis=0)
        assert np.all(np.diff(med) < 0)

    def test_needs_two_sizes(self):
        with pytest.raises(ValueError):
            rate_study(MATERN, 2, [100])
