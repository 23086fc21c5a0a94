import cmath
import math

import numpy as np
from django.test import SimpleTestCase

from apps.state_space.utils import CornersPattern, enumerate_pattern_keys

from .utils import (
    DiagonalMove,
    ExpPolynomialWeight,
    GeometricWeight,
    HorizontalMove,
    MeasureContractError,
    MeasureRefused,
    MeasureSpec,
    PatternEnsemble,
    RejectedMove,
    TabulatedWeight,
    acceptance_probability,
    apply_move,
    build_ensemble,
    expectation,
    krawtchouk_weight,
    log_weight,
    log_weights_batch,
    marginal_measure,
    mcmc_sample,
    measure_table,
    move_single_site,
    partition_function,
    shift_ratio,
    single_site_ratio,
    total_variation,
)


def gamma_product_weight(theta, levels, top_weight=lambda x: 1.0):
    """Unnormalized weight from explicit Gamma products, no log-space."""
    g = math.gamma
    ells = [[lam - (p + 1) * theta for p, lam in enumerate(level)] for level in levels]
    top, bottom = ells[0], ells[-1]
    value = 1.0
    for p in range(len(top)):
        value *= top_weight(top[p])
        for q in range(p + 1, len(top)):
            d = top[p] - top[q]
            value *= g(d + 1) / g(d + 1 - theta)
    for p in range(len(bottom)):
        for q in range(p + 1, len(bottom)):
            d = bottom[p] - bottom[q]
            value *= g(d + theta) / g(d)
    for upper, lower in zip(ells, ells[1:]):
        n = len(lower)
        for p in range(n + 1):
            for q in range(p + 1, n + 1):
                value *= g(upper[p] - upper[q] + 1 - theta) / g(upper[p] - upper[q])
        for p in range(n):
            for q in range(p + 1, n):
                value *= g(lower[p] - lower[q] + 1) / g(lower[p] - lower[q] + theta)
            for q in range(p + 1, n + 1):
                value *= g(lower[p] - upper[q]) / g(lower[p] - upper[q] + 1 - theta)
            for q in range(p, n):
                value *= g(upper[p] - lower[q] + theta) / g(upper[p] - lower[q] + 1)
    return value


def log_weight_table(spec):
    ensemble = build_ensemble(spec)
    return dict(zip(ensemble.keys, log_weights_batch(spec, ensemble.ell)))


def mixed_weights(theta, N, k, M):
    weights = {N: GeometricWeight(0.7)}
    for j in range(k, N):
        weights[j] = ExpPolynomialWeight((0.1, -0.2 * j, 0.05))
    return MeasureSpec.from_levels(theta, N, k, M, weights)


class LogWeightTest(SimpleTestCase):
    """Tests for unnormalized log-weights."""

    def test_single_level_uniform(self):
        """Test that N=k=1 with w ≡ 1 gives weight one everywhere."""
        spec = MeasureSpec.uniform(0.8, 1, 1, 3)
        for key in enumerate_pattern_keys(1, 1, 3):
            pattern = CornersPattern(0.8, 1, 1, 3, key)
            self.assertAlmostEqual(log_weight(spec, pattern).log_modulus, 0.0, places=14)

    def test_two_particles_theta_one(self):
        """Test N=k=2, θ=1: weight = (λ₁−λ₂+1)²."""
        spec = MeasureSpec.uniform(1.0, 2, 2, 3)
        for key in enumerate_pattern_keys(2, 2, 3):
            lam = key[0]
            weight = log_weight(spec, CornersPattern(1.0, 2, 2, 3, key)).value
            self.assertAlmostEqual(weight.real, (lam[0] - lam[1] + 1) ** 2, places=10)

    def test_gamma_product_oracle(self):
        """Test the hand case λ²=(1,0), λ¹=(1) at θ=0.5 against explicit Gamma products."""
        spec = MeasureSpec.uniform(0.5, 2, 1, 2)
        levels = ((1, 0), (1,))
        weight = log_weight(spec, CornersPattern(0.5, 2, 1, 2, levels)).value
        self.assertAlmostEqual(weight.real, gamma_product_weight(0.5, levels), places=12)

    def test_oracle_over_state_space(self):
        """Test every N=3, k=1 pattern against the oracle with a geometric top weight."""
        theta = 1.3
        spec = MeasureSpec.from_levels(theta, 3, 1, 2, {3: GeometricWeight(0.6)})
        for key, value in log_weight_table(spec).items():
            expected = gamma_product_weight(theta, key, top_weight=lambda x: 0.6 ** x)
            self.assertLess(abs(cmath.exp(value) - expected), 1e-10 * expected)

    def test_broken_interlacing(self):
        """Test that a non-interlaced pattern is a contract error."""
        spec = MeasureSpec.uniform(0.5, 2, 1, 2)
        with self.assertRaises(MeasureContractError):
            log_weight(spec, CornersPattern(0.5, 2, 1, 2, ((1, 0), (2,))))

    def test_dimension_mismatch(self):
        """Test that the pattern must match the measure dims."""
        spec = MeasureSpec.uniform(0.5, 2, 1, 2)
        with self.assertRaises(MeasureContractError):
            log_weight(spec, CornersPattern(0.5, 2, 2, 2, ((1, 0),)))

    def test_spec_validation(self):
        """Test MeasureSpec validation."""
        with self.assertRaises(MeasureContractError):
            MeasureSpec(0.5, 2, 1, 2, (GeometricWeight(1.0),))
        with self.assertRaises(MeasureContractError):
            MeasureSpec.uniform(-1.0, 2, 1, 2)


class PartitionFunctionTest(SimpleTestCase):
    """Tests for Z by exact summation."""

    def test_counting(self):
        """Test N=k=1, w ≡ 1, M=3 gives Z = 4."""
        self.assertAlmostEqual(partition_function(MeasureSpec.uniform(0.5, 1, 1, 3)), 4.0, places=12)

    def test_geometric_sum(self):
        """Test that one geometric particle gives Σ q^ℓ with ℓ = λ − θ."""
        q, theta, M = 0.4, 0.7, 5
        spec = MeasureSpec(theta, 1, 1, M, (GeometricWeight(q),))
        expected = sum(q ** (lam - theta) for lam in range(M + 1))
        self.assertAlmostEqual(partition_function(spec), expected, places=12)

    def test_two_level_oracle(self):
        """Test N=2, k=1 against a double loop of explicit Gamma products."""
        theta, M = 0.5, 3
        spec = MeasureSpec.uniform(theta, 2, 1, M)
        expected = 0.0
        for a in range(M + 1):
            for b in range(a + 1):
                for c in range(b, a + 1):
                    expected += gamma_product_weight(theta, ((a, b), (c,)))
        self.assertAlmostEqual(partition_function(spec) / expected, 1.0, places=12)

    def test_cancelling_weights_refused(self):
        """Test that complex weights with Z ≈ 0 are refused."""
        spec = MeasureSpec(0.5, 1, 1, 1, (GeometricWeight(-1.0 + 0j),))
        self.assertFalse(spec.is_probability)
        with self.assertRaises(MeasureRefused):
            PatternEnsemble(spec)

    def test_complex_measure(self):
        """Test that a complex measure normalizes to one."""
        spec = MeasureSpec(0.5, 2, 1, 2, (GeometricWeight(1.0), GeometricWeight(cmath.exp(0.3j))))
        ensemble = PatternEnsemble(spec)
        self.assertFalse(ensemble.is_real)
        self.assertLess(abs(ensemble.expect(np.ones(len(ensemble))) - 1.0), 1e-13)
        self.assertGreaterEqual(ensemble.condition, 1.0)


class ExpectationTest(SimpleTestCase):
    """Tests for exact expectations."""

    def setUp(self):
        self.spec = MeasureSpec.from_levels(0.7, 2, 1, 3, {2: GeometricWeight(0.5)})

    def test_normalization(self):
        """Test E[1] = 1."""
        self.assertAlmostEqual(expectation(self.spec, lambda p: 1.0), 1.0, places=13)

    def test_indicator(self):
        """Test that an indicator returns the pattern probability."""
        target = ((2, 1), (1,))
        value = expectation(self.spec, lambda p: 1.0 if p.key == target else 0.0)
        self.assertAlmostEqual(value, build_ensemble(self.spec).probability(target), places=14)
        self.assertGreater(value, 0.0)

    def test_stieltjes_far_away(self):
        """Test E[G(z)] ≈ N/z for z far from the support."""
        z, N = 1000.0, 2
        value = expectation(self.spec, lambda p: sum(1.0 / (z - x) for x in p.ell(2)))
        max_ell = 3.0
        self.assertLess(abs(value - N / z), N * max_ell / (z * (z - max_ell)))

    def test_expect_product(self):
        """Test vectorized product expectations against a direct loop."""
        ensemble = build_ensemble(self.spec)
        z = np.array([5.0 + 1j, -4.0 + 0.5j])
        fast = ensemble.expect_product(z, [(2, -0.7, None), (1, None, 1.0)])
        for n, point in enumerate(z):
            slow = expectation(
                self.spec,
                lambda p: np.prod(point - p.ell(2) - 0.7) / np.prod(point - p.ell(1) + 1.0),
            )
            self.assertLess(abs(fast[n] - slow), 1e-12)


class ShiftRatioTest(SimpleTestCase):
    """Tests for closed-form move ratios against direct quotients."""

    def _scan(self, spec, move_type):
        table = log_weight_table(spec)
        seen = set()
        for key in table:
            pattern = CornersPattern(spec.theta, spec.N, spec.k, spec.M, key)
            for j2 in range(spec.k, spec.N + 1):
                for j1 in range(j2, spec.N + 1):
                    for i in range(1, j2 + 1):
                        move = move_type(i, j1, j2)
                        try:
                            ratio = shift_ratio(spec, pattern, move)
                        except (RejectedMove, MeasureContractError):
                            continue
                        moved = apply_move(pattern, move)
                        direct = cmath.exp(table[moved.key] - table[key])
                        self.assertLess(abs(ratio - direct), 1e-11 * abs(direct), msg=f"{key} {move}")
                        seen.add((j1 == spec.N, j2 == spec.k))
        return seen

    def test_horizontal_exhaustive(self):
        """Test all horizontal moves for N ≤ 3, M ≤ 4."""
        for theta in (0.5, 1.0, 1.3):
            seen = self._scan(mixed_weights(theta, 3, 1, 3), HorizontalMove)
            self.assertEqual(len(seen), 4)
            self._scan(mixed_weights(theta, 3, 2, 4), HorizontalMove)

    def test_diagonal_exhaustive(self):
        """Test all staircase moves for N ≤ 3, M ≤ 4."""
        for theta in (0.5, 1.0, 1.3):
            seen = self._scan(mixed_weights(theta, 3, 1, 3), DiagonalMove)
            self.assertEqual(len(seen), 4)
            self._scan(mixed_weights(theta, 2, 1, 4), DiagonalMove)

    def test_single_level(self):
        """Test that N = k horizontal moves match the direct quotient."""
        spec = MeasureSpec(0.7, 2, 2, 4, (GeometricWeight(0.8),))
        self.assertEqual(self._scan(spec, HorizontalMove), {(True, True)})

    def test_inverse_move(self):
        """Test ratio(p, m)·ratio(p̃, m⁻¹) = 1."""
        spec = mixed_weights(0.7, 3, 1, 3)
        pattern = CornersPattern(0.7, 3, 1, 3, ((3, 1, 0), (2, 1), (2,)))
        move = HorizontalMove(1, 2, 1)
        moved = apply_move(pattern, move)
        product = shift_ratio(spec, pattern, move) * shift_ratio(spec, moved, move.inverse())
        self.assertLess(abs(product - 1.0), 1e-12)

    def test_precondition(self):
        """Test that unequal parts are a contract error and bad results are rejected."""
        spec = MeasureSpec.uniform(0.7, 2, 1, 3)
        pattern = CornersPattern(0.7, 2, 1, 3, ((3, 0), (2,)))
        with self.assertRaises(MeasureContractError):
            shift_ratio(spec, pattern, HorizontalMove(1, 2, 1))
        with self.assertRaises(RejectedMove):
            shift_ratio(spec, CornersPattern(0.7, 2, 1, 3, ((2, 2), (2,))), HorizontalMove(1, 1, 1))


class SingleSiteRatioTest(SimpleTestCase):
    """Tests for one-coordinate move ratios."""

    def test_random_sites(self):
        """Test 100 random (pattern, site, direction) triples against the direct quotient."""
        spec = mixed_weights(0.7, 3, 1, 4)
        table = log_weight_table(spec)
        keys = list(table)
        rng = np.random.default_rng(5)
        checked = 0
        while checked < 100:
            key = keys[rng.integers(len(keys))]
            j = int(rng.integers(1, 4))
            i = int(rng.integers(1, j + 1))
            direction = int(rng.choice([-1, 1]))
            pattern = CornersPattern(0.7, 3, 1, 4, key)
            try:
                ratio = single_site_ratio(spec, pattern, j, i, direction)
            except RejectedMove:
                continue
            moved = move_single_site(pattern, j, i, direction)
            direct = cmath.exp(table[moved.key] - table[key])
            self.assertLess(abs(ratio - direct), 1e-11 * abs(direct))
            checked += 1

    def test_exhaustive_theta_one(self):
        """Test every legal single-site move at θ = 1."""
        spec = mixed_weights(1.0, 3, 1, 3)
        table = log_weight_table(spec)
        for key in table:
            pattern = CornersPattern(1.0, 3, 1, 3, key)
            for j in range(1, 4):
                for i in range(1, j + 1):
                    for direction in (-1, 1):
                        try:
                            ratio = single_site_ratio(spec, pattern, j, i, direction)
                        except RejectedMove:
                            continue
                        moved = move_single_site(pattern, j, i, direction)
                        direct = cmath.exp(table[moved.key] - table[key])
                        self.assertLess(abs(ratio - direct), 1e-11 * abs(direct))

    def test_single_particle(self):
        """Test N=k=1: ratio = w(s−1)/w(s)."""
        spec = MeasureSpec(0.5, 1, 1, 3, (GeometricWeight(0.3),))
        ratio = single_site_ratio(spec, CornersPattern(0.5, 1, 1, 3, ((2,),)), 1, 1, -1)
        self.assertAlmostEqual(ratio.real, 1.0 / 0.3, places=12)

    def test_rejected(self):
        """Test that leaving the state space is signalled."""
        spec = MeasureSpec.uniform(0.5, 2, 1, 3)
        pattern = CornersPattern(0.5, 2, 1, 3, ((2, 1), (1,)))
        with self.assertRaises(RejectedMove):
            single_site_ratio(spec, pattern, 1, 1, -1)
        with self.assertRaises(RejectedMove):
            single_site_ratio(spec, pattern, 2, 2, 1)


class MCMCTest(SimpleTestCase):
    """Tests for the single-site Metropolis sampler."""

    def _batch_sigma(self, indicator, batches=50):
        means = np.asarray(indicator, dtype=float).reshape(batches, -1).mean(axis=1)
        return means.std(ddof=1) / math.sqrt(batches)

    def test_uniform_single_particle(self):
        """Test that N=k=1, w ≡ 1 samples {0..M} uniformly."""
        M = 3
        spec = MeasureSpec.uniform(0.5, 1, 1, M)
        states = [p.lam(1)[0] for p in mcmc_sample(spec, 100000, burn_in=100, seed=3)][::20]
        states = np.asarray(states)
        n = states.size
        for value in range(M + 1):
            freq = np.mean(states == value)
            sigma = math.sqrt(0.25 * 0.75 / n)
            self.assertLess(abs(freq - 0.25), 4 * sigma)

    def test_frequencies_match_enumeration(self):
        """Test N=2, k=1, M=4 frequencies against exact probabilities."""
        spec = MeasureSpec.from_levels(0.7, 2, 1, 4, {2: GeometricWeight(0.8)})
        exact = measure_table(spec)
        keys = [p.key for p in mcmc_sample(spec, 100000, burn_in=1000, seed=11)]
        for key, prob in exact.items():
            indicator = [k == key for k in keys]
            sigma = self._batch_sigma(indicator)
            self.assertLess(abs(np.mean(indicator) - prob), 4 * sigma + 2e-3)

    def test_determinism(self):
        """Test that one seed gives one trajectory."""
        spec = MeasureSpec.uniform(1.3, 3, 1, 3)
        first = [p.key for p in mcmc_sample(spec, 500, seed=42)]
        again = [p.key for p in mcmc_sample(spec, 500, seed=42)]
        self.assertEqual(first, again)

    def test_detailed_balance(self):
        """Test P(p)·a(p→p̃) = P(p̃)·a(p̃→p) on every edge."""
        spec = mixed_weights(0.7, 2, 1, 3)
        table = measure_table(spec)
        for key, prob in table.items():
            pattern = CornersPattern(0.7, 2, 1, 3, key)
            for j in (1, 2):
                for i in range(1, j + 1):
                    for direction in (-1, 1):
                        try:
                            moved = move_single_site(pattern, j, i, direction)
                        except RejectedMove:
                            continue
                        forward = prob * acceptance_probability(spec, pattern, j, i, direction)
                        backward = table[moved.key] * acceptance_probability(spec, moved, j, i, -direction)
                        self.assertLess(abs(forward - backward), 1e-12)

    def test_complex_measure_refused(self):
        """Test that MCMC needs a probability measure."""
        spec = MeasureSpec(0.5, 1, 1, 2, (GeometricWeight(1j),))
        with self.assertRaises(MeasureContractError):
            next(mcmc_sample(spec, 10, seed=0))


class MarginalTest(SimpleTestCase):
    """Tests for projections of the k = 1 measure."""

    def test_identity(self):
        """Test that m = 1 returns the full measure."""
        spec = MeasureSpec.uniform(0.7, 2, 1, 3)
        self.assertLess(total_variation(marginal_measure(spec, 1), measure_table(spec)), 1e-15)

    def test_top_level(self):
        """Test m = N against the direct k = N measure."""
        top = GeometricWeight(0.9)
        full = MeasureSpec.from_levels(0.7, 2, 1, 3, {2: top})
        direct = MeasureSpec.from_levels(0.7, 2, 2, 3, {2: top})
        marginal = marginal_measure(full, 2)
        self.assertLess(total_variation(marginal, measure_table(direct)), 1e-12)
        self.assertAlmostEqual(sum(marginal.values()), 1.0, places=13)

    def test_projection_consistency(self):
        """Test every projection for N ≤ 3, M ≤ 4 and θ ∈ {0.5, 1, 1.3}."""
        for theta in (0.5, 1.0, 1.3):
            for N, M in ((2, 4), (3, 3), (3, 4)):
                top = krawtchouk_weight(0.6, N, M, theta)
                full = MeasureSpec.from_levels(theta, N, 1, M, {N: top})
                for m in range(1, N + 1):
                    direct = measure_table(MeasureSpec.from_levels(theta, N, m, M, {N: top}))
                    marginal = marginal_measure(full, m)
                    for key, prob in direct.items():
                        self.assertLess(abs(marginal[key] - prob), 1e-12)

    def test_requires_k_one(self):
        """Test the k = 1 precondition."""
        with self.assertRaises(MeasureContractError):
            marginal_measure(MeasureSpec.uniform(0.7, 2, 2, 3), 2)


class WeightTest(SimpleTestCase):
    """Tests for weight constructors."""

    def test_krawtchouk_ratio(self):
        """Test the rational backward ratio of the Krawtchouk-type weight."""
        theta, N, M, q = 0.7, 3, 5, 0.4
        weight = krawtchouk_weight(q, N, M, theta)
        x = 1.3
        direct = cmath.exp(weight.log_value([x - 1.0])[0] - weight.log_value([x])[0])
        self.assertAlmostEqual(weight.backward_ratio(x), direct, places=12)
        self.assertAlmostEqual(weight.backward_ratio(x), (x + N * theta) / (q * (M + 1 - theta - x)), places=12)

    def test_exp_polynomial_ratio(self):
        """Test exp-polynomial continuation at a complex point."""
        weight = ExpPolynomialWeight((0.0, 0.5, -0.1))
        z = 0.3 + 0.4j
        expected = cmath.exp((0.5 * (z - 1) - 0.1 * (z - 1) ** 2) - (0.5 * z - 0.1 * z ** 2))
        self.assertAlmostEqual(complex(weight.backward_ratio(z)), expected, places=12)

    def test_tabulated_is_not_analytic(self):
        """Test that tabulated weights refuse continuation."""
        weight = TabulatedWeight(((-0.5, 1.0), (0.5, 2.0)))
        self.assertFalse(weight.analytic)
        np.testing.assert_allclose(weight([-0.5, 0.5]).real, [1.0, 2.0])
        with self.assertRaises(MeasureContractError):
            weight.backward_ratio(0.5)
