import random

import numpy as np
from django.test import SimpleTestCase

from apps.discrete.utils import build_ensemble
from apps.nekrasov.utils import NekrasovContractError, geometric_setup
from apps.numerics.utils import ContourSpec, make_generator
from apps.state_space.utils import CornersPattern

from .utils import (
    CumulantError,
    CumulantKey,
    DeformationRefused,
    ObservableSet,
    cumulant_from_moments,
    cumulant_table,
    default_contour,
    default_observations,
    deformation_derivative,
    deformation_factors,
    deformed_expectation,
    exact_cumulant,
    joint_moment,
    krawtchouk_loop_setup,
    moment_from_cumulants,
    moment_table,
    set_partitions,
    stieltjes,
    stieltjes_values,
    verify_discrete_loop_equation,
    verify_product_formula,
)


def random_variables(count, size, seed=11):
    rng = make_generator(seed)
    return [rng.uniform(-1.0, 1.0, size) + 1j * rng.uniform(-1.0, 1.0, size) for _ in range(count)]


class CumulantAlgebraTest(SimpleTestCase):
    """Tests for the moment/cumulant partition sums."""

    def setUp(self):
        spec, _, _ = krawtchouk_loop_setup(0.5, 0.7, 2, 1, 3)
        self.ensemble = build_ensemble(spec)
        self.size = len(self.ensemble)

    def test_bell_numbers(self):
        """Test the number of set partitions for n = 0..6."""
        self.assertEqual([len(set_partitions(n)) for n in range(7)], [1, 1, 2, 5, 15, 52, 203])

    def test_partitions_cover_the_set(self):
        """Test that every partition is a disjoint cover."""
        for partition in set_partitions(4):
            self.assertEqual(sorted(i for block in partition for i in block), [0, 1, 2, 3])

    def test_single_variable_is_mean(self):
        """Test M(X) = E[X]."""
        (x,) = random_variables(1, self.size)
        self.assertAlmostEqual(cumulant_from_moments([x], self.ensemble), self.ensemble.expect(x), places=14)

    def test_two_variables_is_covariance(self):
        """Test M(X, Y) = E[XY] − E[X]E[Y]."""
        x, y = random_variables(2, self.size)
        e = self.ensemble.expect
        self.assertAlmostEqual(cumulant_from_moments([x, y], self.ensemble), e(x * y) - e(x) * e(y), places=13)

    def test_permutation_invariance(self):
        """Test that shuffling the arguments leaves the cumulant unchanged."""
        variables = random_variables(4, self.size)
        reference = cumulant_from_moments(variables, self.ensemble)
        shuffler = random.Random(3)
        for _ in range(5):
            shuffled = list(variables)
            shuffler.shuffle(shuffled)
            self.assertLess(abs(cumulant_from_moments(shuffled, self.ensemble) - reference), 1e-12)

    def test_moments_round_trip(self):
        """Test that moments rebuilt from cumulants match the direct moment."""
        variables = random_variables(4, self.size)
        direct = joint_moment(variables, self.ensemble)
        self.assertLess(abs(moment_from_cumulants(variables, self.ensemble) - direct), 1e-12)

    def test_tables_round_trip(self):
        """Test both compositions of the two table transforms."""
        variables = random_variables(4, self.size, seed=5)
        moments = {}
        for partition in set_partitions(4):
            for block in partition:
                moments[frozenset(block)] = complex(joint_moment(variables, self.ensemble, block))
        back = moment_table(cumulant_table(moments, 4), 4)
        for subset, value in moments.items():
            self.assertLess(abs(back[subset] - value), 1e-12)

        cumulants = cumulant_table(moments, 4)
        again = cumulant_table(moment_table(cumulants, 4), 4)
        for subset, value in cumulants.items():
            self.assertLess(abs(again[subset] - value), 1e-12)

    def test_too_many_variables(self):
        """Test the six-variable cap."""
        with self.assertRaises(CumulantError):
            cumulant_from_moments(random_variables(7, self.size), self.ensemble)

    def test_shape_mismatch(self):
        """Test a variable that does not run over the patterns."""
        with self.assertRaises(CumulantError):
            cumulant_from_moments([np.ones(self.size + 1)], self.ensemble)

    def test_constants(self):
        """Test that constants drop out of higher cumulants and shift the mean."""
        x, y = random_variables(2, self.size)
        self.assertLess(
            abs(cumulant_from_moments([x + 3.0, y], self.ensemble) - cumulant_from_moments([x, y], self.ensemble)),
            1e-13,
        )
        self.assertAlmostEqual(
            cumulant_from_moments([x + 3.0], self.ensemble), cumulant_from_moments([x], self.ensemble) + 3.0, places=13
        )

    def test_product_formula(self):
        """Test the product rule with zero and two extra variables."""
        x, y, a, b = random_variables(4, self.size)
        self.assertLess(verify_product_formula(x, y, [], self.ensemble), 1e-12)
        self.assertLess(verify_product_formula(x, y, [a, b], self.ensemble), 1e-12)

    def test_broadcast_variable(self):
        """Test a variable with a leading node axis."""
        x, y = random_variables(2, self.size)
        stacked = np.stack([x, 2.0 * x])
        values = cumulant_from_moments([stacked, y], self.ensemble)
        self.assertEqual(values.shape, (2,))
        self.assertLess(abs(values[1] - 2.0 * values[0]), 1e-13)


class ObservableTest(SimpleTestCase):
    """Tests for Stieltjes transforms and the deformed measure."""

    def setUp(self):
        self.spec, _, _ = krawtchouk_loop_setup(0.5, 0.7, 2, 1, 3)
        self.ensemble = build_ensemble(self.spec)

    def test_single_particle(self):
        """Test G(2) = 1/2 for one particle at the origin."""
        pattern = CornersPattern.from_key(1.0, 1, 1, 2, ((1,),))
        self.assertAlmostEqual(stieltjes(pattern, 1, 1.0, 2.0), 0.5, places=15)

    def test_large_z(self):
        """Test z·G(z) → n."""
        pattern = CornersPattern.from_key(0.7, 2, 1, 3, ((3, 1), (2,)))
        z = 1e9
        self.assertAlmostEqual((z * stieltjes(pattern, 2, 2.0, z)).real, 2.0, places=6)

    def test_vectorized_matches_direct_sum(self):
        """Test the per-pattern array against the pattern-by-pattern sum."""
        z = 5.0 + 0.5j
        values = stieltjes_values(self.ensemble, 2, 1.5, z)
        for pattern, value in zip(self.ensemble.patterns(), values):
            direct = sum(1.0 / (z - ell / 1.5) for ell in pattern.ell(2))
            self.assertAlmostEqual(value, direct, places=13)

    def test_zero_deformation(self):
        """Test that t = 0 gives the undeformed expectation."""
        obs = ObservableSet.from_mapping(1.0, {2: (6.0,)})
        xi = self.ensemble.lam[2][:, 0].astype(float)
        self.assertAlmostEqual(deformed_expectation(self.spec, obs, {}, xi), self.ensemble.expect(xi), places=13)

    def test_normalization(self):
        """Test E_{t,v}[1] = 1."""
        obs = ObservableSet.from_mapping(1.0, {1: (6.0,)})
        value = deformed_expectation(self.spec, obs, {(1, 1): 0.3}, np.ones(len(self.ensemble)))
        self.assertAlmostEqual(value, 1.0, places=13)

    def test_derivative_is_cumulant(self):
        """Test finite differences of the deformed expectation against exact cumulants."""
        xi = np.sum(self.ensemble.ell[2] ** 2, axis=1)
        for points in ({2: (6.0,)}, {1: (5.5,), 2: (7.0,)}):
            obs = ObservableSet.from_mapping(1.0, points)
            derivative = deformation_derivative(self.spec, obs, xi)
            self.assertLess(abs(derivative - exact_cumulant(self.spec, obs, xi)), 1e-6)

    def test_refusal(self):
        """Test the |Z| threshold."""
        obs = ObservableSet.from_mapping(1.0, {2: (6.0,)})
        with self.assertRaises(DeformationRefused):
            deformed_expectation(self.spec, obs, {(2, 1): 0.1}, np.ones(len(self.ensemble)), refusal_threshold=1.5)

    def test_vanishing_factor(self):
        """Test a strength that zeroes the factor of the lowest pattern."""
        obs = ObservableSet.from_mapping(1.0, {2: (6.0,)})
        with self.assertRaises(CumulantError):
            deformed_expectation(self.spec, obs, {(2, 1): -(6.0 + 0.7)}, np.ones(len(self.ensemble)))

    def test_vanishing_factor_up_to_rounding(self):
        """Test that a factor left at rounding size counts as vanishing while a moderate strength is accepted."""
        obs = ObservableSet.from_mapping(1.0, {2: (6.0,)})
        factors = deformation_factors(self.ensemble, obs, {(2, 1): -(6.0 + 0.7)})
        self.assertLess(np.min(np.abs(factors)), 1e-12)
        with self.assertRaises(CumulantError):
            deformed_expectation(self.spec, obs, {(2, 1): -(6.0 + 0.7)}, np.ones(len(self.ensemble)))
        value = deformed_expectation(self.spec, obs, {(2, 1): -1.0}, np.ones(len(self.ensemble)))
        self.assertAlmostEqual(value, 1.0, places=10)

    def test_observable_set_contract(self):
        """Test the scale, the levels and points on the particle range."""
        with self.assertRaises(CumulantError):
            ObservableSet(0.0)
        with self.assertRaises(CumulantError):
            ObservableSet.from_mapping(1.0, {3: (6.0,)}).validate(self.spec)
        with self.assertRaises(CumulantError):
            ObservableSet.from_mapping(1.0, {2: (1.0,)}).validate(self.spec)

    def test_cumulant_key(self):
        """Test chosen points, fullness and complements."""
        obs = ObservableSet.from_mapping(1.0, {1: (6.0, 7.0), 2: (8.0,)})
        key = CumulantKey(1, ((2,), (1,)))
        self.assertEqual(list(key.chosen()), [(1, 2), (2, 1)])
        self.assertFalse(key.is_full(1, obs))
        self.assertTrue(key.is_full(2, obs))
        self.assertEqual(key.complement(1, obs), (1,))
        self.assertEqual(key.label, "{2},{1}")


class LoopEquationTest(SimpleTestCase):
    """Tests for the exact check of the discrete loop equations."""

    def setUp(self):
        self.spec, self.plus, self.minus = krawtchouk_loop_setup(0.5, 0.7, 2, 1, 4)

    def check(self, spec, counts, L=1.0, **kwargs):
        _, plus, minus = krawtchouk_loop_setup(0.5, spec.theta, spec.N, spec.k, spec.M)
        obs, v = default_observations(spec, L, counts)
        return verify_discrete_loop_equation(spec, plus, minus, obs, v, **kwargs)

    def test_no_observation_points(self):
        """Test that the three expectation integrals cancel."""
        report = self.check(self.spec, {})
        self.assertEqual([t.group for t in report.terms], ["top", "bottom", "middle"])
        self.assertTrue(report.passed, report.as_dict())
        self.assertLess(report.residual, 1e-8 * max(1.0, report.max_term))

    def test_one_observation_point(self):
        """Test Σm = 1 on the top level."""
        report = self.check(self.spec, {2: 1}, threads=2)
        self.assertEqual(len(report.terms), 5)
        self.assertTrue(report.passed, report.as_dict())

    def test_two_observation_points(self):
        """Test Σm = 2 spread over both levels."""
        report = self.check(self.spec, {1: 1, 2: 1}, threads=2)
        self.assertTrue(report.passed, report.as_dict())

    def test_rescaled(self):
        """Test L = 2 with one observation point on the bottom level."""
        report = self.check(self.spec, {1: 1}, L=2.0)
        self.assertTrue(report.passed, report.as_dict())

    def test_theta_one(self):
        """Test the θ = 1 form."""
        spec, _, _ = krawtchouk_loop_setup(0.5, 1.0, 2, 1, 4)
        report = self.check(spec, {2: 1})
        self.assertEqual(report.branch, "one")
        self.assertTrue(report.passed, report.as_dict())

    def test_three_levels(self):
        """Test N = 3, k = 1 with two middle levels."""
        spec, _, _ = krawtchouk_loop_setup(0.5, 1.3, 3, 1, 2)
        report = self.check(spec, {3: 1})
        self.assertTrue(report.passed, report.as_dict())

    def test_quadrature_refinement(self):
        """Test that the adaptive rule improves on a coarse trapezoid sum."""
        coarse = self.check(self.spec, {2: 1}, fixed_nodes=16)
        fine = self.check(self.spec, {2: 1})
        self.assertLessEqual(fine.residual, max(coarse.residual / 10.0, 1e-12 * max(1.0, fine.max_term)))

    def test_report_terms(self):
        """Test the per-term breakdown."""
        report = self.check(self.spec, {2: 1}).as_dict()
        self.assertEqual(len(report["terms"]), 5)
        self.assertTrue(all(term["modulus"] >= 0 for term in report["terms"]))

    def test_wrong_phi(self):
        """Test that Φ± must match the top weight."""
        obs, v = default_observations(self.spec, 1.0, {})
        with self.assertRaises(CumulantError):
            verify_discrete_loop_equation(self.spec, self.plus.scaled(1.01), self.minus, obs, v)

    def test_lower_weights_must_be_trivial(self):
        """Test a measure with a geometric weight below the top."""
        spec, _ = geometric_setup((0.6, 0.9), 0.7, 2, 1, 4)
        obs, v = default_observations(spec, 1.0, {})
        with self.assertRaises(CumulantError):
            verify_discrete_loop_equation(spec, self.plus, self.minus, obs, v)

    def test_too_many_points(self):
        """Test the cap on Σm."""
        obs, v = default_observations(self.spec, 1.0, {1: 2, 2: 2})
        with self.assertRaises(CumulantError):
            verify_discrete_loop_equation(self.spec, self.plus, self.minus, obs, v)

    def test_v_inside_contour(self):
        """Test that v must lie outside the contour."""
        obs, _ = default_observations(self.spec, 1.0, {})
        with self.assertRaises(CumulantError):
            verify_discrete_loop_equation(self.spec, self.plus, self.minus, obs, 1.0 + 0.1j)

    def test_small_contour(self):
        """Test a contour that misses part of the particle range."""
        obs, v = default_observations(self.spec, 1.0, {})
        with self.assertRaises(CumulantError):
            verify_discrete_loop_equation(self.spec, self.plus, self.minus, obs, v, contour=ContourSpec.circle(0.0, 1.0))

    def test_branch_mismatch(self):
        """Test that the θ = 1 form is refused at θ = 0.7."""
        obs, v = default_observations(self.spec, 1.0, {})
        with self.assertRaises(NekrasovContractError):
            verify_discrete_loop_equation(self.spec, self.plus, self.minus, obs, v, theta_branch="one")

    def test_default_contour_encloses_range(self):
        """Test the default contour against the particle range and the observation points."""
        contour = default_contour(self.spec, 1.0)
        self.assertTrue(contour.contains(complex(-1.4)))
        self.assertTrue(contour.contains(complex(4.3)))
        obs, v = default_observations(self.spec, 1.0, {1: 1, 2: 2}, contour)
        self.assertFalse(contour.contains(v))
        for _, _, point in obs.items():
            self.assertFalse(contour.contains(point))
