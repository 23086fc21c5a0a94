import itertools
import math

from django.test import SimpleTestCase

from apps.state_space.utils import enumerate_signatures

from .utils import (
    JackContractError,
    Partition,
    PartitionError,
    dual_correction,
    dual_jack_principal,
    jack_principal,
    skew_jack_one,
    verify_branching,
    verify_cauchy,
    weyl_dimension,
)


class PartitionTest(SimpleTestCase):
    """Tests for Young diagram bookkeeping."""

    def test_conjugate(self):
        """Test λ′ and the involution λ″ = λ."""
        lam = Partition.of((3, 1))
        self.assertEqual(lam.conjugate().parts, (2, 1, 1))
        self.assertEqual(lam.conjugate().conjugate(), lam)

    def test_arm_and_leg(self):
        """Test arm and leg lengths are nonnegative on every box."""
        lam = Partition.of((4, 2, 2, 1))
        self.assertEqual(lam.arm(1, 1), 3)
        self.assertEqual(lam.leg(1, 1), 3)
        for i, j in lam.boxes():
            self.assertGreaterEqual(lam.arm(i, j), 0)
            self.assertGreaterEqual(lam.leg(i, j), 0)

    def test_invalid(self):
        """Test rejection of increasing parts."""
        with self.assertRaises(PartitionError):
            Partition.of((1, 2))


class PrincipalSpecializationTest(SimpleTestCase):
    """Tests for J_λ(1ᴺ) and its dual."""

    def test_empty(self):
        """Test J_∅(1ᴺ) = 1."""
        self.assertAlmostEqual(jack_principal((), 3, 0.7), 1.0, places=12)

    def test_monomial_cases(self):
        """Test J_(1)(1,1) = 2 and J_(2,1)(1,1) = 2 for every θ."""
        for theta in (0.5, 1.0, 2.0, 3.7):
            self.assertAlmostEqual(jack_principal((1,), 2, theta), 2.0, places=12)
            self.assertAlmostEqual(jack_principal((2, 1), 2, theta), 2.0, places=12)

    def test_too_many_parts(self):
        """Test that λ longer than N gives zero."""
        self.assertEqual(jack_principal((1, 1, 1), 2, 0.5), 0.0)

    def test_weyl_dimension(self):
        """Test θ = 1 against the Weyl dimension for λ ⊆ (4,4,4,4)."""
        for signature in enumerate_signatures(4, 4):
            value = jack_principal(signature.parts, 4, 1.0)
            self.assertLess(abs(value - weyl_dimension(signature.parts, 4)), 1e-10 * value)

    def test_dual_empty(self):
        """Test J̃_∅(1ᴺ) = 1."""
        self.assertAlmostEqual(dual_jack_principal((), 4, 1.3), 1.0, places=12)

    def test_dual_self_dual_at_one(self):
        """Test J̃ = J at θ = 1."""
        for parts in [(2,), (3, 1), (2, 2, 1)]:
            self.assertAlmostEqual(
                dual_jack_principal(parts, 3, 1.0) / jack_principal(parts, 3, 1.0), 1.0, places=12
            )

    def test_dual_single_variable(self):
        """Test J̃_(m)(1) = Γ(m+θ)/(Γ(θ)·m!)."""
        theta = 0.7
        for m in range(6):
            expected = math.gamma(m + theta) / (math.gamma(theta) * math.factorial(m))
            self.assertAlmostEqual(dual_jack_principal((m,), 1, theta), expected, places=12)

    def test_dual_box_product(self):
        """Test the closed Gamma form against J_λ times the box product."""
        for theta in (0.5, 1.3, 2.0):
            for parts in [(1,), (2, 1), (3, 2, 2), (4, 1, 0)]:
                closed = dual_jack_principal(parts, 3, theta)
                boxed = jack_principal(parts, 3, theta) * dual_correction(parts, theta)
                self.assertLess(abs(closed - boxed), 1e-11 * closed)


class SkewJackTest(SimpleTestCase):
    """Tests for one-variable skew specializations."""

    def test_single_row(self):
        """Test J_{(m)/∅}(1) = 1 in one variable at θ = 1."""
        for m in range(5):
            self.assertAlmostEqual(skew_jack_one((m,), (), 1.0), 1.0, places=14)

    def test_empty_pair_is_one(self):
        """Test J_{∅/∅}(1) = 1 in n variables for θ away from 1 and 2."""
        for theta in (0.5, 0.7, 1.3):
            for n in (2, 3, 4):
                value = skew_jack_one((0,) * n, (0,) * (n - 1), theta)
                self.assertAlmostEqual(value, 1.0, places=12)

    def test_vanishes_off_interlacing(self):
        """Test the interlacing indicator."""
        self.assertEqual(skew_jack_one((2, 0), (3,), 0.7), 0.0)
        self.assertEqual(skew_jack_one((3, 1, 0), (2, 2), 0.7), 0.0)
        self.assertGreater(skew_jack_one((3, 1, 0), (2, 1), 0.7), 0.0)

    def test_vanishing_set_exhaustive(self):
        """Test that nonzero values occur exactly on interlacing pairs."""
        for upper in itertools.product(range(3), repeat=3):
            if list(upper) != sorted(upper, reverse=True):
                continue
            for lower in itertools.product(range(3), repeat=2):
                if lower[0] < lower[1]:
                    continue
                value = skew_jack_one(upper, lower, 1.3)
                interlaced = upper[0] >= lower[0] >= upper[1] >= lower[1] >= upper[2]
                self.assertEqual(value > 0, interlaced)


class BranchingTest(SimpleTestCase):
    """Tests for the branching rule."""

    def test_two_chains(self):
        """Test λ=(1,0), N=2."""
        check = verify_branching((1, 0), 2, 0.7)
        self.assertEqual(check.chain_count, 2)
        self.assertLess(check.residual, 1e-12)

    def test_small_cases(self):
        """Test λ=(2,1), N=2 for several θ."""
        for theta in (0.5, 1.0, 2.0):
            self.assertLess(verify_branching((2, 1), 2, theta).residual, 1e-10)

    def test_empty(self):
        """Test that λ=∅ gives residual exactly zero."""
        self.assertEqual(verify_branching((), 3, 1.3).residual, 0.0)

    def test_box_three(self):
        """Test every λ ⊆ (3,3,3) with N=3."""
        for theta in (0.5, 1.0, 1.3, 2.0):
            for signature in enumerate_signatures(3, 3):
                self.assertLess(verify_branching(signature.parts, 3, theta).residual, 1e-10)


class CauchyTest(SimpleTestCase):
    """Tests for the truncated Cauchy identity."""

    def test_binomial_series(self):
        """Test N=1, q=0.1, T=60."""
        check = verify_cauchy(1, 0.7, 0.1, 60)
        self.assertTrue(check.passed)
        self.assertLess(check.tail_bound, 1e-10)
        self.assertEqual(check.terms, 61)

    def test_q_zero(self):
        """Test that q = 0 gives 1 on both sides."""
        check = verify_cauchy(2, 1.3, 0.0, 5)
        self.assertEqual(check.truncated_sum, 1.0)
        self.assertEqual(check.target, 1.0)
        self.assertTrue(check.passed)

    def test_two_variables(self):
        """Test N=2, θ=0.7, q=0.2, T=40."""
        check = verify_cauchy(2, 0.7, 0.2, 40)
        self.assertTrue(check.passed)
        self.assertLess(check.residual, 1e-10)

    def test_short_truncation_is_bounded(self):
        """Test that a visible truncation error stays below the tail bound."""
        check = verify_cauchy(1, 2.0, 0.3, 10)
        self.assertGreater(check.residual, 1e-8)
        self.assertTrue(check.passed)

    def test_q_out_of_range(self):
        """Test q ∉ [0, 1)."""
        with self.assertRaises(JackContractError):
            verify_cauchy(1, 1.0, 1.0, 10)
