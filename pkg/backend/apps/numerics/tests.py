import math

import numpy as np
from django.test import SimpleTestCase

from .utils import (
    ContourSpec,
    NumericsContractError,
    NumericsDomainError,
    QuadratureNotConverged,
    contour_integral,
    log_gamma,
    make_generator,
    mixed_partial,
    spawn_generators,
    trapezoid_estimate,
)


class LogGammaTest(SimpleTestCase):
    """Tests for the log-Gamma wrapper."""

    def test_known_values(self):
        """Test Γ(1) = 1 and Γ(1/2) = √π."""
        self.assertEqual(log_gamma(1.0), 0.0)
        self.assertAlmostEqual(log_gamma(0.5), 0.5 * math.log(math.pi), places=14)

    def test_recurrence(self):
        """Test lnΓ(x+1) = ln x + lnΓ(x)."""
        for x in (0.3, 1.7, 42.5):
            self.assertLess(abs(log_gamma(x + 1) - math.log(x) - log_gamma(x)), 1e-13)

    def test_ratio_asymptotics(self):
        """Test the sandwich bound on ln(Γ(x+θ)/Γ(x)) − θ ln x."""
        x, theta = 100.0, 0.7
        deviation = log_gamma(x + theta) - log_gamma(x) - theta * math.log(x)
        self.assertLessEqual(abs(deviation), max(theta, theta ** 2) / x)

    def test_nonpositive_argument(self):
        """Test that x <= 0 is a domain error."""
        with self.assertRaises(NumericsDomainError):
            log_gamma(0.0)
        with self.assertRaises(NumericsDomainError):
            log_gamma(np.array([1.0, -0.5]))

    def test_array_input(self):
        """Test that arrays are evaluated elementwise."""
        values = log_gamma(np.array([1.0, 2.0, 3.0]))
        np.testing.assert_allclose(values, [0.0, 0.0, math.log(2.0)], atol=1e-15)


class ContourIntegralTest(SimpleTestCase):
    """Tests for trapezoid contour quadrature."""

    def test_simple_pole(self):
        """Test (1/2πi)∮ dz/z = 1 on the unit circle."""
        result = contour_integral(lambda z: 1.0 / z, ContourSpec.circle(0, 1.0))
        self.assertAlmostEqual(result.value, 1.0, places=12)

    def test_entire_integrand(self):
        """Test that z² integrates to zero on an ellipse."""
        contour = ContourSpec(center=0.3 + 0.1j, semi_axis_x=2.0, semi_axis_y=0.7)
        result = contour_integral(lambda z: z ** 2, contour)
        self.assertLess(abs(result.value), 1e-12)

    def test_sum_of_residues(self):
        """Test two poles inside a circle of radius 2."""
        result = contour_integral(
            lambda z: 1.0 / (z - 0.3) + 2.0 / (z - 0.7),
            ContourSpec.circle(0, 2.0),
        )
        self.assertAlmostEqual(result.value, 3.0, places=10)
        self.assertLess(result.last_refinement_delta, 1e-10)

    def test_orientation(self):
        """Test that reversing orientation negates the value."""
        contour = ContourSpec.circle(0.5, 1.0)
        f = lambda z: np.exp(z) / (z - 0.5)
        forward = contour_integral(f, contour).value
        backward = contour_integral(f, contour.reversed()).value
        self.assertAlmostEqual(forward, -backward, places=12)

    def test_geometric_convergence(self):
        """Test that doubling nodes cuts the error by at least ten."""
        f = lambda z: 1.0 / (z - 0.3) + 2.0 / (z - 0.7)
        coarse = abs(trapezoid_estimate(f, ContourSpec.circle(0, 2.0, nodes=8)) - 3.0)
        fine = abs(trapezoid_estimate(f, ContourSpec.circle(0, 2.0, nodes=16)) - 3.0)
        self.assertLess(fine * 10, coarse)

    def test_node_cap(self):
        """Test that the node cap raises with the last delta attached."""
        f = lambda z: 1.0 / (z - 0.999)
        with self.assertRaises(QuadratureNotConverged) as ctx:
            contour_integral(f, ContourSpec.circle(0, 1.0, nodes=8), adaptive_tol=1e-14, max_nodes=32)
        self.assertGreater(ctx.exception.result.last_refinement_delta, 0.0)

    def test_invalid_contour(self):
        """Test contour validation."""
        with self.assertRaises(NumericsContractError):
            ContourSpec(nodes=6)
        with self.assertRaises(NumericsContractError):
            ContourSpec(semi_axis_x=0.0)

    def test_segment_ellipse(self):
        """Test that the segment ellipse contains its segment."""
        contour = ContourSpec.around_segment(-1.4, 3.3)
        self.assertTrue(contour.contains(-1.4))
        self.assertTrue(contour.contains(3.3))
        self.assertFalse(contour.contains(4.5))


class MixedPartialTest(SimpleTestCase):
    """Tests for finite-difference mixed partials."""

    def test_bilinear(self):
        """Test ∂²(t₁t₂) = 1."""
        value = mixed_partial(lambda t: t[0] * t[1], (1, 1))
        self.assertAlmostEqual(value, 1.0, places=10)

    def test_exponential(self):
        """Test d/dt exp(2t) at 0 equals 2."""
        value = mixed_partial(lambda t: math.exp(2.0 * t[0]), (1,), step=1e-3)
        self.assertLess(abs(value - 2.0), 1e-8)

    def test_separable_zero(self):
        """Test ∂²[sin t₁ cos t₂] = 0 at the origin."""
        value = mixed_partial(lambda t: math.sin(t[0]) * math.cos(t[1]), (1, 1))
        self.assertLess(abs(value), 1e-8)

    def test_skipped_axis(self):
        """Test that axes with order 0 stay at the origin."""
        value = mixed_partial(lambda t: t[0] * (1.0 + t[1]), (1, 0))
        self.assertAlmostEqual(value, 1.0, places=10)

    def test_contract(self):
        """Test order validation."""
        with self.assertRaises(NumericsContractError):
            mixed_partial(lambda t: 0.0, (2,))
        with self.assertRaises(NumericsContractError):
            mixed_partial(lambda t: 0.0, (1, 1, 1, 1, 1))


class GeneratorTest(SimpleTestCase):
    """Tests for the seeded generator contract."""

    def test_determinism(self):
        """Test that equal seeds give equal streams."""
        a = make_generator(7).random(5)
        b = make_generator(7).random(5)
        np.testing.assert_array_equal(a, b)

    def test_spawned_streams_differ(self):
        """Test that spawned children are distinct but reproducible."""
        first = [g.random() for g in spawn_generators(11, 3)]
        again = [g.random() for g in spawn_generators(11, 3)]
        self.assertEqual(first, again)
        self.assertEqual(len(set(first)), 3)
