import numpy as np
from django.test import SimpleTestCase

from apps.discrete.utils import build_ensemble

from .utils import (
    AnalyticFamily,
    FamilyError,
    NekrasovContractError,
    PhiFunction,
    PoleCandidate,
    PoleProximityError,
    certify_analyticity,
    check_all_bijections,
    check_bijection,
    cluster_candidates,
    derive_weights,
    diverging_constant,
    eval_R1,
    eval_R2,
    geometric_setup,
    krawtchouk_family,
    residual_terms,
    single_level_R,
    theta_continuity,
)


class FamilyTest(SimpleTestCase):
    """Tests for φ families and their compatibility with the weights."""

    def test_krawtchouk_family_compatible(self):
        """Test that the boundary-vanishing family satisfies both relations."""
        spec, family = krawtchouk_family(0.5, 0.7, 3, 1, 5)
        self.assertEqual(family.validate(spec), [])

    def test_geometric_family_compatible(self):
        """Test the constant φ's of per-level geometric weights."""
        spec, family = geometric_setup((0.6, 0.9, 1.3), 1.3, 3, 1, 3)
        self.assertEqual(family.validate(spec), [])

    def test_corrupted_family_rejected(self):
        """Test that scaling φ₁ᵏ breaks the first relation at level k."""
        spec, family = krawtchouk_family(0.5, 0.7, 3, 1, 5)
        violations = family.corrupted().validate(spec)
        self.assertTrue(violations)
        self.assertTrue(all(v.relation == "phi1" and v.level == 1 for v in violations))
        with self.assertRaises(FamilyError):
            family.corrupted().ensure_compatible(spec)

    def test_wrong_length(self):
        """Test that a family needs N − k + 2 functions per side."""
        with self.assertRaises(FamilyError):
            AnalyticFamily(N=2, k=1, phi1=(PhiFunction(),), phi2=(PhiFunction(),) * 3)

    def test_derive_weights_reproduces_measure(self):
        """Test that weights rebuilt from φ₁ give the same probabilities."""
        spec, family = geometric_setup((0.6, 0.9, 1.3), 0.7, 3, 1, 3)
        derived = derive_weights(family, 0.7, 3)
        np.testing.assert_allclose(build_ensemble(derived).probs, build_ensemble(spec).probs, atol=1e-12)

    def test_derive_weights_krawtchouk(self):
        """Test the rebuilt Krawtchouk-type top weight."""
        spec, family = krawtchouk_family(0.8, 0.7, 2, 1, 4)
        derived = derive_weights(family, 0.7, 4)
        np.testing.assert_allclose(build_ensemble(derived).probs, build_ensemble(spec).probs, atol=1e-12)

    def test_phi_function(self):
        """Test constant · Π(z − r) · exp(poly)."""
        phi = PhiFunction(constant=2.0, roots=(1.0,), exponent=(0.0, 1.0))
        self.assertAlmostEqual(complex(phi(2.0)), 2.0 * np.exp(2.0), places=12)
        self.assertEqual(complex(phi.scaled(0.5)(3.0)), complex(PhiFunction(1.0, (1.0,), (0.0, 1.0))(3.0)))


class NekrasovFunctionTest(SimpleTestCase):
    """Tests for R₁, R₂ and the boundary terms."""

    def test_boundary_family_has_no_residual(self):
        """Test that Φ₋(−Nθ) = Φ₊(s_M) = 0 makes Res₁ and Res₂ vanish."""
        spec, family = krawtchouk_family(0.5, 0.7, 3, 1, 4)
        for which in ("R1", "R2"):
            for term in residual_terms(spec, family, which):
                self.assertEqual(term.coefficient, 0)

    def test_geometric_family_has_residual(self):
        """Test that constant φ's leave a nonzero boundary correction."""
        spec, family = geometric_setup((0.6, 0.9), 0.7, 2, 1, 3)
        coefficients = [abs(t.coefficient) for t in residual_terms(spec, family, "R1")]
        self.assertGreater(max(coefficients), 0.0)

    def test_single_level_reduction(self):
        """Test that N = k matches the pattern-by-pattern single-level formula."""
        spec, family = geometric_setup((0.6,), 0.7, 2, 2, 3)
        for z in (0.3 + 0.8j, -2.0 + 0.1j, 4.5 - 1.0j):
            for which, evaluate in (("R1", eval_R1), ("R2", eval_R2)):
                expected = single_level_R(spec, family, z, which)
                self.assertLess(abs(evaluate(spec, family, z) - expected), 1e-12 * max(1.0, abs(expected)))

    def test_single_level_reduction_theta_one(self):
        """Test the single-level reduction on the θ = 1 branch."""
        spec, family = krawtchouk_family(0.5, 1.0, 2, 2, 3)
        z = 0.4 + 0.6j
        expected = single_level_R(spec, family, z, "R1")
        self.assertLess(abs(eval_R1(spec, family, z) - expected), 1e-12 * max(1.0, abs(expected)))

    def test_large_z_limit(self):
        """Test that every particle product tends to one far from the real axis."""
        spec, family = geometric_setup((0.6, 0.9), 0.7, 2, 1, 3)
        z = 1e7j
        limit = sum(complex(family.phi("R1", j)(z)) for j in (1, 3)) + complex(
            diverging_constant(family, 0.7, z, "R1")[0]
        )
        self.assertLess(abs(eval_R1(spec, family, z) - limit), 1e-5 * abs(limit))

    def test_array_evaluation(self):
        """Test that vector z gives the same values as scalar calls."""
        spec, family = krawtchouk_family(0.5, 0.7, 2, 1, 3)
        points = np.array([0.2 + 0.5j, 1.1 - 0.3j])
        values = eval_R2(spec, family, points)
        for z, value in zip(points, values):
            self.assertAlmostEqual(eval_R2(spec, family, z), value, places=13)

    def test_pole_proximity(self):
        """Test evaluation on a candidate pole."""
        spec, family = krawtchouk_family(0.5, 0.7, 2, 1, 3)
        with self.assertRaises(PoleProximityError):
            eval_R1(spec, family, 1.0 - 0.7)

    def test_branch_mismatch(self):
        """Test that the branch must agree with θ."""
        spec, family = krawtchouk_family(0.5, 0.7, 2, 1, 3)
        with self.assertRaises(NekrasovContractError):
            eval_R1(spec, family, 0.5j, theta_branch="one")
        spec, family = krawtchouk_family(0.5, 1.0, 2, 1, 3)
        with self.assertRaises(NekrasovContractError):
            eval_R1(spec, family, 0.5j, theta_branch="general")


class AnalyticityTest(SimpleTestCase):
    """Tests for the numerical analyticity certificate."""

    def test_krawtchouk_family_general_theta(self):
        """Test N=3, k=1, M=5, θ=0.7: every residue and moment vanishes."""
        spec, family = krawtchouk_family(0.5, 0.7, 3, 1, 5)
        for which in ("R1", "R2"):
            report = certify_analyticity(spec, family, which, threads=2)
            self.assertTrue(report.passed, report.as_dict())
            self.assertLess(abs(report.residue_sum), 1e-8)

    def test_krawtchouk_family_theta_one(self):
        """Test the θ = 1 forms on the same family."""
        spec, family = krawtchouk_family(0.5, 1.0, 3, 1, 5)
        for which in ("R1", "R2"):
            report = certify_analyticity(spec, family, which)
            self.assertEqual(report.branch, "one")
            self.assertTrue(report.passed, report.as_dict())

    def test_geometric_family_nonzero_residual(self):
        """Test that the boundary correction makes R analytic at −Nθ and s_M."""
        spec, family = geometric_setup((0.6, 0.9, 1.3), 1.3, 3, 1, 3)
        report = certify_analyticity(spec, family, "R2")
        self.assertTrue(report.passed, report.as_dict())
        self.assertEqual(sum(r.boundary for r in report.residues), 2)

    def test_one_level_example(self):
        """Test N=k=1 with w = qˣ, Φ₊ = q, Φ₋ = 1."""
        q = 0.7
        spec, _ = geometric_setup((q,), 0.7, 1, 1, 4)
        family = AnalyticFamily(
            N=1,
            k=1,
            phi1=(PhiFunction(q), PhiFunction(1.0)),
            phi2=(PhiFunction(1.0), PhiFunction(q)),
        )
        self.assertEqual(family.validate(spec), [])
        self.assertTrue(certify_analyticity(spec, family, "R1").passed)

    def test_corrupted_family_detected(self):
        """Test that φ₁ᵏ scaled by 1.01 leaves visible residues."""
        spec, family = krawtchouk_family(0.5, 0.7, 3, 1, 5)
        report = certify_analyticity(spec, family.corrupted(1.01), "R1")
        self.assertFalse(report.passed)
        self.assertGreater(report.max_raw_residue, 1e-4)

    def test_clusters_for_rational_theta(self):
        """Test that coinciding candidates at θ = 1/2 share one circle."""
        spec, _ = krawtchouk_family(0.5, 0.5, 3, 1, 2)
        clusters = cluster_candidates(spec)
        self.assertEqual(len(clusters), len({round(c.location, 9) for c in clusters}))
        self.assertTrue(any(len(c.members) > 1 for c in clusters))

    def test_theta_continuity(self):
        """Test R^θ − G^θ → R at θ = 1 for both functions."""
        for which in ("R1", "R2"):
            report = theta_continuity(which, (0.6, 0.9, 1.2), 3, 1, 2)
            self.assertTrue(report.passed, report.as_dict())


class BijectionTest(SimpleTestCase):
    """Tests for the residue-cancelling shift maps."""

    def setUp(self):
        self.spec, self.family = krawtchouk_family(0.5, 0.7, 3, 1, 4)

    def test_b1_exhaustive(self):
        """Test every (s, i) for the first map."""
        reports = check_all_bijections(self.spec, self.family, "b1", threads=2)
        self.assertEqual(len(reports), 16 * 3)
        for report in reports:
            self.assertTrue(report.passed, report.as_dict())
            self.assertEqual(report.domain_size, report.codomain_size)
        self.assertTrue(any(report.domain_size > 0 for report in reports))

    def test_b2_exhaustive(self):
        """Test every (s, i) for the second map."""
        for report in check_all_bijections(self.spec, self.family, "b2"):
            self.assertTrue(report.passed, report.as_dict())
            self.assertEqual(report.domain_size, report.codomain_size)

    def test_geometric_family(self):
        """Test the identities with nonzero boundary corrections."""
        spec, family = geometric_setup((0.6, 0.9, 1.3), 0.7, 3, 1, 3)
        for variant in ("b1", "b2"):
            self.assertTrue(all(r.passed for r in check_all_bijections(spec, family, variant)))

    def test_empty_pole_sets(self):
        """Test that an unreachable (s, i) passes vacuously."""
        report = check_bijection(self.spec, self.family, "b1", PoleCandidate.at(2, 1, 0.7), 3)
        self.assertEqual((report.domain_size, report.codomain_size), (0, 0))
        self.assertTrue(report.passed)

    def test_corrupted_family_fails(self):
        """Test that an incompatible φ₁ᵏ breaks a cancellation identity."""
        reports = check_all_bijections(self.spec, self.family.corrupted(), "b1")
        self.assertTrue(any(r.counterexamples for r in reports))

    def test_contract(self):
        """Test θ = 1, boundary points and unknown variants."""
        with self.assertRaises(NekrasovContractError):
            check_bijection(self.spec, self.family, "b1", PoleCandidate.at(0, 3, 0.7), 1)
        with self.assertRaises(NekrasovContractError):
            check_bijection(self.spec, self.family, "b3", PoleCandidate.at(1, 1, 0.7), 1)
        spec, family = krawtchouk_family(0.5, 1.0, 3, 1, 4)
        with self.assertRaises(NekrasovContractError):
            check_bijection(spec, family, "b1", PoleCandidate.at(1, 1, 1.0), 1)
