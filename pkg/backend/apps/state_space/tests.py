import itertools
from fractions import Fraction

import numpy as np
from django.test import SimpleTestCase

from .utils import (
    CornersPattern,
    Signature,
    StateSpaceContractError,
    completion_count,
    enumerate_pattern_keys,
    enumerate_patterns,
    enumerate_signatures,
    exact_theta,
    interlaces,
    pattern_count,
    shifted_value,
    signature_count,
)


def nested_loop_count(N, k, M):
    """Brute-force count over all products of Λᴹⱼ, filtering interlacing."""
    levels = [list(itertools.product(range(M + 1), repeat=j)) for j in range(N, k - 1, -1)]
    levels = [[v for v in level if all(v[i] >= v[i + 1] for i in range(len(v) - 1))] for level in levels]
    total = 0
    for stack in itertools.product(*levels):
        if all(interlaces(stack[t], stack[t + 1]) for t in range(len(stack) - 1)):
            total += 1
    return total


class SignatureTest(SimpleTestCase):
    """Tests for Signature and its enumeration."""

    def test_small_enumeration(self):
        """Test Λ¹₁ = {(0), (1)}."""
        parts = [s.parts for s in enumerate_signatures(1, 1)]
        self.assertEqual(parts, [(0,), (1,)])

    def test_counts(self):
        """Test the stars-and-bars counts."""
        self.assertEqual(len(list(enumerate_signatures(2, 2))), 6)
        self.assertEqual(len(list(enumerate_signatures(4, 6))), 210)
        self.assertEqual(signature_count(4, 6), 210)

    def test_lexicographic_and_unique(self):
        """Test that output is sorted and duplicate-free."""
        parts = [s.parts for s in enumerate_signatures(3, 3)]
        self.assertEqual(parts, sorted(parts))
        self.assertEqual(len(parts), len(set(parts)))

    def test_validation(self):
        """Test that bad parts are rejected."""
        with self.assertRaises(StateSpaceContractError):
            Signature((0, 1), 2)
        with self.assertRaises(StateSpaceContractError):
            Signature((3,), 2)
        with self.assertRaises(StateSpaceContractError):
            list(enumerate_signatures(0, 2))

    def test_shifted_positions_strict(self):
        """Test that ℓ is strictly decreasing even for equal parts."""
        positions = Signature((2, 2, 2), 3).shifted(0.4).positions
        self.assertTrue(np.all(np.diff(positions) < 0))
        np.testing.assert_allclose(positions, [1.6, 1.2, 0.8])


class InterlacingTest(SimpleTestCase):
    """Tests for the interlacing relation."""

    def test_examples(self):
        """Test the basic interlacing examples."""
        self.assertTrue(interlaces((2, 0), (1,)))
        self.assertFalse(interlaces((2, 0), (3,)))
        self.assertTrue(interlaces((1, 1), (1,)))

    def test_signature_arguments(self):
        """Test that Signature objects are accepted."""
        self.assertTrue(interlaces(Signature((3, 1), 3), Signature((2,), 3)))

    def test_length_mismatch(self):
        """Test that wrong lengths are a contract error."""
        with self.assertRaises(StateSpaceContractError):
            interlaces((2, 0), (1, 0))


class PatternEnumerationTest(SimpleTestCase):
    """Tests for corner pattern enumeration."""

    def test_single_level_matches_signatures(self):
        """Test that N = k reproduces Λᴹ_N."""
        keys = [key[0] for key in enumerate_pattern_keys(3, 3, 2)]
        self.assertEqual(keys, [s.parts for s in enumerate_signatures(3, 2)])

    def test_two_level_count(self):
        """Test N=2, k=1, M=2 gives 10 patterns."""
        self.assertEqual(len(list(enumerate_patterns(0.5, 2, 1, 2))), 10)

    def test_oracle_counts(self):
        """Test streaming counts against the nested-loop oracle."""
        for N, k, M in [(3, 1, 2), (3, 2, 3), (2, 1, 4), (3, 1, 4)]:
            streamed = sum(1 for _ in enumerate_pattern_keys(N, k, M))
            self.assertEqual(streamed, nested_loop_count(N, k, M))
            self.assertEqual(pattern_count(N, k, M), streamed)

    def test_completion_identity(self):
        """Test Σ completions over top rows equals the total count."""
        total = sum(completion_count(s.parts, 1) for s in enumerate_signatures(3, 3))
        self.assertEqual(total, nested_loop_count(3, 1, 3))

    def test_patterns_valid(self):
        """Test every enumerated pattern interlaces with strict ℓ."""
        for pattern in enumerate_patterns(1.3, 3, 1, 3):
            self.assertTrue(pattern.is_valid())
            for j in range(1, 4):
                self.assertTrue(np.all(np.diff(pattern.ell(j)) < 0))

    def test_lexicographic_order(self):
        """Test ordering on the concatenated levels."""
        flat = [sum(key, ()) for key in enumerate_pattern_keys(3, 1, 2)]
        self.assertEqual(flat, sorted(flat))

    def test_pattern_accessors(self):
        """Test level lookup and replacement."""
        pattern = CornersPattern(0.5, 2, 1, 2, ((1, 0), (1,)))
        self.assertEqual(pattern.lam(1), (1,))
        np.testing.assert_allclose(pattern.ell(2), [0.5, -1.0])
        moved = pattern.replace_levels({1: (0,)})
        self.assertTrue(moved.is_valid())
        self.assertFalse(pattern.replace_levels({1: (2,)}).is_valid())
        with self.assertRaises(StateSpaceContractError):
            pattern.lam(3)


class LatticeTest(SimpleTestCase):
    """Tests for exact lattice arithmetic."""

    def test_exact_theta(self):
        """Test that decimal θ's become the expected fractions."""
        self.assertEqual(exact_theta(0.5), Fraction(1, 2))
        self.assertEqual(exact_theta(1.3), Fraction(13, 10))

    def test_shifted_value(self):
        """Test ℓ = λ − iθ on rationals."""
        self.assertEqual(shifted_value(3, 2, Fraction(1, 3)), Fraction(7, 3))
