import math
import tempfile
from pathlib import Path
from unittest import mock

import numpy as np
from django.test import SimpleTestCase
from scipy import integrate, stats

from apps.cumulants.utils import CumulantError, ObservableSet
from apps.numerics.utils import make_generator

from .utils import (
    ContinuousSpec,
    ContinuousSpecError,
    DiffuseLimitReport,
    DiffuseLimitRow,
    SampleBatch,
    conditional_is_uniform,
    continuous_moments_quadrature,
    default_points,
    diffuse_limit_experiment,
    dixon_anderson_closed_form,
    doubling_check,
    estimate_cumulant,
    initial_stack,
    is_valid,
    log_density,
    projection_consistency,
    read_batch,
    rescale_level,
    s_functional,
    sample,
    scaled_top_weight,
    sidecar_path,
    stieltjes_transforms,
    verify_continuous_loop_equation,
    verify_dixon_anderson,
    write_batch,
)


def synthetic_batch(size=2000, seed=3):
    """A one-particle batch of uniform draws, enough for the estimator tests."""
    spec = ContinuousSpec(1.0, 1, 1, -2.0, 2.0)
    samples = make_generator(seed).uniform(-2.0, 2.0, (size, 1))
    return SampleBatch(spec, samples, seed, chains=4, burn_in=0, acceptance_rate=1.0, autocorrelation=0.0)


class ContinuousSpecTest(SimpleTestCase):
    """Tests for the continuous density."""

    def test_rejects_bad_parameters(self):
        """Test validation of θ, k and the walls."""
        with self.assertRaises(ContinuousSpecError):
            ContinuousSpec(0.0, 2, 1, -1.0, 1.0)
        with self.assertRaises(ContinuousSpecError):
            ContinuousSpec(1.0, 2, 3, -1.0, 1.0)
        with self.assertRaises(ContinuousSpecError):
            ContinuousSpec(1.0, 2, 1, 1.0, -1.0)

    def test_single_level_is_log_gas(self):
        """Test N = k against the Vandermonde^{2θ} form."""
        theta = 0.8
        spec = ContinuousSpec.quadratic(theta, 2, 2)
        y = [-0.7, 1.1]
        expected = (
            2 * math.lgamma(theta)
            - math.lgamma(2 * theta)
            + 2 * theta * math.log(y[1] - y[0])
            - 2 * theta * (y[0] ** 2 + y[1] ** 2) / 2
        )
        self.assertAlmostEqual(log_density(spec, [y]), expected, places=12)

    def test_theta_one_keeps_top_vandermonde(self):
        """Test that at θ = 1 only the top Vandermonde survives."""
        spec = ContinuousSpec(1.0, 2, 1, -1.0, 1.0)
        self.assertAlmostEqual(log_density(spec, [[-0.5, 0.5], [0.2]]), math.log(1.0), places=14)
        self.assertAlmostEqual(log_density(spec, [[-0.9, 0.3], [-0.1]]), math.log(1.2), places=14)

    def test_matches_factor_oracle(self):
        """Test N = 3, k = 1 factor by factor."""
        theta = 0.7
        spec = ContinuousSpec.quadratic(theta, 3, 1)
        y3, y2, y1 = [-1.5, 0.2, 1.4], [-0.9, 0.8], [0.1]
        expected = math.log(1.7) + math.log(2.9) + math.log(1.2)
        expected += (2 - 2 * theta) * math.log(1.7)
        expected += (theta - 1) * sum(math.log(abs(a - b)) for a in y2 for b in y3)
        expected += (theta - 1) * sum(math.log(abs(y1[0] - b)) for b in y2)
        expected -= 3 * theta * sum(y * y / 2 for y in y3)
        self.assertAlmostEqual(log_density(spec, [y3, y2, y1]), expected, places=12)

    def test_off_support(self):
        """Test −∞ for broken interlacing and for particles outside the walls."""
        spec = ContinuousSpec(0.7, 2, 1, -1.0, 1.0)
        self.assertEqual(log_density(spec, [[-0.5, 0.5], [0.7]]), -np.inf)
        self.assertEqual(log_density(spec, [[-1.5, 0.5], [0.0]]), -np.inf)

    def test_wrong_shape(self):
        """Test that a stack with the wrong level sizes is rejected."""
        spec = ContinuousSpec(0.7, 2, 1, -1.0, 1.0)
        with self.assertRaises(ContinuousSpecError):
            log_density(spec, [[-0.5, 0.5], [0.1, 0.2]])

    def test_initial_stack_is_valid(self):
        """Test the sampler's starting point."""
        spec = ContinuousSpec.quadratic(1.3, 4, 1)
        self.assertTrue(is_valid(spec, initial_stack(spec))[0])


class DixonAndersonTest(SimpleTestCase):
    """Tests for the interlacing integral and the projection check."""

    def test_theta_one_is_length(self):
        """Test N = 2, θ = 1 gives x₂ − x₁."""
        result = verify_dixon_anderson([-0.3, 0.9], 1.0)
        self.assertAlmostEqual(result.integral, 1.2, places=12)
        self.assertAlmostEqual(result.closed_form, 1.2, places=12)

    def test_theta_half_is_pi(self):
        """Test N = 2, θ = 1/2 gives π."""
        result = verify_dixon_anderson([0.0, 2.5], 0.5)
        self.assertAlmostEqual(result.integral, math.pi, places=10)
        self.assertAlmostEqual(dixon_anderson_closed_form([0.0, 2.5], 0.5), math.pi, places=12)

    def test_three_nodes(self):
        """Test N = 3 on random nodes in [−1, 1]."""
        rng = make_generator(17)
        for theta in (0.5, 1.0, 2.0):
            for _ in range(3):
                x = np.sort(rng.uniform(-1.0, 1.0, 3))
                result = verify_dixon_anderson(x, theta)
                self.assertLess(result.residual, 1e-6, msg=f"θ={theta}, x={x}")

    def test_rejects_bad_nodes(self):
        """Test that non-increasing nodes are rejected."""
        with self.assertRaises(ContinuousSpecError):
            verify_dixon_anderson([0.5, 0.5], 1.0)
        with self.assertRaises(ContinuousSpecError):
            verify_dixon_anderson([0.5], 1.0)

    def test_projection_two_levels(self):
        """Test that integrating y¹ out of f_{2,1} gives f_{2,2} at 10 probes."""
        spec = ContinuousSpec.quadratic(0.7, 2, 1)
        probes = projection_consistency(spec, probes=10, seed=4)
        self.assertEqual(len(probes), 10)
        for probe in probes:
            self.assertLess(probe.relative_gap, 1e-6)

    def test_projection_three_levels(self):
        """Test f_{3,1} → f_{3,2} with the middle level held fixed."""
        spec = ContinuousSpec.quadratic(1.3, 3, 1)
        for probe in projection_consistency(spec, probes=5, seed=9):
            self.assertLess(probe.relative_gap, 1e-6)


class SamplerTest(SimpleTestCase):
    """Tests for the corners sampler."""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.spec = ContinuousSpec.quadratic(0.7, 2, 1)
        cls.batch = sample(cls.spec, 4000, burn_in=200, seed=21, chains=16)

    def test_samples_interlace(self):
        """Test that every stored state is on the support."""
        self.assertTrue(np.all(is_valid(self.spec, self.batch.samples)))
        self.assertEqual(len(self.batch), 4000)
        self.assertEqual(self.batch.level(1).shape, (4000, 1))

    def test_seed_determinism(self):
        """Test identical batches for identical seeds, independent of the thread count."""
        first = sample(self.spec, 640, burn_in=50, seed=5, chains=32)
        second = sample(self.spec, 640, burn_in=50, seed=5, chains=32, threads=2)
        np.testing.assert_array_equal(first.samples, second.samples)
        third = sample(self.spec, 640, burn_in=50, seed=6, chains=32)
        self.assertFalse(np.array_equal(first.samples, third.samples))

    def test_fresh_seed_is_recorded(self):
        """Test that sampling without a seed records one that reproduces the batch."""
        batch = sample(self.spec, 64, burn_in=10, chains=16)
        self.assertTrue(0 <= batch.seed < 2 ** 64)
        again = sample(self.spec, 64, burn_in=10, chains=16, seed=batch.seed)
        np.testing.assert_array_equal(batch.samples, again.samples)

    def test_diagnostics(self):
        """Test that acceptance and autocorrelation are attached."""
        diagnostics = self.batch.diagnostics()
        self.assertTrue(0.0 < diagnostics["acceptance_rate"] < 1.0)
        self.assertLess(abs(diagnostics["autocorrelation"]), 1.0)
        self.assertEqual(diagnostics["seed"], 21)

    def test_uniform_shortcut(self):
        """Test which conditionals are sampled directly."""
        self.assertTrue(conditional_is_uniform(ContinuousSpec(1.0, 3, 1, -1.0, 1.0), 2))
        self.assertTrue(conditional_is_uniform(ContinuousSpec(1.0, 3, 1, -1.0, 1.0), 1))
        self.assertFalse(conditional_is_uniform(ContinuousSpec(1.0, 3, 2, -1.0, 1.0), 2))
        self.assertFalse(conditional_is_uniform(ContinuousSpec(0.7, 3, 1, -1.0, 1.0), 2))

    def test_theta_one_conditional_is_uniform(self):
        """Test the θ = 1 lower level against the uniform law on (y²₁, y²₂) by KS."""
        spec = ContinuousSpec.quadratic(1.0, 2, 1)
        batch = sample(spec, 5000, burn_in=100, seed=8, chains=16)
        top, lower = batch.level(2), batch.level(1)[:, 0]
        u = (lower - top[:, 0]) / (top[:, 1] - top[:, 0])
        self.assertGreater(stats.kstest(u, "uniform").pvalue, 1e-3)

    def test_single_particle_resolvent(self):
        """Test E[𝒢¹(a₊ + 2)] for N = 1 against direct quadrature."""
        spec = ContinuousSpec.quadratic(1.0, 1, 1)
        z = spec.a_plus + 2.0
        batch = sample(spec, 40000, burn_in=500, seed=12, chains=40)
        value, stderr = estimate_cumulant(batch, [1.0 / (z - batch.level(1)[:, 0])])
        weight = lambda y: math.exp(-y * y / 2)  # noqa: E731
        numerator = integrate.quad(lambda y: weight(y) / (z - y), -2.0, 2.0, epsabs=1e-13)[0]
        denominator = integrate.quad(weight, -2.0, 2.0, epsabs=1e-13)[0]
        self.assertLess(abs(value - numerator / denominator), 4 * stderr)

    def test_stationarity(self):
        """Test 20 smooth functionals from two independently seeded runs."""
        first = sample(self.spec, 20000, burn_in=500, seed=31)
        second = sample(self.spec, 20000, burn_in=500, seed=32)

        def functionals(batch):
            top, lower = batch.level(2), batch.level(1)
            values = []
            for p in range(1, 6):
                values.append(np.sum(top ** p, axis=-1))
                values.append(np.sum(lower ** p, axis=-1))
                values.append(np.sum(np.cos(p * top), axis=-1))
                values.append(np.sum(np.exp(-p * (top[:, 1:] - lower) ** 2), axis=-1))
            return values

        for n, (a, b) in enumerate(zip(functionals(first), functionals(second))):
            mean_a, err_a = estimate_cumulant(first, [a])
            mean_b, err_b = estimate_cumulant(second, [b])
            self.assertLess(abs(mean_a - mean_b), 4 * math.hypot(err_a, err_b), msg=f"functional {n}")

    def test_conjugate_symmetry(self):
        """Test 𝒢ʲ(z̄) = conj 𝒢ʲ(z) per sample."""
        z = np.array([0.3 + 1.2j, -2.5 + 0.4j, 3.0 - 0.7j])
        G, dG = stieltjes_transforms(self.batch, z)
        G_bar, dG_bar = stieltjes_transforms(self.batch, z.conj())
        for j in self.spec.levels:
            np.testing.assert_array_equal(G_bar[j], G[j].conj())
            np.testing.assert_array_equal(dG_bar[j], dG[j].conj())

    def test_rejects_bad_sizes(self):
        """Test argument validation."""
        with self.assertRaises(ContinuousSpecError):
            sample(self.spec, 0)
        with self.assertRaises(ContinuousSpecError):
            sample(self.spec, 10, grid_points=7)


class EstimatorTest(SimpleTestCase):
    """Tests for sample cumulants and batch means."""

    def setUp(self):
        self.batch = synthetic_batch()
        self.x = self.batch.samples[:, 0]

    def test_mean(self):
        """Test κ(X) = sample mean."""
        value, stderr = estimate_cumulant(self.batch, [self.x])
        self.assertAlmostEqual(value.real, float(np.mean(self.x)), places=14)
        self.assertGreater(stderr, 0.0)

    def test_variance(self):
        """Test κ(X, X) = empirical variance."""
        value, _ = estimate_cumulant(self.batch, [self.x, self.x])
        self.assertLess(abs(value.real - np.var(self.x)), 1e-12 * np.var(self.x))

    def test_constant_vanishes(self):
        """Test κ(c, X) = 0."""
        value, _ = estimate_cumulant(self.batch, [np.full(len(self.batch), 2.5), self.x])
        self.assertLess(abs(value), 1e-12)

    def test_callable_functional(self):
        """Test that callables of the batch are accepted."""
        value, _ = estimate_cumulant(self.batch, [lambda batch: batch.level(1)[:, 0] ** 2])
        self.assertAlmostEqual(value.real, float(np.mean(self.x ** 2)), places=12)

    def test_rejects_few_batches(self):
        """Test that batch means need at least 20 batches."""
        with self.assertRaises(ContinuousSpecError):
            estimate_cumulant(self.batch, [self.x], batches=10)

    def test_rejects_wrong_length(self):
        """Test a functional that does not run over the samples."""
        with self.assertRaises(ContinuousSpecError):
            estimate_cumulant(self.batch, [self.x[:-1]])


class ContinuousLoopEquationTest(SimpleTestCase):
    """Statistical tests for the continuous loop equations."""

    def check(self, spec, counts, samples, seed):
        batch = sample(spec, samples, burn_in=1000, seed=seed)
        obs, v = default_points(spec, counts)
        report = verify_continuous_loop_equation(batch, obs, v)
        self.assertTrue(report.passed, msg=f"|∮| = {report.residual:.3e}, stderr {report.stderr:.3e}")
        self.assertGreater(report.stderr, 0.0)
        return report

    def test_single_level(self):
        """Test N = k = 2 with V = y²/2 on [−2, 2]."""
        self.check(ContinuousSpec.quadratic(1.0, 2, 2), {}, 100_000, seed=41)

    def test_two_levels_no_points(self):
        """Test N = 2, k = 1 with 𝔐 empty, and that doubling the samples does not grow the residual."""
        spec = ContinuousSpec.quadratic(0.7, 2, 1)
        small = self.check(spec, {}, 50_000, seed=42)
        large = self.check(spec, {}, 100_000, seed=43)
        self.assertTrue(doubling_check(small, large))

    def test_three_levels_one_point(self):
        """Test N = 3, k = 1 with one point on the middle level."""
        report = self.check(ContinuousSpec.quadratic(0.7, 3, 1), {2: 1}, 100_000, seed=44)
        self.assertEqual(report.points["points"], {"2": [3.5 + 0j]})

    def test_perturbed_functional_is_rejected(self):
        """Test that adding 𝒢ᴺ to 𝔖 is detected at a sample size where the true 𝔖 passes."""
        spec = ContinuousSpec.quadratic(1.0, 2, 2)
        batch = sample(spec, 50_000, burn_in=1000, seed=45)
        obs, v = default_points(spec, {})
        baseline = verify_continuous_loop_equation(batch, obs, v)
        self.assertTrue(baseline.passed)

        def perturbed(spec, z, G, dG):
            return s_functional(spec, z, G, dG) + G[spec.N]

        with mock.patch("apps.continuous.utils.loop_equations.s_functional", perturbed):
            report = verify_continuous_loop_equation(batch, obs, v)
        self.assertFalse(report.passed)
        self.assertGreater(report.residual, 2.0 * report.sigmas * report.stderr)

    def test_rejects_bad_setup(self):
        """Test too many points and points inside the contour."""
        spec = ContinuousSpec.quadratic(0.7, 2, 1)
        batch = sample(spec, 400, burn_in=10, seed=1, chains=16)
        obs, v = default_points(spec, {1: 1, 2: 2})
        with self.assertRaises(CumulantError):
            verify_continuous_loop_equation(batch, obs, v)
        obs, _ = default_points(spec, {2: 1})
        with self.assertRaises(CumulantError):
            verify_continuous_loop_equation(batch, obs, 0.5 + 0.1j)
        with self.assertRaises(CumulantError):
            verify_continuous_loop_equation(batch, ObservableSet.from_mapping(1.0, {2: (1.0,)}), -5.0)


class DiffuseLimitTest(SimpleTestCase):
    """Tests for the lattice-to-continuum experiment."""

    def test_uniform_single_particle(self):
        """Test θ = 1, N = 1, V ≡ 0 on [0, 1]: the moment error is exactly 1/L."""
        spec = ContinuousSpec(1.0, 1, 1, 0.0, 1.0)
        report = diffuse_limit_experiment(spec, [5, 10, 20, 40])
        for row in report.rows:
            self.assertEqual(row.method, "exact")
            self.assertAlmostEqual(row.error, 1.0 / row.L, places=9)
        self.assertTrue(report.decreasing)
        self.assertTrue(report.passed)

    def test_two_levels_quadratic(self):
        """Test N = 2, k = 1, θ = 0.7, quadratic V on [−2, 2]."""
        report = diffuse_limit_experiment(ContinuousSpec.quadratic(0.7, 2, 1), [5, 10, 20, 40])
        errors = report.errors
        self.assertLess(errors[-1], errors[0])
        self.assertTrue(report.decreasing)
        self.assertTrue(report.passed)
        self.assertEqual(report.to_csv().splitlines()[0].split(",")[0], "L")
        self.assertEqual(len(report.to_csv().splitlines()), 5)

    def test_index_reversal(self):
        """Test that the largest lattice particle becomes y^N_N."""
        ell = np.array([5.3, 2.6, -0.9])
        x = rescale_level(ell, -2.0, 10.0)
        self.assertAlmostEqual(x[-1], -2.0 + 0.53, places=14)
        self.assertAlmostEqual(x[0], -2.0 - 0.09, places=14)
        self.assertTrue(np.all(np.diff(x) > 0))

    def test_scaled_weight(self):
        """Test w_N(x) = exp(−NθV(a− + x/L)) from composed coefficients."""
        spec = ContinuousSpec.quadratic(0.7, 2, 1)
        weight = scaled_top_weight(spec, 10)
        for x in (0.0, 3.0, 17.5):
            expected = -2 * 0.7 * (-2.0 + x / 10) ** 2 / 2
            self.assertAlmostEqual(complex(weight.log_value(np.array([x]))[0]).real, expected, places=12)

    def test_quadrature_reference(self):
        """Test the N = 1 reference against the uniform law."""
        m1, m2 = continuous_moments_quadrature(ContinuousSpec(1.0, 1, 1, 0.0, 1.0))
        self.assertAlmostEqual(m1, 0.5, places=10)
        self.assertAlmostEqual(m2, 1.0 / 3.0, places=10)

    def test_rejects_bad_scales(self):
        """Test that L values must increase."""
        with self.assertRaises(ContinuousSpecError):
            diffuse_limit_experiment(ContinuousSpec(1.0, 1, 1, 0.0, 1.0), [10, 5])


    def test_gap_against_uncertainty(self):
        """Test the 3× combined uncertainty column, which exact references never satisfy."""
        row = DiffuseLimitRow(40, 160, "exact", (0.51, 0.34), (0.5, 1.0 / 3.0))
        self.assertAlmostEqual(row.error, 0.01, places=12)
        self.assertFalse(row.within_uncertainty)
        row = DiffuseLimitRow(40, 160, "mcmc", (0.51, 0.34), (0.5, 1.0 / 3.0), 0.003, 0.004)
        self.assertAlmostEqual(row.uncertainty, 0.005, places=12)
        self.assertTrue(row.within_uncertainty)
        report = DiffuseLimitReport(spec={}, rows=[row])
        self.assertTrue(report.gap_within_uncertainty)
        self.assertTrue(report.as_dict()["rows"][0]["within_uncertainty"])
        self.assertFalse(DiffuseLimitReport(spec={}).gap_within_uncertainty)

    def test_exact_reference_is_reported(self):
        """Test that the quadrature reference is named and carries no uncertainty."""
        report = diffuse_limit_experiment(ContinuousSpec(1.0, 1, 1, 0.0, 1.0), [5, 10])
        self.assertEqual(report.as_dict()["reference"], "quadrature")
        self.assertFalse(report.gap_within_uncertainty)
        self.assertEqual(report.to_csv().splitlines()[0].split(",")[-1], "within_uncertainty")

    def test_sampled_reference(self):
        """Test that a sampled continuous reference gives every row a nonzero uncertainty."""
        spec = ContinuousSpec.quadratic(0.7, 2, 1)
        report = diffuse_limit_experiment(spec, [5, 10], seed=8, continuous_samples=20_000, reference="mc")
        self.assertEqual(report.reference, "mc")
        for row in report.rows:
            self.assertEqual(row.method, "exact")
            self.assertGreater(row.uncertainty, 0.0)
        self.assertEqual(report.rows[0].continuous, report.rows[1].continuous)

    def test_rejects_bad_reference(self):
        """Test an unknown reference and quadrature above two particles."""
        with self.assertRaises(ContinuousSpecError):
            diffuse_limit_experiment(ContinuousSpec(1.0, 1, 1, 0.0, 1.0), [5], reference="exact")
        with self.assertRaises(ContinuousSpecError):
            diffuse_limit_experiment(ContinuousSpec.quadratic(0.7, 3, 1), [5], reference="quadrature")


class StorageTest(SimpleTestCase):
    """Tests for the binary batch layout."""

    def test_write_and_read(self):
        """Test that a written batch reads back with its spec and diagnostics."""
        spec = ContinuousSpec.quadratic(0.7, 3, 1)
        batch = sample(spec, 96, burn_in=20, seed=2 ** 63 + 5, chains=16)
        with tempfile.TemporaryDirectory() as directory:
            path = write_batch(batch, Path(directory) / "batch.bin")
            self.assertTrue(sidecar_path(path).exists())
            self.assertEqual(path.stat().st_size, 56 + 8 * len(batch) * spec.dimension)
            loaded = read_batch(path)
        self.assertEqual(loaded.spec, spec)
        self.assertEqual(loaded.seed, 2 ** 63 + 5)
        self.assertEqual(loaded.chains, 16)
        np.testing.assert_array_equal(loaded.samples, batch.samples)

    def test_truncated_file(self):
        """Test that a short body is rejected."""
        batch = synthetic_batch(size=40)
        with tempfile.TemporaryDirectory() as directory:
            path = write_batch(batch, Path(directory) / "batch.bin")
            path.write_bytes(path.read_bytes()[:-8])
            with self.assertRaises(ContinuousSpecError):
                read_batch(path)

    def test_missing_sidecar(self):
        """Test that a batch whose sidecar is gone is refused instead of read with V ≡ 0."""
        spec = ContinuousSpec.quadratic(0.7, 2, 1)
        batch = sample(spec, 64, burn_in=10, seed=4, chains=16)
        with tempfile.TemporaryDirectory() as directory:
            path = write_batch(batch, Path(directory) / "batch.bin")
            sidecar_path(path).unlink()
            with self.assertRaises(ContinuousSpecError):
                read_batch(path)

    def test_sidecar_without_potential(self):
        """Test that a sidecar must record the potential."""
        batch = synthetic_batch(size=40)
        with tempfile.TemporaryDirectory() as directory:
            path = write_batch(batch, Path(directory) / "batch.bin")
            sidecar_path(path).write_text('{"diagnostics": {}}')
            with self.assertRaises(ContinuousSpecError):
                read_batch(path)
