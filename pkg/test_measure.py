#!/usr/bin/env python3
"""
Tests for the seeded measurement model and the observation container.
"""

import os
import sys
import tempfile
import unittest

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from exceptions import ArtifactIOError, DimensionError, InvalidParameterError
from measure import (
    GaussianEnsemble,
    StreamPurpose,
    compose_observations,
    derive_seed,
    dump_observations,
    load_observations,
    make_rng,
    sample_corruption,
    sample_ensemble,
    sample_noise,
    sample_signal,
    substream,
)
from models.schemas import CorruptionSpec, NoiseSpec, ObservationMetadata


class TestSeeding(unittest.TestCase):

    def test_same_seed_same_stream(self):
        np.testing.assert_array_equal(make_rng(5).standard_normal(4), make_rng(5).standard_normal(4))

    def test_substreams_are_distinct(self):
        a = make_rng(substream(1, 0, StreamPurpose.SIGNAL)).standard_normal(8)
        b = make_rng(substream(1, 0, StreamPurpose.NOISE)).standard_normal(8)
        c = make_rng(substream(1, 1, StreamPurpose.SIGNAL)).standard_normal(8)
        self.assertFalse(np.array_equal(a, b))
        self.assertFalse(np.array_equal(a, c))

    def test_derive_seed_is_stable_and_non_negative(self):
        seed = derive_seed(substream(3, 2))
        self.assertEqual(seed, derive_seed(substream(3, 2)))
        self.assertGreaterEqual(seed, 0)
        self.assertLess(seed, 2 ** 63)


class TestGaussianEnsemble(unittest.TestCase):

    def setUp(self):
        self.A = sample_ensemble(6, 30, 7)
        self.x = sample_signal(6, 8)

    def test_shapes_and_reproducibility(self):
        self.assertEqual((self.A.num_rows, self.A.num_cols), (30, 6))
        np.testing.assert_array_equal(self.A.matrix, sample_ensemble(6, 30, 7).matrix)

    def test_matrix_is_read_only(self):
        with self.assertRaises(ValueError):
            self.A.matrix[0, 0] = 1.0

    def test_caller_matrix_untouched(self):
        matrix = np.ones((3, 2))
        GaussianEnsemble(matrix)
        matrix[0, 0] = 5.0
        self.assertEqual(matrix[0, 0], 5.0)

    def test_operations_agree_with_dense_algebra(self):
        M = self.A.matrix
        w = make_rng(9).standard_normal(30)
        np.testing.assert_allclose(self.A.apply(self.x), np.abs(M @ self.x))
        np.testing.assert_allclose(self.A.adjoint_weighted(w), M.T @ w / 30)
        np.testing.assert_allclose(self.A.quadratic_form_apply(w, self.x), M.T @ (w * (M @ self.x)) / 30)
        self.assertAlmostEqual(self.A.row_inner(4, self.x), float(M[4] @ self.x))

    def test_dimension_errors(self):
        with self.assertRaises(DimensionError):
            self.A.apply(np.ones(5))
        with self.assertRaises(DimensionError):
            self.A.row_inner(30, self.x)
        with self.assertRaises(DimensionError):
            sample_ensemble(0, 10, 1)


class TestCorruptionAndNoise(unittest.TestCase):

    def test_corruption_support_and_magnitude(self):
        eta = sample_corruption(1000, CorruptionSpec(fraction=0.05, magnitude_scale=0.5), 4.0, 1)
        self.assertEqual(np.count_nonzero(eta), 50)
        np.testing.assert_array_equal(np.abs(eta[eta != 0]), np.full(50, 2.0))

    def test_zero_fraction(self):
        eta = sample_corruption(100, CorruptionSpec(fraction=0.0), 1.0, 1)
        np.testing.assert_array_equal(eta, np.zeros(100))

    def test_bad_fraction(self):
        spec = CorruptionSpec.model_construct(fraction=1.0, magnitude_scale=1.0)
        with self.assertRaises(InvalidParameterError):
            sample_corruption(10, spec, 1.0, 1)

    def test_noise_bounds(self):
        eps = sample_noise(500, NoiseSpec(level=2.0), seed=4)
        self.assertTrue(np.all(eps >= 0))
        self.assertTrue(np.all(eps < 2.0))
        np.testing.assert_array_equal(sample_noise(5, NoiseSpec(level=0.0)), np.zeros(5))

    def test_noise_uses_spec_seed_by_default(self):
        spec = NoiseSpec(level=1.0, seed=12)
        np.testing.assert_array_equal(sample_noise(20, spec), sample_noise(20, spec))


class TestSampleStatistics(unittest.TestCase):

    def test_signal_is_standard_normal(self):
        x = sample_signal(10000, 41)
        self.assertTrue(-0.05 <= float(np.mean(x)) <= 0.05)
        self.assertTrue(0.94 <= float(np.var(x)) <= 1.06)

    def test_ensemble_covariance_concentrates(self):
        A = sample_ensemble(200, 2000, 42).matrix
        deviation = np.linalg.norm(A.T @ A / 2000 - np.eye(200), 2)
        # top edge of the Marchenko-Pastur law at n/m = 0.1 is (1 + sqrt(0.1))^2 - 1 ~ 0.73
        self.assertLessEqual(deviation, 0.85)

        A = sample_ensemble(50, 2000, 43).matrix
        self.assertLessEqual(np.linalg.norm(A.T @ A / 2000 - np.eye(50), 2), 0.5)

    def test_corruption_supports_vary_with_seed(self):
        spec = CorruptionSpec(fraction=0.05, magnitude_scale=1.0)
        distinct = 0
        for k in range(20):
            a = np.flatnonzero(sample_corruption(1000, spec, 1.0, 2 * k))
            b = np.flatnonzero(sample_corruption(1000, spec, 1.0, 2 * k + 1))
            distinct += not np.array_equal(a, b)
        self.assertGreaterEqual(distinct, 19)

    def test_noise_mean_is_half_the_level(self):
        eps = sample_noise(10000, NoiseSpec(level=2.0), 44)
        self.assertTrue(0.95 <= float(np.mean(eps)) <= 1.05)


class TestObservations(unittest.TestCase):

    def setUp(self):
        self.A = sample_ensemble(5, 40, 1)
        self.x_star = sample_signal(5, 2)
        self.eta = sample_corruption(40, CorruptionSpec(fraction=0.1, magnitude_scale=1.0),
                                     float(np.linalg.norm(self.x_star)), 3)
        self.eps = sample_noise(40, NoiseSpec(level=0.5), seed=4)

    def test_composition(self):
        obs = compose_observations(self.A, self.x_star, self.eta, self.eps)
        gt = obs.ground_truth
        np.testing.assert_array_equal(obs.y, (gt.y_star + gt.eta_star) + gt.eps)
        np.testing.assert_allclose(obs.y - gt.y_star - gt.eps, gt.eta_star, atol=1e-12)

    def test_composition_length_check(self):
        with self.assertRaises(DimensionError):
            compose_observations(self.A, self.x_star, self.eta[:-1], self.eps)

    def test_container_round_trip(self):
        obs = compose_observations(self.A, self.x_star, self.eta, self.eps)
        meta = ObservationMetadata(n=5, m=40, seed=1, alpha=0.1, magnitude_scale=1.0, p=0.5)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "obs.bin")
            dump_observations(path, obs, meta)
            loaded, loaded_meta = load_observations(path)

        self.assertTrue(loaded_meta.has_ground_truth)
        self.assertEqual(loaded_meta.alpha, 0.1)
        np.testing.assert_array_equal(loaded.y, obs.y)
        np.testing.assert_array_equal(loaded.ground_truth.x_star, self.x_star)
        np.testing.assert_array_equal(loaded.ground_truth.eps, self.eps)

    def test_container_rejects_foreign_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "junk.bin")
            with open(path, "wb") as fh:
                fh.write(b"not an observation file at all")
            with self.assertRaises(ArtifactIOError):
                load_observations(path)

    def test_missing_container(self):
        with self.assertRaises(ArtifactIOError):
            load_observations("/nonexistent/obs.bin")


if __name__ == "__main__":
    unittest.main()
