import unittest

import numpy as np

import odflow as o
from odflow import transform
from odflow.odflowerrors import ConfigError, FlowError


class TestDCT(unittest.TestCase):
    def test_orthonormal(self):
        for n in (1, 2, 60, 150):
            D = o.dct_matrix(n)
            np.testing.assert_allclose(np.eye(n), D.matrix @ D.matrix.T,
                                       atol=1e-12)

    def test_two_points(self):
        c = o.dct_matrix(2).analyze([1.0, 0.0])
        np.testing.assert_allclose([0.7071067811865476] * 2, c)

    def test_constant_is_dc_only(self):
        D = o.dct_matrix(10)
        c = D.analyze(np.full(10, 2.0))
        self.assertAlmostEqual(2.0 * np.sqrt(10), c[0])
        np.testing.assert_allclose(0.0, c[1:], atol=1e-12)

    def test_parseval_and_inverse(self):
        rng = np.random.default_rng(5)
        D = o.dct_matrix(63)
        x = rng.normal(size=(4, 63))
        c = D.analyze(x)
        np.testing.assert_allclose((x ** 2).sum(axis=1),
                                   (c ** 2).sum(axis=1))
        np.testing.assert_allclose(x, D.synthesize(c), atol=1e-12)
        self.assertAlmostEqual(np.abs(c).sum(), D.l1(x))

    def test_cached_and_read_only(self):
        self.assertIs(o.dct_matrix(7), o.dct_matrix(7))
        with self.assertRaises(ValueError):
            o.dct_matrix(7).matrix[0, 0] = 1.0

    def test_invalid(self):
        with self.assertRaises(FlowError):
            o.dct_matrix(0)
        with self.assertRaises(FlowError):
            o.dct_matrix(4).analyze(np.ones(5))


class TestIdentity(unittest.TestCase):
    def test_identity(self):
        D = o.identity_matrix(5)
        self.assertTrue(D.is_identity)
        self.assertFalse(o.dct_matrix(5).is_identity)
        x = np.array([[1.0, -2.0, 0.0, 3.0, 0.5]])
        np.testing.assert_array_equal(x, D.analyze(x))
        np.testing.assert_array_equal(x, D.synthesize(x))
        self.assertEqual(6.5, D.l1(x))
        with self.assertRaises(ValueError):
            D.matrix[0, 0] = 2.0

    def test_by_name(self):
        self.assertIs(o.dct_matrix(6), transform.transform_matrix("dct", 6))
        self.assertIs(o.identity_matrix(6),
                      transform.transform_matrix("identity", 6))
        with self.assertRaises(ConfigError):
            transform.transform_matrix("wavelet", 6)
        with self.assertRaises(FlowError):
            o.identity_matrix(0)


if __name__ == "__main__":
    unittest.main()
