import unittest

import numpy as np

import odflow as o
from odflow import metrics
from odflow.odflowerrors import MetricsError


class TestNMSE(unittest.TestCase):
    def test_values(self):
        y = o.FlowSeries(np.array([[1.0, 1.0]]))
        self.assertEqual(0.0, o.nmse(y, y))
        self.assertEqual(0.5, o.nmse(np.array([[2.0, 1.0]]), y))

    def test_errors(self):
        with self.assertRaises(MetricsError):
            o.nmse(np.ones(2), np.zeros(2))
        with self.assertRaises(MetricsError):
            o.nmse(np.ones(2), np.ones(3))


class TestHistogram(unittest.TestCase):
    def test_four_bins(self):
        h = o.histogram(np.arange(-1, 1, 0.01) + 0.005, 0.5)
        np.testing.assert_allclose([-1.0, -0.5, 0.0, 0.5, 1.0], h.edges)
        np.testing.assert_allclose([25.0] * 4, h.percent)
        self.assertEqual((-1.0, -0.5, 25.0), h.rows()[0])

    def test_single_value(self):
        h = o.histogram([0.0], 0.001)
        np.testing.assert_allclose([0.0, 0.001], h.edges)
        np.testing.assert_allclose([100.0], h.percent)
        h = o.histogram([0.0015, 0.0015], 0.001)
        np.testing.assert_allclose([0.001, 0.002], h.edges)

    def test_bins_cover_all_entries(self):
        rng = np.random.default_rng(0)
        h = o.histogram(rng.normal(scale=0.01, size=1000))
        self.assertAlmostEqual(100.0, h.percent.sum())
        steps = np.diff(h.edges)
        np.testing.assert_allclose(0.001, steps)
        np.testing.assert_allclose(np.round(h.edges / 0.001), h.edges / 0.001,
                                   atol=1e-9)

    def test_errors(self):
        with self.assertRaises(MetricsError):
            o.histogram([1.0], 0.0)
        with self.assertRaises(MetricsError):
            o.histogram([], 0.1)


class TestRelativeErrors(unittest.TestCase):
    def test_floor(self):
        s = np.array([[1.0, 1e-7], [2.0, 4.0]])
        s_hat = np.array([[1.1, 5.0], [1.0, 4.0]])
        summary = o.relative_errors(s_hat, s)
        self.assertEqual(3, summary.n_included)
        self.assertEqual(1, summary.n_excluded)
        np.testing.assert_allclose([0.1, -0.5, 0.0], summary.errors)
        self.assertAlmostEqual(0.2, summary.mean_abs)
        d = summary.to_dict()
        self.assertAlmostEqual(0.5, d["max_abs"])
        self.assertEqual(1e-6, d["floor"])

    def test_band(self):
        summary = metrics.ErrorSummary(np.arange(1.0, 6.0), 0, 1e-6)
        self.assertAlmostEqual(1.1, summary.low)
        self.assertAlmostEqual(4.9, summary.high)
        self.assertTrue(summary.band_within(5.0))
        self.assertFalse(summary.band_within(4.0))

    def test_exact_estimate(self):
        s = o.FlowSeries(np.full((3, 4), 2.0))
        summary = o.relative_errors(s, s)
        self.assertEqual(0.0, summary.mean_abs)
        self.assertTrue(summary.band_within(0.0))
        self.assertEqual([(0.0, 0.001, 100.0)], summary.histogram().rows())

    def test_everything_excluded(self):
        with self.assertLogs("odflow.metrics", "WARNING"):
            summary = o.relative_errors(np.ones(3), np.zeros(3))
        self.assertIsNone(summary.mean_abs)
        self.assertFalse(summary.band_within(1.0))
        self.assertEqual([None, None], summary.to_dict()["band"])
        self.assertIsNone(summary.to_dict()["max_abs"])

    def test_shape_mismatch(self):
        with self.assertRaises(MetricsError):
            o.relative_errors(np.ones(3), np.ones(4))

    def test_merge(self):
        first = o.relative_errors(np.array([1.1, 2.0]), np.array([1.0, 1e-9]))
        second = o.relative_errors(np.array([0.9]), np.array([1.0]))
        merged = metrics.merge_summaries([first, second])
        np.testing.assert_allclose([0.1, -0.1], merged.errors)
        self.assertEqual(1, merged.n_excluded)
        with self.assertRaises(MetricsError):
            metrics.merge_summaries([])


if __name__ == "__main__":
    unittest.main()
