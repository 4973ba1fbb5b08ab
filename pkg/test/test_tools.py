import json
import os
import tempfile
import unittest

import numpy as np

import odflow as o
from odflow import tools
from odflow.odflowerrors import InputError


def chain_truth(seed=2):
    return o.gen_ground_truth(o.GenConfig(tau_max=2, n_t=12, seed=seed),
                              o.build_chain())


class TempDirTestCase(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.dir = self._tmp.name

    def tearDown(self):
        self._tmp.cleanup()

    def path(self, *names):
        return os.path.join(self.dir, *names)

    def write(self, name, text):
        with open(self.path(name), "w") as f:
            f.write(text)
        return self.path(name)


class TestFlowFiles(TempDirTestCase):
    def test_round_trip(self):
        x = o.FlowSeries(np.array([[0.1, 1.0 / 3.0], [2.0, 0.0]]), -1,
                         ["1", "4"])
        tools.write_flow_csv(self.path("x.csv"), x)
        with open(self.path("x.csv")) as f:
            self.assertEqual("entity,-1,0", f.readline().strip())
        again = tools.read_flow_csv(self.path("x.csv"))
        self.assertEqual(-1, again.t_begin)
        self.assertEqual(("1", "4"), again.labels)
        np.testing.assert_array_equal(x.values, again.values)
        paths = tools.read_flow_csv(self.path("x.csv"), o.PathFlowSeries)
        self.assertIsInstance(paths, o.PathFlowSeries)

    def test_malformed(self):
        for text in ("t,1,2\n1,0,0\n", "entity,1,3\n1,0,0\n",
                     "entity,1,2\n1,0,x\n", "entity,1,2\n1,0\n"):
            with self.assertRaises(InputError):
                tools.read_flow_csv(self.write("bad.csv", text))
        with self.assertRaises(InputError):
            tools.read_flow_csv(self.path("missing.csv"))


class TestTensorFiles(TempDirTestCase):
    def test_round_trip(self):
        truth = chain_truth()
        tools.write_tensor_csv(self.path("P.csv"), truth.P)
        with open(self.path("P.csv")) as f:
            lines = f.read().splitlines()
        self.assertEqual("step,link,origin,value", lines[0])
        self.assertEqual(4, len(lines))
        self.assertTrue(lines[1].startswith("1,1,1,"))
        P = tools.read_tensor_csv(self.path("P.csv"), truth.network,
                                  truth.paths.origins, 2)
        np.testing.assert_array_equal(truth.P.values, P.values)
        np.testing.assert_array_equal(truth.P.support, P.support)

    def test_bad_entries(self):
        net = o.build_chain()
        for body in ("1,1,3,0.5\n", "3,1,1,0.5\n", "1,1,1,x\n", "1,1\n"):
            path = self.write("P.csv", "step,link,origin,value\n" + body)
            with self.assertRaises(InputError):
                tools.read_tensor_csv(path, net, (0, 1), 2)
        path = self.write("P.csv", "a,b\n")
        with self.assertRaises(InputError):
            tools.read_tensor_csv(path, net, (0, 1), 2)


class TestManifest(TempDirTestCase):
    def test_hash(self):
        first = {"b": 1, "a": [1, 2]}
        second = {"a": [1, 2], "b": 1, "manifest_hash": "ignored"}
        self.assertEqual(tools.manifest_hash(first),
                         tools.manifest_hash(second))
        self.assertNotEqual(tools.manifest_hash(first),
                            tools.manifest_hash({"b": 2, "a": [1, 2]}))

    def test_write_read_verify(self):
        self.write("data.csv", "entity,1\n1,1.0\n")
        digest = tools.write_manifest(self.dir, {"kind": "test"})
        self.assertEqual(digest, tools.write_manifest(self.dir,
                                                      {"kind": "test"}))
        manifest = tools.read_manifest(self.dir)
        self.assertEqual(digest, manifest["manifest_hash"])
        self.assertEqual(["data.csv"], sorted(manifest["files"]))
        self.assertIn("numpy", manifest["versions"])
        self.write("data.csv", "entity,1\n1,2.0\n")
        with self.assertRaises(InputError):
            tools.read_manifest(self.dir)
        self.assertEqual("test", tools.read_manifest(self.dir,
                                                     verify=False)["kind"])

    def test_missing(self):
        with self.assertRaises(InputError):
            tools.read_manifest(self.path("nowhere"))
        with self.assertRaises(InputError):
            tools.read_manifest(self.dir)
        with self.assertRaises(InputError):
            tools.read_json(self.write("bad.json", "{"))


class TestDirectories(TempDirTestCase):
    def test_ground_truth(self):
        truth = chain_truth()
        directory = self.path("truth")
        digest = tools.save_ground_truth(truth, directory, {"tau_max": 2})
        self.assertEqual(
            ["P.csv", "manifest.json", "network.txt", "path_flows.csv",
             "s.csv", "x.csv", "y.csv"], sorted(os.listdir(directory)))
        loaded = tools.load_ground_truth(directory)
        self.assertEqual(truth.network, loaded.network)
        self.assertEqual(truth.config, loaded.config)
        np.testing.assert_array_equal(truth.y.values, loaded.y.values)
        np.testing.assert_array_equal(truth.x.values, loaded.x.values)
        np.testing.assert_array_equal(truth.P.values, loaded.P.values)
        np.testing.assert_allclose(truth.od_split, loaded.od_split)
        np.testing.assert_allclose(truth.path_split, loaded.path_split)
        loaded.check()

        manifest, net, y = tools.read_link_flows(directory)
        self.assertEqual(digest, manifest["manifest_hash"])
        self.assertEqual(12, y.n_columns)
        self.assertEqual(truth.paths, tools.path_set_of(directory))
        with self.assertRaises(InputError):
            tools.load_estimate(directory)

    def test_estimate(self):
        truth = chain_truth(4)
        estimate = o.solve(truth.y, truth.paths,
                           o.SolverConfig(max_iterations=30))
        directory = self.path("estimate")
        tools.save_estimate(estimate, truth.paths, directory, max_points=5)
        with open(self.path("estimate", tools.REPORT_FILE)) as f:
            report = json.load(f)
        self.assertLessEqual(len(report["nmse"]), 5)
        loaded = tools.load_estimate(directory)
        np.testing.assert_array_equal(estimate.od.values, loaded.od.values)
        np.testing.assert_array_equal(estimate.P.values, loaded.P.values)
        self.assertEqual(estimate.x_full.t_begin, loaded.x_full.t_begin)
        self.assertEqual(estimate.report.termination,
                         loaded.report.termination)
        self.assertEqual(truth.paths, tools.path_set_of(directory))
        with self.assertRaises(InputError):
            tools.load_ground_truth(directory)

    def test_histogram(self):
        hist = o.histogram([0.0, 0.4, 0.6], 0.5)
        tools.write_histogram_csv(self.path("h.csv"), hist)
        with open(self.path("h.csv")) as f:
            lines = f.read().splitlines()
        self.assertEqual("bin_left,bin_right,percent", lines[0])
        rows = [[float(v) for v in line.split(",")] for line in lines[1:]]
        np.testing.assert_allclose(
            [[0.0, 0.5, 200.0 / 3], [0.5, 1.0, 100.0 / 3]], rows)


if __name__ == "__main__":
    unittest.main()
