import os
import shutil
import tempfile
import unittest
from unittest import mock

from odflow import config
from odflow.odflowerrors import ConfigError


class TestSettings(unittest.TestCase):
    def setUp(self):
        self.tolerances = config.get_tolerances()

    def tearDown(self):
        config.set_output_root(None)
        config.set_tolerances(*self.tolerances)

    def test_output_root(self):
        with mock.patch.dict(os.environ, {config.OUTPUT_ENV: ""}):
            self.assertEqual(config.DEFAULT_OUTPUT_ROOT,
                             config.get_output_root())
        with mock.patch.dict(os.environ, {config.OUTPUT_ENV: "/tmp/od"}):
            self.assertEqual("/tmp/od", config.get_output_root())
            config.set_output_root("runs")
            self.assertEqual("runs", config.get_output_root())

    def test_tolerances(self):
        config.set_tolerances(inequality=1e-6)
        self.assertEqual((self.tolerances[0], 1e-6), config.get_tolerances())
        with self.assertRaises(ConfigError):
            config.set_tolerances(equality=0)
        with self.assertRaises(ConfigError):
            config.set_tolerances(inequality=-1.0)


class TestConfigFile(unittest.TestCase):
    def setUp(self):
        self.dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.dir)

    def write(self, text):
        path = os.path.join(self.dir, "cfg.json")
        with open(path, "w") as f:
            f.write(text)
        return path

    def test_load(self):
        path = self.write('{"n_t": 40, "solver": {"epsilon": 0.001}}')
        self.assertEqual({"n_t": 40, "solver": {"epsilon": 0.001}},
                         config.load_config_file(path))

    def test_bad_files(self):
        with self.assertRaises(ConfigError):
            config.load_config_file(os.path.join(self.dir, "missing.json"))
        with self.assertRaises(ConfigError):
            config.load_config_file(self.write("{n_t: 40"))
        with self.assertRaises(ConfigError):
            config.load_config_file(self.write("[1, 2]"))


class TestMerge(unittest.TestCase):
    def test_later_layers_win(self):
        merged = config.merge_settings(
            {"n_t": 60, "seed": 0, "solver": {"epsilon": 1e-6, "seed": 0}},
            {"n_t": 40, "solver": {"epsilon": 1e-3}},
            {"n_t": None, "seed": 7},
            None)
        self.assertEqual({"n_t": 40, "seed": 7,
                          "solver": {"epsilon": 1e-3, "seed": 0}}, merged)

    def test_defaults_untouched(self):
        defaults = {"solver": {"epsilon": 1e-6}}
        config.merge_settings(defaults, {"solver": {"epsilon": 0.0}})
        self.assertEqual({"solver": {"epsilon": 1e-6}}, defaults)


if __name__ == "__main__":
    unittest.main()
