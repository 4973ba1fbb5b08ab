import contextlib
import io
import json
import os
import tempfile
import unittest
from unittest import mock

import numpy as np

from odflow import cli, config
from odflow.metrics import ErrorSummary
from odflow.odflowerrors import PreconditionError, SolverError

CHAIN = ["--network", "chain", "--tau-max", "2", "--nt", "12"]


def run(argv):
    """ exit code and standard output of one command """
    out = io.StringIO()
    with contextlib.redirect_stdout(out), \
            contextlib.redirect_stderr(io.StringIO()):
        try:
            code = cli.main(argv)
        except SystemExit as e:
            code = e.code
    return code, out.getvalue()


class CliTestCase(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.dir = self._tmp.name

    def tearDown(self):
        self._tmp.cleanup()

    def path(self, *names):
        return os.path.join(self.dir, *names)

    def write_config(self, content):
        path = self.path("run.json")
        with open(path, "w") as f:
            f.write(content if isinstance(content, str)
                    else json.dumps(content))
        return path


class TestParser(CliTestCase):
    def parse(self, *argv):
        return cli.make_parser().parse_args(list(argv))

    def test_version(self):
        code, out = run(["--version"])
        self.assertEqual(0, code)

    def test_usage_errors(self):
        for argv in ([], ["repro", "4x4"], ["check", "--nt", "x"],
                     ["check", "--network", "chain", "--grid", "3x3"],
                     ["generate", "--unidirectional", "--bidirectional"]):
            self.assertEqual(1, run(argv)[0], argv)

    def test_grid_direction(self):
        args = self.parse("check", "--grid", "3x3")
        self.assertEqual("grid:3x3:bi", cli.experiment_config(args).network)
        args = self.parse("check", "--grid", "3x3", "--unidirectional")
        self.assertEqual("grid:3x3:uni", cli.experiment_config(args).network)
        args = self.parse("check", "--grid", "2x4", "--bidirectional")
        self.assertEqual("grid:2x4:bi", cli.experiment_config(args).network)

    def test_precedence(self):
        path = self.write_config({"n_t": 14, "seed": 5,
                                  "solver": {"epsilon": 1e-4}})
        args = self.parse("repro", "3x3bi", "--config", path, "--seed", "8",
                          "--max-iter", "7")
        preset = {"network": "3x3bi", "n_t": 60, "trials": 100}
        exp = cli.experiment_config(args, preset)
        self.assertEqual(14, exp.n_t)
        self.assertEqual(8, exp.seed)
        self.assertEqual(100, exp.trials)
        self.assertEqual({"epsilon": 1e-4, "max_iterations": 7}, exp.solver)
        self.assertEqual(8, exp.solver_config(exp.seed).seed)
        self.assertEqual(14, exp.gen_config(3).n_t)
        defaults = cli.experiment_config(self.parse("check"))
        self.assertEqual(cli.ExperimentConfig(), defaults)


class TestCommands(CliTestCase):
    def test_check(self):
        code, out = run(["check"] + CHAIN)
        self.assertEqual(0, code)
        report = json.loads(out)
        self.assertEqual([[1, 2, 3]], report["chain_subgraphs"])
        self.assertEqual(-1, report["multi"]["margin"])

    def test_pipeline(self):
        truth, estimate, evaluation = (self.path("truth"),
                                       self.path("estimate"),
                                       self.path("evaluation"))
        code, out = run(["generate"] + CHAIN + ["--seed", "3", "--out",
                                                truth])
        self.assertEqual(0, code)
        self.assertEqual(truth, json.loads(out)["directory"])
        self.assertTrue(os.path.exists(os.path.join(truth, "y.csv")))

        code, out = run(["solve", truth, "--out", estimate, "--max-iter",
                         "50"])
        self.assertEqual(0, code)
        result = json.loads(out)
        self.assertLessEqual(result["iterations"], 50)
        with open(os.path.join(estimate, "report.json")) as f:
            self.assertEqual(11, len(json.load(f)["descent"]))

        code, out = run(["evaluate", truth, estimate, "--out", evaluation])
        self.assertEqual(0, code)
        summary = json.loads(out)
        self.assertIn("nmse", summary)
        self.assertEqual(36, summary["n_included"] + summary["n_excluded"])
        for name in ("summary.json", "histogram.csv", "manifest.json"):
            self.assertTrue(os.path.exists(os.path.join(evaluation, name)))

    def test_output_root_from_environment(self):
        with mock.patch.dict(os.environ, {config.OUTPUT_ENV: self.dir}):
            code, out = run(["generate"] + CHAIN)
        self.assertEqual(0, code)
        directory = json.loads(out)["directory"]
        self.assertEqual(self.dir, os.path.dirname(directory))
        self.assertEqual("generate-chain-3-seed0", os.path.basename(directory))

    def test_bad_inputs(self):
        self.assertEqual(1, run(["solve", self.path("missing")])[0])
        truth = self.path("truth")
        run(["generate"] + CHAIN + ["--out", truth])
        with open(os.path.join(truth, "y.csv"), "a") as f:
            f.write("\n")
        self.assertEqual(1, run(["solve", truth, "--out",
                                 self.path("estimate")])[0])

    def test_config_errors(self):
        for content in ("{", "[1]", {"bogus": 1},
                        {"generator": {"n_t": 3}},
                        {"solver": {"tolerance": 1.0}}, {"trials": 0}):
            path = self.write_config(content)
            self.assertEqual(1, run(["check", "--config", path])[0], content)
        self.assertEqual(1, run(["check", "--config",
                                 self.path("missing.json")])[0])

    def test_repro_refuses_non_unique_setting(self):
        path = self.write_config({"network": "chain"})
        self.assertEqual(1, run(["repro", "3x3bi", "--config", path,
                                 "--out", self.path("repro")])[0])
        self.assertFalse(os.path.exists(self.path("repro")))

    def test_internal_errors(self):
        with mock.patch.object(cli, "uniqueness_report",
                               side_effect=RuntimeError("boom")):
            self.assertEqual(3, run(["check"] + CHAIN)[0])
        with mock.patch.object(cli, "uniqueness_report",
                               side_effect=SolverError("stuck")):
            self.assertEqual(3, run(["check"] + CHAIN)[0])
        with mock.patch.object(cli, "uniqueness_report",
                               side_effect=PreconditionError("short")):
            self.assertEqual(1, run(["check"] + CHAIN)[0])

    def test_horizon_too_short(self):
        truth = self.path("truth")
        code, _ = run(["generate", "--network", "chain", "--tau-max", "2",
                       "--nt", "2", "--sparsity", "2", "--out", truth])
        self.assertEqual(0, code)
        code, _ = run(["solve", truth, "--out", self.path("estimate")])
        self.assertEqual(1, code)
        self.assertFalse(os.path.exists(self.path("estimate")))

    def test_repro_single_trial(self):
        path = self.write_config({"n_t": 40})
        out = self.path("repro")
        code, _ = run(["repro", "3x3bi", "--config", path, "--trials", "1",
                       "--max-iter", "1", "--out", out])
        self.assertIn(code, (0, 2))
        with open(os.path.join(out, "summary.json")) as f:
            summary = json.load(f)
        self.assertEqual(code == 0, summary["passed"])
        self.assertEqual(3, len(summary["checks"]))
        self.assertEqual(1, len(summary["trials"]))
        for name in ("manifest.json", "histogram.csv"):
            self.assertTrue(os.path.exists(os.path.join(out, name)))
        trial = os.path.join(out, "trial-000")
        self.assertEqual(["estimate", "summary.json", "truth"],
                         sorted(os.listdir(trial)))


class TestAcceptance(unittest.TestCase):
    def summary(self, errors):
        return ErrorSummary(np.asarray(errors, dtype=float), 0, 1e-6)

    def test_bidirectional(self):
        good = self.summary([0.001, -0.002] * 50)
        passed, checks = cli.acceptance(
            "3x3bi", "plain", good, [{"nmse": 1e-7}] * 10)
        self.assertTrue(passed)
        self.assertEqual(3, len(checks))
        results = [{"nmse": 1e-7}] * 7 + [{"nmse": 1e-3}] * 3
        passed, checks = cli.acceptance("3x3bi", "plain", good, results)
        self.assertFalse(passed)
        self.assertEqual([True, True, False], [ok for _, ok in checks])

    def test_unidirectional(self):
        wide = self.summary(np.linspace(-0.5, 0.5, 101))
        self.assertTrue(cli.acceptance("3x3uni", "plain", wide, [])[0])
        self.assertFalse(cli.acceptance("3x3uni", "sparse", wide, [])[0])
        narrow = self.summary(np.linspace(-0.05, 0.05, 101))
        self.assertTrue(cli.acceptance("3x3uni", "sparse", narrow, [])[0])

    def test_large_networks(self):
        good = self.summary([0.001] * 10)
        for name in ("8x8bi", "geant"):
            self.assertTrue(cli.acceptance(name, "plain", good,
                                           [{"nmse": 1e-6}] * 3)[0])
            self.assertFalse(cli.acceptance(
                name, "plain", good, [{"nmse": 1e-6}, {"nmse": 2e-5}])[0])

    def test_no_criterion(self):
        wide = self.summary(np.linspace(-0.5, 0.5, 101))
        self.assertEqual((None, []),
                         cli.acceptance("3x3uni", "lasso", wide, []))


if __name__ == "__main__":
    unittest.main()
