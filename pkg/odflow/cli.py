"""
    Command line interface.

    odflow generate   draw a synthetic ground truth
    odflow solve      estimate OD flows from the link flows of a directory
    odflow evaluate   compare an estimate with its ground truth
    odflow repro      generate, solve and evaluate seeded trials of a preset
    odflow check      counting conditions of a network

    Exit codes: 0 success, 1 usage error or bad input, 2 acceptance
    failure, 3 internal error.
"""
from __future__ import print_function

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import config
from ._version import __version__
from .flowmodel import forward_multi
from .metrics import (DEFAULT_BIN_WIDTH, DEFAULT_FLOOR, merge_summaries, nmse,
                      relative_errors)
from .network import enumerate_paths, network_from_spec
from .odflowerrors import (ConfigError, OdflowError, PreconditionError,
                          SolverError)
from .solver import MODES, SolverConfig, solve
from .synth import GenConfig, gen_ground_truth
from .tools import (load_estimate, load_ground_truth, read_link_flows,
                    read_manifest, save_estimate, save_ground_truth,
                    write_histogram_csv, write_json, write_manifest)
from .transform import BASES
from .uniqueness import (count_constraints, necessary_condition,
                         uniqueness_report)
from .utils import trial_seeds, versions

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ACCEPTANCE = 2
EXIT_INTERNAL = 3

# name: (network, n_t, default trials)
PRESETS = {
    "3x3uni": ("3x3uni", 60, 10),
    "3x3bi": ("3x3bi", 60, 100),
    "8x8bi": ("8x8bi", 150, 10),
    "geant": ("geant", 150, 10),
}
PRESET_TAU_MAX = 4
NMSE_TARGET = 1e-5


@dataclass
class ExperimentConfig(object):
    """ Settings of an experiment.

    Parameters:
    -----------
    network: str
        Network description understood by network_from_spec.
    tau_max, n_t: int
    trials: int
    seed: int
        Master seed; trial seeds are derived from it.
    mode: str
        "plain", "sparse" or "lasso".
    out: str
        Output directory, derived from the output root when None.
    workers: int
        Trials run in parallel processes when > 1.
    floor, bin_width: float
        Relative error floor and histogram bin width.
    solver, generator: dict
        SolverConfig and extra GenConfig settings.
    """
    network: str = "3x3bi"
    tau_max: int = 4
    n_t: int = 60
    trials: int = 1
    seed: int = 0
    mode: str = "plain"
    out: str = None
    workers: int = 1
    floor: float = DEFAULT_FLOOR
    bin_width: float = DEFAULT_BIN_WIDTH
    solver: dict = field(default_factory=dict)
    generator: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.mode not in MODES:
            raise ConfigError("unknown mode %r (known: %s)"
                              % (self.mode, ", ".join(MODES)))
        if not self.floor > 0 or not self.bin_width > 0:
            raise ConfigError("floor and bin_width must be > 0")
        for key in ("network", "tau_max", "n_t", "seed"):
            if key in self.generator:
                raise ConfigError("generator setting %r belongs at the top "
                                  "level" % key)
        # fail early on bad nested settings
        self.gen_config(self.seed)
        self.solver_config(self.seed)

    @classmethod
    def from_dict(cls, d):
        known = set(f.name for f in fields(cls))
        unknown = set(d) - known
        if unknown:
            raise ConfigError("unknown experiment settings: %s"
                              % ", ".join(sorted(unknown)))
        return cls(**d)

    def to_dict(self):
        return asdict(self)

    def gen_config(self, seed):
        return GenConfig.from_dict(dict(self.generator, network=self.network,
                                        tau_max=self.tau_max, n_t=self.n_t,
                                        seed=seed))

    def solver_config(self, seed):
        settings = dict(self.solver)
        settings.setdefault("seed", seed)
        return SolverConfig.from_dict(settings)


def experiment_config(args, preset=None):
    """ ExperimentConfig from defaults < preset < config file < command
    line. ODFLOW_OUT only moves the output root.
    """
    base = ExperimentConfig().to_dict()
    file_settings = (config.load_config_file(args.config)
                     if getattr(args, "config", None) else None)
    merged = config.merge_settings(base, preset, file_settings,
                                   _cli_settings(args))
    return ExperimentConfig.from_dict(merged)


def _network_spec(args):
    if getattr(args, "edge_list", None):
        return args.edge_list
    if getattr(args, "grid", None):
        return "grid:%s:%s" % (args.grid, "uni" if args.unidirectional
                               else "bi")
    return getattr(args, "network", None)


def _cli_settings(args):
    solver = {}
    for key, name in (("max_iterations", "max_iter"), ("epsilon", "epsilon"),
                      ("l1_weight", "l1_weight"), ("nmse_stop", "nmse_stop"),
                      ("basis", "basis")):
        value = getattr(args, name, None)
        if value is not None:
            solver[key] = value
    generator = {}
    if getattr(args, "sparsity", None) is not None:
        generator["sparsity"] = args.sparsity
    return {
        "network": _network_spec(args),
        "tau_max": getattr(args, "tau_max", None),
        "n_t": getattr(args, "nt", None),
        "trials": getattr(args, "trials", None),
        "seed": getattr(args, "seed", None),
        "mode": getattr(args, "mode", None),
        "out": getattr(args, "out", None),
        "workers": getattr(args, "workers", None),
        "floor": getattr(args, "floor", None),
        "bin_width": getattr(args, "bin_width", None),
        "solver": solver,
        "generator": generator,
    }


def _output_dir(exp, default_name):
    return exp.out or os.path.join(config.get_output_root(), default_name)


def _print_json(content):
    print(json.dumps(content, indent=2, sort_keys=True))


def cmd_generate(args):
    exp = experiment_config(args)
    cfg = exp.gen_config(exp.seed)
    net = network_from_spec(exp.network)
    paths = enumerate_paths(net, exp.tau_max)
    condition = necessary_condition(count_constraints(net, paths, exp.n_t))
    if not condition.holds:
        logger.warning("necessary condition fails on %s with n_T=%i "
                       "(margin %i): estimates will not be unique", net.name,
                       exp.n_t, condition.margin)
    truth = gen_ground_truth(cfg, net)
    truth.check()
    out = _output_dir(exp, "generate-%s-seed%i" % (net.name, exp.seed))
    digest = save_ground_truth(truth, out, {"tau_max": exp.tau_max})
    _print_json({"directory": out, "manifest_hash": digest})
    return EXIT_OK


def cmd_solve(args):
    exp = experiment_config(args)
    manifest, net, y = read_link_flows(args.input)
    tau_max = manifest.get("tau_max", exp.tau_max)
    paths = enumerate_paths(net, tau_max)
    truth = None
    if manifest.get("kind") == "ground-truth":
        truth = load_ground_truth(args.input)
    cfg = exp.solver_config(exp.seed)
    estimate = solve(y, paths, cfg, exp.mode, truth=truth)
    out = _output_dir(exp, os.path.basename(os.path.normpath(args.input))
                      + "-" + exp.mode)
    digest = save_estimate(estimate, paths, out,
                           {"input": manifest.get("manifest_hash"),
                            "solver": cfg.to_dict()})
    report = estimate.report
    _print_json({"directory": out, "manifest_hash": digest,
                 "termination": report.termination,
                 "iterations": report.iterations,
                 "final_nmse": report.final_nmse})
    return EXIT_OK


def evaluate(truth, estimate, floor=DEFAULT_FLOOR,
             bin_width=DEFAULT_BIN_WIDTH):
    """ Error summary of an estimate and the NMSE of its link-flow fit """
    n_t = truth.config.n_t
    summary = relative_errors(estimate.od.window(1, n_t),
                              truth.s.window(1, n_t), floor, bin_width)
    y_hat = forward_multi(estimate.P, estimate.x_full, (1, n_t))
    return summary, nmse(y_hat, truth.y)


def cmd_evaluate(args):
    exp = experiment_config(args)
    truth = load_ground_truth(args.truth)
    estimate = load_estimate(args.estimate)
    summary, fit = evaluate(truth, estimate, exp.floor, exp.bin_width)
    out = _output_dir(exp, os.path.basename(os.path.normpath(args.estimate))
                      + "-evaluation")
    os.makedirs(out, exist_ok=True)
    content = dict(summary.to_dict(), nmse=fit)
    write_json(os.path.join(out, "summary.json"), content)
    if summary.n_included:
        write_histogram_csv(os.path.join(out, "histogram.csv"),
                            summary.histogram())
    write_manifest(out, {"kind": "evaluation",
                         "truth": read_manifest(args.truth)["manifest_hash"],
                         "estimate":
                             read_manifest(args.estimate)["manifest_hash"]})
    _print_json(content)
    return EXIT_OK


def run_trial(settings, index, seed, out):
    """ One generate -> solve -> evaluate trial; returns a JSON-ready dict """
    exp = ExperimentConfig.from_dict(settings)
    truth = gen_ground_truth(exp.gen_config(seed))
    truth.check()
    trial_dir = os.path.join(out, "trial-%03i" % index)
    save_ground_truth(truth, os.path.join(trial_dir, "truth"),
                      {"tau_max": exp.tau_max, "trial": index})
    cfg = exp.solver_config(seed)
    estimate = solve(truth.y, truth.paths, cfg, exp.mode, truth=truth)
    save_estimate(estimate, truth.paths, os.path.join(trial_dir, "estimate"),
                  {"trial": index, "solver": cfg.to_dict()}, max_points=500)
    summary, fit = evaluate(truth, estimate, exp.floor, exp.bin_width)
    result = dict(summary.to_dict(), trial=index, seed=seed, nmse=fit,
                  termination=estimate.report.termination,
                  iterations=estimate.report.iterations,
                  monotonicity_violations=
                      estimate.report.monotonicity_violations,
                  feasibility_violations=
                      estimate.report.feasibility_violations)
    write_json(os.path.join(trial_dir, "summary.json"), result)
    logger.info("trial %i (seed %i): %s after %i iterations, mean error "
                "%.3g%%", index, seed, result["termination"],
                result["iterations"], 100 * (summary.mean_abs or 0.0))
    result["errors"] = summary.errors.tolist()
    return result


def acceptance(name, mode, summary, results):
    """ Pass/fail checks of a reproduction run.

    Returns:
    --------
    (passed, list of (description, passed)); passed is None when no
    criterion is defined for the preset and mode.
    """
    checks = []
    fits = [r["nmse"] for r in results]
    if name == "3x3bi":
        checks.append(("mean |error| < 1%", summary.mean_abs < 0.01))
        checks.append(("95% band within +-5%", summary.band_within(0.05)))
        good = sum(f < NMSE_TARGET for f in fits)
        checks.append(("NMSE < 1e-5 in >= 80%% of trials (%i/%i)"
                       % (good, len(fits)), good >= 0.8 * len(fits)))
    elif name == "3x3uni" and mode == "plain":
        checks.append(("95% band wider than +-20%",
                       not summary.band_within(0.20)))
    elif name == "3x3uni" and mode == "sparse":
        checks.append(("mean |error| < 10%", summary.mean_abs < 0.10))
        checks.append(("95% band within +-20%", summary.band_within(0.20)))
    elif name in ("8x8bi", "geant"):
        checks.append(("NMSE < 1e-5 in every trial",
                       all(f < NMSE_TARGET for f in fits)))
        checks.append(("mean |error| < 2%", summary.mean_abs < 0.02))
    if not checks:
        return None, checks
    return all(ok for _, ok in checks), checks


def _pooled(results, exp):
    from .metrics import ErrorSummary
    return merge_summaries([
        ErrorSummary(np.array(r["errors"]), r["n_excluded"], exp.floor,
                     exp.bin_width) for r in results])


def cmd_repro(args):
    network, n_t, trials = PRESETS[args.name]
    preset = {"network": network, "n_t": n_t, "tau_max": PRESET_TAU_MAX,
              "trials": trials}
    exp = experiment_config(args, preset)
    net = network_from_spec(exp.network)
    paths = enumerate_paths(net, exp.tau_max)
    condition = necessary_condition(count_constraints(net, paths, exp.n_t))
    if not condition.holds:
        raise ConfigError("necessary condition fails on %s with n_T=%i "
                          "(margin %i)" % (net.name, exp.n_t,
                                           condition.margin))
    out = _output_dir(exp, "repro-%s-%s-seed%i" % (args.name, exp.mode,
                                                   exp.seed))
    os.makedirs(out, exist_ok=True)
    seeds = trial_seeds(exp.seed, exp.trials)
    settings = exp.to_dict()
    logger.info("%s: %i trials in %s", args.name, exp.trials, out)
    if exp.workers > 1:
        with ProcessPoolExecutor(max_workers=exp.workers) as pool:
            futures = [pool.submit(run_trial, settings, k, s, out)
                       for k, s in enumerate(seeds)]
            results = [f.result() for f in futures]
    else:
        results = [run_trial(settings, k, s, out)
                   for k, s in enumerate(seeds)]
    summary = _pooled(results, exp)
    passed, checks = acceptance(args.name, exp.mode, summary, results)
    if summary.n_included:
        write_histogram_csv(os.path.join(out, "histogram.csv"),
                            summary.histogram())
    content = {
        "name": args.name,
        "summary": summary.to_dict(),
        "trials": [dict((k, v) for k, v in r.items() if k != "errors")
                   for r in results],
        "checks": [{"check": text, "passed": ok} for text, ok in checks],
        "passed": passed,
    }
    write_json(os.path.join(out, "summary.json"), content)
    digest = write_manifest(out, {"kind": "repro", "name": args.name,
                                  "config": settings, "seeds": seeds,
                                  "versions": versions()})
    for text, ok in checks:
        logger.info("%s: %s", text, "pass" if ok else "FAIL")
    if passed is None:
        logger.warning("no acceptance criterion for %s in %s mode",
                       args.name, exp.mode)
        status = "NO CRITERION"
    else:
        status = "PASS" if passed else "FAIL"
    print("%s %s: %s (mean |error| %.4g%%, band [%.4g%%, %.4g%%], "
          "manifest %s)" % (args.name, exp.mode, status,
                            100 * (summary.mean_abs or 0.0),
                            100 * (summary.low or 0.0),
                            100 * (summary.high or 0.0), digest))
    return EXIT_ACCEPTANCE if passed is False else EXIT_OK


def cmd_check(args):
    exp = experiment_config(args)
    net = network_from_spec(exp.network)
    paths = enumerate_paths(net, exp.tau_max)
    _print_json(uniqueness_report(net, paths, exp.n_t))
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    """ argparse reporting usage errors with exit code 1 """

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, "%s: error: %s\n" % (self.prog, message))


def _network_arguments(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--network", help="3x3bi, 8x8bi, 3x3uni, geant, chain, "
                   "chain:N, grid:RxC:bi|uni or an edge-list file")
    g.add_argument("--grid", metavar="RxC", help="grid network")
    g.add_argument("--edge-list", metavar="PATH", help="edge-list file")
    d = p.add_mutually_exclusive_group()
    d.add_argument("--bidirectional", action="store_false",
                   dest="unidirectional", help="grid links both ways "
                   "(default)")
    d.add_argument("--unidirectional", action="store_true",
                   help="grid links rightward and downward only")
    p.set_defaults(unidirectional=False)
    p.add_argument("--tau-max", type=int)
    p.add_argument("--nt", type=int, help="observed intervals n_T")


def _solver_arguments(p):
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--nmse-stop", type=float)
    p.add_argument("--l1-weight", type=float, help="lasso mode weight")
    p.add_argument("--basis", choices=BASES,
                   help="sparsity basis of the sparse and lasso modes")


def make_parser():
    parser = _Parser(prog="odflow", description="Blind OD flow estimation "
                     "from link flows")
    parser.add_argument("--version", action="version",
                        version="%(prog)s " + __version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("-q", "--quiet", action="store_true")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    def command(name, func, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", metavar="JSON", help="configuration file")
        p.add_argument("--out", metavar="DIR", help="output directory")
        p.set_defaults(func=func)
        return p

    p = command("generate", cmd_generate, "draw a synthetic ground truth")
    _network_arguments(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--sparsity", type=int)

    p = command("solve", cmd_solve, "estimate OD flows from link flows")
    p.add_argument("input", help="directory holding network.txt and y.csv")
    _solver_arguments(p)
    p.add_argument("--seed", type=int)

    p = command("evaluate", cmd_evaluate, "compare an estimate with the truth")
    p.add_argument("truth")
    p.add_argument("estimate")
    p.add_argument("--floor", type=float)
    p.add_argument("--bin-width", type=float)

    p = command("repro", cmd_repro, "run the trials of a preset")
    p.add_argument("name", choices=sorted(PRESETS))
    _solver_arguments(p)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--floor", type=float)
    p.add_argument("--bin-width", type=float)

    p = command("check", cmd_check, "counting conditions of a network")
    _network_arguments(p)
    return parser


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    logging.basicConfig(level=level,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except PreconditionError as e:
        logger.error("%s", e)
        return EXIT_USAGE
    except SolverError as e:
        logger.error("%s", e)
        return EXIT_INTERNAL
    except OdflowError as e:
        logger.error("%s", e)
        return EXIT_USAGE
    except Exception:
        logger.exception("internal error")
        return EXIT_INTERNAL
