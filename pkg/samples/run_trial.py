from __future__ import print_function

import logging
import sys

import odflow as o

logging.basicConfig(level=logging.INFO)

try:
    spec = sys.argv[1]
    n_t = int(sys.argv[2])
    seed = 0
    mode = "plain"
    try:
        seed = int(sys.argv[3])
        mode = sys.argv[4]
    except IndexError: pass

    truth = o.gen_ground_truth(o.GenConfig(network=spec, n_t=n_t, seed=seed))
    estimate = o.solve(truth.y, truth.paths, o.SolverConfig(seed=seed), mode,
                       truth=truth)
    summary = o.relative_errors(estimate.od, truth.s)
    print("termination: %s after %i iterations"
          % (estimate.report.termination, estimate.report.iterations))
    print("link-flow NMSE: %.3e" % estimate.report.final_nmse)
    print("mean |relative error|: %.4f%%" % (100 * summary.mean_abs))
    print("95%% of the OD flows within [%.4f%%, %.4f%%]"
          % (100 * summary.low, 100 * summary.high))
except IndexError:
    print("usage: python run_trial.py network n_t [seed [mode]]")
    print("Draws one synthetic instance, estimates it blindly and prints the")
    print("relative OD errors. 'mode' is plain (default), sparse or lasso.")
