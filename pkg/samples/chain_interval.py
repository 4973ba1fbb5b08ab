from __future__ import print_function

import sys

import numpy as np
import odflow as o

# p_{23,1} at step 2 in a multi-step tensor of the chain 1 -> 2 -> 3
STEP, LINK, ORIGIN = 1, 1, 0

try:
    n_t = int(sys.argv[1])
    seed = 0
    try:
        seed = int(sys.argv[2])
    except IndexError: pass

    truth = o.gen_ground_truth(o.GenConfig(network="chain", tau_max=2,
                                           n_t=n_t, sparsity=3, seed=seed))
    y = truth.y.values
    bound = min(1.0, float(np.min(y[1, 1:] / y[0, :-1])))
    print("true p_23,1 = %.6f" % truth.P.values[STEP, LINK, ORIGIN])
    print("every exact fit has p_23,1 in [0, %.6f]" % bound)
    for mode in ("plain", "sparse"):
        estimate = o.solve(truth.y, truth.paths,
                           o.SolverConfig(seed=seed, epsilon=1e-10,
                                          basis="identity",
                                          relax_factor=1.0), mode)
        print("%-6s p_23,1 = %.6f (NMSE %.2e, %s)"
              % (mode, estimate.P.values[STEP, LINK, ORIGIN],
                 estimate.report.final_nmse, estimate.report.termination))
except IndexError:
    print("usage: python chain_interval.py n_t [seed]")
    print("Shows that the three-node chain only pins the share of origin 1")
    print("going on to node 3 down to an interval, and where the plain and")
    print("sparse modes land inside it.")
