from __future__ import print_function

import json
import sys

import odflow as o
from odflow.uniqueness import uniqueness_report

try:
    spec = sys.argv[1]
    n_t = 60
    tau_max = 4
    try:
        n_t = int(sys.argv[2])
        tau_max = int(sys.argv[3])
    except IndexError: pass

    net = o.network_from_spec(spec)
    paths = o.enumerate_paths(net, tau_max)
    print("%s: %i links, %i paths, %i OD pairs, %i origins"
          % (net.name, net.n_links, paths.n_paths, len(paths.od_pairs),
             len(paths.origins)))
    print(json.dumps(uniqueness_report(net, paths, n_t), indent=2))
except IndexError:
    print("usage: python show_counts.py network [n_t [tau_max]]")
    print("Prints the path counts of a network and its uniqueness report.")
    print("'network' is 3x3bi, 3x3uni, 8x8bi, geant, chain, grid:RxC:uni or")
    print("the path of an edge-list file.")
