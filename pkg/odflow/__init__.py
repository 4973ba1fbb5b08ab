"""
    Blind estimation of origin-destination flows from link flows.

    Important notes:
    - Node ids are 0-based inside the package and 1-based in every file,
      label and message.

    - O-flow series handed to the forward model start at interval
      2 - tau_max; link flows and OD flows start at interval 1.

      For instance, with tau_max = 4 and n_T = 60 an O-flow series has 63
      columns, t = -2 .. 60.
"""

from .network import (Network, Path, PathSet, build_chain, build_grid,
                      builtin_network, enumerate_paths, load_edge_list,
                      network_from_spec, enable_cache, disable_cache)
from .flowmodel import (FlowSeries, PathFlowSeries, AssignmentTensor,
                        ODAssignment, forward_multi, forward_od, forward_paths,
                        path_to_od, od_to_oflow, oflow_to_od_multi,
                        oflow_to_od_single, path_to_dflow, dflow_to_od,
                        dflow_to_od_single, rigid_support)
from .transform import dct_matrix, identity_matrix
from .synth import GenConfig, GroundTruth, gen_ground_truth
from .solver import (SolverConfig, SolveReport, Estimate, gauss_seidel,
                     gauss_seidel_sparse, solve, estimate_od)
from .uniqueness import (count_constraints, necessary_condition,
                         rule_of_thumb_nT, flag_chain_subgraph)
from .metrics import nmse, relative_errors, histogram
from .config import set_output_root, set_tolerances
from ._version import __version__
