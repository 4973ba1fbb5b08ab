"""
    synth module.

    Ground-truth generation for synthetic experiments:

    1. for every origin a random split of its flow over its OD pairs, and
       for every OD pair a random split over its paths; the O-flow
       assignment tensor follows through the path -> OD -> O-flow
       conversions;
    2. O-flow series sparse under the orthonormal DCT and bounded below by
       a positive floor;
    3. OD flows and link flows derived from 1. and 2.
"""
import logging
import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .flowmodel import (FlowSeries, PathFlowSeries, forward_multi,
                        forward_paths, od_to_oflow, oflow_to_od_multi,
                        path_to_od)
from .network import Network, enumerate_paths, network_from_spec
from .odflowerrors import ConfigError, FlowError
from .transform import dct_matrix
from .utils import make_rng

logger = logging.getLogger(__name__)

# seed keys of the two random streams of a draw
ASSIGNMENT_STREAM = 0
FLOW_STREAM = 1


@dataclass
class GenConfig(object):
    """ Ground-truth generator settings.

    Parameters:
    -----------
    network: str
        Network description understood by network_from_spec.
    tau_max: int
        Longest trip in intervals (and longest path in links).
    n_t: int
        Number of observed intervals.
    sparsity: int
        Nonzero DCT coefficients per origin, DC included.
    coef_range: float
        Non-DC coefficients are uniform in [-coef_range, coef_range].
    floor: float
        Lower bound of every O-flow value; series minima are uniform in
        [floor, 2 floor].
    dc_cap: float or None
        Largest DC coefficient accepted before a redraw.
    seed: int
    max_attempts: int
        Redraws allowed per origin.
    """
    network: str = "3x3bi"
    tau_max: int = 4
    n_t: int = 60
    sparsity: int = 5
    coef_range: float = 10.0
    floor: float = 1.0
    dc_cap: float = None
    seed: int = 0
    max_attempts: int = 100

    def __post_init__(self):
        if self.tau_max < 1:
            raise ConfigError("tau_max must be >= 1")
        if self.n_t < 1:
            raise ConfigError("n_t must be >= 1")
        if not 1 <= self.sparsity <= self.n_columns:
            raise ConfigError("sparsity must lie in 1..%i (n_t + tau_max - 1)"
                              % self.n_columns)
        if self.coef_range < 0 or self.floor <= 0:
            raise ConfigError("coef_range must be >= 0 and floor > 0")
        if self.max_attempts < 1:
            raise ConfigError("max_attempts must be >= 1")

    @property
    def n_columns(self):
        """ length of O-flow series, intervals 2 - tau_max .. n_t """
        return self.n_t + self.tau_max - 1

    @classmethod
    def from_dict(cls, d):
        known = set(f.name for f in fields(cls))
        unknown = set(d) - known
        if unknown:
            raise ConfigError("unknown generator settings: %s"
                              % ", ".join(sorted(unknown)))
        return cls(**d)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True, eq=False)
class GroundTruth(object):
    """ Everything a synthetic trial knows about its data """
    config: GenConfig
    network: Network
    paths: object
    P: object
    A: object
    x: FlowSeries
    s: FlowSeries
    y: FlowSeries
    path_flows: PathFlowSeries
    od_split: np.ndarray
    path_split: np.ndarray

    def coefficients(self):
        return dct_matrix(self.x.n_columns).analyze(self.x.values)

    def check(self, tol=1e-10):
        """ Verifies the consistency chain of the draw.

        Link flows from path incidence must equal the O-flow model output,
        OD flows from path sums must equal the O-flow recovery, and OD
        flows of an origin must add up to its O-flow.

        Returns:
        --------
        dict of the worst relative discrepancies; raises FlowError when one
        exceeds tol.
        """
        n_t = self.config.n_t
        scale = max(1.0, float(np.abs(self.y.values).max()))
        y_paths = forward_paths(self.paths, self.path_flows, (1, n_t))
        s_paths = path_to_od(self.paths, self.path_flows)[0].window(1, n_t)
        od_origin = np.array([self.paths.origin_index(o)
                              for o, _ in self.paths.od_pairs], dtype=int)
        totals = np.zeros((len(self.paths.origins), n_t))
        np.add.at(totals, od_origin, self.s.values)
        report = {
            "link_flows": float(np.abs(y_paths.values - self.y.values).max())
            / scale,
            "od_flows": float(np.abs(s_paths.values - self.s.values).max())
            / scale,
            "conservation": float(np.abs(totals - self.x.window(1, n_t).values)
                                  .max()) / scale,
        }
        for key, value in report.items():
            if value > tol:
                raise FlowError("ground truth %s mismatch %g" % (key, value))
        return report


def random_simplex(rng, n):
    """ Uniform point of the probability simplex of dimension n """
    e = rng.exponential(size=n)
    return e / e.sum()


def shares_to_assignment(paths, path_weights):
    """ Assignment tensors of static path shares.

    path_weights[j] is the share of its origin's flow taking path j. The
    shares go through the path -> OD -> O-flow conversions.

    Returns:
    --------
    (AssignmentTensor, ODAssignment)
    """
    weights = PathFlowSeries(np.asarray(path_weights, dtype=float)[:, None])
    od_weights, A = path_to_od(paths, weights)
    _, P = od_to_oflow(od_weights, A, paths)
    return P, A


def gen_assignment(paths, seed):
    """ Random assignment of a path set.

    Returns:
    --------
    (AssignmentTensor, ODAssignment, od_split, path_split) where od_split[k]
    is the share of OD pair k in its origin's flow and path_split[j] the
    share of path j in its OD pair.
    """
    if not paths.paths:
        raise ConfigError("cannot draw an assignment for an empty path set")
    rng = make_rng(seed, ASSIGNMENT_STREAM)
    od_split = np.zeros(len(paths.od_pairs))
    path_split = np.zeros(paths.n_paths)
    od_origin = np.array([o for o, _ in paths.od_pairs])
    for origin in paths.origins:
        members = np.flatnonzero(od_origin == origin)
        od_split[members] = random_simplex(rng, len(members))
    for members in paths.paths_of_od():
        path_split[list(members)] = random_simplex(rng, len(members))
    P, A = shares_to_assignment(paths, od_split[paths.path_od()] * path_split)
    return P, A, od_split, path_split


def draw_sparse_series(rng, D, cfg):
    """ One nonnegative series with exactly cfg.sparsity DCT coefficients.

    Non-DC positions are uniform among 1 .. n-1 and their values uniform in
    [-coef_range, coef_range]; the DC coefficient lifts the minimum to a
    value uniform in [floor, 2 floor].
    """
    n = D.size
    k = cfg.sparsity
    for attempt in range(cfg.max_attempts):
        c = np.zeros(n)
        if k > 1:
            idx = rng.choice(np.arange(1, n), size=k - 1, replace=False)
            c[idx] = rng.uniform(-cfg.coef_range, cfg.coef_range, size=k - 1)
        base = D.synthesize(c)
        lift = cfg.floor * rng.uniform(0.0, 1.0)
        c[0] = math.sqrt(n) * (cfg.floor - base.min() + lift)
        if cfg.dc_cap is not None and c[0] > cfg.dc_cap:
            continue
        x = D.synthesize(c)
        if x.min() >= cfg.floor:
            return x, c
    raise ConfigError("no series within dc_cap=%s after %i attempts; widen "
                      "dc_cap or narrow coef_range"
                      % (cfg.dc_cap, cfg.max_attempts))


def gen_sparse_oflows(cfg, seed=None, origins=None):
    """ DCT-sparse O-flows on intervals 2 - tau_max .. n_t.

    Parameters:
    -----------
    cfg: GenConfig
    seed: int, optional
        Defaults to cfg.seed.
    origins: sequence of node ids, optional
        Origins to draw for; defaults to the origins of cfg.network.
        Origin k draws from its own stream, so the series of an origin do
        not depend on how many origins are drawn.
    """
    seed = cfg.seed if seed is None else seed
    if origins is None:
        net = network_from_spec(cfg.network)
        origins = enumerate_paths(net, cfg.tau_max).origins
    D = dct_matrix(cfg.n_columns)
    values = np.zeros((len(origins), cfg.n_columns))
    for k in range(len(origins)):
        values[k], _ = draw_sparse_series(make_rng(seed, FLOW_STREAM, k),
                                          D, cfg)
    return FlowSeries(values, 2 - cfg.tau_max,
                      ["%i" % (o + 1) for o in origins])


def gen_ground_truth(cfg, net=None):
    """ Draws a complete synthetic instance.

    Parameters:
    -----------
    cfg: GenConfig
    net: Network, optional
        Overrides cfg.network.
    """
    if net is None:
        net = network_from_spec(cfg.network)
    paths = enumerate_paths(net, cfg.tau_max)
    P, A, od_split, path_split = gen_assignment(paths, cfg.seed)
    x = gen_sparse_oflows(cfg, cfg.seed, paths.origins)
    shares = od_split[paths.path_od()] * path_split
    path_flows = PathFlowSeries(
        x.values[paths.path_origin()] * shares[:, None], x.t_begin,
        [p.label() for p in paths.paths])
    y = forward_multi(P, x, (1, cfg.n_t))
    s = oflow_to_od_multi(x, P, paths.od_pairs, (1, cfg.n_t))
    logger.info("ground truth on %s: %i links, %i OD pairs, %i origins, "
                "n_t=%i, seed=%i", net.name, net.n_links, len(paths.od_pairs),
                len(paths.origins), cfg.n_t, cfg.seed)
    return GroundTruth(cfg, net, paths, P, A, x, s, y, path_flows, od_split,
                       path_split)
