"""
    flowmodel module.

    The three flow models (path, OD and O-flow), the multi-step forward
    convolution under the rigid model, the support mask of the assignment
    tensor and the conversions between the models.

    Time is an integer interval index. A FlowSeries keeps the index of its
    first column in t_begin; O-flow series used by the forward model start
    at 2 - tau_max so that y^1 .. y^nT can be computed.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from . import config
from .network import Network
from .odflowerrors import FlowError

logger = logging.getLogger(__name__)

# relative slack allowed on the sign of flows
NONNEG_TOL = 1e-8
# relative slack on recovered OD flows, whose sign depends on C5
RECOVERY_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class FlowSeries(object):
    """ Nonnegative entity-by-time matrix.

    Parameters:
    -----------
    values: array (entity_count, n_columns)
        Column j holds interval t_begin + j.
    t_begin: int
        Interval index of the first column.
    labels: sequence of str, optional
        One label per entity ("1->2" for links, "1~9" for OD pairs, "1"
        for nodes).
    """
    values: np.ndarray
    t_begin: int = 1
    labels: tuple = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise FlowError("flow values must be a 2-D array, got %i-D"
                            % values.ndim)
        if values.size and not np.all(np.isfinite(values)):
            raise FlowError("flow values must be finite")
        if values.size:
            scale = max(1.0, float(np.abs(values).max()))
            if values.min() < -NONNEG_TOL * scale:
                raise FlowError("negative flow %g" % values.min())
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "t_begin", int(self.t_begin))
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != values.shape[0]:
                raise FlowError("%i labels for %i entities"
                                % (len(labels), values.shape[0]))
            object.__setattr__(self, "labels", labels)

    @property
    def entity_count(self):
        return self.values.shape[0]

    @property
    def n_columns(self):
        return self.values.shape[1]

    @property
    def t_end(self):
        return self.t_begin + self.values.shape[1] - 1

    @property
    def times(self):
        return np.arange(self.t_begin, self.t_end + 1)

    def window(self, t_first, t_last):
        """ Sub-series restricted to [t_first, t_last] """
        if t_first < self.t_begin or t_last > self.t_end or t_last < t_first:
            raise FlowError("window [%i, %i] outside series span [%i, %i]"
                            % (t_first, t_last, self.t_begin, self.t_end))
        lo = t_first - self.t_begin
        return self.__class__(self.values[:, lo:lo + t_last - t_first + 1],
                              t_first, self.labels)

    def column(self, t):
        return self.values[:, t - self.t_begin]

    def scaled(self, factor):
        return self.__class__(self.values * factor, self.t_begin, self.labels)


@dataclass(frozen=True, eq=False)
class PathFlowSeries(FlowSeries):
    """ Flow departing along each path, one row per path of a PathSet,
    columns indexed by departure interval.
    """
    pass


@dataclass(frozen=True, eq=False)
class AssignmentTensor(object):
    """ Per-step assignment proportions p_{ij,o}^tau.

    values[k, l, j] is the share of the flow of entity j (an origin, or a
    destination when kind is "destination") crossing link l at step k + 1.
    support marks the entries allowed to be nonzero.
    """
    network: Network
    origins: tuple
    values: np.ndarray
    support: np.ndarray
    kind: str = "origin"

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        support = np.array(self.support, dtype=bool)
        origins = tuple(int(o) for o in self.origins)
        if values.ndim != 3:
            raise FlowError("assignment tensor must be 3-D "
                            "(step, link, origin)")
        if values.shape != support.shape:
            raise FlowError("support shape %s differs from tensor shape %s"
                            % (support.shape, values.shape))
        if values.shape[1] != self.network.n_links:
            raise FlowError("tensor has %i links, network has %i"
                            % (values.shape[1], self.network.n_links))
        if values.shape[2] != len(origins):
            raise FlowError("tensor has %i origins, %i ids given"
                            % (values.shape[2], len(origins)))
        if self.kind not in ("origin", "destination"):
            raise FlowError("unknown tensor kind %r" % self.kind)
        off = values[~support]
        if off.size and np.abs(off).max() > config.EQUALITY_TOL:
            raise FlowError("nonzero entry outside the support")
        values[~support] = 0.0
        values.setflags(write=False)
        support.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "origins", origins)

    @property
    def tau_max(self):
        return self.values.shape[0]

    @property
    def n_origins(self):
        return self.values.shape[2]

    def vector(self):
        """ support entries in C order of (step, link, origin) """
        return self.values[self.support]

    def with_vector(self, v):
        values = np.zeros(self.values.shape)
        values[self.support] = v
        return AssignmentTensor(self.network, self.origins, values,
                                self.support, self.kind)

    def residuals(self):
        return assignment_residuals(self)

    def is_feasible(self, eq_tol=None, ineq_tol=None):
        return check_residuals(self.residuals(), eq_tol, ineq_tol)


@dataclass(frozen=True, eq=False)
class ODAssignment(object):
    """ Per-step assignment a_{ij,od}^tau: share of OD flow od crossing
    link l at step k + 1, stored as values[k, l, od].
    """
    network: Network
    od_pairs: tuple
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 3 or values.shape[1] != self.network.n_links \
                or values.shape[2] != len(self.od_pairs):
            raise FlowError("OD assignment shape %s does not match network "
                            "and OD pairs" % (values.shape,))
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "od_pairs", tuple(self.od_pairs))

    @property
    def tau_max(self):
        return self.values.shape[0]

    def collapse(self):
        """ static a_{ij,od} = sum over steps """
        return self.values.sum(axis=0)


def _check_paths(net, paths):
    if net is not None and net != paths.network:
        raise FlowError("path set was enumerated on another network")
    return paths.network


def link_labels(net):
    return tuple(net.link_label(k) for k in range(net.n_links))


def rigid_support(net, paths):
    """ Support of the rigid multi-step tensor.

    support[k, l, o] is True iff some path of `paths` starting at origin o
    uses link l as its (k+1)-th link. Only links leaving o can appear at
    the first step.
    """
    net = _check_paths(net, paths)
    support = np.zeros((paths.tau_max, net.n_links, len(paths.origins)),
                       dtype=bool)
    path_origin = paths.path_origin()
    for k, p in enumerate(paths.paths):
        for step, link in enumerate(p.links):
            support[step, link, path_origin[k]] = True
    return support


def single_step_support(paths):
    """ Support of the single-step model: union over steps """
    return rigid_support(None, paths).any(axis=0, keepdims=True)


def _convolve(steps, series, t_first, t_last):
    tau_max = steps.shape[0]
    if series.t_begin > t_first - tau_max + 1 or series.t_end < t_last:
        raise FlowError("input must span [%i, %i], got [%i, %i]"
                        % (t_first - tau_max + 1, t_last, series.t_begin,
                           series.t_end))
    times = np.arange(t_first, t_last + 1)
    out = np.zeros((steps.shape[1], len(times)))
    for k in range(tau_max):
        out += steps[k] @ series.values[:, times - k - series.t_begin]
    return out


def _output_range(series, t_range):
    if t_range is None:
        return 1, series.t_end
    return int(t_range[0]), int(t_range[1])


def forward_multi(P, x, t_range=None):
    """ Link flows y^t = sum_tau P^tau x^{t - tau + 1}.

    Parameters:
    -----------
    P: AssignmentTensor
    x: FlowSeries
        O-flows, one row per origin of P, spanning at least
        [t_first - tau_max + 1, t_last].
    t_range: (int, int), optional
        Output interval, [1, x.t_end] by default.
    """
    if P.n_origins != x.entity_count:
        raise FlowError("tensor has %i origins, flow series %i entities"
                        % (P.n_origins, x.entity_count))
    t_first, t_last = _output_range(x, t_range)
    return FlowSeries(_convolve(P.values, x, t_first, t_last), t_first,
                      link_labels(P.network))


def forward_od(A, s, t_range=None):
    """ Link flows of the OD model, y^t = sum_tau A^tau s^{t - tau + 1} """
    if A.values.shape[2] != s.entity_count:
        raise FlowError("OD assignment has %i pairs, flow series %i entities"
                        % (A.values.shape[2], s.entity_count))
    t_first, t_last = _output_range(s, t_range)
    return FlowSeries(_convolve(A.values, s, t_first, t_last), t_first,
                      link_labels(A.network))


def forward_paths(paths, path_flows, t_range=None):
    """ Link flows by path incidence: a path departing at t crosses its
    k-th link during interval t + k - 1.
    """
    if path_flows.entity_count != paths.n_paths:
        raise FlowError("%i path flows for %i paths"
                        % (path_flows.entity_count, paths.n_paths))
    net = paths.network
    incidence = np.zeros((paths.tau_max, net.n_links, paths.n_paths))
    for j, p in enumerate(paths.paths):
        for step, link in enumerate(p.links):
            incidence[step, link, j] = 1.0
    t_first, t_last = _output_range(path_flows, t_range)
    return FlowSeries(_convolve(incidence, path_flows, t_first, t_last),
                      t_first, link_labels(net))


def path_to_od(paths, path_flows):
    """ OD flows and per-step OD assignment from path flows.

    s_od is the sum of its path flows. a^tau_{l,od} is the share of the OD
    flow whose path uses link l at step tau, weighted by path flow totals
    over the whole horizon; an OD pair without flow spreads evenly over
    its paths.

    Returns:
    --------
    (FlowSeries over paths.od_pairs, ODAssignment)
    """
    if path_flows.entity_count != paths.n_paths:
        raise FlowError("%i path flows for %i paths"
                        % (path_flows.entity_count, paths.n_paths))
    net = paths.network
    n_od = len(paths.od_pairs)
    path_od = paths.path_od()
    od_values = np.zeros((n_od, path_flows.n_columns))
    np.add.at(od_values, path_od, path_flows.values)

    totals = path_flows.values.sum(axis=1)
    od_totals = np.bincount(path_od, weights=totals, minlength=n_od)
    od_sizes = np.bincount(path_od, minlength=n_od)
    assignment = np.zeros((paths.tau_max, net.n_links, n_od))
    for j, p in enumerate(paths.paths):
        od = path_od[j]
        if od_totals[od] > 0:
            weight = totals[j] / od_totals[od]
        else:
            weight = 1.0 / od_sizes[od]
        for step, link in enumerate(p.links):
            assignment[step, link, od] += weight
    return (FlowSeries(od_values, path_flows.t_begin, paths.od_labels()),
            ODAssignment(net, paths.od_pairs, assignment))


def od_to_oflow(od_flows, A, paths):
    """ O-flows and the O-flow assignment tensor from OD flows.

    x_o is the sum of the OD flows leaving o; p^tau_{l,o} is the average of
    the a^tau_{l,od} weighted by OD flow totals over the horizon. An origin
    without flow spreads evenly over its first-step links.

    Returns:
    --------
    (FlowSeries over paths.origins, AssignmentTensor)
    """
    n_od = len(paths.od_pairs)
    if od_flows.entity_count != n_od or A.values.shape[2] != n_od:
        raise FlowError("OD flows and assignment must follow the %i OD pairs "
                        "of the path set" % n_od)
    net = paths.network
    n_origins = len(paths.origins)
    od_origin = np.array([paths.origin_index(o) for o, _ in paths.od_pairs],
                         dtype=int)
    x_values = np.zeros((n_origins, od_flows.n_columns))
    np.add.at(x_values, od_origin, od_flows.values)

    support = rigid_support(net, paths)
    od_totals = od_flows.values.sum(axis=1)
    origin_totals = np.bincount(od_origin, weights=od_totals,
                                minlength=n_origins)
    values = np.zeros((A.tau_max, net.n_links, n_origins))
    for od in range(n_od):
        o = od_origin[od]
        if origin_totals[o] > 0:
            share = od_totals[od] / origin_totals[o]
            values[:, :, o] += share * A.values[:, :, od]
    for o in np.flatnonzero(origin_totals <= 0):
        first = support[0, :, o]
        values[0, first, o] = 1.0 / first.sum()
        logger.debug("origin %i carries no flow, uniform first step",
                     paths.origins[o] + 1)
    return (FlowSeries(x_values, od_flows.t_begin, paths.origin_labels()),
            AssignmentTensor(net, paths.origins, values, support))


def _all_pairs(P):
    return tuple((o, d) for o in P.origins
                 for d in range(P.network.node_count) if d != o)


def _pair_positions(P, od_pairs):
    position = dict((o, k) for k, o in enumerate(P.origins))
    try:
        return (np.array([position[a] for a, _ in od_pairs], dtype=int),
                np.array([b for _, b in od_pairs], dtype=int))
    except KeyError as e:
        raise FlowError("node %i is not an entity of the tensor"
                        % (e.args[0] + 1))


def _finish_od(values, scale, t_begin, od_pairs):
    tol = RECOVERY_TOL * max(1.0, scale)
    if values.size and values.min() < -tol:
        raise FlowError("recovered OD flow %g is negative: the assignment "
                        "violates the flow conservation constraint C5"
                        % values.min())
    labels = ["%i~%i" % (o + 1, d + 1) for o, d in od_pairs]
    return FlowSeries(np.maximum(values, 0.0), t_begin, labels)


def _terminating_shares(P):
    """ B[n, j] = sum_tau (inflow - outflow) share of entity j at node n """
    h_in, h_out = P.network.incidence()
    return (h_in - h_out) @ P.values.sum(axis=0)


def oflow_to_od_multi(x, P, od_pairs=None, t_range=None):
    """ OD flows from O-flows and a multi-step tensor.

    s_od^t = x_o^t (sum_tau sum_i p^tau_{id,o} - sum_tau sum_j p^tau_{dj,o})

    Only x^t with t >= 1 enter the output; the default range is
    [max(1, x.t_begin), x.t_end]. od_pairs defaults to every (o, d),
    d != o, of the tensor origins.
    """
    if P.kind != "origin":
        raise FlowError("expected an origin-indexed tensor")
    if P.n_origins != x.entity_count:
        raise FlowError("tensor has %i origins, flow series %i entities"
                        % (P.n_origins, x.entity_count))
    if od_pairs is None:
        od_pairs = _all_pairs(P)
    if t_range is None:
        t_range = (max(1, x.t_begin), x.t_end)
    window = x.window(*t_range).values
    rows, dests = _pair_positions(P, od_pairs)
    shares = _terminating_shares(P)[dests, rows]
    values = shares[:, None] * window[rows]
    scale = float(np.abs(window).max()) if window.size else 0.0
    return _finish_od(values, scale, t_range[0], od_pairs)


def oflow_to_od_single(x, P, od_pairs=None):
    """ s_od = x_o (sum_i p_{id,o} - sum_j p_{dj,o}), single-step tensor """
    if P.tau_max != 1:
        raise FlowError("single-step recovery needs tau_max = 1, got %i"
                        % P.tau_max)
    return oflow_to_od_multi(x, P, od_pairs, (x.t_begin, x.t_end))


def dflow_support(paths):
    """ Support of the destination-indexed tensor: step k counts links
    before arrival, the last link of a path is step 1.
    """
    net = paths.network
    destinations = sorted(set(p.destination for p in paths.paths))
    position = dict((d, k) for k, d in enumerate(destinations))
    support = np.zeros((paths.tau_max, net.n_links, len(destinations)),
                       dtype=bool)
    for p in paths.paths:
        for k, link in enumerate(reversed(p.links)):
            support[k, link, position[p.destination]] = True
    return tuple(destinations), support


def path_to_dflow(paths, path_flows):
    """ D-flows and the destination-indexed tensor from path flows.

    A path with L links departing at t arrives at t + L; x_d^a is the flow
    arriving at d at a. D-flows span [t_begin + 1, t_end + tau_max].

    Returns:
    --------
    (FlowSeries over destinations, AssignmentTensor of kind "destination")
    """
    if path_flows.entity_count != paths.n_paths:
        raise FlowError("%i path flows for %i paths"
                        % (path_flows.entity_count, paths.n_paths))
    net = paths.network
    destinations, support = dflow_support(paths)
    position = dict((d, k) for k, d in enumerate(destinations))
    a_begin = path_flows.t_begin + 1
    xd = np.zeros((len(destinations), path_flows.n_columns + paths.tau_max))
    totals = path_flows.values.sum(axis=1)
    dest_totals = np.zeros(len(destinations))
    for j, p in enumerate(paths.paths):
        d = position[p.destination]
        lo = p.length - 1
        xd[d, lo:lo + path_flows.n_columns] += path_flows.values[j]
        dest_totals[d] += totals[j]

    values = np.zeros(support.shape)
    for j, p in enumerate(paths.paths):
        d = position[p.destination]
        if dest_totals[d] <= 0:
            continue
        for k, link in enumerate(reversed(p.links)):
            values[k, link, d] += totals[j] / dest_totals[d]
    for d in np.flatnonzero(dest_totals <= 0):
        last = support[0, :, d]
        values[0, last, d] = 1.0 / last.sum()
    labels = ["%i" % (d + 1) for d in destinations]
    return (FlowSeries(xd, a_begin, labels),
            AssignmentTensor(net, destinations, values, support,
                             kind="destination"))


def _dflow_pairs(Pd, od_pairs):
    if od_pairs is None:
        od_pairs = tuple(sorted((o, d) for d in Pd.origins
                                for o in range(Pd.network.node_count)
                                if o != d))
    position = dict((d, k) for k, d in enumerate(Pd.origins))
    try:
        cols = np.array([position[d] for _, d in od_pairs], dtype=int)
    except KeyError as e:
        raise FlowError("node %i is not a destination of the tensor"
                        % (e.args[0] + 1))
    return od_pairs, np.array([o for o, _ in od_pairs], dtype=int), cols


def dflow_to_od(xd, Pd, od_pairs=None, t_range=None):
    """ OD flows from D-flows under the rigid model.

    s_od^t = sum_tau x_d^{t+tau} sum_j p^tau_{oj,d}
             - sum_tau x_d^{t+tau-1} sum_i p^tau_{io,d}

    The first sum counts flow leaving o, the second the part of it that
    only passes through o. Both terms share x_d^{t+tau} when the D-flows
    are constant in time. D-flows outside the series span count as zero;
    the default range is [xd.t_begin - 1, xd.t_end - tau_max].
    """
    if Pd.kind != "destination":
        raise FlowError("expected a destination-indexed tensor")
    if Pd.n_origins != xd.entity_count:
        raise FlowError("tensor has %i destinations, flow series %i entities"
                        % (Pd.n_origins, xd.entity_count))
    tau_max = Pd.tau_max
    if t_range is None:
        t_range = (xd.t_begin - 1, xd.t_end - tau_max)
    od_pairs, rows, cols = _dflow_pairs(Pd, od_pairs)
    h_in, h_out = Pd.network.incidence()
    times = np.arange(t_range[0], t_range[1] + 1)
    pad = tau_max + 1
    padded = np.zeros((xd.entity_count, xd.n_columns + 2 * pad))
    padded[:, pad:pad + xd.n_columns] = xd.values
    offset = pad - xd.t_begin
    values = np.zeros((len(od_pairs), len(times)))
    for k in range(tau_max):
        tau = k + 1
        leave = (h_out @ Pd.values[k])[rows, cols]
        enter = (h_in @ Pd.values[k])[rows, cols]
        a_leave = times + tau + offset
        a_enter = times + tau - 1 + offset
        if a_leave.min() < 0 or a_leave.max() >= padded.shape[1] \
                or a_enter.min() < 0:
            raise FlowError("range [%i, %i] too far from the D-flow span"
                            % tuple(t_range))
        values += leave[:, None] * padded[cols][:, a_leave]
        values -= enter[:, None] * padded[cols][:, a_enter]
    scale = float(np.abs(xd.values).max()) if xd.values.size else 0.0
    return _finish_od(values, scale, int(t_range[0]), od_pairs)


def dflow_to_od_single(xd, Pd, od_pairs=None):
    """ s_od = x_d (sum_j p_{oj,d} - sum_i p_{io,d}), single-step tensor """
    if Pd.kind != "destination":
        raise FlowError("expected a destination-indexed tensor")
    if Pd.tau_max != 1:
        raise FlowError("single-step recovery needs tau_max = 1, got %i"
                        % Pd.tau_max)
    od_pairs, rows, cols = _dflow_pairs(Pd, od_pairs)
    shares = _terminating_shares(Pd)
    # leaving minus entering at the origin node
    values = -shares[rows, cols][:, None] * xd.values[cols]
    scale = float(np.abs(xd.values).max()) if xd.values.size else 0.0
    return _finish_od(values, scale, xd.t_begin, od_pairs)


def collapse_steps(P):
    """ Static single-step view sum_tau P^tau """
    return AssignmentTensor(P.network, P.origins,
                            P.values.sum(axis=0, keepdims=True),
                            P.support.any(axis=0, keepdims=True), P.kind)


def assignment_residuals(P):
    """ Worst violation of C2-C5.

    Returns:
    --------
    dict with keys "C2" (box), "C3" (unit total outflow share at the
    origin), "C4" (entries off support) and "C5" (inflow dominates outflow
    at every node but the origin, step by step). Destination tensors are
    checked as origin tensors of the reversed network.
    """
    net = P.network
    if P.kind == "destination":
        net = net.reversed()
    v = P.values
    out = {}
    out["C2"] = float(max(0.0, -v.min(), v.max() - 1.0)) if v.size else 0.0
    off = v[~P.support]
    out["C4"] = float(np.abs(off).max()) if off.size else 0.0
    h_in, h_out = net.incidence()
    origins = np.array(P.origins, dtype=int)
    cols = np.arange(len(origins))
    leaving = (h_out @ v.sum(axis=0))[origins, cols]
    out["C3"] = float(np.abs(leaving - 1.0).max()) if leaving.size else 0.0
    worst = 0.0
    for k in range(1, P.tau_max):
        balance = h_in @ v[k - 1] - h_out @ v[k]
        balance[origins, cols] = 0.0
        worst = max(worst, float(-balance.min()))
    out["C5"] = worst
    return out


def flow_residual(x):
    """ Worst violation of C1 """
    return {"C1": float(max(0.0, -x.values.min())) if x.values.size else 0.0}


def check_residuals(residuals, eq_tol=None, ineq_tol=None):
    eq_tol = config.EQUALITY_TOL if eq_tol is None else eq_tol
    ineq_tol = config.INEQUALITY_TOL if ineq_tol is None else ineq_tol
    limits = {"C1": ineq_tol, "C2": ineq_tol, "C3": eq_tol, "C4": eq_tol,
              "C5": ineq_tol}
    return all(value <= limits[key] for key, value in residuals.items())
