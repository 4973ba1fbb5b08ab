"""
    solver module.

    Joint estimation of the O-flows x and the assignment tensor P from link
    flows y by alternating minimization (Gauss-Seidel) of

        f(P, x) = sum_t || y^t - sum_tau P^tau x^{t - tau + 1} ||^2

    with x >= 0 and P in the polytope of constraints C2-C5. Three modes:

    - plain:  alternate exact-ish x- and P-updates until the NMSE of the
              link-flow fit drops below nmse_stop;
    - sparse: run plain until the fit reaches epsilon, then minimize
              sum_o ||D x_o||_1 subject to f <= epsilon ||y||^2, relaxing
              epsilon when progress stalls;
    - lasso:  alternate on 1/2 f + l1_weight sum_o ||D x_o||_1.

    Variables x^t for t in [2 - tau_max, 0] are optimized like the others
    but never reported.
"""
import logging
import math
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np
import scipy.optimize
import scipy.sparse

from . import config
from .flowmodel import (AssignmentTensor, FlowSeries, assignment_residuals,
                        flow_residual, oflow_to_od_multi, rigid_support)
from .odflowerrors import ConfigError, PreconditionError
from .projection import AssignmentPolytope, prox_l1_nonneg
from .synth import random_simplex, shares_to_assignment
from .transform import BASES, transform_matrix
from .utils import make_rng

logger = logging.getLogger(__name__)

MODES = ("plain", "sparse", "lasso")
TERMINATIONS = ("max-iter", "nmse", "delta-stall")

INIT_STREAM = 2
ARMIJO = 1e-4
MAX_HALVINGS = 60
ACTIVE_BAND = 0.99


@dataclass
class SolverConfig(object):
    """ Solver settings.

    Parameters:
    -----------
    max_iterations: int
        Outer Gauss-Seidel iterations, all phases included.
    nmse_stop: float
        Plain mode stops when the link-flow NMSE drops below this.
    delta_stop: float
        Sparse mode stops when the l1 norm decreased by less than this in
        one iteration (lasso mode: the objective). Measured on the flows
        divided by max |y|.
    kkt_tol: float
        Relative projected-gradient residual ending a subproblem.
    stall_tol: float
        Plain mode stops when the NMSE decreased by less than this.
    x_max_inner, p_max_inner, l1_inner: int
        Iteration caps of the x-, P- and penalized subproblems.
    dykstra_tol, dykstra_max_iter:
        Projection accuracy and sweep budget.
    dense_limit: int
        x-steps whose dense operator has at most this many entries are
        solved exactly with NNLS.
    epsilon: float
        Allowed relative residual of the sparse mode.
    relax_factor, relax_period:
        On a stall epsilon is multiplied by relax_factor, then halved every
        relax_period iterations until it is back.
    bisect_max: int
        Penalty evaluations per sparse x-step.
    basis: str
        Sparsity basis of the sparse and lasso modes, "dct" or "identity".
    extrapolation_steps: int
        Least-squares screenings per sparse iteration spent on pushing P
        further along its last change; 0 turns extrapolation off.
    l1_weight: float
        Penalty weight of the lasso mode.
    seed: int
        Seed of the random feasible initialization.
    check_invariants: bool
        Check monotonicity and feasibility after every iteration.
    monotone_tol: float
        Allowed relative objective increase per half step.
    """
    max_iterations: int = 5000
    nmse_stop: float = 1e-5
    delta_stop: float = 1e-5
    kkt_tol: float = 1e-9
    stall_tol: float = 1e-13
    x_max_inner: int = 200
    p_max_inner: int = 50
    l1_inner: int = 500
    dykstra_tol: float = 1e-11
    dykstra_max_iter: int = 5000
    dense_limit: int = 4000000
    epsilon: float = 1e-6
    relax_factor: float = 100.0
    relax_period: int = 50
    bisect_max: int = 40
    basis: str = "dct"
    extrapolation_steps: int = 40
    l1_weight: float = None
    seed: int = 0
    check_invariants: bool = True
    monotone_tol: float = 1e-9

    def __post_init__(self):
        for name in ("nmse_stop", "delta_stop", "kkt_tol", "stall_tol",
                     "dykstra_tol", "monotone_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError("%s must be > 0" % name)
        if self.epsilon < 0:
            raise ConfigError("epsilon must be >= 0")
        if self.relax_factor < 1 or self.relax_period < 1:
            raise ConfigError("relax_factor must be >= 1 and relax_period "
                              ">= 1")
        for name in ("max_iterations", "x_max_inner", "p_max_inner",
                     "l1_inner", "dykstra_max_iter", "bisect_max"):
            if getattr(self, name) < 1:
                raise ConfigError("%s must be >= 1" % name)
        if self.l1_weight is not None and self.l1_weight <= 0:
            raise ConfigError("l1_weight must be > 0")
        if self.basis not in BASES:
            raise ConfigError("unknown sparsity basis %r (known: %s)"
                              % (self.basis, ", ".join(BASES)))
        if self.extrapolation_steps < 0:
            raise ConfigError("extrapolation_steps must be >= 0")

    @classmethod
    def from_dict(cls, d):
        known = set(f.name for f in fields(cls))
        unknown = set(d) - known
        if unknown:
            raise ConfigError("unknown solver settings: %s"
                              % ", ".join(sorted(unknown)))
        return cls(**d)

    def to_dict(self):
        return asdict(self)


@dataclass
class SolveReport(object):
    """ What happened during a solve """
    mode: str = "plain"
    termination: str = None
    iterations: int = 0
    phase1_iterations: int = 0
    phase1_failed: bool = False
    objective: list = field(default_factory=list)
    nmse: list = field(default_factory=list)
    l1: list = field(default_factory=list)
    delta: list = field(default_factory=list)
    epsilon: list = field(default_factory=list)
    final_nmse: float = None
    residuals: dict = field(default_factory=dict)
    duration: float = 0.0
    monotonicity_violations: int = 0
    feasibility_violations: int = 0
    x_unconverged: int = 0
    p_unconverged: int = 0
    infeasible_x_steps: int = 0
    descent: list = None

    def record(self, objective, nmse, l1=None, delta=None, epsilon=None):
        self.iterations += 1
        self.objective.append(float(objective))
        self.nmse.append(float(nmse))
        if l1 is not None:
            self.l1.append(float(l1))
            self.delta.append(float(delta))
            self.epsilon.append(float(epsilon))

    def to_dict(self, max_points=None):
        """ JSON-ready dict; traces longer than max_points are thinned to
        evenly spaced iterations, the last one always kept.
        """
        d = asdict(self)
        traces = ("objective", "nmse", "l1", "delta", "epsilon")
        n = len(self.objective)
        if max_points is not None and n > max_points:
            keep = np.unique(np.linspace(0, n - 1, max_points).round()
                             .astype(int))
            d["trace_iterations"] = [int(k) + 1 for k in keep]
            for name in traces:
                values = d[name]
                if len(values) == n:
                    d[name] = [values[k] for k in keep]
                elif values:
                    offset = n - len(values)
                    d[name] = [values[k - offset] for k in keep
                               if k >= offset]
        return d


@dataclass(frozen=True, eq=False)
class Estimate(object):
    """ Result of a solve: P, x on [1, n_T], the full x (boundary
    intervals included), OD flows and the report.
    """
    P: AssignmentTensor
    x: FlowSeries
    x_full: FlowSeries
    od: FlowSeries
    report: SolveReport


class ForwardOperator(object):
    """ The bilinear map (P, x) -> y as sparse matrices.

    For the support entries e = (step k, link l, origin o) and observed
    intervals t = 1 .. n_T, entry e contributes P_e x_o^{t - k} to y_l^t.
    x is flattened origin-major over intervals 2 - tau_max .. n_T, y
    link-major over 1 .. n_T, P over its support entries.
    """

    def __init__(self, support, n_t):
        tau_max, n_links, n_origins = support.shape
        steps, links, cols = np.nonzero(support)
        self.n_t = n_t
        self.tau_max = tau_max
        self.nnz = len(steps)
        self.shape_y = (n_links, n_t)
        self.shape_x = (n_origins, n_t + tau_max - 1)
        t = np.arange(n_t)
        m = self.shape_x[1]
        self.rows = (links[:, None] * n_t + t[None, :]).ravel()
        self.xcols = (cols[:, None] * m + t[None, :] + tau_max - 1
                      - steps[:, None]).ravel()
        self.pcols = np.repeat(np.arange(self.nnz), n_t)
        self._n_rows = n_links * n_t

    def x_matrix(self, v):
        """ y = X x for fixed P entries v """
        return scipy.sparse.csr_matrix(
            (v[self.pcols], (self.rows, self.xcols)),
            shape=(self._n_rows, self.shape_x[0] * self.shape_x[1]))

    def p_matrix(self, x):
        """ y = M v for fixed flattened O-flows x """
        return scipy.sparse.csr_matrix(
            (x[self.xcols], (self.rows, self.pcols)),
            shape=(self._n_rows, self.nnz))

    def apply(self, v, x):
        return np.bincount(self.rows, weights=v[self.pcols] * x[self.xcols],
                           minlength=self._n_rows)


def _frobenius2(matrix):
    if scipy.sparse.issparse(matrix):
        return float(matrix.multiply(matrix).sum())
    return float((matrix * matrix).sum())


def _spectral2(matrix, iterations=200):
    """ estimate of ||matrix||_2^2 by power iteration, padded by 5% """
    n = matrix.shape[1]
    if n == 0:
        return 0.0
    v = np.ones(n) / math.sqrt(n)
    estimate = 0.0
    for it in range(iterations):
        w = matrix.T @ (matrix @ v)
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0
        v = w / norm
        if abs(norm - estimate) <= 1e-10 * norm:
            estimate = norm
            break
        estimate = norm
    return 1.05 * estimate


def projected_gradient(matrix, b, z0, project, max_iter, tol):
    """ Minimizes ||matrix z - b||^2 over a convex set.

    Barzilai-Borwein trial steps with Armijo backtracking along the
    projected direction, so the objective never increases. Stops when the
    projected step, relative to the size of z, falls below tol.

    Parameters:
    -----------
    matrix: dense or sparse array
    b: array
    z0: array
        Feasible starting point.
    project: callable
        Euclidean projection on the feasible set.

    Returns:
    --------
    (z, objective, converged, iterations)
    """
    z = np.array(z0, dtype=float)
    r = matrix @ z - b
    f = float(r @ r)
    lip = 2.0 * _frobenius2(matrix)
    if lip == 0.0:
        return z, f, True, 0
    g = 2.0 * (matrix.T @ r)
    alpha = 1.0 / lip
    for it in range(1, max_iter + 1):
        halvings = 0
        while True:
            z_new = project(z - alpha * g)
            d = z_new - z
            r_new = matrix @ z_new - b
            f_new = float(r_new @ r_new)
            if f_new <= f + ARMIJO * float(g @ d):
                break
            alpha *= 0.5
            halvings += 1
            if halvings > MAX_HALVINGS:
                return z, f, False, it
        scale = max(float(np.abs(z).max()), float(np.abs(z_new).max()))
        step = float(np.abs(d).max()) * max(1.0, 1.0 / (alpha * lip))
        kkt = step / scale if scale > 0 else 0.0
        g_new = 2.0 * (matrix.T @ r_new)
        sy = float(d @ (g_new - g))
        z, f, g = z_new, f_new, g_new
        if kkt <= tol:
            return z, f, True, it
        alpha = float(d @ d) / sy if sy > 0 else 1.0 / lip
        alpha = min(max(alpha, 1e-10 / lip), 1e10 / lip)
    return z, f, False, max_iter


def _nonneg(z):
    return np.maximum(z, 0.0)


def _residual2(matrix, z, b):
    r = matrix @ z - b
    return float(r @ r)


def _x_update(op, v, y_vec, x0, cfg):
    """ least-residual x >= 0 for fixed P, never worse than x0 """
    matrix = op.x_matrix(v)
    f0 = _residual2(matrix, x0, y_vec)
    if matrix.shape[0] * matrix.shape[1] <= cfg.dense_limit:
        try:
            z, _ = scipy.optimize.nnls(matrix.toarray(), y_vec,
                                       maxiter=50 * matrix.shape[1])
        except RuntimeError as e:
            logger.debug("NNLS gave up (%s), projected gradient instead", e)
        else:
            f = _residual2(matrix, z, y_vec)
            if f <= f0:
                return z, f, True
            return x0, f0, True
    z, f, converged, _ = projected_gradient(matrix, y_vec, x0, _nonneg,
                                            cfg.x_max_inner, cfg.kkt_tol)
    return z, f, converged


def _p_update(op, x, y_vec, v0, polytope, cfg):
    matrix = op.p_matrix(x)
    z, f, converged, _ = projected_gradient(matrix, y_vec, v0,
                                            polytope.project, cfg.p_max_inner,
                                            cfg.kkt_tol)
    return z, f, converged


def _penalized(matrix, b, lam, z0, D, lip, shape, cfg):
    """ FISTA on ||matrix z - b||^2 + lam sum_o ||D z_o||_1, z >= 0 """
    z = np.array(z0, dtype=float)
    w = z.copy()
    t = 1.0
    step = 1.0 / lip
    for it in range(cfg.l1_inner):
        g = 2.0 * (matrix.T @ (matrix @ w - b))
        z_new = prox_l1_nonneg((w - step * g).reshape(shape), lam * step,
                               D).ravel()
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        w = z_new + ((t - 1.0) / t_new) * (z_new - z)
        change = float(np.abs(z_new - z).max())
        z, t = z_new, t_new
        if change <= cfg.kkt_tol * max(float(np.abs(z).max()), 1e-300):
            break
    return z


def _sparse_x_update(op, v, y_vec, x0, budget, D, lam0, cfg):
    """ x >= 0 of least sum_o ||D x_o||_1 with residual <= budget.

    The penalized problem is solved for a sequence of weights, bracketed
    and then bisected on a log scale until the residual constraint is
    active within 1%. The penalized runs start from x0 when it meets the
    budget. When even the least-residual x misses the budget, that x is
    returned and the step is flagged infeasible.

    Returns:
    --------
    (x, weight, feasible)
    """
    shape = op.shape_x
    x_ls, f_ls, _ = _x_update(op, v, y_vec, x0, cfg)
    if f_ls > budget:
        return x_ls, lam0, False
    if float(y_vec @ y_vec) <= budget:
        return np.zeros_like(x_ls), lam0, True
    matrix = op.x_matrix(v)
    lip = 2.0 * _spectral2(matrix)

    def l1(z):
        return D.l1(z.reshape(shape))

    best, best_l1 = x_ls, l1(x_ls)
    lo, hi = 0.0, None
    lam = lam0
    if not lam:
        lam = 0.1 * float(np.abs(D.analyze(
            (2.0 * (matrix.T @ y_vec)).reshape(shape))).max())
    x0 = np.asarray(x0, dtype=float)
    x0_fits = _residual2(matrix, x0, y_vec) <= budget
    start = x0 if x0_fits else x_ls
    for it in range(cfg.bisect_max):
        z = _penalized(matrix, y_vec, lam, start, D, lip, shape, cfg)
        f = _residual2(matrix, z, y_vec)
        if f <= budget:
            lo = lam
            start = z
            l1_z = l1(z)
            if l1_z <= best_l1:
                best, best_l1 = z, l1_z
            if f >= ACTIVE_BAND * budget:
                break
        else:
            hi = lam
        if hi is None:
            lam *= 10.0
        elif lo == 0.0:
            lam = hi / 10.0
        else:
            lam = math.sqrt(lo * hi)
    weight = lo if lo > 0 else lam
    if x0_fits and l1(x0) <= best_l1:
        return x0.copy(), weight, True
    return best, weight, True


class _Problem(object):
    """ Fixed data of one solve """

    def __init__(self, y, net, paths, cfg):
        if net is not None and net != paths.network:
            raise PreconditionError(
                "path set was enumerated on another network")
        net = paths.network
        if y.entity_count != net.n_links:
            raise PreconditionError(
                "link flows have %i rows, network has %i links"
                % (y.entity_count, net.n_links))
        if y.t_begin != 1:
            raise PreconditionError("link flows must start at interval 1")
        if y.n_columns <= paths.tau_max:
            raise PreconditionError(
                "time horizon n_T=%i must exceed tau_max=%i"
                % (y.n_columns, paths.tau_max))
        if not paths.paths:
            raise PreconditionError("empty path set")
        self.net = net
        self.paths = paths
        self.cfg = cfg
        self.n_t = y.n_columns
        self.tau_max = paths.tau_max
        self.support = rigid_support(net, paths)
        self.op = ForwardOperator(self.support, self.n_t)
        self.polytope = AssignmentPolytope(net, self.support, paths.origins,
                                           cfg.dykstra_tol,
                                           cfg.dykstra_max_iter)
        y_vec = np.array(y.values, dtype=float).ravel()
        self.scale = float(np.abs(y_vec).max())
        if not self.scale > 0:
            raise PreconditionError("link flows are identically zero")
        # iterates are O-flows for y / max |y|; reports are in units of y
        self.y_vec = y_vec / self.scale
        self.ny2 = float(self.y_vec @ self.y_vec)
        self.s2 = self.scale * self.scale

    def tensor(self, v):
        values = np.zeros(self.support.shape)
        values[self.support] = v
        return AssignmentTensor(self.net, self.paths.origins, values,
                                self.support)

    def flows(self, x):
        return FlowSeries(x.reshape(self.op.shape_x), 2 - self.tau_max,
                          self.paths.origin_labels()).scaled(self.scale)

    def check(self, v, x, report):
        residual = self.polytope.residual(v)
        residual["C1"] = float(max(0.0, -x.min()))
        eq_tol, ineq_tol = config.get_tolerances()
        if residual["C3"] > eq_tol or max(residual["C1"], residual["C2"],
                                          residual["C5"]) > ineq_tol:
            report.feasibility_violations += 1
            logger.warning("iteration %i: infeasible iterate %s",
                           report.iterations, residual)


def init_assignment(paths, seed, support=None):
    """ Random feasible assignment tensor.

    Every origin draws a uniform point of the simplex over all its paths;
    the path shares go through the path -> OD -> O-flow conversions, which
    yields C2-C5 on the rigid support by construction.
    """
    if support is not None:
        support = np.asarray(support, dtype=bool)
        empty = np.flatnonzero(~support.any(axis=(0, 1)))
        if len(empty):
            raise PreconditionError("origin %i has an empty support"
                                    % (paths.origins[empty[0]] + 1))
    rng = make_rng(seed, INIT_STREAM)
    path_origin = paths.path_origin()
    weights = np.zeros(paths.n_paths)
    for k in range(len(paths.origins)):
        members = np.flatnonzero(path_origin == k)
        if not len(members):
            raise PreconditionError("origin %i has no path"
                                    % (paths.origins[k] + 1))
        weights[members] = random_simplex(rng, len(members))
    P, _ = shares_to_assignment(paths, weights)
    if support is not None and not np.array_equal(support, P.support):
        raise PreconditionError("support does not match the rigid support "
                                "of the path set")
    return P


def _horizon(y, tau_max):
    if y.t_begin != 1:
        raise PreconditionError("link flows must start at interval 1")
    return y.n_columns


def _initial_x(x_init, shape, tau_max):
    if x_init is None:
        return np.zeros(shape[0] * shape[1])
    if x_init.values.shape != shape or x_init.t_begin != 2 - tau_max:
        raise PreconditionError(
            "initial O-flows must span [%i, n_T] for %i origins"
            % (2 - tau_max, shape[0]))
    return np.array(x_init.values, dtype=float).ravel()


def x_step(P, y, x_init=None, cfg=None):
    """ O-flows minimizing the link-flow residual for a fixed tensor.

    Returns a FlowSeries over intervals 2 - tau_max .. n_T whose objective
    is not above that of x_init (zero flows when not given).
    """
    cfg = cfg or SolverConfig()
    n_t = _horizon(y, P.tau_max)
    op = ForwardOperator(P.support, n_t)
    x0 = _initial_x(x_init, op.shape_x, P.tau_max)
    y_vec = np.array(y.values, dtype=float).ravel()
    z, f, converged = _x_update(op, P.vector(), y_vec, x0, cfg)
    if not converged:
        logger.warning("x-step stopped at the iteration cap (objective %g)", f)
    labels = ["%i" % (o + 1) for o in P.origins]
    return FlowSeries(z.reshape(op.shape_x), 2 - P.tau_max, labels)


def p_step(x, y, support, P_init, cfg=None, polytope=None):
    """ Assignment tensor minimizing the link-flow residual for fixed
    O-flows, over the C2-C5 polytope, starting from the feasible P_init.
    """
    cfg = cfg or SolverConfig()
    if support is not None and not np.array_equal(np.asarray(support, bool),
                                                  P_init.support):
        raise PreconditionError("support differs from the support of P_init")
    n_t = _horizon(y, P_init.tau_max)
    op = ForwardOperator(P_init.support, n_t)
    if x.values.shape != op.shape_x or x.t_begin != 2 - P_init.tau_max:
        raise PreconditionError("O-flows must span [%i, n_T] for %i origins"
                                % (2 - P_init.tau_max, op.shape_x[0]))
    if polytope is None:
        polytope = AssignmentPolytope(P_init.network, P_init.support,
                                      P_init.origins, cfg.dykstra_tol,
                                      cfg.dykstra_max_iter)
    y_vec = np.array(y.values, dtype=float).ravel()
    v, f, converged = _p_update(op, np.array(x.values).ravel(), y_vec,
                                P_init.vector(), polytope, cfg)
    if not converged:
        logger.warning("P-step stopped at the iteration cap (objective %g)", f)
    return P_init.with_vector(v)


def _alternate(problem, v, x, report, target_nmse):
    """ Plain Gauss-Seidel iterations until target_nmse, a stall or the
    iteration cap. Returns (v, x, termination).
    """
    cfg = problem.cfg
    op, y_vec, ny2 = problem.op, problem.y_vec, problem.ny2
    slack = cfg.monotone_tol * ny2
    f_prev = float(np.sum((op.apply(v, x) - y_vec) ** 2))
    nmse_prev = f_prev / ny2
    while report.iterations < cfg.max_iterations:
        x, f_x, converged = _x_update(op, v, y_vec, x, cfg)
        report.x_unconverged += not converged
        v, f_p, converged = _p_update(op, x, y_vec, v, problem.polytope, cfg)
        report.p_unconverged += not converged
        if cfg.check_invariants:
            if f_x > f_prev + slack or f_p > f_x + slack:
                report.monotonicity_violations += 1
                logger.warning("iteration %i: objective went up (%g -> %g "
                               "-> %g)", report.iterations + 1, f_prev, f_x,
                               f_p)
            problem.check(v, x, report)
        nmse = f_p / ny2
        report.record(f_p * problem.s2, nmse)
        if report.iterations % 100 == 0:
            logger.debug("iteration %i: NMSE %.3e", report.iterations, nmse)
        if nmse < target_nmse:
            return v, x, "nmse"
        if nmse_prev - nmse < cfg.stall_tol:
            return v, x, "delta-stall"
        f_prev, nmse_prev = f_p, nmse
    return v, x, "max-iter"


def _extrapolate(problem, v_prev, v, x, budget, D, weight):
    """ Pushes P further along its last change v - v_prev.

    The step doubles while the least-squares O-flows of the projected
    tensor still meet the residual budget, then the last feasible step is
    refined by bisection. Nothing is tried when a single step already misses
    the budget. The sparse x-step found there is kept only when it lowers
    the l1 norm.

    Returns:
    --------
    (v, x, weight), or None when no better point was found
    """
    cfg = problem.cfg
    op, y_vec = problem.op, problem.y_vec
    d = v - v_prev
    reach = float(np.abs(d).max())
    if reach <= 1e-12 * max(1.0, float(np.abs(v).max())):
        return None
    lo, hi, best = 0.0, None, None
    for it in range(cfg.extrapolation_steps):
        if hi is not None and hi - lo <= 1e-6 * hi:
            break
        step = max(2.0 * lo, 1.0) if hi is None else 0.5 * (lo + hi)
        if step * reach > 1.0:
            # entries live in [0, 1]
            hi = step
            continue
        candidate = problem.polytope.project(v + step * d)
        _, f, _ = _x_update(op, candidate, y_vec, x, cfg)
        if f <= budget:
            lo, best = step, candidate
        else:
            hi = step
            if best is None:
                return None
    if best is None:
        return None
    z, weight, feasible = _sparse_x_update(op, best, y_vec, x, budget, D,
                                           weight, cfg)
    if not feasible or D.l1(z.reshape(op.shape_x)) >= D.l1(
            x.reshape(op.shape_x)):
        return None
    logger.debug("P extrapolated %g steps ahead", lo)
    return best, z, weight


def _sparse_phase(problem, v, x, report, D):
    """ l1 minimization under the residual budget, with epsilon relaxation """
    cfg = problem.cfg
    op, y_vec, ny2 = problem.op, problem.y_vec, problem.ny2
    shape = op.shape_x
    eps = cfg.epsilon
    eps_now = eps
    relaxed = False
    since_relax = 0
    settle = 0
    weight = None
    l1_prev = D.l1(x.reshape(shape))
    while report.iterations < cfg.max_iterations:
        v_prev = v
        budget = eps_now * ny2
        x, weight, feasible = _sparse_x_update(op, v, y_vec, x, budget, D,
                                               weight, cfg)
        report.infeasible_x_steps += not feasible
        v, f_p, converged = _p_update(op, x, y_vec, v, problem.polytope, cfg)
        report.p_unconverged += not converged
        if feasible and cfg.extrapolation_steps:
            pushed = _extrapolate(problem, v_prev, v, x, budget, D, weight)
            if pushed is not None:
                v, x, weight = pushed
                f_p = float(np.sum((op.apply(v, x) - y_vec) ** 2))
        if cfg.check_invariants:
            problem.check(v, x, report)
        l1 = D.l1(x.reshape(shape))
        delta = l1_prev - l1
        l1_prev = l1
        report.record(f_p * problem.s2, f_p / ny2, l1 * problem.scale,
                      delta * problem.scale, eps_now)
        if eps_now > eps:
            since_relax += 1
            if since_relax % cfg.relax_period == 0:
                eps_now = max(eps, eps_now / 2.0)
                if eps_now == eps:
                    settle = cfg.relax_period
                    logger.info("iteration %i: epsilon back to %g",
                                report.iterations, eps)
            continue
        if settle > 0:
            settle -= 1
            continue
        if delta < cfg.delta_stop:
            if not relaxed and eps > 0 and cfg.relax_factor > 1:
                relaxed = True
                eps_now = eps * cfg.relax_factor
                since_relax = 0
                logger.info("iteration %i: stalled, epsilon relaxed to %g",
                            report.iterations, eps_now)
                continue
            return v, x, "delta-stall"
    return v, x, "max-iter"


def _lasso_phase(problem, v, x, report, D):
    """ alternation on 1/2 f + l1_weight sum_o ||D x_o||_1 """
    cfg = problem.cfg
    op, y_vec, ny2 = problem.op, problem.y_vec, problem.ny2
    shape = op.shape_x
    # the same objective in the units of y / max |y|, divided by scale^2
    weight = cfg.l1_weight / problem.scale
    lam = 2.0 * weight

    def objective(v, x):
        f = float(np.sum((op.apply(v, x) - y_vec) ** 2))
        return f, 0.5 * f + weight * D.l1(x.reshape(shape))

    _, j_prev = objective(v, x)
    while report.iterations < cfg.max_iterations:
        matrix = op.x_matrix(v)
        lip = 2.0 * _spectral2(matrix)
        if lip > 0:
            candidate = _penalized(matrix, y_vec, lam, x, D, lip, shape, cfg)
            if objective(v, candidate)[1] <= objective(v, x)[1]:
                x = candidate
        v, f_p, converged = _p_update(op, x, y_vec, v, problem.polytope, cfg)
        report.p_unconverged += not converged
        if cfg.check_invariants:
            problem.check(v, x, report)
        f, j = objective(v, x)
        delta = j_prev - j
        j_prev = j
        report.record(f * problem.s2, f / ny2,
                      D.l1(x.reshape(shape)) * problem.scale,
                      delta * problem.s2, cfg.l1_weight)
        if delta < cfg.delta_stop:
            return v, x, "delta-stall"
    return v, x, "max-iter"


def _finish(problem, v, x, report, started):
    P = problem.tensor(v)
    x_full = problem.flows(x)
    report.final_nmse = float(np.sum((problem.op.apply(v, x)
                                      - problem.y_vec) ** 2)) / problem.ny2
    report.residuals = dict(assignment_residuals(P), **flow_residual(x_full))
    report.duration = time.perf_counter() - started
    logger.info("%s solve: %s after %i iterations, NMSE %.3e",
                report.mode, report.termination, report.iterations,
                report.final_nmse)
    return P, x_full


def _solve(y, net, paths, cfg, mode, P_init=None, D=None):
    cfg = cfg or SolverConfig()
    if mode not in MODES:
        raise ConfigError("unknown mode %r (known: %s)"
                          % (mode, ", ".join(MODES)))
    if mode == "lasso" and cfg.l1_weight is None:
        raise ConfigError("lasso mode needs l1_weight")
    started = time.perf_counter()
    problem = _Problem(y, net, paths, cfg)
    if P_init is None:
        P_init = init_assignment(paths, cfg.seed)
    elif not np.array_equal(P_init.support, problem.support):
        raise PreconditionError(
            "initial tensor does not have the rigid support")
    if mode != "plain":
        if D is None:
            D = transform_matrix(cfg.basis, problem.op.shape_x[1])
        elif D.size != problem.op.shape_x[1]:
            raise PreconditionError(
                "transform size %i, O-flow series length %i"
                % (D.size, problem.op.shape_x[1]))
    report = SolveReport(mode=mode)
    v = P_init.vector()
    x = np.zeros(problem.op.shape_x[0] * problem.op.shape_x[1])
    if mode == "plain":
        v, x, report.termination = _alternate(problem, v, x, report,
                                              cfg.nmse_stop)
    elif mode == "sparse":
        target = cfg.epsilon if cfg.epsilon > 0 else cfg.nmse_stop
        v, x, reason = _alternate(problem, v, x, report, target)
        report.phase1_iterations = report.iterations
        if reason == "max-iter":
            report.phase1_failed = True
            report.termination = reason
            logger.warning("sparse solve: phase 1 did not reach NMSE %g",
                           target)
        else:
            logger.info("sparse solve: phase 1 ended (%s) after %i iterations",
                        reason, report.iterations)
            v, x, report.termination = _sparse_phase(problem, v, x, report, D)
    else:
        x, _, _ = _x_update(problem.op, v, problem.y_vec, x, cfg)
        v, x, report.termination = _lasso_phase(problem, v, x, report, D)
    P, x_full = _finish(problem, v, x, report, started)
    return problem, P, x_full, report


def _reported(x_full):
    return x_full.window(1, x_full.t_end)


def gauss_seidel(y, net, paths, cfg=None, P_init=None):
    """ Plain alternating minimization.

    Returns:
    --------
    (AssignmentTensor, O-flows on [1, n_T], SolveReport)
    """
    _, P, x_full, report = _solve(y, net, paths, cfg, "plain", P_init)
    return P, _reported(x_full), report


def gauss_seidel_sparse(y, net, paths, D=None, cfg=None, P_init=None):
    """ Two-phase sparse estimation; D defaults to the orthonormal DCT of
    length n_T + tau_max - 1.
    """
    _, P, x_full, report = _solve(y, net, paths, cfg, "sparse", P_init, D)
    return P, _reported(x_full), report


def descent_diagnostic(y, estimate, truth, points=11):
    """ Link-flow NMSE along the segment from an estimate to the truth.

    Both ends are feasible and the feasible set is convex, so the whole
    segment is; a decrease next to the estimate shows it is not a local
    minimum.

    Parameters:
    -----------
    estimate, truth: (AssignmentTensor, O-flows on [2 - tau_max, n_T])

    Returns:
    --------
    list of (lambda, NMSE) for lambda evenly spaced in [0, 1]
    """
    P_hat, x_hat = estimate
    P_true, x_true = truth
    if not np.array_equal(P_hat.support, P_true.support):
        raise PreconditionError("estimate and truth have different supports")
    op = ForwardOperator(P_hat.support, y.n_columns)
    y_vec = np.array(y.values, dtype=float).ravel()
    ny2 = float(y_vec @ y_vec)
    v0, v1 = P_hat.vector(), P_true.vector()
    z0 = np.array(x_hat.values).ravel()
    z1 = np.array(x_true.window(x_hat.t_begin, x_hat.t_end).values).ravel()
    out = []
    for lam in np.linspace(0.0, 1.0, points):
        v = (1.0 - lam) * v0 + lam * v1
        z = (1.0 - lam) * z0 + lam * z1
        out.append((float(lam),
                    float(np.sum((op.apply(v, z) - y_vec) ** 2)) / ny2))
    return out


def solve(y, paths, cfg=None, mode="plain", truth=None, P_init=None):
    """ Solves and recovers OD flows.

    Parameters:
    -----------
    truth: GroundTruth, optional
        When given, the descent diagnostic toward the truth is added to
        the report.

    Returns:
    --------
    Estimate
    """
    problem, P, x_full, report = _solve(y, paths.network, paths, cfg, mode,
                                        P_init)
    if truth is not None:
        report.descent = descent_diagnostic(y, (P, x_full),
                                            (truth.P, truth.x))
    x = _reported(x_full)
    od = oflow_to_od_multi(x, P, paths.od_pairs, (1, x.t_end))
    return Estimate(P, x, x_full, od, report)


def estimate_od(y, net, paths, cfg=None, mode="plain", known=None):
    """ OD flows on [1, n_T] estimated from link flows.

    Parameters:
    -----------
    known: (AssignmentTensor, O-flows), optional
        Skips solving and recovers the OD flows of a known tensor and
        O-flow series, e.g. those of a ground truth.
    """
    if net is not None and net != paths.network:
        raise PreconditionError(
            "path set was enumerated on another network")
    if known is not None:
        P, x = known
        return oflow_to_od_multi(x, P, paths.od_pairs, (1, y.t_end))
    return solve(y, paths, cfg, mode).od
