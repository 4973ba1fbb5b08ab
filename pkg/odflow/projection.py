"""
    projection module.

    Euclidean projection on the feasible set of assignment tensors, and the
    proximal map used by the sparse x-step.

    The feasible set is written over the support entries only (C4 holds by
    construction) as the intersection of
      - the box 0 <= v <= 1 (C2),
      - one hyperplane per origin: shares of links leaving the origin sum
        to 1 (C3),
      - for every step k >= 2 one block of half-spaces, one per (node,
        origin): inflow at step k-1 minus outflow at step k >= 0 (C5).
    Rows inside a block touch disjoint entries, so every block is projected
    on exactly in closed form. Dykstra's algorithm cycles through the
    blocks; an origin that is still infeasible after the sweep budget is
    projected on again with SLSQP when small enough.
"""
import logging

import numpy as np
import scipy.optimize
import scipy.sparse

from . import config
from .odflowerrors import ProjectionError

logger = logging.getLogger(__name__)


class AssignmentPolytope(object):
    """ C2 to C5 over the support entries of a tensor.

    Parameters:
    -----------
    network: Network
    support: bool array (tau_max, n_links, n_origins)
    origins: sequence of 0-based origin node ids
    tol: float
        Feasibility and step tolerance of the Dykstra sweeps.
    max_iter: int
        Sweep budget.
    qp_limit: int
        Largest per-origin variable count handed to the SLSQP polish.
    """

    def __init__(self, network, support, origins, tol=1e-11, max_iter=5000,
                 qp_limit=120):
        self.network = network
        self.support = np.asarray(support, dtype=bool)
        self.origins = tuple(int(o) for o in origins)
        self.tol = tol
        self.max_iter = max_iter
        self.qp_limit = qp_limit

        steps, links, cols = np.nonzero(self.support)
        self.size = len(steps)
        self.entry_origin = cols
        n_origins = len(self.origins)
        tails = network.tails[links]
        heads = network.heads[links]
        origin_nodes = np.array(self.origins, dtype=int)[cols]

        member = np.flatnonzero(tails == origin_nodes)
        self._eq = scipy.sparse.csr_matrix(
            (np.ones(len(member)), (cols[member], member)),
            shape=(n_origins, self.size))
        self._eq_count = np.bincount(cols[member], minlength=n_origins)
        for k in np.flatnonzero(self._eq_count == 0):
            raise ProjectionError("no link leaves the origin inside the "
                                  "support", self.origins[k])

        self._blocks = []
        n_nodes = network.node_count
        for k in range(1, self.support.shape[0]):
            ins = np.flatnonzero((steps == k - 1) & (heads != origin_nodes))
            outs = np.flatnonzero((steps == k) & (tails != origin_nodes))
            if len(outs) == 0:
                continue
            keys = np.concatenate([heads[ins] * n_origins + cols[ins],
                                   tails[outs] * n_origins + cols[outs]])
            uniq, rows = np.unique(keys, return_inverse=True)
            data = np.concatenate([np.ones(len(ins)), -np.ones(len(outs))])
            block = scipy.sparse.csr_matrix(
                (data, (rows, np.concatenate([ins, outs]))),
                shape=(len(uniq), self.size))
            norms = np.asarray(block.multiply(block).sum(axis=1)).ravel()
            self._blocks.append((block, norms, uniq % n_origins))
        logger.debug("polytope: %i entries, %i origins, %i C5 blocks",
                     self.size, n_origins, len(self._blocks))

    def _project_eq(self, z):
        r = self._eq @ z - 1.0
        return z - self._eq.T @ (r / self._eq_count)

    @staticmethod
    def _project_block(block, norms, z):
        s = block @ z
        return z - block.T @ (np.minimum(s, 0.0) / norms)

    @staticmethod
    def _project_box(z):
        return np.clip(z, 0.0, 1.0)

    def residual(self, v):
        """ worst violations of C2, C3 and C5 for a support vector """
        v = np.asarray(v, dtype=float)
        box = float(max(0.0, -v.min(), v.max() - 1.0)) if v.size else 0.0
        out = {"C2": box,
               "C3": float(np.abs(self._eq @ v - 1.0).max())}
        worst = 0.0
        for block, _, _ in self._blocks:
            worst = max(worst, float(-(block @ v).min()))
        out["C5"] = max(0.0, worst)
        return out

    def _origin_violation(self, v):
        worst = np.abs(self._eq @ v - 1.0)
        for block, _, owner in self._blocks:
            neg = np.maximum(-(block @ v), 0.0)
            np.maximum.at(worst, owner, neg)
        return worst

    def project(self, v):
        """ Euclidean projection of a support vector on the polytope """
        v = np.asarray(v, dtype=float)
        if v.shape != (self.size,):
            raise ProjectionError("vector of length %i for %i support entries"
                                  % (v.size, self.size))
        projectors = [self._project_eq]
        projectors.extend(
            (lambda z, b=b, n=n: self._project_block(b, n, z))
            for b, n, _ in self._blocks)
        projectors.append(self._project_box)
        increments = [np.zeros(self.size) for _ in projectors]
        x = v.copy()
        converged = False
        for sweep in range(1, self.max_iter + 1):
            previous = x
            for k, project in enumerate(projectors):
                z = x + increments[k]
                x = project(z)
                increments[k] = z - x
            step = float(np.abs(x - previous).max())
            if (step <= self.tol
                    and self._origin_violation(x).max() <= self.tol):
                converged = True
                break
        if not converged:
            x = self._polish(v, x)
        return x

    def _polish(self, v, x):
        violation = self._origin_violation(x)
        for k in np.flatnonzero(violation > self.tol):
            idx = np.flatnonzero(self.entry_origin == k)
            if len(idx) > self.qp_limit:
                continue
            logger.debug("origin %i: SLSQP polish of %i entries",
                         self.origins[k] + 1, len(idx))
            x[idx] = self._slsqp(v[idx], x[idx], k)
        violation = self._origin_violation(x)
        worst = float(violation.max()) if violation.size else 0.0
        if worst > config.EQUALITY_TOL:
            k = int(np.argmax(violation))
            raise ProjectionError("projection did not reach feasibility "
                                  "(violation %g)" % worst, self.origins[k])
        if worst > self.tol:
            logger.warning("projection stopped at violation %g after %i "
                           "sweeps", worst, self.max_iter)
        return x

    def _slsqp(self, target, start, k):
        a_eq, b_eq, g = self.dense_constraints(k)
        result = scipy.optimize.minimize(
            lambda z: 0.5 * np.dot(z - target, z - target), start,
            jac=lambda z: z - target, method="SLSQP",
            bounds=[(0.0, 1.0)] * len(target),
            constraints=[
                {"type": "eq", "fun": lambda z: a_eq @ z - b_eq,
                 "jac": lambda z: a_eq},
                {"type": "ineq", "fun": lambda z: g @ z, "jac": lambda z: g},
            ],
            options={"ftol": 1e-15, "maxiter": 1000})
        if not result.success:
            logger.warning("SLSQP polish of origin %i: %s",
                           self.origins[k] + 1, result.message)
        return np.clip(result.x, 0.0, 1.0)

    def dense_constraints(self, origin=None):
        """ Dense form of C3 and C5.

        Returns:
        --------
        (A_eq, b_eq, G) with the polytope being
        {v : A_eq v = b_eq, G v >= 0, 0 <= v <= 1}. With `origin` (a
        position on the origin axis) only that origin's rows and columns
        are kept.
        """
        a_eq = self._eq.toarray()
        rows = [block.toarray() for block, _, _ in self._blocks]
        owners = [owner for _, _, owner in self._blocks]
        g = np.vstack(rows) if rows else np.zeros((0, self.size))
        owner = np.concatenate(owners) if owners else np.zeros(0, dtype=int)
        b_eq = np.ones(a_eq.shape[0])
        if origin is None:
            return a_eq, b_eq, g
        cols = np.flatnonzero(self.entry_origin == origin)
        return (a_eq[[origin]][:, cols], b_eq[[origin]],
                g[owner == origin][:, cols])


def soft_threshold(c, threshold):
    return np.sign(c) * np.maximum(np.abs(c) - threshold, 0.0)


def prox_l1_nonneg(v, threshold, transform, max_iter=500, tol=1e-12):
    """ argmin_z 1/2 ||z - v||^2 + threshold * sum_rows ||D z_row||_1, z >= 0

    Each row is one origin series. Solved with the Dykstra-like proximal
    splitting of the two terms: the l1 term alone is soft thresholding of
    the coefficients, nonnegativity alone is clipping. In the identity basis
    the two commute and the solution is max(v - threshold, 0).

    Parameters:
    -----------
    v: array (rows, n)
    threshold: float or array broadcastable to (rows, 1)
    transform: TransformMatrix of size n
    """
    v = np.asarray(v, dtype=float)
    threshold = np.asarray(threshold, dtype=float)
    if not np.any(threshold > 0):
        return np.maximum(v, 0.0)
    if transform.is_identity:
        return np.maximum(v - threshold, 0.0)
    x = v.copy()
    p = np.zeros_like(v)
    q = np.zeros_like(v)
    for it in range(max_iter):
        y = transform.synthesize(soft_threshold(transform.analyze(x + p),
                                                threshold))
        p = x + p - y
        x_new = np.maximum(y + q, 0.0)
        q = y + q - x_new
        change = float(np.abs(x_new - x).max())
        x = x_new
        if change <= tol * max(float(np.abs(x).max()), 1e-300):
            break
    return x
