"""
    uniqueness module.

    Equation and unknown counting for the blind estimation problem.

    With n_l links, n_O origins, n_T intervals and n_4 assignment entries
    forced to zero by the speed constraint, a unique solution needs

      single-step:  n_l n_T + n_O + n_4 >= n_l n_O + n_O n_T
      multi-step:   n_l n_T + n_O + n_4 >= tau_max n_l n_O + n_O n_T

    The unknown count n_O n_T leaves out the boundary O-flows x^t, t <= 0,
    which are not recoverable anyway. All arithmetic is done on integers
    and Fractions.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction

from .flowmodel import rigid_support, single_step_support
from .odflowerrors import ConfigError

logger = logging.getLogger(__name__)

MODELS = ("single", "multi")


@dataclass(frozen=True)
class CountSummary(object):
    """ Counts entering the necessary conditions.

    Parameters:
    -----------
    n_links: int
    n_origins: int
        Nodes with at least one OD pair.
    n_zero: int
        Zero-forced entries of the multi-step tensor.
    n_zero_single: int
        Zero-forced entries of the single-step tensor.
    n_t: int or None
    tau_max: int
    """
    n_links: int
    n_origins: int
    n_zero: int
    n_zero_single: int
    n_t: int
    tau_max: int

    def __post_init__(self):
        for name in ("n_links", "n_origins", "n_zero", "n_zero_single",
                     "tau_max"):
            if getattr(self, name) < 0:
                raise ConfigError("%s must be >= 0" % name)
        if self.n_zero > self.tau_max * self.n_links * self.n_origins:
            raise ConfigError("more zero-forced entries than tensor entries")
        if self.n_t is not None and self.n_t < 0:
            raise ConfigError("n_t must be >= 0")

    @property
    def c(self):
        """ links per origin """
        if self.n_origins == 0:
            return None
        return Fraction(self.n_links, self.n_origins)

    def steps(self, model):
        _check_model(model)
        return self.tau_max if model == "multi" else 1

    def zeros(self, model):
        return self.n_zero if model == "multi" else self.n_zero_single

    def to_dict(self):
        return {"n_links": self.n_links, "n_origins": self.n_origins,
                "n_zero": self.n_zero, "n_zero_single": self.n_zero_single,
                "n_t": self.n_t, "tau_max": self.tau_max,
                "c": None if self.c is None else str(self.c)}


@dataclass(frozen=True)
class ConditionResult(object):
    holds: bool
    margin: int
    lhs: int
    rhs: int
    note: str = None

    def to_dict(self):
        d = {"holds": self.holds, "margin": self.margin, "lhs": self.lhs,
             "rhs": self.rhs}
        if self.note:
            d["note"] = self.note
        return d


def _check_model(model):
    if model not in MODELS:
        raise ConfigError("unknown model %r (known: %s)"
                          % (model, ", ".join(MODELS)))


def count_constraints(net, paths, n_t=None):
    """ CountSummary of a path set; n_4 is taken over the rigid support
    (multi-step) and its union over steps (single-step).
    """
    multi = rigid_support(net, paths)
    single = single_step_support(paths)
    n_links = paths.network.n_links
    n_origins = len(paths.origins)
    return CountSummary(
        n_links=n_links,
        n_origins=n_origins,
        n_zero=int(multi.size - multi.sum()),
        n_zero_single=int(single.size - single.sum()),
        n_t=None if n_t is None else int(n_t),
        tau_max=paths.tau_max)


def _sides(summary, model, n_t):
    k = summary.steps(model)
    lhs = (summary.n_links * n_t + summary.n_origins + summary.zeros(model))
    rhs = k * summary.n_links * summary.n_origins + summary.n_origins * n_t
    return lhs, rhs


def necessary_condition(summary, model="multi", n_t=None):
    """ Evaluates the counting condition for one model.

    Parameters:
    -----------
    summary: CountSummary
    model: "single" or "multi"
    n_t: int, optional
        Overrides summary.n_t.

    Returns:
    --------
    ConditionResult with margin = lhs - rhs.
    """
    _check_model(model)
    n_t = summary.n_t if n_t is None else n_t
    if n_t is None:
        raise ConfigError("the condition needs a time horizon n_t")
    lhs, rhs = _sides(summary, model, n_t)
    margin = lhs - rhs
    note = None
    if margin < 0 and summary.n_links <= summary.n_origins:
        note = "condition cannot be met by growing n_T"
    return ConditionResult(margin >= 0, margin, lhs, rhs, note)


def minimal_horizon(summary, model="multi"):
    """ Smallest n_T >= 1 satisfying the condition, None if there is none """
    _check_model(model)
    lhs, rhs = _sides(summary, model, 1)
    if lhs >= rhs:
        return 1
    slope = summary.n_links - summary.n_origins
    if slope <= 0:
        return None
    deficit = rhs - lhs
    return 1 + -(-deficit // slope)


def rule_of_thumb_nT(summary, model="multi"):
    """ ceil(K c / (c - 1) n_O) with K = tau_max (multi) or 1 (single).

    Returns None when c <= 1: no horizon is long enough.
    """
    c = summary.c
    if c is None or c <= 1:
        logger.info("c = %s <= 1, the horizon bound is unbounded", c)
        return None
    bound = summary.steps(model) * c / (c - 1) * summary.n_origins
    return int(math.ceil(bound))


def flag_chain_subgraph(net):
    """ Node triples (a, b, c), 0-based, with links a->b and b->c and
    neither reverse link. Such chains make the unidirectional problem
    non-unique.
    """
    out = []
    successors = [[] for _ in range(net.node_count)]
    predecessors = [[] for _ in range(net.node_count)]
    for a, b in net.links:
        successors[a].append(b)
        predecessors[b].append(a)
    for b in range(net.node_count):
        for a in sorted(predecessors[b]):
            if net.has_link(b, a):
                continue
            for c in sorted(successors[b]):
                if c == a or net.has_link(c, b):
                    continue
                out.append((a, b, c))
    return out


def uniqueness_report(net, paths, n_t):
    """ JSON-ready uniqueness report of a network and horizon """
    summary = count_constraints(net, paths, n_t)
    report = {"network": paths.network.name, "counts": summary.to_dict()}
    for model in MODELS:
        report[model] = dict(
            necessary_condition(summary, model).to_dict(),
            rule_of_thumb_n_t=rule_of_thumb_nT(summary, model),
            minimal_n_t=minimal_horizon(summary, model))
    triples = flag_chain_subgraph(paths.network)
    report["chain_subgraphs"] = [[a + 1, b + 1, c + 1] for a, b, c in triples]
    if triples:
        logger.warning("%s has %i unidirectional chain subgraphs: the "
                       "estimate may not be unique", paths.network.name,
                       len(triples))
    return report
