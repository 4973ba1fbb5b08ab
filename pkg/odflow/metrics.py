"""
    metrics module.

    Evaluation of estimates: NMSE of the link-flow fit, relative errors of
    OD flows with their 95% band, and histogram summaries.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .odflowerrors import MetricsError

logger = logging.getLogger(__name__)

DEFAULT_FLOOR = 1e-6
DEFAULT_BIN_WIDTH = 0.001
BAND = (2.5, 97.5)


def _values(series):
    return np.asarray(getattr(series, "values", series), dtype=float)


def nmse(y_hat, y):
    """ sum_t ||y_hat^t - y^t||^2 / sum_t ||y^t||^2

    Parameters:
    -----------
    y_hat, y: FlowSeries or arrays of the same shape
    """
    a, b = _values(y_hat), _values(y)
    if a.shape != b.shape:
        raise MetricsError("shape %s differs from %s" % (a.shape, b.shape))
    denominator = float(np.sum(b * b))
    if denominator == 0.0:
        raise MetricsError("NMSE of an identically zero reference")
    return float(np.sum((a - b) ** 2)) / denominator


@dataclass(frozen=True, eq=False)
class Histogram(object):
    """ Bins of width `bin_width`; percent[k] is the share of entries in
    [edges[k], edges[k+1]), the last bin being closed.
    """
    edges: np.ndarray
    percent: np.ndarray
    bin_width: float

    def rows(self):
        return [(float(self.edges[k]), float(self.edges[k + 1]),
                 float(self.percent[k])) for k in range(len(self.percent))]


def histogram(errors, bin_width=DEFAULT_BIN_WIDTH):
    """ Percentage of errors per bin, bins aligned on multiples of
    bin_width """
    if not bin_width > 0:
        raise MetricsError("bin width must be > 0, got %r" % bin_width)
    errors = np.asarray(errors, dtype=float).ravel()
    if errors.size == 0:
        raise MetricsError("histogram of an empty error set")
    lo = math.floor(errors.min() / bin_width)
    hi = math.ceil(errors.max() / bin_width)
    if hi <= lo:
        hi = lo + 1
    edges = np.arange(lo, hi + 1) * bin_width
    if edges[0] > errors.min():
        edges = np.concatenate([[edges[0] - bin_width], edges])
    if edges[-1] < errors.max():
        edges = np.concatenate([edges, [edges[-1] + bin_width]])
    counts, _ = np.histogram(errors, bins=edges)
    return Histogram(edges, 100.0 * counts / errors.size, float(bin_width))


@dataclass(frozen=True, eq=False)
class ErrorSummary(object):
    """ Relative OD-flow errors over the entries whose true value reaches
    the floor; the others are only counted.
    """
    errors: np.ndarray
    n_excluded: int
    floor: float
    bin_width: float = DEFAULT_BIN_WIDTH
    mean_abs: float = field(init=False)
    low: float = field(init=False)
    high: float = field(init=False)

    def __post_init__(self):
        errors = np.asarray(self.errors, dtype=float).ravel()
        object.__setattr__(self, "errors", errors)
        if errors.size:
            low, high = np.percentile(errors, BAND)
            object.__setattr__(self, "mean_abs", float(np.abs(errors).mean()))
            object.__setattr__(self, "low", float(low))
            object.__setattr__(self, "high", float(high))
        else:
            object.__setattr__(self, "mean_abs", None)
            object.__setattr__(self, "low", None)
            object.__setattr__(self, "high", None)

    @property
    def n_included(self):
        return int(self.errors.size)

    def band_within(self, limit):
        """ True when the 95% band lies inside [-limit, limit] """
        return self.n_included > 0 and self.low >= -limit \
            and self.high <= limit

    def histogram(self):
        return histogram(self.errors, self.bin_width)

    def to_dict(self):
        return {"mean_abs": self.mean_abs,
                "band": [self.low, self.high],
                "max_abs": (float(np.abs(self.errors).max())
                            if self.n_included else None),
                "n_included": self.n_included,
                "n_excluded": self.n_excluded,
                "floor": self.floor,
                "bin_width": self.bin_width}


def relative_errors(s_hat, s, floor=DEFAULT_FLOOR,
                    bin_width=DEFAULT_BIN_WIDTH):
    """ Entrywise (s_hat - s) / s over entries with s >= floor.

    Parameters:
    -----------
    s_hat, s: FlowSeries or arrays of the same shape
    floor: float
        Entries of s below it are excluded and counted.
    """
    a, b = _values(s_hat), _values(s)
    if a.shape != b.shape:
        raise MetricsError("shape %s differs from %s" % (a.shape, b.shape))
    keep = b >= floor
    errors = (a[keep] - b[keep]) / b[keep]
    excluded = int(keep.size - keep.sum())
    if excluded:
        logger.info("%i of %i OD entries below %g excluded", excluded,
                    keep.size, floor)
    if not errors.size:
        logger.warning("no OD entry reaches the floor %g", floor)
    return ErrorSummary(errors, excluded, floor, bin_width)


def merge_summaries(summaries):
    """ Pools the included entries of several summaries """
    summaries = list(summaries)
    if not summaries:
        raise MetricsError("nothing to merge")
    return ErrorSummary(np.concatenate([s.errors for s in summaries]),
                        sum(s.n_excluded for s in summaries),
                        summaries[0].floor, summaries[0].bin_width)
