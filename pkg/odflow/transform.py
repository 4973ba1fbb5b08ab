"""
    transform module.

    Orthonormal transforms used as the temporal sparsity basis of O-flows:
    the DCT-II (smooth series with few frequencies) and the identity (series
    with few nonzero intervals). c = D x, x = D^T c.
"""
import functools
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .odflowerrors import ConfigError, FlowError

BASES = ("dct", "identity")


@dataclass(frozen=True, eq=False)
class TransformMatrix(object):
    """ Dense orthonormal transform of a fixed length.

    Parameters:
    -----------
    size: int
        Signal length n
    matrix: array (n, n)
        Row k is the k-th basis vector.
    basis: str
        "dct" (row 0 is constant 1/sqrt(n)) or "identity".
    """
    size: int
    matrix: np.ndarray
    basis: str = "dct"

    @property
    def is_identity(self):
        return self.basis == "identity"

    def _check(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.size:
            raise FlowError("length %i does not match transform size %i"
                            % (v.shape[-1], self.size))
        return v

    def analyze(self, x):
        """ coefficients D x; a 2-D input is transformed row by row """
        x = self._check(x)
        if self.is_identity:
            return x.copy()
        return x @ self.matrix.T

    def synthesize(self, c):
        """ signal D^T c; a 2-D input is transformed row by row """
        c = self._check(c)
        if self.is_identity:
            return c.copy()
        return c @ self.matrix

    def l1(self, x):
        """ sum over rows of ||D x_row||_1 """
        return float(np.abs(self.analyze(x)).sum())


def _check_size(n):
    if n < 1:
        raise FlowError("transform size must be >= 1, got %i" % n)


@functools.lru_cache(maxsize=32)
def dct_matrix(n):
    """ Orthonormal type-II DCT matrix of size n """
    _check_size(n)
    matrix = scipy.fft.dct(np.eye(n), type=2, norm="ortho", axis=0)
    matrix.setflags(write=False)
    return TransformMatrix(n, matrix)


@functools.lru_cache(maxsize=32)
def identity_matrix(n):
    """ Identity basis: sparsity in time rather than in frequency """
    _check_size(n)
    matrix = np.eye(n)
    matrix.setflags(write=False)
    return TransformMatrix(n, matrix, "identity")


def transform_matrix(basis, n):
    if basis == "dct":
        return dct_matrix(n)
    if basis == "identity":
        return identity_matrix(n)
    raise ConfigError("unknown sparsity basis %r (known: %s)"
                      % (basis, ", ".join(BASES)))
