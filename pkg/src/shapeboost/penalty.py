# -*- coding: utf-8 -*-
"""Difference matrices and quadratic penalties.

Ordinary and circular difference matrices, the quadratic smoothness
penalty, one-sided (asymmetric) constraint penalties with state-dependent
0/1 weights, masked boundary penalties, and the Kronecker-sum and
Kronecker-expanded penalties for surface terms.
"""

from dataclasses import dataclass, field
from math import comb

import numpy as np

__all__ = [
    "DiffMatrix",
    "AsymTerm",
    "PenaltyBundle",
    "diff_matrix",
    "cyclic_diff_matrix",
    "identity_diff_matrix",
    "quad_penalty",
    "asym_weights",
    "asym_penalty",
    "boundary_penalty",
    "tensor_penalty",
    "tensor_asym_penalties",
]

DEFAULT_CONSTRAINT_LAMBDA = 1e6

_DIRECTIONS = ("increasing", "decreasing")


def _frozen(values):
    arr = np.array(values, dtype=float, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class DiffMatrix:
    """A dense difference operator acting on a coefficient vector."""

    values: np.ndarray
    order: int
    cyclic: bool = False

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(np.atleast_2d(self.values)))

    @property
    def shape(self):
        return self.values.shape

    def __array__(self, dtype=None):
        return np.asarray(self.values, dtype=dtype)


def _as_matrix(d):
    return np.asarray(d.values if isinstance(d, DiffMatrix) else d, dtype=float)


def diff_matrix(size, order):
    """Ordinary order-``order`` difference matrix, shape (size-order, size).

    Row ``r`` carries the signed binomial stencil over columns
    ``r..r+order``; it annihilates index-grid polynomials up to degree
    ``order - 1``.
    """
    size = int(size)
    order = int(order)
    if order < 1:
        raise ValueError(f"difference order must be >= 1, got {order}")
    if order >= size:
        raise ValueError(
            f"difference order {order} needs more than {size} coefficients"
        )
    values = np.diff(np.eye(size), n=order, axis=0)
    return DiffMatrix(values, order=order, cyclic=False)


def cyclic_diff_matrix(size, order):
    """Circulant order-``order`` difference matrix, shape (size, size).

    Row ``j`` applies the same stencil as the ordinary matrix but with the
    column indices wrapped modulo ``size``, so differences across the seam
    are penalized as well.  Constants are annihilated for every order.
    """
    size = int(size)
    order = int(order)
    if order < 1:
        raise ValueError(f"difference order must be >= 1, got {order}")
    if order >= size:
        raise ValueError(
            f"difference order {order} needs more than {size} coefficients"
        )
    values = np.zeros((size, size))
    stencil = [(-1.0) ** (order - i) * comb(order, i) for i in range(order + 1)]
    for j in range(size):
        for i, coef in enumerate(stencil):
            values[j, (j - order + i) % size] += coef
    return DiffMatrix(values, order=order, cyclic=True)


def identity_diff_matrix(size):
    """Order-0 'difference' matrix (the identity), used for sign and
    co-domain constraints on the coefficients themselves."""
    return DiffMatrix(np.eye(int(size)), order=0, cyclic=False)


def quad_penalty(d):
    """Quadratic penalty ``D.T @ D`` for a difference matrix."""
    values = _as_matrix(d)
    return values.T @ values


def asym_weights(beta, d, direction):
    """0/1 weights marking differences that violate (or touch) a direction.

    For an increasing constraint, weight ``r`` is 1 iff ``(D beta)[r] <= 0``;
    the decreasing case flips the inequality.  Equality gets weight 1 in
    both cases, which costs nothing since the squared difference is zero.
    """
    if direction not in _DIRECTIONS:
        raise ValueError(f"direction must be one of {_DIRECTIONS}, got {direction!r}")
    values = _as_matrix(d)
    beta = np.asarray(beta, dtype=float).ravel()
    if beta.size != values.shape[1]:
        raise ValueError(
            f"coefficient length {beta.size} does not match difference matrix "
            f"with {values.shape[1]} columns"
        )
    diffs = values @ beta
    if direction == "increasing":
        return (diffs <= 0).astype(float)
    return (diffs >= 0).astype(float)


def asym_penalty(d, weights):
    """One-sided penalty ``D.T @ diag(v) @ D`` for given 0/1 weights."""
    values = _as_matrix(d)
    weights = np.asarray(weights, dtype=float).ravel()
    if weights.size != values.shape[0]:
        raise ValueError(
            f"{weights.size} weights for a difference matrix with "
            f"{values.shape[0]} rows"
        )
    return (values * weights[:, None]).T @ values


def boundary_penalty(size, order, n_edge=3, sides="both"):
    """Masked difference penalty pinning the outer coefficients.

    Flags every order-``order`` difference whose stencil touches one of
    the ``n_edge`` outermost coefficients on the requested side(s); a
    strong multiplier on the result forces constant (order 1) or linear
    (order 2) behaviour at the edges of the coefficient vector.
    """
    if sides not in ("left", "right", "both"):
        raise ValueError(f"sides must be left, right or both, got {sides!r}")
    size = int(size)
    n_edge = int(n_edge)
    order = int(order)
    if n_edge < order:
        raise ValueError(f"n_edge={n_edge} must be at least the order {order}")
    if n_edge > size:
        raise ValueError(f"n_edge={n_edge} exceeds the {size} coefficients")
    d = diff_matrix(size, order)
    n_rows = size - order
    mask = np.zeros(n_rows)
    if sides in ("left", "both"):
        mask[: min(n_edge, n_rows)] = 1.0
    if sides in ("right", "both"):
        mask[max(n_rows - n_edge, 0):] = 1.0
    return asym_penalty(d, mask)


def tensor_penalty(k1, k2):
    """Kronecker-sum penalty ``K1 (x) I + I (x) K2`` for surface terms.

    Matches coefficient vectors laid out with the first factor's index
    varying slowest (the ordering produced by ``tensor_design``).
    """
    k1 = np.asarray(k1, dtype=float)
    k2 = np.asarray(k2, dtype=float)
    if k1.ndim != 2 or k1.shape[0] != k1.shape[1]:
        raise ValueError(f"first penalty factor is not square: {k1.shape}")
    if k2.ndim != 2 or k2.shape[0] != k2.shape[1]:
        raise ValueError(f"second penalty factor is not square: {k2.shape}")
    j, k = k1.shape[0], k2.shape[0]
    return np.kron(k1, np.eye(k)) + np.kron(np.eye(j), k2)


def tensor_asym_penalties(d1, d2, v1, v2):
    """One-sided surface penalties for each tensor direction.

    Returns the pair ``(P1, P2)`` with
    ``P1 = (D1 (x) I_K).T V1 (D1 (x) I_K)`` penalizing differences along
    the first direction and ``P2 = (I_J (x) D2).T V2 (I_J (x) D2)`` along
    the second.  ``v1`` and ``v2`` must have one entry per expanded
    difference row.
    """
    m1 = _as_matrix(d1)
    m2 = _as_matrix(d2)
    j = m1.shape[1]
    k = m2.shape[1]
    c1 = np.kron(m1, np.eye(k))
    c2 = np.kron(np.eye(j), m2)
    v1 = np.asarray(v1, dtype=float).ravel()
    v2 = np.asarray(v2, dtype=float).ravel()
    if v1.size != c1.shape[0]:
        raise ValueError(
            f"{v1.size} weights for {c1.shape[0]} first-direction differences"
        )
    if v2.size != c2.shape[0]:
        raise ValueError(
            f"{v2.size} weights for {c2.shape[0]} second-direction differences"
        )
    p1 = (c1 * v1[:, None]).T @ c1
    p2 = (c2 * v2[:, None]).T @ c2
    return p1, p2


@dataclass(frozen=True)
class AsymTerm:
    """A one-sided constraint penalty: difference operator, direction, weight."""

    diff: DiffMatrix
    direction: str
    lam: float = DEFAULT_CONSTRAINT_LAMBDA

    def __post_init__(self):
        if self.direction not in _DIRECTIONS:
            raise ValueError(f"direction must be one of {_DIRECTIONS}")
        if self.lam < 0:
            raise ValueError("constraint multiplier must be nonnegative")


@dataclass(frozen=True)
class PenaltyBundle:
    """All penalties attached to one base-learner.

    ``smooth`` carries the quadratic smoothness penalty with multiplier
    ``lam_smooth``; ``asym`` lists one-sided constraint penalties whose
    weights depend on the current coefficients; ``boundary`` is a fixed
    masked penalty with multiplier ``lam_boundary``; ``ridge`` adds an
    identity penalty (used by categorical and linear terms).
    """

    smooth: np.ndarray = None
    lam_smooth: float = 0.0
    asym: tuple = ()
    boundary: np.ndarray = None
    lam_boundary: float = 0.0
    ridge: float = 0.0

    def __post_init__(self):
        if self.smooth is not None:
            object.__setattr__(self, "smooth", _frozen(self.smooth))
        if self.boundary is not None:
            object.__setattr__(self, "boundary", _frozen(self.boundary))
        for lam, label in (
            (self.lam_smooth, "lam_smooth"),
            (self.lam_boundary, "lam_boundary"),
            (self.ridge, "ridge"),
        ):
            if lam < 0:
                raise ValueError(f"{label} must be nonnegative, got {lam}")
        object.__setattr__(self, "asym", tuple(self.asym))

    def symmetric(self, size):
        """Total coefficient-independent penalty matrix of the bundle."""
        total = np.zeros((size, size))
        if self.smooth is not None and self.lam_smooth:
            total += self.lam_smooth * self.smooth
        if self.boundary is not None and self.lam_boundary:
            total += self.lam_boundary * self.boundary
        if self.ridge:
            total += self.ridge * np.eye(size)
        return total
