# -*- coding: utf-8 -*-
"""Knot grids and design matrices for spline regression terms.

Builds equidistant B-spline knot grids (optionally periodic), evaluates
univariate and cyclic bases via the de Boor triangular recurrence, and
assembles the derived designs used by composite terms: tensor products,
varying coefficients, and categorical indicators.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "MAX_DEGREE",
    "KnotGrid",
    "BasisSpec",
    "DesignMatrix",
    "make_knots",
    "eval_basis",
    "design",
    "tensor_design",
    "varying_design",
    "categorical_design",
]

MAX_DEGREE = 3


def _frozen_array(values, dtype=float):
    arr = np.array(values, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class KnotGrid:
    """Knot grid for a single covariate.

    ``inner`` holds the knots strictly between the boundary knots ``lower``
    and ``upper``.  Non-cyclic grids are evaluated on ``degree`` extra
    equally spaced knots appended beyond each boundary; cyclic grids are
    extended periodically during evaluation instead, so the grid itself
    never stores expansion knots.
    """

    inner: np.ndarray
    lower: float
    upper: float
    degree: int
    cyclic: bool = False

    def __post_init__(self):
        inner = _frozen_array(np.atleast_1d(self.inner))
        object.__setattr__(self, "inner", inner)
        object.__setattr__(self, "lower", float(self.lower))
        object.__setattr__(self, "upper", float(self.upper))
        if not np.isfinite([self.lower, self.upper]).all():
            raise ValueError("boundary knots must be finite")
        if self.lower >= self.upper:
            raise ValueError(
                f"invalid knot range: lower={self.lower} >= upper={self.upper}"
            )
        if not 0 <= int(self.degree) <= MAX_DEGREE:
            raise ValueError(f"degree must be in 0..{MAX_DEGREE}, got {self.degree}")
        if inner.size == 0:
            raise ValueError("at least one inner knot is required")
        if not np.all(np.isfinite(inner)):
            raise ValueError("inner knots must be finite")
        if np.any(np.diff(inner) <= 0):
            raise ValueError("inner knots must be strictly increasing")
        if inner[0] <= self.lower or inner[-1] >= self.upper:
            raise ValueError("inner knots must lie strictly inside the boundary knots")

    @property
    def n_inner(self):
        return int(self.inner.size)

    @property
    def period(self):
        return self.upper - self.lower

    def eval_knots(self):
        """Expanded knot vector used for evaluation (derived, not stored).

        Non-cyclic grids append ``degree`` equally spaced knots beyond each
        boundary; cyclic grids continue the grid periodically.
        """
        core = np.concatenate(([self.lower], self.inner, [self.upper]))
        d = self.degree
        if d == 0:
            return core
        if self.cyclic:
            left = self.lower - (self.upper - core[-d - 1 : -1])
            right = self.upper + (core[1 : d + 1] - self.lower)
        else:
            h_lo = core[1] - core[0]
            h_hi = core[-1] - core[-2]
            left = self.lower - h_lo * np.arange(d, 0, -1)
            right = self.upper + h_hi * np.arange(1, d + 1)
        return np.concatenate((left, core, right))


@dataclass(frozen=True)
class BasisSpec:
    """A knot grid together with the implied basis dimension."""

    grid: KnotGrid
    n_basis: int = -1

    def __post_init__(self):
        g = self.grid
        expected = g.n_inner + 1 if g.cyclic else g.n_inner + g.degree + 1
        if self.n_basis == -1:
            object.__setattr__(self, "n_basis", expected)
        elif self.n_basis != expected:
            raise ValueError(
                f"n_basis={self.n_basis} inconsistent with grid (expected {expected})"
            )


@dataclass(frozen=True)
class DesignMatrix:
    """Dense design matrix with one labelled column per basis function."""

    values: np.ndarray
    column_labels: tuple

    def __post_init__(self):
        vals = np.atleast_2d(np.asarray(self.values, dtype=float))
        if not np.all(np.isfinite(vals)):
            raise ValueError("design matrix entries must be finite")
        object.__setattr__(self, "values", _frozen_array(vals))
        labels = tuple(self.column_labels)
        if len(labels) != vals.shape[1]:
            raise ValueError(
                f"{len(labels)} column labels for {vals.shape[1]} columns"
            )
        object.__setattr__(self, "column_labels", labels)

    @property
    def shape(self):
        return self.values.shape

    def __array__(self, dtype=None):
        return np.asarray(self.values, dtype=dtype)


def make_knots(x_min, x_max, n_inner, degree=3, cyclic=False):
    """Build an equidistant knot grid on [x_min, x_max].

    Parameters
    ----------
    x_min, x_max : float
        Boundary knots.  For cyclic grids these are the points where the
        fitted function is joined, i.e. one full period apart.
    n_inner : int
        Number of equidistant knots strictly inside the boundaries.
    degree : int
        B-spline degree, at most 3.
    cyclic : bool
        Whether the basis wraps at the boundary knots.
    """
    x_min = float(x_min)
    x_max = float(x_max)
    if not np.isfinite([x_min, x_max]).all():
        raise ValueError("knot range must be finite")
    if x_min >= x_max:
        raise ValueError(f"invalid knot range: x_min={x_min} >= x_max={x_max}")
    n_inner = int(n_inner)
    if n_inner < 1:
        raise ValueError(f"n_inner must be at least 1, got {n_inner}")
    if n_inner < degree:
        raise ValueError(
            f"n_inner={n_inner} too small for degree {degree}; need n_inner >= degree"
        )
    inner = np.linspace(x_min, x_max, n_inner + 2)[1:-1]
    return KnotGrid(inner=inner, lower=x_min, upper=x_max, degree=int(degree), cyclic=bool(cyclic))


def _wrap_x(grid, x):
    """Reduce x modulo the period into [lower, upper)."""
    xw = grid.lower + np.mod(x - grid.lower, grid.period)
    # float mod can land exactly on the upper boundary; that point is the seam
    return np.where(xw >= grid.upper, grid.lower, xw)


def _check_x(grid, x):
    x = np.asarray(x, dtype=float).ravel()
    if x.size and not np.all(np.isfinite(x)):
        bad = int(np.flatnonzero(~np.isfinite(x))[0])
        raise ValueError(f"non-finite covariate value at row {bad}")
    if grid.cyclic:
        return _wrap_x(grid, x)
    outside = (x < grid.lower) | (x > grid.upper)
    if np.any(outside):
        bad = int(np.flatnonzero(outside)[0])
        raise ValueError(
            f"covariate value {x[bad]:g} at row {bad} outside basis range "
            f"[{grid.lower:g}, {grid.upper:g}]"
        )
    return x


def _deboor_rows(knots, degree, x, lo_span, hi_span):
    """Nonzero basis values at each x plus the knot span they sit in.

    Returns ``(vals, m)`` where ``vals[i]`` holds the ``degree + 1``
    consecutive nonzero basis values at ``x[i]`` and ``m[i]`` is the index
    of the knot interval, clamped to the valid spans so evaluation at the
    right boundary takes the limit from the left.
    """
    m = np.searchsorted(knots, x, side="right") - 1
    m = np.clip(m, lo_span, hi_span)
    n = x.size
    vals = np.zeros((n, degree + 1))
    vals[:, 0] = 1.0
    if degree:
        left = np.empty((n, degree + 1))
        right = np.empty((n, degree + 1))
        for r in range(1, degree + 1):
            left[:, r] = x - knots[m + 1 - r]
            right[:, r] = knots[m + r] - x
            saved = np.zeros(n)
            for i in range(r):
                tmp = vals[:, i] / (right[:, i + 1] + left[:, r - i])
                vals[:, i] = saved + right[:, i + 1] * tmp
                saved = left[:, r - i] * tmp
            vals[:, r] = saved
    return vals, m


def _expanded_rows(grid, x):
    """Evaluate the expanded (pre-fold) basis; (n, n_inner + degree + 1)."""
    knots = grid.eval_knots()
    d = grid.degree
    n_exp = knots.size - d - 1
    vals, m = _deboor_rows(knots, d, x, d, d + grid.n_inner)
    out = np.zeros((x.size, n_exp))
    cols = m[:, None] + np.arange(-d, 1)[None, :]
    out[np.arange(x.size)[:, None], cols] = vals
    return out


def _basis_values(spec, x):
    grid = spec.grid
    expanded = _expanded_rows(grid, x)
    if not grid.cyclic:
        return expanded
    # periodic copies of the first `degree` functions live in the last
    # `degree` expanded columns; fold them back together
    n = grid.n_inner + 1
    vals = expanded[:, :n].copy()
    if grid.degree:
        vals[:, : grid.degree] += expanded[:, n:]
    return vals


def eval_basis(spec, x):
    """Evaluate all basis functions at a single point.

    Non-cyclic bases reject points outside the boundary knots; cyclic
    bases wrap the point into the period first.
    """
    x = _check_x(spec.grid, np.asarray([x], dtype=float))
    return _basis_values(spec, x)[0]

def design(spec, xs, name="bs"):
    """Design matrix of a basis evaluated at the observations ``xs``."""
    xs = _check_x(spec.grid, xs)
    values = _basis_values(spec, xs)
    labels = tuple(f"{name}[{j + 1}]" for j in range(spec.n_basis))
    return DesignMatrix(values, labels)


def spline_slope(spec, beta, x):
    """First derivative of the spline ``sum_j beta[j] B_j`` at points x.

    Uses the derivative expansion in the degree-minus-one basis on the
    trimmed knot vector.  Degree-0 splines have slope zero everywhere.
    """
    grid = spec.grid
    x = _check_x(grid, np.asarray(x, dtype=float).ravel())
    beta = np.asarray(beta, dtype=float).ravel()
    if beta.size != spec.n_basis:
        raise ValueError(f"expected {spec.n_basis} coefficients, got {beta.size}")
    d = grid.degree
    if d == 0:
        return np.zeros(x.size)
    knots = grid.eval_knots()
    if grid.cyclic:
        # expanded columns j and j + (n_inner + 1) share one coefficient
        beta = np.concatenate((beta, beta[:d]))
    gamma = d * np.diff(beta) / (knots[d + 1 : -1] - knots[1 : -d - 1])
    sub_knots = knots[1:-1]
    vals, m = _deboor_rows(sub_knots, d - 1, x, d - 1, d - 1 + grid.n_inner)
    rows = np.zeros((x.size, sub_knots.size - d))
    cols = m[:, None] + np.arange(-(d - 1), 1)[None, :]
    rows[np.arange(x.size)[:, None], cols] = vals
    return rows @ gamma


def tensor_design(b1, b2, name="te"):
    """Row-wise tensor product of two design matrices.

    Column ``j * K + k`` (0-based) of the result is the elementwise product
    of column ``j`` of ``b1`` and column ``k`` of ``b2``; coefficient
    vectors are therefore laid out with the first factor's index varying
    slowest.
    """
    v1 = np.asarray(b1.values if isinstance(b1, DesignMatrix) else b1, dtype=float)
    v2 = np.asarray(b2.values if isinstance(b2, DesignMatrix) else b2, dtype=float)
    if v1.shape[0] != v2.shape[0]:
        raise ValueError(
            f"row-count mismatch: {v1.shape[0]} vs {v2.shape[0]} observations"
        )
    j, k = v1.shape[1], v2.shape[1]
    values = np.repeat(v1, k, axis=1) * np.tile(v2, (1, j))
    labels = tuple(f"{name}[{a + 1},{b + 1}]" for a in range(j) for b in range(k))
    return DesignMatrix(values, labels)


def varying_design(x, bz, name="vc"):
    """Scale each row of a modifier design by the interacting covariate."""
    x = np.asarray(x, dtype=float).ravel()
    vz = np.asarray(bz.values if isinstance(bz, DesignMatrix) else bz, dtype=float)
    if x.size != vz.shape[0]:
        raise ValueError(
            f"length mismatch: {x.size} covariate values vs {vz.shape[0]} design rows"
        )
    if x.size and not np.all(np.isfinite(x)):
        bad = int(np.flatnonzero(~np.isfinite(x))[0])
        raise ValueError(f"non-finite covariate value at row {bad}")
    labels = tuple(f"{name}*{j + 1}" for j in range(vz.shape[1]))
    return DesignMatrix(x[:, None] * vz, labels)


def categorical_design(levels, n_levels, name="cat"):
    """0/1 indicator matrix for integer level ids in 1..n_levels."""
    levels = np.asarray(levels)
    if levels.size and not np.all(levels == np.floor(levels)):
        raise ValueError("level ids must be integers")
    levels = levels.astype(int).ravel()
    n_levels = int(n_levels)
    if n_levels < 1:
        raise ValueError("n_levels must be positive")
    bad = (levels < 1) | (levels > n_levels)
    if np.any(bad):
        row = int(np.flatnonzero(bad)[0])
        raise ValueError(
            f"level id {levels[row]} at row {row} outside 1..{n_levels}"
        )
    values = np.zeros((levels.size, n_levels))
    values[np.arange(levels.size), levels - 1] = 1.0
    labels = tuple(f"{name}=={lev}" for lev in range(1, n_levels + 1))
    return DesignMatrix(values, labels)
