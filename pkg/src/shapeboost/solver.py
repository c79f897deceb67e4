# -*- coding: utf-8 -*-
"""Penalized least-squares solvers.

Closed-form solution of the penalized normal equations, smoothing-parameter
calibration to a target degrees-of-freedom value, the iteratively
reweighted one-sided-penalty solver, and a dense dual active-set quadratic
program in the style of Goldfarb and Idnani for hard inequality
constraints.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .basis import DesignMatrix
from .penalty import PenaltyBundle, asym_weights, asym_penalty

__all__ = [
    "NumericalError",
    "PLSProblem",
    "QPConstraint",
    "SolveReport",
    "solve_pls",
    "calibrate_lambda",
    "solve_monotone_iterative",
    "solve_qp",
]

LAMBDA_MAX = 1e12
JITTER_SCALE = 1e-10


class NumericalError(RuntimeError):
    """A linear-algebra or optimization failure that is not a usage error."""


def _as_array(b):
    return np.asarray(b.values if isinstance(b, DesignMatrix) else b, dtype=float)


@dataclass
class PLSProblem:
    """A design, a working response, and the penalties to apply."""

    B: np.ndarray
    u: np.ndarray
    bundle: PenaltyBundle = field(default_factory=PenaltyBundle)

    def __post_init__(self):
        self.B = np.atleast_2d(_as_array(self.B))
        self.u = np.asarray(self.u, dtype=float).ravel()
        if self.u.size != self.B.shape[0]:
            raise ValueError(
                f"response length {self.u.size} does not match "
                f"{self.B.shape[0]} design rows"
            )
        if self.u.size and not np.all(np.isfinite(self.u)):
            raise ValueError("response vector must be finite")


@dataclass
class QPConstraint:
    """Linear inequality constraints ``C @ beta >= b`` (``b`` defaults to 0)."""

    C: np.ndarray
    b: np.ndarray = None

    def __post_init__(self):
        self.C = np.atleast_2d(np.asarray(self.C, dtype=float))
        if self.b is None:
            self.b = np.zeros(self.C.shape[0])
        else:
            self.b = np.asarray(self.b, dtype=float).ravel()
        if self.b.size != self.C.shape[0]:
            raise ValueError(
                f"{self.b.size} bounds for {self.C.shape[0]} constraint rows"
            )


@dataclass
class SolveReport:
    """Solution of one penalized least-squares problem."""

    beta: np.ndarray
    iterations: int
    converged: bool
    active: np.ndarray = None
    weights: np.ndarray = None
    multipliers: np.ndarray = None
    note: str = ""


def _jitter(btb):
    p = btb.shape[0]
    trace = np.trace(btb)
    return JITTER_SCALE * (trace / p if trace > 0 else 1.0)


def normal_matrix(B, bundle):
    """Penalized normal-equations matrix with a definiteness jitter."""
    B = _as_array(B)
    btb = B.T @ B
    G = btb + bundle.symmetric(btb.shape[0])
    G[np.diag_indices_from(G)] += _jitter(btb)
    return G


def _factor(G):
    try:
        return linalg.cho_factor(G, lower=True, check_finite=False)
    except linalg.LinAlgError as err:
        raise NumericalError(f"penalized system is singular: {err}") from err


def solve_pls(prob):
    """Minimize the penalized least-squares criterion in closed form.

    Only the coefficient-independent penalties of the bundle (smoothness,
    boundary, ridge) enter; one-sided constraint penalties are handled by
    the iterative and quadratic-programming solvers.
    """
    G = normal_matrix(prob.B, prob.bundle)
    cho = _factor(G)
    beta = linalg.cho_solve(cho, prob.B.T @ prob.u, check_finite=False)
    return SolveReport(beta=beta, iterations=1, converged=True)


def _df_spectrum(B, K):
    """Eigenvalues mu with df(lam) = sum(1 / (1 + lam * mu))."""
    B = _as_array(B)
    K = np.asarray(K, dtype=float)
    btb = B.T @ B
    btb[np.diag_indices_from(btb)] += _jitter(btb)
    try:
        L = linalg.cholesky(btb, lower=True, check_finite=False)
    except linalg.LinAlgError as err:
        raise NumericalError(f"cross-product matrix not positive definite: {err}") from err
    half = linalg.solve_triangular(L, K, lower=True, check_finite=False)
    M = linalg.solve_triangular(L, half.T, lower=True, check_finite=False)
    mu = linalg.eigh(0.5 * (M + M.T), eigvals_only=True, check_finite=False)
    return np.clip(mu, 0.0, None)


def calibrate_lambda(B, K, target_df, lam_max=LAMBDA_MAX, tol=1e-4):
    """Find the multiplier giving ``trace(B (B'B + lam K)^-1 B') = target_df``.

    The trace is monotone decreasing in the multiplier, so a bisection on
    its logarithm converges; the search is capped at ``lam_max`` with a
    warning when the target sits at the null-space dimension.
    """
    B = _as_array(B)
    target_df = float(target_df)
    p = B.shape[1]
    if target_df >= p - tol:
        return 0.0
    mu = _df_spectrum(B, K)

    def df(lam):
        return float(np.sum(1.0 / (1.0 + lam * mu)))

    null_dim = int(np.sum(mu <= mu.max() * 1e-12)) if mu.size else 0
    if target_df < null_dim - tol:
        raise ValueError(
            f"target_df={target_df} below the {null_dim}-dimensional "
            "penalty null space; unattainable"
        )
    if df(lam_max) >= target_df - tol:
        warnings.warn(
            f"target_df={target_df} at or below the penalty null-space "
            f"dimension; capping the multiplier at {lam_max:g}",
            RuntimeWarning,
            stacklevel=2,
        )
        return float(lam_max)
    lo, hi = 0.0, 1.0
    while df(hi) > target_df:
        lo, hi = hi, hi * 10.0
        if hi > lam_max:
            hi = lam_max
            break
    for _ in range(200):
        mid = np.sqrt(max(lo, 1e-16) * hi) if lo > 0 else 0.5 * hi
        val = df(mid)
        if abs(val - target_df) <= tol:
            return float(mid)
        if val > target_df:
            lo = mid
        else:
            hi = mid
    raise NumericalError(
        f"degrees-of-freedom calibration did not reach tolerance {tol}"
    )


def _objective(B, u, sym, beta, extra=0.0):
    resid = u - B @ beta
    return float(resid @ resid + beta @ (sym @ beta) + extra)


def solve_monotone_iterative(prob, d_c, direction, lambda2=1e6, max_iter=50):
    """Fit under a one-sided difference penalty by reweighting.

    Alternates between solving the penalized normal equations with the
    current 0/1 weights and refreshing the weights from the solution.
    Converges when the weight vector stops changing; a revisited weight
    pattern means the iteration cycles, in which case the best-objective
    iterate seen so far is returned.
    """
    if lambda2 <= 0:
        raise ValueError("lambda2 must be positive")
    B, u = prob.B, prob.u
    p = B.shape[1]
    sym = prob.bundle.symmetric(p)
    btb = B.T @ B
    jit = _jitter(btb)
    rhs = B.T @ u
    d_vals = np.asarray(getattr(d_c, "values", d_c), dtype=float)

    def solve_with(weights):
        G = btb + sym + lambda2 * asym_penalty(d_vals, weights)
        G[np.diag_indices_from(G)] += jit
        return linalg.cho_solve(_factor(G), rhs, check_finite=False)

    beta = linalg.cho_solve(_factor(btb + sym + jit * np.eye(p)), rhs, check_finite=False)
    weights = asym_weights(beta, d_vals, direction)
    seen = {tuple(np.zeros(d_vals.shape[0]))}
    best = None
    for it in range(1, max_iter + 1):
        key = tuple(weights)
        if not np.any(weights):
            # unconstrained solution already satisfies the direction
            return SolveReport(beta=beta, iterations=it, converged=True, weights=weights)
        beta = solve_with(weights)
        viol = (d_vals @ beta) * weights
        obj = _objective(B, u, sym, beta, lambda2 * float(viol @ viol))
        if best is None or obj < best[0]:
            best = (obj, beta, weights)
        new_weights = asym_weights(beta, d_vals, direction)
        if np.array_equal(new_weights, weights):
            return SolveReport(beta=beta, iterations=it, converged=True, weights=weights)
        if tuple(new_weights) in seen:
            obj_b, beta_b, weights_b = best
            return SolveReport(
                beta=beta_b,
                iterations=it,
                converged=True,
                weights=weights_b,
                note="weight cycle; returned best-objective iterate",
            )
        seen.add(key)
        weights = new_weights
    return SolveReport(
        beta=beta,
        iterations=max_iter,
        converged=False,
        weights=weights,
        note="weight updates did not settle",
    )


def _dual_active_set(cho, a, C, b, max_iter):
    """Dual active-set loop for ``min 0.5 x'Gx - a'x  s.t.  Cx >= b``.

    Starts from the unconstrained minimizer (dual feasible by
    construction) and adds the most violated constraint one at a time,
    dropping blocking constraints along the way.  ``cho`` is the Cholesky
    factorization of the positive-definite ``G``.
    """
    x = linalg.cho_solve(cho, a, check_finite=False)
    m = C.shape[0]
    active = []
    mult = np.zeros(0)
    scale = max(1.0, float(np.max(np.abs(C @ x - b))) if m else 1.0)
    feas_tol = 1e-12 * scale
    iterations = 0
    while True:
        slack = C @ x - b
        if active:
            slack[active] = np.inf
        p_idx = int(np.argmin(slack)) if m else 0
        if m == 0 or slack[p_idx] >= -feas_tol:
            return x, np.array(active, dtype=int), mult, iterations
        normal = C[p_idx]
        u_p = 0.0
        while True:
            iterations += 1
            if iterations > max_iter:
                raise NumericalError(
                    f"active-set QP exceeded {max_iter} iterations"
                )
            g_inv_n = linalg.cho_solve(cho, normal, check_finite=False)
            if active:
                N = C[active]
                g_inv_Nt = linalg.cho_solve(cho, N.T, check_finite=False)
                M = N @ g_inv_Nt
                try:
                    r = linalg.solve(M, N @ g_inv_n, assume_a="pos", check_finite=False)
                except linalg.LinAlgError as err:
                    raise NumericalError(f"degenerate active set: {err}") from err
                z = g_inv_n - g_inv_Nt @ r
            else:
                r = np.zeros(0)
                z = g_inv_n
            denom = float(normal @ z)
            s_p = float(normal @ x - b[p_idx])
            z_tol = 1e-14 * max(1.0, float(normal @ g_inv_n))
            t_full = np.inf if denom <= z_tol else -s_p / denom
            t_drop = np.inf
            k_drop = -1
            if len(active):
                positive = r > 1e-12
                if np.any(positive):
                    ratios = mult[positive] / r[positive]
                    local = int(np.argmin(ratios))
                    t_drop = float(ratios[local])
                    k_drop = int(np.flatnonzero(positive)[local])
            if not np.isfinite(min(t_full, t_drop)):
                raise NumericalError("constraints are infeasible")
            if not np.isfinite(t_full):
                # step in the dual only: drop the blocking constraint
                mult = mult - t_drop * r
                u_p += t_drop
                del active[k_drop]
                mult = np.delete(mult, k_drop)
                continue
            t = min(t_full, t_drop)
            x = x + t * z
            if len(mult):
                mult = mult - t * r
            u_p += t
            if t_full <= t_drop:
                active.append(p_idx)
                mult = np.append(mult, u_p)
                break
            del active[k_drop]
            mult = np.delete(mult, k_drop)


def solve_qp(prob, con, max_iter=None):
    """Penalized least squares under hard linear inequality constraints.

    Solves ``min ||u - B beta||^2 + beta' P beta`` subject to
    ``C beta >= b`` with the dual active-set method; the report carries
    the active constraint indices and their multipliers.
    """
    B, u = prob.B, prob.u
    p = B.shape[1]
    G = normal_matrix(B, prob.bundle)
    cho = _factor(G)
    a = B.T @ u
    C, b = con.C, con.b
    if C.shape[1] != p:
        raise ValueError(
            f"constraint matrix has {C.shape[1]} columns for {p} coefficients"
        )
    if max_iter is None:
        max_iter = 50 * (p + C.shape[0])
    beta, active, mult, iterations = _dual_active_set(cho, a, C, b, max_iter)
    residual = C @ beta - b
    viol = float(residual.min()) if residual.size else 0.0
    if viol < -1e-10:
        raise NumericalError(f"QP returned an infeasible point (violation {viol:g})")
    return SolveReport(
        beta=beta,
        iterations=max(iterations, 1),
        converged=True,
        active=active,
        multipliers=mult,
    )
