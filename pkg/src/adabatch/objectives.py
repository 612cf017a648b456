"""Ridge and regularized logistic regression objectives.

Both objectives are averages of per-example terms that each carry the
full regularizer:

    ridge:    f_i(x) = 0.5 (a_i.x - b_i)^2 + 0.5 lam ||x||^2
    logistic: f_i(x) = 0.5 log(1 + exp(sign b_i a_i.x)) + 0.5 lam ||x||^2

so f(x) = (1/n) sum_i f_i(x). The logistic loss keeps the + sign inside
the exponent by default (``logistic_sign=+1``); pass -1 for the
conventional orientation. Strong convexity constant mu = lam.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit


class ReferenceSolveError(RuntimeError):
    """Reference solver failed to reach the requested gradient norm."""

    def __init__(self, grad_norm, message):
        super().__init__(message)
        self.grad_norm = grad_norm


@dataclass(frozen=True)
class Objective:
    kind: str
    lam: float = 0.0
    logistic_sign: float = 1.0

    def __post_init__(self):
        if self.kind not in ("ridge", "logistic"):
            raise ValueError(f"unknown objective kind {self.kind!r}")
        if self.lam < 0.0:
            raise ValueError("lam must be >= 0")
        if self.logistic_sign not in (1.0, -1.0):
            raise ValueError("logistic_sign must be +1 or -1")


@dataclass(frozen=True)
class SmoothnessConstants:
    """Smoothness data consumed by the rate formulas.

    L is the smoothness constant of f, L_i the per-example constants,
    L_cell the smoothness constants of the per-cell averages f_{C_j},
    L_bar_cell / L_max_cell the per-cell mean and max of L_i, and mu the
    strong convexity constant (None when lam = 0).
    """

    L: float
    L_i: np.ndarray
    L_cell: np.ndarray
    L_bar_cell: np.ndarray
    L_max_cell: np.ndarray
    mu: float | None

    def require_mu(self):
        if self.mu is None:
            raise ValueError("strong convexity constant unavailable: lam = 0")
        return self.mu


def _check_dim(dataset, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (dataset.d,):
        raise ValueError(f"x has shape {x.shape}, expected ({dataset.d},)")
    return x


def value(obj, dataset, x):
    """Objective value f(x)."""
    x = _check_dim(dataset, x)
    t = dataset.features @ x
    reg = 0.5 * obj.lam * float(x @ x)
    if obj.kind == "ridge":
        r = t - dataset.labels
        return 0.5 * float(r @ r) / dataset.n + reg
    u = obj.logistic_sign * dataset.labels * t
    # log(1 + exp(u)) evaluated stably
    return 0.5 * float(np.logaddexp(0.0, u).sum()) / dataset.n + reg


def per_example_grads(obj, dataset, x, indices=None):
    """Gradients of f_i for i in ``indices`` (all rows when None), as an
    (m, d) array."""
    x = _check_dim(dataset, x)
    A = dataset.features if indices is None else dataset.features[indices]
    b = dataset.labels if indices is None else dataset.labels[indices]
    t = A @ x
    if obj.kind == "ridge":
        z = t - b
    else:
        s = obj.logistic_sign
        z = 0.5 * expit(s * b * t) * s * b
    if hasattr(A, "multiply"):
        G = np.asarray(A.multiply(z[:, None]).todense())
    else:
        G = z[:, None] * A
    if obj.lam:
        G = G + obj.lam * x
    return G


def grad_i(obj, dataset, i, x):
    """Gradient of the i-th per-example term."""
    if not 0 <= i < dataset.n:
        raise IndexError(f"example index {i} out of range for n={dataset.n}")
    return per_example_grads(obj, dataset, x, np.asarray([i]))[0]


def grad(obj, dataset, x):
    """Full gradient (1/n) sum_i grad_i(x)."""
    x = _check_dim(dataset, x)
    A, b, n = dataset.features, dataset.labels, dataset.n
    t = A @ x
    if obj.kind == "ridge":
        z = t - b
    else:
        s = obj.logistic_sign
        z = 0.5 * expit(s * b * t) * s * b
    g = np.asarray(A.T @ z).ravel() / n
    if obj.lam:
        g = g + obj.lam * x
    return g


def gram_top_eigenvalue(A, rtol=1e-10, max_iter=10000, seed=0):
    """Largest eigenvalue of (A^T A) / m by power iteration.

    Seeded start for determinism; returns 0.0 for an all-zero matrix.
    """
    m, d = A.shape
    v = np.random.default_rng(seed).standard_normal(d)
    v /= np.linalg.norm(v)
    theta = 0.0
    for _ in range(max_iter):
        w = np.asarray(A.T @ (A @ v)).ravel() / m
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            return 0.0
        theta_new = float(v @ w)
        v = w / norm_w
        if abs(theta_new - theta) <= rtol * max(abs(theta_new), 1e-300):
            return theta_new
        theta = theta_new
    return theta


def smoothness_constants(obj, dataset, partitioning):
    """All smoothness constants for the objective on this partitioning.

    Ridge: L_i = ||a_i||^2 + lam, L_cell = lambda_max(Gram of the cell) + lam.
    Logistic: the same with the quadratic part divided by 8 (0.5 objective
    factor times the 1/4 bound on the sigmoid derivative).
    """
    sq = dataset.row_sq_norms()
    scale = 1.0 if obj.kind == "ridge" else 0.125
    L_i = scale * sq + obj.lam

    K = partitioning.num_cells
    L_cell = np.empty(K)
    L_bar_cell = np.empty(K)
    L_max_cell = np.empty(K)
    for j, c in enumerate(partitioning.cells):
        L_cell[j] = scale * gram_top_eigenvalue(dataset.features[c]) + obj.lam
        L_bar_cell[j] = L_i[c].mean()
        L_max_cell[j] = L_i[c].max()
    L = scale * gram_top_eigenvalue(dataset.features) + obj.lam
    mu = obj.lam if obj.lam > 0.0 else None
    return SmoothnessConstants(
        L=L, L_i=L_i, L_cell=L_cell, L_bar_cell=L_bar_cell, L_max_cell=L_max_cell, mu=mu
    )


def _solve_ridge(obj, dataset, tol):
    A, b, n = dataset.features, dataset.labels, dataset.n
    M = np.asarray((A.T @ A).todense() if dataset.is_sparse else A.T @ A) / n
    M = M + obj.lam * np.eye(dataset.d)
    rhs = np.asarray(A.T @ b).ravel() / n
    x = np.linalg.solve(M, rhs)
    # one or two rounds of iterative refinement squeeze out the last bits
    for _ in range(3):
        g = grad(obj, dataset, x)
        if np.linalg.norm(g) <= tol:
            return x
        x = x - np.linalg.solve(M, g)
    gn = float(np.linalg.norm(grad(obj, dataset, x)))
    if gn <= tol:
        return x
    raise ReferenceSolveError(gn, f"ridge solve stalled at ||grad|| = {gn:.3e} > tol {tol:.3e}")


def _solve_logistic(obj, dataset, tol, max_iter):
    A, b, n, d = dataset.features, dataset.labels, dataset.n, dataset.d
    s = obj.logistic_sign
    x = np.zeros(d)
    fx = value(obj, dataset, x)
    for _ in range(max_iter):
        g = grad(obj, dataset, x)
        gn = np.linalg.norm(g)
        if gn <= tol:
            return x
        t = A @ x
        sig = expit(s * b * t)
        w = 0.5 * sig * (1.0 - sig) * b * b
        if dataset.is_sparse:
            H = np.asarray((A.T @ A.multiply(w[:, None])).todense()) / n
        else:
            H = (A.T * w) @ A / n
        H += obj.lam * np.eye(d)
        step = np.linalg.solve(H, g)
        alpha = 1.0
        while alpha > 1e-12:
            x_new = x - alpha * step
            f_new = value(obj, dataset, x_new)
            if f_new <= fx - 1e-4 * alpha * float(g @ step):
                break
            alpha *= 0.5
        x, fx = x_new, f_new
    gn = float(np.linalg.norm(grad(obj, dataset, x)))
    raise ReferenceSolveError(gn, f"logistic solve hit {max_iter} iterations at ||grad|| = {gn:.3e} > tol {tol:.3e}")


def solve_reference(obj, dataset, tol=1e-12, max_iter=200):
    """Minimizer x* with ||grad(x*)|| <= tol.

    Ridge uses the exact stationarity system; logistic uses damped Newton.
    Raises ReferenceSolveError (with the final gradient norm) on failure.
    """
    if obj.kind == "ridge":
        return _solve_ridge(obj, dataset, tol)
    return _solve_logistic(obj, dataset, tol, max_iter)
