"""Closed-form rate machinery for the partition sampling laws.

For batch size tau, the expected-smoothness bound Ltau and the gradient
noise sigma(x, tau) of the weighted subsampled gradient are:

fixed-size ("nice") law, cells of size n_j chosen with probability q_j:

    Ltau(tau)      = (1/(n tau)) max_j  n_j / (q_j (n_j - 1)) *
                     [ (tau-1) L_cell_j n_j + (n_j - tau) L_max_cell_j ]
    sigma(x, tau)  = (1/(n^2 tau)) sum_j n_j^2 / (q_j (n_j - 1)) *
                     [ (tau-1) g_j n_j + (n_j - tau) gbar_j ]

independent law with per-element probability tau / n_j:

    Ltau(tau)      = (1/n) max_j [ n_j L_cell_j + L_max_cell_j (n_j - tau) / tau ] / q_j
    sigma(x, tau)  = (1/n^2) sum_j [ n_j^2 g_j + (n_j/tau - 1) n_j gbar_j ] / q_j

where g_j = ||grad of the cell average||^2 and gbar_j is the cell mean of
the per-example squared gradient norms. The sigma expressions are exact;
the Ltau expressions are upper bounds on the true expected smoothness.

tau * sigma(x, tau) is affine in tau and tau * Ltau(tau) is a max of
per-cell affine functions, which reduces the optimal batch size to
minimizing a max of lines (see minimize_max_linear / optimal_batch).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .objectives import per_example_grads
from .sampling import INDEPENDENT, NICE


class DegenerateLinesError(ValueError):
    """minimize_max_linear needs strictly increasing lines and a strictly
    decreasing one."""


@dataclass(frozen=True)
class GradNormStats:
    """Squared gradient norms at one point, aggregated per cell.

    sq_norms[i] = ||grad_i||^2; cell_mean_sq_norm[j] is the cell average of
    those; cell_grad_sq_norm[j] = ||average gradient of the cell||^2, which
    is at most cell_mean_sq_norm[j] by Jensen. ``at_point`` is a free-form
    tag recording where they were evaluated.
    """

    sq_norms: np.ndarray
    cell_mean_sq_norm: np.ndarray
    cell_grad_sq_norm: np.ndarray
    at_point: str = ""


@dataclass(frozen=True)
class RateEstimates:
    Ltau: float
    sigma: float
    tau: int


def grad_norm_stats(obj, dataset, partitioning, x, at_point=""):
    """Exact GradNormStats of the objective at x."""
    G = per_example_grads(obj, dataset, x)
    h = np.einsum("ij,ij->i", G, G)
    K = partitioning.num_cells
    mean_sq = np.empty(K)
    full_sq = np.empty(K)
    for j, c in enumerate(partitioning.cells):
        mean_sq[j] = h[c].mean()
        gj = G[c].mean(axis=0)
        full_sq[j] = float(gj @ gj)
    return GradNormStats(
        sq_norms=h, cell_mean_sq_norm=mean_sq, cell_grad_sq_norm=full_sq, at_point=at_point
    )


def _check_tau(partitioning, kind, tau):
    if not 1 <= tau <= partitioning.min_cell_size:
        raise ValueError(
            f"tau={tau} outside [1, {partitioning.min_cell_size}] for this partitioning"
        )
    if kind == NICE and partitioning.min_cell_size < 2:
        raise ValueError("the fixed-size law needs every cell to have at least 2 elements")
    if kind not in (NICE, INDEPENDENT):
        raise ValueError(f"unknown sampling kind {kind!r}")


def expected_smoothness(constants, partitioning, kind, tau):
    """Expected-smoothness bound Ltau(tau) for the given law."""
    _check_tau(partitioning, kind, tau)
    n = partitioning.n
    sizes = partitioning.sizes.astype(np.float64)
    q = partitioning.probs
    if kind == NICE:
        terms = (
            sizes
            / (q * (sizes - 1.0))
            * ((tau - 1.0) * constants.L_cell * sizes + (sizes - tau) * constants.L_max_cell)
        )
        return float(terms.max()) / (n * tau)
    p = tau / sizes
    terms = (sizes * constants.L_cell + constants.L_max_cell * (1.0 - p) / p) / q
    return float(terms.max()) / n


def gradient_noise(stats, partitioning, kind, tau):
    """Gradient noise sigma(x, tau) for the given law (an exact identity)."""
    _check_tau(partitioning, kind, tau)
    n = partitioning.n
    sizes = partitioning.sizes.astype(np.float64)
    q = partitioning.probs
    g = stats.cell_grad_sq_norm
    gbar = stats.cell_mean_sq_norm
    if kind == NICE:
        terms = sizes**2 / (q * (sizes - 1.0)) * ((tau - 1.0) * g * sizes + (sizes - tau) * gbar)
        return float(terms.sum()) / (n * n * tau)
    terms = (sizes**2 * g + (sizes / tau - 1.0) * sizes * gbar) / q
    return float(terms.sum()) / (n * n)


def estimate_rates(constants, stats, partitioning, kind, tau):
    return RateEstimates(
        Ltau=expected_smoothness(constants, partitioning, kind, tau),
        sigma=gradient_noise(stats, partitioning, kind, tau),
        tau=tau,
    )


def smoothness_lines(constants, partitioning, kind):
    """Affine decomposition of tau * Ltau(tau): slopes and intercepts per
    cell, so that tau * Ltau(tau) = max_j (slope_j * tau + intercept_j)."""
    n = partitioning.n
    sizes = partitioning.sizes.astype(np.float64)
    q = partitioning.probs
    if kind == NICE:
        coef = sizes / (n * q * (sizes - 1.0))
        slopes = coef * (sizes * constants.L_cell - constants.L_max_cell)
        intercepts = coef * sizes * (constants.L_max_cell - constants.L_cell)
    else:
        slopes = (sizes * constants.L_cell - constants.L_max_cell) / (n * q)
        intercepts = sizes * constants.L_max_cell / (n * q)
    return slopes, intercepts


def noise_line(stats, partitioning, kind):
    """(slope, intercept) of the affine function tau * sigma(x, tau)."""
    n = partitioning.n
    sizes = partitioning.sizes.astype(np.float64)
    q = partitioning.probs
    g = stats.cell_grad_sq_norm
    gbar = stats.cell_mean_sq_norm
    if kind == NICE:
        coef = sizes**2 / (q * (sizes - 1.0))
        slope = float((coef * (sizes * g - gbar)).sum()) / n**2
        intercept = float((coef * sizes * (gbar - g)).sum()) / n**2
    else:
        slope = float((sizes * (sizes * g - gbar) / q).sum()) / n**2
        intercept = float((sizes**2 * gbar / q).sum()) / n**2
    return slope, intercept


def total_complexity(tau, Ltau, sigma_star, mu, eps, r0):
    """Total work bound T(tau) = (2/mu) max{tau Ltau, (2/(eps mu)) tau
    sigma_star} log(2 r0 / eps)."""
    if eps <= 0.0 or mu <= 0.0 or r0 <= 0.0:
        raise ValueError("eps, mu and r0 must be positive")
    branch = max(tau * Ltau, 2.0 / (eps * mu) * tau * sigma_star)
    return 2.0 / mu * branch * np.log(2.0 * r0 / eps)


def minimize_max_linear(lines, r_line):
    """Minimizer of max(l_1, ..., l_k, r) for increasing lines l_i and a
    decreasing line r: the smallest of the intersection points l_i = r.

    ``lines`` is a sequence of (slope, intercept) with slope > 0;
    ``r_line`` is (slope, intercept) with slope < 0. Degenerate slopes
    raise DegenerateLinesError.
    """
    slopes = np.asarray([l[0] for l in lines], dtype=np.float64)
    intercepts = np.asarray([l[1] for l in lines], dtype=np.float64)
    r_slope, r_intercept = float(r_line[0]), float(r_line[1])
    if len(slopes) == 0:
        raise DegenerateLinesError("need at least one increasing line")
    if np.any(slopes <= 0.0):
        raise DegenerateLinesError("every line slope must be > 0")
    if r_slope >= 0.0:
        raise DegenerateLinesError("the decreasing line must have slope < 0")
    crossings = (r_intercept - intercepts) / (slopes - r_slope)
    return float(crossings.min())


def decreasing_noise_condition(stats, partitioning, kind):
    """Value whose nonpositivity means tau * sigma(x, tau) is nonincreasing
    in tau (the regime where a batch size above 1 can pay off)."""
    sizes = partitioning.sizes.astype(np.float64)
    q = partitioning.probs
    g = stats.cell_grad_sq_norm
    gbar = stats.cell_mean_sq_norm
    if kind == NICE:
        e = q * (sizes - 1.0)
        return float((sizes**2 / e * (g * sizes - gbar)).sum())
    return float((sizes / q * (sizes * g - gbar)).sum())


def optimal_batch(constants, stats, partitioning, kind, mu, eps):
    """Batch size minimizing max{tau Ltau(tau), (2/(eps mu)) tau sigma(tau)}
    over the feasible integers.

    Returns 1 outright when tau * sigma grows with tau. Otherwise computes
    the real-valued minimizer from the line intersections, clamps it to
    [1, min cell size], and picks whichever integer neighbor gives the
    smaller objective (ties to the smaller tau).
    """
    if mu <= 0.0 or eps <= 0.0:
        raise ValueError("mu and eps must be positive")
    _check_tau(partitioning, kind, 1)
    if decreasing_noise_condition(stats, partitioning, kind) > 0.0:
        return 1

    scale = 2.0 / (eps * mu)
    slopes, intercepts = smoothness_lines(constants, partitioning, kind)
    if np.any(slopes <= 0.0):
        raise DegenerateLinesError("tau * Ltau(tau) must be a max of increasing lines")
    r_slope, r_intercept = noise_line(stats, partitioning, kind)
    r_slope, r_intercept = scale * r_slope, scale * r_intercept
    if r_slope < 0.0:
        tau_real = minimize_max_linear(list(zip(slopes, intercepts)), (r_slope, r_intercept))
    else:
        # interpolation-like regime: r is flat, intersections still apply
        tau_real = float(((r_intercept - intercepts) / (slopes - r_slope)).min())

    tau_max = partitioning.min_cell_size
    tau_real = min(max(tau_real, 1.0), float(tau_max))

    def objective(t):
        lt = t * expected_smoothness(constants, partitioning, kind, t)
        st = scale * t * gradient_noise(stats, partitioning, kind, t)
        return max(lt, st)

    lo = int(np.floor(tau_real))
    hi = int(np.ceil(tau_real))
    lo = min(max(lo, 1), tau_max)
    hi = min(max(hi, 1), tau_max)
    if lo == hi:
        return lo
    return lo if objective(lo) <= objective(hi) else hi


def sigma_lower_bound_factor(L_exp, L, mu):
    """Factor eta with sigma(x) >= eta * sigma(x*) everywhere, from the
    expected smoothness L_exp, the smoothness L of f, and mu:

        eta = (sqrt(L_exp * L + mu^2) - sqrt(L_exp * L))^2 / mu^2
    """
    if L_exp < 0.0 or L < 0.0 or mu <= 0.0:
        raise ValueError("need L_exp, L >= 0 and mu > 0")
    s = L_exp * L
    return (np.sqrt(s + mu**2) - np.sqrt(s)) ** 2 / mu**2
