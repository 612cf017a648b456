"""Shared test oracles, kept independent of the code paths they check."""

import numpy as np

from adabatch import enumerate_distribution, grad_i, value


def fd_grad(obj, dataset, x, step=1e-5):
    """Central finite-difference gradient of the full objective."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    for j in range(len(x)):
        e = np.zeros_like(x)
        e[j] = step
        g[j] = (value(obj, dataset, x + e) - value(obj, dataset, x - e)) / (2 * step)
    return g


def per_example_grad_matrix(obj, dataset, x):
    """(n, d) matrix of per-example gradients via the scalar entry point."""
    return np.stack([grad_i(obj, dataset, i, x) for i in range(dataset.n)])


def enum_matrices(law):
    """(V, p): outcome weight matrix (n_outcomes, n) and probabilities."""
    outcomes = enumerate_distribution(law)
    V = np.stack([w for _, _, w in outcomes])
    p = np.asarray([pr for _, pr, _ in outcomes])
    return V, p


def enum_mean_grad(V, p, G, n):
    """Enumeration-weighted mean of the subsampled gradient."""
    return G.T @ (V.T @ p) / n


def enum_second_moment(V, p, G, n):
    """Exact E ||(1/n) sum v_i g_i||^2 over the outcome distribution."""
    M = (V @ G) / n
    return float(p @ np.einsum("ij,ij->i", M, M))


def grid_scan_argmin(lines, r_line, lo, hi, points=100_000):
    """Brute-force minimizer of max(lines, r) over a dense grid."""
    xs = np.linspace(lo, hi, points)
    vals = np.full_like(xs, -np.inf)
    for a, b in lines:
        vals = np.maximum(vals, a * xs + b)
    vals = np.maximum(vals, r_line[0] * xs + r_line[1])
    return xs[np.argmin(vals)]


def exhaustive_tau_argmin(constants, stats, part, kind, mu, eps):
    """Integer argmin of max{tau Ltau(tau), (2/(eps mu)) tau sigma(tau)},
    smallest tau winning ties."""
    from adabatch import expected_smoothness, gradient_noise

    scale = 2.0 / (eps * mu)
    best_tau, best_val = None, np.inf
    for tau in range(1, part.min_cell_size + 1):
        val = max(
            tau * expected_smoothness(constants, part, kind, tau),
            scale * tau * gradient_noise(stats, part, kind, tau),
        )
        if val < best_val:
            best_tau, best_val = tau, val
    return best_tau
