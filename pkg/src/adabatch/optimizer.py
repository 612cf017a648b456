"""Adaptive batch-size SGD and the fixed-batch baseline.

The adaptive driver re-estimates the optimal batch size every iteration
from lazily cached per-example gradients: the cache keeps the last
computed gradient of every example (refreshed only for sampled indices),
their squared norms, and per-cell gradient sums, which is exactly what
the noise and batch-size formulas consume. The step size is

    gamma_k = 0.5 * min(1 / Ltau_k, eps * mu / min(C, 2 sigma_k))

with a positive variance cap C keeping it bounded away from zero. The
fixed-batch baseline instead receives the gradient noise at the optimum
and uses the constant step 0.5 * min(1 / Ltau(tau), eps * mu / (2 sigma*)).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .objectives import per_example_grads, smoothness_constants
from .rates import expected_smoothness, gradient_noise, optimal_batch, GradNormStats
from .sampling import INDEPENDENT, NICE, uniform_subset

CELL_SUM_REFRESH_EVERY = 10_000


class DivergenceError(RuntimeError):
    """The iterate became non-finite; carries the trace up to that point."""

    def __init__(self, trace):
        super().__init__(f"iterate diverged at iteration {len(trace.iters)}")
        self.trace = trace


@dataclass
class RunConfig:
    """Knobs shared by the SGD drivers.

    eps is the target neighborhood; C the variance cap (None lets the
    adaptive run pick 2 * sigma(x0, tau0), np.inf disables capping);
    stop_rule is "rel_err" (stop once ||x - x*||^2 / ||x0 - x*||^2 <=
    eps / 10) or "none". max_iters bounds the iteration count regardless
    of epochs (None: unbounded).
    """

    eps: float
    C: float | None = None
    max_epochs: float = 100.0
    seed: int | None = None
    stop_rule: str = "rel_err"
    max_iters: int | None = None

    def __post_init__(self):
        if self.eps <= 0.0:
            raise ValueError("eps must be positive")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be at least 1")
        if self.stop_rule not in ("rel_err", "none"):
            raise ValueError(f"unknown stop_rule {self.stop_rule!r}")
        if self.C is not None and not self.C > 0.0:
            raise ValueError("C must be positive (or None for the automatic choice)")


@dataclass
class Trace:
    """Per-iteration record of an SGD run."""

    iters: list = field(default_factory=list)
    epochs: list = field(default_factory=list)
    tau: list = field(default_factory=list)
    gamma: list = field(default_factory=list)
    L_hat: list = field(default_factory=list)
    sigma_hat: list = field(default_factory=list)
    sq_dist: list = field(default_factory=list)
    rel_err: list = field(default_factory=list)
    status: str = "running"
    C_used: float | None = None
    x_final: np.ndarray | None = None

    def append(self, k, epochs, tau, gamma, L_hat, sigma_hat, sq_dist, rel_err):
        self.iters.append(k)
        self.epochs.append(epochs)
        self.tau.append(tau)
        self.gamma.append(gamma)
        self.L_hat.append(L_hat)
        self.sigma_hat.append(sigma_hat)
        self.sq_dist.append(sq_dist)
        self.rel_err.append(rel_err)

    def epochs_to_target(self, target_rel_err):
        """Cumulative epochs at the first iteration whose relative error is
        at or below the target, or nan if never reached."""
        for e, r in zip(self.epochs, self.rel_err):
            if r <= target_rel_err:
                return e
        return float("nan")


class GradientCache:
    """Stale per-example gradients with incrementally maintained per-cell
    aggregates.

    Stores the full gradient vectors (n x d) so that the squared norm of
    each cell's average gradient stays maintainable in O(tau d + K) per
    update. Cell sums are recomputed from scratch every
    CELL_SUM_REFRESH_EVERY per-example writes to bound float drift.
    """

    def __init__(self, obj, dataset, partitioning, x0):
        self.partitioning = partitioning
        self.grads = per_example_grads(obj, dataset, x0)
        self.h = np.einsum("ij,ij->i", self.grads, self.grads)
        self._sizes = partitioning.sizes.astype(np.float64)
        self._writes = 0
        self._rebuild_aggregates()

    def _rebuild_aggregates(self):
        part = self.partitioning
        self.cell_sums = np.stack([self.grads[c].sum(axis=0) for c in part.cells])
        self.cell_h_sums = np.asarray([self.h[c].sum() for c in part.cells])

    def update(self, cell, indices, new_grads):
        """Replace the cached gradients of ``indices`` (all in one cell)."""
        old = self.grads[indices]
        self.cell_sums[cell] += new_grads.sum(axis=0) - old.sum(axis=0)
        new_h = np.einsum("ij,ij->i", new_grads, new_grads)
        self.cell_h_sums[cell] += new_h.sum() - self.h[indices].sum()
        self.grads[indices] = new_grads
        self.h[indices] = new_h
        self._writes += len(indices)
        if self._writes >= CELL_SUM_REFRESH_EVERY:
            self._writes = 0
            self._rebuild_aggregates()

    def stats(self, at_point=""):
        means = self.cell_sums / self._sizes[:, None]
        return GradNormStats(
            sq_norms=self.h,
            cell_mean_sq_norm=self.cell_h_sums / self._sizes,
            cell_grad_sq_norm=np.einsum("ij,ij->i", means, means),
            at_point=at_point,
        )


def _feasible_smoothness_range(constants, partitioning, kind):
    taus = np.arange(1, partitioning.min_cell_size + 1)
    vals = np.asarray(
        [expected_smoothness(constants, partitioning, kind, int(t)) for t in taus]
    )
    return vals


def step_size_bounds(constants, partitioning, kind, mu, eps, C):
    """(gamma_min, gamma_max) sandwiching every adaptive step size.

    gamma_max = 0.5 * max over feasible tau of 1 / Ltau(tau); gamma_min =
    0.5 * min(min over feasible tau of 1 / Ltau(tau), eps * mu / C).
    """
    vals = _feasible_smoothness_range(constants, partitioning, kind)
    gamma_max = 0.5 / vals.min()
    gamma_min = 0.5 * min(1.0 / vals.max(), eps * mu / C)
    return gamma_min, gamma_max


def _step_size(Ltau, sigma, C, eps, mu):
    capped = min(C, 2.0 * sigma)
    if capped > 0.0:
        return 0.5 * min(1.0 / Ltau, eps * mu / capped)
    return 0.5 / Ltau


def _prepare(obj, dataset, partitioning, config, x_ref, rng, x0, constants):
    if constants is None:
        constants = smoothness_constants(obj, dataset, partitioning)
    mu = constants.require_mu()
    if rng is None:
        rng = np.random.default_rng(config.seed)
    if x0 is None:
        x0 = rng.standard_normal(dataset.d)
    x0 = np.asarray(x0, dtype=np.float64)
    diff0 = x0 - x_ref
    with np.errstate(over="ignore"):  # overflow to inf is the divergence signal
        r0 = float(diff0 @ diff0)
    return constants, mu, rng, x0, r0


def run_adaptive(obj, dataset, partitioning, kind, config, x_ref, rng=None, x0=None, constants=None):
    """Adaptive batch-size SGD. x_ref is used only to measure errors and
    drive the stop rule, never by the update itself."""
    constants, mu, rng, x, r0 = _prepare(
        obj, dataset, partitioning, config, x_ref, rng, x0, constants
    )
    n = dataset.n
    part = partitioning
    cum_probs = np.cumsum(part.probs)
    eps = config.eps
    target = eps / 10.0

    if not np.isfinite(r0):
        trace = Trace()
        trace.status = "diverged"
        trace.x_final = x
        raise DivergenceError(trace)
    cache = GradientCache(obj, dataset, part, x)
    epochs = 1.0  # the initialization pass costs one full pass over the data

    C = config.C
    if C is None:
        stats0 = cache.stats()
        tau0 = optimal_batch(constants, stats0, part, kind, mu, eps)
        sigma0 = gradient_noise(stats0, part, kind, tau0)
        C = 2.0 * sigma0 if sigma0 > 0.0 else np.inf

    trace = Trace(C_used=C)
    k = 0
    while True:
        diff = x - x_ref
        sq_dist = float(diff @ diff)
        rel = sq_dist / r0 if r0 > 0.0 else 0.0
        if not np.isfinite(sq_dist):
            trace.status = "diverged"
            trace.x_final = x
            raise DivergenceError(trace)

        stats = cache.stats()
        tau = optimal_batch(constants, stats, part, kind, mu, eps)
        Ltau = expected_smoothness(constants, part, kind, tau)
        sigma = gradient_noise(stats, part, kind, tau)
        gamma = _step_size(Ltau, sigma, C, eps, mu)
        trace.append(k, epochs, tau, gamma, Ltau, sigma, sq_dist, rel)

        if config.stop_rule == "rel_err" and rel <= target:
            trace.status = "converged"
            break
        if epochs >= config.max_epochs:
            trace.status = "max_epochs"
            break
        if config.max_iters is not None and k + 1 > config.max_iters:
            trace.status = "max_iters"
            break

        j = int(np.searchsorted(cum_probs, rng.random(), side="right"))
        j = min(j, part.num_cells - 1)
        cell = part.cells[j]
        n_j = len(cell)
        if kind == NICE:
            idx = uniform_subset(cell, tau, rng)
            weights = np.full(tau, n_j / (part.probs[j] * tau))
        else:
            p = tau / n_j
            idx = cell[rng.random(n_j) < p]
            weights = np.full(len(idx), 1.0 / (part.probs[j] * p))

        if len(idx):
            G = per_example_grads(obj, dataset, x, idx)
            x = x - gamma * ((G.T @ weights) / n)
            cache.update(j, idx, G)
            epochs += len(idx) / n
        k += 1

    trace.x_final = x
    return trace


def run_fixed(obj, dataset, partitioning, kind, tau, config, sigma_star, x_ref, rng=None, x0=None, constants=None):
    """Fixed batch-size SGD with the constant oracle step size. sigma_star
    is the gradient noise at the optimum for this tau (the baseline's
    oracle privilege)."""
    constants, mu, rng, x, r0 = _prepare(
        obj, dataset, partitioning, config, x_ref, rng, x0, constants
    )
    n = dataset.n
    part = partitioning
    cum_probs = np.cumsum(part.probs)
    eps = config.eps
    target = eps / 10.0

    Ltau = expected_smoothness(constants, part, kind, tau)
    if sigma_star > 0.0:
        gamma = 0.5 * min(1.0 / Ltau, eps * mu / (2.0 * sigma_star))
    else:
        gamma = 0.5 / Ltau

    trace = Trace(C_used=None)
    epochs = 0.0
    k = 0
    p = None
    if kind == INDEPENDENT:
        p = tau / part.sizes.astype(np.float64)
    while True:
        diff = x - x_ref
        sq_dist = float(diff @ diff)
        rel = sq_dist / r0 if r0 > 0.0 else 0.0
        if not np.isfinite(sq_dist):
            trace.status = "diverged"
            trace.x_final = x
            raise DivergenceError(trace)
        trace.append(k, epochs, tau, gamma, Ltau, sigma_star, sq_dist, rel)

        if config.stop_rule == "rel_err" and rel <= target:
            trace.status = "converged"
            break
        if epochs >= config.max_epochs:
            trace.status = "max_epochs"
            break
        if config.max_iters is not None and k + 1 > config.max_iters:
            trace.status = "max_iters"
            break

        j = int(np.searchsorted(cum_probs, rng.random(), side="right"))
        j = min(j, part.num_cells - 1)
        cell = part.cells[j]
        n_j = len(cell)
        if kind == NICE:
            idx = uniform_subset(cell, tau, rng)
            weights = np.full(tau, n_j / (part.probs[j] * tau))
        else:
            idx = cell[rng.random(n_j) < p[j]]
            weights = np.full(len(idx), 1.0 / (part.probs[j] * p[j]))

        if len(idx):
            G = per_example_grads(obj, dataset, x, idx)
            x = x - gamma * ((G.T @ weights) / n)
            epochs += len(idx) / n
        k += 1

    trace.x_final = x
    return trace
