"""Partition sampling laws and the exact small-n distribution enumerator.

Both laws first pick a cell C_j with probability q_j. The fixed-size
("nice") law then draws a uniform size-tau subset of the cell without
replacement; the independent law includes each element of the cell
independently with probability p_i (default tau / n_j). Sampled indices
carry unbiasing weights v_i = 1 / P(i sampled), so the weighted gradient

    (1/n) sum_{i in S} v_i grad_i(x)

is an unbiased estimator of the full gradient.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .objectives import per_example_grads

NICE = "nice"
INDEPENDENT = "independent"

ENUMERATION_LIMIT = 10**6


class EnumerationSizeError(ValueError):
    """The outcome space is too large to enumerate exactly."""


@dataclass(frozen=True)
class SamplingLaw:
    kind: str
    tau: int
    partitioning: object
    p: tuple = None
    _cum_probs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        part = self.partitioning
        if self.kind not in (NICE, INDEPENDENT):
            raise ValueError(f"unknown sampling kind {self.kind!r}")
        if not 1 <= self.tau <= part.min_cell_size:
            raise ValueError(
                f"tau={self.tau} outside [1, {part.min_cell_size}] for this partitioning"
            )
        if self.kind == INDEPENDENT:
            if self.p is None:
                p = tuple(np.full(len(c), self.tau / len(c)) for c in part.cells)
                object.__setattr__(self, "p", p)
            else:
                p = tuple(np.asarray(a, dtype=np.float64) for a in self.p)
                if len(p) != part.num_cells or any(
                    len(a) != len(c) for a, c in zip(p, part.cells)
                ):
                    raise ValueError("p must give one probability per element of each cell")
                if any(np.any(a <= 0.0) or np.any(a > 1.0) for a in p):
                    raise ValueError("inclusion probabilities must lie in (0, 1]")
                object.__setattr__(self, "p", p)
        elif self.p is not None:
            raise ValueError("per-element probabilities only apply to the independent kind")
        object.__setattr__(self, "_cum_probs", np.cumsum(part.probs))

    def marginals(self):
        """P(i sampled) for every index, shape (n,)."""
        part = self.partitioning
        out = np.empty(part.n)
        for j, c in enumerate(part.cells):
            if self.kind == NICE:
                out[c] = part.probs[j] * self.tau / len(c)
            else:
                out[c] = part.probs[j] * self.p[j]
        return out


@dataclass(frozen=True)
class DrawnBatch:
    indices: np.ndarray
    weights: np.ndarray
    cell: int


def uniform_subset(cell, tau, rng):
    """Uniform size-tau subset of an index array, with cheap endpoints."""
    n_j = len(cell)
    if tau == n_j:
        return cell
    if tau == 1:
        i = rng.integers(n_j)
        return cell[i : i + 1]
    return rng.permutation(cell)[:tau]


def draw(law, rng):
    """One batch from the law. Deterministic given the rng state."""
    part = law.partitioning
    j = int(np.searchsorted(law._cum_probs, rng.random(), side="right"))
    j = min(j, part.num_cells - 1)
    cell = part.cells[j]
    n_j = len(cell)
    if law.kind == NICE:
        idx = uniform_subset(cell, law.tau, rng)
        w = np.full(law.tau, n_j / (part.probs[j] * law.tau))
    else:
        mask = rng.random(n_j) < law.p[j]
        idx = cell[mask]
        w = 1.0 / (part.probs[j] * law.p[j][mask])
    return DrawnBatch(indices=idx, weights=w, cell=j)


def enumerate_distribution(law):
    """Exact outcome distribution: list of (indices, probability, weights).

    ``weights`` is the full n-vector of v values for the outcome (zero off
    the sampled set). Outcomes are enumerated cell by cell; the empty set
    can appear once per cell under the independent kind. Probabilities sum
    to 1. Only feasible for small instances; raises EnumerationSizeError
    past 10^6 outcomes.
    """
    part = law.partitioning
    if law.kind == NICE:
        total = sum(math.comb(len(c), law.tau) for c in part.cells)
    else:
        total = sum(2 ** len(c) for c in part.cells)
    if total > ENUMERATION_LIMIT:
        raise EnumerationSizeError(f"{total} outcomes exceed the {ENUMERATION_LIMIT} limit")

    out = []
    for j, cell in enumerate(part.cells):
        q_j = part.probs[j]
        n_j = len(cell)
        if law.kind == NICE:
            prob = q_j / math.comb(n_j, law.tau)
            v = n_j / (q_j * law.tau)
            for subset in itertools.combinations(cell, law.tau):
                weights = np.zeros(part.n)
                weights[list(subset)] = v
                out.append((subset, prob, weights))
        else:
            p_j = law.p[j]
            for bits in itertools.product((False, True), repeat=n_j):
                mask = np.asarray(bits)
                prob = float(np.prod(np.where(mask, p_j, 1.0 - p_j))) * q_j
                subset = tuple(cell[mask])
                weights = np.zeros(part.n)
                weights[cell[mask]] = 1.0 / (q_j * p_j[mask])
                out.append((subset, prob, weights))
    return out


def stochastic_grad(obj, dataset, batch, x):
    """Weighted subsampled gradient (1/n) sum_{i in S} v_i grad_i(x).

    The empty batch (possible under the independent kind) yields the zero
    vector, keeping the estimator unbiased without resampling.
    """
    if len(batch.indices) == 0:
        return np.zeros(dataset.d)
    G = per_example_grads(obj, dataset, x, batch.indices)
    return (G.T @ batch.weights) / dataset.n
