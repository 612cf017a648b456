"""Experiment orchestration: reference solutions, fixed/adaptive runs, and
the batch-size grid search, all emitting machine-readable CSV/JSON.

Every float written to CSV uses 17 significant digits so values round-trip
exactly. Runs are keyed by (tau, seed index) and aggregated in sorted key
order, so output bytes do not depend on scheduling.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import data as data_mod
from . import objectives as obj_mod
from .optimizer import DivergenceError, RunConfig, run_adaptive, run_fixed
from .rates import (
    expected_smoothness,
    grad_norm_stats,
    gradient_noise,
    optimal_batch,
    total_complexity,
)

TRACE_COLUMNS = ("k", "epoch", "tau", "gamma", "L_hat", "sigma_hat", "sq_dist", "rel_err")
GRID_COLUMNS = ("tau", "L_tau", "sigma_star", "T_theory", "epochs_mean", "epochs_sd", "n_diverged", "is_adaptive")

# stream tags keeping x0 draws, adaptive runs and fixed runs independent
_X0_STREAM = 0
_ADAPTIVE_STREAM = 1
_FIXED_STREAM = 2


@dataclass
class ExperimentSpec:
    """One experiment configuration. Everything has a default except the
    data source: either ``data`` (a LIBSVM path) or the synthetic sizes."""

    data: str | None = None
    synth_n: int | None = None
    synth_d: int | None = None
    synth_noise: float = 1.0
    data_dimension: int | None = None
    model: str = "ridge"
    lam: float = 0.1
    logistic_sign: float = 1.0
    ref_tol: float = 1e-10
    partitions: int = 1
    partition_scheme: str = "contiguous"
    partition_probs: str = "proportional"
    sampling: str = "nice"
    tau: int | None = None
    eps: float = 1e-2
    C: float | None = None
    max_epochs: float = 100.0
    seeds: int = 10
    seed: int = 0
    tau_grid: list | None = None
    workers: int = 1
    out_dir: str = "results"
    x0_at_optimum: bool = False

    @classmethod
    def from_config(cls, path, overrides=None):
        with open(path) as fh:
            raw = json.load(fh)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if overrides:
            raw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**raw)


def fmt(x):
    """CSV cell formatting: ints verbatim, floats with 17 significant digits."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def build_problem(spec):
    """(objective, dataset, partitioning) for a spec."""
    if spec.data is not None:
        dataset = data_mod.load_libsvm(spec.data, dimension=spec.data_dimension)
    elif spec.synth_n is not None and spec.synth_d is not None:
        dataset = data_mod.generate_synthetic(
            spec.synth_n, spec.synth_d, seed=spec.seed, noise=spec.synth_noise
        )
        if spec.model == "logistic":
            dataset = data_mod.with_sign_labels(dataset)
    else:
        raise ValueError("spec needs either a data path or synth_n / synth_d")
    obj = obj_mod.Objective(kind=spec.model, lam=spec.lam, logistic_sign=spec.logistic_sign)
    part = data_mod.partition(
        dataset.n,
        spec.partitions,
        scheme=spec.partition_scheme,
        seed=spec.seed,
        prob_rule=spec.partition_probs,
    )
    return obj, dataset, part


def x0_for_seed(spec, seed_index, d):
    rng = np.random.default_rng([spec.seed, seed_index, _X0_STREAM])
    return rng.standard_normal(d)


def run_rng(spec, seed_index, stream, tag=0):
    return np.random.default_rng([spec.seed, seed_index, stream, tag])


def reference_path(spec):
    return os.path.join(spec.out_dir, "reference.json")


def cmd_reference(spec):
    """Solve for x*, record f(x*), ||grad(x*)|| and each seed's starting
    squared distance; returns the artifact path."""
    obj, dataset, part = build_problem(spec)
    x_star = obj_mod.solve_reference(obj, dataset, tol=spec.ref_tol)
    g = obj_mod.grad(obj, dataset, x_star)
    r0 = {}
    for s in range(spec.seeds):
        x0 = x_star if spec.x0_at_optimum else x0_for_seed(spec, s, dataset.d)
        diff = x0 - x_star
        r0[str(s)] = float(diff @ diff)
    artifact = {
        "x_star": [float(v) for v in x_star],
        "f_star": float(obj_mod.value(obj, dataset, x_star)),
        "grad_norm": float(np.linalg.norm(g)),
        "r0": r0,
        "model": spec.model,
        "lam": spec.lam,
        "n": dataset.n,
        "d": dataset.d,
    }
    os.makedirs(spec.out_dir, exist_ok=True)
    path = reference_path(spec)
    with open(path, "w") as fh:
        json.dump(artifact, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def load_reference(spec):
    path = reference_path(spec)
    if not os.path.exists(path):
        raise FileNotFoundError(
            f"reference artifact {path} missing; run the 'reference' command first"
        )
    with open(path) as fh:
        artifact = json.load(fh)
    return np.asarray(artifact["x_star"]), artifact


def write_trace_csv(path, trace):
    rows = [",".join(TRACE_COLUMNS)]
    for i in range(len(trace.iters)):
        rows.append(
            ",".join(
                (
                    fmt(trace.iters[i]),
                    fmt(trace.epochs[i]),
                    fmt(trace.tau[i]),
                    fmt(trace.gamma[i]),
                    fmt(trace.L_hat[i]),
                    fmt(trace.sigma_hat[i]),
                    fmt(trace.sq_dist[i]),
                    fmt(trace.rel_err[i]),
                )
            )
        )
    with open(path, "w") as fh:
        fh.write("\n".join(rows) + "\n")


def _run_config(spec):
    return RunConfig(eps=spec.eps, C=spec.C, max_epochs=spec.max_epochs)


def _adaptive_task(args):
    spec, obj, dataset, part, x_star, seed_index = args
    x0 = x_star if spec.x0_at_optimum else x0_for_seed(spec, seed_index, dataset.d)
    rng = run_rng(spec, seed_index, _ADAPTIVE_STREAM)
    try:
        trace = run_adaptive(
            obj, dataset, part, spec.sampling, _run_config(spec), x_star, rng=rng, x0=x0
        )
    except DivergenceError as err:
        trace = err.trace
    return seed_index, trace


def _fixed_task(args):
    spec, obj, dataset, part, x_star, sigma_star, tau, seed_index = args
    x0 = x_star if spec.x0_at_optimum else x0_for_seed(spec, seed_index, dataset.d)
    rng = run_rng(spec, seed_index, _FIXED_STREAM, tag=tau)
    try:
        trace = run_fixed(
            obj, dataset, part, spec.sampling, tau, _run_config(spec), sigma_star, x_star,
            rng=rng, x0=x0,
        )
    except DivergenceError as err:
        trace = err.trace
    return (tau, seed_index), trace


def _map_tasks(fn, tasks, workers):
    if workers <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def cmd_adaptive(spec):
    """Adaptive runs for every seed; per-seed trace CSVs plus a summary
    JSON. Returns the summary dict."""
    obj, dataset, part = build_problem(spec)
    x_star, _ = load_reference(spec)
    tasks = [(spec, obj, dataset, part, x_star, s) for s in range(spec.seeds)]
    results = _map_tasks(_adaptive_task, tasks, spec.workers)
    results.sort(key=lambda r: r[0])

    os.makedirs(spec.out_dir, exist_ok=True)
    epochs = []
    statuses = {}
    for seed_index, trace in results:
        write_trace_csv(
            os.path.join(spec.out_dir, f"trace_adaptive_seed{seed_index}.csv"), trace
        )
        epochs.append(trace.epochs_to_target(spec.eps / 10.0))
        statuses[str(seed_index)] = trace.status
    arr = np.asarray(epochs)
    summary = {
        "epochs_per_seed": [None if math.isnan(e) else e for e in epochs],
        "epochs_mean": None if np.all(np.isnan(arr)) else float(np.nanmean(arr)),
        "epochs_sd": None if np.all(np.isnan(arr)) else float(np.nanstd(arr)),
        "statuses": statuses,
        "target_rel_err": spec.eps / 10.0,
    }
    with open(os.path.join(spec.out_dir, "adaptive_summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def cmd_fixed(spec):
    """Fixed-batch runs at spec.tau for every seed; trace CSVs + summary."""
    if spec.tau is None:
        raise ValueError("the fixed command needs --tau")
    obj, dataset, part = build_problem(spec)
    x_star, _ = load_reference(spec)
    stats_star = grad_norm_stats(obj, dataset, part, x_star, at_point="x_star")
    sigma_star = gradient_noise(stats_star, part, spec.sampling, spec.tau)
    tasks = [
        (spec, obj, dataset, part, x_star, sigma_star, spec.tau, s) for s in range(spec.seeds)
    ]
    results = _map_tasks(_fixed_task, tasks, spec.workers)
    results.sort(key=lambda r: r[0])

    os.makedirs(spec.out_dir, exist_ok=True)
    epochs = []
    statuses = {}
    for (tau, seed_index), trace in results:
        write_trace_csv(
            os.path.join(spec.out_dir, f"trace_fixed_tau{tau}_seed{seed_index}.csv"), trace
        )
        epochs.append(trace.epochs_to_target(spec.eps / 10.0))
        statuses[str(seed_index)] = trace.status
    arr = np.asarray(epochs)
    summary = {
        "tau": spec.tau,
        "sigma_star": sigma_star,
        "epochs_per_seed": [None if math.isnan(e) else e for e in epochs],
        "epochs_mean": None if np.all(np.isnan(arr)) else float(np.nanmean(arr)),
        "epochs_sd": None if np.all(np.isnan(arr)) else float(np.nanstd(arr)),
        "statuses": statuses,
        "target_rel_err": spec.eps / 10.0,
    }
    with open(os.path.join(spec.out_dir, "fixed_summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def default_tau_grid(tau_max, tau_star):
    """Doubling grid plus the feasible endpoints and the neighbors of the
    theoretical optimum."""
    grid = set()
    t = 1
    while t <= tau_max:
        grid.add(t)
        t *= 2
    grid.add(tau_max)
    for t in (tau_star - 1, tau_star, tau_star + 1):
        if 1 <= t <= tau_max:
            grid.add(t)
    return sorted(grid)


def cmd_grid(spec):
    """Grid search over tau: fixed runs per (tau, seed), theoretical T(tau),
    plus the adaptive arm. Emits grid.csv and grid_summary.json."""
    obj, dataset, part = build_problem(spec)
    x_star, artifact = load_reference(spec)
    constants = obj_mod.smoothness_constants(obj, dataset, part)
    mu = constants.require_mu()
    stats_star = grad_norm_stats(obj, dataset, part, x_star, at_point="x_star")
    tau_star = optimal_batch(constants, stats_star, part, spec.sampling, mu, spec.eps)

    tau_max = part.min_cell_size
    grid = spec.tau_grid or default_tau_grid(tau_max, tau_star)
    if any(not 1 <= t <= tau_max for t in grid):
        raise ValueError(f"tau grid entries must lie in [1, {tau_max}]")

    r0_mean = float(np.mean([artifact["r0"][str(s)] for s in range(spec.seeds)]))
    target = spec.eps / 10.0

    tasks = []
    sigma_by_tau = {}
    for tau in grid:
        sigma_by_tau[tau] = gradient_noise(stats_star, part, spec.sampling, tau)
        for s in range(spec.seeds):
            tasks.append((spec, obj, dataset, part, x_star, sigma_by_tau[tau], tau, s))
    fixed_results = dict(
        (key, trace) for key, trace in _map_tasks(_fixed_task, tasks, spec.workers)
    )

    adaptive_tasks = [(spec, obj, dataset, part, x_star, s) for s in range(spec.seeds)]
    adaptive_results = _map_tasks(_adaptive_task, adaptive_tasks, spec.workers)
    adaptive_results.sort(key=lambda r: r[0])

    rows = []
    T_table = {}
    for tau in grid:
        epochs = np.asarray(
            [fixed_results[(tau, s)].epochs_to_target(target) for s in range(spec.seeds)]
        )
        n_div = sum(
            fixed_results[(tau, s)].status == "diverged" for s in range(spec.seeds)
        )
        Ltau = expected_smoothness(constants, part, spec.sampling, tau)
        T_theory = total_complexity(tau, Ltau, sigma_by_tau[tau], mu, spec.eps, r0_mean)
        T_table[str(tau)] = float(T_theory)
        good = ~np.isnan(epochs)
        rows.append(
            (
                tau,
                Ltau,
                sigma_by_tau[tau],
                T_theory,
                float(np.mean(epochs[good])) if good.any() else float("nan"),
                float(np.std(epochs[good])) if good.any() else float("nan"),
                n_div,
                0,
            )
        )

    adaptive_epochs = np.asarray(
        [trace.epochs_to_target(target) for _, trace in adaptive_results]
    )
    adaptive_tau_median = float(
        np.median([np.median(trace.tau) for _, trace in adaptive_results])
    )
    n_div_adaptive = sum(trace.status == "diverged" for _, trace in adaptive_results)
    good = ~np.isnan(adaptive_epochs)
    epochs_adaptive = float(np.mean(adaptive_epochs[good])) if good.any() else float("nan")
    rows.append(
        (
            adaptive_tau_median,
            float("nan"),
            float("nan"),
            float("nan"),
            epochs_adaptive,
            float(np.std(adaptive_epochs[good])) if good.any() else float("nan"),
            n_div_adaptive,
            1,
        )
    )

    os.makedirs(spec.out_dir, exist_ok=True)
    csv_lines = [",".join(GRID_COLUMNS)]
    for row in rows:
        csv_lines.append(",".join(fmt(v) for v in row))
    grid_csv = os.path.join(spec.out_dir, "grid.csv")
    with open(grid_csv, "w") as fh:
        fh.write("\n".join(csv_lines) + "\n")

    fixed_means = [r[4] for r in rows[:-1] if not math.isnan(r[4])]
    summary = {
        "tau_star_theoretical": int(tau_star),
        "epochs_adaptive": None if math.isnan(epochs_adaptive) else epochs_adaptive,
        "epochs_best_fixed": min(fixed_means) if fixed_means else None,
        "T_table": T_table,
        "tau_grid": [int(t) for t in grid],
        "empirical_argmin_tau": int(
            grid[int(np.nanargmin([r[4] for r in rows[:-1]]))]
        )
        if fixed_means
        else None,
        "target_rel_err": target,
    }
    with open(os.path.join(spec.out_dir, "grid_summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary
