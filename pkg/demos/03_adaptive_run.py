"""The adaptive algorithm next to fixed batch sizes on one problem.

The adaptive run estimates the optimal batch size from lazily cached
per-example gradient norms, so it needs no knowledge of the noise at the
optimum; the fixed-batch baseline is given that oracle quantity.

Run: python3 demos/03_adaptive_run.py
"""

import numpy as np

from adabatch import (
    Objective,
    RunConfig,
    generate_synthetic,
    grad_norm_stats,
    gradient_noise,
    optimal_batch,
    partition,
    run_adaptive,
    run_fixed,
    smoothness_constants,
    solve_reference,
    with_sign_labels,
)

n, d, eps = 400, 10, 0.1
ds = with_sign_labels(generate_synthetic(n, d, seed=0, noise=0.1))
obj = Objective("logistic", lam=0.02)
part = partition(n, 2)
constants = smoothness_constants(obj, ds, part)
mu = constants.require_mu()
x_star = solve_reference(obj, ds, tol=1e-11)
stats_star = grad_norm_stats(obj, ds, part, x_star)
tau_star = optimal_batch(constants, stats_star, part, "nice", mu, eps)

x0 = np.random.default_rng(5).standard_normal(d)
config = RunConfig(eps=eps, C=eps * mu * float(constants.L_i.max()), max_epochs=400)

trace = run_adaptive(obj, ds, part, "nice", config, x_star,
                     rng=np.random.default_rng(1), x0=x0, constants=constants)
print(f"adaptive: {trace.status} after {trace.epochs[-1]:.2f} epochs, needing no "
      f"oracle knowledge (theoretical tau* = {tau_star})")

for tau in (1, tau_star, part.min_cell_size):
    sigma_star = gradient_noise(stats_star, part, "nice", tau)
    fixed = run_fixed(obj, ds, part, "nice", tau, config, sigma_star, x_star,
                      rng=np.random.default_rng(2), x0=x0, constants=constants)
    print(f"fixed tau={tau:3d}: {fixed.status} after "
          f"{fixed.epochs_to_target(eps / 10):.2f} epochs to target")

print("\nbatch size trajectory (every 10% of the run):")
idx = np.linspace(0, len(trace.tau) - 1, 11).astype(int)
print("  k:  ", [trace.iters[i] for i in idx])
print("  tau:", [trace.tau[i] for i in idx])
