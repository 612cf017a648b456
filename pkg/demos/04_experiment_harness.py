"""End-to-end experiment: reference solve, batch-size grid search, and the
machine-readable outputs the figure scripts consume.

Equivalent CLI:
    adabatch reference --data results/demo/design.libsvm --model ridge ... --out results/demo
    adabatch grid      --data results/demo/design.libsvm --model ridge ... --out results/demo

Run: python3 demos/04_experiment_harness.py
"""

import json
import os

import numpy as np

from adabatch import Dataset, dump_libsvm, smoothness_constants
from adabatch.harness import ExperimentSpec, build_problem, cmd_grid, cmd_reference

out_dir = "results/demo"
os.makedirs(out_dir, exist_ok=True)

# column-scaled Gaussian design: enough eigenvalue spread that SGD needs
# several epochs and the batch-size trade-off is visible
n, d = 120, 10
rng = np.random.default_rng(0)
A = rng.standard_normal((n, d)) * np.geomspace(1.0, 1 / 8, d)
x_true = rng.standard_normal(d)
ds = Dataset(features=A, labels=A @ x_true + 0.005 * rng.standard_normal(n))
data_path = os.path.join(out_dir, "design.libsvm")
with open(data_path, "w") as fh:
    fh.write(dump_libsvm(ds))

spec = ExperimentSpec(
    data=data_path,
    model="ridge",
    lam=0.01,
    partitions=2,
    sampling="nice",
    eps=0.3,
    seeds=5,
    seed=0,
    max_epochs=800.0,
    ref_tol=1e-11,
    out_dir=out_dir,
)
# variance cap: eps * mu * max L_i keeps early steps at the smallest-batch
# smoothness step without oracle knowledge
obj, dataset, part = build_problem(spec)
constants = smoothness_constants(obj, dataset, part)
spec.C = spec.eps * constants.require_mu() * float(constants.L_i.max())

ref_path = cmd_reference(spec)
print(f"reference solution written to {ref_path}")
with open(ref_path) as fh:
    ref = json.load(fh)
print(f"  f(x*) = {ref['f_star']:.6f}, ||grad(x*)|| = {ref['grad_norm']:.2e}")

summary = cmd_grid(spec)
print(f"\ngrid search over tau = {summary['tau_grid']}")
print(f"  theoretical tau*      : {summary['tau_star_theoretical']}")
print(f"  empirical argmin tau  : {summary['empirical_argmin_tau']}")
print(f"  best fixed epochs     : {summary['epochs_best_fixed']:.2f}")
print(f"  adaptive epochs       : {summary['epochs_adaptive']:.2f}")

print(f"\noutputs in {out_dir}/:")
for name in sorted(os.listdir(out_dir)):
    print("  ", name)
print("\ngrid.csv and grid_summary.json feed the figure scripts in frontend/.")
