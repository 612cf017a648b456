"""Datasets and partitionings: LIBSVM parsing, synthetic problems, cells.

Run: python3 demos/01_data_and_partitions.py
"""

import numpy as np

from adabatch import dump_libsvm, generate_synthetic, parse_libsvm, partition

# LIBSVM text: label followed by 1-based index:value pairs
text = """\
1.5 1:0.5 3:-2.0
-0.7 2:1.0
2.25 1:-1.0 2:0.25 3:0.75
"""
ds = parse_libsvm(text)
print(f"parsed {ds.n} examples with {ds.d} features")
print("features:\n", ds.dense_features())
print("labels:  ", ds.labels)

# serialization round-trips exactly
assert parse_libsvm(dump_libsvm(ds), dimension=ds.d).labels.tolist() == ds.labels.tolist()

# synthetic problems: Gaussian rows, planted linear model, optional label noise
synth = generate_synthetic(n=200, d=5, seed=42, noise=0.3)
print(f"\nsynthetic: n={synth.n}, d={synth.d}, label std {synth.labels.std():.3f}")

# partition indices into cells; probabilities default to cell size / n, so
# every example is equally likely to be touched by a fixed-size batch
part = partition(200, 3, scheme="shuffled", seed=7)
print("\ncell sizes:", part.sizes.tolist())
print("cell probabilities:", np.round(part.probs, 4).tolist())
tau = 10
marginals = [part.probs[j] * tau / part.sizes[j] for j in range(3)]
print(f"per-example inclusion probability at tau={tau}:",
      np.round(marginals, 5).tolist(), "(uniform = tau/n =", tau / 200, ")")
