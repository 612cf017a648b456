"""Adaptive batch-size SGD for strongly convex finite sums.

The package splits into:

- data: LIBSVM parsing, synthetic problems, index partitioning
- objectives: ridge / logistic values, gradients, smoothness constants
- sampling: the two partition sampling laws and the exact enumerator
- rates: expected smoothness, gradient noise, total complexity, optimal
  batch size
- optimizer: the adaptive algorithm and the fixed-batch baseline
- harness: experiment orchestration and CSV/JSON emission (also exposed
  as the ``adabatch`` command line tool)
"""

from .data import (
    Dataset,
    LibsvmParseError,
    Partitioning,
    dump_libsvm,
    generate_synthetic,
    load_libsvm,
    parse_libsvm,
    partition,
    with_sign_labels,
)
from .objectives import (
    Objective,
    ReferenceSolveError,
    SmoothnessConstants,
    grad,
    grad_i,
    per_example_grads,
    smoothness_constants,
    solve_reference,
    value,
)
from .optimizer import (
    DivergenceError,
    GradientCache,
    RunConfig,
    Trace,
    run_adaptive,
    run_fixed,
    step_size_bounds,
)
from .rates import (
    DegenerateLinesError,
    GradNormStats,
    RateEstimates,
    expected_smoothness,
    grad_norm_stats,
    gradient_noise,
    minimize_max_linear,
    noise_line,
    optimal_batch,
    sigma_lower_bound_factor,
    smoothness_lines,
    total_complexity,
)
from .sampling import (
    INDEPENDENT,
    NICE,
    DrawnBatch,
    EnumerationSizeError,
    SamplingLaw,
    draw,
    enumerate_distribution,
    stochastic_grad,
)

__all__ = [
    "Dataset",
    "LibsvmParseError",
    "Partitioning",
    "parse_libsvm",
    "load_libsvm",
    "dump_libsvm",
    "generate_synthetic",
    "with_sign_labels",
    "partition",
    "Objective",
    "SmoothnessConstants",
    "ReferenceSolveError",
    "value",
    "grad",
    "grad_i",
    "per_example_grads",
    "smoothness_constants",
    "solve_reference",
    "SamplingLaw",
    "DrawnBatch",
    "EnumerationSizeError",
    "NICE",
    "INDEPENDENT",
    "draw",
    "enumerate_distribution",
    "stochastic_grad",
    "GradNormStats",
    "RateEstimates",
    "DegenerateLinesError",
    "grad_norm_stats",
    "expected_smoothness",
    "gradient_noise",
    "smoothness_lines",
    "noise_line",
    "total_complexity",
    "minimize_max_linear",
    "optimal_batch",
    "sigma_lower_bound_factor",
    "GradientCache",
    "RunConfig",
    "Trace",
    "DivergenceError",
    "run_adaptive",
    "run_fixed",
    "step_size_bounds",
]

__version__ = "0.1.0"
