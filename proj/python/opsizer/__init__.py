"""Op-amp sizing with EOA-weighted loss synthesis and DE + PSO search."""

from ._core import (
    bench,
    bootstrap,
    build_profile,
    compute_pfom,
    default_suite,
    evaluate_loss,
    misses,
    reference_requirements,
    size,
    surrogate_model,
    synthesize_loss,
    uniform_quadratic_loss,
)

__all__ = [
    "bench",
    "bootstrap",
    "build_profile",
    "compute_pfom",
    "default_suite",
    "evaluate_loss",
    "misses",
    "reference_requirements",
    "size",
    "surrogate_model",
    "synthesize_loss",
    "uniform_quadratic_loss",
]
