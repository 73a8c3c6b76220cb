"""Directional proximal point solver for convex optimization.

The package provides:

- ``core``: problem model, deterministic subgradient selection, seeded
  benchmark generators.
- ``scalar_search``: golden-section and bisection scalar solvers plus bracket
  construction for the directional prox subproblem.
- ``dppm_solver``: the directional proximal point iteration, direction
  strategies, and an accelerated variant.
- ``baselines``: subgradient method, gradient descent with backtracking, and
  classical proximal point with inner-loop subproblem solvers.
- ``diagnostics``: checkers that assert the method's descent, step-bound,
  distance-monotonicity, and rate inequalities on traces.
- ``harness``: config parsing, experiment runner, CSV/JSON serialization, and
  the ``dirppm`` command line interface.
"""

from .core import (
    GENERATOR_NAME,
    KINK_TOL,
    Problem,
    ProblemSpec,
    build_problem,
    make_rng,
    sampled_subgradient,
    subgradient,
    value,
)

__all__ = [
    "GENERATOR_NAME",
    "KINK_TOL",
    "Problem",
    "ProblemSpec",
    "build_problem",
    "make_rng",
    "sampled_subgradient",
    "subgradient",
    "value",
]

__version__ = "0.1.0"
