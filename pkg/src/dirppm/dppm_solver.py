"""Directional proximal point iteration.

One iteration moves along a unit direction p by the step

    w* = argmin over w >= 0 of  w^2 / (2 t) + f(x + w p)

so the next iterate is x + w* p. The scalar subproblem is solved by bisection
on its stationarity equation when the gradient exists, and by golden section
otherwise. Direction strategies supply p each iteration: the normalized
negative (sub)gradient, a momentum combination with the previous direction,
or the normalized negative of a ball-averaged subgradient.

Key facts the implementation relies on (and diagnostics re-check on traces):

- descent: f(x + w* p) <= f(x) - (w*)^2 / t at every step;
- step bound: 0 <= w* <= t |p . s(x)|, which provides the search bracket;
- the map w -> p . s(x + w p) is non-decreasing, so a nonnegative slope at
  w = 0 already proves w* = 0 and no search is needed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np

from .core import (
    GENERATOR_NAME,
    Problem,
    sampled_subgradient,
    subgradient,
    value,
)
from .scalar_search import (
    ScalarSolverConfig,
    bisection_root,
    golden_section,
)

# Below this subgradient norm a point is treated as critical: directions are
# not formed from it and the solver stops successfully.
CRITICAL_NORM = 1e-14

STRATEGY_KINDS = ("neg_gradient", "neg_subgradient", "sampled_subgradient", "momentum")

TERMINATION_REASONS = ("eps_reached", "max_iters", "stalled", "critical_point")


@dataclass(frozen=True)
class DirectionStrategy:
    """Recipe for producing the search direction at each iterate.

    kinds: neg_gradient and neg_subgradient both normalize the negative
    oracle output (the two names record intent on smooth vs nonsmooth
    problems); sampled_subgradient averages oracle outputs over a ball of
    ``radius`` with ``n_samples`` points; momentum blends the previous
    direction with the direction an inner strategy proposes.
    """

    kind: str = "neg_subgradient"
    radius: float = 1e-3
    n_samples: int = 10
    seed: int = 0
    beta: float = 0.5
    inner: Optional["DirectionStrategy"] = None

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(f"unknown direction strategy {self.kind!r}")
        if not 0.0 <= self.beta < 1.0:
            raise ValueError("momentum beta must lie in [0, 1)")
        if self.radius <= 0:
            raise ValueError("sampling radius must be positive")
        if self.n_samples < 1:
            raise ValueError("n_samples must be at least 1")
        if self.inner is not None and self.inner.kind == "momentum":
            raise ValueError("momentum cannot nest another momentum strategy")


@dataclass(frozen=True)
class SolverConfig:
    """Settings for a directional proximal point run."""

    t: float = 1000.0
    strategy: DirectionStrategy = field(default_factory=DirectionStrategy)
    scalar_cfg: ScalarSolverConfig = field(default_factory=ScalarSolverConfig)
    eps_stop: float = 1e-12
    max_iters: int = 10000
    record_distances: bool = True
    accelerated: bool = False

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError("t must be positive")
        if self.eps_stop < 0:
            raise ValueError("eps_stop must be nonnegative")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")


@dataclass(frozen=True)
class EnvelopeResult:
    """Value and minimizer of the directional prox subproblem."""

    value: float
    w_star: float
    n_evals: int
    converged: bool


@dataclass(frozen=True)
class StepResult:
    """One directional proximal step.

    ``next`` is exactly x + w_star * p (same arithmetic expression);
    ``dir_dot_subgrad_next`` records p . s(next) under the oracle selection;
    ``envelope_value`` never exceeds f(x).
    """

    w_star: float
    envelope_value: float
    next: np.ndarray
    dir_dot_subgrad_next: float
    converged_flag: bool
    n_evals: int = 0


@dataclass
class AccelState:
    """State of the accelerated iteration.

    theta_k = 2 / (k + 1), so theta_1 = 1 and the first extrapolated point
    coincides with the first step output. After each update the extrapolated
    point satisfies v = (1 - 1/theta) x + (1/theta) u where x is the point the
    step was taken from and u is the step output.
    """

    k: int
    theta: float
    x: np.ndarray
    v: np.ndarray


@dataclass
class Trace:
    """Per-iteration records of a solver run.

    ``xs`` has one entry per iterate (n_steps + 1 of them); the step arrays
    (w_stars, directions, dir dots, step_norms) have one entry per step.
    dir_dots_curr[k] is p_k . s(x_k) and dir_dots_next[k] is p_k . s(x_{k+1}),
    both under the oracle selection. elapsed_ns is cumulative from the run
    start, recorded when each iterate was produced. For the plain directional
    solver f_values is non-increasing; the subgradient baseline is
    non-monotone and tracks its best value in extras["best_values"].
    """

    problem_label: str
    solver_kind: str
    xs: list
    f_values: list
    w_stars: list
    directions: list
    dir_dots_curr: list
    dir_dots_next: list
    step_norms: list
    elapsed_ns: list
    termination: str
    config: dict
    dists: Optional[list] = None
    rng_name: str = GENERATOR_NAME
    extras: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @property
    def n_steps(self) -> int:
        return len(self.w_stars)

    @property
    def final_x(self) -> np.ndarray:
        return self.xs[-1]

    @property
    def final_value(self) -> float:
        return self.f_values[-1]


def _unit(v: np.ndarray) -> Optional[np.ndarray]:
    norm = float(np.linalg.norm(v))
    if norm <= CRITICAL_NORM:
        return None
    return v / norm


def select_direction(strategy: DirectionStrategy, problem: Problem, x,
                     prev_dir: Optional[np.ndarray] = None,
                     k: int = 0) -> Optional[np.ndarray]:
    """Unit search direction at x, or None when x is a critical point.

    None is returned when the subgradient norm is at or below the critical
    threshold; callers terminate successfully on it. The optional iteration
    index k refreshes the sampling cloud of the sampled strategy while
    keeping runs fully deterministic.
    """
    if strategy.kind in ("neg_gradient", "neg_subgradient"):
        return _unit(-subgradient(problem, x))
    if strategy.kind == "sampled_subgradient":
        avg = sampled_subgradient(problem, x, strategy.radius, strategy.n_samples,
                                  strategy.seed + k)
        return _unit(-avg)
    # momentum: blend the previous direction with the inner strategy's one
    inner = strategy.inner or DirectionStrategy(kind="neg_subgradient")
    base = select_direction(inner, problem, x, prev_dir=None, k=k)
    if base is None:
        return None
    if prev_dir is None:
        return base
    combo = _unit(strategy.beta * prev_dir + (1.0 - strategy.beta) * base)
    # opposing components can cancel; fall back to the fresh direction
    return base if combo is None else combo


def direction_envelope(problem: Problem, x, p, t: float,
                       scalar_cfg: Optional[ScalarSolverConfig] = None) -> EnvelopeResult:
    """Value and argmin of w -> w^2/(2t) + f(x + w p) over w >= 0.

    The slope of that objective at w = 0 is p . s(x); when it is nonnegative
    the minimizer is w = 0 and the value is f(x). Otherwise the minimizer
    lies in [0, t |p . s(x)|] and is found by the configured scalar solver.
    The returned value never exceeds f(x). n_evals counts value-oracle calls.
    """
    if scalar_cfg is None:
        scalar_cfg = ScalarSolverConfig()
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    if abs(np.linalg.norm(p) - 1.0) > 1e-12:
        raise ValueError("direction must have unit norm")
    if not t > 0:
        raise ValueError("t must be positive")

    fx = value(problem, x)
    d0 = float(p @ subgradient(problem, x))
    n_evals = 1
    width = t * abs(d0)
    if d0 >= 0.0 or width <= 0.0:
        return EnvelopeResult(fx, 0.0, n_evals, True)

    method = scalar_cfg.method
    if method == "auto":
        method = "bisection" if problem.grad_available else "golden_section"

    if method == "bisection":
        def slope(w):
            return w / t + float(p @ subgradient(problem, x + w * p))

        res = bisection_root(slope, (0.0, width), scalar_cfg)
        w = res.w
        val = w * w / (2.0 * t) + value(problem, x + w * p)
        n_evals += res.n_evals + 1  # slope calls plus the final value call
        converged = res.converged
    else:
        def phi(w):
            return w * w / (2.0 * t) + value(problem, x + w * p)

        res = golden_section(phi, (0.0, width), scalar_cfg)
        w, val = res.w, res.value
        n_evals += res.n_evals
        converged = res.converged

    if not np.isfinite(val):
        raise FloatingPointError(
            f"objective returned a non-finite value inside the search bracket on {problem.label}"
        )
    if val > fx:
        # a coarse search can overshoot near w = 0; the exact minimum never
        # exceeds the w = 0 value, so fall back to the zero step
        w, val = 0.0, fx
    return EnvelopeResult(val, w, n_evals, converged)


def dppm_step(problem: Problem, x, p, cfg: SolverConfig) -> StepResult:
    """One directional proximal step from x along the unit direction p."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    env = direction_envelope(problem, x, p, cfg.t, cfg.scalar_cfg)
    nxt = x + env.w_star * p
    dot_next = float(p @ subgradient(problem, nxt))
    return StepResult(
        w_star=env.w_star,
        envelope_value=env.value,
        next=nxt,
        dir_dot_subgrad_next=dot_next,
        converged_flag=env.converged,
        n_evals=env.n_evals,
    )


def _config_snapshot(cfg: SolverConfig, solver_kind: str) -> dict:
    snap = asdict(cfg)
    snap["solver"] = solver_kind
    return snap


def _start_trace(problem: Problem, x0: np.ndarray, cfg: SolverConfig, solver_kind: str) -> Trace:
    record_dists = cfg.record_distances and problem.known_optimum is not None
    trace = Trace(
        problem_label=problem.label,
        solver_kind=solver_kind,
        xs=[x0.copy()],
        f_values=[value(problem, x0)],
        w_stars=[],
        directions=[],
        dir_dots_curr=[],
        dir_dots_next=[],
        step_norms=[],
        elapsed_ns=[0],
        termination="max_iters",
        config=_config_snapshot(cfg, solver_kind),
        dists=[float(np.linalg.norm(x0 - problem.known_optimum[0]))] if record_dists else None,
    )
    return trace


def _append_step(trace: Trace, problem: Problem, p: np.ndarray, step: StepResult,
                 t_start_ns: int, dot_base: Optional[np.ndarray] = None) -> None:
    # dot_base is the point the step was taken from; it differs from the last
    # recorded iterate only in the accelerated variant
    x_prev = trace.xs[-1]
    base = x_prev if dot_base is None else dot_base
    trace.w_stars.append(step.w_star)
    trace.directions.append(p.copy())
    trace.dir_dots_curr.append(float(p @ subgradient(problem, base)))
    trace.dir_dots_next.append(step.dir_dot_subgrad_next)
    trace.step_norms.append(float(np.linalg.norm(step.next - x_prev)))
    trace.xs.append(step.next)
    trace.f_values.append(value(problem, step.next))
    trace.elapsed_ns.append(time.perf_counter_ns() - t_start_ns)
    if trace.dists is not None:
        trace.dists.append(float(np.linalg.norm(step.next - problem.known_optimum[0])))


def run_dppm(problem: Problem, x0, cfg: SolverConfig) -> Trace:
    """Run the directional proximal point iteration from x0.

    Stops when |f(x_{k+1}) - f(x_k)| <= eps_stop, when the iteration cap is
    reached, or when the current point is critical (subgradient norm at or
    below the critical threshold).
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (problem.dimension,) or not np.all(np.isfinite(x0)):
        raise ValueError("x0 must be a finite point of the problem dimension")
    t_start = time.perf_counter_ns()
    trace = _start_trace(problem, x0, cfg, "dppm")
    x = x0
    prev_dir = None
    for k in range(cfg.max_iters):
        p = select_direction(cfg.strategy, problem, x, prev_dir, k=k)
        if p is None:
            trace.termination = "critical_point"
            break
        step = dppm_step(problem, x, p, cfg)
        _append_step(trace, problem, p, step, t_start)
        prev_dir = p
        x = step.next
        if abs(trace.f_values[-1] - trace.f_values[-2]) <= cfg.eps_stop:
            trace.termination = "eps_reached"
            break
    return trace


def run_accelerated_dppm(problem: Problem, x0, cfg: SolverConfig) -> Trace:
    """Accelerated variant: steps are taken at an extrapolated point.

    With theta_k = 2/(k+1), iteration k applies the directional step at the
    extrapolated point v_{k-1} to get u_k, then moves the extrapolation to
    v_k = (1 - 1/theta_k) v_{k-1} + (1/theta_k) u_k (so v_1 = u_1). The trace
    records the u sequence as its iterates and the extrapolated points in
    extras["v_iterates"]. The analysis behind the faster rate assumes a
    gradient; on nonsmooth problems the run proceeds but the trace metadata
    carries an "experimental" flag.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (problem.dimension,) or not np.all(np.isfinite(x0)):
        raise ValueError("x0 must be a finite point of the problem dimension")
    t_start = time.perf_counter_ns()
    trace = _start_trace(problem, x0, cfg, "dppm_accel")
    if not problem.grad_available:
        trace.metadata["experimental"] = (
            "accelerated variant on a nonsmooth objective; the rate analysis assumes a gradient"
        )
    state = AccelState(k=0, theta=1.0, x=x0.copy(), v=x0.copy())
    trace.extras["thetas"] = []
    trace.extras["v_iterates"] = [x0.copy()]
    prev_dir = None
    for k in range(1, cfg.max_iters + 1):
        state.k = k
        state.theta = 2.0 / (k + 1)
        p = select_direction(cfg.strategy, problem, state.v, prev_dir, k=k - 1)
        if p is None:
            trace.termination = "critical_point"
            break
        state.x = state.v.copy()
        step = dppm_step(problem, state.v, p, cfg)
        u = step.next
        state.v = state.x + (1.0 / state.theta) * (u - state.x)
        _append_step(trace, problem, p, step, t_start, dot_base=state.x)
        trace.extras["thetas"].append(state.theta)
        trace.extras["v_iterates"].append(state.v.copy())
        prev_dir = p
        if abs(trace.f_values[-1] - trace.f_values[-2]) <= cfg.eps_stop:
            trace.termination = "eps_reached"
            break
    return trace
