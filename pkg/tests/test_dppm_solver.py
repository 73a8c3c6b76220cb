"""Closed-form anchors and properties for the directional solver.

For f(x) = x^2/2 from x along p = -1 the directional prox step has the closed
form w* = t x / (1 + t) with envelope value x^2 / (2 (1 + t)); these anchors
were computed by hand and frozen before implementation.
"""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dirppm.core import (
    build_matyas,
    build_random_pd_quadratic,
    build_scalar_quadratic,
    build_weighted_abs,
    make_rng,
    subgradient,
    value,
)
from dirppm.scalar_search import ScalarSolverConfig
from dirppm.dppm_solver import (
    CRITICAL_NORM,
    DirectionStrategy,
    SolverConfig,
    StepResult,
    Trace,
    dppm_step,
    direction_envelope,
    run_accelerated_dppm,
    run_dppm,
    select_direction,
)

QUAD = build_scalar_quadratic(1.0, 0.0)
NEG_DIR = np.array([-1.0])


def bisect_cfg(t=1.0, tol=1e-10):
    return SolverConfig(t=t, scalar_cfg=ScalarSolverConfig(method="bisection", tol=tol),
                        strategy=DirectionStrategy(kind="neg_gradient"))


# ---------------------------------------------------------------------------
# Envelope
# ---------------------------------------------------------------------------


def test_envelope_scalar_quadratic_t1():
    res = direction_envelope(QUAD, np.array([1.0]), NEG_DIR, t=1.0,
                             scalar_cfg=ScalarSolverConfig(method="bisection"))
    assert res.w_star == pytest.approx(0.5, abs=1e-9)
    assert res.value == pytest.approx(0.25, abs=1e-9)


def test_envelope_scalar_quadratic_t3():
    res = direction_envelope(QUAD, np.array([1.0]), NEG_DIR, t=3.0,
                             scalar_cfg=ScalarSolverConfig(method="bisection"))
    assert res.w_star == pytest.approx(0.75, abs=1e-9)
    assert res.value == pytest.approx(0.125, abs=1e-9)


def test_envelope_golden_matches_bisection():
    a = direction_envelope(QUAD, np.array([1.0]), NEG_DIR, t=1.0,
                           scalar_cfg=ScalarSolverConfig(method="golden_section", tol=1e-10))
    assert a.w_star == pytest.approx(0.5, abs=1e-6)
    assert a.value == pytest.approx(0.25, abs=1e-12)


def test_envelope_ascent_direction_returns_zero_step():
    res = direction_envelope(QUAD, np.array([1.0]), np.array([1.0]), t=1.0)
    assert res.w_star == 0.0
    assert res.value == value(QUAD, [1.0])
    assert res.converged


def test_envelope_never_exceeds_value_at_base():
    p = build_weighted_abs()
    rng = make_rng(17)
    for _ in range(25):
        x = rng.uniform(-5, 5, 2)
        d = rng.normal(size=2)
        d /= np.linalg.norm(d)
        t = 10.0 ** rng.uniform(-1, 3)
        res = direction_envelope(p, x, d, t)
        assert res.value <= value(p, x)
        assert res.w_star >= 0.0


def test_envelope_argument_errors():
    with pytest.raises(ValueError):
        direction_envelope(QUAD, np.array([1.0]), np.array([0.7]), t=1.0)
    with pytest.raises(ValueError):
        direction_envelope(QUAD, np.array([1.0]), NEG_DIR, t=0.0)


# ---------------------------------------------------------------------------
# Step
# ---------------------------------------------------------------------------


def test_step_scalar_quadratic_closed_form():
    step = dppm_step(QUAD, np.array([1.0]), NEG_DIR, bisect_cfg(t=1.0))
    assert step.w_star == pytest.approx(0.5, abs=1e-9)
    assert step.next[0] == pytest.approx(0.5, abs=1e-9)
    assert step.dir_dot_subgrad_next == pytest.approx(-0.5, abs=1e-9)
    # consistency: w* = -t * (p . grad at the next point)
    assert step.w_star == pytest.approx(-1.0 * step.dir_dot_subgrad_next, abs=1e-8)


def test_step_at_minimizer_is_fixed_point():
    rng = make_rng(5)
    for _ in range(10):
        d = rng.normal(size=1)
        d /= np.linalg.norm(d)
        step = dppm_step(QUAD, np.array([0.0]), d, bisect_cfg(t=7.3))
        assert step.w_star == 0.0
        assert step.next == pytest.approx([0.0])


def test_step_ascent_branch():
    step = dppm_step(QUAD, np.array([1.0]), np.array([1.0]), bisect_cfg(t=1.0))
    assert step.w_star == 0.0
    assert np.array_equal(step.next, np.array([1.0]))


def test_step_next_is_exact_expression():
    p = build_weighted_abs()
    x = np.array([3.0, -4.0])
    d = -subgradient(p, x)
    d /= np.linalg.norm(d)
    cfg = SolverConfig(t=2.0)
    step = dppm_step(p, x, d, cfg)
    assert np.array_equal(step.next, x + step.w_star * d)
    assert step.envelope_value <= value(p, x)


# ---------------------------------------------------------------------------
# Direction selection
# ---------------------------------------------------------------------------


def test_neg_gradient_direction_matyas():
    p = build_matyas()
    d = select_direction(DirectionStrategy(kind="neg_gradient"), p, np.array([1.0, 1.0]))
    assert d == pytest.approx([-1 / math.sqrt(2), -1 / math.sqrt(2)], abs=1e-12)


def test_neg_subgradient_direction_weighted_abs():
    p = build_weighted_abs()
    d = select_direction(DirectionStrategy(kind="neg_subgradient"), p, np.array([1.0, -2.0]))
    assert d == pytest.approx([-2 / math.sqrt(5), 1 / math.sqrt(5)], abs=1e-12)


def test_momentum_beta_zero_collapses_to_inner():
    p = build_weighted_abs()
    x = np.array([1.0, -2.0])
    d0 = select_direction(DirectionStrategy(kind="neg_subgradient"), p, x)
    d1 = select_direction(DirectionStrategy(kind="momentum", beta=0.0), p, x,
                          prev_dir=np.array([1.0, 0.0]))
    assert d1 == pytest.approx(d0, abs=0)


def test_momentum_combination_frozen():
    p = build_weighted_abs()
    x = np.array([1.0, -2.0])
    prev = np.array([1.0, 0.0])
    d = select_direction(DirectionStrategy(kind="momentum", beta=0.5), p, x, prev_dir=prev)
    base = np.array([-2.0, 1.0]) / math.sqrt(5.0)
    expect = 0.5 * prev + 0.5 * base
    expect /= np.linalg.norm(expect)
    assert d == pytest.approx(expect, abs=1e-12)
    assert np.linalg.norm(d) == pytest.approx(1.0, abs=1e-12)


def test_momentum_first_iteration_uses_inner():
    p = build_weighted_abs()
    x = np.array([1.0, -2.0])
    d = select_direction(DirectionStrategy(kind="momentum", beta=0.9), p, x, prev_dir=None)
    assert d == pytest.approx(np.array([-2.0, 1.0]) / math.sqrt(5.0), abs=1e-12)


def test_direction_none_at_critical_point():
    p = build_weighted_abs()
    assert select_direction(DirectionStrategy(kind="neg_subgradient"), p, np.zeros(2)) is None
    assert select_direction(DirectionStrategy(kind="momentum"), p, np.zeros(2),
                            prev_dir=np.array([1.0, 0.0])) is None


def test_sampled_direction_unit_norm_and_deterministic():
    p = build_matyas()
    strat = DirectionStrategy(kind="sampled_subgradient", radius=1e-3, n_samples=10, seed=2)
    d1 = select_direction(strat, p, np.array([1.0, 1.0]), k=4)
    d2 = select_direction(strat, p, np.array([1.0, 1.0]), k=4)
    assert np.array_equal(d1, d2)
    assert np.linalg.norm(d1) == pytest.approx(1.0, abs=1e-12)
    d3 = select_direction(strat, p, np.array([1.0, 1.0]), k=5)
    assert not np.array_equal(d1, d3)


def test_strategy_validation():
    with pytest.raises(ValueError):
        DirectionStrategy(kind="steepest")
    with pytest.raises(ValueError):
        DirectionStrategy(kind="momentum", beta=1.0)
    with pytest.raises(ValueError):
        DirectionStrategy(kind="sampled_subgradient", radius=0.0)
    with pytest.raises(ValueError):
        DirectionStrategy(kind="momentum", inner=DirectionStrategy(kind="momentum"))


# ---------------------------------------------------------------------------
# Run loop
# ---------------------------------------------------------------------------


def test_run_scalar_quadratic_halving_is_exact():
    # with t = 1 each step is x -> x/2; bisection hits the midpoints exactly
    trace = run_dppm(QUAD, np.array([1.0]), bisect_cfg(t=1.0)._replace_max(40)
                     if hasattr(bisect_cfg(), "_replace_max") else
                     SolverConfig(t=1.0, strategy=DirectionStrategy(kind="neg_gradient"),
                                  scalar_cfg=ScalarSolverConfig(method="bisection"),
                                  max_iters=40, eps_stop=0.0))
    xs = [x[0] for x in trace.xs]
    for k in range(min(10, len(xs))):
        assert xs[k] == 0.5 ** k


def test_run_trace_monotone_and_terminates():
    trace = run_dppm(QUAD, np.array([1.0]),
                     SolverConfig(t=1.0, strategy=DirectionStrategy(kind="neg_gradient"),
                                  scalar_cfg=ScalarSolverConfig(method="bisection"),
                                  max_iters=2000, eps_stop=0.0))
    f = trace.f_values
    assert all(f[i + 1] <= f[i] for i in range(len(f) - 1))
    assert trace.termination == "critical_point"
    assert np.linalg.norm(subgradient(QUAD, trace.final_x)) <= CRITICAL_NORM
    assert all(b >= a for a, b in zip(trace.elapsed_ns, trace.elapsed_ns[1:]))


def test_run_zero_iterations():
    trace = run_dppm(QUAD, np.array([1.0]), SolverConfig(t=1.0, max_iters=0))
    assert len(trace.xs) == 1
    assert trace.f_values == [0.5]
    assert trace.termination == "max_iters"


def test_run_from_minimizer_terminates_immediately():
    trace = run_dppm(QUAD, np.array([0.0]), SolverConfig(t=1.0, max_iters=100))
    assert len(trace.xs) == 1
    assert trace.termination == "critical_point"


def test_run_eps_stop():
    trace = run_dppm(QUAD, np.array([1.0]),
                     SolverConfig(t=1.0, strategy=DirectionStrategy(kind="neg_gradient"),
                                  scalar_cfg=ScalarSolverConfig(method="bisection"),
                                  max_iters=10000, eps_stop=1e-6))
    assert trace.termination == "eps_reached"
    assert abs(trace.f_values[-1] - trace.f_values[-2]) <= 1e-6


def test_run_max_iters_reason():
    trace = run_dppm(QUAD, np.array([1.0]),
                     SolverConfig(t=1.0, strategy=DirectionStrategy(kind="neg_gradient"),
                                  scalar_cfg=ScalarSolverConfig(method="bisection"),
                                  max_iters=3, eps_stop=0.0))
    assert trace.termination == "max_iters"
    assert trace.n_steps == 3


def test_run_records_distances_and_config():
    trace = run_dppm(QUAD, np.array([1.0]),
                     SolverConfig(t=1.0, strategy=DirectionStrategy(kind="neg_gradient"),
                                  scalar_cfg=ScalarSolverConfig(method="bisection"),
                                  max_iters=5, eps_stop=0.0))
    assert trace.dists is not None
    assert trace.dists[0] == 1.0
    assert all(b <= a + 1e-12 for a, b in zip(trace.dists, trace.dists[1:]))
    # config snapshot must be JSON-serializable
    json.dumps(trace.config)
    assert trace.config["t"] == 1.0
    assert trace.config["solver"] == "dppm"
    assert trace.rng_name == "philox4x64"


def test_run_validates_x0():
    with pytest.raises(ValueError):
        run_dppm(QUAD, np.array([np.nan]), SolverConfig())
    with pytest.raises(ValueError):
        run_dppm(QUAD, np.array([1.0, 2.0]), SolverConfig())


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(t=0.0)
    with pytest.raises(ValueError):
        SolverConfig(eps_stop=-1.0)
    with pytest.raises(ValueError):
        SolverConfig(max_iters=-1)


# ---------------------------------------------------------------------------
# Accelerated variant
# ---------------------------------------------------------------------------


def accel_cfg(max_iters=200):
    return SolverConfig(t=1.0, strategy=DirectionStrategy(kind="neg_gradient"),
                        scalar_cfg=ScalarSolverConfig(method="bisection"),
                        max_iters=max_iters, eps_stop=0.0, accelerated=True)


def test_accel_theta_schedule():
    trace = run_accelerated_dppm(QUAD, np.array([1.0]), accel_cfg(4))
    assert trace.extras["thetas"] == pytest.approx([1.0, 2.0 / 3.0, 0.5, 0.4])


def test_accel_first_extrapolation_equals_first_step():
    trace = run_accelerated_dppm(QUAD, np.array([1.0]), accel_cfg(1))
    assert np.array_equal(trace.extras["v_iterates"][1], trace.xs[1])


def test_accel_bound_and_exact_landing():
    trace = run_accelerated_dppm(QUAD, np.array([1.0]), accel_cfg(50))
    d0_sq = 1.0
    for k in range(1, len(trace.f_values)):
        theta = 2.0 / (k + 1)
        assert trace.f_values[k] <= theta * theta * d0_sq / 1.0 + 1e-12
    # the quadratic run collapses to the exact minimizer within a few steps
    assert trace.f_values[min(6, len(trace.f_values) - 1)] == 0.0


def test_accel_beats_plain_at_fixed_iteration():
    plain = run_dppm(QUAD, np.array([1.0]),
                     SolverConfig(t=1.0, strategy=DirectionStrategy(kind="neg_gradient"),
                                  scalar_cfg=ScalarSolverConfig(method="bisection"),
                                  max_iters=8, eps_stop=0.0))
    accel = run_accelerated_dppm(QUAD, np.array([1.0]), accel_cfg(8))
    assert accel.f_values[-1] <= plain.f_values[-1]


def test_accel_nonsmooth_flagged_experimental():
    p = build_weighted_abs()
    cfg = SolverConfig(t=1.0, strategy=DirectionStrategy(kind="neg_subgradient"),
                       max_iters=5, eps_stop=0.0, accelerated=True)
    trace = run_accelerated_dppm(p, np.array([3.0, 2.0]), cfg)
    assert "experimental" in trace.metadata
    smooth = run_accelerated_dppm(QUAD, np.array([1.0]), accel_cfg(3))
    assert "experimental" not in smooth.metadata


def test_accel_solver_kind_marker():
    trace = run_accelerated_dppm(QUAD, np.array([1.0]), accel_cfg(3))
    assert trace.solver_kind == "dppm_accel"
    assert trace.config["solver"] == "dppm_accel"


# ---------------------------------------------------------------------------
# Properties on random quadratics
# ---------------------------------------------------------------------------


@given(
    seed=st.integers(0, 10_000),
    dim=st.integers(1, 5),
    t=st.floats(0.1, 100.0, allow_nan=False),
)
@settings(max_examples=60, deadline=None)
def test_descent_and_step_bound_property(seed, dim, t):
    problem = build_random_pd_quadratic(dim, seed=seed, eig_lo=0.2, eig_hi=1.0)
    rng = make_rng(seed + 1)
    x0 = rng.uniform(-5, 5, dim)
    cfg = SolverConfig(t=t, strategy=DirectionStrategy(kind="neg_gradient"),
                       scalar_cfg=ScalarSolverConfig(method="bisection", tol=1e-10),
                       max_iters=25, eps_stop=0.0)
    trace = run_dppm(problem, x0, cfg)
    for k in range(trace.n_steps):
        # descent with the certified directional slope w*/t
        drop = trace.w_stars[k] ** 2 / t
        assert trace.f_values[k + 1] <= trace.f_values[k] - drop + 1e-8 * (1 + abs(trace.f_values[k]))
        # step never exceeds t times the slope at the base point
        assert 0.0 <= trace.w_stars[k] <= t * abs(trace.dir_dots_curr[k]) + 1e-8 * (
            1 + t * abs(trace.dir_dots_curr[k]))


@given(
    seed=st.integers(0, 10_000),
    t=st.floats(0.1, 100.0, allow_nan=False),
)
@settings(max_examples=40, deadline=None)
def test_stationarity_residual_property_smooth(seed, t):
    # eigenvalues at most 1 keep the residual bound tol * (1 + 1/t) valid
    problem = build_random_pd_quadratic(3, seed=seed, eig_lo=0.2, eig_hi=1.0)
    rng = make_rng(seed + 2)
    x0 = rng.uniform(-5, 5, 3)
    tol = 1e-10
    cfg = SolverConfig(t=t, strategy=DirectionStrategy(kind="neg_gradient"),
                       scalar_cfg=ScalarSolverConfig(method="bisection", tol=tol),
                       max_iters=10, eps_stop=0.0)
    trace = run_dppm(problem, x0, cfg)
    for k in range(trace.n_steps):
        w = trace.w_stars[k]
        if w > 0.0:
            residual = abs(w / t + trace.dir_dots_next[k])
            assert residual <= tol * (1.0 + 1.0 / t)


def test_fixed_point_property_many_directions():
    # at a critical point every direction yields a zero step
    problem = build_random_pd_quadratic(4, seed=77)
    x_star = problem.known_optimum[0]
    rng = make_rng(9)
    for _ in range(20):
        d = rng.normal(size=4)
        d /= np.linalg.norm(d)
        step = dppm_step(problem, x_star, d, SolverConfig(t=rng.uniform(0.1, 50)))
        assert step.w_star == 0.0
