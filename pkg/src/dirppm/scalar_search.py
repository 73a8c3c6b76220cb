"""One-dimensional solvers for the directional prox subproblem.

The directional step solves

    minimize over w >= 0:   w^2 / (2 t) + f(x + w p)

whose objective is strictly convex in w. Two solvers are provided: golden
section search (derivative free, used for nonsmooth f) and bisection on the
stationarity equation w/t + p . grad f(x + w p) = 0 (used when the gradient
exists). ``make_bracket`` builds the interval [0, t |p . s(x)|] which always
contains the minimizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Problem, subgradient

# Golden-ratio bracket reduction factor, (sqrt(5) - 1) / 2.
INVPHI = (math.sqrt(5.0) - 1.0) / 2.0

SCALAR_METHODS = ("auto", "golden_section", "bisection")


@dataclass(frozen=True)
class ScalarSolverConfig:
    """Settings for the scalar subproblem solver.

    method "auto" picks bisection when the problem exposes a gradient and
    golden section otherwise; tol is the bracket-width (or root) tolerance;
    max_evals caps objective evaluations.
    """

    method: str = "auto"
    tol: float = 1e-10
    max_evals: int = 200

    def __post_init__(self):
        if self.method not in SCALAR_METHODS:
            raise ValueError(f"unknown scalar method {self.method!r}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_evals < 3:
            raise ValueError("max_evals must be at least 3")


@dataclass(frozen=True)
class ScalarResult:
    """Outcome of a scalar solve.

    ``converged`` False means the evaluation budget ran out before the bracket
    reached tol; the best point seen is still returned and is safe to use.
    """

    w: float
    value: float
    n_evals: int
    converged: bool


def golden_section(phi, bracket, cfg: ScalarSolverConfig) -> ScalarResult:
    """Minimize a unimodal function over [a, c] by golden-section search.

    Interior points split the bracket at the golden ratio; each iteration
    keeps the sub-bracket that contains the smaller interior value (ties keep
    the left one, for determinism). Returns the best point among all
    evaluations, which lies within the final bracket.
    """
    a, c = (float(bracket[0]), float(bracket[1]))
    if a > c:
        raise ValueError(f"invalid bracket [{a}, {c}]")

    best_w = a
    best_val = math.inf
    n_evals = 0

    def ev(w):
        nonlocal n_evals, best_w, best_val
        v = float(phi(w))
        n_evals += 1
        if v < best_val:
            best_val, best_w = v, w
        return v

    if c - a <= cfg.tol:
        ev(0.5 * (a + c))
        return ScalarResult(best_w, best_val, n_evals, True)

    x1 = c - INVPHI * (c - a)
    x2 = a + INVPHI * (c - a)
    f1 = ev(x1)
    f2 = ev(x2)
    while (c - a) > cfg.tol and n_evals < cfg.max_evals:
        if f1 <= f2:
            c, x2, f2 = x2, x1, f1
            x1 = c - INVPHI * (c - a)
            f1 = ev(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + INVPHI * (c - a)
            f2 = ev(x2)
    return ScalarResult(best_w, best_val, n_evals, (c - a) <= cfg.tol)


def bisection_root(g, bracket, cfg: ScalarSolverConfig) -> ScalarResult:
    """Root of a monotone non-decreasing function over [a, c].

    Returns a when g(a) > 0 (the zero-step branch of the directional prox) and
    c when g(c) <= 0 (minimizer at the bracket edge). Otherwise halves the
    interval until its width is at most tol, returning early on an exact zero.
    The result's ``value`` field holds g at the returned point.
    """
    a, c = (float(bracket[0]), float(bracket[1]))
    if a > c:
        raise ValueError(f"invalid bracket [{a}, {c}]")

    ga = float(g(a))
    n_evals = 1
    if ga >= 0.0 or a == c:
        return ScalarResult(a, ga, n_evals, True)
    gc = float(g(c))
    n_evals += 1
    if gc <= 0.0:
        return ScalarResult(c, gc, n_evals, True)

    gm = ga
    while (c - a) > cfg.tol and n_evals < cfg.max_evals:
        m = 0.5 * (a + c)
        gm = float(g(m))
        n_evals += 1
        if gm == 0.0:
            return ScalarResult(m, 0.0, n_evals, True)
        if gm < 0.0:
            a, ga = m, gm
        else:
            c, gc = m, gm
    w = 0.5 * (a + c)
    return ScalarResult(w, gm, n_evals, (c - a) <= cfg.tol)


def make_bracket(problem: Problem, x, p, t: float):
    """Interval [0, W] guaranteed to contain the optimal directional step.

    W = t |p . s(x)|: the optimal step never exceeds t times the directional
    slope at the base point. Requires a unit direction and t > 0.
    """
    p = np.asarray(p, dtype=float)
    if abs(np.linalg.norm(p) - 1.0) > 1e-12:
        raise ValueError("direction must have unit norm")
    if not t > 0:
        raise ValueError("t must be positive")
    d = float(p @ subgradient(problem, x))
    return (0.0, t * abs(d))


def golden_eval_bound(width: float, tol: float) -> int:
    """Worst-case golden-section evaluation count for a bracket of given width."""
    if width <= tol:
        return 1
    return math.ceil(math.log(width / tol) / math.log(1.0 / INVPHI)) + 3
