"""Convex objective model, deterministic subgradient selection, and seeded
benchmark problem generators.

A Problem bundles a value oracle f and a subgradient oracle s(x) that returns
one fixed element of the subdifferential df(x). For objectives of the form

    f(x) = r(x) + sum_j w_j |x_j|

the oracle uses a minimum-norm selection at kink coordinates: where x_j is
(numerically) zero, the |.| term contributes the element of [-w_j, w_j] that
cancels as much of the smooth-part component as possible. Off the kinks the
subgradient is unique. This selection returns the zero vector at any point
where the zero vector is a valid subgradient, which makes critical points
detectable by the norm of the oracle output alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

# A coordinate within this distance of zero is treated as sitting on the kink
# of its |.| term.
KINK_TOL = 1e-12

# All randomness flows through a counter-based generator so that streams are
# reproducible across machines; the name is recorded in trace metadata.
GENERATOR_NAME = "philox4x64"


def make_rng(seed: int) -> np.random.Generator:
    """Seeded counter-based random generator used everywhere in the package."""
    return np.random.Generator(np.random.Philox(seed))


def sign_zero(z):
    """Elementwise sign with sign(0) = 0.

    The dead zone has width KINK_TOL so that points produced by a finite
    tolerance line search still count as sitting on a kink.
    """
    z = np.asarray(z, dtype=float)
    return np.where(np.abs(z) <= KINK_TOL, 0.0, np.sign(z))


def l1_composite_subgrad(x, rest_grad, weights):
    """Minimum-norm subgradient of r(x) + sum_j weights_j |x_j|.

    ``rest_grad`` is a (sub)gradient of r at x. Off-kink coordinates get the
    unique value rest_grad_j + weights_j * sign(x_j); kink coordinates get the
    point of [rest_grad_j - weights_j, rest_grad_j + weights_j] closest to 0.
    """
    x = np.asarray(x, dtype=float)
    r = np.asarray(rest_grad, dtype=float)
    w = np.asarray(weights, dtype=float)
    on = np.abs(x) > KINK_TOL
    return np.where(on, r + w * np.sign(x), r - np.clip(r, -w, w))


@dataclass(frozen=True)
class Problem:
    """Convex objective with deterministic oracles.

    Fields
    ------
    label: text identifier.
    dimension: number of variables.
    value_oracle: point -> scalar, convex.
    subgrad_oracle: point -> one deterministic element of the subdifferential.
    grad_available: True when f is differentiable everywhere (the subgradient
        oracle then returns the gradient).
    known_optimum: optional (x_star, f_star) pair.
    subgrad_bound: optional bound on subgradient norms over the region of
        interest; filled lazily from traces by diagnostics, never required.
    l1_weights / rest_subgrad: decomposition f = rest + sum w_j |x_j| when the
        objective has that shape (weights may be all zero for smooth f);
        used by the minimum-norm selection and by proximal inner solvers.
    value_batch: optional vectorized value oracle over rows of a matrix.
    data: generated arrays (design matrices, labels, ...) for inspection and
        determinism tests.

    Instances are immutable and safe to share across concurrent runs; oracles
    must be re-entrant.
    """

    label: str
    dimension: int
    value_oracle: Callable[[np.ndarray], float]
    subgrad_oracle: Callable[[np.ndarray], np.ndarray]
    grad_available: bool = False
    known_optimum: Optional[tuple] = None
    subgrad_bound: Optional[float] = None
    l1_weights: Optional[np.ndarray] = None
    rest_subgrad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    value_batch: Optional[Callable[[np.ndarray], np.ndarray]] = None
    data: Optional[dict] = None

    def value(self, x) -> float:
        return value(self, x)

    def subgrad(self, x) -> np.ndarray:
        return subgradient(self, x)


@dataclass(frozen=True)
class ProblemSpec:
    """Serializable recipe for a benchmark problem.

    kind is one of {matyas, abs21, compressed_sensing, logistic_l1}. The same
    (kind, seed) always reproduces bit-identical data. Defaults match the
    benchmark dimensions: a 10x50 sensing matrix with 5 nonzero ground-truth
    entries, and a 100-sample 10-dimensional logistic design with lam = 50.
    """

    kind: str
    seed: int = 0
    lam: float = 50.0
    m_rows: int = 10
    n_cols: int = 50
    sparsity: int = 5
    n_samples: int = 100
    x_dim: int = 10

    def __post_init__(self):
        if self.kind not in PROBLEM_KINDS:
            raise ValueError(
                f"unknown problem kind {self.kind!r}; expected one of {sorted(PROBLEM_KINDS)}"
            )
        if self.m_rows <= 0 or self.n_cols <= 0 or self.n_samples <= 0 or self.x_dim <= 0:
            raise ValueError("problem dimensions must be positive")
        if self.sparsity < 0 or self.sparsity > self.n_cols:
            raise ValueError("sparsity must lie in [0, n_cols]")
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")


def _check_point(problem: Problem, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.dimension,):
        raise ValueError(
            f"point has shape {x.shape}, expected ({problem.dimension},) for {problem.label}"
        )
    if not np.all(np.isfinite(x)):
        raise ValueError(f"non-finite point passed to {problem.label}")
    return x


def value(problem: Problem, x) -> float:
    """Evaluate the objective at x (validates shape and finiteness)."""
    return float(problem.value_oracle(_check_point(problem, x)))


def subgradient(problem: Problem, x) -> np.ndarray:
    """One deterministic element of the subdifferential at x.

    Same input, same output. See the module docstring for the selection rule
    at kinks of |.| terms.
    """
    return np.asarray(problem.subgrad_oracle(_check_point(problem, x)), dtype=float)


def sampled_subgradient(problem: Problem, x, radius: float, n_samples: int, seed: int) -> np.ndarray:
    """Average of subgradients at points sampled uniformly from a ball.

    Smooths the oracle near kinks. Sampling is deterministic in (seed,
    n_samples, radius).
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    x = _check_point(problem, x)
    rng = make_rng(seed)
    n = problem.dimension
    acc = np.zeros(n)
    for _ in range(n_samples):
        u = rng.normal(size=n)
        norm = np.linalg.norm(u)
        if norm <= 0.0:
            continue
        rho = radius * rng.uniform() ** (1.0 / n)
        acc += subgradient(problem, x + (rho / norm) * u)
    return acc / n_samples


# ---------------------------------------------------------------------------
# Benchmark problem builders
# ---------------------------------------------------------------------------


def build_matyas() -> Problem:
    """f(x, y) = 0.26 (x^2 + y^2) - 0.48 x y, smooth, minimized at the origin."""

    def val(p):
        return 0.26 * (p[0] * p[0] + p[1] * p[1]) - 0.48 * p[0] * p[1]

    def grad(p):
        return np.array([0.52 * p[0] - 0.48 * p[1], 0.52 * p[1] - 0.48 * p[0]])

    def val_batch(P):
        P = np.asarray(P, dtype=float)
        return 0.26 * (P[:, 0] ** 2 + P[:, 1] ** 2) - 0.48 * P[:, 0] * P[:, 1]

    zeros = np.zeros(2)
    return Problem(
        label="matyas",
        dimension=2,
        value_oracle=val,
        subgrad_oracle=grad,
        grad_available=True,
        known_optimum=(zeros, 0.0),
        l1_weights=np.zeros(2),
        rest_subgrad=grad,
        value_batch=val_batch,
    )


def build_weighted_abs(weights=(2.0, 1.0), label: Optional[str] = None) -> Problem:
    """f(x) = sum_j weights_j |x_j|, minimized at the origin.

    The default weights give the two-dimensional test objective 2|x| + |y|.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0 or np.any(w < 0):
        raise ValueError("weights must be a nonempty 1-D array of nonnegative values")
    n = w.size

    def val(p):
        return float(np.dot(w, np.abs(p)))

    def sub(p):
        return l1_composite_subgrad(p, np.zeros(n), w)

    def val_batch(P):
        return np.abs(np.asarray(P, dtype=float)) @ w

    return Problem(
        label=label or ("abs21" if tuple(w) == (2.0, 1.0) else f"weighted_abs{n}"),
        dimension=n,
        value_oracle=val,
        subgrad_oracle=sub,
        grad_available=False,
        known_optimum=(np.zeros(n), 0.0),
        l1_weights=w,
        rest_subgrad=lambda p: np.zeros(n),
        value_batch=val_batch,
    )


def build_compressed_sensing(seed: int = 0, m_rows: int = 10, n_cols: int = 50,
                             sparsity: int = 5) -> Problem:
    """f(x) = ||A x - b||_1 + 10 ||x||_1 on a seeded sensing instance.

    A has i.i.d. Gaussian entries with variance 1/n_cols; b = A x_sparse where
    x_sparse has ``sparsity`` nonzeros drawn uniformly from [-0.5, 0.5] at
    uniformly chosen positions.
    """
    rng = make_rng(seed)
    A = rng.normal(0.0, math.sqrt(1.0 / n_cols), (m_rows, n_cols))
    positions = rng.choice(n_cols, size=sparsity, replace=False)
    x_sparse = np.zeros(n_cols)
    x_sparse[positions] = rng.uniform(-0.5, 0.5, size=sparsity)
    b = A @ x_sparse
    lam = 10.0
    weights = np.full(n_cols, lam)

    def val(p):
        return float(np.abs(A @ p - b).sum() + lam * np.abs(p).sum())

    def rest(p):
        return A.T @ sign_zero(A @ p - b)

    def sub(p):
        return l1_composite_subgrad(p, rest(p), weights)

    def val_batch(P):
        P = np.asarray(P, dtype=float)
        R = P @ A.T - b
        return np.abs(R).sum(axis=1) + lam * np.abs(P).sum(axis=1)

    return Problem(
        label=f"compressed_sensing_seed{seed}",
        dimension=n_cols,
        value_oracle=val,
        subgrad_oracle=sub,
        grad_available=False,
        known_optimum=None,
        l1_weights=weights,
        rest_subgrad=rest,
        value_batch=val_batch,
        data={"A": A, "b": b, "x_sparse": x_sparse},
    )


def build_logistic_l1(seed: int = 0, lam: float = 50.0, n_samples: int = 100,
                      x_dim: int = 10) -> Problem:
    """Mean logistic loss plus lam ||w||_1 on a seeded random design.

    Features are uniform on [-5, 5]; labels are a fair coin mapped to {-1, +1}
    so the loss term exp(-(w'x) y) is informative for every sample.
    """
    rng = make_rng(seed)
    X = rng.uniform(-5.0, 5.0, (n_samples, x_dim))
    y = rng.integers(0, 2, size=n_samples) * 2 - 1
    weights = np.full(x_dim, float(lam))

    def margins(p):
        return (X @ p) * y

    def val(p):
        return float(np.logaddexp(0.0, -margins(p)).mean() + lam * np.abs(p).sum())

    def rest(p):
        m = margins(p)
        # sigma(-m) computed through logaddexp to stay finite for large |m|
        sig = np.exp(-np.logaddexp(0.0, m))
        return -(X.T @ (y * sig)) / n_samples

    def sub(p):
        return l1_composite_subgrad(p, rest(p), weights)

    def val_batch(P):
        P = np.asarray(P, dtype=float)
        M = (P @ X.T) * y
        return np.logaddexp(0.0, -M).mean(axis=1) + lam * np.abs(P).sum(axis=1)

    return Problem(
        label=f"logistic_l1_seed{seed}",
        dimension=x_dim,
        value_oracle=val,
        subgrad_oracle=sub,
        grad_available=False,
        known_optimum=None,
        l1_weights=weights,
        rest_subgrad=rest,
        value_batch=val_batch,
        data={"X": X, "y": y},
    )


def build_scalar_quadratic(curvature: float = 1.0, center: float = 0.0,
                           label: Optional[str] = None) -> Problem:
    """One-dimensional f(x) = curvature * (x - center)^2 / 2."""
    if curvature <= 0:
        raise ValueError("curvature must be positive")
    a, c = float(curvature), float(center)

    def val(p):
        d = p[0] - c
        return 0.5 * a * d * d

    def grad(p):
        return np.array([a * (p[0] - c)])

    def val_batch(P):
        d = np.asarray(P, dtype=float)[:, 0] - c
        return 0.5 * a * d * d

    return Problem(
        label=label or f"quadratic1d_a{a:g}_c{c:g}",
        dimension=1,
        value_oracle=val,
        subgrad_oracle=grad,
        grad_available=True,
        known_optimum=(np.array([c]), 0.0),
        l1_weights=np.zeros(1),
        rest_subgrad=grad,
        value_batch=val_batch,
    )


def build_random_pd_quadratic(dim: int, seed: int, eig_lo: float = 0.25,
                              eig_hi: float = 2.0) -> Problem:
    """f(x) = (x - c)' H (x - c) / 2 with H positive definite.

    H has a seeded random orthogonal eigenbasis and eigenvalues spread over
    [eig_lo, eig_hi]; the center c is drawn uniformly from [-2, 2]^dim.
    """
    if dim < 1:
        raise ValueError("dim must be at least 1")
    if not (0 < eig_lo <= eig_hi):
        raise ValueError("need 0 < eig_lo <= eig_hi")
    rng = make_rng(seed)
    Q, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    eigs = np.linspace(eig_lo, eig_hi, dim) if dim > 1 else np.array([eig_hi])
    H = Q @ np.diag(eigs) @ Q.T
    H = 0.5 * (H + H.T)
    c = rng.uniform(-2.0, 2.0, size=dim)

    def val(p):
        d = p - c
        return 0.5 * float(d @ H @ d)

    def grad(p):
        return H @ (p - c)

    def val_batch(P):
        D = np.asarray(P, dtype=float) - c
        return 0.5 * np.einsum("ij,jk,ik->i", D, H, D)

    return Problem(
        label=f"pd_quadratic_d{dim}_seed{seed}",
        dimension=dim,
        value_oracle=val,
        subgrad_oracle=grad,
        grad_available=True,
        known_optimum=(c, 0.0),
        l1_weights=np.zeros(dim),
        rest_subgrad=grad,
        value_batch=val_batch,
        data={"H": H, "center": c},
    )


PROBLEM_KINDS = {
    "matyas",
    "abs21",
    "compressed_sensing",
    "logistic_l1",
}


def build_problem(spec: ProblemSpec) -> Problem:
    """Construct the benchmark Problem described by a ProblemSpec."""
    if spec.kind == "matyas":
        return build_matyas()
    if spec.kind == "abs21":
        return build_weighted_abs()
    if spec.kind == "compressed_sensing":
        return build_compressed_sensing(
            seed=spec.seed, m_rows=spec.m_rows, n_cols=spec.n_cols, sparsity=spec.sparsity
        )
    if spec.kind == "logistic_l1":
        return build_logistic_l1(
            seed=spec.seed, lam=spec.lam, n_samples=spec.n_samples, x_dim=spec.x_dim
        )
    raise ValueError(f"unknown problem kind {spec.kind!r}")
