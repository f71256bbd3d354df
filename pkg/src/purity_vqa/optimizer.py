"""Finite-difference gradient descent over ansatz parameters."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import AllProbesFailed, PurityVQAError

CostFn = Callable[[np.ndarray], float]

# probe failures that mark an infeasible point rather than a bug
_PROBE_ERRORS = (PurityVQAError, ArithmeticError)

_MAX_HALVINGS = 30


@dataclass(frozen=True)
class OptimizerConfig:
    fd_step: float = 0.005
    learning_rate: float = 0.05
    max_iters: int = 5000
    grad_tol: float = 1e-5
    cost_tol: float = 1e-8  # relative change in cost
    seed: int = 0

    def __post_init__(self):
        if not self.fd_step > 0:
            raise ValueError("fd_step must be positive")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass
class OptimizationTrace:
    thetas: list[np.ndarray]
    costs: list[float]
    converged: bool
    stop_reason: str
    clamped: bool = True
    meta: dict = field(default_factory=dict)

    @property
    def best_index(self) -> int:
        return int(np.argmin(self.costs))

    @property
    def theta_star(self) -> np.ndarray:
        return self.thetas[self.best_index]

    @property
    def cost_star(self) -> float:
        return float(self.costs[self.best_index])

    @property
    def iterations(self) -> int:
        return len(self.costs) - 1

    def to_dict(self) -> dict:
        return {
            "iterates": [
                {"theta": [float(x) for x in t], "cost": float(c)} for t, c in zip(self.thetas, self.costs)
            ],
            "converged": self.converged,
            "stop_reason": self.stop_reason,
            "theta_star": [float(x) for x in self.theta_star],
            "cost_star": self.cost_star,
            "domain_handling": "clamp" if self.clamped else "none",
            "meta": self.meta,
        }


def fd_gradient(cost: CostFn, theta, fd_step: float, *, flag_errors: bool = False) -> np.ndarray:
    """Central-difference gradient.

    With ``flag_errors`` a component whose probe raises an infeasibility
    error is returned as NaN instead of propagating the exception.
    """
    theta = np.asarray(theta, dtype=float)
    grad = np.empty(theta.size)
    for j in range(theta.size):
        e = np.zeros(theta.size)
        e[j] = fd_step
        try:
            grad[j] = (cost(theta + e) - cost(theta - e)) / (2.0 * fd_step)
        except _PROBE_ERRORS:
            if not flag_errors:
                raise
            grad[j] = np.nan
    return grad


def _clamp(theta, domain):
    if domain is None:
        return theta
    lo, hi = domain
    return np.clip(theta, lo, hi)


def _domain_arrays(domain):
    if domain is None:
        return None
    domain = list(domain)
    return np.array([d[0] for d in domain], dtype=float), np.array([d[1] for d in domain], dtype=float)


def descend(
    cost: CostFn,
    theta0,
    config: OptimizerConfig | None = None,
    domain: Sequence[tuple[float, float]] | None = None,
) -> OptimizationTrace:
    """Gradient descent theta <- theta - r * grad, clamped to ``domain``.

    A step that raises the cost by more than ``10 * cost_tol`` (relative) is
    halved until accepted, so finite-difference noise cannot drive the
    iterates uphill. Stops on a small gradient norm, a small relative cost
    change, or ``max_iters``.
    """
    cfg = config or OptimizerConfig()
    box = _domain_arrays(domain)
    theta = _clamp(np.atleast_1d(np.asarray(theta0, dtype=float)).copy(), box)
    c = float(cost(theta))
    thetas, costs = [theta], [c]
    reason, converged = "max_iters", False
    for _ in range(cfg.max_iters):
        g = fd_gradient(cost, theta, cfg.fd_step, flag_errors=True)
        bad = np.isnan(g)
        if bad.all():
            raise AllProbesFailed(f"every gradient probe failed at theta={theta.tolist()}")
        g[bad] = 0.0
        if np.linalg.norm(g) < cfg.grad_tol:
            reason, converged = "grad_tol", True
            break
        step = cfg.learning_rate
        allowed = c + 10.0 * cfg.cost_tol * abs(c)
        for _ in range(_MAX_HALVINGS):
            cand = _clamp(theta - step * g, box)
            try:
                cc = float(cost(cand))
            except _PROBE_ERRORS:
                cc = np.inf
            if cc <= allowed:
                break
            step *= 0.5
        else:
            reason, converged = "stalled", True
            break
        if np.array_equal(cand, theta):
            reason, converged = "boundary", True
            break
        change = c - cc
        theta, c = cand, cc
        thetas.append(theta)
        costs.append(c)
        if abs(change) <= cfg.cost_tol * abs(c):
            reason, converged = "cost_tol", True
            break
    return OptimizationTrace(thetas, costs, converged, reason, clamped=box is not None)


def multi_start(
    cost: CostFn,
    family,
    starts: int,
    config: OptimizerConfig | None = None,
    *,
    workers: int | None = None,
) -> OptimizationTrace:
    """Best of ``starts`` descents from seeded uniform draws over the domain."""
    if starts < 1:
        raise ValueError("starts must be >= 1")
    cfg = config or OptimizerConfig()
    rng = np.random.default_rng(cfg.seed)
    inits = [family.sample(rng) for _ in range(starts)]

    def run(theta0):
        try:
            return descend(cost, theta0, cfg, family.domain)
        except _PROBE_ERRORS as exc:
            return exc

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, inits))
    else:
        results = [run(t) for t in inits]
    traces = [(i, r) for i, r in enumerate(results) if isinstance(r, OptimizationTrace)]
    if not traces:
        raise AllProbesFailed("all starts failed: " + "; ".join(str(r) for r in results))
    best_i, best = min(traces, key=lambda item: (item[1].cost_star, item[0]))
    best.meta.update(start_index=best_i, starts=starts, failed_starts=starts - len(traces))
    return best
