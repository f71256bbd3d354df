"""Purity cost functions.

The global cost is the purity of the normalized state
sigma = eta^k rho eta^k / tr(rho eta^2k). It is bounded below by
1/rank(rho), attained at eta proportional to rho^(-1/2k).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DegenerateDenominator, NotNormalized, RankDeficient
from .state import DensityMatrix, _same_dim, partial_trace, rank
from .swap_test import SwapTestPlan, sample_swap_test

DENOMINATOR_FLOOR = 1e-12


@dataclass(frozen=True)
class CostSpec:
    """Cost settings: power ``k``, estimator mode and blend weight.

    ``shots=None`` selects exact evaluation; otherwise both SWAP tests use
    ``shots`` samples seeded from ``seed``.
    """

    k: int = 1
    shots: int | None = None
    seed: int = 0
    blend_epsilon: float = 0.0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0.0 <= self.blend_epsilon <= 1.0:
            raise ValueError("blend_epsilon must lie in [0, 1]")
        if self.shots is not None and self.shots < 1:
            raise ValueError("shots must be positive")

    @property
    def mode(self) -> str:
        return "exact" if self.shots is None else "shots"


@dataclass(frozen=True)
class CostEvaluation:
    value: float
    numerator: float
    denominator: float
    std_error: float = 0.0
    shots: int | None = None
    meta: dict = field(default_factory=dict)


def _eta_power_parts(eta: DensityMatrix, k: int):
    """Return eta^k as a 1-D diagonal or a dense matrix."""
    if eta.is_diagonal:
        return np.clip(eta.diagonal, 0.0, None) ** k
    spec = eta.spectrum()
    v = spec.eigenvectors
    return (v * np.clip(spec.eigenvalues, 0.0, None) ** k) @ v.conj().T


def _exact_traces(rho: DensityMatrix, eta: DensityMatrix, k: int) -> tuple[float, float]:
    """(tr[(eta^k rho eta^k)^2], tr(rho eta^2k))."""
    ek = _eta_power_parts(eta, k)
    if ek.ndim == 1 and rho.is_diagonal:
        m = ek * ek * rho.diagonal
        return float(np.dot(m, m)), float(np.sum(m))
    if ek.ndim == 1:
        m = (ek[:, None] * rho.matrix) * ek[None, :]
    else:
        m = ek @ rho.matrix @ ek
    return float(np.sum(np.abs(m) ** 2)), float(np.real(np.trace(m)))


def _check_floor(rho: DensityMatrix, eta: DensityMatrix, k: int, denominator: float, subsystem=None):
    if rho.is_diagonal and eta.is_diagonal:
        # a sum of nonnegative products carries only relative rounding error,
        # so the value is trustworthy down to underflow
        floor = np.finfo(float).tiny
    else:
        lam_max = float(np.max(eta.diagonal)) if eta.is_diagonal else float(eta.eigenvalues[0])
        floor = DENOMINATOR_FLOOR * rho.trace * lam_max ** (2 * k)
    if not denominator > floor:
        where = "" if subsystem is None else f" on subsystem {subsystem}"
        raise DegenerateDenominator(
            f"tr(rho eta^{2 * k}) = {denominator:.3e} below floor{where}", subsystem=subsystem
        )


def global_cost(
    rho: DensityMatrix,
    eta: DensityMatrix,
    spec: CostSpec | None = None,
    *,
    check_rank: bool = True,
) -> CostEvaluation:
    spec = spec or CostSpec()
    k = spec.k
    _same_dim([rho, eta])
    if abs(eta.trace - 1.0) > 1e-8:
        raise NotNormalized("ansatz state eta must be normalized")
    if check_rank and rank(rho) < 2:
        raise RankDeficient("purity cost needs rank(rho) >= 2")
    if spec.shots is None:
        num, den = _exact_traces(rho, eta, k)
        _check_floor(rho, eta, k, den)
        return CostEvaluation(num / den**2, num, den)

    # SWAP tests act on states, so rho is normalized first; the cost is
    # invariant under rescaling rho.
    rho_n = rho.normalize()
    num_seed, den_seed = np.random.SeedSequence(spec.seed).generate_state(2)
    num_regs = [eta] * k + [rho_n] + [eta] * (2 * k) + [rho_n] + [eta] * k
    den_regs = [rho_n] + [eta] * (2 * k)
    n_qubits = max(1, math.ceil(math.log2(rho.dim)))
    num_res = sample_swap_test(SwapTestPlan(len(num_regs), n_qubits, spec.shots, int(num_seed)), num_regs)
    den_res = sample_swap_test(SwapTestPlan(len(den_regs), n_qubits, spec.shots, int(den_seed)), den_regs)
    num, den = num_res.expectation, den_res.expectation
    if not abs(den) > 0.0:
        raise DegenerateDenominator("estimated denominator is zero")
    value = num / den**2
    # delta method on N / D^2
    s_num, s_den = num_res.expectation_std_error, den_res.expectation_std_error
    se = math.sqrt((s_num / den**2) ** 2 + (2.0 * num * s_den / den**3) ** 2)
    return CostEvaluation(value, num, den, se, spec.shots)


def normalization_factor(rho: DensityMatrix, eta_star: DensityMatrix, cost_at_star: float, k: int) -> float:
    """Estimate tr(rho^(-1/2k)) from the optimum of the k-cost.

    Exact when ``eta_star`` is the true minimizer; elsewhere an approximation
    whose quality tracks the gap between ``cost_at_star`` and 1/rank.
    """
    if not cost_at_star > 0:
        raise DegenerateDenominator("cost must be positive")
    _, den = _exact_traces(rho, eta_star, k)
    _check_floor(rho, eta_star, k, den)
    return (den * cost_at_star) ** (-1.0 / (2 * k))


def _qubit_dims(dim: int) -> list[int]:
    n = int(round(math.log2(dim)))
    if 2**n != dim:
        raise ValueError(f"dimension {dim} is not a power of two; pass subsystem_dims")
    return [2] * n


def local_cost(
    rho: DensityMatrix,
    eta: DensityMatrix,
    k: int = 1,
    subsystem_dims: Sequence[int] | None = None,
) -> float:
    """Average of the single-subsystem purity costs over all subsystems."""
    _same_dim([rho, eta])
    dims = list(subsystem_dims) if subsystem_dims is not None else _qubit_dims(rho.dim)
    spec = CostSpec(k=k)
    total = 0.0
    for i in range(len(dims)):
        rho_i = partial_trace(rho, dims, i)
        eta_i = partial_trace(eta, dims, i)
        num, den = _exact_traces(rho_i, eta_i, spec.k)
        _check_floor(rho_i, eta_i, spec.k, den, subsystem=i)
        total += num / den**2
    return total / len(dims)


class BlendedCost(NamedTuple):
    value: float
    global_value: float
    local_value: float
    epsilon: float
    large_epsilon: bool  # the blend is meant for epsilon << 1


def blended_cost(
    rho: DensityMatrix,
    eta: DensityMatrix,
    spec: CostSpec,
    subsystem_dims: Sequence[int] | None = None,
) -> BlendedCost:
    eps = spec.blend_epsilon
    g = global_cost(rho, eta, CostSpec(k=spec.k)).value
    loc = local_cost(rho, eta, spec.k, subsystem_dims)
    value = g if eps == 0 else (1.0 - eps) * g + eps * loc
    return BlendedCost(value, g, loc, eps, eps >= 0.5)
