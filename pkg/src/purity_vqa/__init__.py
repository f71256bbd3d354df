"""Purity-minimization variational algorithms on a density-matrix simulator.

The package estimates rank, Renyi/Tsallis entropies, Bures fidelity and
quantum Fisher information of mixed states by minimizing the purity of
``eta^k rho eta^k`` over an ansatz ``eta``, and ships closed-form and Monte
Carlo tooling for diagnosing barren-plateau landscapes of that cost.
"""

__version__ = "0.1.0"

from .ansatz import AnsatzFamily, eigenbasis_sphere, family_by_name
from .applications import (
    FractionSpec,
    PipelineReport,
    estimate_entropy,
    estimate_fidelity,
    estimate_qfi,
    estimate_rank,
    fractional_power_state,
    learn_state,
    minimize_purity,
)
from .cost import CostSpec, blended_cost, global_cost, local_cost, normalization_factor
from .errors import PurityVQAError
from .kernels import BACKEND
from .optimizer import OptimizationTrace, OptimizerConfig, descend, multi_start
from .state import DensityMatrix, exact_oracles
from .swap_test import SwapTestPlan, circuit_size, sample_swap_test

__all__ = [
    "AnsatzFamily",
    "BACKEND",
    "CostSpec",
    "DensityMatrix",
    "FractionSpec",
    "OptimizationTrace",
    "OptimizerConfig",
    "PipelineReport",
    "PurityVQAError",
    "SwapTestPlan",
    "blended_cost",
    "circuit_size",
    "descend",
    "eigenbasis_sphere",
    "estimate_entropy",
    "estimate_fidelity",
    "estimate_qfi",
    "estimate_rank",
    "exact_oracles",
    "family_by_name",
    "fractional_power_state",
    "global_cost",
    "learn_state",
    "local_cost",
    "minimize_purity",
    "multi_start",
    "normalization_factor",
    "sample_swap_test",
    "__version__",
]
