import os
import subprocess
import sys

import numpy as np
import pytest

from purity_vqa import _kernels_py, kernels
from purity_vqa.bpl import SpectrumPair, appendix_constants

compiled = kernels.compiled_backend
needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled extension not built")


def _inputs(seed=0):
    rng = np.random.default_rng(seed)
    thetas = np.ascontiguousarray(rng.uniform(-np.pi, np.pi, (200, 6)))
    spectrum = np.full(7, 1 / 7)
    k = appendix_constants(SpectrumPair.from_lambda1(0.75))
    return rng, thetas, spectrum, k


@needs_compiled
@pytest.mark.parametrize("k", [1, 4])
def test_sphere_parity(k):
    _, thetas, spectrum, _ = _inputs()
    assert np.allclose(compiled.sphere_cost_batch(thetas, spectrum, k), _kernels_py.sphere_cost_batch(thetas, spectrum, k), rtol=1e-12)
    assert np.allclose(
        compiled.sphere_grad_batch(thetas, spectrum, k, 0.005),
        _kernels_py.sphere_grad_batch(thetas, spectrum, k, 0.005),
        rtol=1e-9,
        atol=1e-13,
    )


@needs_compiled
@pytest.mark.parametrize("n", [1, 3, 8])
def test_correlated_parity(n):
    rng, _, _, k = _inputs(n)
    t = rng.uniform(-0.05, 0.05, 500)
    assert np.allclose(
        compiled.correlated_grad_batch(t, n, k.a, k.b, k.c, 0.005),
        _kernels_py.correlated_grad_batch(t, n, k.a, k.b, k.c, 0.005),
        rtol=1e-9,
        atol=1e-15,
    )


@needs_compiled
@pytest.mark.parametrize("component", [-1, 0, 3])
def test_product_parity(component):
    _, thetas, _, k = _inputs(5)
    assert np.allclose(
        compiled.product_grad_batch(thetas, k.a, k.b, k.c, 0.005, component),
        _kernels_py.product_grad_batch(thetas, k.a, k.b, k.c, 0.005, component),
        rtol=1e-9,
        atol=1e-15,
    )


def test_sphere_cost_matches_generic():
    from purity_vqa.ansatz import sphere_weights
    from purity_vqa.cost import CostSpec, global_cost
    from purity_vqa.state import DensityMatrix

    _, thetas, spectrum, _ = _inputs(7)
    rho = DensityMatrix(np.diag(spectrum))
    batch = kernels.sphere_cost_batch(thetas[:20], spectrum, 2)
    for t, v in zip(thetas[:20], batch):
        eta = DensityMatrix(np.diag(sphere_weights(t)))
        assert v == pytest.approx(global_cost(rho, eta, CostSpec(k=2)).value, rel=1e-10)


def test_pure_override_selects_fallback():
    env = dict(os.environ, PURITY_VQA_PURE="1")
    out = subprocess.run(
        [sys.executable, "-c", "import purity_vqa; print(purity_vqa.BACKEND)"], env=env, capture_output=True, text=True, check=True
    )
    assert out.stdout.strip() == "python"


@needs_compiled
def test_default_prefers_compiled():
    assert kernels.BACKEND == "cython"
