"""Select the compiled kernel backend when available.

Set ``PURITY_VQA_PURE=1`` to force the numpy fallback.
"""

import os

from . import _kernels_py as python_backend

compiled_backend = None
if os.environ.get("PURITY_VQA_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as compiled_backend  # type: ignore[no-redef]
    except ImportError:
        compiled_backend = None

backend = compiled_backend or python_backend
BACKEND = backend.BACKEND

sphere_cost_batch = backend.sphere_cost_batch
sphere_grad_batch = backend.sphere_grad_batch
correlated_grad_batch = backend.correlated_grad_batch
product_grad_batch = backend.product_grad_batch
