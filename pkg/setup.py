import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("PURITY_VQA_PURE", "") not in ("1", "true", "yes"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [Extension("purity_vqa._kernels", ["src/purity_vqa/_kernels.pyx"])],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
