"""Compare the compiled and pure-numpy Monte Carlo kernels.

Usage: python benchmarks/bench_kernels.py [--repeat N] [--samples N]
"""

import argparse
import timeit

import numpy as np

from purity_vqa import _kernels_py
from purity_vqa.bpl import SpectrumPair, appendix_constants
from purity_vqa.kernels import compiled_backend


def workloads(samples: int, rng: np.random.Generator):
    k = appendix_constants(SpectrumPair.from_lambda1(0.75))
    sphere = np.ascontiguousarray(rng.uniform(-np.pi, np.pi, (samples, 19)))
    spectrum = np.full(20, 1 / 20)
    product = np.ascontiguousarray(rng.uniform(-np.pi, np.pi, (samples, 8)))
    corr = rng.uniform(-0.05, 0.05, samples)
    return {
        "sphere_grad R=20 k=4": lambda m: m.sphere_grad_batch(sphere, spectrum, 4, 0.005),
        "product_grad n=8": lambda m: m.product_grad_batch(product, k.a, k.b, k.c, 0.005, -1),
        "correlated_grad n=8": lambda m: m.correlated_grad_batch(corr, 8, k.a, k.b, k.c, 0.005),
    }


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--samples", type=int, default=2000)
    args = parser.parse_args()

    backends = {"python": _kernels_py}
    if compiled_backend is not None:
        backends["cython"] = compiled_backend
    else:
        print("compiled extension not built; timing the fallback only")

    print(f"{'kernel':<24}" + "".join(f"{name:>12}" for name in backends) + f"{'speedup':>10}")
    for label, fn in workloads(args.samples, np.random.default_rng(0)).items():
        times = {name: min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat)) for name, mod in backends.items()}
        row = f"{label:<24}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times.values())
        if "cython" in times:
            row += f"{times['python'] / times['cython']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
