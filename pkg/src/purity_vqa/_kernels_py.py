"""Pure-numpy implementations of the gradient-scan kernels.

Used when the compiled extension is unavailable or disabled with
``PURITY_VQA_PURE=1``. Results agree with the Cython kernels to rounding.
"""

import numpy as np

BACKEND = "python"


def _sphere_cost(thetas, spectrum, k):
    c = np.cos(0.5 * thetas) ** 2
    s = np.sin(0.5 * thetas) ** 2
    ones = np.ones(thetas.shape[:-1] + (1,))
    w = np.concatenate([ones, np.cumprod(s, axis=-1)], axis=-1)
    w[..., :-1] *= c
    x = w ** (2 * k) * spectrum
    return np.sum(x * x, axis=-1) / np.sum(x, axis=-1) ** 2


def sphere_cost_batch(thetas, spectrum, k):
    thetas = np.ascontiguousarray(thetas, dtype=float)
    spectrum = np.asarray(spectrum, dtype=float)
    if spectrum.shape[0] != thetas.shape[1] + 1:
        raise ValueError("spectrum length must be one more than the angle count")
    return _sphere_cost(thetas, spectrum, k)


def sphere_grad_batch(thetas, spectrum, k, h):
    thetas = np.ascontiguousarray(thetas, dtype=float)
    spectrum = np.asarray(spectrum, dtype=float)
    m = thetas.shape[1]
    if spectrum.shape[0] != m + 1:
        raise ValueError("spectrum length must be one more than the angle count")
    acc = np.zeros(thetas.shape[0])
    for j in range(m):
        plus = thetas.copy()
        plus[:, j] += h
        minus = thetas.copy()
        minus[:, j] -= h
        acc += np.abs(_sphere_cost(plus, spectrum, k) - _sphere_cost(minus, spectrum, k)) / (2.0 * h)
    return acc / m


def _nd_ratio(theta, a, b, c):
    C = np.cos(0.5 * theta) ** 2
    S = np.sin(0.5 * theta) ** 2
    return (C * C + b * C * S + a * S * S) / (C + c * S) ** 2


def correlated_grad_batch(thetas, n, a, b, c, h):
    thetas = np.asarray(thetas, dtype=float)
    scale = 0.5**n
    return np.abs(scale * (_nd_ratio(thetas + h, a, b, c) ** n - _nd_ratio(thetas - h, a, b, c) ** n)) / (2.0 * h)


def product_grad_batch(thetas, a, b, c, h, component=-1):
    thetas = np.ascontiguousarray(thetas, dtype=float)
    n = thetas.shape[1]
    r = _nd_ratio(thetas, a, b, c)
    comps = range(n) if component < 0 else [component]
    if component >= n:
        raise ValueError("component out of range")
    acc = np.zeros(thetas.shape[0])
    for j in comps:
        rest = 0.5**n * np.prod(np.delete(r, j, axis=1), axis=1)
        acc += np.abs(rest * (_nd_ratio(thetas[:, j] + h, a, b, c) - _nd_ratio(thetas[:, j] - h, a, b, c))) / (2.0 * h)
    return acc / len(comps)
