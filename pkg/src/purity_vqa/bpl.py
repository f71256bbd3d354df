"""Closed-form cost landscapes and expected-gradient analysis.

Two solvable settings:

* product input diag(l1, l2)^{(x)n} with ansatz R(theta) rho^(-1/2k) R^dagger
  (R a product of Y rotations). The cost factorizes as
  2^-n prod_j N(theta_j)/D(theta_j) and does not depend on k.
* the rank-2 input l|0..0><0..0| + (1-l)|1..1><1..1| with ansatz
  R(theta) sigma R^dagger, sigma = (1-mu)|0..0><0..0| + mu|1..1><1..1|.

Rational functions of tan(theta/2) are evaluated in the homogeneous form in
cos^2(theta/2), sin^2(theta/2), which is finite at theta = +-pi.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize

from . import kernels
from .errors import DeltaTooLarge, FitDiverged, NeighborhoodTooLarge, ParamOutOfRange
from .optimizer import fd_gradient

DEFAULT_SAMPLES = 2000
CHUNK = 1000


@dataclass(frozen=True)
class SpectrumPair:
    lambda1: float
    lambda2: float

    def __post_init__(self):
        if not (self.lambda1 >= self.lambda2 > 0):
            raise ParamOutOfRange("need lambda1 >= lambda2 > 0")
        if abs(self.lambda1 + self.lambda2 - 1.0) > 1e-12:
            raise ParamOutOfRange("lambda1 + lambda2 must equal 1")

    @classmethod
    def from_lambda1(cls, lambda1: float) -> "SpectrumPair":
        return cls(lambda1, 1.0 - lambda1)

    @property
    def ratio(self) -> float:
        return self.lambda1 / self.lambda2


@dataclass(frozen=True)
class AppendixConstants:
    a: float
    b: float
    c: float


def appendix_constants(spec: SpectrumPair) -> AppendixConstants:
    r = spec.ratio
    return AppendixConstants(0.5 * (r * r + 1.0 / (r * r)), 2.0 * (r + 1.0 / r - 1.0), 0.5 * (r + 1.0 / r))


def nd_ratio(theta, consts: AppendixConstants):
    """N/D = (1 + b t^2 + a t^4) / (1 + c t^2)^2 with t = tan(theta/2)."""
    C = np.cos(0.5 * np.asarray(theta, dtype=float)) ** 2
    S = 1.0 - C
    return (C * C + consts.b * C * S + consts.a * S * S) / (C + consts.c * S) ** 2


def nd_ratio_derivative(theta, consts: AppendixConstants):
    """d(N/D)/dtheta, analytic."""
    theta = np.asarray(theta, dtype=float)
    co, si = np.cos(0.5 * theta), np.sin(0.5 * theta)
    C, S = co * co, si * si
    a, b, c = consts.a, consts.b, consts.c
    return si * co * ((b - 2 * c) * C + (2 * a - b * c) * S) / (C + c * S) ** 3


def product_cost_closed_form(spec: SpectrumPair, k: int, theta: Sequence[float]) -> float:
    """Factorized cost 2^-n prod_j N(theta_j)/D(theta_j).

    ``k`` is accepted for symmetry with the generic cost; the landscape is
    independent of it because eta^k only sees rho^(-1/2).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    return float(np.prod(nd_ratio(theta, appendix_constants(spec))) / 2.0 ** len(theta))


def correlated_cost_closed_form(spec: SpectrumPair, n: int, theta: float) -> float:
    return float(nd_ratio(theta, appendix_constants(spec)) ** n / 2.0**n)


def _check_delta(delta: float, limit: float, strict: bool, what: str) -> None:
    if not delta > 0:
        raise ValueError("delta must be positive")
    if delta >= limit:
        msg = f"delta={delta} is not small against {what}={limit:.4g}"
        if strict:
            raise DeltaTooLarge(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=3)


def correlated_expected_grad(spec: SpectrumPair, n: int, delta: float, *, strict: bool = True) -> float:
    """Leading-order E|dC/dtheta| for the correlated ansatz, theta ~ U[-delta, delta].

    |b - 2c| n / (c (n+1) 2^n delta) * (1 - (1 + c delta^2/4)^-(n+1)),
    accurate up to a relative O(n c delta^2) correction.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    _check_delta(delta, math.sqrt(spec.lambda2 / spec.lambda1), strict, "sqrt(lambda2/lambda1)")
    k = appendix_constants(spec)
    bracket = 1.0 - (1.0 + k.c * delta * delta / 4.0) ** (-(n + 1))
    return abs(k.b - 2 * k.c) * n / (k.c * (n + 1) * 2.0**n * delta) * bracket


@dataclass(frozen=True)
class LocalBound:
    value: float
    base: float
    first_factor: float


def uncorrelated_local_bound(spec: SpectrumPair, n: int, delta: float, *, strict: bool = True) -> LocalBound:
    """base^n times E|d(N/D)/dtheta| over U[-delta, delta].

    ``base`` is the leading-order per-qubit contraction
    1/2 - delta^2 (l2/l1 + l1/l2) / 48; the first factor is integrated
    numerically and does not depend on n.
    """
    _check_delta(delta, spec.lambda2 / spec.lambda1, strict, "lambda2/lambda1")
    consts = appendix_constants(spec)
    r = spec.ratio
    base = 0.5 - delta * delta * (r + 1.0 / r) / 48.0
    integral, _ = integrate.quad(lambda x: abs(float(nd_ratio_derivative(x, consts))), 0.0, delta)
    first = integral / delta  # symmetric integrand
    return LocalBound(first * base**n, base, first)


def fully_expressive_mu(lam: float, k: int) -> float:
    x, y = lam ** (1.0 / (2 * k)), (1.0 - lam) ** (1.0 / (2 * k))
    return x / (x + y)


def low_rank_landscape(lam: float, mu: float, k: int, theta: Sequence[float]) -> float:
    """Cost of the rotated rank-2 ansatz against the rank-2 GHZ-diagonal input."""
    if not (0.0 < lam < 1.0 and 0.0 < mu < 1.0):
        raise ParamOutOfRange("lambda and mu must lie in (0, 1)")
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    n = len(theta)
    a = float(np.prod(np.cos(0.5 * theta) ** 2))
    b = float(np.prod(np.sin(0.5 * theta) ** 2))
    p, q = (1.0 - mu) ** (2 * k), mu ** (2 * k)
    x00 = p * a + q * b  # <0..0| eta^2k |0..0>
    x11 = p * b + q * a
    x01_sq = a * b * (p + (-1) ** n * q) ** 2
    num = lam**2 * x00**2 + 2.0 * lam * (1.0 - lam) * x01_sq + (1.0 - lam) ** 2 * x11**2
    den = (lam * x00 + (1.0 - lam) * x11) ** 2
    return num / den


def landscape_grid(lam: float = 0.5, k: int = 1, points: int = 101, mu: float | None = None):
    """Cost over a regular grid on [-pi, pi]^2 for n = 2.

    Returns (theta1 grid, theta2 grid, cost matrix indexed [i1, i2]).
    """
    mu = fully_expressive_mu(lam, k) if mu is None else mu
    g = np.linspace(-math.pi, math.pi, points)
    g = 0.5 * (g - g[::-1])  # exactly antisymmetric, so an odd grid contains 0.0
    vals = np.array([[low_rank_landscape(lam, mu, k, (t1, t2)) for t2 in g] for t1 in g])
    return g, g, vals


# -- Monte Carlo scans --------------------------------------------------------


@dataclass(frozen=True)
class GradientScan:
    n_or_R: int
    samples: int
    mean_abs_grad: float
    std_error: float
    seed: int
    backend: str = ""


def _chunked(samples: int, seed: int):
    """Fixed-size chunks with spawned seeds, independent of worker count."""
    n_chunks = max(1, math.ceil(samples / CHUNK))
    seqs = np.random.SeedSequence(seed).spawn(n_chunks)
    sizes = [CHUNK] * (n_chunks - 1) + [samples - CHUNK * (n_chunks - 1)]
    return list(zip(sizes, seqs))


def _reduce(values: list[np.ndarray]) -> tuple[float, float, int]:
    allv = np.concatenate(values)
    n = allv.size
    mean = math.fsum(allv) / n
    var = math.fsum((allv - mean) ** 2) / (n - 1) if n > 1 else 0.0
    return mean, math.sqrt(var / n), n


def _run_chunks(fn, samples: int, seed: int, workers: int | None):
    chunks = _chunked(samples, seed)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda c: fn(*c), chunks))
    return [fn(*c) for c in chunks]


def mc_gradient_scan(
    landscape: Callable[[np.ndarray], float],
    dim: int,
    samples: int = DEFAULT_SAMPLES,
    measure: tuple[float, float] = (-math.pi, math.pi),
    seed: int = 0,
    fd_step: float = 0.005,
    workers: int | None = None,
) -> GradientScan:
    """Mean over uniform draws of (1/dim) sum_j |dC/dtheta_j|, generic callable."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    lo, hi = measure

    def chunk(size, seq):
        rng = np.random.default_rng(seq)
        thetas = rng.uniform(lo, hi, size=(size, dim))
        return np.array([np.mean(np.abs(fd_gradient(landscape, t, fd_step))) for t in thetas])

    mean, se, n = _reduce(_run_chunks(chunk, samples, seed, workers))
    return GradientScan(dim, n, mean, se, seed, "generic")


def sphere_gradient_scan(
    R: int,
    k: int = 4,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    spectrum: Sequence[float] | None = None,
    fd_step: float = 0.005,
    workers: int | None = None,
    backend=None,
) -> GradientScan:
    """Gradient scan of the sphere ansatz against a rank-R input.

    The input defaults to the completely mixed state of rank R. In its
    eigenbasis both rho and eta are diagonal, so the cost only depends on
    the sphere weights.
    """
    if R < 2:
        raise ValueError("R must be >= 2")
    kern = backend or kernels
    spec = np.full(R, 1.0 / R) if spectrum is None else np.asarray(spectrum, dtype=float)

    def chunk(size, seq):
        rng = np.random.default_rng(seq)
        thetas = rng.uniform(-math.pi, math.pi, size=(size, R - 1))
        return kern.sphere_grad_batch(np.ascontiguousarray(thetas), spec, k, fd_step)

    mean, se, n = _reduce(_run_chunks(chunk, samples, seed, workers))
    return GradientScan(R, n, mean, se, seed, kern.BACKEND)


def correlated_gradient_mc(
    spec: SpectrumPair,
    n: int,
    delta: float,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    fd_step: float = 0.005,
    workers: int | None = None,
    backend=None,
) -> GradientScan:
    """Monte Carlo E|dC/dtheta| of the correlated closed form over U[-delta, delta]."""
    kern = backend or kernels
    k = appendix_constants(spec)

    def chunk(size, seq):
        rng = np.random.default_rng(seq)
        thetas = rng.uniform(-delta, delta, size=size)
        return kern.correlated_grad_batch(thetas, n, k.a, k.b, k.c, fd_step)

    mean, se, m = _reduce(_run_chunks(chunk, samples, seed, workers))
    return GradientScan(n, m, mean, se, seed, kern.BACKEND)


def product_gradient_mc(
    spec: SpectrumPair,
    n: int,
    delta: float = math.pi,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    component: int = 0,
    fd_step: float = 0.005,
    workers: int | None = None,
    backend=None,
) -> GradientScan:
    """Monte Carlo E|dC/dtheta_component| of the factorized closed form.

    ``component=-1`` averages |dC/dtheta_j| over all components.
    """
    kern = backend or kernels
    k = appendix_constants(spec)

    def chunk(size, seq):
        rng = np.random.default_rng(seq)
        thetas = rng.uniform(-delta, delta, size=(size, n))
        return kern.product_grad_batch(np.ascontiguousarray(thetas), k.a, k.b, k.c, fd_step, component)

    mean, se, m = _reduce(_run_chunks(chunk, samples, seed, workers))
    return GradientScan(n, m, mean, se, seed, kern.BACKEND)


def product_gradient_samples(spec: SpectrumPair, n: int, delta: float, samples: int, seed: int = 0, fd_step=0.005):
    """Per-draw |dC/dtheta_1| values (for tail-probability checks)."""
    k = appendix_constants(spec)
    rng = np.random.default_rng(seed)
    thetas = rng.uniform(-delta, delta, size=(samples, n))
    return kernels.product_grad_batch(np.ascontiguousarray(thetas), k.a, k.b, k.c, fd_step, 0)


def markov_tail(values, eps: float) -> tuple[float, float]:
    """(empirical P(|X| > eps), mean|X| / eps)."""
    v = np.abs(np.asarray(values, dtype=float))
    return float(np.mean(v > eps)), float(np.mean(v) / eps)


# -- near-optimum asymptotics -------------------------------------------------


@dataclass(frozen=True)
class AsymptoticFit:
    F: float
    relative_residual: float
    points: int


def near_optimum_gradient_asymptotic(
    lam: float, mu: float, k: int, n: int, thetas, fd_step: float = 0.005
) -> AsymptoticFit:
    """Fit |dC/dtheta_1| = F |theta_1| prod_{j>1} theta_j^2 / 4^(n-1) near 0.

    ``thetas`` is an (m, n) array of points in a small neighbourhood of the
    optimum. Raises NeighborhoodTooLarge when the leading-order model leaves
    more than 10% of the signal unexplained.
    """
    pts = np.atleast_2d(np.asarray(thetas, dtype=float))
    if pts.shape[1] != n:
        raise ValueError(f"points must have {n} coordinates")
    if np.max(np.abs(pts)) >= 1.0:
        raise NeighborhoodTooLarge("points must lie in (-1, 1)^n")

    def cost(t):
        return low_rank_landscape(lam, mu, k, t)

    y = np.array([abs(fd_gradient(cost, t, fd_step)[0]) for t in pts])
    x = np.abs(pts[:, 0]) * np.prod(pts[:, 1:] ** 2, axis=1) / 4.0 ** (n - 1)
    denom = float(np.dot(x, x))
    if denom == 0.0:
        return AsymptoticFit(0.0, 0.0, len(pts))
    F = float(np.dot(x, y) / denom)
    scale = float(np.linalg.norm(y))
    resid = float(np.linalg.norm(y - F * x) / scale) if scale > 0 else 0.0
    if resid > 0.1:
        raise NeighborhoodTooLarge(f"leading-order model misses {resid:.1%} of the signal")
    return AsymptoticFit(F, resid, len(pts))


# -- power-law fit ------------------------------------------------------------


@dataclass(frozen=True)
class PowerLawFit:
    a: float
    b: float
    c: float
    residual_norm: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.a * x**self.c + self.b * x ** (self.c - 1.0)


def power_law_fit(points, x0=(1.0, 0.0, -1.0), max_nfev: int = 10000) -> PowerLawFit:
    """Least-squares fit of f(x) = a x^c + b x^(c-1)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 4 or pts.shape[1] != 2:
        raise ValueError("need at least four (x, y) points")
    x, y = pts[:, 0], pts[:, 1]
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("x and y must be positive")

    def resid(p):
        a, b, c = p
        return a * x**c + b * x ** (c - 1.0) - y

    sol = optimize.least_squares(resid, np.asarray(x0, dtype=float), method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_nfev)
    if sol.status <= 0 or not np.all(np.isfinite(sol.x)):
        raise FitDiverged(f"power-law fit failed: {sol.message}")
    a, b, c = (float(v) for v in sol.x)
    return PowerLawFit(a, b, c, float(np.linalg.norm(sol.fun)))
