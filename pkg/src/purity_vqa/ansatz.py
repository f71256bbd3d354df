"""Parameterized ansatz families eta(theta).

Each family maps a real parameter vector to a normalized DensityMatrix and
carries its parameter domain (angles live in [-pi, pi]) and a default
starting point for descent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Callable, Sequence

import numpy as np

from .errors import MuOutOfRange, NonOrthonormalBasis
from .state import DensityMatrix, matrix_power, rank

ANGLE_DOMAIN = (-math.pi, math.pi)


@dataclass(frozen=True)
class AnsatzFamily:
    """A named map theta -> DensityMatrix with a box domain.

    This is also the extension point for user-defined families: any
    callable returning a normalized DensityMatrix can be wrapped.
    """

    name: str
    param_count: int
    evaluate: Callable[[np.ndarray], DensityMatrix] = field(repr=False)
    domain: tuple[tuple[float, float], ...] = ()
    default_start: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.domain:
            object.__setattr__(self, "domain", (ANGLE_DOMAIN,) * self.param_count)
        if len(self.domain) != self.param_count:
            raise ValueError("domain length must equal param_count")
        if not self.default_start:
            object.__setattr__(self, "default_start", (0.0,) * self.param_count)

    def __call__(self, theta) -> DensityMatrix:
        return self.evaluate(np.atleast_1d(np.asarray(theta, dtype=float)))

    @property
    def lower(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.domain])

    @property
    def upper(self) -> np.ndarray:
        return np.array([hi for _, hi in self.domain])

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lower, self.upper)


# -- single-qubit building blocks -------------------------------------------


def _half_angle_weights(theta: float) -> np.ndarray:
    return np.array([math.cos(theta / 2) ** 2, math.sin(theta / 2) ** 2])


def y_rotation(theta: float) -> np.ndarray:
    """exp(-i theta sigma_y / 2), which is real."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]])


def rotation_product(theta: Sequence[float]) -> np.ndarray:
    return reduce(np.kron, [y_rotation(t) for t in theta])


# -- families ----------------------------------------------------------------


def diagonal_qubit(theta: float) -> DensityMatrix:
    """cos^2(theta/2)|0><0| + sin^2(theta/2)|1><1|."""
    return DensityMatrix(_half_angle_weights(float(theta)), check=False)


def product_diagonal(theta: float, n: int) -> DensityMatrix:
    """n-fold tensor power of ``diagonal_qubit(theta)``, one shared angle."""
    w = _half_angle_weights(float(theta))
    return DensityMatrix(reduce(np.kron, [w] * n), check=False)


def _optimum_state(rho: DensityMatrix, k: int) -> np.ndarray:
    opt = matrix_power(rho, -1.0 / (2 * k))
    return opt.matrix / opt.trace


def _rotate(state: np.ndarray, theta: Sequence[float]) -> DensityMatrix:
    r = rotation_product(theta)
    out = r @ state @ r.T
    return DensityMatrix(0.5 * (out + out.conj().T), check=False)


def rotated_spectrum(rho: DensityMatrix, k: int, theta: Sequence[float]) -> DensityMatrix:
    """R(theta) rho^(-1/2k) R(theta)^dagger / tr(rho^(-1/2k)), R a product of Y rotations."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if 2 ** len(theta) != rho.dim:
        raise ValueError(f"need {int(math.log2(rho.dim))} angles for dim {rho.dim}")
    return _rotate(_optimum_state(rho, k), theta)


def correlated_rotated_spectrum(rho: DensityMatrix, k: int, theta: float, n: int) -> DensityMatrix:
    return rotated_spectrum(rho, k, [float(theta)] * n)


def sphere_weights(theta: Sequence[float]) -> np.ndarray:
    """Squared hyperspherical coordinates of the angle vector.

    w_1 = c_1, w_j = s_1 ... s_{j-1} c_j, w_R = s_1 ... s_{R-1} with
    c = cos^2(theta/2), s = sin^2(theta/2). The weights sum to one.
    """
    theta = np.asarray(theta, dtype=float)
    c = np.cos(theta / 2) ** 2
    s = np.sin(theta / 2) ** 2
    tail = np.concatenate(([1.0], np.cumprod(s)))
    w = tail.copy()
    w[:-1] *= c
    return w


def sphere_low_rank(eigvecs, theta: Sequence[float]) -> DensityMatrix:
    """Diagonal state in the basis ``eigvecs`` (columns) with sphere weights."""
    v = np.asarray(eigvecs, dtype=complex)
    if v.ndim != 2 or v.shape[1] < 2:
        raise ValueError("need at least two basis vectors as columns")
    gram = v.conj().T @ v
    if np.max(np.abs(gram - np.eye(v.shape[1]))) > 1e-8:
        raise NonOrthonormalBasis("basis vectors are not orthonormal")
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if len(theta) != v.shape[1] - 1:
        raise ValueError(f"need {v.shape[1] - 1} angles for {v.shape[1]} vectors")
    w = sphere_weights(theta)
    idx = np.argmax(np.abs(v), axis=0)
    if np.array_equal(v, np.eye(v.shape[0])[:, idx]):
        # basis is a subset of computational basis vectors: stay diagonal
        diag = np.zeros(v.shape[0])
        diag[idx] = w
        return DensityMatrix(diag, check=False)
    out = (v * w) @ v.conj().T
    return DensityMatrix(0.5 * (out + out.conj().T), check=False)


def rotated_fixed_spectrum(mu: float, n: int, theta: Sequence[float]) -> DensityMatrix:
    """R(theta) [(1-mu)|0..0><0..0| + mu|1..1><1..1|] R(theta)^dagger."""
    if not 0.0 < mu < 1.0:
        raise MuOutOfRange(f"mu must lie in (0, 1), got {mu}")
    d = 2**n
    sigma = np.zeros((d, d))
    sigma[0, 0] = 1.0 - mu
    sigma[-1, -1] = mu
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if len(theta) != n:
        raise ValueError(f"need {n} angles")
    return _rotate(sigma, theta)


# -- family constructors -------------------------------------------------------


def diagonal_qubit_family() -> AnsatzFamily:
    return AnsatzFamily("diagonal_qubit", 1, lambda t: diagonal_qubit(t[0]), default_start=(math.pi / 2,))


def product_diagonal_family(n: int) -> AnsatzFamily:
    return AnsatzFamily(
        f"product_diagonal[{n}]", 1, lambda t: product_diagonal(t[0], n), default_start=(math.pi / 2,)
    )


def rotated_spectrum_family(rho: DensityMatrix, k: int) -> AnsatzFamily:
    n = int(round(math.log2(rho.dim)))
    base = _optimum_state(rho, k)
    return AnsatzFamily(f"rotated_spectrum[{n}]", n, lambda t: _rotate(base, t))


def correlated_rotated_spectrum_family(rho: DensityMatrix, k: int) -> AnsatzFamily:
    n = int(round(math.log2(rho.dim)))
    base = _optimum_state(rho, k)
    return AnsatzFamily(f"correlated_rotated_spectrum[{n}]", 1, lambda t: _rotate(base, [t[0]] * n))


def rotated_fixed_spectrum_family(mu: float, n: int) -> AnsatzFamily:
    return AnsatzFamily(f"rotated_fixed_spectrum[{n}]", n, lambda t: rotated_fixed_spectrum(mu, n, t))


def uniform_sphere_start(R: int) -> tuple[float, ...]:
    """Angles whose sphere weights are all 1/R."""
    return tuple(2.0 * math.acos(math.sqrt(1.0 / (R - j))) for j in range(R - 1))


def sphere_family(eigvecs) -> AnsatzFamily:
    v = np.asarray(eigvecs, dtype=complex)
    R = v.shape[1]
    return AnsatzFamily(
        f"sphere[{R}]", R - 1, lambda t: sphere_low_rank(v, t), default_start=uniform_sphere_start(R)
    )


def eigenbasis_sphere(m: DensityMatrix) -> AnsatzFamily:
    """Sphere family over the eigenvectors spanning the support of ``m``.

    Used as the default family for pipeline stages: every stage optimum is
    diagonal in the eigenbasis of that stage's input.
    """
    spec = m.spectrum()
    r = max(2, rank(m))
    return sphere_family(spec.eigenvectors[:, :r])


FAMILY_BUILDERS = {
    "diagonal_qubit": lambda **kw: diagonal_qubit_family(),
    "product_diagonal": lambda n, **kw: product_diagonal_family(int(n)),
    "rotated_fixed_spectrum": lambda mu, n, **kw: rotated_fixed_spectrum_family(float(mu), int(n)),
}


def family_by_name(name: str, **params) -> AnsatzFamily:
    try:
        builder = FAMILY_BUILDERS[name]
    except KeyError:
        raise ValueError(f"unknown ansatz family {name!r}") from None
    return builder(**params)
