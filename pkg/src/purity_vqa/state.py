"""Dense density matrices and the exact spectral routines used as oracles.

Every estimated quantity in the package has a brute-force counterpart here:
matrix powers by eigendecomposition, trace products by explicit matrix
multiplication, entropies and Bures fidelity from the spectrum.

Diagonal matrices are stored as their diagonal only. This is a storage
optimisation, not a different representation: every function returns the
same values it would for the materialised dense matrix.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    AlphaOutOfRange,
    DimMismatch,
    InvalidState,
    NonInvertible,
    NotNormalized,
)

RANK_CUTOFF = 1e-9
HERMITIAN_ATOL = 1e-10
PSD_ATOL = 1e-10
TRACE_ATOL = 1e-10
PURITY_TRACE_ATOL = 1e-8
IMAG_ATOL = 1e-10


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues (descending) and matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


class DensityMatrix:
    """Hermitian positive semidefinite matrix, possibly unnormalized.

    Args:
        entries: a square 2-D array, or a 1-D array holding the diagonal of a
            diagonal matrix.
        normalized: ``None`` infers the flag from the trace; ``True`` demands
            trace 1 (within 1e-10) and raises ``NotNormalized`` otherwise.
        check: validate hermiticity and positivity. Internal constructors
            that are PSD by construction pass ``False``.
    """

    __slots__ = ("_diag", "_mat", "_normalized", "_spectrum")

    def __init__(self, entries, normalized: bool | None = None, *, check: bool = True):
        arr = np.asarray(entries)
        if arr.ndim == 1:
            if np.iscomplexobj(arr):
                if np.max(np.abs(arr.imag), initial=0.0) > HERMITIAN_ATOL:
                    raise InvalidState("diagonal entries must be real")
                arr = arr.real
            diag = np.array(arr, dtype=float)
            diag.setflags(write=False)
            self._diag = diag
            self._mat = None
        elif arr.ndim == 2 and arr.shape[0] == arr.shape[1]:
            mat = np.array(arr, dtype=complex)
            mat.setflags(write=False)
            self._diag = None
            self._mat = mat
        else:
            raise InvalidState(f"expected a square matrix, got shape {arr.shape}")
        if self.dim == 0:
            raise InvalidState("empty matrix")
        self._spectrum = None
        if check:
            self._validate()
        tr = self.trace
        if normalized is None:
            normalized = abs(tr - 1.0) <= TRACE_ATOL
        elif normalized and abs(tr - 1.0) > TRACE_ATOL:
            raise NotNormalized(f"trace is {tr!r}, expected 1")
        self._normalized = bool(normalized)

    def _validate(self) -> None:
        scale = max(1.0, self.trace)
        if self._mat is not None:
            m = self._mat
            if not np.all(np.isfinite(m)):
                raise InvalidState("non-finite entries")
            if np.max(np.abs(m - m.conj().T)) > HERMITIAN_ATOL * scale:
                raise InvalidState("matrix is not Hermitian")
        elif not np.all(np.isfinite(self._diag)):
            raise InvalidState("non-finite entries")
        if self.eigenvalues[-1] < -PSD_ATOL * scale:
            raise InvalidState(
                f"matrix is not positive semidefinite (min eigenvalue {self.eigenvalues[-1]:.3e})"
            )

    # -- basic accessors -------------------------------------------------

    @property
    def dim(self) -> int:
        return len(self._diag) if self._diag is not None else self._mat.shape[0]

    @property
    def normalized(self) -> bool:
        return self._normalized

    @property
    def is_diagonal(self) -> bool:
        return self._diag is not None

    @property
    def diagonal(self) -> np.ndarray:
        if self._diag is not None:
            return self._diag
        return np.real(np.diag(self._mat))

    @property
    def matrix(self) -> np.ndarray:
        """Dense complex matrix (read-only)."""
        if self._mat is not None:
            return self._mat
        m = np.diag(self._diag).astype(complex)
        m.setflags(write=False)
        return m

    @property
    def trace(self) -> float:
        if self._diag is not None:
            return float(np.sum(self._diag))
        return float(np.real(np.trace(self._mat)))

    def spectrum(self) -> Spectrum:
        if self._spectrum is None:
            if self._diag is not None:
                order = np.argsort(-self._diag, kind="stable")
                vals = self._diag[order]
                vecs = np.eye(self.dim, dtype=complex)[:, order]
            else:
                m = self._mat
                vals, vecs = np.linalg.eigh(0.5 * (m + m.conj().T))
                vals, vecs = vals[::-1], vecs[:, ::-1]
            vals = np.array(vals, dtype=float)
            vals.setflags(write=False)
            vecs.setflags(write=False)
            self._spectrum = Spectrum(vals, vecs)
        return self._spectrum

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.spectrum().eigenvalues

    def normalize(self) -> "DensityMatrix":
        tr = self.trace
        if tr <= 0:
            raise NotNormalized("cannot normalize a matrix with non-positive trace")
        data = self._diag if self._diag is not None else self._mat
        out = DensityMatrix(data / tr, check=False)
        out._normalized = True
        return out

    def scaled(self, factor: float) -> "DensityMatrix":
        data = self._diag if self._diag is not None else self._mat
        return DensityMatrix(data * factor, check=False)

    def __repr__(self) -> str:
        kind = "diag" if self.is_diagonal else "dense"
        return f"DensityMatrix(dim={self.dim}, {kind}, trace={self.trace:.6g})"

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        m = self.matrix
        return {
            "dim": self.dim,
            "re": [float(x) for x in m.real.ravel()],
            "im": [float(x) for x in m.imag.ravel()],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, obj: dict, *, check: bool = True) -> "DensityMatrix":
        try:
            dim = int(obj["dim"])
            re = np.asarray(obj["re"], dtype=float).reshape(dim, dim)
            im = np.asarray(obj["im"], dtype=float).reshape(dim, dim)
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidState(f"malformed density matrix record: {exc}") from exc
        return cls(re + 1j * im, check=check)

    @classmethod
    def from_json(cls, text: str, *, check: bool = True) -> "DensityMatrix":
        return cls.from_dict(json.loads(text), check=check)


def as_density_matrix(m) -> DensityMatrix:
    return m if isinstance(m, DensityMatrix) else DensityMatrix(m)


def _same_dim(ms: Sequence[DensityMatrix]) -> int:
    dims = {m.dim for m in ms}
    if len(dims) != 1:
        raise DimMismatch(f"dimensions differ: {sorted(dims)}")
    return dims.pop()


# -- constructors ----------------------------------------------------------


def maximally_mixed(dim: int) -> DensityMatrix:
    return DensityMatrix(np.full(dim, 1.0 / dim), check=False)


def pure_state(vector) -> DensityMatrix:
    v = np.asarray(vector, dtype=complex)
    v = v / np.linalg.norm(v)
    return DensityMatrix(np.outer(v, v.conj()), check=False)


def qubit_diagonal(phi: float) -> DensityMatrix:
    """cos^2(phi/2)|0><0| + sin^2(phi/2)|1><1|."""
    return DensityMatrix(np.array([math.cos(phi / 2) ** 2, math.sin(phi / 2) ** 2]), check=False)


def random_density_matrix(dim: int, rng: np.random.Generator, ancilla_dim: int | None = None) -> DensityMatrix:
    """Reduced state of a Haar-random pure state on dim x ancilla_dim.

    With the default ancilla of equal dimension the result is full rank with
    probability one.
    """
    anc = dim if ancilla_dim is None else ancilla_dim
    z = rng.standard_normal((dim, anc)) + 1j * rng.standard_normal((dim, anc))
    z /= np.linalg.norm(z)
    m = z @ z.conj().T
    m = 0.5 * (m + m.conj().T)
    return DensityMatrix(m / np.real(np.trace(m)), check=False)


def tensor(*ms: DensityMatrix) -> DensityMatrix:
    if all(m.is_diagonal for m in ms):
        return DensityMatrix(reduce(np.kron, [m.diagonal for m in ms]), check=False)
    return DensityMatrix(reduce(np.kron, [m.matrix for m in ms]), check=False)


def conjugate(m: DensityMatrix, a) -> DensityMatrix:
    """Return the (unnormalized) PSD matrix a m a^dagger.

    ``a`` may be a DensityMatrix, a dense array, or a 1-D diagonal.
    """
    if isinstance(a, DensityMatrix):
        a = a.diagonal if a.is_diagonal else a.matrix
    a = np.asarray(a)
    if a.ndim == 1 and m.is_diagonal:
        return DensityMatrix(np.abs(a) ** 2 * m.diagonal, check=False)
    if a.ndim == 1:
        out = (a[:, None] * m.matrix) * a.conj()[None, :]
    else:
        out = a @ m.matrix @ a.conj().T
    return DensityMatrix(0.5 * (out + out.conj().T), check=False)


# -- spectral operations ---------------------------------------------------


def rank(m: DensityMatrix, cutoff: float = RANK_CUTOFF) -> int:
    """Number of eigenvalues above ``cutoff * tr(m)``."""
    tr = m.trace
    if tr <= 0:
        return 0
    return int(np.count_nonzero(m.eigenvalues > cutoff * tr))


def matrix_power(m: DensityMatrix, alpha: float) -> DensityMatrix:
    """Spectral power sum_j lambda_j^alpha |e_j><e_j|.

    Zero eigenvalues stay zero for alpha >= 0 (alpha = 0 gives the support
    projector). Negative powers require every eigenvalue to exceed the rank
    cutoff relative to the trace.
    """
    alpha = float(alpha)
    if alpha == 1.0:
        return m
    if m.is_diagonal:
        vals = np.clip(m.diagonal, 0.0, None)
    else:
        spec = m.spectrum()
        vals = np.clip(spec.eigenvalues, 0.0, None)
    if alpha < 0:
        if np.any(vals <= RANK_CUTOFF * m.trace):
            raise NonInvertible(f"eigenvalue below rank cutoff; cannot raise to power {alpha}")
        powered = vals**alpha
    elif alpha == 0:
        powered = (vals > RANK_CUTOFF * m.trace).astype(float)
    else:
        powered = vals**alpha
    if m.is_diagonal:
        return DensityMatrix(powered, check=False)
    v = spec.eigenvectors
    out = (v * powered) @ v.conj().T
    return DensityMatrix(0.5 * (out + out.conj().T), check=False)


def purity(m: DensityMatrix) -> float:
    if abs(m.trace - 1.0) > PURITY_TRACE_ATOL:
        raise NotNormalized(f"purity needs a normalized state (trace {m.trace!r})")
    if m.is_diagonal:
        return float(np.sum(m.diagonal**2))
    return float(np.sum(np.abs(m.matrix) ** 2))


def trace_product_exact(ms: Sequence[DensityMatrix]) -> complex:
    """tr(m_1 m_2 ... m_k) by explicit multiplication."""
    ms = list(ms)
    if not ms:
        raise ValueError("empty sequence")
    _same_dim(ms)
    if all(m.is_diagonal for m in ms):
        return complex(np.sum(np.prod([m.diagonal for m in ms], axis=0)))
    prod = reduce(np.matmul, [m.matrix for m in ms[:-1]]) if len(ms) > 1 else None
    if prod is None:
        return complex(np.trace(ms[0].matrix))
    # tr(A B) = sum_ij A_ij B_ji avoids the last matmul
    return complex(np.sum(prod * ms[-1].matrix.T))


def hs_distance_sq(a: DensityMatrix, b: DensityMatrix) -> float:
    """Squared Hilbert-Schmidt distance tr[(a - b)^2]."""
    _same_dim([a, b])
    if a.is_diagonal and b.is_diagonal:
        return float(np.sum((a.diagonal - b.diagonal) ** 2))
    return float(np.sum(np.abs(a.matrix - b.matrix) ** 2))


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    _same_dim([a, b])
    if a.is_diagonal and b.is_diagonal:
        return 0.5 * float(np.sum(np.abs(a.diagonal - b.diagonal)))
    d = a.matrix - b.matrix
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (d + d.conj().T)))))


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Bures (root) fidelity tr sqrt(sqrt(sigma) rho sqrt(sigma))."""
    _same_dim([rho, sigma])
    if rho.is_diagonal and sigma.is_diagonal:
        return float(np.sum(np.sqrt(np.clip(rho.diagonal * sigma.diagonal, 0.0, None))))
    s = matrix_power(sigma, 0.5).matrix
    inner = s @ rho.matrix @ s
    vals = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    return float(np.sum(np.sqrt(np.clip(vals, 0.0, None))))


def _check_alpha(alpha: float) -> None:
    if not alpha > 0 or alpha == 1:
        raise AlphaOutOfRange(f"alpha must lie in (0,1) or (1,inf), got {alpha}")


def trace_of_power(m: DensityMatrix, alpha: float) -> float:
    vals = np.clip(m.eigenvalues, 0.0, None)
    vals = vals[vals > RANK_CUTOFF * m.trace] if alpha <= 0 else vals
    return float(np.sum(vals**alpha))


def renyi_entropy(m: DensityMatrix, alpha: float) -> float:
    """Natural-log Renyi entropy ln(tr m^alpha) / (1 - alpha)."""
    _check_alpha(alpha)
    return math.log(trace_of_power(m, alpha)) / (1.0 - alpha)


def tsallis_entropy(m: DensityMatrix, alpha: float) -> float:
    _check_alpha(alpha)
    return (trace_of_power(m, alpha) - 1.0) / (1.0 - alpha)


@dataclass(frozen=True)
class OracleValues:
    rank: int
    renyi: float
    tsallis: float
    fidelity: float | None
    qfi_supported: bool


def exact_oracles(m: DensityMatrix, n: DensityMatrix | None = None, alpha: float = 0.5) -> OracleValues:
    """Exact rank, entropies of ``m`` at ``alpha`` and fidelity F(m, n).

    ``qfi_supported`` reports whether the fidelity pipeline can run on the
    pair, i.e. whether ``n`` is full rank.
    """
    _check_alpha(alpha)
    for x in (m, n):
        if x is not None and abs(x.trace - 1.0) > PURITY_TRACE_ATOL:
            raise NotNormalized("oracles need normalized states")
    f = None
    supported = False
    if n is not None:
        f = fidelity(m, n)
        supported = rank(n) == n.dim
    return OracleValues(rank(m), renyi_entropy(m, alpha), tsallis_entropy(m, alpha), f, supported)


# -- subsystems ------------------------------------------------------------


def partial_trace(m: DensityMatrix, dims: Sequence[int], keep: int | Iterable[int]) -> DensityMatrix:
    """Reduce ``m`` on a tensor product with factor dimensions ``dims``."""
    dims = [int(d) for d in dims]
    if int(np.prod(dims)) != m.dim:
        raise DimMismatch(f"subsystem dims {dims} do not multiply to {m.dim}")
    keep = [keep] if isinstance(keep, (int, np.integer)) else sorted(keep)
    drop = [i for i in range(len(dims)) if i not in keep]
    if m.is_diagonal:
        t = m.diagonal.reshape(dims)
        return DensityMatrix(t.sum(axis=tuple(drop)).ravel() if drop else t.ravel(), check=False)
    n = len(dims)
    t = m.matrix.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:n])
    col = list(letters[n : 2 * n])
    for i in drop:
        col[i] = row[i]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    reduced = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    kd = int(np.prod([dims[i] for i in keep]))
    return DensityMatrix(reduced.reshape(kd, kd), check=False)
