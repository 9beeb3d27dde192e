"""Algebra densa dei superoperatori per mappe dinamiche piccole (d <= 8).

Convenzioni usate in tutto dynmap:

- le matrici densita sono vettorizzate per righe, vec(rho) = (rho00, rho01, rho10, rho11)
  per un qubit, quindi vec(X rho Y^dag) = (X kron conj(Y)) vec(rho);
- la matrice di processo A agisce su vec(rho): vec(Phi[rho]) = A vec(rho);
- la matrice dinamica e il reshuffle B[(a,c),(b,d)] = A[(a,b),(c,d)], con le coppie
  (x, y) codificate come d*x + y. Non e normalizzata (traccia d per mappe TP).
"""
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
from scipy import linalg as sla

from .errors import DimensionError, NonFiniteMatrix, NotHermitian, SingularMap

log = logging.getLogger(__name__)

MAX_DIM = 8
SV_THRESHOLD = 1e-10
HERMITIAN_TOL = 1e-8


def _as_matrix(mat) -> np.ndarray:
    arr = np.array(mat, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteMatrix("matrix has NaN or Inf entries")
    arr.setflags(write=False)
    return arr


def hilbert_dim(n: int) -> int:
    """Restituisce d per un superoperatore d^2 x d^2 di lato n."""
    d = math.isqrt(n)
    if d * d != n or d < 1:
        raise DimensionError(f"side {n} is not a perfect square d^2")
    if d > MAX_DIM:
        raise DimensionError(f"d={d} exceeds the supported maximum {MAX_DIM}")
    return d


def max_norm(mat) -> float:
    arr = np.asarray(mat)
    return float(np.max(np.abs(arr))) if arr.size else 0.0


# ----- Tipi di dominio -----

@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Matrice densita d x d.

    ``require_psd=False`` tiene solo i controlli di hermitianita e traccia unitaria:
    serve per le stime tomografiche rumorose che possono scendere sotto zero.
    """
    mat: np.ndarray
    require_psd: bool = field(default=True, repr=False)

    def __post_init__(self):
        arr = _as_matrix(self.mat)
        if arr.shape[0] != arr.shape[1]:
            raise DimensionError(f"density matrix must be square, got {arr.shape}")
        scale = max(max_norm(arr), 1e-300)
        asym = max_norm(arr - arr.conj().T)
        if asym > 1e-12 * scale:
            raise NotHermitian(asym)
        if abs(np.trace(arr) - 1.0) > 1e-12:
            raise ValueError(f"trace {np.trace(arr).real!r} != 1")
        if self.require_psd:
            low = float(sla.eigvalsh((arr + arr.conj().T) / 2)[0])
            if low < -1e-10:
                raise ValueError(f"density matrix has negative eigenvalue {low:.3e}")
        object.__setattr__(self, "mat", arr)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]


@dataclass(frozen=True, eq=False)
class KrausSet:
    ops: Tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = tuple(_as_matrix(op) for op in self.ops)
        if not ops:
            raise DimensionError("empty Kraus set")
        d = ops[0].shape[0]
        for op in ops:
            if op.shape != (d, d):
                raise DimensionError(f"Kraus operator of shape {op.shape}, expected {(d, d)}")
        completeness = sum(op.conj().T @ op for op in ops)
        err = max_norm(completeness - np.eye(d))
        if err > 1e-10:
            raise ValueError(f"Kraus set is not trace preserving (|sum E^dag E - I| = {err:.3e})")
        object.__setattr__(self, "ops", ops)

    @property
    def dim(self) -> int:
        return self.ops[0].shape[0]


@dataclass(frozen=True, eq=False)
class ProcessMatrix:
    """Matrice d^2 x d^2 che agisce sulle matrici densita vettorizzate per righe."""
    mat: np.ndarray

    def __post_init__(self):
        arr = _as_matrix(self.mat)
        if arr.shape[0] != arr.shape[1]:
            raise DimensionError(f"process matrix must be square, got {arr.shape}")
        hilbert_dim(arr.shape[0])
        object.__setattr__(self, "mat", arr)

    @property
    def dim(self) -> int:
        return hilbert_dim(self.mat.shape[0])

    def __matmul__(self, other: "ProcessMatrix") -> "ProcessMatrix":
        if not isinstance(other, ProcessMatrix):
            return NotImplemented
        if other.mat.shape != self.mat.shape:
            raise DimensionError(f"cannot compose {self.mat.shape} with {other.mat.shape}")
        return ProcessMatrix(self.mat @ other.mat)

    @classmethod
    def identity(cls, d: int) -> "ProcessMatrix":
        return cls(np.eye(d * d, dtype=complex))


@dataclass(frozen=True, eq=False)
class DynamicalMatrix:
    """Matrice di processo riordinata; semidefinita positiva sse la mappa e CP."""
    mat: np.ndarray

    def __post_init__(self):
        arr = _as_matrix(self.mat)
        if arr.shape[0] != arr.shape[1]:
            raise DimensionError(f"dynamical matrix must be square, got {arr.shape}")
        hilbert_dim(arr.shape[0])
        object.__setattr__(self, "mat", arr)

    @property
    def dim(self) -> int:
        return hilbert_dim(self.mat.shape[0])


@dataclass(frozen=True)
class Spectrum:
    values: Tuple[float, ...]
    kind: str  # "hermitian-eigenvalues" | "singular-values"

    @property
    def min(self) -> float:
        return self.values[0]

    @property
    def max(self) -> float:
        return self.values[-1]


@dataclass(frozen=True)
class CPVerdict:
    cp: bool
    min_eig: float


# ----- Vettorizzazione -----

def vectorize(rho: Union[DensityMatrix, np.ndarray]) -> np.ndarray:
    mat = rho.mat if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    return mat.reshape(-1).copy()


def devectorize(vec: np.ndarray) -> np.ndarray:
    vec = np.asarray(vec, dtype=complex).reshape(-1)
    d = math.isqrt(vec.size)
    if d * d != vec.size:
        raise DimensionError(f"vector of length {vec.size} is not d^2")
    return vec.reshape(d, d).copy()


def pure_state(ket: Sequence[complex]) -> DensityMatrix:
    psi = np.asarray(ket, dtype=complex).reshape(-1)
    psi = psi / np.linalg.norm(psi)
    return DensityMatrix(np.outer(psi, psi.conj()))


def apply(A: ProcessMatrix, rho: Union[DensityMatrix, np.ndarray]) -> np.ndarray:
    """Restituisce Phi[rho] come array d x d."""
    return devectorize(A.mat @ vectorize(rho))


# ----- Conversioni di rappresentazione -----

def sandwich_superop(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Superoperatore di rho -> left rho right^dag."""
    return np.kron(np.asarray(left, dtype=complex), np.asarray(right, dtype=complex).conj())


def kraus_to_process(K: KrausSet) -> ProcessMatrix:
    mat = sum(sandwich_superop(op, op) for op in K.ops)
    return ProcessMatrix(mat)


def reshuffle_matrix(mat: np.ndarray) -> np.ndarray:
    """B[(a,c),(b,d)] = A[(a,b),(c,d)]; involuzione sugli array d^2 x d^2."""
    arr = np.asarray(mat)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"reshuffle needs a square matrix, got {arr.shape}")
    d = hilbert_dim(arr.shape[0])
    return arr.reshape(d, d, d, d).transpose(0, 2, 1, 3).reshape(d * d, d * d).copy()


def reshuffle(A: Union[ProcessMatrix, DynamicalMatrix]) -> Union[DynamicalMatrix, ProcessMatrix]:
    if isinstance(A, ProcessMatrix):
        return DynamicalMatrix(reshuffle_matrix(A.mat))
    if isinstance(A, DynamicalMatrix):
        return ProcessMatrix(reshuffle_matrix(A.mat))
    raise TypeError(f"reshuffle expects ProcessMatrix or DynamicalMatrix, got {type(A).__name__}")


def block_trace_sum(mat: np.ndarray) -> np.ndarray:
    """Somma dei d blocchi diagonali d x d di una matrice d^2 x d^2."""
    d = hilbert_dim(np.asarray(mat).shape[0])
    blocks = np.asarray(mat).reshape(d, d, d, d)
    return np.einsum("acad->cd", blocks)


def is_trace_preserving(A: ProcessMatrix, tol: float = 1e-10) -> bool:
    B = reshuffle_matrix(A.mat)
    return max_norm(block_trace_sum(B) - np.eye(A.dim)) <= tol


def is_hermiticity_preserving(A: ProcessMatrix, tol: float = 1e-10) -> bool:
    B = reshuffle_matrix(A.mat)
    return max_norm(B - B.conj().T) <= tol * max(1.0, max_norm(B))


# ----- Spettri -----

def hermitian_eigenvalues(M, tol: float = HERMITIAN_TOL) -> Spectrum:
    arr = np.asarray(M.mat if hasattr(M, "mat") else M, dtype=complex)
    asym = max_norm(arr - arr.conj().T)
    if asym > tol * max(1.0, max_norm(arr)):
        raise NotHermitian(asym)
    vals = sla.eigvalsh((arr + arr.conj().T) / 2)
    return Spectrum(tuple(float(v) for v in np.sort(vals)), "hermitian-eigenvalues")


def singular_values(A) -> Spectrum:
    arr = np.asarray(A.mat if hasattr(A, "mat") else A, dtype=complex)
    vals = sla.svdvals(arr)
    return Spectrum(tuple(float(v) for v in np.sort(vals)), "singular-values")


def determinant(mat: np.ndarray) -> complex:
    """Determinante via LU con pivoting parziale."""
    arr = np.asarray(mat, dtype=complex)
    if not arr.any():
        return 0j
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(arr, check_finite=False)
    swaps = int(np.count_nonzero(piv != np.arange(piv.size)))
    det = complex(np.prod(np.diag(lu)))
    return -det if swaps % 2 else det


def min_singular_value_and_det(A) -> Tuple[float, float, complex]:
    arr = np.asarray(A.mat if hasattr(A, "mat") else A, dtype=complex)
    if not arr.any():
        return 0.0, 0.0, 0j
    sv = singular_values(arr)
    return sv.min, sv.max, determinant(arr)


def is_cp(B: DynamicalMatrix, tol: float = 1e-9) -> CPVerdict:
    spec = hermitian_eigenvalues(B)
    scale = max(1.0, max_norm(B.mat))
    return CPVerdict(cp=spec.min >= -tol * scale, min_eig=spec.min)


# ----- Inversa e divisibilita -----

def invert(A: ProcessMatrix, sv_threshold: float = SV_THRESHOLD) -> ProcessMatrix:
    min_sv, max_sv, _ = min_singular_value_and_det(A)
    if max_sv == 0.0 or min_sv <= sv_threshold * max_sv:
        raise SingularMap(min_sv, max_sv)
    return ProcessMatrix(sla.inv(A.mat, check_finite=False))


def intermediate_map(A_t: ProcessMatrix, A_s: ProcessMatrix,
                     sv_threshold: float = SV_THRESHOLD) -> ProcessMatrix:
    """Phi(t, s) = Phi(t, 0) Phi(s, 0)^-1."""
    return A_t @ invert(A_s, sv_threshold)


# ----- Basi di operatori e mattoni del generatore -----

def hermitian_basis(d: int) -> List[np.ndarray]:
    """Base hermitiana ortonormale (Hilbert-Schmidt), F_0 = I/sqrt(d), il resto a traccia nulla.

    Gli elementi a traccia nulla sono le matrici di Gell-Mann generalizzate normalizzate;
    per d = 2 sono sigma_x, sigma_y, sigma_z (diag(1, -1) standard) diviso sqrt(2).
    """
    if d < 1 or d > MAX_DIM:
        raise DimensionError(f"unsupported dimension d={d}")
    basis = [np.eye(d, dtype=complex) / math.sqrt(d)]
    for j in range(d):
        for k in range(j + 1, d):
            sym = np.zeros((d, d), dtype=complex)
            sym[j, k] = sym[k, j] = 1.0
            anti = np.zeros((d, d), dtype=complex)
            anti[j, k] = -1j
            anti[k, j] = 1j
            basis.append(sym / math.sqrt(2))
            basis.append(anti / math.sqrt(2))
    for l in range(1, d):
        diag = np.zeros(d, dtype=complex)
        diag[:l] = 1.0
        diag[l] = -l
        basis.append(np.diag(diag) / math.sqrt(l * (l + 1)))
    return basis


def hamiltonian_superop(H: np.ndarray) -> np.ndarray:
    """Superoperatore di rho -> -i[H, rho]."""
    H = np.asarray(H, dtype=complex)
    eye = np.eye(H.shape[0])
    return -1j * (np.kron(H, eye) - np.kron(eye, H.T))


def dissipator_superop(L: np.ndarray, rate: float = 1.0) -> np.ndarray:
    """Superoperatore di rho -> rate (L rho L^dag - 1/2 {L^dag L, rho})."""
    L = np.asarray(L, dtype=complex)
    eye = np.eye(L.shape[0])
    LdL = L.conj().T @ L
    return rate * (sandwich_superop(L, L) - 0.5 * (np.kron(LdL, eye) + np.kron(eye, LdL.T)))


# ----- Scambio matrici in JSON -----

def matrix_to_json(mat, dim: int = None) -> Dict:
    """{"dim": d, "re": [[...]], "im": [[...]]}; dim e la dimensione dello spazio di Hilbert."""
    arr = np.asarray(mat.mat if hasattr(mat, "mat") else mat, dtype=complex)
    if dim is None:
        dim = mat.dim if hasattr(mat, "dim") else arr.shape[0]
    return {
        "dim": int(dim),
        "re": [[float(x) for x in row] for row in arr.real],
        "im": [[float(x) for x in row] for row in arr.imag],
    }


def matrix_from_json(obj: Dict) -> np.ndarray:
    try:
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj["im"], dtype=float)
    except (KeyError, TypeError, ValueError) as e:
        raise DimensionError(f"malformed matrix object: {e}") from e
    if re.shape != im.shape or re.ndim != 2:
        raise DimensionError(f"re/im shapes {re.shape} and {im.shape} do not match")
    d = int(obj.get("dim", re.shape[0]))
    if re.shape not in ((d, d), (d * d, d * d)):
        raise DimensionError(f"matrix of shape {re.shape} does not fit dim={d}")
    return _as_matrix(re + 1j * im)
