"""Zoo dei modelli: famiglie di mappe per qubit con matrici di processo in forma chiusa.

Ogni famiglia restituisce Phi(t, 0) come ProcessMatrix e, dove esiste una forma
chiusa, il Liouvilliano time-local L_t = (dPhi/dt) Phi^-1 come array d^2 x d^2
costruito dai rate del modello. Unita: hbar = 1.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, ClassVar, Dict, Tuple

import numpy as np

from .errors import ConfigError, DimensionError, DomainError, SingularGenerator
from .superop import (
    KrausSet,
    ProcessMatrix,
    block_trace_sum,
    dissipator_superop,
    hamiltonian_superop,
    hilbert_dim,
    max_norm,
    reshuffle_matrix,
)

log = logging.getLogger(__name__)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
KET0_BRA1 = np.array([[0, 1], [0, 0]], dtype=complex)  # |0><1|
KET1_BRA0 = np.array([[0, 0], [1, 0]], dtype=complex)  # |1><0|

# sotto questa soglia un denominatore dei rate vale zero
DENOMINATOR_FLOOR = 1e-14


def _require(cond: bool, msg: str):
    if not cond:
        raise ConfigError(msg)


# ----- Amplitude damping -----

@dataclass(frozen=True)
class AmplitudeDampingParams:
    name: ClassVar[str] = "amplitude-damping"
    gamma: float = 1.0
    dim: int = field(default=2, init=False)

    def __post_init__(self):
        _require(self.gamma > 0 and math.isfinite(self.gamma), f"gamma must be > 0, got {self.gamma!r}")

    def rate_scale(self) -> float:
        return 2 * self.gamma

    def process(self, t: float) -> np.ndarray:
        e1 = math.exp(-self.gamma * t)
        e2 = math.exp(-2 * self.gamma * t)
        return np.array([
            [1, 0, 0, 1 - e2],
            [0, e1, 0, 0],
            [0, 0, e1, 0],
            [0, 0, 0, e2],
        ], dtype=complex)

    def liouvillian(self, t: float) -> np.ndarray:
        g = self.gamma
        L = np.diag([0, -g, -g, -2 * g]).astype(complex)
        L[0, 3] = 2 * g
        return L

    def kraus(self, t: float) -> KrausSet:
        e1 = math.exp(-self.gamma * t)
        E0 = np.array([[1, 0], [0, e1]], dtype=complex)
        E1 = np.array([[0, math.sqrt(1 - e1 * e1)], [0, 0]], dtype=complex)
        return KrausSet((E0, E1))


# ----- Mixed Pauli (combinazione convessa dei canali di Pauli z e y) -----

@dataclass(frozen=True)
class MixedPauliParams:
    name: ClassVar[str] = "mixed-pauli"
    r: float = 1.0
    a: float = 0.5
    dim: int = field(default=2, init=False)

    def __post_init__(self):
        _require(self.r > 0 and math.isfinite(self.r), f"r must be > 0, got {self.r!r}")
        _require(0 < self.a < 1, f"a must lie in (0, 1), got {self.a!r}")

    def rate_scale(self) -> float:
        return self.r

    def p(self, t: float) -> float:
        return (1 - math.exp(-self.r * t)) / 2

    def pauli_eigenvalues(self, t: float) -> Tuple[float, float, float]:
        """Fattori di smorzamento delle componenti sigma_x, sigma_y, sigma_z."""
        p, a = self.p(t), self.a
        return 1 - 2 * p, 1 - 2 * a * p, 1 - 2 * p + 2 * a * p

    def process(self, t: float) -> np.ndarray:
        p, a = self.p(t), self.a
        return np.array([
            [1 - (1 - a) * p, 0, 0, (1 - a) * p],
            [0, 1 - (1 + a) * p, (a - 1) * p, 0],
            [0, (a - 1) * p, 1 - (1 + a) * p, 0],
            [(1 - a) * p, 0, 0, 1 - (1 - a) * p],
        ], dtype=complex)

    def pauli_rates(self, t: float) -> Tuple[float, float, float]:
        """Coefficienti g_j di L = sum_j g_j (sigma_j rho sigma_j - rho)."""
        p, a = self.p(t), self.a
        pdot = self.r * math.exp(-self.r * t) / 2
        mu_x = 2 * pdot / (1 - 2 * p)
        mu_y = 2 * a * pdot / (1 - 2 * a * p)
        mu_z = 2 * (1 - a) * pdot / (1 - 2 * (1 - a) * p)
        total = (mu_x + mu_y + mu_z) / 4
        return total - mu_x / 2, total - mu_y / 2, total - mu_z / 2

    def liouvillian(self, t: float) -> np.ndarray:
        gx, gy, gz = self.pauli_rates(t)
        return (dissipator_superop(SIGMA_X, gx) + dissipator_superop(SIGMA_Y, gy)
                + dissipator_superop(SIGMA_Z, gz))


def mixed_pauli_intermediate_spectrum(params: MixedPauliParams, t: float, s: float) -> Tuple[float, ...]:
    """Autovalori in forma chiusa di B(t, s), cioe 1/2 {b1, b2, b3, b4}, in ordine crescente.

    alpha, beta, gamma sono i rapporti tra t e s dei fattori di smorzamento
    di sigma_z, sigma_x, sigma_y.
    """
    lx_t, ly_t, lz_t = params.pauli_eigenvalues(t)
    lx_s, ly_s, lz_s = params.pauli_eigenvalues(s)
    alpha, beta, gamma = lz_t / lz_s, lx_t / lx_s, ly_t / ly_s
    b = (1 + alpha - beta - gamma, 1 - alpha + beta - gamma,
         1 - alpha - beta + gamma, 1 + alpha + beta + gamma)
    return tuple(sorted(v / 2 for v in b))


# ----- Dephasing generalizzato -----

@dataclass(frozen=True)
class DephasingRates:
    Gamma: float
    Omega: float
    a0: float
    a1: float


def _dephasing_invertible(t: float):
    e = math.exp(-t)
    x, xdot = (1 + e) / 2, -e / 2
    return x, xdot, x, xdot, complex(e), complex(-e)


def _dephasing_singular_crossing(t: float):
    e, c, s = math.exp(-t), math.cos(t), math.sin(t)
    x, xdot = (1 + e * c) / 2, -e * (c + s) / 2
    return x, xdot, x, xdot, complex(e), complex(-e)


DEPHASING_PRESETS: Dict[str, Callable] = {
    "invertible": _dephasing_invertible,
    "singular-crossing": _dephasing_singular_crossing,
}


@dataclass(frozen=True)
class DephasingParams:
    """rho00 -> x0 rho00 + (1 - x1) rho11, rho11 -> (1 - x0) rho00 + x1 rho11, rho01 -> g rho01."""
    name: ClassVar[str] = "dephasing"
    preset: str = "invertible"
    dim: int = field(default=2, init=False)

    def __post_init__(self):
        _require(self.preset in DEPHASING_PRESETS,
                 f"unknown dephasing preset {self.preset!r} (choose from {sorted(DEPHASING_PRESETS)})")

    def rate_scale(self) -> float:
        return 1.0

    def functions(self, t: float):
        """(x0, x0', x1, x1', g, g') al tempo t."""
        return DEPHASING_PRESETS[self.preset](t)

    def process(self, t: float) -> np.ndarray:
        x0, _, x1, _, g, _ = self.functions(t)
        return np.array([
            [x0, 0, 0, 1 - x1],
            [0, g, 0, 0],
            [0, 0, g.conjugate(), 0],
            [1 - x0, 0, 0, x1],
        ], dtype=complex)

    def rates(self, t: float) -> DephasingRates:
        x0, x0dot, x1, x1dot, g, gdot = self.functions(t)
        denom = 1 - x0 - x1
        if abs(denom) < DENOMINATOR_FLOOR:
            raise SingularGenerator(t, "1 - x0 - x1 = 0")
        if abs(g) < DENOMINATOR_FLOOR:
            raise SingularGenerator(t, "coherence factor vanishes")
        a0 = (x0dot * (1 - x1) + x1dot * x0) / denom
        a1 = (x1dot * (1 - x0) + x0dot * x1) / denom
        ratio = gdot / g
        return DephasingRates(Gamma=-(a0 + a1) / 2 - ratio.real, Omega=ratio.imag, a0=a0, a1=a1)

    def liouvillian(self, t: float) -> np.ndarray:
        rt = self.rates(t)
        # Omega/2 Z, con Z = diag(-1, 1)
        H = rt.Omega / 2 * np.diag([-1.0, 1.0]).astype(complex)
        return (hamiltonian_superop(H)
                + dissipator_superop(KET0_BRA1, rt.a0)
                + dissipator_superop(KET1_BRA0, rt.a1)
                + dissipator_superop(SIGMA_Z, rt.Gamma / 2))


def dephasing_rates(params: DephasingParams, t: float) -> DephasingRates:
    return params.rates(t)


# ----- Decadimento con fattore di coerenza G(t) -----

@dataclass(frozen=True)
class DecayGParams:
    """rho00 -> |G|^2 rho00, rho11 -> (1 - |G|^2) rho00 + rho11, rho01 -> G rho01."""
    name: ClassVar[str] = "decay-g"
    preset: str = "exponential"
    lam: float = 1.0
    tstar: float = 1.0
    dim: int = field(default=2, init=False)

    def __post_init__(self):
        _require(self.preset in ("exponential", "linear-cutoff"),
                 f"unknown decay-g preset {self.preset!r} (choose from ['exponential', 'linear-cutoff'])")
        _require(self.lam > 0 and math.isfinite(self.lam), f"lambda must be > 0, got {self.lam!r}")
        _require(self.tstar > 0 and math.isfinite(self.tstar), f"tstar must be > 0, got {self.tstar!r}")

    def rate_scale(self) -> float:
        return self.lam if self.preset == "exponential" else 1 / self.tstar

    def G(self, t: float) -> Tuple[complex, complex]:
        """(G, G') al tempo t."""
        if self.preset == "exponential":
            g = math.exp(-self.lam * t / 2)
            return complex(g), complex(-self.lam / 2 * g)
        if t >= self.tstar:
            return 0j, 0j
        return complex(1 - t / self.tstar), complex(-1 / self.tstar)

    def process(self, t: float) -> np.ndarray:
        g, _ = self.G(t)
        g2 = abs(g) ** 2
        return np.array([
            [g2, 0, 0, 0],
            [0, g, 0, 0],
            [0, 0, g.conjugate(), 0],
            [1 - g2, 0, 0, 1],
        ], dtype=complex)

    def rates(self, t: float) -> Tuple[float, float]:
        """(s, gamma) con s = -2 Im G'/G e gamma = -2 Re G'/G."""
        g, gdot = self.G(t)
        if abs(g) < DENOMINATOR_FLOOR:
            raise SingularGenerator(t, "G(t) = 0")
        ratio = gdot / g
        return -2 * ratio.imag, -2 * ratio.real

    def liouvillian(self, t: float) -> np.ndarray:
        s, gamma = self.rates(t)
        P0 = KET1_BRA0.conj().T @ KET1_BRA0
        return hamiltonian_superop(s / 2 * P0) + dissipator_superop(KET1_BRA0, gamma)


# ----- Semigruppo e identita -----

@dataclass(frozen=True, eq=False)
class SemigroupParams:
    name: ClassVar[str] = "semigroup"
    L: np.ndarray = None

    def __post_init__(self):
        _require(self.L is not None, "semigroup needs a generator L")
        L = np.array(self.L, dtype=complex)
        _require(L.ndim == 2 and L.shape[0] == L.shape[1], f"L must be square, got {L.shape}")
        try:
            d = hilbert_dim(L.shape[0])
        except DimensionError as e:
            raise ConfigError(str(e)) from e
        _require(bool(np.all(np.isfinite(L))), "L has non-finite entries")
        B = reshuffle_matrix(L)
        scale = max(1.0, max_norm(L))
        _require(max_norm(B - B.conj().T) <= 1e-10 * scale, "L is not Hermiticity preserving")
        _require(max_norm(block_trace_sum(B)) <= 1e-10 * scale, "L is not trace annihilating")
        L.setflags(write=False)
        object.__setattr__(self, "L", L)

    @property
    def dim(self) -> int:
        return hilbert_dim(self.L.shape[0])

    def rate_scale(self) -> float:
        return max_norm(self.L)

    def process(self, t: float) -> np.ndarray:
        from .propagate import expm
        return expm(self.L * t)

    def liouvillian(self, t: float) -> np.ndarray:
        return np.array(self.L)


@dataclass(frozen=True)
class IdentityParams:
    name: ClassVar[str] = "identity"
    dim: int = 2

    def __post_init__(self):
        _require(1 <= self.dim <= 8, f"dim must lie in [1, 8], got {self.dim!r}")

    def rate_scale(self) -> float:
        return 0.0

    def process(self, t: float) -> np.ndarray:
        return np.eye(self.dim * self.dim, dtype=complex)

    def liouvillian(self, t: float) -> np.ndarray:
        return np.zeros((self.dim * self.dim,) * 2, dtype=complex)


MODELS = {
    cls.name: cls
    for cls in (AmplitudeDampingParams, MixedPauliParams, DephasingParams,
                DecayGParams, SemigroupParams, IdentityParams)
}


# ----- Famiglie -----

@dataclass(frozen=True)
class MapFamily:
    """Phi(t, 0) per t in [t_min, t_max]; in t_min vale la mappa identita."""
    name: str
    params: object
    t_max: float
    t_min: float = 0.0
    declared_smooth: bool = True

    def __post_init__(self):
        _require(self.t_max > self.t_min, f"empty domain [{self.t_min!r}, {self.t_max!r}]")

    @property
    def dim(self) -> int:
        return self.params.dim

    def contains(self, t: float) -> bool:
        slack = 1e-12 * max(1.0, abs(self.t_max))
        return self.t_min - slack <= t <= self.t_max + slack


def default_t_max(params) -> float:
    rate = params.rate_scale()
    return 10.0 / rate if rate > 0 else 10.0


def make_family(name: str, t_max: float = None, **params) -> MapFamily:
    """Costruisce una famiglia dello zoo per nome, es. make_family("mixed-pauli", a=0.5, r=1.0)."""
    if name not in MODELS:
        raise ConfigError(f"unknown model {name!r} (choose from {sorted(MODELS)})")
    try:
        p = MODELS[name](**params)
    except TypeError as e:
        raise ConfigError(f"bad parameters for {name}: {e}") from e
    smooth = not (name == "decay-g" and p.preset == "linear-cutoff")
    return MapFamily(name=name, params=p, t_max=t_max if t_max is not None else default_t_max(p),
                     declared_smooth=smooth)


def _check_domain(f: MapFamily, t: float):
    if not f.contains(t):
        raise DomainError(t, f.t_min, f.t_max)


def eval_family(f: MapFamily, t: float) -> ProcessMatrix:
    _check_domain(f, t)
    return ProcessMatrix(f.params.process(t))


def analytic_liouvillian(f: MapFamily, t: float) -> np.ndarray:
    """L_t in forma chiusa; solleva SingularGenerator dove i rate divergono."""
    _check_domain(f, t)
    if not hasattr(f.params, "liouvillian"):
        raise ConfigError(f"model {f.name} has no closed-form Liouvillian")
    return f.params.liouvillian(t)
