"""Propagazione ordinata nel tempo: esponenziale di matrice, prodotto di time-splitting e
la sua inversa, controllo del determinante di Abel-Jacobi-Liouville.

Un fornitore di generatori ("Lsrc") e qualsiasi callable t -> array d^2 x d^2.
"""
import functools
import logging
import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.integrate import simpson

from .errors import ConfigError, DimensionError, ExpmOverflow, NonFiniteMatrix, SingularMap
from .models import MapFamily, analytic_liouvillian, eval_family
from .superop import ProcessMatrix, determinant

log = logging.getLogger(__name__)

GeneratorSource = Callable[[float], np.ndarray]

TAYLOR_ORDER = 12
SCALE_NORM = 0.5      # scala finche |M / 2^s|_1 <= 0.5
OVERFLOW_NORM = 1e8


def one_norm(a: np.ndarray) -> float:
    """Massima somma assoluta per colonna."""
    return float(np.max(np.sum(np.abs(a), axis=0)))


def expm(M: np.ndarray) -> np.ndarray:
    """exp(M) con scaling and squaring e polinomio di Taylor di grado 12."""
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expm needs a square matrix, got {M.shape}")
    if not np.all(np.isfinite(M)):
        raise NonFiniteMatrix("expm of a matrix with NaN or Inf entries")
    norm = one_norm(M)
    if norm > OVERFLOW_NORM:
        raise ExpmOverflow(f"|M|_1 = {norm:.3e} exceeds {OVERFLOW_NORM:.0e}")
    s = max(0, math.ceil(math.log2(norm / SCALE_NORM))) if norm > SCALE_NORM else 0
    X = M / (2 ** s)
    eye = np.eye(M.shape[0], dtype=complex)
    E = eye.copy()
    # Horner: I + X/1 (I + X/2 (I + ... X/12))
    for k in range(TAYLOR_ORDER, 0, -1):
        E = eye + (X @ E) / k
    for _ in range(s):
        E = E @ E
    return E


@dataclass(frozen=True)
class TimeGrid:
    """Partizione uniforme t0 = t'_0 < ... < t'_n = t1."""
    t0: float
    t1: float
    n: int

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise ConfigError(f"time grid needs t1 > t0, got [{self.t0!r}, {self.t1!r}]")
        if self.n < 1:
            raise ConfigError(f"time grid needs n >= 1 steps, got {self.n!r}")

    @property
    def dt(self) -> float:
        return (self.t1 - self.t0) / self.n

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.t0, self.t1, self.n + 1)

    def __len__(self) -> int:
        return self.n + 1


@dataclass(frozen=True)
class Propagator:
    mat: ProcessMatrix
    grid: TimeGrid
    direction: str  # "forward" | "inverse"


def time_split_forward(Lsrc: GeneratorSource, grid: TimeGrid) -> Propagator:
    """prod_{j=n-1..0} exp(L(t'_j) dt), i tempi successivi a sinistra."""
    P = None
    for t in grid.points[:-1]:
        step = expm(np.asarray(Lsrc(float(t))) * grid.dt)
        P = step if P is None else step @ P
    return Propagator(ProcessMatrix(P), grid, "forward")


def time_split_inverse(Lsrc: GeneratorSource, grid: TimeGrid) -> Propagator:
    """prod_{j=0..n-1} exp(-L(t'_j) dt); annulla time_split_forward fattore per fattore."""
    P = None
    for t in grid.points[:-1]:
        step = expm(-np.asarray(Lsrc(float(t))) * grid.dt)
        P = step if P is None else P @ step
    return Propagator(ProcessMatrix(P), grid, "inverse")


def _trace_integral(Lsrc: GeneratorSource, s: float, t: float, n: int) -> complex:
    n += n % 2  # Simpson composita vuole un numero pari di intervalli
    us = np.linspace(s, t, n + 1)
    traces = np.array([np.trace(np.asarray(Lsrc(float(u)))) for u in us], dtype=complex)
    return complex(simpson(traces.real, x=us), simpson(traces.imag, x=us))


def ajl_check(source: Union[MapFamily, GeneratorSource], t: float, s: float,
              n: int = 64, t0: float = 0.0) -> float:
    """Residuo relativo di det Phi(t) = det Phi(s) exp(int_s^t tr L(u) du).

    Con una MapFamily i determinanti vengono dalla famiglia in forma chiusa e le
    tracce dal suo Liouvilliano analitico; con un semplice fornitore di generatori
    entrambi vengono da time_split_forward su [t0, .] con n passi. Un residuo
    piccolo e compatibile col generatore, non lo dimostra.
    """
    if t == s:
        return 0.0
    if s > t:
        raise ConfigError(f"ajl_check needs s <= t, got s={s!r}, t={t!r}")
    if isinstance(source, MapFamily):
        gen = functools.partial(analytic_liouvillian, source)

        def phi(u):
            return eval_family(source, u).mat
    else:
        gen = source

        def phi(u):
            if u == t0:
                L0 = np.asarray(gen(t0))
                return np.eye(L0.shape[0], dtype=complex)
            return time_split_forward(gen, TimeGrid(t0, u, n)).mat.mat

    det_t = determinant(phi(t))
    if abs(det_t) == 0.0:
        raise SingularMap(0.0)
    det_s = determinant(phi(s))
    integral = _trace_integral(gen, s, t, n)
    residual = abs(det_t - det_s * np.exp(integral)) / abs(det_t)
    log.debug("ajl s=%g t=%g det_t=%s residual=%.3e", s, t, det_t, residual)
    return float(residual)
