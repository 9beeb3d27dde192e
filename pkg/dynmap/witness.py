"""Testimoni di markovianita su una griglia temporale.

- invertibility_scan: minimo valore singolare e determinante di Phi(t, 0)
- cp_divisibility_scan: positivita di ogni mappa intermedia Phi(t, s), s < t
- extract_liouvillian_fd + lindblad_decompose: generatore time-local e i suoi
  rate canonici
- blp_scan: distanza di traccia di una coppia fissa di stati
- smoothness_probe: spigoli, generatori che esplodono, zeri del determinante
- classify: verdetto sulle quattro regioni (MarkovRHP, NonMarkovInvertible,
  NonInvertible, NonCClass)

Gli scan non sollevano mai sui punti singolari: segnano la riga con un flag.
"""
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg as sla

from config import (
    EIG_TOL, FD_STEP, GENERATOR_NORM_CAP, SMOOTHNESS_MISMATCH, SV_THRESHOLD, THREADS,
)
from . import formatter
from .errors import ConfigError, NotHermitian, ResidualTooLarge, SingularMap, StepTooLarge
from .models import MapFamily, eval_family
from .propagate import TimeGrid
from .superop import (
    DensityMatrix,
    ProcessMatrix,
    apply,
    dissipator_superop,
    hamiltonian_superop,
    hermitian_basis,
    hermitian_eigenvalues,
    invert,
    max_norm,
    min_singular_value_and_det,
    pure_state,
    reshuffle_matrix,
)

log = logging.getLogger(__name__)

# Flag
NI = "NI"
DET_SIGN_CHANGE = "det_sign_change"
SKIPPED_PAIRS = "skipped_pairs"
NOT_CP = "not_cp"
NEGATIVE_RATE = "negative_rate"
FD_MISMATCH = "fd_mismatch"
GENERATOR_NORM = "generator_norm"
INITIAL_NOT_IDENTITY = "initial_not_identity"
BACKFLOW = "backflow"
COARSE_STEP = "coarse_step"

MAX_EVIDENCE = 16
EPS = float(np.finfo(float).eps)

REGIONS = ("MarkovRHP", "NonMarkovInvertible", "NonInvertible", "NonCClass")


@dataclass(frozen=True)
class ToleranceConfig:
    eig_tol: float = EIG_TOL
    sv_threshold: float = SV_THRESHOLD
    fd_step: float = FD_STEP
    generator_norm_cap: float = GENERATOR_NORM_CAP
    smoothness_mismatch: float = SMOOTHNESS_MISMATCH

    def __post_init__(self):
        for name in ("eig_tol", "sv_threshold", "fd_step", "generator_norm_cap", "smoothness_mismatch"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ConfigError(f"tolerance {name} must be > 0, got {value!r}")

    @classmethod
    def from_env(cls, **overrides) -> "ToleranceConfig":
        return replace(cls(), **{k: v for k, v in overrides.items() if v is not None})

    def rate_floor(self, rates: Sequence[float]) -> float:
        """Rate piu negativo ancora contato come non negativo.

        Il termine h^2 copre l'errore di troncamento del generatore alle differenze centrali.
        """
        m = max([1.0] + [abs(r) for r in rates])
        return -(self.eig_tol * m + self.fd_step ** 2 * m ** 3)


@dataclass(frozen=True)
class ScanRecord:
    t: float
    min_sv: Optional[float] = None
    abs_det: Optional[float] = None
    min_choi_eig: Optional[float] = None
    min_intermediate_choi_eig: Optional[float] = None
    min_rate: Optional[float] = None
    generator_norm: Optional[float] = None
    flags: Tuple[str, ...] = ()


@dataclass(frozen=True)
class ScanReport:
    kind: str
    grid: TimeGrid
    records: Tuple[ScanRecord, ...]

    def flagged(self, flag: str) -> List[float]:
        return [r.t for r in self.records if flag in r.flags]

    def column(self, name: str) -> List[Optional[float]]:
        return [getattr(r, name) for r in self.records]

    @property
    def any_flags(self) -> bool:
        return any(r.flags for r in self.records)

    def min_of(self, name: str) -> Optional[float]:
        vals = [v for v in self.column(name) if v is not None]
        return min(vals) if vals else None

    def to_csv(self) -> str:
        return formatter.scan_to_csv(self)


@dataclass(frozen=True)
class Evidence:
    t: float
    witness: str
    value: float


@dataclass(frozen=True)
class Classification:
    region: str
    evidence: Tuple[Evidence, ...]

    def to_json(self, config_echo: dict = None) -> str:
        return formatter.dumps(formatter.classification_payload(self, config_echo))


@dataclass(frozen=True)
class LindbladForm:
    H: np.ndarray
    rates: Tuple[float, ...]
    lindblad_ops: Tuple[np.ndarray, ...]
    residual: float = 0.0

    def rebuild(self) -> np.ndarray:
        return rebuild_liouvillian(self.H, self.rates, self.lindblad_ops)


@dataclass(frozen=True)
class BLPSeries:
    times: Tuple[float, ...]
    distances: Tuple[float, ...]
    derivatives: Tuple[Optional[float], ...]
    backflow: bool
    threshold: float = 0.0

    def to_csv(self) -> str:
        return formatter.blp_to_csv(self)


# ----- Helper -----

def resolve_threads(threads: Optional[int]) -> int:
    n = THREADS if threads is None else threads
    return n if n and n > 0 else (os.cpu_count() or 1)


def _map_ordered(fn: Callable, items: Iterable, threads: Optional[int]) -> list:
    items = list(items)
    workers = min(resolve_threads(threads), max(1, len(items)))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _evaluate(f: MapFamily, grid: TimeGrid, threads: Optional[int]) -> List[ProcessMatrix]:
    return _map_ordered(lambda t: eval_family(f, float(t)), grid.points, threads)


def _det_sign_changes(dets: Sequence[complex]) -> set:
    """Indici ai due lati di un cambio di segno stretto del determinante (reale)."""
    idx = set()
    for k in range(len(dets) - 1):
        if dets[k].real * dets[k + 1].real < 0:
            idx.update((k, k + 1))
    return idx


# ----- Invertibilita -----

def invertibility_scan(f: MapFamily, grid: TimeGrid, tol: ToleranceConfig = None,
                       threads: Optional[int] = None) -> ScanReport:
    tol = tol or ToleranceConfig()
    mats = _evaluate(f, grid, threads)
    stats = _map_ordered(min_singular_value_and_det, mats, threads)
    crossings = _det_sign_changes([det for _, _, det in stats])
    records = []
    for k, (t, (min_sv, max_sv, det)) in enumerate(zip(grid.points, stats)):
        flags = []
        if max_sv == 0.0 or min_sv <= tol.sv_threshold * max_sv:
            flags.append(NI)
        if k in crossings:
            flags.append(DET_SIGN_CHANGE)
        records.append(ScanRecord(t=float(t), min_sv=min_sv, abs_det=abs(det), flags=tuple(flags)))
    report = ScanReport("invertibility", grid, tuple(records))
    log.info("invertibility scan of %s: %d points, %d NI", f.name, len(records), len(report.flagged(NI)))
    return report


# ----- CP-divisibilita -----

def _min_choi_eig(mat: np.ndarray) -> float:
    return hermitian_eigenvalues(reshuffle_matrix(mat), tol=1e-6).min


def cp_divisibility_scan(f: MapFamily, grid: TimeGrid, tol: ToleranceConfig = None,
                         threads: Optional[int] = None) -> ScanReport:
    """Minimo autovalore della matrice dinamica di Phi(t, s) su tutte le coppie s < t della griglia."""
    tol = tol or ToleranceConfig()
    mats = _evaluate(f, grid, threads)

    def _inverse(A):
        try:
            return invert(A, tol.sv_threshold).mat
        except SingularMap:
            return None

    inverses = _map_ordered(_inverse, mats, threads)

    def _row(k):
        A_t = mats[k].mat
        min_choi = _min_choi_eig(A_t)
        lowest, skipped = None, 0
        for j in range(k):
            if inverses[j] is None:
                skipped += 1
                continue
            try:
                eig = _min_choi_eig(A_t @ inverses[j])
            except NotHermitian:
                skipped += 1
                continue
            lowest = eig if lowest is None else min(lowest, eig)
        flags = []
        if skipped:
            flags.append(SKIPPED_PAIRS)
            log.debug("t=%g: %d pairs skipped (singular Phi(s))", grid.points[k], skipped)
        if lowest is not None and lowest < -tol.eig_tol:
            flags.append(NOT_CP)
        return ScanRecord(t=float(grid.points[k]), min_choi_eig=min_choi,
                          min_intermediate_choi_eig=lowest, flags=tuple(flags))

    records = tuple(_map_ordered(_row, range(len(mats)), threads))
    report = ScanReport("cpdiv", grid, records)
    skipped = report.flagged(SKIPPED_PAIRS)
    if skipped:
        log.warning("cp-divisibility scan of %s skipped pairs at %d points", f.name, len(skipped))
    log.info("cp-divisibility scan of %s: min intermediate eig %s", f.name,
             report.min_of("min_intermediate_choi_eig"))
    return report


def is_cp_divisible(report: ScanReport, tol: ToleranceConfig = None) -> bool:
    tol = tol or ToleranceConfig()
    lowest = report.min_of("min_intermediate_choi_eig")
    return lowest is None or lowest >= -tol.eig_tol


# ----- Estrazione del generatore -----

def extract_liouvillian_fd(f: MapFamily, t: float, h: float = None,
                           tol: ToleranceConfig = None) -> np.ndarray:
    """L_t = (dA/dt) A(t)^-1 con differenze del secondo ordine.

    Differenze centrali quando t +- h sta nel dominio, stencil unilaterali del
    secondo ordine ai bordi.
    """
    tol = tol or ToleranceConfig()
    h = tol.fd_step if h is None else h
    if h <= 0 or 2 * h >= f.t_max - f.t_min:
        raise StepTooLarge(f"step h={h!r} does not fit the domain [{f.t_min!r}, {f.t_max!r}]")

    def A(u):
        return eval_family(f, u).mat

    if t - h >= f.t_min and t + h <= f.t_max:
        dA = (A(t + h) - A(t - h)) / (2 * h)
    elif t + 2 * h <= f.t_max:
        log.debug("t=%g: forward one-sided stencil", t)
        dA = (-3 * A(t) + 4 * A(t + h) - A(t + 2 * h)) / (2 * h)
    elif t - 2 * h >= f.t_min:
        log.debug("t=%g: backward one-sided stencil", t)
        dA = (3 * A(t) - 4 * A(t - h) + A(t - 2 * h)) / (2 * h)
    else:
        raise StepTooLarge(f"no stencil of step {h!r} fits around t={t!r}")
    return dA @ invert(eval_family(f, t), tol.sv_threshold).mat


# ----- Forma canonica (GKSL) -----

def rebuild_liouvillian(H: np.ndarray, rates: Sequence[float], ops: Sequence[np.ndarray]) -> np.ndarray:
    L = hamiltonian_superop(H)
    for rate, op in zip(rates, ops):
        L = L + dissipator_superop(op, rate)
    return L


def lindblad_decompose(L: np.ndarray, d: int, residual_tol: float = 1e-8) -> LindbladForm:
    """Forma canonica -i[H, .] + sum_k g_k (L_k . L_k^dag - 1/2 {L_k^dag L_k, .}).

    Lavora nella base hermitiana ortonormale F_0 = I/sqrt(d), F_1.. a traccia nulla:
    la matrice dinamica di L e sum_jk c_jk |F_j>><<F_k|, H viene dalla colonna c_k0,
    rate e operatori dalla decomposizione spettrale del blocco a traccia nulla c_kl
    (la matrice di Kossakowski). Con rate degeneri gli operatori sono fissati solo
    a meno di un mescolamento unitario.
    """
    L = np.asarray(L, dtype=complex)
    if L.shape != (d * d, d * d):
        raise ConfigError(f"generator of shape {L.shape} does not fit d={d}")
    basis = hermitian_basis(d)
    V = np.column_stack([F.reshape(-1) for F in basis])
    c = V.conj().T @ reshuffle_matrix(L) @ V
    c = (c + c.conj().T) / 2

    G = c[0, 0] / (2 * d) * np.eye(d) + sum(c[k, 0] * basis[k] for k in range(1, d * d)) / math.sqrt(d)
    H = 1j * (G - G.conj().T) / 2

    rates, U = sla.eigh(c[1:, 1:])
    ops = tuple(sum(U[k, m] * basis[k + 1] for k in range(d * d - 1)) for m in range(d * d - 1))
    form = LindbladForm(H=H, rates=tuple(float(g) for g in rates), lindblad_ops=ops)

    residual = max_norm(L - form.rebuild())
    bound = residual_tol * max_norm(L)
    if residual > bound and residual > 1e-14:
        raise ResidualTooLarge(residual, bound)
    return replace(form, residual=residual)


def rate_scan(f: MapFamily, grid: TimeGrid, tol: ToleranceConfig = None,
              threads: Optional[int] = None) -> ScanReport:
    """Rate canonici del generatore alle differenze finite in ogni punto della griglia."""
    tol = tol or ToleranceConfig()

    def _row(t):
        t = float(t)
        flags = ()
        try:
            try:
                L = extract_liouvillian_fd(f, t, tol=tol)
            except StepTooLarge:
                # dominio piu corto dello stencil: il passo piu grande che ci sta sempre
                log.debug("t=%g: fd_step does not fit, using a quarter of the domain", t)
                L = extract_liouvillian_fd(f, t, h=(f.t_max - f.t_min) / 4, tol=tol)
                flags = (COARSE_STEP,)
        except SingularMap:
            return ScanRecord(t=t, flags=(NI,))
        form = lindblad_decompose(L, f.dim)
        low = min(form.rates) if form.rates else 0.0
        if low < tol.rate_floor(form.rates):
            flags += (NEGATIVE_RATE,)
        return ScanRecord(t=t, min_rate=low, generator_norm=max_norm(L), flags=flags)

    report = ScanReport("rates", grid, tuple(_map_ordered(_row, grid.points, threads)))
    log.info("rate scan of %s: min rate %s", f.name, report.min_of("min_rate"))
    return report


# ----- BLP -----

def trace_distance(rho1: np.ndarray, rho2: np.ndarray) -> float:
    return 0.5 * sum(abs(v) for v in hermitian_eigenvalues(np.asarray(rho1) - np.asarray(rho2)).values)


def blp_scan(f: MapFamily, grid: TimeGrid, pair: Tuple[DensityMatrix, DensityMatrix] = None,
             tol: ToleranceConfig = None) -> BLPSeries:
    """Distanza di traccia tra Phi(t)[rho1] e Phi(t)[rho2]; backflow sse cresce piu di eig_tol."""
    tol = tol or ToleranceConfig()
    if pair is None:
        basis = np.eye(f.dim)
        pair = (pure_state(basis[0]), pure_state(basis[1]))
    rho1, rho2 = pair
    times = tuple(float(t) for t in grid.points)
    distances = []
    for t in times:
        A = eval_family(f, t)
        distances.append(trace_distance(apply(A, rho1), apply(A, rho2)))
    derivs = [(distances[k + 1] - distances[k]) / grid.dt for k in range(len(times) - 1)] + [None]
    backflow = any(v is not None and v > tol.eig_tol for v in derivs)
    if backflow:
        log.info("blp scan of %s: information backflow detected", f.name)
    return BLPSeries(times, tuple(distances), tuple(derivs), backflow, tol.eig_tol)


# ----- Regolarita -----

def smoothness_probe(f: MapFamily, grid: TimeGrid, tol: ToleranceConfig = None,
                     threads: Optional[int] = None) -> ScanReport:
    """Segna i punti dove la famiglia esce dal regime regolare (classe C).

    - fd_mismatch: i rapporti incrementali in avanti e all'indietro su un passo di
      griglia differiscono oltre il termine di curvatura dt * A''(t)
    - generator_norm: |L_fd(t)|_max sopra il tetto
    - det_sign_change: det Phi passa per zero tra punti vicini
    - initial_not_identity: Phi(t_min) != I (sulla prima riga)
    """
    tol = tol or ToleranceConfig()
    dt = grid.dt
    h0 = min(tol.fd_step, dt / 4)
    mats = _evaluate(f, grid, threads)
    crossings = _det_sign_changes([min_singular_value_and_det(A)[2] for A in mats])
    start = eval_family(f, f.t_min).mat
    not_identity = max_norm(start - np.eye(start.shape[0])) > 1e-12

    def _row(k):
        t = float(grid.points[k])
        flags = []
        if t - dt >= f.t_min and t + dt <= f.t_max:
            A = mats[k].mat
            fwd = (eval_family(f, t + dt).mat - A) / dt
            bwd = (A - eval_family(f, t - dt).mat) / dt
            # fwd - bwd = dt A'' + O(dt^3) dove la famiglia e liscia; uno spigolo lascia il salto di pendenza
            curv = (eval_family(f, t + h0).mat - 2 * A + eval_family(f, t - h0).mat) / h0 ** 2
            scale = max(max_norm(fwd), max_norm(bwd))
            floor = 16 * EPS * max_norm(A) * (1 / dt + dt / h0 ** 2)
            if scale > 1e-12 and max_norm(fwd - bwd - dt * curv) > tol.smoothness_mismatch * scale + floor:
                flags.append(FD_MISMATCH)
        norm = None
        try:
            norm = max_norm(extract_liouvillian_fd(f, t, tol=tol))
        except (SingularMap, StepTooLarge):
            pass
        if norm is not None and norm > tol.generator_norm_cap:
            flags.append(GENERATOR_NORM)
        if k in crossings:
            flags.append(DET_SIGN_CHANGE)
        if k == 0 and not_identity:
            flags.append(INITIAL_NOT_IDENTITY)
        return ScanRecord(t=t, generator_norm=norm, flags=tuple(flags))

    report = ScanReport("smoothness", grid, tuple(_map_ordered(_row, range(len(mats)), threads)))
    if report.any_flags:
        log.info("smoothness probe of %s: %d flagged points", f.name,
                 sum(1 for r in report.records if r.flags))
    return report


# ----- Classificazione -----

def _evidence(report: ScanReport, flag: str, column: str) -> List[Evidence]:
    out = []
    for r in report.records:
        if flag in r.flags:
            value = getattr(r, column)
            out.append(Evidence(r.t, flag, float("nan") if value is None else float(value)))
    return out[:MAX_EVIDENCE]


def classify(f: MapFamily, grid: TimeGrid, tol: ToleranceConfig = None,
             threads: Optional[int] = None) -> Classification:
    """Precedenza: NonCClass > NonInvertible > test sui rate (MarkovRHP / NonMarkovInvertible)."""
    tol = tol or ToleranceConfig()
    smooth = smoothness_probe(f, grid, tol, threads)
    inv = invertibility_scan(f, grid, tol, threads)
    ni_evidence = _evidence(inv, NI, "min_sv")

    if smooth.any_flags:
        evidence = []
        for flag in (FD_MISMATCH, GENERATOR_NORM, DET_SIGN_CHANGE, INITIAL_NOT_IDENTITY):
            evidence += _evidence(smooth, flag, "generator_norm")
        return _verdict(f, "NonCClass", evidence + ni_evidence)

    if ni_evidence:
        return _verdict(f, "NonInvertible", ni_evidence)

    rates = rate_scan(f, grid, tol, threads)
    negative = _evidence(rates, NEGATIVE_RATE, "min_rate")
    lowest = min((r for r in rates.records if r.min_rate is not None),
                 key=lambda r: (r.min_rate, r.t), default=None)
    summary = [] if lowest is None else [Evidence(lowest.t, "min_rate", float(lowest.min_rate))]
    if negative:
        return _verdict(f, "NonMarkovInvertible", negative + summary)
    return _verdict(f, "MarkovRHP", summary)


def _verdict(f: MapFamily, region: str, evidence: List[Evidence]) -> Classification:
    evidence = sorted(evidence, key=lambda e: (e.t, e.witness))
    log.info("classified %s as %s (%d evidence points)", f.name, region, len(evidence))
    return Classification(region, tuple(evidence))
