"""Tomografia di stato simulata e ricostruzione del processo per inversione lineare.

La famiglia viene sondata con un insieme di stati d'ingresso informazionalmente completo,
gli output sono (opzionalmente) sporcati con rumore gaussiano con seed sulle componenti
di Bloch, e A si ricava come S_out S_in^-1. Il verdetto di invertibilita ha una fascia
inconcludente dimensionata sul livello di rumore.
"""
import json
import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import linalg as sla

from .errors import ConfigError
from .models import MapFamily, eval_family
from .superop import (
    SV_THRESHOLD,
    DensityMatrix,
    ProcessMatrix,
    apply,
    hermitian_basis,
    matrix_from_json,
    matrix_to_json,
    pure_state,
    singular_values,
    vectorize,
)

log = logging.getLogger(__name__)

MIN_STACK_SV = 1e-6

INVERTIBLE = "invertible"
NON_INVERTIBLE = "non_invertible"
INCONCLUSIVE = "inconclusive"


def _stack(states) -> np.ndarray:
    return np.column_stack([vectorize(s) for s in states])


@dataclass(frozen=True, eq=False)
class ProbeSet:
    states: Tuple[DensityMatrix, ...]

    def __post_init__(self):
        states = tuple(self.states)
        if not states:
            raise ConfigError("empty probe set")
        d = states[0].dim
        if any(s.dim != d for s in states):
            raise ConfigError("probe states of mixed dimension")
        if len(states) != d * d:
            raise ConfigError(f"a d={d} probe set needs {d * d} states, got {len(states)}")
        low = singular_values(_stack(states)).min
        if low <= MIN_STACK_SV:
            raise ConfigError(f"probe set is not informationally complete (stack min_sv {low:.3e})")
        object.__setattr__(self, "states", states)

    @property
    def dim(self) -> int:
        return self.states[0].dim

    @property
    def stack(self) -> np.ndarray:
        return _stack(self.states)

    def __len__(self) -> int:
        return len(self.states)


def default_probes(d: int = 2) -> ProbeSet:
    """|0>, |1>, |+>, |+i>."""
    if d != 2:
        raise ConfigError(f"no built-in probe set for d={d}; pass a ProbeSet")
    r = 1 / math.sqrt(2)
    kets = ([1, 0], [0, 1], [r, r], [r, 1j * r])
    return ProbeSet(tuple(pure_state(k) for k in kets))


@dataclass(frozen=True, eq=False)
class TomographyRun:
    probes: ProbeSet
    t: float
    outputs: Tuple[DensityMatrix, ...]
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if len(self.outputs) != len(self.probes):
            raise ConfigError(f"{len(self.outputs)} outputs for {len(self.probes)} probes")
        if not self.noise_sigma >= 0:
            raise ConfigError(f"noise_sigma must be >= 0, got {self.noise_sigma!r}")

    def to_json(self) -> str:
        payload = {
            "t": float(self.t),
            "noise_sigma": float(self.noise_sigma),
            "seed": int(self.seed),
            "probes": [matrix_to_json(s.mat) for s in self.probes.states],
            "outputs": [matrix_to_json(s.mat) for s in self.outputs],
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "TomographyRun":
        try:
            obj = json.loads(text)
            probes = ProbeSet(tuple(DensityMatrix(matrix_from_json(m)) for m in obj["probes"]))
            outputs = tuple(DensityMatrix(matrix_from_json(m), require_psd=False) for m in obj["outputs"])
            return cls(probes, float(obj["t"]), outputs, float(obj["noise_sigma"]), int(obj["seed"]))
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"malformed tomography run: {e}") from e


def _clean_state(rho: np.ndarray) -> DensityMatrix:
    rho = (rho + rho.conj().T) / 2
    return DensityMatrix(rho / np.trace(rho).real, require_psd=False)


def simulate_outputs(f: MapFamily, t: float, probes: ProbeSet = None,
                     noise_sigma: float = 0.0, seed: int = 0) -> TomographyRun:
    """Phi(t)[rho] per ogni sonda, con ogni componente di Bloch generalizzata sporcata da N(0, noise_sigma)."""
    probes = probes or default_probes(f.dim)
    if not noise_sigma >= 0:
        raise ConfigError(f"noise_sigma must be >= 0, got {noise_sigma!r}")
    if probes.dim != f.dim:
        raise ConfigError(f"d={probes.dim} probes for a d={f.dim} family")
    A = eval_family(f, t)
    rng = np.random.default_rng(seed)
    # matrici di Gell-Mann (tr l^2 = 2); rho = I/d + sum_k b_k l_k / 2
    gell_mann = [math.sqrt(2) * F for F in hermitian_basis(f.dim)[1:]]
    outputs = []
    for probe in probes.states:
        rho = apply(A, probe)
        if noise_sigma > 0:
            kicks = rng.normal(0.0, noise_sigma, size=len(gell_mann))
            rho = rho + sum(n * lam for n, lam in zip(kicks, gell_mann)) / 2
        outputs.append(_clean_state(rho))
    log.debug("simulated %d outputs of %s at t=%g (sigma=%g, seed=%d)", len(outputs), f.name, t, noise_sigma, seed)
    return TomographyRun(probes, float(t), tuple(outputs), float(noise_sigma), int(seed))


def reconstruct_process(run: TomographyRun) -> ProcessMatrix:
    """A_rec = S_out S_in^-1."""
    S_in = run.probes.stack
    S_out = _stack(run.outputs)
    # A S_in = S_out  <=>  S_in^T A^T = S_out^T
    return ProcessMatrix(sla.solve(S_in.T, S_out.T).T)


@dataclass(frozen=True)
class InvertibilityVerdict:
    verdict: str
    margin: float  # minimo valore singolare di A_rec
    tau_low: float
    tau_high: float


def verdict_thresholds(noise_sigma: float, sv_threshold: float = SV_THRESHOLD) -> Tuple[float, float]:
    return max(sv_threshold, 10 * noise_sigma), 100 * noise_sigma + sv_threshold


def invertibility_verdict(A_rec: ProcessMatrix, noise_sigma: float,
                          sv_threshold: float = SV_THRESHOLD) -> InvertibilityVerdict:
    tau_low, tau_high = verdict_thresholds(noise_sigma, sv_threshold)
    min_sv = singular_values(A_rec).min
    if min_sv < tau_low:
        verdict = NON_INVERTIBLE
    elif min_sv > tau_high:
        verdict = INVERTIBLE
    else:
        verdict = INCONCLUSIVE
        log.warning("invertibility inconclusive: min_sv %.3e inside [%.3e, %.3e]", min_sv, tau_low, tau_high)
    return InvertibilityVerdict(verdict, min_sv, tau_low, tau_high)

