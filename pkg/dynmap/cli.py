"""Riga di comando di dynmap: classify | scan | tomo | export-model.

I valori si risolvono in ordine: default di config.py (ambiente), file JSON --config,
flag espliciti. Exit code: 0 ok, 2 errore di configurazione, 3 errore numerico.
"""
import argparse
import dataclasses
import json
import logging
import sys
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

import config
from . import formatter
from .errors import ConfigError, DomainError, DynmapError
from .models import MODELS, MapFamily, analytic_liouvillian, eval_family, make_family
from .propagate import TimeGrid
from .superop import matrix_from_json, matrix_to_json, reshuffle
from .tomography import invertibility_verdict, reconstruct_process, simulate_outputs
from .witness import (
    ToleranceConfig,
    blp_scan,
    classify,
    cp_divisibility_scan,
    invertibility_scan,
    rate_scan,
    smoothness_probe,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

SCANS = ("invertibility", "cpdiv", "blp", "smoothness", "rates")

# flag -> parametro del modello
PARAM_FLAGS = {"gamma": "gamma", "a": "a", "r": "r", "tstar": "tstar", "lambda": "lam",
               "preset": "preset", "dim": "dim"}
REQUIRED_PARAMS = {
    "amplitude-damping": ("gamma",),
    "mixed-pauli": ("a", "r"),
    "semigroup": ("L",),
}
CONFIG_KEYS = {"model", "params", "t_min", "t_max", "steps", "pairwise_steps", "seed", "threads",
               "tolerances", "t", "noise", "out", "which"}


@dataclass(frozen=True)
class RunConfig:
    command: str
    model: str
    params: Dict = field(default_factory=dict)
    t_min: float = 0.0
    t_max: Optional[float] = None
    steps: int = config.STEPS
    pairwise_steps: int = config.PAIRWISE_STEPS
    tolerances: ToleranceConfig = field(default_factory=ToleranceConfig)
    seed: int = config.SEED
    threads: int = config.THREADS
    which: Optional[str] = None
    t: Optional[float] = None
    noise: float = 0.0
    out: Optional[str] = None

    def family(self) -> MapFamily:
        params = dict(self.params)
        if "L" in params:
            params["L"] = matrix_from_json(params["L"]) if isinstance(params["L"], dict) else np.asarray(params["L"])
        f = make_family(self.model, t_max=self.t_max, **params)
        if self.t_min < f.t_min or self.t_min >= f.t_max:
            raise ConfigError(f"t_min {self.t_min!r} outside the domain [{f.t_min!r}, {f.t_max!r})")
        return f

    def grid(self, f: MapFamily, pairwise: bool = False) -> TimeGrid:
        return TimeGrid(self.t_min, f.t_max, self.pairwise_steps if pairwise else self.steps)

    def echo(self, f: MapFamily) -> Dict:
        """Configurazione risolta, default compresi."""
        params = {k: v for k, v in dataclasses.asdict(f.params).items() if k != "L"}
        if "L" in self.params:
            params["L"] = matrix_to_json(f.params.L, dim=f.dim)
        out = {
            "command": self.command,
            "model": self.model,
            "params": params,
            "grid": {"t_min": self.t_min, "t_max": f.t_max, "n": self.steps},
            "tolerances": dataclasses.asdict(self.tolerances),
            "seed": self.seed,
            "threads": self.threads,
        }
        if self.command == "scan":
            out["which"] = self.which
            if self.which == "cpdiv":
                out["grid"]["n"] = self.pairwise_steps
        if self.command in ("tomo", "export-model"):
            out["t"] = self.t
        if self.command == "tomo":
            out["noise"] = self.noise
        return out


def _load_config_file(path: str) -> Dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    return data


def _cast(kind, value, name: str):
    # 3.0 vale come numero di passi, "3" no
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    if kind is int:
        if value != int(value):
            raise ConfigError(f"{name} must be an integer, got {value!r}")
        return int(value)
    return float(value)


def resolve_config(args: argparse.Namespace) -> RunConfig:
    data = _load_config_file(args.config) if args.config else {}
    params = dict(data.get("params") or {})
    for flag, name in PARAM_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            params[name] = value

    model = args.model or data.get("model")
    if not model:
        raise ConfigError("--model is required")
    if model not in MODELS:
        raise ConfigError(f"unknown model {model!r} (choose from {sorted(MODELS)})")
    missing = [p for p in REQUIRED_PARAMS.get(model, ()) if p not in params]
    if missing:
        raise ConfigError(f"model {model} needs parameters {missing}")

    def pick(flag, key=None, default=None, cast=None):
        value = getattr(args, flag, None)
        if value is None:
            value = data.get(key or flag, default)
        if cast is None or value is None:
            return value
        return _cast(cast, value, key or flag)

    tol_data = data.get("tolerances") or {}
    if not isinstance(tol_data, dict):
        raise ConfigError("tolerances must be a JSON object")
    try:
        tolerances = ToleranceConfig.from_env(**tol_data)
    except TypeError as e:
        raise ConfigError(f"bad tolerances: {e}") from e

    which = pick("which")
    if args.command == "scan" and which not in SCANS:
        raise ConfigError(f"scan needs one of {list(SCANS)}, got {which!r}")

    steps_flag = getattr(args, "steps", None)
    cfg = RunConfig(
        command=args.command,
        model=model,
        params=params,
        t_min=pick("t_min", default=0.0, cast=float),
        t_max=pick("t_max", cast=float),
        steps=pick("steps", default=config.STEPS, cast=int),
        # --steps esplicito dimensiona anche la griglia pairwise
        pairwise_steps=_cast(int, steps_flag if steps_flag is not None
                             else data.get("pairwise_steps", config.PAIRWISE_STEPS), "pairwise_steps"),
        tolerances=tolerances,
        seed=pick("seed", default=config.SEED, cast=int),
        threads=pick("threads", default=config.THREADS, cast=int),
        which=which,
        t=pick("t", cast=float),
        noise=pick("noise", default=0.0, cast=float),
        out=pick("out"),
    )
    if cfg.threads < 0:
        raise ConfigError(f"threads must be >= 0, got {cfg.threads}")
    if cfg.command in ("tomo", "export-model") and cfg.t is None:
        raise ConfigError(f"{cfg.command} needs --t")
    return cfg


def _emit(text: str, out: Optional[str]):
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        log.info("report written to %s", out)
    else:
        sys.stdout.write(text)


# ----- Comandi -----

def cmd_classify(cfg: RunConfig) -> int:
    f = cfg.family()
    verdict = classify(f, cfg.grid(f), cfg.tolerances, cfg.threads)
    _emit(verdict.to_json(cfg.echo(f)), cfg.out)
    return EXIT_OK


def cmd_scan(cfg: RunConfig) -> int:
    f = cfg.family()
    which = cfg.which
    if which == "blp":
        text = blp_scan(f, cfg.grid(f), tol=cfg.tolerances).to_csv()
    elif which == "cpdiv":
        text = cp_divisibility_scan(f, cfg.grid(f, pairwise=True), cfg.tolerances, cfg.threads).to_csv()
    else:
        scan = {"invertibility": invertibility_scan, "smoothness": smoothness_probe, "rates": rate_scan}[which]
        text = scan(f, cfg.grid(f), cfg.tolerances, cfg.threads).to_csv()
    _emit(text, cfg.out)
    return EXIT_OK


def cmd_tomo(cfg: RunConfig) -> int:
    f = cfg.family()
    run = simulate_outputs(f, float(cfg.t), noise_sigma=cfg.noise, seed=cfg.seed)
    A_rec = reconstruct_process(run)
    verdict = invertibility_verdict(A_rec, cfg.noise, cfg.tolerances.sv_threshold)
    _emit(formatter.dumps(formatter.tomography_payload(A_rec, verdict, cfg.echo(f))), cfg.out)
    return EXIT_OK


def cmd_export_model(cfg: RunConfig) -> int:
    f = cfg.family()
    t = float(cfg.t)
    A = eval_family(f, t)
    payload = {
        "model": f.name,
        "t": t,
        "process": matrix_to_json(A),
        "dynamical": matrix_to_json(reshuffle(A)),
        "liouvillian": None,
        "config_echo": cfg.echo(f),
    }
    try:
        payload["liouvillian"] = matrix_to_json(analytic_liouvillian(f, t), dim=f.dim)
    except DynmapError as e:
        log.warning("no Liouvillian at t=%g: %s", t, e)
    _emit(formatter.dumps(payload), cfg.out)
    return EXIT_OK


COMMANDS = {
    "classify": cmd_classify,
    "scan": cmd_scan,
    "tomo": cmd_tomo,
    "export-model": cmd_export_model,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dynmap", description="Classify time-parametrized quantum dynamical maps.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="configurazione JSON; i flag hanno la precedenza")
    common.add_argument("--model", choices=sorted(MODELS))
    common.add_argument("--gamma", type=float)
    common.add_argument("--a", type=float)
    common.add_argument("--r", type=float)
    common.add_argument("--tstar", type=float)
    common.add_argument("--lambda", dest="lambda", type=float)
    common.add_argument("--preset")
    common.add_argument("--dim", type=int)
    common.add_argument("--t-min", dest="t_min", type=float)
    common.add_argument("--t-max", dest="t_max", type=float)
    common.add_argument("--steps", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int, help="thread di lavoro (0 = tutti i core)")
    common.add_argument("--out", help="file di output (default: stdout)")
    common.add_argument("--log-level", dest="log_level")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("classify", parents=[common], help="verdetto sulle quattro regioni in JSON")
    scan = sub.add_parser("scan", parents=[common], help="scan dei testimoni in CSV")
    scan.add_argument("which", nargs="?", choices=SCANS)
    tomo = sub.add_parser("tomo", parents=[common], help="verdetto di invertibilita da tomografia simulata")
    tomo.add_argument("--t", type=float)
    tomo.add_argument("--noise", type=float)
    export = sub.add_parser("export-model", parents=[common], help="matrici di processo, dinamica e generatore al tempo t")
    export.add_argument("--t", type=float)
    return parser


def setup_logging(level: str = None):
    level = (level or config.LOG_LEVEL).upper()
    logging.basicConfig(stream=sys.stderr, format="[%(name)s] %(message)s",
                        level=getattr(logging, level, logging.WARNING), force=True)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    try:
        cfg = resolve_config(args)
        return COMMANDS[cfg.command](cfg)
    except (ConfigError, DomainError) as e:
        print(f"[ERROR] {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (DynmapError, np.linalg.LinAlgError) as e:
        print(f"[ERROR] {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
