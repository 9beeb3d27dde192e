"""Rendering dei report: CSV degli scan e verdetti JSON.

Output deterministico byte per byte: float via repr, punto decimale, chiavi JSON ordinate.
"""
import io
import json
import math

from .superop import matrix_to_json

SCAN_COLUMNS = (
    "t", "min_sv", "abs_det", "min_choi_eig", "min_intermediate_choi_eig",
    "min_rate", "generator_norm", "flags",
)
BLP_COLUMNS = ("t", "trace_distance", "derivative", "flags")


def format_float(x):
    """repr del float; stringa vuota se il valore manca."""
    if x is None:
        return ""
    return repr(float(x))


def _json_float(x):
    # niente NaN/Inf in JSON
    if x is None or not math.isfinite(x):
        return None
    return float(x)


def _csv(header, rows):
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def scan_to_csv(report):
    rows = []
    for r in report.records:
        rows.append([format_float(getattr(r, col)) for col in SCAN_COLUMNS[:-1]] + [";".join(r.flags)])
    return _csv(SCAN_COLUMNS, rows)


def blp_to_csv(series):
    rows = []
    for t, dist, deriv in zip(series.times, series.distances, series.derivatives):
        flag = "backflow" if deriv is not None and deriv > series.threshold else ""
        rows.append([format_float(t), format_float(dist), format_float(deriv), flag])
    return _csv(BLP_COLUMNS, rows)


def evidence_to_json(evidence):
    return [{"t": _json_float(e.t), "witness": e.witness, "value": _json_float(e.value)} for e in evidence]


def classification_payload(classification, config_echo=None):
    payload = {
        "region": classification.region,
        "evidence": evidence_to_json(classification.evidence),
    }
    if config_echo is not None:
        payload["config_echo"] = config_echo
    return payload


def tomography_payload(A_rec, verdict, config_echo=None):
    payload = {
        "A_rec": matrix_to_json(A_rec),
        "min_sv": _json_float(verdict.margin),
        "verdict": verdict.verdict,
        "thresholds": {"low": verdict.tau_low, "high": verdict.tau_high},
    }
    if config_echo is not None:
        payload["config_echo"] = config_echo
    return payload


def dumps(payload):
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n"
