"""JSON and CSV interchange.

Floats are written with 17 significant digits so that every 64-bit value
survives a round trip. Complex numbers are ``[re, im]`` pairs and matrices
are row-major nested lists.
"""
import json
import math
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, NonFinite
from .games import NonlocalGame
from .strategy import BipartiteState, MeasurementFamily, Strategy, validate


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise NonFinite(f"cannot serialize non-finite value {x!r}")
    text = format(x, ".17g")
    if text.lstrip("-").isdigit():
        text += ".0"
    return text


def dumps(obj, indent: int = 1, _level: int = 0) -> str:
    """Deterministic JSON text with 17-significant-digit floats."""
    pad = "\n" + " " * (indent * (_level + 1))
    close = "\n" + " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        if _level >= 1:
            items = (f"{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items())
            return "{" + ", ".join(items) + "}"
        items = (f"{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items())
        return "{" + pad + ("," + pad).join(items) + close + "}"
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist(), indent, _level)
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return f"[{_fmt_float(obj.real)}, {_fmt_float(obj.imag)}]"
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_json(obj, path) -> None:
    Path(path).write_text(dumps(obj) + "\n", encoding="utf-8")


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _complex_array(data, what: str) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 0 or arr.shape[-1] != 2:
        raise DimensionMismatch(f"{what}: complex entries must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def _complex_list(arr: np.ndarray):
    arr = np.asarray(arr, dtype=np.complex128)
    return np.stack([arr.real, arr.imag], axis=-1)


# -- games ------------------------------------------------------------------------------


def game_to_dict(g: NonlocalGame) -> dict:
    return {
        "x_labels": list(g.x_labels),
        "y_labels": list(g.y_labels),
        "a_labels": list(g.a_labels),
        "b_labels": list(g.b_labels),
        "nu": g.nu,
        "d": g.predicate.astype(int),
    }


def game_from_dict(data: dict) -> NonlocalGame:
    try:
        return NonlocalGame(
            data["x_labels"], data["y_labels"], data["a_labels"], data["b_labels"],
            np.asarray(data["nu"], dtype=np.float64), np.asarray(data["d"]),
        )
    except KeyError as exc:
        raise DimensionMismatch(f"game JSON lacks field {exc.args[0]!r}") from None


# -- strategies ---------------------------------------------------------------------------


def _family_to_dict(fam: MeasurementFamily) -> dict:
    return {str(x): [_complex_list(e) for e in q] for x, q in zip(fam.questions, fam.elements)}


def _family_from_dict(data: dict, d: int, side: str) -> MeasurementFamily:
    if not data:
        raise DimensionMismatch(f"{side} has no questions")
    questions = tuple(data)
    elems = np.stack([_complex_array(data[x], f"{side}[{x}]") for x in questions])
    if elems.ndim != 4 or elems.shape[-2:] != (d, d):
        raise DimensionMismatch(f"{side} matrices must be {d}x{d}")
    kind = "projective" if all(not validate(q, "projective").flags for q in elems) else "general"
    return MeasurementFamily(questions, tuple(range(elems.shape[1])), elems, kind)


def strategy_to_dict(s: Strategy) -> dict:
    return {
        "d_a": s.state.d_a,
        "d_b": s.state.d_b,
        "state": _complex_list(s.state.amplitudes),
        "alice": _family_to_dict(s.alice),
        "bob": _family_to_dict(s.bob),
    }


def strategy_from_dict(data: dict) -> Strategy:
    try:
        d_a, d_b = int(data["d_a"]), int(data["d_b"])
        amps = _complex_array(data["state"], "state")
        state = BipartiteState(d_a, d_b, amps)
        alice = _family_from_dict(data["alice"], d_a, "alice")
        bob = _family_from_dict(data["bob"], d_b, "bob")
    except KeyError as exc:
        raise DimensionMismatch(f"strategy JSON lacks field {exc.args[0]!r}") from None
    return Strategy(state, alice, bob)


# -- reports ------------------------------------------------------------------------------


def decomposition_report(decomposition, per_step_values=None, rng: str = None, extra: dict = None) -> dict:
    """Weights, ranks, diagnostics and the per-step value table of a decomposition."""
    report = {
        "weights": decomposition.weights,
        "ranks": decomposition.ranks,
        "breakpoints": decomposition.ladder.breakpoints,
        "diagnostics": decomposition.diagnostics.to_dict(),
        "per_step_values": None if per_step_values is None else list(map(float, per_step_values)),
    }
    if rng is not None:
        report["rng"] = rng
    if extra:
        report.update(extra)
    return report


def sweep_csv(result) -> str:
    """CSV text for a sweep: header, one row per level, one ``# fit`` footer per fitted curve."""
    header = result.rows[0].header() if result.rows else []
    lines = [",".join(header)]
    for row in result.rows:
        lines.append(",".join(format(v, ".17g") for v in row.values()))
    for fit in result.fits:
        lines.append(f"# fit c={fit.c:.17g} C={fit.C:.17g} curve={fit.curve}")
    lines.append(f"# rng={result.rng} seed={result.config.seed}")
    return "\n".join(lines) + "\n"


def write_sweep_csv(result, path) -> None:
    Path(path).write_text(sweep_csv(result), encoding="utf-8")
