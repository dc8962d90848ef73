"""JSON encodings shared by every command.

Complex numbers are ``[re, im]`` pairs, matrices are
``{"dim": n, "entries": [[[re, im], ...], ...]}`` (row by row).  Floats are
written with 17 significant digits so that files round-trip exactly.
"""
from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

from .errors import QDSError
from .operator_core import DensityState
from .semigroup import CPMap, LindbladGenerator
from .spinchain import PopescuTensor


class InputFormatError(QDSError, ValueError):
    """Malformed input; ``field`` points at the offending location."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def _require(obj, key, where):
    if not isinstance(obj, dict):
        raise InputFormatError(where, "expected an object")
    if key not in obj:
        raise InputFormatError(f"{where}.{key}" if where else key, "missing field")
    return obj[key]


def complex_to_json(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def complex_from_json(v, where: str) -> complex:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    if not (isinstance(v, list) and len(v) == 2 and all(isinstance(a, (int, float)) and not isinstance(a, bool) for a in v)):
        raise InputFormatError(where, "expected a complex number [re, im]")
    return complex(v[0], v[1])


def matrix_to_json(m: np.ndarray) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"dim": int(m.shape[0]), "entries": [[complex_to_json(z) for z in row] for row in m]}


def matrix_from_json(obj, where: str = "") -> np.ndarray:
    dim = _require(obj, "dim", where)
    rows = _require(obj, "entries", where)
    if not isinstance(dim, int) or dim < 1:
        raise InputFormatError(f"{where}.dim", "expected a positive integer")
    if not isinstance(rows, list) or len(rows) != dim:
        raise InputFormatError(f"{where}.entries", f"expected {dim} rows")
    out = np.zeros((dim, dim), dtype=complex)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != dim:
            raise InputFormatError(f"{where}.entries[{i}]", f"expected {dim} entries")
        for j, v in enumerate(row):
            out[i, j] = complex_from_json(v, f"{where}.entries[{i}][{j}]")
    if not np.all(np.isfinite(out)):
        raise InputFormatError(f"{where}.entries", "non-finite entry")
    return out


def channel_to_json(c: CPMap) -> dict:
    return {"dim": c.dim, "kraus": [matrix_to_json(l) for l in c.kraus]}


def channel_from_json(obj) -> CPMap:
    dim = _require(obj, "dim", "")
    kraus = _require(obj, "kraus", "")
    if not isinstance(kraus, list) or not kraus:
        raise InputFormatError("kraus", "expected a non-empty list of matrices")
    mats = [matrix_from_json(k, f"kraus[{i}]") for i, k in enumerate(kraus)]
    for i, m in enumerate(mats):
        if m.shape[0] != dim:
            raise InputFormatError(f"kraus[{i}].dim", f"does not match dim={dim}")
    try:
        return CPMap(mats)
    except QDSError as exc:
        raise InputFormatError("kraus", str(exc)) from exc


def state_to_json(s: DensityState) -> dict:
    return {**matrix_to_json(s.rho), "density": True}


def state_from_json(obj) -> DensityState:
    if not (isinstance(obj, dict) and obj.get("density") is True):
        raise InputFormatError("density", "state files carry \"density\": true")
    try:
        return DensityState(matrix_from_json(obj))
    except QDSError as exc:
        raise InputFormatError("entries", str(exc)) from exc


def lindblad_to_json(g: LindbladGenerator) -> dict:
    return {"dim": g.dim, "hamiltonian": matrix_to_json(g.hamiltonian), "jumps": [matrix_to_json(l) for l in g.jumps]}


def lindblad_from_json(obj) -> LindbladGenerator:
    dim = _require(obj, "dim", "")
    h = matrix_from_json(_require(obj, "hamiltonian", ""), "hamiltonian")
    jumps = _require(obj, "jumps", "")
    if not isinstance(jumps, list):
        raise InputFormatError("jumps", "expected a list of matrices")
    ls = [matrix_from_json(l, f"jumps[{i}]") for i, l in enumerate(jumps)]
    for where, m in [("hamiltonian", h)] + [(f"jumps[{i}]", l) for i, l in enumerate(ls)]:
        if m.shape[0] != dim:
            raise InputFormatError(f"{where}.dim", f"does not match dim={dim}")
    try:
        return LindbladGenerator(h, ls)
    except QDSError as exc:
        raise InputFormatError("hamiltonian", str(exc)) from exc


def tensor_to_json(t: PopescuTensor) -> dict:
    return {"d": t.d, "k": t.k, "ops": [matrix_to_json(l) for l in t.ops]}


def tensor_from_json(obj) -> PopescuTensor:
    d = _require(obj, "d", "")
    k = _require(obj, "k", "")
    ops = _require(obj, "ops", "")
    if not isinstance(ops, list) or len(ops) != d:
        raise InputFormatError("ops", f"expected {d} matrices")
    mats = [matrix_from_json(m, f"ops[{i}]") for i, m in enumerate(ops)]
    for i, m in enumerate(mats):
        if m.shape[0] != k:
            raise InputFormatError(f"ops[{i}].dim", f"does not match k={k}")
    return PopescuTensor(mats)


def load_json(path: str) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from exc
    except OSError as exc:
        raise InputFormatError(path, exc.strerror or "cannot read file") from exc


def to_plain(obj: Any) -> Any:
    """Convert numpy scalars/arrays and complex numbers into JSON-ready values."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return complex_to_json(obj)
    return obj


def _fmt_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return "null"
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "inf" not in s:
        s += ".0"
    return s


def dumps(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """Deterministic JSON with 17-significant-digit floats."""
    obj = to_plain(obj) if _level == 0 else obj
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    return json.dumps(obj)
