"""JSON files for discrete systems, continuous systems and transforms.

Discrete::

    {"n": 2, "k_min": 0, "k_max": 1, "extension": "none" | {"periodic": 2},
     "steps": [{"k": 0, "A": [[...]], "b": [...], "c": [...]}, ...]}

Continuous::

    {"n": 2, "A": [["0", "1"], ["-1", "0"]], "b": ["0", "1"], "c": ["1", "0"]}

Numbers may be JSON numbers, decimal strings or ``"p/q"`` strings.  Output
always uses strings (``"p/q"`` or ``repr`` of a float) so rational files
round-trip exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

from .canonical import EquivalenceTransform
from .expressions import ExpressionError
from .sampling import CtSystem
from .scalar import ScalarPolicy, format_number, parse_number
from .system import LtvSystem


class SchemaError(ValueError):
    """The document does not match any accepted schema."""


def _require(doc: dict, key: str, where: str):
    if key not in doc:
        raise SchemaError(f"{where}: missing field {key!r}")
    return doc[key]


def _int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"{where}: expected an integer, got {value!r}")
    return value


def _number(value, policy: ScalarPolicy, where: str):
    try:
        return parse_number(value, policy.mode)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise SchemaError(f"{where}: bad number {value!r}") from exc


def _vector(data, n: int, policy: ScalarPolicy, where: str) -> list:
    if not isinstance(data, list) or len(data) != n:
        got = len(data) if isinstance(data, list) else type(data).__name__
        raise SchemaError(f"{where}: expected a list of length {n}, got {got}")
    return [_number(v, policy, f"{where}[{i}]") for i, v in enumerate(data)]


def _matrix(data, n: int, policy: ScalarPolicy, where: str) -> list:
    if not isinstance(data, list) or len(data) != n:
        raise SchemaError(f"{where}: expected {n} rows")
    return [_vector(row, n, policy, f"{where}[{i}]") for i, row in enumerate(data)]


def is_continuous(doc: dict) -> bool:
    return "steps" not in doc and "A" in doc


def system_from_dict(doc: dict, policy: ScalarPolicy | None = None) -> LtvSystem:
    policy = policy or ScalarPolicy()
    if not isinstance(doc, dict):
        raise SchemaError("top level must be an object")
    n = _int(_require(doc, "n", "system"), "n")
    if n < 1:
        raise SchemaError(f"n: must be positive, got {n}")
    k_min = _int(_require(doc, "k_min", "system"), "k_min")
    k_max = _int(_require(doc, "k_max", "system"), "k_max")
    if k_max < k_min:
        raise SchemaError("k_max is smaller than k_min")
    ext = doc.get("extension", "none")
    period = None
    if isinstance(ext, dict):
        period = _int(_require(ext, "periodic", "extension"), "extension.periodic")
        if period < 1:
            raise SchemaError(f"extension.periodic: period must be positive, got {period}")
        if period != k_max - k_min + 1:
            raise SchemaError(f"extension.periodic: period {period} must equal the window "
                              f"length {k_max - k_min + 1}")
    elif ext != "none":
        raise SchemaError(f"extension: expected \"none\" or {{\"periodic\": p}}, got {ext!r}")
    steps = _require(doc, "steps", "system")
    if not isinstance(steps, list):
        raise SchemaError("steps: expected a list")
    A, b, c = {}, {}, {}
    for i, step in enumerate(steps):
        where = f"steps[{i}]"
        if not isinstance(step, dict):
            raise SchemaError(f"{where}: expected an object")
        k = _int(_require(step, "k", where), f"{where}.k")
        if not k_min <= k <= k_max:
            raise SchemaError(f"{where}.k = {k} outside [{k_min}, {k_max}]")
        if k in A:
            raise SchemaError(f"{where}.k = {k} appears twice")
        A[k] = _matrix(_require(step, "A", where), n, policy, f"{where}.A")
        b[k] = _vector(_require(step, "b", where), n, policy, f"{where}.b")
        c[k] = _vector(_require(step, "c", where), n, policy, f"{where}.c")
    missing = [k for k in range(k_min, k_max + 1) if k not in A]
    if missing:
        raise SchemaError(f"steps: no entry for k = {missing[0]}")
    return LtvSystem(n, k_min, k_max, A, b, c, period, policy)


def system_to_dict(sys: LtvSystem) -> dict:
    steps = []
    for k in sys.indices():
        steps.append({"k": k,
                      "A": [[format_number(v) for v in row] for row in sys.A[k]],
                      "b": [format_number(v) for v in sys.b[k]],
                      "c": [format_number(v) for v in sys.c[k]]})
    return {"n": sys.n, "k_min": sys.k_min, "k_max": sys.k_max,
            "extension": {"periodic": sys.period} if sys.periodic else "none",
            "steps": steps}


def ct_from_dict(doc: dict) -> CtSystem:
    n = _int(_require(doc, "n", "system"), "n")
    if n < 1:
        raise SchemaError(f"n: must be positive, got {n}")
    A = _require(doc, "A", "system")
    b = _require(doc, "b", "system")
    c = _require(doc, "c", "system")
    if not isinstance(A, list) or len(A) != n:
        raise SchemaError(f"A: expected {n} rows")
    for i, row in enumerate(A):
        if not isinstance(row, list) or len(row) != n:
            raise SchemaError(f"A[{i}]: expected a list of length {n}")
    for name, vec in (("b", b), ("c", c)):
        if not isinstance(vec, list) or len(vec) != n:
            raise SchemaError(f"{name}: expected a list of length {n}")
    try:
        return CtSystem(n, tuple(tuple(str(e) for e in row) for row in A),
                        tuple(str(e) for e in b), tuple(str(e) for e in c))
    except ExpressionError as exc:
        raise SchemaError(str(exc)) from exc


def _read(path) -> dict:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: "
                          f"{exc.msg}") from exc


def load_system(path, policy: ScalarPolicy | None = None):
    """``LtvSystem`` or ``CtSystem`` depending on the document's shape."""
    doc = _read(path)
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: top level must be an object")
    if is_continuous(doc):
        return ct_from_dict(doc)
    return system_from_dict(doc, policy)


def dumps(doc) -> str:
    return json.dumps(doc, indent=1) + "\n"


def write_system(sys, path) -> None:
    doc = sys.to_dict() if isinstance(sys, CtSystem) else system_to_dict(sys)
    Path(path).write_text(dumps(doc))


def transform_to_dict(T: EquivalenceTransform) -> dict:
    doc = {"range": [T.k_min, T.k_max],
           "T": [{"k": k, "matrix": [[format_number(v) for v in row] for row in T.T[k]]}
                 for k in range(T.k_min, T.k_max + 1)]}
    if T.period is not None:
        doc["extension"] = {"periodic": T.period}
    return doc


def transform_from_dict(doc: dict, policy: ScalarPolicy | None = None) -> EquivalenceTransform:
    policy = policy or ScalarPolicy()
    lo, hi = _require(doc, "range", "transform")
    entries = _require(doc, "T", "transform")
    mats = {}
    for i, e in enumerate(entries):
        rows = _require(e, "matrix", f"T[{i}]")
        mats[_int(_require(e, "k", f"T[{i}]"), f"T[{i}].k")] = _matrix(
            rows, len(rows), policy, f"T[{i}].matrix")
    ext = doc.get("extension")
    period = ext["periodic"] if isinstance(ext, dict) else None
    return EquivalenceTransform(lo, hi, mats, period, policy)


def write_transform(T: EquivalenceTransform, path) -> None:
    Path(path).write_text(dumps(transform_to_dict(T)))


def load_transform(path, policy: ScalarPolicy | None = None) -> EquivalenceTransform:
    return transform_from_dict(_read(path), policy)
