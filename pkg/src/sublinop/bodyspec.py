"""JSON descriptions of bodies.

Every document carries ``"n"`` and ``"kind"``; the remaining fields depend
on the kind::

    {"n": 2, "kind": "general", "generators": [[1, 0, 0, 2], ...]}   # row-major n*n
    {"n": 3, "kind": "rotinv", "orbit_generators": [[1, 2, 3], ...]}
    {"n": 2, "kind": "pucci", "lambda": 1, "Lambda": 3}
    {"n": 2, "kind": "dominative", "p": 4}                            # p may be "inf"
    {"n": 3, "kind": "singleton", "a": [1, 3, 4]}
    {"n": 3, "kind": "ball", "delta": 0.5}
"""
import json
import math

import numpy as np

from . import rotinv
from . import symmat as sm
from .convbody import GeneralBody

FIELDS = {
    "general": ("generators",),
    "rotinv": ("orbit_generators",),
    "pucci": ("lambda", "Lambda"),
    "dominative": ("p",),
    "singleton": ("a",),
    "ball": ("delta",),
}


class SpecError(ValueError):
    """A body description is malformed; the message names the offending field."""


def _number(doc, key, allow_inf=False):
    value = doc[key]
    if allow_inf and isinstance(value, str) and value.strip().lower() in ("inf", "infinity"):
        return math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecError(f"field {key!r}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise SpecError(f"field {key!r}: must be finite")
    return value


def _vectors(doc, key, length):
    rows = doc[key]
    if not isinstance(rows, list) or not rows:
        raise SpecError(f"field {key!r}: expected a non-empty list of lists")
    out = []
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != length:
            raise SpecError(f"field {key!r}[{i}]: expected {length} numbers")
        try:
            vec = np.array(row, dtype=float)
        except (TypeError, ValueError):
            raise SpecError(f"field {key!r}[{i}]: entries must be numbers") from None
        if not np.all(np.isfinite(vec)):
            raise SpecError(f"field {key!r}[{i}]: entries must be finite")
        out.append(vec)
    return np.array(out)


def body_from_dict(doc):
    """Build a body from a parsed description."""
    if not isinstance(doc, dict):
        raise SpecError("a body description must be a JSON object")
    for key in ("n", "kind"):
        if key not in doc:
            raise SpecError(f"missing field {key!r}")
    n, kind = doc["n"], doc["kind"]
    if isinstance(n, bool) or not isinstance(n, int):
        raise SpecError(f"field 'n': expected an integer, got {n!r}")
    if not sm.N_MIN <= n <= sm.N_MAX:
        raise SpecError(f"field 'n': must lie in [{sm.N_MIN}, {sm.N_MAX}], got {n}")
    if kind not in FIELDS:
        raise SpecError(f"field 'kind': unknown kind {kind!r}; expected one of {sorted(FIELDS)}")
    missing = [key for key in FIELDS[kind] if key not in doc]
    if missing:
        raise SpecError(f"kind {kind!r} needs field(s) {missing}")
    extra = set(doc) - {"n", "kind"} - set(FIELDS[kind])
    if extra:
        raise SpecError(f"kind {kind!r} does not take field(s) {sorted(extra)}")

    try:
        if kind == "general":
            flat = _vectors(doc, "generators", n * n)
            return GeneralBody(flat.reshape(-1, n, n))
        if kind == "rotinv":
            return rotinv.OrbitHull(_vectors(doc, "orbit_generators", n))
        if kind == "pucci":
            return rotinv.pucci(n, _number(doc, "lambda"), _number(doc, "Lambda"))
        if kind == "dominative":
            return rotinv.dominative(n, _number(doc, "p", allow_inf=True))
        if kind == "singleton":
            return rotinv.singleton(_vectors({"a": [doc["a"]]}, "a", n)[0])
        return rotinv.Ball(n, _number(doc, "delta"))
    except SpecError:
        raise
    except ValueError as exc:
        raise SpecError(f"kind {kind!r}: {exc}") from None


def parse_body(text, source="<spec>"):
    """Parse a JSON document; decoding errors report line and column."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    try:
        return body_from_dict(doc)
    except SpecError as exc:
        raise SpecError(f"{source}: {exc}") from None


def load_body(arg):
    """Body from a file path, or from inline JSON when ``arg`` starts with ``{``."""
    if arg.lstrip().startswith("{"):
        return parse_body(arg, "<inline>")
    try:
        with open(arg) as fh:
            text = fh.read()
    except OSError as exc:
        raise SpecError(f"cannot read {arg}: {exc.strerror}") from None
    return parse_body(text, arg)
