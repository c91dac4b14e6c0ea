"""JSON and CSV output with fixed 17-significant-digit floats.

Non-finite floats are written as the strings "inf", "-inf" and "nan" in JSON
and as bare tokens in CSV. Output never depends on the locale.
"""
import io
import json
import math

import numpy as np


def format_float(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def plain(obj):
    """Convert numpy scalars/arrays, tuples and dataclass-like objects to JSON types."""
    if hasattr(obj, "as_dict"):
        return plain(obj.as_dict())
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _emit(obj, out, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            out.write("{}")
            return
        out.write("{\n")
        for i, (k, v) in enumerate(obj.items()):
            out.write(pad + json.dumps(k) + ": ")
            _emit(v, out, indent, level + 1)
            out.write(",\n" if i < len(obj) - 1 else "\n")
        out.write(end + "}")
    elif isinstance(obj, list):
        if not obj:
            out.write("[]")
        elif all(not isinstance(v, (dict, list)) for v in obj):
            out.write("[")
            for i, v in enumerate(obj):
                _emit(v, out, indent, level + 1)
                if i < len(obj) - 1:
                    out.write(", ")
            out.write("]")
        else:
            out.write("[\n")
            for i, v in enumerate(obj):
                out.write(pad)
                _emit(v, out, indent, level + 1)
                out.write(",\n" if i < len(obj) - 1 else "\n")
            out.write(end + "]")
    elif isinstance(obj, bool) or obj is None:
        out.write(json.dumps(obj))
    elif isinstance(obj, int):
        out.write(str(obj))
    elif isinstance(obj, float):
        s = format_float(obj)
        out.write(s if math.isfinite(obj) else json.dumps(s))
    else:
        out.write(json.dumps(str(obj)))


def dumps_json(obj, indent=2):
    """Deterministic JSON text (keys keep insertion order) ending in a newline."""
    out = io.StringIO()
    _emit(plain(obj), out, indent, 0)
    out.write("\n")
    return out.getvalue()


def loads_json(text):
    """Inverse of dumps_json; the non-finite strings come back as floats."""
    def fix(v):
        if isinstance(v, dict):
            return {k: fix(x) for k, x in v.items()}
        if isinstance(v, list):
            return [fix(x) for x in v]
        if v in ("inf", "-inf", "nan"):
            return float(v)
        return v
    return fix(json.loads(text))


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return str(v)


def dumps_csv(header, rows):
    """CSV text with '.' decimals and '\\n' line endings."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    return "\n".join(lines) + "\n"
