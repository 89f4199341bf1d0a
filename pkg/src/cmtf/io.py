"""Plain-text tensor, matrix and manifest files.

Tensor file::

    tensor
    <order>
    <dim_0> <dim_1> ...
    <one value per line, first index fastest>

Matrix file::

    matrix
    <rows> <cols>
    <one value per line, column-major>

Values are written with 17 significant digits so a round trip is exact.
"""
from pathlib import Path

import numpy as np

__all__ = [
    "FormatError",
    "format_tensor",
    "format_matrix",
    "parse_array",
    "read_array",
    "write_array",
    "read_manifest",
    "write_manifest",
]


class FormatError(ValueError):
    """Raised when a tensor, matrix or manifest file cannot be parsed."""


def _values(x):
    return "\n".join(f"{v:.17g}" for v in np.asarray(x, dtype=float).ravel(order="F"))


def format_tensor(x):
    x = np.asarray(x, dtype=float)
    shape = " ".join(str(s) for s in x.shape)
    return f"tensor\n{x.ndim}\n{shape}\n{_values(x)}\n"


def format_matrix(m):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {m.shape}")
    return f"matrix\n{m.shape[0]} {m.shape[1]}\n{_values(m)}\n"


def parse_array(text):
    """Parse the contents of a tensor or matrix file into an ndarray."""
    lines = [ln.strip() for ln in text.splitlines()]
    while lines and not lines[-1]:
        lines.pop()
    if not lines:
        raise FormatError("empty file")
    header = lines[0].lower()
    try:
        if header == "tensor":
            order = int(lines[1])
            shape = tuple(int(t) for t in lines[2].split())
            if len(shape) != order:
                raise FormatError(f"order {order} does not match shape {shape}")
            body = lines[3:]
        elif header == "matrix":
            shape = tuple(int(t) for t in lines[1].split())
            if len(shape) != 2:
                raise FormatError(f"matrix shape line must hold two integers, got {lines[1]!r}")
            body = lines[2:]
        else:
            raise FormatError(f"unknown header {lines[0]!r}")
        values = np.array([float(v) for v in body], dtype=float)
    except IndexError:
        raise FormatError("file truncated before the value block") from None
    except ValueError as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(str(exc)) from None
    if any(s < 1 for s in shape):
        raise FormatError(f"dimensions must be positive, got {shape}")
    if values.size != int(np.prod(shape)):
        raise FormatError(f"expected {int(np.prod(shape))} values for shape {shape}, found {values.size}")
    return values.reshape(shape, order="F")


def read_array(path):
    return parse_array(Path(path).read_text())


def write_array(path, x, kind=None):
    """Write `x` as a matrix file if it is 2-D (or `kind` says so), else as a tensor file."""
    x = np.asarray(x, dtype=float)
    if kind is None:
        kind = "matrix" if x.ndim == 2 else "tensor"
    text = format_matrix(x) if kind == "matrix" else format_tensor(x)
    Path(path).write_text(text)


def write_manifest(path, items):
    lines = [f"{k}={v}" for k, v in items.items()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_manifest(path):
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FormatError(f"{path}:{n}: expected key=value")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out
