"""JSON channel/state files and command-line channel specifications.

Channel files::

    {"dim_in": 2, "dim_out": 2, "kraus": [[[[re, im], ...], ...], ...]}

State files::

    {"dims": [dR, dB], "matrix": [[[re, im], ...], ...]}

Complex entries are ``[re, im]`` pairs; a bare number is read as real.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np

from . import channels as chn
from . import linops


class InputError(ValueError):
    """Malformed input; ``field`` names the offending key or flag."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def _complex_matrix(data, field: str) -> np.ndarray:
    if not isinstance(data, list) or not data or not all(isinstance(row, list) for row in data):
        raise InputError(field, "expected a non-empty list of rows")
    width = len(data[0])
    out = np.zeros((len(data), width), dtype=complex)
    for i, row in enumerate(data):
        if len(row) != width:
            raise InputError(field, f"row {i} has length {len(row)}, expected {width}")
        for j, z in enumerate(row):
            if isinstance(z, (int, float)) and not isinstance(z, bool):
                out[i, j] = z
            elif isinstance(z, list) and len(z) == 2 and all(isinstance(t, (int, float)) for t in z):
                out[i, j] = complex(z[0], z[1])
            else:
                raise InputError(field, f"entry [{i}][{j}] is not a number or [re, im] pair")
    return out


def _encode(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m, dtype=complex)]


def _read_json(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError("file", f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError("file", f"{path} is not valid JSON ({exc.msg} at line {exc.lineno})") from None
    if not isinstance(data, dict):
        raise InputError("file", "top level must be an object")
    return data


def _positive_int(data, key):
    if key not in data:
        raise InputError(key, "missing")
    v = data[key]
    if not isinstance(v, int) or isinstance(v, bool) or v < 1:
        raise InputError(key, "must be a positive integer")
    return v


def channel_from_dict(data: dict, name: str = "file") -> chn.Channel:
    unknown = set(data) - {"dim_in", "dim_out", "kraus", "name"}
    if unknown:
        raise InputError(sorted(unknown)[0], "unknown key")
    d_in, d_out = _positive_int(data, "dim_in"), _positive_int(data, "dim_out")
    if "kraus" not in data or not isinstance(data["kraus"], list) or not data["kraus"]:
        raise InputError("kraus", "must be a non-empty list of matrices")
    ks = []
    for i, k in enumerate(data["kraus"]):
        m = _complex_matrix(k, f"kraus[{i}]")
        if m.shape != (d_out, d_in):
            raise InputError("kraus", f"operator {i} has shape {m.shape}, expected ({d_out}, {d_in})")
        ks.append(m)
    return chn.Channel(tuple(ks), str(data.get("name", name)))


def channel_to_dict(ch: chn.Channel) -> dict:
    return {"dim_in": ch.dim_in, "dim_out": ch.dim_out, "kraus": [_encode(k) for k in ch.kraus]}


def load_channel(path) -> chn.Channel:
    return channel_from_dict(_read_json(path), name=Path(path).stem)


def save_channel(ch: chn.Channel, path) -> None:
    Path(path).write_text(json.dumps(channel_to_dict(ch), indent=1) + "\n")


def state_from_dict(data: dict) -> tuple[np.ndarray, tuple[int, ...]]:
    unknown = set(data) - {"dims", "matrix"}
    if unknown:
        raise InputError(sorted(unknown)[0], "unknown key")
    dims = data.get("dims")
    if not isinstance(dims, list) or not dims or not all(isinstance(d, int) and d >= 1 for d in dims):
        raise InputError("dims", "must be a non-empty list of positive integers")
    if "matrix" not in data:
        raise InputError("matrix", "missing")
    m = _complex_matrix(data["matrix"], "matrix")
    if m.shape[0] != m.shape[1]:
        raise InputError("matrix", "must be square")
    if int(np.prod(dims)) != m.shape[0]:
        raise InputError("dims", f"product {int(np.prod(dims))} does not match matrix size {m.shape[0]}")
    try:
        rho = linops.as_density(linops.hermitize(m))
    except ValueError as exc:
        raise InputError("matrix", str(exc)) from None
    return rho, tuple(dims)


def state_to_dict(rho, dims) -> dict:
    return {"dims": [int(d) for d in dims], "matrix": _encode(rho)}


def load_state(path):
    return state_from_dict(_read_json(path))


def save_state(rho, dims, path) -> None:
    Path(path).write_text(json.dumps(state_to_dict(rho, dims), indent=1) + "\n")


_IDENTITY = re.compile(r"^identity(\d+)$")


def _parse_value(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise InputError("param", f"value {text!r} is not a number") from None


def parse_params(items) -> dict:
    """``["p=0.2", "d=2"]`` → ``{"p": 0.2, "d": 2}``."""
    out = {}
    for item in items or ():
        for part in str(item).split(","):
            if not part:
                continue
            if "=" not in part:
                raise InputError("param", f"expected key=value, got {part!r}")
            k, v = part.split("=", 1)
            out[k.strip()] = _parse_value(v.strip())
    return out


def resolve_channel(spec: str, params=None) -> chn.Channel:
    """Channel from a file path, ``identityD``, or ``family[:k=v,...]`` plus ``params``."""
    if spec is None:
        raise InputError("channel", "missing")
    if Path(spec).is_file():
        ch = load_channel(spec)
    else:
        name, _, inline = spec.partition(":")
        kw = parse_params([inline]) if inline else {}
        kw.update(params or {})
        m = _IDENTITY.match(name)
        if m:
            if kw:
                raise InputError("param", f"identity{m.group(1)} takes no parameters")
            ch = chn.identity(int(m.group(1)))
        elif name in chn.CANONICAL:
            try:
                ch = chn.canonical(name, **kw)
            except ValueError as exc:
                raise InputError("param", str(exc)) from None
        else:
            raise InputError("channel", f"{spec!r} is neither a file nor a known channel name")
    return ch
