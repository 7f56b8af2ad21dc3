"""JSON descriptions of matrices, maps, and states.

Matrices::

    {"rows": 2, "cols": 2, "data": [[re, im], ...]}     # row-major

States add ``"dims": [d_a, d_b]``.  A state may also be a builtin name such as
``"bell"`` or ``"isotropic(d=4,x=0.8)"``, or the dict form
``{"kind": "isotropic", "params": {"d": 4, "x": 0.8}}``.

Maps are trees ``{"kind": ..., "params": {...}, "children": [...]}``.
"""

from __future__ import annotations

import copy
import dataclasses
import json
import re
from collections.abc import Mapping

import numpy as np

from . import linalg as la
from . import maps as mp
from .errors import DimensionError, ParameterError, ParseError
from .metrics import isotropic_state


class UnknownKindError(ParseError):
    code = "unknown-kind"


# matrices --------------------------------------------------------------------


def matrix_to_json(m: np.ndarray) -> dict:
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "data": [[float(z.real), float(z.imag)] for z in m.ravel()],
    }


def matrix_from_json(obj: Mapping) -> np.ndarray:
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"matrix needs integer 'rows', 'cols' and a 'data' list ({exc})") from None
    if len(data) != rows * cols:
        raise DimensionError(f"matrix data has {len(data)} entries, expected {rows}x{cols}")
    vals = []
    for k, z in enumerate(data):
        if isinstance(z, (int, float)):
            vals.append(complex(z))
        elif isinstance(z, (list, tuple)) and len(z) == 2:
            vals.append(complex(float(z[0]), float(z[1])))
        else:
            raise ParseError(f"matrix entry {k} must be a number or [re, im]")
    return np.array(vals, dtype=complex).reshape(rows, cols)


# maps ------------------------------------------------------------------------

_LEAF_PARAMS = {
    "identity": ("d",),
    "transpose": ("d",),
    "reduction": ("d",),
    "partial_transpose": ("d_a", "d_b"),
    "partial_reduction": ("d_a", "d_b"),
    "amplitude_damping": ("gamma",),
    "amplitude_damping_inverse": ("gamma",),
    "observable": ("O",),
    "sandwich": ("P",),
    "choi": ("matrix",),
}
_ARITY = {"tensor": (2, None), "compose": (2, 2), "invert": (1, 1)}


def _canonical(node: Mapping) -> dict:
    if not isinstance(node, Mapping):
        raise ParseError("map description must be a JSON object")
    kind = node.get("kind")
    if kind not in _LEAF_PARAMS and kind not in _ARITY:
        raise UnknownKindError(f"unknown map kind {kind!r}")
    params = dict(node.get("params") or {})
    children = list(node.get("children") or [])
    if kind in _LEAF_PARAMS:
        if children:
            raise ParseError(f"{kind} takes no children")
        need = _LEAF_PARAMS[kind]
        missing = [p for p in need if p not in params]
        if missing:
            raise ParameterError(f"{kind} is missing parameter(s) {missing}")
        extra = sorted(set(params) - set(need) - ({"d_in", "d_out"} if kind == "choi" else set()))
        if extra:
            raise ParameterError(f"{kind} got unexpected parameter(s) {extra}")
        for key in ("d", "d_a", "d_b", "d_in", "d_out"):
            if key in params:
                params[key] = int(params[key])
        if "gamma" in params:
            params["gamma"] = float(params["gamma"])
        for key in ("O", "P", "matrix"):
            if key in params:
                params[key] = matrix_to_json(matrix_from_json(params[key]))
        return {"kind": kind, "params": params, "children": []}
    lo, hi = _ARITY[kind]
    if len(children) < lo or (hi is not None and len(children) > hi):
        raise ParseError(f"{kind} needs {lo}{'' if hi == lo else '+'} children, got {len(children)}")
    if params:
        raise ParameterError(f"{kind} takes no parameters")
    return {"kind": kind, "params": {}, "children": [_canonical(c) for c in children]}


def _build(node: dict) -> mp.HPMap:
    kind, p = node["kind"], node["params"]
    if kind == "identity":
        return mp.identity(p["d"])
    if kind == "transpose":
        return mp.transpose(p["d"])
    if kind == "reduction":
        return mp.reduction(p["d"])
    if kind == "partial_transpose":
        return mp.partial_transpose_map(p["d_a"], p["d_b"])
    if kind == "partial_reduction":
        return mp.partial_reduction(p["d_a"], p["d_b"])
    if kind == "amplitude_damping":
        return mp.amplitude_damping(p["gamma"])
    if kind == "amplitude_damping_inverse":
        return mp.amplitude_damping_inverse(p["gamma"])
    if kind == "observable":
        return mp.observable_map(matrix_from_json(p["O"]))
    if kind == "sandwich":
        return mp.sandwich(matrix_from_json(p["P"]))
    if kind == "choi":
        return mp.from_choi(matrix_from_json(p["matrix"]), p.get("d_in"), p.get("d_out"))
    kids = [_build(c) for c in node["children"]]
    if kind == "tensor":
        out = kids[0]
        for k in kids[1:]:
            out = mp.tensor_maps(out, k)
        return out
    if kind == "compose":
        return mp.compose_maps(kids[0], kids[1])
    return mp.invert_map(kids[0])


def _load(text_or_obj):
    if isinstance(text_or_obj, (str, bytes)):
        try:
            return json.loads(text_or_obj)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return text_or_obj


def canonicalize_map(text_or_obj) -> dict:
    """Normal form of a map description: every node has kind, params and children."""
    return _canonical(_load(text_or_obj))


def parse_map(text_or_obj) -> mp.HPMap:
    """Build an HPMap from its JSON description.

    ``compose`` children are listed outermost first: compose(a, b) = a after b.
    """
    canon = canonicalize_map(text_or_obj)
    return dataclasses.replace(_build(canon), source=canon)


def serialize_map(node) -> dict:
    """Canonical description of a map.

    A description (dict or text) is normalised.  A parsed HPMap returns the
    tree it came from; any other HPMap becomes a ``choi`` leaf.
    """
    if isinstance(node, mp.HPMap) and node.source is not None:
        return copy.deepcopy(node.source)
    if isinstance(node, mp.HPMap):
        return {
            "kind": "choi",
            "params": {"matrix": matrix_to_json(node.choi), "d_in": node.d_in, "d_out": node.d_out},
            "children": [],
        }
    return canonicalize_map(node)


# states ----------------------------------------------------------------------

_CALL = re.compile(r"^\s*([a-zA-Z][\w-]*)\s*(?:\((.*)\))?\s*$")


def _parse_call(text: str) -> tuple[str, dict]:
    m = _CALL.match(text)
    if not m:
        raise ParseError(f"cannot parse state name {text!r}")
    name, args = m.group(1), (m.group(2) or "").strip()
    params: dict = {}
    if args:
        positional = _POSITIONAL.get(name, ())
        for k, part in enumerate(args.split(",")):
            if "=" in part:
                key, val = part.split("=", 1)
            elif k < len(positional):
                key, val = positional[k], part
            else:
                raise ParseError(f"argument {part.strip()!r} of {name} needs a name")
            try:
                params[key.strip()] = json.loads(val.strip())
            except json.JSONDecodeError:
                raise ParseError(f"bad value {val.strip()!r} in {text!r}") from None
    return name, params


_POSITIONAL = {"werner": ("p",), "isotropic": ("x",), "haar": ("seed",), "product-haar": ("seed",)}


def builtin_state(name: str, params: Mapping | None = None) -> tuple[np.ndarray, tuple[int, ...]]:
    """Named states: bell, werner(p), isotropic(x, d=4), haar(seed), product-haar(seed).

    The Haar states take ``d_a`` and ``d_b`` (both default 2).
    """
    p = dict(params or {})
    if name == "bell":
        return la.pure(np.array([1, 0, 0, 1])), (2, 2)
    if name == "werner":
        w = float(p.get("p", 1.0))
        singlet = la.pure(np.array([0, 1, -1, 0]))
        return w * singlet + (1 - w) * np.eye(4) / 4, (2, 2)
    if name == "isotropic":
        d = int(p.get("d", 4))
        d_a = int(round(np.sqrt(d)))
        if d_a * d_a != d:
            raise DimensionError(f"isotropic state needs a square total dimension, got {d}")
        return isotropic_state(d_a, float(p.get("x", 1.0))), (d_a, d_a)
    if name in ("haar", "product-haar"):
        rng = np.random.default_rng(int(p.get("seed", 0)))
        d_a, d_b = int(p.get("d_a", 2)), int(p.get("d_b", 2))
        if name == "haar":
            psi = la.haar_state(d_a * d_b, rng)
        else:
            psi = np.kron(la.haar_state(d_a, rng), la.haar_state(d_b, rng))
        return la.pure(psi), (d_a, d_b)
    raise UnknownKindError(f"unknown builtin state {name!r}")


def parse_state(text_or_obj) -> tuple[np.ndarray, tuple[int, ...]]:
    """Return (density matrix, subsystem dims) from any supported state description."""
    obj = text_or_obj
    if isinstance(obj, str):
        stripped = obj.strip()
        if stripped.startswith(("{", '"')):
            obj = _load(stripped)
    if isinstance(obj, str):
        return builtin_state(*_parse_call(obj))
    if not isinstance(obj, Mapping):
        raise ParseError("state description must be a name or a JSON object")
    if "kind" in obj:
        return builtin_state(obj["kind"], obj.get("params"))
    m = matrix_from_json(obj)
    dims = tuple(int(x) for x in obj.get("dims", (m.shape[0],)))
    if int(np.prod(dims)) != m.shape[0]:
        raise DimensionError(f"dims {dims} do not match a {m.shape[0]}-dimensional state")
    return la.as_density(m), dims
