"""JSON parameter documents, ``--set`` style overrides and stock configurations."""

from __future__ import annotations

import copy
import json
from pathlib import Path
from typing import Any, Iterable

from . import birth, periodic
from .errors import ConfigError
from .model import ModelParams

__all__ = [
    "CANONICAL",
    "params_from_dict",
    "params_to_dict",
    "load_params",
    "load_document",
    "apply_overrides",
    "canonical_params",
    "with_threshold",
]

COEFFICIENTS = ("D_M", "D_I", "d_M", "d_I", "tau")

# L = 2 for the constant-coefficient canonical case; see with_threshold().
CANONICAL: dict[str, Any] = {
    "T": 1.0,
    "alpha": 0.2,
    "beta": 0.3,
    "D_M": {"const": 1.0},
    "D_I": {"const": 0.2},
    "d_M": {"const": 0.5},
    "d_I": {"const": 0.3},
    "tau": {"const": 0.4},
    "birth": {"ricker": {"P": 22.456695346200, "q": 1.0}},
}


def params_from_dict(doc: dict[str, Any]) -> ModelParams:
    try:
        T = float(doc.get("T", 1.0))
        coeffs = {k: periodic.from_dict(doc[k], T) for k in COEFFICIENTS}
        h, P = birth.from_dict(doc["birth"])
        shape = doc.get("p_shape")
        return ModelParams(
            T=T,
            alpha=float(doc["alpha"]),
            beta=float(doc["beta"]),
            h=h,
            P=P,
            p_shape=None if shape is None else periodic.from_dict(shape, T),
            **coeffs,
        )
    except KeyError as exc:
        raise ConfigError(f"missing parameter {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def params_to_dict(params: ModelParams) -> dict[str, Any]:
    doc: dict[str, Any] = {"T": params.T, "alpha": params.alpha, "beta": params.beta}
    for k in COEFFICIENTS:
        doc[k] = getattr(params, k).to_dict()
    h = params.h
    kind = "ricker" if isinstance(h, birth.Ricker) else "tabulated"
    doc["birth"] = {kind: {"P": params.P, **h.to_dict()}}
    if params.p_shape is not None:
        doc["p_shape"] = params.p_shape.to_dict()
    return doc


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(doc: dict[str, Any], overrides: Iterable[str]) -> dict[str, Any]:
    """Apply ``key.path=value`` patches; values are parsed as JSON when possible.

    ``tau=0.5`` replaces the whole entry, ``birth.ricker.P=30`` patches a leaf.
    """
    doc = copy.deepcopy(doc)
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        path = key.strip().split(".")
        node = doc
        for part in path[:-1]:
            if not isinstance(node.get(part), dict):
                node[part] = {}
            node = node[part]
        value = _parse_value(raw.strip())
        if path[-1] in COEFFICIENTS and len(path) == 1 and isinstance(value, (int, float)):
            value = {"const": value}
        node[path[-1]] = value
    return doc


def load_document(path: str | Path | None) -> dict[str, Any]:
    if path is None:
        return copy.deepcopy(CANONICAL)
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path} must hold a JSON object")
    return doc


def load_params(path: str | Path | None, overrides: Iterable[str] = ()) -> ModelParams:
    return params_from_dict(apply_overrides(load_document(path), overrides))


def canonical_params(**overrides: Any) -> ModelParams:
    doc = copy.deepcopy(CANONICAL)
    doc.update(overrides)
    return params_from_dict(doc)


def with_threshold(params: ModelParams, target_L: float) -> ModelParams:
    """Rescale the breeding amplitude so that the threshold number equals ``target_L``.

    The threshold number is linear in the amplitude.
    """
    from .kinetics import compute_L

    base = compute_L(params)
    if base <= 0:
        raise ValueError("threshold number is zero; cannot rescale")
    return params.replace(P=params.P * target_L / base)
