"""Versioned JSON documents for trained models."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ParseError
from .model import HulmParams
from .naive import NaiveParams

FORMAT_VERSION = 1


def params_to_dict(params, preprocess: Optional[dict] = None) -> dict:
    if isinstance(params, HulmParams):
        doc = {"format_version": FORMAT_VERSION, "kind": "hulm",
               "H": params.H, "D": params.D, "K": params.K}
        for name in ("pi", "tau", "A", "b", "c", "W", "V"):
            doc[name] = getattr(params, name).tolist()
    elif isinstance(params, NaiveParams):
        doc = {"format_version": FORMAT_VERSION, "kind": "naive", "D": params.D, "K": params.K,
               "W": params.W.tolist(), "c": params.c.tolist()}
    else:
        raise TypeError(f"cannot serialize {type(params).__name__}")
    if preprocess:
        doc["preprocess"] = preprocess
    return doc


def params_from_dict(doc: dict):
    """Return (params, preprocess dict)."""
    if doc.get("format_version") != FORMAT_VERSION:
        raise ParseError(f"unsupported model format_version {doc.get('format_version')!r}")
    kind = doc.get("kind", "hulm")
    try:
        if kind == "hulm":
            params = HulmParams(**{name: np.array(doc[name], dtype=np.float64)
                                   for name in ("pi", "tau", "A", "W", "V", "b", "c")})
            declared = (doc["H"], doc["D"], doc["K"])
            if declared != (params.H, params.D, params.K):
                raise ParseError(f"declared (H, D, K)={declared} disagree with array shapes")
        elif kind == "naive":
            params = NaiveParams(np.array(doc["W"], dtype=np.float64), np.array(doc["c"], dtype=np.float64))
        else:
            raise ParseError(f"unknown model kind {kind!r}")
    except KeyError as exc:
        raise ParseError(f"model document missing field {exc.args[0]!r}") from None
    except ValueError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(str(exc)) from None
    return params, doc.get("preprocess") or {}


def save_model(path, params, preprocess: Optional[dict] = None) -> None:
    Path(path).write_text(json.dumps(params_to_dict(params, preprocess)) + "\n", encoding="utf-8")


def load_model(path):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"model not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno, path) from None
    return params_from_dict(doc)
