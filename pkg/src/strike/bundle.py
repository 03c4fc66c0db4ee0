"""Versioned JSON model bundle.

Floats are written with ``repr`` (shortest string that round-trips to the same
binary64), so reload-then-predict reproduces in-memory predictions exactly.
"""
from __future__ import annotations

import json
from pathlib import Path

from . import FORMAT_VERSION
from .stacking import StrikeModel


class BundleError(ValueError):
    pass


def dumps(obj) -> str:
    return json.dumps(obj, indent=1, allow_nan=False, ensure_ascii=False) + "\n"


def save_bundle(path, model: StrikeModel, config: dict | None = None) -> Path:
    body = model.to_dict()
    body["config"] = config or {}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(body), encoding="utf-8")
    return path


def load_bundle(path) -> tuple[StrikeModel, dict]:
    path = Path(path)
    try:
        body = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise BundleError(f"bundle {path} not found") from None
    except json.JSONDecodeError as exc:
        raise BundleError(f"bundle {path} is not valid JSON: {exc}") from None
    if body.get("format_version") != FORMAT_VERSION:
        raise BundleError(f"bundle format_version {body.get('format_version')!r} is not supported "
                          f"(expected {FORMAT_VERSION})")
    return StrikeModel.from_dict(body), body.get("config", {})
