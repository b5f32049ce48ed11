"""Versioned JSON documents ("outdeg1-*" schema family)."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .geometry import Point2, Window
from .process import Configuration

CONFIG_SCHEMA = "outdeg1-config"
SCHEMA_VERSION = 1


class SchemaError(ValueError):
    pass


def config_to_dict(config: Configuration) -> dict[str, Any]:
    w = config.window
    return {
        "schema": CONFIG_SCHEMA,
        "version": SCHEMA_VERSION,
        "window": {"lo": [w.lo.x, w.lo.y], "hi": [w.hi.x, w.hi.y]},
        "points": [
            {"id": i, "x": float(g[0]), "y": float(g[1]), "mark": float(m)}
            for i, (g, m) in enumerate(zip(config.germs, config.marks))
        ],
    }


def config_from_dict(doc: dict[str, Any]) -> Configuration:
    if doc.get("schema") != CONFIG_SCHEMA or doc.get("version") != SCHEMA_VERSION:
        raise SchemaError(f"expected {CONFIG_SCHEMA} v{SCHEMA_VERSION}")
    try:
        win = Window(Point2(*doc["window"]["lo"]), Point2(*doc["window"]["hi"]))
        pts = sorted(doc["points"], key=lambda p: p["id"])
        if [p["id"] for p in pts] != list(range(len(pts))):
            raise SchemaError("point ids must be 0..n-1")
        germs = np.array([[p["x"], p["y"]] for p in pts], dtype=float).reshape(-1, 2)
        marks = np.array([p["mark"] for p in pts], dtype=float)
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"malformed config document: {exc}") from exc
    return Configuration(germs, marks, win)


def dumps(doc: dict[str, Any]) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_config(config: Configuration, path: str | Path) -> None:
    Path(path).write_text(dumps(config_to_dict(config)))


def read_config(path: str | Path) -> Configuration:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not JSON ({exc})") from exc
    return config_from_dict(doc)


def document(schema: str, body: dict[str, Any]) -> dict[str, Any]:
    return {"schema": schema, "version": SCHEMA_VERSION, **body}
