"""Figure specifications and input-file validation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

KINDS = ("so3-frames", "sphere", "landmarks", "endpoints")

# color semantics shared across landmark figures: blue = drift-only paths,
# red = most probable paths, green = noise-field centers, black = targets
DEFAULT_STYLE = {
    "drift_color": "tab:blue",
    "mpp_color": "tab:red",
    "field_color": "tab:green",
    "target_color": "black",
    "dpi": 110,
    "frames": 12,
    "quiver_scale": 1.0,
}


class SchemaMismatch(Exception):
    """Input file does not provide what the figure kind needs."""

    def __init__(self, path, json_path: str, detail: str):
        self.path = str(path)
        self.json_path = json_path
        super().__init__(f"{path}: {json_path}: {detail}")


@dataclass
class FigureSpec:
    inputs: list
    kind: str
    out: str
    style: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if not self.inputs:
            raise ValueError("at least one input file is required")
        self.style = {**DEFAULT_STYLE, **self.style}

    def load_inputs(self) -> list:
        docs = []
        for p in self.inputs:
            path = Path(p)
            if not path.exists():
                raise SchemaMismatch(path, "<file>", "does not exist")
            try:
                docs.append((path, json.loads(path.read_text())))
            except json.JSONDecodeError as exc:
                raise SchemaMismatch(path, "<root>", f"not valid JSON: {exc}")
        return docs


def require(doc: dict, path, *keys):
    """Walk nested keys, raising SchemaMismatch with the JSON path on miss."""
    node = doc
    seen = []
    for key in keys:
        seen.append(str(key))
        if not isinstance(node, dict) or key not in node or node[key] is None:
            raise SchemaMismatch(path, "/".join(seen), "missing or null")
        node = node[key]
    return node
