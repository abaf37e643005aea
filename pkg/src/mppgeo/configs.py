"""Experiment configuration: JSON schemas (unknown keys rejected) and the
built-in presets behind the command-line front end."""

from __future__ import annotations

import jsonschema

from .errors import ConfigError

_NUM = {"type": "number"}
_INT = {"type": "integer", "minimum": 1}
_VEC = {"type": "array", "items": _NUM}
_MAT = {"type": "array", "items": _VEC}

_COMMON = {
    "steps": _INT,
    "horizon": {"type": "number", "exclusiveMinimum": 0},
    "seed": {"type": "integer"},
    "tol": {"type": "number", "exclusiveMinimum": 0},
    "out": {"type": "string"},
    "preset": {"type": "string"},
}

_SIGMA = {"oneOf": [_VEC, _MAT]}  # diagonal entries or a full matrix

_DRIFT_FIELD = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "type": {"enum": ["none", "rotation", "constant"]},
        "axis": _VEC,
        "scale": _NUM,
        "vector": _VEC,
    },
    "required": ["type"],
}

_LANDMARK_SCENE = {
    "landmarks": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "points": _MAT,
            "circle": {
                "type": "object",
                "additionalProperties": False,
                "properties": {"n": _INT, "radius": _NUM, "center": _VEC},
                "required": ["n"],
            },
        },
    },
    "fields": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "grid": {
                "type": "object",
                "additionalProperties": False,
                "properties": {"nx": _INT, "ny": _INT, "width": _NUM,
                               "inflate": _NUM},
                "required": ["nx", "ny"],
            },
            "gaussians": {
                "type": "array",
                "items": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {"center": _VEC, "width": _NUM,
                                   "direction": {"type": "integer", "minimum": 0}},
                    "required": ["center", "width", "direction"],
                },
            },
        },
    },
    "drift": _VEC,
}

SCHEMAS = {
    "so3-ivp": {
        "type": "object",
        "additionalProperties": False,
        "properties": {**_COMMON, "sigma": _SIGMA, "drift": _VEC, "alpha0": _VEC},
        "required": ["sigma", "alpha0"],
    },
    "so3-bvp": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            **_COMMON, "sigma": _SIGMA, "drift": _VEC,
            "target": {
                "type": "object",
                "additionalProperties": False,
                "properties": {"alpha_forward": _VEC, "matrix": _MAT},
            },
            "guess": _VEC,
        },
        "required": ["sigma", "target"],
    },
    "sphere-bvp": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            **_COMMON, "sigma": _SIGMA, "drift_field": _DRIFT_FIELD,
            "target": {
                "type": "object",
                "additionalProperties": False,
                "properties": {"ambient": _VEC, "chart": _VEC},
            },
        },
        "required": ["target"],
    },
    "landmarks-bvp": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            **_COMMON, **_LANDMARK_SCENE,
            "targets": {
                "type": "object",
                "additionalProperties": False,
                "properties": {
                    "points": _MAT,
                    "forward_lam": _MAT,
                    "transform": {
                        "type": "object",
                        "additionalProperties": False,
                        "properties": {"translate": _VEC, "scale": _VEC},
                    },
                },
            },
        },
        "required": ["landmarks", "fields", "targets"],
    },
    "simulate": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            **_COMMON, "model": {"enum": ["flat", "sphere"]}, "sigma": _SIGMA,
            "drift": _VEC, "paths": _INT, "record_paths": {"type": "boolean"},
        },
        "required": ["model", "sigma"],
    },
    "mpp-forward": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            **_COMMON,
            "model": {"enum": ["flat", "sphere", "martinet", "so3chart"]},
            "sigma": _SIGMA, "drift": _VEC, "lam0": _VEC, "chi0": _VEC,
        },
        "required": ["model", "sigma", "lam0"],
    },
    "singular-check": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            **_COMMON,
            "kind": {"enum": ["martinet-line", "martinet-generic",
                              "heisenberg-zero", "heisenberg-generic",
                              "landmarks"]},
            **_LANDMARK_SCENE,
            "lam0": _MAT,
        },
        "required": ["kind"],
    },
}

PRESETS: dict[str, tuple[str, dict]] = {
    "fig1-ivp": ("so3-ivp", {
        "sigma": [0.3, 2.0, 1.0],
        "drift": [1.0, 0.0, 0.0],
        "alpha0": [0.5, -1.0, 0.5],
        "steps": 1000,
        "out": "fig1_ivp",
    }),
    "fig1-bvp": ("so3-bvp", {
        "sigma": [0.3, 2.0, 1.0],
        "drift": [1.0, 0.0, 0.0],
        "target": {"alpha_forward": [0.5, -1.0, 0.5]},
        "steps": 1000,
        "tol": 1e-8,
        "out": "fig1_bvp",
    }),
    "fig2-sphere": ("sphere-bvp", {
        "sigma": [1.0, 1.0],
        "drift_field": {"type": "rotation", "axis": [0.0, 0.0, 1.0], "scale": 0.8},
        "target": {"ambient": [0.540302305868140, 0.673031580165190,
                               0.504846185123892]},
        "steps": 1000,
        "tol": 1e-8,
        "out": "fig2_sphere",
    }),
    "sphere-geodesic": ("sphere-bvp", {
        "sigma": [1.0, 1.0],
        "drift_field": {"type": "none"},
        "target": {"ambient": [0.540302305868140, 0.841470984807897, 0.0]},
        "steps": 1000,
        "tol": 1e-8,
        "out": "sphere_geodesic",
    }),
    "fig3-landmarks": ("landmarks-bvp", {
        "landmarks": {"points": [[-0.5, 0.0], [0.5, 0.0]]},
        "fields": {"gaussians": [
            {"center": [-0.3, 0.4], "width": 0.6, "direction": 0},
            {"center": [0.3, -0.4], "width": 0.6, "direction": 1},
        ]},
        "targets": {"points": [[-0.2, 0.55], [0.9, 0.35]]},
        "drift": [0.3, 0.25],
        "steps": 500,
        "tol": 1e-7,
        "out": "fig3_landmarks",
    }),
    "fig3-grid": ("landmarks-bvp", {
        "landmarks": {"circle": {"n": 8, "radius": 1.0, "center": [0.0, 0.0]}},
        "fields": {"grid": {"nx": 7, "ny": 7, "width": 0.5, "inflate": 0.25}},
        "targets": {"transform": {"translate": [0.55, 0.2], "scale": [1.1, 0.8]}},
        "drift": [0.4, 0.1],
        "steps": 500,
        "tol": 1e-8,
        "out": "fig3_grid",
    }),
    "fig4-large": ("landmarks-bvp", {
        "landmarks": {"circle": {"n": 32, "radius": 1.0, "center": [0.0, 0.0]}},
        "fields": {"grid": {"nx": 7, "ny": 7, "width": 0.4, "inflate": 0.25}},
        "targets": {"forward_lam": "circle_pattern"},
        "drift": [0.4, 0.1],
        "steps": 250,
        "tol": 1e-7,
        "out": "fig4_large",
    }),
    "flat-simulate": ("simulate", {
        "model": "flat",
        "sigma": [1.0, 4.0],
        "paths": 10000,
        "steps": 100,
        "seed": 42,
        "out": "flat_samples",
    }),
    "flat-forward": ("mpp-forward", {
        "model": "flat",
        "sigma": [1.0, 4.0],
        "lam0": [1.0, 0.25],
        "steps": 400,
        "out": "flat_forward",
    }),
    "martinet-singular": ("singular-check", {
        "kind": "martinet-line",
        "steps": 400,
        "out": "martinet_singular",
    }),
    "heisenberg-singular": ("singular-check", {
        "kind": "heisenberg-zero",
        "steps": 400,
        "out": "heisenberg_singular",
    }),
}

# fig4-large generates its target by a forward run from a smooth momentum
# pattern over the circle; dense landmark scenes make arbitrary targets
# numerically unreachable, so the preset stays a well-posed BVP.


def circle_pattern(n: int) -> list:
    import numpy as np
    ang = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    lam = 0.35 * np.stack([np.cos(ang) + 0.6, 0.8 * np.sin(ang) + 0.2], axis=1)
    return lam.tolist()


def validate(command: str, config: dict) -> dict:
    if command not in SCHEMAS:
        raise ConfigError(f"unknown command '{command}'")
    try:
        jsonschema.validate(config, SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {path}: {exc.message}") from exc
    return config


def load_preset(name: str) -> tuple[str, dict]:
    if name not in PRESETS:
        raise ConfigError(
            f"unknown preset '{name}'; available: {', '.join(sorted(PRESETS))}")
    command, cfg = PRESETS[name]
    cfg = dict(cfg)
    cfg["preset"] = name
    if cfg.get("targets", {}).get("forward_lam") == "circle_pattern":
        cfg = dict(cfg)
        cfg["targets"] = {"forward_lam": circle_pattern(cfg["landmarks"]["circle"]["n"])}
    return command, cfg
