"""Job configuration: schema-validated JSON driving the CLI commands."""

from __future__ import annotations

import json
from dataclasses import dataclass

import jsonschema
import numpy as np

from .groups import GroupModel, QuadratureRule, build_quadrature, builtin_group
from .spectral import BandMask, UniformGrid, default_null_guard, mask_catalog

CONFIG_VERSION = "1"

SCHEMA = {
    "type": "object",
    "required": ["version", "group", "mask", "grid", "quadrature"],
    "properties": {
        "version": {"type": "string"},
        "group": {
            "type": "object",
            "required": ["name"],
            "properties": {
                "name": {"type": "string"},
                "params": {"type": "object"},
            },
        },
        "mask": {
            "type": "object",
            "required": ["name"],
            "properties": {
                "name": {"type": "string"},
                "params": {"type": "object"},
                "null_guard": {"type": ["number", "null"]},
            },
        },
        "grid": {
            "type": "object",
            "required": ["shape", "extent"],
            "properties": {
                "shape": {"type": "array", "items": {"type": "integer", "minimum": 2}},
                "extent": {
                    "type": "array",
                    "items": {
                        "type": "array",
                        "items": {"type": "number"},
                        "minItems": 2,
                        "maxItems": 2,
                    },
                },
            },
        },
        "quadrature": {
            "type": "object",
            "required": ["resolution"],
            "properties": {
                "resolution": {
                    "type": "array",
                    "items": {"type": "integer", "minimum": 2},
                },
                "truncation": {
                    "type": "array",
                    "items": {
                        "type": ["array", "null"],
                        "items": {"type": "number"},
                    },
                },
            },
        },
        "tolerances": {
            "type": "object",
            "additionalProperties": {"type": "number", "exclusiveMinimum": 0},
        },
        "options": {"type": "object"},
    },
}

DEFAULTS = {
    "tolerances": {"admissible": 1e-3, "leakage": 0.05},
    "options": {"seed_center": 2.0, "seed_width": 0.8, "sample_count": 2000},
}


@dataclass
class JobConfig:
    """Validated configuration with lazy builders for the heavy objects."""

    raw: dict

    @classmethod
    def from_dict(cls, data: dict) -> "JobConfig":
        jsonschema.validate(data, SCHEMA)
        merged = dict(data)
        for key, defaults in DEFAULTS.items():
            merged[key] = {**defaults, **data.get(key, {})}
        for name, value in merged["tolerances"].items():
            if value <= 0:
                raise ValueError(f"tolerance {name!r} must be positive")
        return cls(raw=merged)

    @classmethod
    def from_file(cls, path) -> "JobConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def group(self) -> GroupModel:
        spec = self.raw["group"]
        return builtin_group(spec["name"], **spec.get("params", {}))

    def grid(self) -> UniformGrid:
        spec = self.raw["grid"]
        return UniformGrid.from_extent(spec["shape"], spec["extent"])

    def mask(self) -> BandMask:
        spec = self.raw["mask"]
        guard = spec.get("null_guard")
        if guard is None:
            guard = default_null_guard(self.grid())
        return mask_catalog(spec["name"], spec.get("params", {}), guard)

    def quadrature(self, g: GroupModel | None = None) -> QuadratureRule:
        g = g or self.group()
        spec = self.raw["quadrature"]
        trunc = spec.get("truncation")
        if trunc is not None:
            trunc = [None if t is None else tuple(t) for t in trunc]
        return build_quadrature(g, spec["resolution"], trunc)

    def tolerance(self, name: str) -> float:
        return float(self.raw["tolerances"][name])

    def option(self, name: str, default=None):
        return self.raw["options"].get(name, default)

    def to_json(self) -> dict:
        return self.raw


def example_config(group: str = "dilation1d_pos") -> dict:
    """A ready-to-run configuration, used as the CLI default scaffold."""
    if group in ("dilation1d_pos", "dilation1d_full"):
        grid = {"shape": [4096], "extent": [[-8.0, 8.0]]}
        resolution = [512]
    else:
        grid = {"shape": [256, 256], "extent": [[-8.0, 8.0], [-8.0, 8.0]]}
        # one entry per chart axis of the dilation group
        resolution = {"rotation2": [256], "shear2": [64]}.get(group, [64, 32])
    return {
        "version": CONFIG_VERSION,
        "group": {"name": group, "params": {}},
        "mask": {"name": "full", "params": {}, "null_guard": None},
        "grid": grid,
        "quadrature": {"resolution": resolution},
        "tolerances": dict(DEFAULTS["tolerances"]),
        "options": dict(DEFAULTS["options"]),
    }
