"""Experiment configuration: JSON schema, defaults and validation."""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import jsonschema

from .model import ModelError, make_model
from .verify import CHECK_IDS


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 3)."""


DEFAULTS = {
    "r_grid": {"start": 2.0, "ratio": math.sqrt(2.0), "count": 24},
    "solver": {"tol": 1e-6, "max_grid_doublings": 8},
    "checks": "all",
    "seed": 0,
    "jobs": 1,
    "output": {"csv": "curves.csv", "json": "report.json"},
}

_FAMILY = {
    "type": "object",
    "properties": {
        "kind": {
            "enum": ["flat-cylinder", "power", "exp", "dprs", "mu-family", "euclid", "generic"]
        },
        "alpha": {"type": "number"},
        "beta": {"type": "number"},
        "gamma": {"type": "number"},
        "mu": {"enum": ["log-beta", "power", "log"]},
        "n": {"type": "integer"},
        "model_kind": {"enum": ["cylinder", "plane"]},
        "log_weight": {"type": "string"},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

SCHEMA = {
    "type": "object",
    "properties": {
        "families": {"type": "array", "items": _FAMILY},
        "r_grid": {
            "type": "object",
            "properties": {
                "start": {"type": "number", "exclusiveMinimum": 0},
                "ratio": {"type": "number", "exclusiveMinimum": 1, "maximum": 4},
                "count": {"type": "integer", "minimum": 8},
            },
            "additionalProperties": False,
        },
        "solver": {
            "type": "object",
            "properties": {
                "tol": {"type": "number", "minimum": 1e-12, "maximum": 1e-3},
                "max_grid_doublings": {"type": "integer", "minimum": 1, "maximum": 12},
            },
            "additionalProperties": False,
        },
        "checks": {
            "oneOf": [
                {"const": "all"},
                {"type": "array", "items": {"enum": list(CHECK_IDS)}, "uniqueItems": True},
            ]
        },
        "seed": {"type": "integer", "minimum": 0},
        "jobs": {"type": "integer", "minimum": 1},
        "output": {
            "type": "object",
            "properties": {"csv": {"type": "string"}, "json": {"type": "string"}},
            "additionalProperties": False,
        },
        "faults": {
            "type": "object",
            "properties": {
                "t0": {"type": "number"},
                "eigen_scale": {
                    "type": "object",
                    "additionalProperties": {"type": "number", "exclusiveMinimum": 0},
                },
            },
            "additionalProperties": False,
        },
    },
    "required": ["families"],
    "additionalProperties": False,
}


def family_params(entry: dict):
    """``(family, params)`` for :func:`typelab.model.make_model`."""
    params = {k: v for k, v in entry.items() if k != "kind"}
    if "model_kind" in params:
        params["kind"] = params.pop("model_kind")
    return entry["kind"], params


@dataclass
class ExperimentConfig:
    families: list
    r_grid: dict = field(default_factory=lambda: dict(DEFAULTS["r_grid"]))
    solver: dict = field(default_factory=lambda: dict(DEFAULTS["solver"]))
    checks: object = "all"
    seed: int = 0
    jobs: int = 1
    output: dict = field(default_factory=lambda: dict(DEFAULTS["output"]))
    faults: Optional[dict] = None

    @property
    def check_ids(self) -> tuple:
        return tuple(CHECK_IDS) if self.checks == "all" else tuple(self.checks)

    def models(self) -> list:
        return [make_model(*family_params(f)) for f in self.families]

    def to_dict(self) -> dict:
        out = {
            "families": copy.deepcopy(self.families),
            "r_grid": dict(self.r_grid),
            "solver": dict(self.solver),
            "checks": self.checks if self.checks == "all" else list(self.checks),
            "seed": self.seed,
            "jobs": self.jobs,
            "output": dict(self.output),
        }
        if self.faults is not None:
            out["faults"] = copy.deepcopy(self.faults)
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _path(error) -> str:
    parts = list(error.absolute_path)
    return "/".join(str(p) for p in parts) or "<root>"


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a JSON experiment description; apply defaults."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ConfigError(f"{_path(e)}: {e.message}")
    merged = {
        key: ({**DEFAULTS[key], **doc.get(key, {})} if isinstance(DEFAULTS[key], dict)
              else doc.get(key, DEFAULTS[key]))
        for key in DEFAULTS
    }
    config = ExperimentConfig(families=doc["families"], faults=doc.get("faults"), **merged)
    for i, entry in enumerate(config.families):
        try:
            make_model(*family_params(entry))
        except ModelError as exc:
            raise ConfigError(f"families/{i}: {exc}") from None
    return config


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)
