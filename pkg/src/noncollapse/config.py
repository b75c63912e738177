"""Experiment configuration: JSON documents with dotted-path flag overrides."""

from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

from .errors import ConfigParseError, ConfigValidationError, SpeedParseError
from .geometry import GENERATORS, load_geometry
from .speeds import parse_speed

COMMANDS = ("run-flow", "analyze-noncollapse", "run-containment",
            "verify-linearized", "check-speeds")

FLOW_DEFAULTS = {
    "t_end": None,
    "dt_safety": 0.2,
    "resample_every": 10,
    "kappa_cap": None,
    "snapshot_every": 50,
    "max_steps": None,
}

ANALYZER_DEFAULTS = {
    "exclusion_radius_factor": 3.0,
    "M": None,
    "defect_tol_rel": 1e-3,
}

LINEARIZED_DEFAULTS = {
    "labels": ["speed", "normal", "scaling"],
    "resolutions": [64, 128, 256],
    "steps": 12,
    "min_order": 1.0,
}


@dataclass
class ExperimentConfig:
    command: str
    speed: Optional[str] = None
    geometry: Optional[Dict[str, Any]] = None
    geometry2: Optional[Dict[str, Any]] = None
    case: str = "Disjoint"
    flow: Dict[str, Any] = field(default_factory=lambda: dict(FLOW_DEFAULTS))
    analyzer: Dict[str, Any] = field(default_factory=lambda: dict(ANALYZER_DEFAULTS))
    linearized: Dict[str, Any] = field(default_factory=lambda: dict(LINEARIZED_DEFAULTS))
    output_dir: str = "out"
    seed: int = 0
    threads: Optional[int] = None
    plots: bool = True

    def speed_function(self):
        try:
            return parse_speed(self.speed)
        except SpeedParseError as exc:
            raise ConfigParseError(str(exc)) from exc


def _merge(base, override):
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = val
    return out


def _set_dotted(doc, dotted, value):
    keys = dotted.split(".")
    node = doc
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ConfigParseError(f"cannot set {dotted!r}: {k!r} is not an object")
    node[keys[-1]] = value


def parse_config(path=None, overrides=None, flag_doc=None):
    """Build a validated ExperimentConfig from a JSON file plus overrides.

    `overrides` maps dotted paths (e.g. "flow.t_end") to values; flags win
    over file contents.
    """
    doc: Dict[str, Any] = {}
    if path is not None:
        if not os.path.exists(path):
            raise ConfigValidationError(f"config file does not exist: {path}")
        try:
            with open(path) as f:
                doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigParseError(f"invalid JSON in {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigParseError(f"config root must be an object in {path}")
    if flag_doc:
        doc = _merge(doc, flag_doc)
    for dotted, value in (overrides or {}).items():
        _set_dotted(doc, dotted, value)
    return validate_config(doc)


def validate_config(doc):
    known = {"command", "speed", "geometry", "geometry2", "case", "flow",
             "analyzer", "linearized", "output_dir", "seed", "threads", "plots"}
    for key in doc:
        if key not in known:
            raise ConfigValidationError(f"unknown config key {key!r}")

    command = doc.get("command")
    if command not in COMMANDS:
        raise ConfigValidationError(
            f"config key 'command' must be one of {COMMANDS}, got {command!r}")

    cfg = ExperimentConfig(
        command=command,
        speed=doc.get("speed"),
        geometry=doc.get("geometry"),
        geometry2=doc.get("geometry2"),
        case=doc.get("case", "Disjoint"),
        flow=_merge(FLOW_DEFAULTS, doc.get("flow", {})),
        analyzer=_merge(ANALYZER_DEFAULTS, doc.get("analyzer", {})),
        linearized=_merge(LINEARIZED_DEFAULTS, doc.get("linearized", {})),
        output_dir=doc.get("output_dir", "out"),
        seed=int(doc.get("seed", 0)),
        threads=doc.get("threads"),
        plots=bool(doc.get("plots", True)),
    )

    if command != "check-speeds":
        if cfg.speed is None:
            raise ConfigValidationError("missing required config key 'speed'")
        cfg.speed_function()  # raises ConfigParseError on a bad token

    needs_geometry = command in ("run-flow", "analyze-noncollapse",
                                 "run-containment", "verify-linearized")
    if needs_geometry:
        if cfg.geometry is None:
            raise ConfigValidationError("missing required config key 'geometry'")
        _validate_geometry(cfg.geometry, "geometry")

    if command == "run-containment":
        if cfg.geometry2 is None:
            raise ConfigValidationError("missing required config key 'geometry2'")
        _validate_geometry(cfg.geometry2, "geometry2")
        if cfg.case not in ("Disjoint", "Nested"):
            raise ConfigValidationError(
                f"config key 'case' must be Disjoint or Nested, got {cfg.case!r}")

    if command in ("run-flow", "analyze-noncollapse", "run-containment"):
        t_end = cfg.flow.get("t_end")
        if t_end is None or not (float(t_end) > 0):
            raise ConfigValidationError("config key 'flow.t_end' must be positive")

    if command == "verify-linearized":
        res = cfg.linearized.get("resolutions")
        if not res or len(res) < 3:
            raise ConfigValidationError(
                "config key 'linearized.resolutions' needs at least 3 entries")
        for lab in cfg.linearized.get("labels", []):
            if lab not in ("speed", "normal", "scaling"):
                raise ConfigValidationError(
                    f"config key 'linearized.labels' has unknown label {lab!r}")
    return cfg


_GEOM_PARAM_KEYS = {
    "circle": {"r": "radius", "N": "N", "cx": None, "cy": None},
    "ellipse": {"a": "a", "b": "b", "N": "N"},
    "sphere": {"r": "radius", "N": "N", "cx": "cx"},
    "ellipsoid": {"a": "a", "b": "b", "N": "N", "cx": "cx"},
    "torus": {"R": "R", "a": "a", "N": "N"},
    "dumbbell": {"R": "R", "rho": "rho", "neck": "neck", "N": "N"},
}


def _validate_geometry(geom, keyname):
    if not isinstance(geom, dict):
        raise ConfigValidationError(f"config key {keyname!r} must be an object")
    if "file" in geom:
        if not os.path.exists(geom["file"]):
            raise ConfigValidationError(
                f"config key '{keyname}.file' does not exist: {geom['file']}")
        return
    gen = geom.get("gen")
    if gen not in GENERATORS:
        raise ConfigValidationError(
            f"config key '{keyname}.gen' must be one of {sorted(GENERATORS)}, "
            f"got {gen!r}")
    allowed = set(_GEOM_PARAM_KEYS[gen]) | {"gen"}
    for key in geom:
        if key not in allowed:
            raise ConfigValidationError(
                f"unknown parameter '{keyname}.{key}' for generator {gen!r}")


def build_geometry(geom, N=None):
    """Instantiate a DiscreteHypersurface from a geometry config block."""
    if "file" in geom:
        return load_geometry(geom["file"])
    gen = geom["gen"]
    kwargs = {}
    center = [0.0, 0.0]
    has_center = False
    for key, val in geom.items():
        if key == "gen":
            continue
        mapped = _GEOM_PARAM_KEYS[gen][key]
        if mapped is None:  # circle center components
            center[0 if key == "cx" else 1] = float(val)
            has_center = True
        else:
            kwargs[mapped] = val
    if has_center:
        kwargs["center"] = tuple(center)
    if N is not None:
        kwargs["N"] = int(N)
    return GENERATORS[gen](**kwargs)
