"""Run configuration: parsing, profiles and serialisation."""
from __future__ import annotations

import copy
import enum
import json
import math
from typing import Any, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .dynamics import SimConfig
from .errors import ConfigError


class Experiment(str, enum.Enum):
    NOISE_PATHS = "noise_paths"
    TRANSPORT = "transport"
    PDF = "pdf"
    ISOTROPY = "isotropy"
    SCALING_SWEEP = "scaling_sweep"
    VERIFY = "verify"

    @classmethod
    def _missing_(cls, value):
        if isinstance(value, str):
            key = value.lower().replace("-", "_")
            for member in cls:
                if member.value == key:
                    return member
        return None


class Profile(str, enum.Enum):
    DESK = "desk"
    PAPER = "paper"


TWO_PI = 2.0 * math.pi

# Profile values fill keys the document leaves unset; explicit values win.
PROFILES: dict[Profile, dict[str, Any]] = {
    Profile.DESK: {
        "sim": {"n_particles": 2000, "dt": 1e-2},
        "sweep_etas": [TWO_PI / n for n in (10, 14, 20, 28, 40)],
    },
    Profile.PAPER: {
        "sim": {"n_particles": 10_000, "dt": 1e-3},
        "sweep_etas": [TWO_PI / n for n in (10, 12, 14, 17, 20, 24, 28, 34, 40)],
    },
}


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    experiment: Experiment
    sim: Optional[SimConfig] = None
    sweep_etas: Optional[list[float]] = None
    thetas: Optional[list[float]] = None
    output_dir: str = "levyflow-out"
    profile: Optional[Profile] = None
    moment_beta: float = Field(1.0, gt=0)
    n_bins: int = Field(60, ge=10)
    n_sample_paths: int = Field(5, ge=0)
    balance_velocity: bool = False
    stable_sigma_beta: float = Field(0.5, gt=0, lt=1)
    verify_seed: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _check(self) -> "RunConfig":
        if self.experiment is not Experiment.VERIFY and self.sim is None:
            raise ValueError(f"experiment {self.experiment.value} requires a sim section")
        if self.experiment is Experiment.SCALING_SWEEP and not self.sweep_etas:
            raise ValueError("scaling_sweep requires a non-empty sweep_etas")
        if self.experiment is Experiment.ISOTROPY and not self.thetas:
            raise ValueError("isotropy requires a non-empty thetas")
        if self.sweep_etas is not None and any(not e > 0 for e in self.sweep_etas):
            raise ValueError("sweep_etas must be positive")
        return self


def _merge_defaults(doc: dict, defaults: dict) -> dict:
    out = dict(doc)
    for key, val in defaults.items():
        if key not in out:
            out[key] = copy.deepcopy(val)
        elif isinstance(val, dict) and isinstance(out[key], dict):
            out[key] = _merge_defaults(out[key], val)
    return out


def _format_errors(err: ValidationError) -> str:
    parts = []
    for e in err.errors():
        path = ".".join(str(p) for p in e["loc"]) or "<root>"
        msg = e["msg"]
        if msg.startswith("Value error, "):
            msg = msg[len("Value error, "):]
        parts.append(f"{path}: {msg}")
    return "; ".join(parts)


def load_document(text: str) -> dict:
    """YAML or JSON text to a mapping (JSON is a YAML subset)."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed document: {exc}") from exc
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("<root>: the document must be a mapping")
    return doc


def build_config(
    doc: dict,
    *,
    experiment: Optional[str] = None,
    profile: Optional[str] = None,
    seed: Optional[int] = None,
    output_dir: Optional[str] = None,
) -> RunConfig:
    """Validate a raw mapping, applying command-line overrides first."""
    doc = copy.deepcopy(doc)
    if isinstance(doc.get("experiment"), str):
        try:
            doc["experiment"] = Experiment(doc["experiment"]).value
        except ValueError:
            pass
    if experiment is not None:
        want = Experiment(experiment)
        have = doc.get("experiment")
        if have is not None and have != want.value:
            raise ConfigError(f"experiment: document says {have!r} but {want.value!r} was requested")
        doc["experiment"] = want.value
    if profile is not None:
        doc["profile"] = Profile(profile).value
    if doc.get("profile") is not None:
        try:
            prof = Profile(doc["profile"])
        except ValueError as exc:
            raise ConfigError(f"profile: unknown profile {doc['profile']!r}") from exc
        defaults = dict(PROFILES[prof])
        if doc.get("experiment") != Experiment.SCALING_SWEEP.value:
            defaults.pop("sweep_etas")
        if doc.get("sim") is None and doc.get("experiment") == Experiment.VERIFY.value:
            defaults.pop("sim")
        doc = _merge_defaults(doc, defaults)
    if seed is not None:
        if isinstance(doc.get("sim"), dict):
            doc["sim"]["seed"] = int(seed)
        doc["verify_seed"] = int(seed)
    if output_dir is not None:
        doc["output_dir"] = str(output_dir)
    try:
        return RunConfig.model_validate(doc)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc)) from None


def parse_config(text: str, **overrides) -> RunConfig:
    """Parse a YAML/JSON document into a fully populated ``RunConfig``."""
    return build_config(load_document(text), **overrides)


def config_to_dict(config: RunConfig) -> dict:
    return config.model_dump(mode="json")


def dump_config(config: RunConfig) -> str:
    """YAML text whose parse gives back ``config``."""
    return yaml.safe_dump(config_to_dict(config), sort_keys=True)


def dump_config_json(config: RunConfig) -> str:
    return json.dumps(config_to_dict(config), indent=2, sort_keys=True)
