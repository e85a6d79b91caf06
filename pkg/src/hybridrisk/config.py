"""Experiment configuration: one JSON document, validated up front."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ConfigError, LeakageError

EVAL_MODES = ("natural", "balanced")

# fixed offsets from the master seed for each randomized stage
SEED_OFFSETS = {
    "split": 0, "smote": 1, "svm_subsample": 2, "random_forest": 3, "gbt": 4,
    "bootstrap": 5, "balanced_eval": 6,
}


def default_config() -> dict:
    ref = resources.files("hybridrisk") / "data" / "configs" / "default.json"
    return json.loads(ref.read_text(encoding="utf-8"))


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _resolve(path, root: Path):
    if path is None or str(path).startswith("builtin:"):
        return path
    p = Path(path)
    return str(p if p.is_absolute() else (root / p).resolve())


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict

    def __getitem__(self, key):
        return self.raw[key]

    @property
    def seed(self) -> int:
        return int(self.raw["seed"])

    def seed_for(self, stage: str) -> int:
        section = self.raw.get(stage) or self.raw["learners"].get(stage) or {}
        if isinstance(section, dict) and section.get("seed") is not None:
            return int(section["seed"])
        return self.seed + SEED_OFFSETS[stage]

    @property
    def tau(self) -> float:
        return float(self.raw["tau"])

    @property
    def eval_mode(self) -> str:
        return self.raw["eval_mode"]

    def to_dict(self):
        return copy.deepcopy(self.raw)


def validate(raw: dict) -> ExperimentConfig:
    try:
        if not isinstance(raw["seed"], int):
            raise ConfigError("seed must be an integer")
        frac = float(raw["split"]["fraction"])
        if not 0 < frac < 1:
            raise ConfigError("split.fraction must lie in (0, 1)")
        tau = float(raw["tau"])
        if not 0 < tau < 1:
            raise ConfigError("tau must lie in (0, 1)")
        if raw["eval_mode"] not in EVAL_MODES:
            raise ConfigError(f"eval_mode must be one of {EVAL_MODES}")
        if int(raw["bootstrap"]["B"]) < 1:
            raise ConfigError("bootstrap.B must be >= 1")
        scope = raw["smote"].get("scope", "train")
        if scope != "train":
            raise LeakageError(f"SMOTE scope {scope!r} would resample non-training rows")
        for name in ("logistic", "svm", "random_forest", "gbt"):
            if name not in raw["learners"]:
                raise ConfigError(f"learners.{name} missing")
        for name, spec in raw["ensembles"].items():
            if len(spec["members"]) != len(spec["weights"]):
                raise ConfigError(f"ensemble {name}: members and weights differ in length")
            for mem in spec["members"]:
                if mem not in raw["learners"]:
                    raise ConfigError(f"ensemble {name}: unknown member {mem!r}")
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed config: missing or invalid {exc}") from exc
    return ExperimentConfig(raw)


def load_config(path=None, **overrides) -> ExperimentConfig:
    """Merge a user JSON file over the bundled defaults and validate.

    Relative data paths are resolved against the config file's directory.
    Keyword overrides (``seed``, ``tau``, ``eval_mode``, ``B``, ``mapping``)
    come from the command line and win over the file.
    """
    raw = default_config()
    root = Path.cwd()
    if path is not None:
        path = Path(path)
        try:
            user = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        raw = _merge(raw, user)
        root = path.resolve().parent
    if overrides.get("seed") is not None:
        raw["seed"] = int(overrides["seed"])
    if overrides.get("tau") is not None:
        raw["tau"] = float(overrides["tau"])
    if overrides.get("eval_mode") is not None:
        raw["eval_mode"] = overrides["eval_mode"]
    if overrides.get("B") is not None:
        raw["bootstrap"]["B"] = int(overrides["B"])
    mapping_root = root
    if overrides.get("mapping") is not None:
        raw["mapping"] = overrides["mapping"]
        mapping_root = Path.cwd()
    raw["mapping"] = _resolve(raw.get("mapping"), mapping_root)
    for section in ("primary", "external"):
        for key in ("csv", "schema"):
            if raw.get(section, {}).get(key) is not None:
                raw[section][key] = _resolve(raw[section][key], root)
    return validate(raw)
