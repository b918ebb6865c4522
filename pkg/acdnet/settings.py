"""Run configuration.

Settings are resolved as DEFAULT_SETTINGS < YAML config file < command-line
overrides, then validated against acdnet.schemas.settings before any compute.
"""
__author__ = "acdnet developers"
__license__ = "GPLv3"

from dataclasses import dataclass
import yaml
from yaml.loader import SafeLoader
from jsonschema import validate, ValidationError

from acdnet import utils
from acdnet.exceptions import ConfigError
from acdnet.schemas import settings as settings_schema

DEFAULT_SETTINGS = {
    "seed": 0,
    "data": {
        "diagnoses": 100,
        "procedures": 60,
        "medications": 131,
        "patients": 600,
        "mean_visits": 2.4,
        "max_visits": 29,
        "mean_diagnoses": 10.51,
        "mean_procedures": 3.84,
        "mean_medications": 11.44,
        "profiles": 20,
        "pool_scale": 2.0,
        "purity": 0.8,
        "persistence": 0.7,
        "ddi_pairs": 448,
        "ddi_overlap": 0.1,
        "min_atoms": 4,
        "max_atoms": 30,
        "atom_types": 8,
        "bond_probability": 0.1,
    },
    "encoder": {
        "dim": 64,
        "heads": 8,
        "layers": 6,
        "ff_width": None,
        "positional_encoding": True,
        "dropout": 0.0,
    },
    "train": {
        "lambda": 0.97,
        "lr": 0.0015,
        "epochs": 30,
        "threshold": 0.5,
        "step_per": "patient",
        "beta1": 0.9,
        "beta2": 0.999,
    },
    "eval": {
        "rounds": 10,
        "fraction": 0.8,
        "top_k": [5, 10],
        "workers": 1,
    },
    "numerics": {
        "layernorm_eps": 1e-5,
        "cosine_eps": 1e-8,
        "adam_eps": 1e-8,
        "bce_clamp": 1e-12,
    },
    "paths": {
        "dataset": "dataset.jsonl",
        "checkpoint": "model.ckpt",
        "out": None,
    },
    "ablation": {
        "variants": [],
    },
}

# Named corpora used by the behavioral checks
PRESETS = {
    "overfit": {
        "data": {
            "patients": 50,
            "purity": 1.0,
            "pool_scale": 0.7,
            "profiles": 5,
        },
        "train": {"epochs": 100},
    },
    "hard": {
        "data": {
            "purity": 0.6,
            "persistence": 0.5,
        },
    },
    "large": {
        "train": {"lr": 0.0002},
    },
}


@dataclass(frozen=True)
class GenConfig:
    """Synthetic corpus generator parameters."""

    diagnoses: int = 100
    procedures: int = 60
    medications: int = 131
    patients: int = 600
    mean_visits: float = 2.4
    max_visits: int = 29
    mean_diagnoses: float = 10.51
    mean_procedures: float = 3.84
    mean_medications: float = 11.44
    profiles: int = 20
    pool_scale: float = 2.0
    purity: float = 0.8
    persistence: float = 0.7
    ddi_pairs: int = 448
    ddi_overlap: float = 0.1
    min_atoms: int = 4
    max_atoms: int = 30
    atom_types: int = 8
    bond_probability: float = 0.1


@dataclass(frozen=True)
class EncoderConfig:
    """Patient and medicine encoder widths."""

    dim: int = 64
    heads: int = 8
    layers: int = 6
    ff_width: int = 256
    positional_encoding: bool = True
    dropout: float = 0.0

    def __post_init__(self):
        if self.dim % self.heads:
            raise ConfigError(f"dim {self.dim} is not divisible by heads {self.heads}")
        if self.layers < 1:
            raise ConfigError(f"layers must be >= 1, got {self.layers}")

    @property
    def head_dim(self):
        """Width of one attention head (d_k)."""
        return self.dim // self.heads


@dataclass(frozen=True)
class TrainConfig:
    """Optimization settings."""

    lam: float = 0.97
    lr: float = 0.0015
    epochs: int = 30
    seed: int = 0
    threshold: float = 0.5
    step_per: str = "patient"
    beta1: float = 0.9
    beta2: float = 0.999

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigError(f"lambda must be within [0, 1], got {self.lam}")
        if self.lr <= 0:
            raise ConfigError(f"lr must be > 0, got {self.lr}")


@dataclass(frozen=True)
class EvalConfig:
    """Bootstrap protocol settings."""

    rounds: int = 10
    fraction: float = 0.8
    top_k: tuple = (5, 10)
    workers: int = 1


@dataclass(frozen=True)
class NumericsConfig:
    """Numerical guards."""

    layernorm_eps: float = 1e-5
    cosine_eps: float = 1e-8
    adam_eps: float = 1e-8
    bce_clamp: float = 1e-12


def load_settings(config_path=None, overrides=None, preset=None):
    """Resolve and validate settings.

    Precedence is defaults < preset < config file < overrides.
    """
    settings = utils.deep_merge(DEFAULT_SETTINGS, {})
    if preset:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset}, choose from {sorted(PRESETS)}")
        settings = utils.deep_merge(settings, PRESETS[preset])
    if config_path:
        try:
            with open(config_path, "r", encoding="utf-8") as config_fh:
                data = yaml.load(config_fh, Loader=SafeLoader)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file {config_path} not found") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"config file {config_path} is not valid YAML: {exc}") from exc
        if data is None:
            # Empty file
            data = {}
        if not isinstance(data, dict):
            raise ConfigError(f"config file {config_path} must contain a mapping")
        settings = utils.deep_merge(settings, data)
    if overrides:
        settings = utils.deep_merge(settings, overrides)
    return validate_settings(settings)


def validate_settings(settings):
    """Validate settings against the schema and cross-field rules."""
    try:
        validate(settings, settings_schema.get_schema())
    except ValidationError as exc:
        raise ConfigError(
            f"invalid setting at {utils.validation_locus(exc)}: {exc.message}"
        ) from exc
    encoder = settings["encoder"]
    if encoder["dim"] % encoder["heads"]:
        raise ConfigError(
            f"encoder.dim {encoder['dim']} is not divisible by encoder.heads {encoder['heads']}"
        )
    data = settings["data"]
    if data["min_atoms"] > data["max_atoms"]:
        raise ConfigError("data.min_atoms must not exceed data.max_atoms")
    return settings


def gen_config(settings):
    """Return the GenConfig view of settings."""
    return GenConfig(**settings["data"])


def encoder_config(settings):
    """Return the EncoderConfig view of settings."""
    encoder = dict(settings["encoder"])
    if encoder.get("ff_width") is None:
        # Conventional 4x expansion
        encoder["ff_width"] = 4 * encoder["dim"]
    return EncoderConfig(**encoder)


def train_config(settings):
    """Return the TrainConfig view of settings."""
    train = dict(settings["train"])
    train["lam"] = train.pop("lambda")
    return TrainConfig(seed=settings["seed"], **train)


def eval_config(settings):
    """Return the EvalConfig view of settings."""
    evaluation = dict(settings["eval"])
    evaluation["top_k"] = tuple(evaluation["top_k"])
    return EvalConfig(**evaluation)


def numerics_config(settings):
    """Return the NumericsConfig view of settings."""
    return NumericsConfig(**settings["numerics"])
