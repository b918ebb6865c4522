"""Schema validation for run settings."""
__author__ = "acdnet developers"
__license__ = "GPLv3"

from acdnet.models import VariantChoices


def _section(properties, required=None):
    """Return a closed object schema (unknown keys rejected)."""
    return {
        "type": "object",
        "properties": properties,
        "required": required if required is not None else list(properties),
        "additionalProperties": False,
    }


def get_schema():
    """Return the JSON schema to validate the effective settings."""
    positive_integer = {"type": "integer", "minimum": 1}
    non_negative_integer = {"type": "integer", "minimum": 0}
    probability = {"type": "number", "minimum": 0, "maximum": 1}
    positive_number = {"type": "number", "exclusiveMinimum": 0}
    optional_path = {"type": ["string", "null"]}
    return _section(
        {
            "seed": non_negative_integer,
            "data": _section(
                {
                    "diagnoses": positive_integer,
                    "procedures": positive_integer,
                    "medications": positive_integer,
                    "patients": positive_integer,
                    "mean_visits": {"type": "number", "minimum": 1},
                    "max_visits": positive_integer,
                    "mean_diagnoses": positive_number,
                    "mean_procedures": positive_number,
                    "mean_medications": positive_number,
                    "profiles": positive_integer,
                    "pool_scale": positive_number,
                    "purity": probability,
                    "persistence": probability,
                    "ddi_pairs": non_negative_integer,
                    "ddi_overlap": probability,
                    "min_atoms": positive_integer,
                    "max_atoms": positive_integer,
                    "atom_types": positive_integer,
                    "bond_probability": probability,
                }
            ),
            "encoder": _section(
                {
                    "dim": positive_integer,
                    "heads": positive_integer,
                    "layers": positive_integer,
                    "ff_width": {"type": ["integer", "null"], "minimum": 1},
                    "positional_encoding": {"type": "boolean"},
                    "dropout": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                }
            ),
            "train": _section(
                {
                    "lambda": probability,
                    "lr": positive_number,
                    "epochs": non_negative_integer,
                    "threshold": probability,
                    "step_per": {"type": "string", "enum": ["patient", "epoch"]},
                    "beta1": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                    "beta2": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                }
            ),
            "eval": _section(
                {
                    "rounds": positive_integer,
                    "fraction": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                    "top_k": {
                        "type": "array",
                        "items": positive_integer,
                        "minItems": 1,
                    },
                    "workers": positive_integer,
                }
            ),
            "numerics": _section(
                {
                    "layernorm_eps": positive_number,
                    "cosine_eps": {"type": "number", "minimum": 0},
                    "adam_eps": positive_number,
                    "bce_clamp": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.5},
                }
            ),
            "paths": _section(
                {
                    "dataset": optional_path,
                    "checkpoint": optional_path,
                    "out": optional_path,
                }
            ),
            "ablation": _section(
                {
                    "variants": {
                        "type": "array",
                        "items": {"type": "string", "enum": VariantChoices.values()},
                    },
                }
            ),
        }
    )
