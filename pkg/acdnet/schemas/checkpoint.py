"""Schema validation for checkpoint records."""
__author__ = "acdnet developers"
__license__ = "GPLv3"

from jsonschema import validate, ValidationError

from acdnet import utils
from acdnet.exceptions import DatasetError
from acdnet.models import VariantChoices

FORMAT_VERSION = 1

SHAPE = {"type": "array", "items": {"type": "integer", "minimum": 1}}


def get_header_schema():
    """Return the JSON schema to validate the checkpoint header."""
    size = {"type": "integer", "minimum": 1}
    return {
        "type": "object",
        "properties": {
            "kind": {"type": "string", "enum": ["header"]},
            "format_version": {"type": "integer", "enum": [FORMAT_VERSION]},
            "settings": {"type": "object"},
            "vocab": {
                "type": "object",
                "properties": {
                    "diagnoses": size,
                    "procedures": size,
                    "medications": size,
                },
                "required": ["diagnoses", "procedures", "medications"],
            },
            "variant": {"type": "string", "enum": VariantChoices.values()},
            "epoch": {"type": "integer", "minimum": 0},
            "atom_types": size,
            "best": {
                "type": "object",
                "properties": {
                    "epoch": {"type": "integer", "minimum": 0},
                    "jaccard": {"type": "number"},
                },
                "required": ["epoch", "jaccard"],
                "additionalProperties": False,
            },
        },
        "required": ["kind", "format_version", "settings", "vocab", "variant", "epoch", "atom_types"],
        "additionalProperties": False,
    }


def get_param_schema():
    """Return the JSON schema to validate a parameter record."""
    return {
        "type": "object",
        "properties": {
            "kind": {"type": "string", "enum": ["param"]},
            "name": {"type": "string", "minLength": 1},
            "shape": SHAPE,
            "data": {"type": "string"},
        },
        "required": ["kind", "name", "shape", "data"],
        "additionalProperties": False,
    }


def get_adam_schema():
    """Return the JSON schema to validate an optimizer state record."""
    return {
        "type": "object",
        "properties": {
            "kind": {"type": "string", "enum": ["adam"]},
            "name": {"type": "string", "minLength": 1},
            "shape": SHAPE,
            "first": {"type": "string"},
            "second": {"type": "string"},
            "step": {"type": "integer", "minimum": 1},
        },
        "required": ["kind", "name", "shape", "first", "second", "step"],
        "additionalProperties": False,
    }


SCHEMAS = {
    "header": get_header_schema,
    "param": get_param_schema,
    "adam": get_adam_schema,
}


def check(data, locus="record"):
    """Validate a checkpoint record by its kind."""
    kind = data.get("kind")
    if kind not in SCHEMAS:
        raise DatasetError(f"{locus}: invalid field kind: unknown record kind {kind!r}")
    try:
        validate(data, SCHEMAS[kind]())
    except ValidationError as exc:
        raise DatasetError(
            f"{locus}: invalid field {utils.validation_locus(exc)}: {exc.message}"
        ) from exc
    return kind
