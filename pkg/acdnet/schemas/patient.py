"""Schema validation for PatientRecord."""
__author__ = "acdnet developers"
__license__ = "GPLv3"

from jsonschema import validate, ValidationError

from acdnet import utils
from acdnet.exceptions import BoundsError, DatasetError
from acdnet.models import CodeKindChoices, PatientRecord, Visit


def get_code_schema(size):
    """Return the schema of a code set bounded by the vocabulary size."""
    return {
        "type": "array",
        "items": {"type": "integer", "minimum": 0, "maximum": size - 1},
        "uniqueItems": True,
    }


def get_schema(vocab):
    """Return the JSON schema to validate one patient record."""
    return {
        "type": "object",
        "properties": {
            "kind": {"type": "string", "enum": ["patient"]},
            "id": {"type": "string", "minLength": 1},
            "visits": {
                "type": "array",
                "minItems": 1,
                "items": {
                    "type": "object",
                    "properties": {
                        kind: get_code_schema(vocab.size(kind)) for kind, value in CodeKindChoices()
                    },
                    "required": ["diagnoses", "procedures"],
                    "additionalProperties": False,
                },
            },
        },
        "required": ["kind", "id", "visits"],
        "additionalProperties": False,
    }


def dump(record):
    """Return the serializable form of a PatientRecord."""
    return {
        "kind": "patient",
        "id": record.patient_id,
        "visits": [
            {
                "diagnoses": list(visit.diagnoses),
                "procedures": list(visit.procedures),
                "medications": list(visit.medications),
            }
            for visit in record.visits
        ],
    }


def create(data, vocab, locus="record"):
    """Validate data and return a PatientRecord.

    Out-of-vocabulary codes raise BoundsError, any other violation DatasetError.
    """
    try:
        validate(data, get_schema(vocab))
    except ValidationError as exc:
        message = f"{locus}: invalid field {utils.validation_locus(exc)}: {exc.message}"
        if exc.validator == "maximum":
            raise BoundsError(message) from exc
        raise DatasetError(message) from exc
    visits = tuple(
        Visit.create(
            visit["diagnoses"],
            visit["procedures"],
            visit.get("medications", []),
        )
        for visit in data["visits"]
    )
    return PatientRecord(data["id"], visits)
