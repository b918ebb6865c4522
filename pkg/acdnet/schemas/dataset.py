"""Schema validation for dataset header, graph and molecule records."""
__author__ = "acdnet developers"
__license__ = "GPLv3"

from jsonschema import validate, ValidationError

from acdnet import utils
from acdnet.exceptions import BoundsError, DatasetError
from acdnet.models import Molecule, Vocab

FORMAT_VERSION = 1


def get_header_schema():
    """Return the JSON schema to validate the dataset header."""
    size = {"type": "integer", "minimum": 1}
    labels = {"type": "array", "items": {"type": "string"}}
    return {
        "type": "object",
        "properties": {
            "kind": {"type": "string", "enum": ["header"]},
            "format_version": {"type": "integer", "enum": [FORMAT_VERSION]},
            "vocab": {
                "type": "object",
                "properties": {
                    "diagnoses": size,
                    "procedures": size,
                    "medications": size,
                    "labels": {
                        "type": "object",
                        "properties": {
                            "diagnoses": labels,
                            "procedures": labels,
                            "medications": labels,
                        },
                        "required": ["diagnoses", "procedures", "medications"],
                        "additionalProperties": False,
                    },
                },
                "required": ["diagnoses", "procedures", "medications"],
                "additionalProperties": False,
            },
            "generator": {"type": ["object", "null"]},
        },
        "required": ["kind", "format_version", "vocab"],
        "additionalProperties": False,
    }


def get_edges_schema(kind, medications):
    """Return the JSON schema to validate an EHR or DDI edge list."""
    index = {"type": "integer", "minimum": 0, "maximum": medications - 1}
    return {
        "type": "object",
        "properties": {
            "kind": {"type": "string", "enum": [kind]},
            "edges": {
                "type": "array",
                "items": {
                    "type": "array",
                    "items": index,
                    "minItems": 2,
                    "maxItems": 2,
                },
            },
        },
        "required": ["kind", "edges"],
        "additionalProperties": False,
    }


def get_molecule_schema(medications):
    """Return the JSON schema to validate one molecular graph."""
    atom = {"type": "integer", "minimum": 0}
    return {
        "type": "object",
        "properties": {
            "kind": {"type": "string", "enum": ["molecule"]},
            "medication": {"type": "integer", "minimum": 0, "maximum": medications - 1},
            "atom_types": {"type": "array", "items": atom, "minItems": 1},
            "edges": {
                "type": "array",
                "items": {"type": "array", "items": atom, "minItems": 2, "maxItems": 2},
            },
        },
        "required": ["kind", "medication", "atom_types", "edges"],
        "additionalProperties": False,
    }


def _validate(data, schema, locus):
    try:
        validate(data, schema)
    except ValidationError as exc:
        message = f"{locus}: invalid field {utils.validation_locus(exc)}: {exc.message}"
        if exc.validator == "maximum":
            raise BoundsError(message) from exc
        raise DatasetError(message) from exc


def create_vocab(data, locus="header"):
    """Validate a header record and return (Vocab, generator config)."""
    _validate(data, get_header_schema(), locus)
    vocab = data["vocab"]
    try:
        result = Vocab(
            vocab["diagnoses"], vocab["procedures"], vocab["medications"], vocab.get("labels")
        )
    except ValueError as exc:
        raise DatasetError(f"{locus}: {exc}") from exc
    return result, data.get("generator")


def create_edges(data, kind, medications, locus="record"):
    """Validate an edge record and return a list of (i, j) pairs."""
    _validate(data, get_edges_schema(kind, medications), locus)
    edges = []
    for index, (source, target) in enumerate(data["edges"]):
        if source == target:
            raise DatasetError(f"{locus}: invalid field edges/{index}: self-loop on {source}")
        edges.append((source, target))
    return edges


def create_molecule(data, medications, locus="record"):
    """Validate a molecule record and return (medication index, Molecule)."""
    _validate(data, get_molecule_schema(medications), locus)
    n_atoms = len(data["atom_types"])
    for index, (source, target) in enumerate(data["edges"]):
        if source >= n_atoms or target >= n_atoms:
            raise DatasetError(
                f"{locus}: invalid field edges/{index}: atom index out of range for {n_atoms} atoms"
            )
        if source == target:
            raise DatasetError(f"{locus}: invalid field edges/{index}: self-loop on atom {source}")
    molecule = Molecule(tuple(data["atom_types"]), tuple(tuple(edge) for edge in data["edges"]))
    return data["medication"], Molecule(molecule.atom_types, molecule.bonds())


def dump_header(vocab, generator=None):
    """Return the header record."""
    return {
        "kind": "header",
        "format_version": FORMAT_VERSION,
        "vocab": vocab.as_dict(),
        "generator": generator,
    }


def dump_edges(kind, adjacency):
    """Return the edge record of a symmetric adjacency (upper triangle)."""
    size = adjacency.shape[0]
    return {
        "kind": kind,
        "edges": [
            [source, target]
            for source in range(size)
            for target in range(source + 1, size)
            if adjacency[source, target]
        ],
    }


def dump_molecule(medication, molecule):
    """Return the molecule record."""
    return {
        "kind": "molecule",
        "medication": medication,
        "atom_types": list(molecule.atom_types),
        "edges": [list(edge) for edge in molecule.edges],
    }
