"""Useful functions."""
__author__ = "acdnet developers"
__license__ = "GPLv3"

import base64
import json
import logging
import os
import tempfile

import numpy as np

from acdnet.exceptions import DatasetError

LOG_LEVEL_VARIABLE = "ACDNET_LOG_LEVEL"
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(log_file=None):
    """Configure the acdnet logger from ACDNET_LOG_LEVEL.

    A FileHandler is added when log_file is set.
    """
    level_name = os.environ.get(LOG_LEVEL_VARIABLE, "INFO").upper()
    level = logging.getLevelName(level_name)
    if not isinstance(level, int):
        # Unknown level name
        level = logging.INFO
    logger = logging.getLogger("acdnet")
    logger.setLevel(level)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    stream_h = logging.StreamHandler()
    stream_h.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.addHandler(stream_h)
    if log_file:
        file_h = logging.FileHandler(log_file)
        file_h.setLevel(level)
        file_h.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(file_h)
    return logger


def without_none(record):
    """Copy of record without its None fields, nested records included."""
    return {
        key: without_none(value) if isinstance(value, dict) else value
        for key, value in record.items()
        if value is not None
    }


def deep_merge(base, override):
    """Return a copy of base updated recursively with override."""
    merged = {}
    for key, value in base.items():
        merged[key] = deep_merge(value, {}) if isinstance(value, dict) else value
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def derive_seed(*parts):
    """Derive a child seed from integer parts (deterministic)."""
    return int(np.random.SeedSequence([int(part) for part in parts]).generate_state(1)[0])


def encode_array(array):
    """Encode a float64 array as base64 of little-endian bytes."""
    data = np.ascontiguousarray(array, dtype="<f8")
    return base64.b64encode(data.tobytes()).decode("ascii")


def decode_array(payload, shape):
    """Decode encode_array output back to an array with the given shape."""
    try:
        raw = base64.b64decode(payload.encode("ascii"), validate=True)
    except ValueError as exc:
        raise DatasetError(f"invalid base64 payload: {exc}") from exc
    data = np.frombuffer(raw, dtype="<f8").astype(np.float64)
    expected = int(np.prod(shape)) if shape else 1
    if data.size != expected:
        raise DatasetError(
            f"payload holds {data.size} values, shape {list(shape)} needs {expected}"
        )
    return data.reshape(shape)


def multi_hot(indices, size):
    """Return a float64 0/1 vector with ones at indices."""
    vector = np.zeros(size, dtype=np.float64)
    if len(indices):
        vector[list(indices)] = 1.0
    return vector


def dump_record(record):
    """Serialize one container record (deterministic bytes)."""
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def write_records(path, records):
    """Write line-delimited records atomically.

    The file is written to a temporary sibling and moved in place on success,
    so a failure never leaves a partial file behind.
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".acdnet-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as out_fh:
            for record in records:
                out_fh.write(dump_record(record))
                out_fh.write("\n")
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise


def read_records(path):
    """Yield (line number, record) from a line-delimited file."""
    try:
        with open(path, "r", encoding="utf-8") as in_fh:
            for line_number, line in enumerate(in_fh, start=1):
                if not line.strip():
                    # Skip blank lines
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise DatasetError(f"{path}: line {line_number}: {exc.msg}") from exc
                if not isinstance(record, dict):
                    raise DatasetError(f"{path}: line {line_number}: record must be an object")
                yield line_number, record
    except FileNotFoundError as exc:
        raise DatasetError(f"{path} not found") from exc


def validation_locus(exc):
    """Return the JSON path of a jsonschema ValidationError."""
    path = "/".join(str(item) for item in exc.absolute_path)
    return path if path else "<root>"
