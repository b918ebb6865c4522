"""Checkpoint container: header, one record per parameter, optional Adam state."""
__author__ = "acdnet developers"
__license__ = "GPLv3"

import logging
from typing import NamedTuple, Optional

from acdnet import settings as acdnet_settings
from acdnet import utils
from acdnet.exceptions import DatasetError
from acdnet.models import Vocab
from acdnet.network import ACDNet
from acdnet.schemas import checkpoint as checkpoint_schema

LOGGER = logging.getLogger(__name__)


class Checkpoint(NamedTuple):
    """Decoded checkpoint content."""

    header: dict
    params: dict
    adam: Optional[dict]


def last_path(path):
    """Path of the resumable companion checkpoint."""
    return f"{path}.last"


def checkpoint_records(model, settings, epoch=0, optimizer=None, best=None):
    """Return the records of a checkpoint."""
    header = {
        "kind": "header",
        "format_version": checkpoint_schema.FORMAT_VERSION,
        "settings": settings,
        "vocab": {
            "diagnoses": model.vocab.diagnoses,
            "procedures": model.vocab.procedures,
            "medications": model.vocab.medications,
        },
        "variant": model.variant,
        "epoch": epoch,
        "atom_types": model.atom_types,
    }
    if best is not None:
        header["best"] = best
    records = [header]
    for name, tensor in model.params.items():
        records.append(
            {
                "kind": "param",
                "name": name,
                "shape": list(tensor.shape),
                "data": utils.encode_array(tensor.data),
            }
        )
    if optimizer is not None:
        for name, (first, second, step) in optimizer.state().items():
            records.append(
                {
                    "kind": "adam",
                    "name": name,
                    "shape": list(first.shape),
                    "first": utils.encode_array(first),
                    "second": utils.encode_array(second),
                    "step": step,
                }
            )
    return records


def save_checkpoint(path, model, settings, epoch=0, optimizer=None, best=None):
    """Write a checkpoint atomically."""
    utils.write_records(path, checkpoint_records(model, settings, epoch, optimizer, best))
    LOGGER.debug("checkpoint written to %s (epoch %d)", path, epoch)


def read_checkpoint(path):
    """Read and validate a checkpoint file."""
    header = None
    params = {}
    adam = {}
    for line_number, data in utils.read_records(path):
        locus = f"{path}: line {line_number}"
        kind = checkpoint_schema.check(data, locus)
        if header is None:
            if kind != "header":
                raise DatasetError(f"{locus}: first record must be the header, got {kind!r}")
            header = data
            continue
        if kind == "header":
            raise DatasetError(f"{locus}: duplicate header")
        name = data["name"]
        target = params if kind == "param" else adam
        if name in target:
            raise DatasetError(f"{locus}: duplicate {kind} record for {name}")
        if kind == "param":
            params[name] = utils.decode_array(data["data"], tuple(data["shape"]))
        else:
            shape = tuple(data["shape"])
            adam[name] = (
                utils.decode_array(data["first"], shape),
                utils.decode_array(data["second"], shape),
                data["step"],
            )
    if header is None:
        raise DatasetError(f"{path}: empty checkpoint")
    return Checkpoint(header, params, adam or None)


def restore_model(checkpoint):
    """Build the model described by a checkpoint and load its parameters."""
    header = checkpoint.header
    settings = acdnet_settings.validate_settings(header["settings"])
    vocab = Vocab(**header["vocab"])
    model = ACDNet(
        vocab,
        acdnet_settings.encoder_config(settings),
        header["variant"],
        header["atom_types"],
        settings["seed"],
        acdnet_settings.numerics_config(settings),
    )
    try:
        model.params.load_state(checkpoint.params)
    except ValueError as exc:
        raise DatasetError(f"checkpoint does not fit variant {header['variant']}: {exc}") from exc
    return model


def load_checkpoint(path):
    """Return (model, checkpoint) from a checkpoint file."""
    checkpoint = read_checkpoint(path)
    return restore_model(checkpoint), checkpoint
