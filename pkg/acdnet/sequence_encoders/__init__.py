"""Sequence encoders over visit-level rows.

Each module exposes register(params, prefix, cfg, rng) and
encode(params, prefix, seq, cfg, context) returning a tensor shaped like seq.
"""
__author__ = "acdnet developers"
__license__ = "GPLv3"

import importlib
from typing import NamedTuple, Optional

import numpy as np

from acdnet import tensor as T
from acdnet.exceptions import ConfigError

ENCODERS = ["transformer", "gru", "rnn"]


class EncodeContext(NamedTuple):
    """Per-forward options shared by the encoders."""

    layernorm_eps: float = 1e-5
    dropout: float = 0.0
    rng: Optional[np.random.Generator] = None
    trace: Optional[list] = None


def get_encoder(kind):
    """Return the encoder module for kind."""
    if kind not in ENCODERS:
        raise ConfigError(f"unknown sequence encoder {kind}, choose from {ENCODERS}")
    return importlib.import_module(f"acdnet.sequence_encoders.{kind}")


def apply_dropout(context, x):
    """Inverted dropout when training with a positive rate."""
    if context is None or context.rng is None or context.dropout <= 0:
        return x
    return T.dropout(x, context.dropout, context.rng)


def trace_weights(context, name, weights):
    """Append attention weights to the trace, when tracing."""
    if context is not None and context.trace is not None:
        context.trace.append((name, np.array(weights, dtype=np.float64)))


def glorot(rng, rows, columns):
    """Glorot normal initialization."""
    return rng.normal(0.0, np.sqrt(2.0 / (rows + columns)), (rows, columns))
