"""Single-layer simple (Elman) recurrent encoder."""
__author__ = "acdnet developers"
__license__ = "GPLv3"

import numpy as np

from acdnet import tensor as T
from acdnet.exceptions import ContractError
from acdnet.sequence_encoders import apply_dropout, glorot


def register(params, prefix, cfg, rng):
    """Register input, recurrent and bias weights."""
    params.add(f"{prefix}.w", glorot(rng, cfg.dim, cfg.dim))
    params.add(f"{prefix}.u", glorot(rng, cfg.dim, cfg.dim))
    params.add(f"{prefix}.b", np.zeros(cfg.dim))


def encode(params, prefix, seq, cfg, context=None):
    """h_t = tanh(x_t W + h_(t-1) U + b); the final state is repeated per position."""
    length = seq.shape[0]
    if length < 1:
        raise ContractError("recurrent input sequence is empty")
    hidden = T.Tensor(np.zeros(cfg.dim))
    for position in range(length):
        hidden = T.tanh(
            T.add(
                T.add(
                    T.matmul(seq[position], params[f"{prefix}.w"]),
                    T.matmul(hidden, params[f"{prefix}.u"]),
                ),
                params[f"{prefix}.b"],
            )
        )
    hidden = apply_dropout(context, hidden)
    return T.stack([hidden] * length, axis=0)
