"""Single-layer gated recurrent encoder."""
__author__ = "acdnet developers"
__license__ = "GPLv3"

import numpy as np

from acdnet import tensor as T
from acdnet.exceptions import ContractError
from acdnet.sequence_encoders import apply_dropout, glorot

GATES = ["update", "reset", "candidate"]


def register(params, prefix, cfg, rng):
    """Register input, recurrent and bias weights of each gate."""
    for gate in GATES:
        params.add(f"{prefix}.{gate}.w", glorot(rng, cfg.dim, cfg.dim))
        params.add(f"{prefix}.{gate}.u", glorot(rng, cfg.dim, cfg.dim))
        params.add(f"{prefix}.{gate}.b", np.zeros(cfg.dim))


def _gate(params, prefix, gate, row, hidden):
    return T.add(
        T.add(T.matmul(row, params[f"{prefix}.{gate}.w"]), T.matmul(hidden, params[f"{prefix}.{gate}.u"])),
        params[f"{prefix}.{gate}.b"],
    )


def encode(params, prefix, seq, cfg, context=None):
    """Run the GRU over seq; the final hidden state is repeated per position."""
    length = seq.shape[0]
    if length < 1:
        raise ContractError("recurrent input sequence is empty")
    hidden = T.Tensor(np.zeros(cfg.dim))
    for position in range(length):
        row = seq[position]
        update = T.sigmoid(_gate(params, prefix, "update", row, hidden))
        reset = T.sigmoid(_gate(params, prefix, "reset", row, hidden))
        candidate = T.tanh(
            T.add(
                T.add(
                    T.matmul(row, params[f"{prefix}.candidate.w"]),
                    T.matmul(T.mul(reset, hidden), params[f"{prefix}.candidate.u"]),
                ),
                params[f"{prefix}.candidate.b"],
            )
        )
        hidden = T.add(T.mul(T.sub(1.0, update), hidden), T.mul(update, candidate))
    hidden = apply_dropout(context, hidden)
    return T.stack([hidden] * length, axis=0)
