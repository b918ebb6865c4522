"""Transformer encoder (post-norm layers, summed layer outputs)."""
__author__ = "acdnet developers"
__license__ = "GPLv3"

import numpy as np

from acdnet import tensor as T
from acdnet.exceptions import ContractError
from acdnet.sequence_encoders import apply_dropout, glorot, trace_weights


def positional_encoding(length, dim):
    """Sinusoidal position table (length x dim)."""
    positions = np.arange(length)[:, None]
    rates = 1.0 / np.power(10000.0, (2 * (np.arange(dim) // 2)) / dim)
    table = positions * rates[None, :]
    table[:, 0::2] = np.sin(table[:, 0::2])
    table[:, 1::2] = np.cos(table[:, 1::2])
    return table


def register(params, prefix, cfg, rng):
    """Register the weights of every layer and the final normalization."""
    dim = cfg.dim
    for layer in range(cfg.layers):
        name = f"{prefix}.layer{layer}"
        for projection in ["wq", "wk", "wv", "wo"]:
            params.add(f"{name}.{projection}", glorot(rng, dim, dim))
        params.add(f"{name}.bo", np.zeros(dim))
        params.add(f"{name}.ff.w1", glorot(rng, dim, cfg.ff_width))
        params.add(f"{name}.ff.b1", np.zeros(cfg.ff_width))
        params.add(f"{name}.ff.w2", glorot(rng, cfg.ff_width, dim))
        params.add(f"{name}.ff.b2", np.zeros(dim))
        for norm in ["norm1", "norm2"]:
            params.add(f"{name}.{norm}.gain", np.ones(dim))
            params.add(f"{name}.{norm}.bias", np.zeros(dim))
    params.add(f"{prefix}.final_norm.gain", np.ones(dim))
    params.add(f"{prefix}.final_norm.bias", np.zeros(dim))


def multi_head_attention(seq, wq, wk, wv, wo, bo, heads, context=None, name="attention"):
    """Scaled dot-product self-attention over heads, then output projection."""
    length, dim = seq.shape
    head_dim = dim // heads

    def split_heads(x):
        return T.transpose(T.reshape(x, (length, heads, head_dim)), (1, 0, 2))

    queries = split_heads(T.matmul(seq, wq))
    keys = split_heads(T.matmul(seq, wk))
    values = split_heads(T.matmul(seq, wv))
    scores = T.scale(T.matmul(queries, T.transpose(keys, (0, 2, 1))), 1.0 / np.sqrt(head_dim))
    weights = T.softmax(scores, axis=-1)
    trace_weights(context, name, weights.data)
    joined = T.reshape(T.transpose(T.matmul(weights, values), (1, 0, 2)), (length, dim))
    return T.add(T.matmul(joined, wo), bo)


def feed_forward(x, w1, b1, w2, b2):
    """Two affine maps with ReLU between."""
    return T.add(T.matmul(T.relu(T.add(T.matmul(x, w1), b1)), w2), b2)


def encode(params, prefix, seq, cfg, context=None):
    """Encode seq (S x dim); output is LayerNorm(seq + sum of layer outputs)."""
    if seq.shape[0] < 1:
        raise ContractError("transformer input sequence is empty")
    eps = context.layernorm_eps if context is not None else 1e-5
    if cfg.positional_encoding:
        seq = T.add(seq, T.Tensor(positional_encoding(seq.shape[0], cfg.dim)))
    hidden = seq
    outputs = []
    for layer in range(cfg.layers):
        name = f"{prefix}.layer{layer}"
        attended = multi_head_attention(
            hidden,
            params[f"{name}.wq"],
            params[f"{name}.wk"],
            params[f"{name}.wv"],
            params[f"{name}.wo"],
            params[f"{name}.bo"],
            cfg.heads,
            context,
            name,
        )
        normed = T.layernorm(
            T.add(apply_dropout(context, attended), hidden),
            params[f"{name}.norm1.gain"],
            params[f"{name}.norm1.bias"],
            eps,
        )
        transformed = feed_forward(
            normed,
            params[f"{name}.ff.w1"],
            params[f"{name}.ff.b1"],
            params[f"{name}.ff.w2"],
            params[f"{name}.ff.b2"],
        )
        hidden = T.layernorm(
            T.add(apply_dropout(context, transformed), normed),
            params[f"{name}.norm2.gain"],
            params[f"{name}.norm2.bias"],
            eps,
        )
        outputs.append(hidden)
    total = seq
    for output in outputs:
        total = T.add(total, output)
    return T.layernorm(
        total, params[f"{prefix}.final_norm.gain"], params[f"{prefix}.final_norm.bias"], eps
    )
