"""Patient encoder: visit embeddings, local attention pools and global sequence encoding.

For a record truncated at the current visit T:
* every visit is embedded as the rows of its codes (past visits include their
  medications, the current visit only diagnoses and procedures);
* a self-attention pool turns each visit into one vector (seq_att) and the
  row mean gives seq_ave;
* the sequence encoder runs over seq_ave (visits) and over seq_m, the mean
  medication embedding of each past visit;
* r_p pools the 2T rows of seq_att stacked over seq_tr, r_m pools seq_m_tr.
"""
__author__ = "acdnet developers"
__license__ = "GPLv3"

from typing import NamedTuple, Optional

import numpy as np

from acdnet import tensor as T
from acdnet.exceptions import BoundsError, ContractError
from acdnet.models import CodeKindChoices
from acdnet.sequence_encoders import EncodeContext, get_encoder, glorot, trace_weights

EMBED_KINDS = [kind for kind, value in CodeKindChoices()]
POOLS = ["visit", "patient", "medication"]


class PatientState(NamedTuple):
    """Intermediate and final representations of one patient."""

    visit_rows: list
    seq_att: T.Tensor
    seq_ave: T.Tensor
    seq_tr: Optional[T.Tensor]
    seq_m: Optional[T.Tensor]
    seq_m_tr: Optional[T.Tensor]
    r_p: T.Tensor
    r_m: Optional[T.Tensor]


def register(params, rng, vocab, cfg, spec):
    """Register embeddings, pools, the no-history vector and encoders."""
    for kind in EMBED_KINDS:
        params.add(f"embed.{kind}", rng.normal(0.0, 1.0 / np.sqrt(cfg.dim), (vocab.size(kind), cfg.dim)))
    if spec.attention_pools:
        for pool in POOLS:
            if pool == "medication" and not spec.indirect:
                continue
            params.add(f"pool.{pool}.w1", glorot(rng, cfg.dim, cfg.dim))
            params.add(f"pool.{pool}.w2", glorot(rng, cfg.dim, 1))
    params.add("history.none", rng.normal(0.0, 1.0 / np.sqrt(cfg.dim), cfg.dim))
    encoder = get_encoder(spec.sequence_encoder)
    if spec.seq_transformer:
        encoder.register(params, "encoder.visits", cfg, rng)
    if spec.indirect:
        encoder.register(params, "encoder.medications", cfg, rng)


def embed_visit(visit, tables, include_medications=True):
    """Return (e_t, e_t_ave): the code embedding rows and their mean.

    tables maps each code kind to its embedding Tensor.
    """
    blocks = []
    for kind in EMBED_KINDS:
        if kind == "medications" and not include_medications:
            continue
        codes = visit.codes(kind)
        size = tables[kind].shape[0]
        for code in codes:
            if not 0 <= code < size:
                raise BoundsError(f"{kind} index {code} out of bounds [0, {size})")
        if codes:
            blocks.append(T.take_rows(tables[kind], list(codes)))
    if not blocks:
        raise ContractError("visit has no codes to embed")
    rows = blocks[0] if len(blocks) == 1 else T.concat(blocks, axis=0)
    return rows, T.mean(rows, axis=0)


def self_attention_pool(v, w1, w2, context=None, name="pool"):
    """softmax(tanh(v W1) W2)^T v over the L rows of v."""
    if v.ndim != 2 or v.shape[0] < 1:
        raise ContractError(f"attention pool needs a non-empty L x dim input, got {v.shape}")
    logits = T.reshape(T.matmul(T.tanh(T.matmul(v, w1)), w2), (v.shape[0],))
    weights = T.softmax(logits, axis=0)
    trace_weights(context, name, weights.data)
    return T.matmul(weights, v)


def _pool(params, spec, pool, v, context):
    if not spec.attention_pools:
        return T.mean(v, axis=0)
    return self_attention_pool(
        v, params[f"pool.{pool}.w1"], params[f"pool.{pool}.w2"], context, f"pool.{pool}"
    )


def encode_patient(params, patient, cfg, spec, context=None):
    """Encode a record whose last visit is the current one."""
    if len(patient.visits) < 1:
        raise ContractError("patient record has no visits")
    context = context if context is not None else EncodeContext()
    tables = {kind: params[f"embed.{kind}"] for kind in EMBED_KINDS}
    no_history = params["history.none"]
    last = len(patient.visits) - 1

    visit_rows, attended, averaged, medication_rows = [], [], [], []
    for position, visit in enumerate(patient.visits):
        current = position == last
        if not visit.diagnoses and not visit.procedures and (current or not visit.medications):
            visit_rows.append(None)
            attended.append(no_history)
            averaged.append(no_history)
        else:
            rows, average = embed_visit(visit, tables, include_medications=not current)
            visit_rows.append(rows)
            attended.append(_pool(params, spec, "visit", rows, context))
            averaged.append(average)
        if not current and spec.indirect:
            if visit.medications:
                prescribed = T.take_rows(tables["medications"], list(visit.medications))
                medication_rows.append(T.mean(prescribed, axis=0))
            else:
                medication_rows.append(no_history)

    seq_att = T.stack(attended, axis=0)
    seq_ave = T.stack(averaged, axis=0)
    encoder = get_encoder(spec.sequence_encoder)
    seq_tr = None
    branches = []
    if spec.seq_attention:
        branches.append(seq_att)
    if spec.seq_transformer:
        seq_tr = encoder.encode(params, "encoder.visits", seq_ave, cfg, context)
        branches.append(seq_tr)
    if not branches:
        raise ContractError("variant leaves no branch for the health representation")
    joined = branches[0] if len(branches) == 1 else T.concat(branches, axis=0)
    r_p = _pool(params, spec, "patient", joined, context)

    seq_m = seq_m_tr = r_m = None
    if spec.indirect:
        if medication_rows:
            seq_m = T.stack(medication_rows, axis=0)
            seq_m_tr = encoder.encode(params, "encoder.medications", seq_m, cfg, context)
            r_m = _pool(params, spec, "medication", seq_m_tr, context)
        else:
            r_m = no_history
    return PatientState(visit_rows, seq_att, seq_ave, seq_tr, seq_m, seq_m_tr, r_p, r_m)
