"""ACDNet model: parameters and forward pass of one variant."""
__author__ = "acdnet developers"
__license__ = "GPLv3"

import logging

import numpy as np

from acdnet import decision_head, medicine_encoder, patient_encoder
from acdnet import tensor as T
from acdnet.exceptions import IncompatibleCheckpointError
from acdnet.models import variant_spec
from acdnet.sequence_encoders import EncodeContext
from acdnet.settings import NumericsConfig

LOGGER = logging.getLogger(__name__)


class ACDNet:
    """Patient encoder, medicine encoder and decision head sharing one registry."""

    def __init__(self, vocab, encoder, variant="full", atom_types=8, seed=0, numerics=None):
        self.vocab = vocab
        self.encoder = encoder
        self.variant = variant
        self.spec = variant_spec(variant)
        self.atom_types = atom_types
        self.numerics = numerics if numerics is not None else NumericsConfig()
        self.params = T.ParamRegistry()
        rng = np.random.default_rng(seed)
        patient_encoder.register(self.params, rng, vocab, encoder, self.spec)
        if self.spec.indirect:
            medicine_encoder.register(
                self.params, rng, vocab.medications, encoder, self.spec, atom_types
            )
        decision_head.register(
            self.params, rng, encoder.dim, vocab.medications, direct_only=not self.spec.indirect
        )
        LOGGER.debug(
            "built %s with %d tensors, %d weights", variant, len(self.params), self.params.count()
        )

    def context(self, rng=None, trace=None):
        """Return the encoder context (rng enables dropout)."""
        return EncodeContext(self.numerics.layernorm_eps, self.encoder.dropout, rng, trace)

    def prepare(self, graphs):
        """Return the constant graph inputs for this variant."""
        if graphs.medications != self.vocab.medications:
            raise IncompatibleCheckpointError(
                f"graphs cover {graphs.medications} medications, model {self.vocab.medications}"
            )
        return medicine_encoder.prepare_graphs(graphs, self.spec)

    def medicine_matrix(self, constants, context=None):
        """Build the medicine matrix, or None for the direct-only variant."""
        if not self.spec.indirect:
            return None
        return medicine_encoder.build_medicine_matrix(
            self.params, constants, self.encoder, self.spec, context
        )

    def forward(self, patient, medicine=None, context=None):
        """Score the last visit of patient; returns a HeadOutput."""
        context = context if context is not None else self.context()
        state = patient_encoder.encode_patient(self.params, patient, self.encoder, self.spec, context)
        if not self.spec.indirect:
            return decision_head.decide(self.params, state.r_p)
        return decision_head.decide(
            self.params, state.r_p, state.r_m, medicine.fused, self.numerics.cosine_eps
        )

    def check_vocab(self, vocab):
        """Raise IncompatibleCheckpointError if vocab sizes differ."""
        mine = (self.vocab.diagnoses, self.vocab.procedures, self.vocab.medications)
        theirs = (vocab.diagnoses, vocab.procedures, vocab.medications)
        if mine != theirs:
            raise IncompatibleCheckpointError(
                f"model vocabulary (diagnoses, procedures, medications) {mine} "
                f"does not match dataset {theirs}"
            )
