"""Tests for visit embedding, attention pools and sequence encoders."""
__author__ = "acdnet developers"
__license__ = "GPLv3"

import unittest

import numpy as np

from acdnet import patient_encoder
from acdnet import tensor as T
from acdnet.exceptions import BoundsError, ConfigError, ContractError
from acdnet.models import PatientRecord, Visit, variant_spec
from acdnet.sequence_encoders import EncodeContext, get_encoder, transformer
from acdnet.settings import EncoderConfig
from acdnet.tests.common import toy_patient, toy_vocab


def tables(dim=4, seed=0):
    """Random embedding tables of the toy vocabulary."""
    rng = np.random.default_rng(seed)
    vocab = toy_vocab()
    return {kind: T.Tensor(rng.normal(size=(vocab.size(kind), dim))) for kind in patient_encoder.EMBED_KINDS}


class EmbedVisitTests(unittest.TestCase):
    """Code rows and their mean."""

    def test_shape_and_mean(self):
        embeddings = tables()
        rows, average = patient_encoder.embed_visit(Visit.create([1], [2], [3]), embeddings)
        self.assertEqual(rows.shape, (3, 4))
        np.testing.assert_allclose(average.data, rows.data.mean(axis=0))

    def test_current_visit_skips_medications(self):
        rows, average = patient_encoder.embed_visit(  # pylint: disable=unused-variable
            Visit.create([0, 1], [0], [0, 1, 2]), tables(), include_medications=False
        )
        self.assertEqual(rows.shape[0], 3)

    def test_equal_rows_average(self):
        u = np.array([0.5, -1.0, 2.0, 0.0])
        embeddings = {kind: T.Tensor(np.tile(u, (5, 1))) for kind in patient_encoder.EMBED_KINDS}
        _, average = patient_encoder.embed_visit(Visit.create([0], [1], [2]), embeddings)
        np.testing.assert_allclose(average.data, u)

    def test_mean_gradient(self):
        embeddings = tables()
        for table in embeddings.values():
            table.requires_grad = True
        rows, average = patient_encoder.embed_visit(  # pylint: disable=unused-variable
            Visit.create([0, 3], [1], [2]), embeddings
        )
        T.backward(T.tensor_sum(average))
        np.testing.assert_allclose(embeddings["diagnoses"].grad[3], np.full(4, 0.25))
        np.testing.assert_allclose(embeddings["procedures"].grad[0], np.zeros(4))

    def test_out_of_bounds(self):
        with self.assertRaises(BoundsError):
            patient_encoder.embed_visit(Visit.create([9], [0]), tables())

    def test_empty_visit(self):
        with self.assertRaises(ContractError):
            patient_encoder.embed_visit(Visit.create([], [], [1]), tables(), include_medications=False)


class AttentionPoolTests(unittest.TestCase):
    """softmax(tanh(v W1) W2)^T v."""

    def setUp(self):
        rng = np.random.default_rng(1)
        self.w1 = T.Tensor(rng.normal(size=(4, 4)))
        self.w2 = T.Tensor(rng.normal(size=(4, 1)))

    def test_single_row(self):
        row = np.array([[1.0, 2.0, 3.0, 4.0]])
        pooled = patient_encoder.self_attention_pool(T.Tensor(row), self.w1, self.w2)
        np.testing.assert_allclose(pooled.data, row[0])

    def test_identical_rows(self):
        rows = np.tile([1.0, -2.0, 0.5, 3.0], (3, 1))
        out = patient_encoder.self_attention_pool(T.Tensor(rows), self.w1, self.w2).data
        np.testing.assert_allclose(out, rows[0])

    def test_zero_projection_gives_mean(self):
        rows = np.random.default_rng(2).normal(size=(5, 4))
        out = patient_encoder.self_attention_pool(T.Tensor(rows), T.Tensor(np.zeros((4, 4))), self.w2).data
        np.testing.assert_allclose(out, rows.mean(axis=0))

    def test_weights_traced_and_normalized(self):
        trace = []
        context = EncodeContext(trace=trace)
        rows = T.Tensor(np.random.default_rng(3).normal(size=(6, 4)))
        patient_encoder.self_attention_pool(rows, self.w1, self.w2, context, "pool.visit")
        name, weights = trace[0]
        self.assertEqual(name, "pool.visit")
        self.assertTrue(np.all(weights >= 0))
        self.assertAlmostEqual(weights.sum(), 1.0, delta=1e-9)

    def test_empty_sequence(self):
        with self.assertRaises(ContractError):
            patient_encoder.self_attention_pool(T.Tensor(np.zeros((0, 4))), self.w1, self.w2)


class TransformerTests(unittest.TestCase):
    """Transformer sequence encoder."""

    def setUp(self):
        self.cfg = EncoderConfig(dim=8, heads=2, layers=2, ff_width=16, positional_encoding=False)
        self.params = T.ParamRegistry()
        transformer.register(self.params, "enc", self.cfg, np.random.default_rng(4))

    def test_single_position(self):
        trace = []
        seq = T.Tensor(np.random.default_rng(5).normal(size=(1, 8)))
        out = transformer.encode(self.params, "enc", seq, self.cfg, EncodeContext(trace=trace))
        self.assertEqual(out.shape, (1, 8))
        self.assertTrue(np.all(np.isfinite(out.data)))
        for name, weights in trace:  # pylint: disable=unused-variable
            np.testing.assert_allclose(weights, np.ones_like(weights))

    def test_head_rows_sum_to_one(self):
        trace = []
        seq = T.Tensor(np.random.default_rng(6).normal(size=(5, 8)))
        transformer.encode(self.params, "enc", seq, self.cfg, EncodeContext(trace=trace))
        self.assertEqual(len(trace), 2)
        for name, weights in trace:  # pylint: disable=unused-variable
            self.assertEqual(weights.shape, (2, 5, 5))
            np.testing.assert_allclose(weights.sum(axis=-1), 1.0, atol=1e-9)

    def test_zero_weights_reduce_to_normalization(self):
        for name, tensor in self.params.items():
            if name.endswith((".wo", ".bo", ".ff.w2", ".ff.b2")):
                tensor.data = np.zeros_like(tensor.data)
        data = np.random.default_rng(7).normal(size=(3, 8))
        out = transformer.encode(self.params, "enc", T.Tensor(data), self.cfg)
        def norm(x):
            return T.layernorm(x, np.ones(8), np.zeros(8), 1e-5).data

        # with attention and feed-forward outputs zeroed a layer maps h to LN(LN(h))
        first = norm(norm(data))
        second = norm(norm(first))
        expected = norm(data + first + second)
        np.testing.assert_allclose(out.data, expected, atol=1e-12)

    def test_empty_sequence(self):
        with self.assertRaises(ContractError):
            transformer.encode(self.params, "enc", T.Tensor(np.zeros((0, 8))), self.cfg)

    def test_positional_encoding_table(self):
        table = transformer.positional_encoding(3, 4)
        np.testing.assert_allclose(table[0], [0.0, 1.0, 0.0, 1.0])
        np.testing.assert_allclose(table[1, :2], [np.sin(1.0), np.cos(1.0)])


class RecurrentEncoderTests(unittest.TestCase):
    """GRU and RNN replacements."""

    def test_final_state_per_position(self):
        cfg = EncoderConfig(dim=4, heads=1, layers=1, ff_width=8)
        for kind in ["gru", "rnn"]:
            params = T.ParamRegistry()
            encoder = get_encoder(kind)
            encoder.register(params, "enc", cfg, np.random.default_rng(8))
            out = encoder.encode(params, "enc", T.Tensor(np.random.default_rng(9).normal(size=(3, 4))), cfg)
            self.assertEqual(out.shape, (3, 4))
            np.testing.assert_allclose(out.data[0], out.data[2])

    def test_unknown_encoder(self):
        with self.assertRaises(ConfigError):
            get_encoder("lstm")


class EncodePatientTests(unittest.TestCase):
    """Full patient encoding."""

    def setUp(self):
        self.cfg = EncoderConfig(dim=8, heads=2, layers=1, ff_width=16)
        self.spec = variant_spec("full")
        self.params = T.ParamRegistry()
        patient_encoder.register(self.params, np.random.default_rng(10), toy_vocab(), self.cfg, self.spec)

    def test_first_visit_uses_no_history(self):
        state = patient_encoder.encode_patient(self.params, toy_patient(1), self.cfg, self.spec)
        np.testing.assert_array_equal(state.r_m.data, self.params["history.none"].data)
        self.assertIsNone(state.seq_m)
        self.assertEqual(state.seq_att.shape, (1, 8))

    def test_sequence_lengths(self):
        state = patient_encoder.encode_patient(self.params, toy_patient(3), self.cfg, self.spec)
        self.assertEqual(state.seq_att.shape, (3, 8))
        self.assertEqual(state.seq_ave.shape, (3, 8))
        self.assertEqual(state.seq_m.shape, (2, 8))
        self.assertEqual(state.r_p.shape, (8,))
        self.assertTrue(np.all(np.isfinite(state.r_m.data)))

    def test_deterministic(self):
        first = patient_encoder.encode_patient(self.params, toy_patient(3), self.cfg, self.spec)
        second = patient_encoder.encode_patient(self.params, toy_patient(3), self.cfg, self.spec)
        np.testing.assert_array_equal(first.r_p.data, second.r_p.data)

    def test_visit_order_matters_with_positional_encoding(self):
        visits = toy_patient(3).visits
        swapped = PatientRecord("toy", (visits[1], visits[0], visits[2]))
        first = patient_encoder.encode_patient(self.params, toy_patient(3), self.cfg, self.spec)
        second = patient_encoder.encode_patient(self.params, swapped, self.cfg, self.spec)
        self.assertFalse(np.allclose(first.r_p.data, second.r_p.data))

    def test_all_pools_normalized(self):
        trace = []
        patient_encoder.encode_patient(
            self.params, toy_patient(3), self.cfg, self.spec, EncodeContext(trace=trace)
        )
        names = {name for name, weights in trace}
        self.assertTrue({"pool.visit", "pool.patient", "pool.medication"} <= names)
        for name, weights in trace:
            np.testing.assert_allclose(weights.sum(axis=-1), 1.0, atol=1e-9, err_msg=name)

    def test_empty_past_medications_use_no_history(self):
        patient = PatientRecord("p", (Visit.create([0], [0]), Visit.create([1], [1])))
        state = patient_encoder.encode_patient(self.params, patient, self.cfg, self.spec)
        np.testing.assert_array_equal(state.seq_m.data[0], self.params["history.none"].data)

    def test_patient_branch_has_two_t_rows(self):
        trace = []
        patient_encoder.encode_patient(
            self.params, toy_patient(2), self.cfg, self.spec, EncodeContext(trace=trace)
        )
        weights = [weights for name, weights in trace if name == "pool.patient"][0]
        self.assertEqual(weights.shape, (4,))

    def test_mean_pool_variant(self):
        spec = variant_spec("wo-att")
        params = T.ParamRegistry()
        patient_encoder.register(params, np.random.default_rng(11), toy_vocab(), self.cfg, spec)
        self.assertNotIn("pool.visit.w1", params)
        state = patient_encoder.encode_patient(params, toy_patient(2), self.cfg, spec)
        self.assertEqual(state.r_p.shape, (8,))


if __name__ == "__main__":
    unittest.main()
