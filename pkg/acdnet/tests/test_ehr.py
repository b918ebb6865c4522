"""Tests for corpus generation, splitting and dataset files."""
__author__ = "acdnet developers"
__license__ = "GPLv3"

import json
import os
import tempfile
import unittest

import numpy as np

from acdnet import ehr
from acdnet.exceptions import BoundsError, ConfigError, ContractError, DatasetError
from acdnet.models import PatientRecord, Visit, Vocab
from acdnet.schemas import dataset as dataset_schema
from acdnet.settings import GenConfig
from acdnet.tests.common import SMALL_DATA, small_dataset


class GenerateTests(unittest.TestCase):
    """Synthetic corpus generator."""

    @classmethod
    def setUpClass(cls):
        cls.dataset = ehr.generate_synthetic(GenConfig(), 0)

    def test_default_corpus_shape(self):
        summary = ehr.summarize(self.dataset)
        self.assertEqual(summary["patients"], 600)
        self.assertEqual(summary["medications"], 131)
        self.assertEqual(summary["ddi_pairs"], 448)
        self.assertLessEqual(summary["max_visits"], 29)
        self.assertGreater(summary["avg_visits"], 1.5)
        self.assertLess(summary["avg_visits"], 3.5)

    def test_statistics_near_configured_means(self):
        config = GenConfig()
        summary = ehr.summarize(self.dataset)
        observed = [("visits", summary["avg_visits"], config.mean_visits)]
        for kind in ["diagnoses", "procedures", "medications"]:
            observed.append((kind, summary[f"avg_{kind}"], getattr(config, f"mean_{kind}")))
        for name, average, mean in observed:
            with self.subTest(statistic=name):
                self.assertLess(abs(average - mean) / mean, 0.15)

    def test_pure_profile_stays_in_pool(self):
        config = GenConfig(patients=50, profiles=1, purity=1.0, pool_scale=0.7)
        dataset = ehr.generate_synthetic(config, 0)
        for kind in ["diagnoses", "procedures", "medications"]:
            used = set()
            for record in dataset.records:
                for visit in record.visits:
                    used.update(visit.codes(kind))
            pool = int(round(0.7 * getattr(config, f"mean_{kind}")))
            with self.subTest(kind=kind):
                self.assertLessEqual(len(used), pool)

    def test_codes_within_vocabulary(self):
        for record in self.dataset.records:
            for visit in record.visits:
                self.dataset.vocab.check_visit(visit)
                self.assertGreaterEqual(len(visit.medications), 1)

    def test_molecules_are_connected(self):
        self.assertEqual(len(self.dataset.graphs.molecules), 131)
        for molecule in self.dataset.graphs.molecules:
            self.assertGreaterEqual(len(molecule.edges), molecule.n_atoms - 1)
            self.assertTrue(4 <= molecule.n_atoms <= 30)

    def test_ehr_graph_is_cooccurrence(self):
        np.testing.assert_array_equal(
            self.dataset.graphs.ehr_adj, ehr.cooccurrence(self.dataset.records, 131)
        )

    def test_same_seed_same_corpus(self):
        first, second = small_dataset(seed=7), small_dataset(seed=7)
        self.assertEqual(first.records, second.records)
        np.testing.assert_array_equal(first.graphs.ddi_adj, second.graphs.ddi_adj)
        self.assertNotEqual(first.records, small_dataset(seed=8).records)

    def test_infeasible_ddi_count(self):
        with self.assertRaises(ConfigError):
            ehr.generate_synthetic(GenConfig(**dict(SMALL_DATA, ddi_pairs=29)), 0)

    def test_summary_counts_events(self):
        dataset = small_dataset()
        summary = ehr.summarize(dataset)
        self.assertEqual(summary["clinical_events"], sum(len(record) for record in dataset.records))
        self.assertEqual(summary["ddi_pairs"], SMALL_DATA["ddi_pairs"])
        self.assertTrue(0.0 <= summary["ddi_rate"] <= 1.0)


class SplitTests(unittest.TestCase):
    """4:1:1 patient split."""

    def test_sizes(self):
        self.assertEqual(ehr.split_sizes(600), [400, 100, 100])
        self.assertEqual(ehr.split_sizes(6), [4, 1, 1])
        self.assertEqual(sum(ehr.split_sizes(17)), 17)

    def test_disjoint_and_complete(self):
        dataset = small_dataset()
        parts = ehr.split(dataset, seed=3)
        ids = [{record.patient_id for record in part.records} for part in parts]
        self.assertEqual(set.union(*ids), {record.patient_id for record in dataset.records})
        self.assertFalse(ids[0] & ids[1] or ids[0] & ids[2] or ids[1] & ids[2])
        again = ehr.split(dataset, seed=3)
        self.assertEqual([part.records for part in parts], [part.records for part in again])

    def test_too_small(self):
        dataset = small_dataset(patients=5)
        with self.assertRaises(ConfigError):
            ehr.split(dataset)


class DatasetFileTests(unittest.TestCase):
    """Dataset container round-trip and validation."""

    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.directory.name, "dataset.jsonl")

    def tearDown(self):
        self.directory.cleanup()

    def test_round_trip(self):
        dataset = small_dataset()
        ehr.save_dataset(self.path, dataset, {"seed": 0})
        loaded, generator = ehr.read_dataset(self.path)
        self.assertEqual(generator, {"seed": 0})
        self.assertEqual(loaded.records, dataset.records)
        self.assertEqual(loaded.vocab, dataset.vocab)
        np.testing.assert_array_equal(loaded.graphs.ehr_adj, dataset.graphs.ehr_adj)
        np.testing.assert_array_equal(loaded.graphs.ddi_adj, dataset.graphs.ddi_adj)
        self.assertEqual(loaded.graphs.molecules, dataset.graphs.molecules)

    def _write(self, records):
        with open(self.path, "w", encoding="utf-8") as out_fh:
            for record in records:
                out_fh.write(json.dumps(record) + "\n")

    def _header(self):
        vocab = {"diagnoses": 3, "procedures": 2, "medications": 2}
        return {"kind": "header", "format_version": 1, "vocab": vocab}

    def test_molecule_bonds_deduplicated(self):
        record = {
            "kind": "molecule",
            "medication": 0,
            "atom_types": [0, 1, 2],
            "edges": [[0, 1], [1, 0], [2, 1]],
        }
        medication, molecule = dataset_schema.create_molecule(record, 2)
        self.assertEqual(medication, 0)
        self.assertEqual(molecule.edges, ((0, 1), (1, 2)))

    def test_out_of_vocabulary_code(self):
        patient = {"kind": "patient", "id": "p", "visits": [{"diagnoses": [3], "procedures": [0]}]}
        self._write([self._header(), patient])
        with self.assertRaisesRegex(BoundsError, "line 2"):
            ehr.read_dataset(self.path)

    def test_missing_field(self):
        patient = {"kind": "patient", "id": "p", "visits": [{"diagnoses": [0]}]}
        self._write([self._header(), patient])
        with self.assertRaisesRegex(DatasetError, "line 2"):
            ehr.read_dataset(self.path)

    def test_missing_graph_sections(self):
        self._write([self._header()])
        with self.assertRaisesRegex(DatasetError, "ehr_edges"):
            ehr.read_dataset(self.path)

    def test_bad_json(self):
        with open(self.path, "w", encoding="utf-8") as out_fh:
            out_fh.write("{not json\n")
        with self.assertRaisesRegex(DatasetError, "line 1"):
            ehr.read_dataset(self.path)

    def test_patient_file(self):
        vocab = Vocab(3, 2, 2)
        records = [PatientRecord("a", (Visit.create([0, 2], [1], [1]), Visit.create([1], [0])))]
        ehr.save_patients(self.path, records)
        self.assertEqual(ehr.load_patients(self.path, vocab), records)


class ModelTypeTests(unittest.TestCase):
    """Domain type invariants."""

    def test_visit_codes_sorted_unique(self):
        visit = Visit.create([3, 1, 3], [2], [])
        self.assertEqual(visit.diagnoses, (1, 3))
        self.assertEqual(visit.medications, ())

    def test_history(self):
        record = PatientRecord("a", (Visit.create([0], [0]), Visit.create([1], [1])))
        self.assertEqual(len(record.history(1)), 1)
        with self.assertRaises(ContractError):
            record.history(3)

    def test_vocab_bounds(self):
        with self.assertRaises(BoundsError):
            Vocab(2, 2, 2).check_visit(Visit.create([2], [0]))


if __name__ == "__main__":
    unittest.main()
