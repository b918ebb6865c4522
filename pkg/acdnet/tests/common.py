"""Small corpora and models shared by the tests."""
__author__ = "acdnet developers"
__license__ = "GPLv3"

import os
import unittest

import numpy as np

from acdnet import ehr
from acdnet import settings as acdnet_settings
from acdnet import utils
from acdnet.models import KnowledgeGraphs, Molecule, PatientRecord, Visit, Vocab
from acdnet.network import ACDNet
from acdnet.settings import EncoderConfig, GenConfig

SLOW_TESTS = os.environ.get("ACDNET_SLOW_TESTS") == "1"

slow = unittest.skipUnless(SLOW_TESTS, "set ACDNET_SLOW_TESTS=1 to run")

SMALL_DATA = {
    "diagnoses": 20,
    "procedures": 10,
    "medications": 8,
    "patients": 18,
    "mean_visits": 2.0,
    "max_visits": 4,
    "mean_diagnoses": 3.0,
    "mean_procedures": 2.0,
    "mean_medications": 3.0,
    "profiles": 3,
    "ddi_pairs": 4,
    "min_atoms": 2,
    "max_atoms": 5,
    "atom_types": 4,
}

SMALL_ENCODER = {"dim": 8, "heads": 2, "layers": 1, "ff_width": 16}


def small_settings(**sections):
    """Validated settings for a small corpus and a small model."""
    overrides = {"data": dict(SMALL_DATA), "encoder": dict(SMALL_ENCODER), "train": {"epochs": 2}}
    for section, values in sections.items():
        overrides = utils.deep_merge(overrides, {section: values})
    return acdnet_settings.load_settings(overrides=overrides)


def small_dataset(seed=0, **data):
    """Generate a small synthetic corpus."""
    return ehr.generate_synthetic(GenConfig(**dict(SMALL_DATA, **data)), seed)


def small_model(dataset, variant="full", seed=0, **encoder):
    """Build a small model over dataset's vocabulary."""
    return ACDNet(
        dataset.vocab,
        EncoderConfig(**dict(SMALL_ENCODER, **encoder)),
        variant,
        SMALL_DATA["atom_types"],
        seed,
    )


def toy_graphs(medications=4):
    """Hand-made graphs over a few medications."""
    ehr_adj = np.zeros((medications, medications))
    ddi_adj = np.zeros((medications, medications))
    for index in range(medications - 1):
        ehr_adj[index, index + 1] = ehr_adj[index + 1, index] = 1.0
    ddi_adj[0, medications - 1] = ddi_adj[medications - 1, 0] = 1.0
    molecules = [Molecule((index % 3, (index + 1) % 3, 0), ((0, 1), (1, 2))) for index in range(medications)]
    return KnowledgeGraphs(ehr_adj, ddi_adj, molecules)


def toy_patient(visits=2):
    """A patient whose earlier visits carry medications."""
    rows = [
        Visit.create([0, 1], [0], [0, 2]),
        Visit.create([2], [1, 2], [1]),
        Visit.create([1, 3], [2], [2, 3]),
    ]
    return PatientRecord("toy", tuple(rows[:visits]))


def toy_vocab():
    """Vocabulary matching toy_patient and toy_graphs."""
    return Vocab(5, 4, 4)
