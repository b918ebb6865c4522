"""Patient records and knowledge graphs: synthetic generation, file I/O and splits."""
__author__ = "acdnet developers"
__license__ = "GPLv3"

import logging
from math import comb

import numpy as np

from acdnet import metrics, utils
from acdnet.exceptions import ConfigError, DatasetError
from acdnet.models import (
    CodeKindChoices,
    Dataset,
    KnowledgeGraphs,
    Molecule,
    PatientRecord,
    Visit,
    Vocab,
)
from acdnet.schemas import dataset as dataset_schema
from acdnet.schemas import patient as patient_schema

LOGGER = logging.getLogger(__name__)

LABEL_FORMATS = {
    "diagnoses": "DX{:04d}",
    "procedures": "PR{:04d}",
    "medications": "MED{:03d}",
}


def _pool_size(config, kind):
    mean = getattr(config, f"mean_{kind}")
    return min(getattr(config, kind), max(1, int(round(config.pool_scale * mean))))


def _draw_profile(rng, config):
    return {
        kind: rng.choice(getattr(config, kind), _pool_size(config, kind), replace=False)
        for kind, value in CodeKindChoices()
    }


def _draw_codes(rng, pool, size, mean, purity):
    """Draw a Poisson-sized code set, mostly from pool plus uniform noise.

    Only the impure share of the draw is noise; the pooled share is truncated
    to the pool size.
    """
    count = min(size, max(1, int(rng.poisson(mean))))
    inside = int(rng.binomial(count, purity))
    noise = count - inside
    inside = min(inside, len(pool))
    chosen = set(rng.choice(pool, inside, replace=False).tolist()) if inside else set()
    if noise:
        remaining = np.array([code for code in range(size) if code not in chosen])
        noise = min(noise, remaining.size)
        chosen.update(rng.choice(remaining, noise, replace=False).tolist())
    return chosen


def _draw_visit(rng, profile, config):
    codes = {
        kind: _draw_codes(
            rng,
            profile[kind],
            getattr(config, kind),
            getattr(config, f"mean_{kind}"),
            config.purity,
        )
        for kind, value in CodeKindChoices()
    }
    return Visit.create(**codes)


def cooccurrence(records, medications):
    """Return the EHR adjacency: an edge per medication pair prescribed together."""
    adjacency = np.zeros((medications, medications), dtype=np.float64)
    for record in records:
        for visit in record.visits:
            codes = list(visit.medications)
            for position, source in enumerate(codes):
                for target in codes[position + 1:]:
                    adjacency[source, target] = 1.0
                    adjacency[target, source] = 1.0
    return adjacency


def _draw_ddi(rng, ehr_adj, config):
    size = ehr_adj.shape[0]
    upper = [(source, target) for source in range(size) for target in range(source + 1, size)]
    co_pairs = [pair for pair in upper if ehr_adj[pair]]
    other_pairs = [pair for pair in upper if not ehr_adj[pair]]
    overlap = min(int(round(config.ddi_overlap * config.ddi_pairs)), len(co_pairs))
    rest = config.ddi_pairs - overlap
    if rest > len(other_pairs):
        overlap += rest - len(other_pairs)
        rest = len(other_pairs)
    chosen = []
    for pool, count in [(co_pairs, overlap), (other_pairs, rest)]:
        if count:
            chosen.extend(pool[index] for index in rng.choice(len(pool), count, replace=False))
    adjacency = np.zeros((size, size), dtype=np.float64)
    for source, target in chosen:
        adjacency[source, target] = 1.0
        adjacency[target, source] = 1.0
    return adjacency


def _draw_molecule(rng, config):
    """Connected random atom graph: random spanning tree plus extra bonds."""
    n_atoms = int(rng.integers(config.min_atoms, config.max_atoms + 1))
    atom_types = tuple(int(value) for value in rng.integers(0, config.atom_types, n_atoms))
    edges = {(int(rng.integers(atom)), atom) for atom in range(1, n_atoms)}
    for source in range(n_atoms):
        for target in range(source + 1, n_atoms):
            if (source, target) not in edges and rng.random() < config.bond_probability:
                edges.add((source, target))
    return Molecule(atom_types, tuple(sorted(edges)))


def generate_synthetic(config, seed):
    """Generate a synthetic corpus shaped like the configured statistics.

    Latent disease profiles own diagnosis, procedure and medication pools;
    each visit draws its codes from the current profile's pools (purity) plus
    uniform noise, and a patient keeps its profile between visits with
    probability config.persistence.
    """
    medications = config.medications
    if config.ddi_pairs > comb(medications, 2):
        raise ConfigError(
            f"{config.ddi_pairs} DDI pairs requested, only {comb(medications, 2)} "
            f"possible among {medications} medications"
        )
    if config.min_atoms > config.max_atoms:
        raise ConfigError("min_atoms must not exceed max_atoms")
    rng = np.random.default_rng(seed)
    profiles = [_draw_profile(rng, config) for _ in range(config.profiles)]

    records = []
    for index in range(config.patients):
        n_visits = min(config.max_visits, 1 + int(rng.poisson(config.mean_visits - 1)))
        profile = int(rng.integers(config.profiles))
        visits = []
        for position in range(n_visits):
            if position and rng.random() >= config.persistence:
                profile = int(rng.integers(config.profiles))
            visits.append(_draw_visit(rng, profiles[profile], config))
        records.append(PatientRecord(f"P{index + 1:05d}", tuple(visits)))

    ehr_adj = cooccurrence(records, medications)
    ddi_adj = _draw_ddi(rng, ehr_adj, config)
    molecules = [_draw_molecule(rng, config) for _ in range(medications)]
    labels = {
        kind: [LABEL_FORMATS[kind].format(code + 1) for code in range(getattr(config, kind))]
        for kind, value in CodeKindChoices()
    }
    vocab = Vocab(config.diagnoses, config.procedures, medications, labels)
    LOGGER.info(
        "generated %d patients, %d visits, %d DDI pairs",
        len(records),
        sum(len(record) for record in records),
        int(ddi_adj.sum() // 2),
    )
    return Dataset(vocab, records, KnowledgeGraphs(ehr_adj, ddi_adj, molecules))


def split_sizes(total, ratios=(4, 1, 1)):
    """Return split sizes: floor of each share, remainder by largest fraction."""
    weight = sum(ratios)
    shares = [total * ratio / weight for ratio in ratios]
    sizes = [int(np.floor(share)) for share in shares]
    order = sorted(range(len(ratios)), key=lambda index: (-(shares[index] - sizes[index]), index))
    for index in order[: total - sum(sizes)]:
        sizes[index] += 1
    return sizes


def split(dataset, ratios=(4, 1, 1), seed=0):
    """Partition patients into train, validation and test datasets."""
    if len(ratios) != 3 or any(ratio <= 0 for ratio in ratios):
        raise ConfigError(f"ratios must be three positive numbers, got {ratios}")
    total = len(dataset.records)
    if total < 6:
        raise ConfigError(f"at least 6 patients are needed to split, got {total}")
    order = np.random.default_rng(seed).permutation(total)
    parts = []
    start = 0
    for size in split_sizes(total, ratios):
        chosen = sorted(order[start:start + size].tolist())
        parts.append(dataset._replace(records=[dataset.records[index] for index in chosen]))
        start += size
    return tuple(parts)


def summarize(dataset):
    """Return dataset statistics (patients, events, per-kind averages, DDI)."""
    visits = [visit for record in dataset.records for visit in record.visits]
    summary = {
        "patients": len(dataset.records),
        "clinical_events": len(visits),
        "diagnoses": dataset.vocab.diagnoses,
        "procedures": dataset.vocab.procedures,
        "medications": dataset.vocab.medications,
        "avg_visits": len(visits) / len(dataset.records) if dataset.records else 0.0,
        "max_visits": max((len(record) for record in dataset.records), default=0),
        "ddi_pairs": dataset.graphs.ddi_pairs(),
        "ehr_pairs": dataset.graphs.ehr_pairs(),
    }
    for kind, value in CodeKindChoices():
        sizes = [len(visit.codes(kind)) for visit in visits]
        summary[f"avg_{kind}"] = float(np.mean(sizes)) if sizes else 0.0
        summary[f"max_{kind}"] = max(sizes, default=0)
    summary["ddi_rate"] = metrics.metric_ddi_rate(
        [visit.medications for visit in visits], dataset.graphs.ddi_adj
    )
    return summary


def save_dataset(path, dataset, generator=None):
    """Write the dataset container (header, patients, graphs, molecules)."""
    records = [dataset_schema.dump_header(dataset.vocab, generator)]
    records.extend(patient_schema.dump(record) for record in dataset.records)
    records.append(dataset_schema.dump_edges("ehr_edges", dataset.graphs.ehr_adj))
    records.append(dataset_schema.dump_edges("ddi_edges", dataset.graphs.ddi_adj))
    records.extend(
        dataset_schema.dump_molecule(index, molecule)
        for index, molecule in enumerate(dataset.graphs.molecules)
    )
    utils.write_records(path, records)
    LOGGER.info("dataset written to %s", path)


def _adjacency(edges, size):
    adjacency = np.zeros((size, size), dtype=np.float64)
    for source, target in edges:
        adjacency[source, target] = 1.0
        adjacency[target, source] = 1.0
    return adjacency


def read_dataset(path):
    """Load a dataset container; return (Dataset, generator settings)."""
    vocab = None
    generator = None
    records = []
    edges = {}
    molecules = {}
    for line_number, data in utils.read_records(path):
        locus = f"{path}: line {line_number}"
        kind = data.get("kind")
        if vocab is None:
            if kind != "header":
                raise DatasetError(f"{locus}: first record must be the header, got {kind!r}")
            vocab, generator = dataset_schema.create_vocab(data, locus)
        elif kind == "patient":
            records.append(patient_schema.create(data, vocab, locus))
        elif kind in ("ehr_edges", "ddi_edges"):
            if kind in edges:
                raise DatasetError(f"{locus}: duplicate {kind} section")
            edges[kind] = dataset_schema.create_edges(data, kind, vocab.medications, locus)
        elif kind == "molecule":
            medication, molecule = dataset_schema.create_molecule(data, vocab.medications, locus)
            if medication in molecules:
                raise DatasetError(f"{locus}: duplicate molecule for medication {medication}")
            molecules[medication] = molecule
        else:
            raise DatasetError(f"{locus}: invalid field kind: unknown record kind {kind!r}")
    if vocab is None:
        raise DatasetError(f"{path}: empty dataset file")
    for kind in ("ehr_edges", "ddi_edges"):
        if kind not in edges:
            raise DatasetError(f"{path}: missing {kind} section")
    if molecules and len(molecules) != vocab.medications:
        raise DatasetError(
            f"{path}: {len(molecules)} molecules for {vocab.medications} medications"
        )
    graphs = KnowledgeGraphs(
        _adjacency(edges["ehr_edges"], vocab.medications),
        _adjacency(edges["ddi_edges"], vocab.medications),
        [molecules[index] for index in sorted(molecules)],
    )
    return Dataset(vocab, records, graphs), generator


def load_dataset(path):
    """Load a dataset container."""
    return read_dataset(path)[0]


def load_patients(path, vocab):
    """Load a file of patient records validated against vocab."""
    records = []
    for line_number, data in utils.read_records(path):
        locus = f"{path}: line {line_number}"
        if data.get("kind") == "header":
            # Headers are accepted and ignored
            continue
        records.append(patient_schema.create(data, vocab, locus))
    if not records:
        raise DatasetError(f"{path}: no patient records")
    return records


def save_patients(path, records):
    """Write a file of patient records."""
    utils.write_records(path, [patient_schema.dump(record) for record in records])
