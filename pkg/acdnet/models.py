"""Domain types.

Define value types for acdnet objects:
* A Visit holds the diagnosis, procedure and medication code sets of one admission.
* A PatientRecord is a chronological list of Visits.
* KnowledgeGraphs hold the EHR co-prescription graph, the DDI graph and one
  molecular graph per medicine.
* A Dataset bundles the Vocab, the records and the graphs.
"""
__author__ = "acdnet developers"
__license__ = "GPLv3"

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from acdnet.exceptions import BoundsError, ContractError


class VariantChoices:
    """Model variants (full model and ablations)."""

    CHOICES = [
        ("full", "ACDNet"),
        ("wo-graphs", "ACDNet w/o medication graphs"),
        ("wo-mol", "ACDNet w/o molecules"),
        ("wo-att", "ACDNet w/o attention pools"),
        ("wo-seq-att", "ACDNet w/o attention sequence"),
        ("wo-seq-tr", "ACDNet w/o transformer sequence"),
        ("w-gru", "ACDNet w GRU"),
        ("w-rnn", "ACDNet w RNN"),
        ("w-o1", "ACDNet direct scores only"),
    ]

    def __iter__(self):
        return iter(self.CHOICES)

    @classmethod
    def values(cls):
        """Return the list of variant keys."""
        return [key for key, value in cls.CHOICES]

    @classmethod
    def label(cls, key):
        """Return the display label of a variant."""
        for choice_key, value in cls.CHOICES:
            if choice_key == key:
                return value
        raise ContractError(f"unknown variant {key}")


@dataclass(frozen=True)
class VariantSpec:
    """Architecture switches of a variant."""

    graphs: bool = True
    molecules: bool = True
    attention_pools: bool = True
    seq_attention: bool = True
    seq_transformer: bool = True
    sequence_encoder: str = "transformer"
    indirect: bool = True


VARIANT_SPECS = {
    "full": VariantSpec(),
    "wo-graphs": VariantSpec(graphs=False),
    "wo-mol": VariantSpec(molecules=False),
    "wo-att": VariantSpec(attention_pools=False),
    "wo-seq-att": VariantSpec(seq_attention=False),
    "wo-seq-tr": VariantSpec(seq_transformer=False),
    "w-gru": VariantSpec(sequence_encoder="gru"),
    "w-rnn": VariantSpec(sequence_encoder="rnn"),
    "w-o1": VariantSpec(indirect=False),
}


def variant_spec(key):
    """Return the VariantSpec of a variant key."""
    try:
        return VARIANT_SPECS[key]
    except KeyError as exc:
        raise ContractError(
            f"unknown variant {key}, choose from {VariantChoices.values()}"
        ) from exc


class CodeKindChoices:
    """Medical code kinds."""

    CHOICES = [
        ("diagnoses", "Diagnoses"),
        ("procedures", "Procedures"),
        ("medications", "Medications"),
    ]

    def __iter__(self):
        return iter(self.CHOICES)


@dataclass(frozen=True)
class Visit:
    """One admission; code sets are stored as sorted tuples."""

    diagnoses: tuple
    procedures: tuple
    medications: tuple = ()

    @classmethod
    def create(cls, diagnoses, procedures, medications=()):
        """Build a Visit from any iterables of code indices."""
        return cls(
            tuple(sorted({int(code) for code in diagnoses})),
            tuple(sorted({int(code) for code in procedures})),
            tuple(sorted({int(code) for code in medications})),
        )

    def codes(self, kind):
        """Return the code set of the given kind."""
        return getattr(self, kind)


@dataclass(frozen=True)
class PatientRecord:
    """Chronological visit sequence of one patient."""

    patient_id: str
    visits: tuple

    def __post_init__(self):
        if not self.visits:
            raise ContractError(f"patient {self.patient_id} has no visits")

    def __len__(self):
        return len(self.visits)

    def history(self, until):
        """Return the record truncated to its first `until` visits."""
        if not 1 <= until <= len(self.visits):
            raise ContractError(
                f"visit index {until} out of range for {len(self.visits)} visits"
            )
        return PatientRecord(self.patient_id, self.visits[:until])


@dataclass(frozen=True)
class Vocab:
    """Vocabulary sizes |C^d|, |C^p|, |C^m| with optional labels."""

    diagnoses: int
    procedures: int
    medications: int
    labels: Optional[dict] = None

    def __post_init__(self):
        for kind, value in CodeKindChoices():
            if getattr(self, kind) < 1:
                raise ContractError(f"vocabulary {kind} must have at least one code")
        if self.labels:
            for kind, value in CodeKindChoices():
                if len(self.labels.get(kind, [])) != getattr(self, kind):
                    raise ContractError(f"labels for {kind} do not cover every index")

    def size(self, kind):
        """Return the vocabulary size of the given kind."""
        return getattr(self, kind)

    def label(self, kind, index):
        """Return the human-readable label of a code."""
        if self.labels:
            return self.labels[kind][index]
        return f"{kind[:3]}:{index}"

    def check_visit(self, visit):
        """Raise BoundsError if the visit references unknown codes."""
        for kind, value in CodeKindChoices():
            size = self.size(kind)
            for code in visit.codes(kind):
                if not 0 <= code < size:
                    raise BoundsError(f"{kind} index {code} out of bounds [0, {size})")

    def as_dict(self):
        """Return the vocabulary as a plain dict."""
        data = {
            "diagnoses": self.diagnoses,
            "procedures": self.procedures,
            "medications": self.medications,
        }
        if self.labels:
            data["labels"] = self.labels
        return data


@dataclass(frozen=True)
class Molecule:
    """Atom graph of one medicine."""

    atom_types: tuple
    edges: tuple = ()

    @property
    def n_atoms(self):
        """Number of atoms."""
        return len(self.atom_types)

    def bonds(self):
        """Unique undirected bonds as sorted (low, high) pairs."""
        return tuple(sorted({(min(source, target), max(source, target)) for source, target in self.edges}))

    def adjacency(self):
        """Return the symmetric 0/1 adjacency matrix (zero diagonal)."""
        adjacency = np.zeros((self.n_atoms, self.n_atoms), dtype=np.float64)
        for source, target in self.edges:
            adjacency[source, target] = 1.0
            adjacency[target, source] = 1.0
        return adjacency


@dataclass
class KnowledgeGraphs:
    """EHR adjacency A^E, DDI adjacency A^D and molecular graphs."""

    ehr_adj: np.ndarray
    ddi_adj: np.ndarray
    molecules: list = field(default_factory=list)

    def __post_init__(self):
        size = self.ehr_adj.shape[0]
        for name in ["ehr_adj", "ddi_adj"]:
            matrix = getattr(self, name)
            if matrix.shape != (size, size):
                raise ContractError(f"{name} must be {size}x{size}, got {matrix.shape}")
            if not np.array_equal(matrix, matrix.T):
                raise ContractError(f"{name} is not symmetric")
            if np.any(np.diag(matrix)):
                raise ContractError(f"{name} must have a zero diagonal")
        if self.molecules and len(self.molecules) != size:
            raise ContractError(
                f"{len(self.molecules)} molecules given for {size} medications"
            )

    @property
    def medications(self):
        """Number of medicines |C^m|."""
        return self.ehr_adj.shape[0]

    def ddi_pairs(self):
        """Number of DDI pairs (nonzero upper triangle)."""
        return int(np.count_nonzero(np.triu(self.ddi_adj, k=1)))

    def ehr_pairs(self):
        """Number of EHR co-prescription pairs."""
        return int(np.count_nonzero(np.triu(self.ehr_adj, k=1)))


class Dataset(NamedTuple):
    """Vocabulary, patient records and knowledge graphs."""

    vocab: Vocab
    records: list
    graphs: KnowledgeGraphs


@dataclass(frozen=True)
class MetricSummary:
    """Mean and standard deviation of one metric over bootstrap rounds."""

    mean: float
    std: float


@dataclass
class EvalReport:
    """Per-metric mean and std over bootstrap rounds."""

    metrics: dict
    rounds: int
    fraction: float
    samples: int = 0

    def __post_init__(self):
        if self.rounds < 1:
            raise ContractError("rounds must be >= 1")

    def as_records(self):
        """Return one (metric, mean, std) record per metric."""
        return [
            {"kind": "metric", "metric": name, "mean": value.mean, "std": value.std}
            for name, value in self.metrics.items()
        ]
