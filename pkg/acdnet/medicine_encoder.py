"""Medicine encoder.

The fused medicine matrix is a row-wise fusion layer over the feature-axis
concatenation of these blocks:
* the medication embedding table;
* two-layer GCNs over the EHR and DDI graphs;
* one molecule row per medicine: GCN over its atom graph, a multi-head GAT
  layer and a mean readout.

Graph constants (normalized adjacencies, the block-diagonal atom graph and
the edge lists) are prepared once per KnowledgeGraphs.
"""
__author__ = "acdnet developers"
__license__ = "GPLv3"

from typing import NamedTuple, Optional

import numpy as np
from scipy import sparse

from acdnet import tensor as T
from acdnet.exceptions import ContractError, DimensionError
from acdnet.sequence_encoders import glorot, trace_weights


class MoleculeBatch(NamedTuple):
    """All atom graphs as one block-diagonal graph."""

    adjacency: sparse.csr_matrix
    atom_types: np.ndarray
    targets: np.ndarray
    neighbors: np.ndarray
    readout: sparse.csr_matrix
    n_atoms: int


class GraphConstants(NamedTuple):
    """Constant inputs of the medicine encoder."""

    ehr: np.ndarray
    ddi: np.ndarray
    molecules: Optional[MoleculeBatch]


class MedicineMatrix(NamedTuple):
    """Medicine representations; blocks dropped by the variant are None."""

    base: T.Tensor
    ehr: Optional[T.Tensor]
    ddi: Optional[T.Tensor]
    molecular: Optional[T.Tensor]
    fused: T.Tensor


def normalize_adjacency(adjacency):
    """Return D^-1/2 (A + I) D^-1/2 with D the degree matrix of A + I."""
    adjacency = np.asarray(adjacency, dtype=np.float64)
    if adjacency.ndim != 2 or adjacency.shape[0] != adjacency.shape[1]:
        raise ContractError(f"adjacency must be square, got {adjacency.shape}")
    if not np.array_equal(adjacency, adjacency.T):
        raise ContractError("adjacency is not symmetric")
    if np.any(np.diag(adjacency)):
        raise ContractError("adjacency must have a zero diagonal")
    looped = adjacency + np.eye(adjacency.shape[0])
    inv_sqrt = 1.0 / np.sqrt(looped.sum(axis=1))
    return inv_sqrt[:, None] * looped * inv_sqrt[None, :]


def batch_molecules(molecules):
    """Build the block-diagonal atom graph of a list of molecules."""
    if not molecules:
        raise ContractError("no molecules to batch")
    blocks, types, targets, neighbors, owners = [], [], [], [], []
    offset = 0
    for index, molecule in enumerate(molecules):
        if molecule.n_atoms < 1:
            raise ContractError(f"molecule {index} has no atoms")
        blocks.append(sparse.csr_matrix(normalize_adjacency(molecule.adjacency())))
        types.extend(molecule.atom_types)
        atoms = np.arange(offset, offset + molecule.n_atoms)
        targets.extend(atoms.tolist())
        neighbors.extend(atoms.tolist())
        for source, target in molecule.bonds():
            targets.extend([offset + source, offset + target])
            neighbors.extend([offset + target, offset + source])
        owners.extend([index] * molecule.n_atoms)
        offset += molecule.n_atoms
    counts = np.bincount(owners)
    readout = sparse.csr_matrix(
        (1.0 / counts[owners], (owners, np.arange(offset))), shape=(len(molecules), offset)
    )
    return MoleculeBatch(
        sparse.block_diag(blocks, format="csr"),
        np.asarray(types, dtype=np.int64),
        np.asarray(targets, dtype=np.int64),
        np.asarray(neighbors, dtype=np.int64),
        readout,
        offset,
    )


def prepare_graphs(graphs, spec):
    """Precompute the constant graph inputs used by the variant."""
    use_graphs = spec.graphs and spec.indirect
    ehr = normalize_adjacency(graphs.ehr_adj) if use_graphs else None
    ddi = normalize_adjacency(graphs.ddi_adj) if use_graphs else None
    molecules = None
    if spec.molecules and spec.indirect:
        if len(graphs.molecules) != graphs.medications:
            raise ContractError(
                f"{len(graphs.molecules)} molecules given for {graphs.medications} medications"
            )
        molecules = batch_molecules(graphs.molecules)
    return GraphConstants(ehr, ddi, molecules)


def gcn_encode(adjacency, w1, w2, features=None):
    """Two-hop GCN: A relu(A H W1) W2, with H W1 = W1 when features is None."""
    first = w1 if features is None else T.matmul(features, w1)
    if adjacency.shape[1] != first.shape[0]:
        raise DimensionError(f"cannot propagate {first.shape} over adjacency {adjacency.shape}")
    return T.matmul(T.spmm(adjacency, T.relu(T.spmm(adjacency, first))), w2)


def gat_layer(h, targets, neighbors, n_nodes, heads, context=None):
    """Multi-head graph attention; heads is a list of (W, a) pairs.

    Each (target, neighbor) edge, self-loops included, is scored
    LeakyReLU(a . [W h_target || W h_neighbor]) and normalized over the
    target's neighborhood. Head outputs are concatenated.
    """
    outputs = []
    for index, (weight, attention) in enumerate(heads):
        projected = T.matmul(h, weight)
        width = projected.shape[1]
        target_scores = T.matmul(projected, T.getitem(attention, slice(0, width)))
        neighbor_scores = T.matmul(projected, T.getitem(attention, slice(width, 2 * width)))
        scores = T.leaky_relu(
            T.add(T.take_rows(target_scores, targets), T.take_rows(neighbor_scores, neighbors)), 0.2
        )
        weights = T.segment_softmax(scores, targets, n_nodes)
        trace_weights(context, f"gat.head{index}", weights.data)
        outputs.append(
            T.edge_aggregate(weights, T.take_rows(projected, neighbors), targets, n_nodes)
        )
    return outputs[0] if len(outputs) == 1 else T.concat(outputs, axis=1)


def readout(h):
    """Mean over atom rows."""
    return T.mean(h, axis=0)


def register(params, rng, medications, cfg, spec, atom_types):
    """Register graph, molecule and fusion parameters."""
    dim = cfg.dim
    blocks = 1
    if spec.graphs:
        for graph in ["ehr", "ddi"]:
            params.add(f"graph.{graph}.w1", glorot(rng, medications, dim))
            params.add(f"graph.{graph}.w2", glorot(rng, dim, dim))
        blocks += 2
    if spec.molecules:
        params.add("molecule.atom_embed", rng.normal(0.0, 1.0 / np.sqrt(dim), (atom_types, dim)))
        params.add("molecule.gcn.w1", glorot(rng, dim, dim))
        params.add("molecule.gcn.w2", glorot(rng, dim, dim))
        for head in range(cfg.heads):
            params.add(f"molecule.gat.head{head}.w", glorot(rng, dim, cfg.head_dim))
            params.add(f"molecule.gat.head{head}.attn", glorot(rng, 1, 2 * cfg.head_dim).reshape(-1))
        blocks += 1
    params.add("fusion.w", glorot(rng, blocks * dim, dim))
    params.add("fusion.b", np.zeros(dim))


def encode_molecules(params, batch, heads, context=None):
    """Return the molecular block, one row per molecule."""
    features = T.take_rows(params["molecule.atom_embed"], batch.atom_types)
    atoms = gcn_encode(batch.adjacency, params["molecule.gcn.w1"], params["molecule.gcn.w2"], features)
    attended = gat_layer(
        atoms,
        batch.targets,
        batch.neighbors,
        batch.n_atoms,
        [
            (params[f"molecule.gat.head{head}.w"], params[f"molecule.gat.head{head}.attn"])
            for head in range(heads)
        ],
        context,
    )
    return T.spmm(batch.readout, attended)


def build_medicine_matrix(params, constants, cfg, spec, context=None):
    """Compute M_base, the optional graph and molecule blocks, and the fused M."""
    base = params["embed.medications"]
    blocks = [base]
    ehr = ddi = molecular = None
    if spec.graphs:
        ehr = gcn_encode(constants.ehr, params["graph.ehr.w1"], params["graph.ehr.w2"])
        ddi = gcn_encode(constants.ddi, params["graph.ddi.w1"], params["graph.ddi.w2"])
        blocks.extend([ehr, ddi])
    if spec.molecules:
        molecular = encode_molecules(params, constants.molecules, cfg.heads, context)
        blocks.append(molecular)
    joined = blocks[0] if len(blocks) == 1 else T.concat(blocks, axis=1)
    fused = T.relu(T.add(T.matmul(joined, params["fusion.w"]), params["fusion.b"]))
    return MedicineMatrix(base, ehr, ddi, molecular, fused)
