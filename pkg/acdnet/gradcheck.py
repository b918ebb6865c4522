"""Finite-difference checks of the autodiff engine and of the full model.

Relative error is ||analytic - numeric|| / max(||analytic||, ||numeric||, floor)
over the checked entries of each input, numeric gradients coming from
central differences.
"""
__author__ = "acdnet developers"
__license__ = "GPLv3"

import contextlib
import logging
from typing import NamedTuple

import numpy as np

from acdnet import losses, medicine_encoder, training, utils
from acdnet import tensor as T
from acdnet.exceptions import GradientCheckError
from acdnet.models import KnowledgeGraphs, Molecule, PatientRecord, Visit, Vocab
from acdnet.network import ACDNet
from acdnet.settings import EncoderConfig

LOGGER = logging.getLogger(__name__)

PRIMITIVE_STEP = 1e-6
PRIMITIVE_THRESHOLD = 1e-5
MODEL_STEP = 1e-4
MODEL_THRESHOLD = 1e-4
MODEL_ENTRIES = 6


class CheckResult(NamedTuple):
    """Relative error of one checked input."""

    suite: str
    name: str
    error: float
    threshold: float

    @property
    def passed(self):
        return bool(self.error < self.threshold)


class GradcheckReport(NamedTuple):
    """Every result of a gradcheck run."""

    results: list
    corrupt: str = ""

    @property
    def passed(self):
        """True when every check passed."""
        return all(result.passed for result in self.results)

    @property
    def failures(self):
        return [result for result in self.results if not result.passed]

    @property
    def worst(self):
        """Result with the highest error relative to its threshold."""
        return max(self.results, key=lambda result: result.error / result.threshold)

    def raise_for_failure(self):
        """Raise GradientCheckError naming the worst input."""
        if self.passed:
            return
        worst = self.worst
        raise GradientCheckError(
            f"{len(self.failures)} of {len(self.results)} gradient checks failed, worst is "
            f"{worst.suite} {worst.name} with relative error {worst.error:.3e} "
            f"(threshold {worst.threshold:.0e})"
        )


def relative_error(analytic, numeric, floor=1e-8):
    """Norm-based relative error of two gradients."""
    analytic = np.asarray(analytic, dtype=np.float64).ravel()
    numeric = np.asarray(numeric, dtype=np.float64).ravel()
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), floor)
    return float(np.linalg.norm(analytic - numeric) / scale)


def check_gradients(function, inputs, step, entries=None, rng=None, floor=1e-8):
    """Compare autodiff with central differences of the scalar function().

    inputs maps names to the leaf tensors function reads; when entries is
    set, at most that many positions per input are sampled with rng.
    Returns a name -> relative error map.
    """
    for tensor in inputs.values():
        tensor.requires_grad = True
        tensor.grad = None
    T.backward(function())
    errors = {}
    for name, tensor in inputs.items():
        analytic = tensor.grad if tensor.grad is not None else np.zeros_like(tensor.data)
        positions = np.arange(tensor.size)
        if entries is not None and tensor.size > entries:
            positions = np.sort(rng.choice(tensor.size, entries, replace=False))
        flat = tensor.data.reshape(-1)
        numeric = np.zeros(positions.size)
        with T.no_grad():
            for slot, position in enumerate(positions.tolist()):
                original = flat[position]
                flat[position] = original + step
                upper = function().item()
                flat[position] = original - step
                lower = function().item()
                flat[position] = original
                numeric[slot] = (upper - lower) / (2.0 * step)
        errors[name] = relative_error(analytic.reshape(-1)[positions], numeric, floor)
        tensor.grad = None
    return errors


@contextlib.contextmanager
def corrupted_matmul():
    """Temporarily swap in a wrong matmul backward (halved left gradient)."""
    original = T._matmul_grads  # pylint: disable=protected-access

    def wrong(a, b, gradient):
        grad_a, grad_b = original(a, b, gradient)
        return 0.5 * grad_a, grad_b

    T._matmul_grads = wrong  # pylint: disable=protected-access
    try:
        yield
    finally:
        T._matmul_grads = original  # pylint: disable=protected-access


def _projected(build, rng):
    """Scalar function sum(build() * W) with a fixed random W."""
    with T.no_grad():
        shape = build().shape
    weights = T.Tensor(rng.normal(size=shape))
    return lambda: T.tensor_sum(T.mul(build(), weights))


def primitive_cases(rng):
    """Return (name, inputs, function) triples, one per primitive.

    Inputs of kinked functions are kept away from the kinks.
    """
    signs = rng.choice([-1.0, 1.0], size=(3, 4))
    x = T.Tensor(rng.uniform(0.2, 1.5, size=(3, 4)) * signs)
    y = T.Tensor(rng.normal(size=(3, 4)))
    a = T.Tensor(rng.normal(size=(3, 4)))
    b = T.Tensor(rng.normal(size=(4, 2)))
    v = T.Tensor(rng.normal(size=4))
    batch_a = T.Tensor(rng.normal(size=(2, 3, 4)))
    batch_b = T.Tensor(rng.normal(size=(2, 4, 3)))
    row = T.Tensor(rng.normal(size=4))
    gain = T.Tensor(rng.normal(size=4))
    bias = T.Tensor(rng.normal(size=4))
    positive = T.Tensor(rng.uniform(0.5, 2.0, size=(3, 4)))
    bounded = T.Tensor(rng.uniform(0.2, 0.8, size=(3, 4)))
    table = T.Tensor(rng.normal(size=(5, 3)))
    segments = np.array([0, 0, 1, 1, 1, 2])
    scores = T.Tensor(rng.normal(size=6))
    messages = T.Tensor(rng.normal(size=(6, 3)))
    ring = np.zeros((5, 5))
    for node in range(5):
        ring[node, (node + 1) % 5] = ring[(node + 1) % 5, node] = 1.0
    adjacency = medicine_encoder.normalize_adjacency(ring)
    gcn_w1 = T.Tensor(rng.normal(size=(5, 3)))
    gcn_w2 = T.Tensor(rng.normal(size=(3, 3)))
    probabilities = T.Tensor(rng.uniform(0.05, 0.95, size=6))
    target = np.array([1.0, 0.0, 1.0, 0.0, 0.0, 1.0])

    outputs = [
        ("matmul", {"a": a, "b": b}, lambda: T.matmul(a, b)),
        ("matmul_vector", {"v": v, "b": b}, lambda: T.matmul(v, b)),
        ("matmul_batched", {"a": batch_a, "b": batch_b}, lambda: T.matmul(batch_a, batch_b)),
        ("spmm", {"a": a}, lambda: T.spmm(np.ones((2, 3)), a)),
        ("add_row", {"x": x, "row": row}, lambda: T.add(x, row)),
        ("sub", {"x": x, "y": y}, lambda: T.sub(x, y)),
        ("mul", {"x": x, "y": y}, lambda: T.mul(x, y)),
        ("scale", {"y": y}, lambda: T.scale(y, -2.5)),
        ("tanh", {"y": y}, lambda: T.tanh(y)),
        ("relu", {"x": x}, lambda: T.relu(x)),
        ("leaky_relu", {"x": x}, lambda: T.leaky_relu(x)),
        ("sigmoid", {"y": y}, lambda: T.sigmoid(y)),
        ("exp", {"y": y}, lambda: T.exp(y)),
        ("log", {"positive": positive}, lambda: T.log(positive)),
        ("clamp", {"bounded": bounded}, lambda: T.clamp(bounded, 0.1, 0.9)),
        ("softmax", {"y": y}, lambda: T.softmax(y, axis=-1)),
        ("softmax_axis0", {"y": y}, lambda: T.softmax(y, axis=0)),
        ("layernorm", {"y": y, "gain": gain, "bias": bias}, lambda: T.layernorm(y, gain, bias, 1e-5)),
        ("mean", {"y": y}, lambda: T.mean(y, axis=0)),
        ("sum", {"y": y}, lambda: T.tensor_sum(y, axis=1)),
        ("concat", {"x": x, "y": y}, lambda: T.concat([x, y], axis=1)),
        ("stack", {"x": x, "y": y}, lambda: T.stack([x, y], axis=0)),
        ("slice", {"y": y}, lambda: T.getitem(y, (slice(0, 2), slice(1, 4)))),
        ("transpose", {"batch_a": batch_a}, lambda: T.transpose(batch_a, (1, 0, 2))),
        ("reshape", {"y": y}, lambda: T.reshape(y, (2, 6))),
        ("take_rows", {"table": table}, lambda: T.take_rows(table, [0, 3, 3, 1])),
        ("cosine_rows", {"v": v, "y": y}, lambda: T.cosine_rows(v, y)),
        ("segment_softmax", {"scores": scores}, lambda: T.segment_softmax(scores, segments, 3)),
        (
            "edge_aggregate",
            {"scores": scores, "messages": messages},
            lambda: T.edge_aggregate(scores, messages, segments, 3),
        ),
        (
            "gcn",
            {"gcn_w1": gcn_w1, "gcn_w2": gcn_w2},
            lambda: medicine_encoder.gcn_encode(adjacency, gcn_w1, gcn_w2),
        ),
    ]
    cases = [(name, inputs, _projected(build, rng)) for name, inputs, build in outputs]
    cases.append(
        ("loss_bce", {"probabilities": probabilities}, lambda: losses.loss_bce(probabilities, target))
    )
    cases.append(
        ("loss_multi", {"probabilities": probabilities}, lambda: losses.loss_multi(probabilities, target))
    )
    return cases


def gradcheck_primitives(seed=0):
    """Check every primitive at h=1e-6 against a 1e-5 threshold."""
    rng = np.random.default_rng(utils.derive_seed(seed, 1))
    results = []
    for case, inputs, function in primitive_cases(rng):
        for name, error in check_gradients(function, inputs, PRIMITIVE_STEP).items():
            results.append(CheckResult("primitive", f"{case}:{name}", error, PRIMITIVE_THRESHOLD))
    return results


def tiny_problem(seed=0):
    """Return (vocab, graphs, patient) of a small two-visit problem."""
    rng = np.random.default_rng(utils.derive_seed(seed, 2))
    vocab = Vocab(6, 4, 5)
    ehr = np.zeros((5, 5))
    for first, second in [(0, 1), (1, 2), (2, 4), (0, 3)]:
        ehr[first, second] = ehr[second, first] = 1.0
    ddi = np.zeros((5, 5))
    ddi[1, 3] = ddi[3, 1] = 1.0
    molecules = []
    for _ in range(5):
        atoms = int(rng.integers(3, 6))
        edges = tuple((index - 1, index) for index in range(1, atoms))
        molecules.append(Molecule(tuple(int(atom) for atom in rng.integers(0, 3, atoms)), edges))
    patient = PatientRecord(
        "gradcheck",
        (
            Visit.create([0, 2], [1], [0, 3]),
            Visit.create([1, 5], [0, 3], [2]),
        ),
    )
    return vocab, KnowledgeGraphs(ehr, ddi, molecules), patient


def gradcheck_model(seed=0, variant="full", lam=0.97):
    """Check every parameter of a small model on a two-visit patient.

    Each parameter contributes up to MODEL_ENTRIES sampled positions,
    perturbed by h=1e-4 against a 1e-4 threshold.
    """
    vocab, graphs, patient = tiny_problem(seed)
    encoder = EncoderConfig(dim=8, heads=2, layers=2, ff_width=16)
    model = ACDNet(vocab, encoder, variant, atom_types=3, seed=seed)
    constants = model.prepare(graphs)
    clamp = model.numerics.bce_clamp

    def function():
        medicine = model.medicine_matrix(constants)
        return training.patient_loss(model, patient, medicine, lam, clamp)

    rng = np.random.default_rng(utils.derive_seed(seed, 3))
    inputs = dict(model.params.items())
    errors = check_gradients(function, inputs, MODEL_STEP, MODEL_ENTRIES, rng, floor=1e-6)
    return [CheckResult("model", name, error, MODEL_THRESHOLD) for name, error in errors.items()]


def run_gradcheck(seed=0, corrupt=None):
    """Run both suites; corrupt="matmul" swaps in the broken backward."""
    manager = corrupted_matmul() if corrupt == "matmul" else contextlib.nullcontext()
    with manager:
        results = gradcheck_primitives(seed) + gradcheck_model(seed)
    report = GradcheckReport(results, corrupt or "")
    worst = report.worst
    LOGGER.info(
        "gradcheck %s: %d checks, worst %s %s at %.3e",
        "passed" if report.passed else "failed",
        len(results),
        worst.suite,
        worst.name,
        worst.error,
    )
    return report
