"""Dense float64 tensors with tape-based reverse-mode differentiation.

Every operation records its parents and a backward closure on the output
tensor (dynamic graph, rebuilt at each forward pass). backward() walks the
graph in reverse topological order and accumulates gradients into every
tensor with requires_grad set.

Broadcasting is limited to scalar-with-tensor and row-with-matrix; any other
shape disagreement raises DimensionError naming both shapes.
"""
__author__ = "acdnet developers"
__license__ = "GPLv3"

import contextlib
import threading

import numpy as np
from scipy.special import expit

from acdnet.exceptions import ContractError, DimensionError, NumericGuardError

_STATE = threading.local()


def grad_enabled():
    """Return True if operations record the graph in this thread."""
    return getattr(_STATE, "enabled", True)


@contextlib.contextmanager
def no_grad():
    """Disable graph recording in the current thread."""
    previous = grad_enabled()
    _STATE.enabled = False
    try:
        yield
    finally:
        _STATE.enabled = previous


class Tensor:
    """Dense n-dimensional float64 array in a differentiation graph."""

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward", "_op")

    def __init__(self, data, requires_grad=False):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._parents = ()
        self._backward = None
        self._op = ""

    def __repr__(self):
        return f"Tensor(shape={self.shape}, op={self._op or 'leaf'}, requires_grad={self.requires_grad})"

    @property
    def shape(self):
        """Tensor shape as a tuple."""
        return self.data.shape

    @property
    def ndim(self):
        """Number of dimensions."""
        return self.data.ndim

    @property
    def size(self):
        """Number of elements."""
        return self.data.size

    def numpy(self):
        """Return a copy of the data."""
        return self.data.copy()

    def item(self):
        """Return the value of a single-element tensor."""
        if self.data.size != 1:
            raise ContractError(f"item() needs a single element, shape is {self.shape}")
        return float(self.data.reshape(-1)[0])

    def zero_grad(self):
        """Drop the accumulated gradient."""
        self.grad = None

    def _accumulate(self, gradient):
        if not self.requires_grad:
            return
        gradient = np.asarray(gradient, dtype=np.float64)
        if gradient.shape != self.data.shape:
            gradient = gradient.reshape(self.data.shape)
        if self.grad is None:
            self.grad = gradient.copy()
        else:
            self.grad = self.grad + gradient

    def backward(self):
        """Backpropagate from this scalar tensor."""
        backward(self)

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __neg__(self):
        return scale(self, -1.0)

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            raise ContractError("division is only supported by a constant")
        return scale(self, 1.0 / float(other))

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return getitem(self, key)

    def sum(self, axis=None):
        """Sum over an axis (or all elements)."""
        return tensor_sum(self, axis)

    def mean(self, axis=None):
        """Mean over an axis (or all elements)."""
        return mean(self, axis)

    def reshape(self, *shape):
        """Reshape, keeping the element order."""
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        """Permute axes."""
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes or None)

    @property
    def T(self):  # pylint: disable=invalid-name
        """Transpose of a 2D tensor."""
        return transpose(self, None)


def as_tensor(value):
    """Wrap constants into a Tensor without gradient."""
    return value if isinstance(value, Tensor) else Tensor(value)


def _result(data, parents, backward_fn, op):
    out = Tensor(data)
    if grad_enabled() and any(parent.requires_grad for parent in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward_fn
        out._op = op
    return out


def _topological_order(root):
    order = []
    visited = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(loss):
    """Populate .grad of every requires_grad tensor reachable from loss.

    Gradients of leaves accumulate across calls until zero_grad().
    """
    if loss.data.size != 1:
        raise ContractError(f"backward() needs a scalar loss, got shape {loss.shape}")
    order = _topological_order(loss)
    for node in order:
        if node._parents:
            # Intermediate gradients are per pass
            node.grad = None
    loss._accumulate(np.ones_like(loss.data))
    for node in reversed(order):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)


def _is_scalar(tensor):
    return tensor.ndim == 0 or tensor.shape == (1,)


def _is_row_of(row, matrix):
    return row.ndim == 1 and matrix.ndim >= 2 and row.shape[0] == matrix.shape[-1]


def _check_broadcast(a, b, op):
    if a.shape == b.shape or _is_scalar(a) or _is_scalar(b):
        return
    if _is_row_of(a, b) or _is_row_of(b, a):
        return
    raise DimensionError(f"cannot {op} shapes {a.shape} and {b.shape}")


def _unbroadcast(gradient, shape):
    if gradient.shape == tuple(shape):
        return gradient
    if int(np.prod(shape)) == 1:
        return np.full(shape, gradient.sum())
    return gradient.reshape(-1, shape[-1]).sum(axis=0)


def add(a, b):
    """Elementwise a + b."""
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "add")

    def _backward(gradient):
        a._accumulate(_unbroadcast(gradient, a.shape))
        b._accumulate(_unbroadcast(gradient, b.shape))

    return _result(a.data + b.data, (a, b), _backward, "add")


def sub(a, b):
    """Elementwise a - b."""
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "subtract")

    def _backward(gradient):
        a._accumulate(_unbroadcast(gradient, a.shape))
        b._accumulate(_unbroadcast(-gradient, b.shape))

    return _result(a.data - b.data, (a, b), _backward, "sub")


def mul(a, b):
    """Elementwise (Hadamard) product."""
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "multiply")

    def _backward(gradient):
        a._accumulate(_unbroadcast(gradient * b.data, a.shape))
        b._accumulate(_unbroadcast(gradient * a.data, b.shape))

    return _result(a.data * b.data, (a, b), _backward, "mul")


def scale(x, factor):
    """Multiply by a constant."""
    x = as_tensor(x)
    factor = float(factor)

    def _backward(gradient):
        x._accumulate(gradient * factor)

    return _result(x.data * factor, (x,), _backward, "scale")


def _matmul_grads(a, b, gradient):
    """Return the gradients of a @ b with respect to a and b."""
    if a.ndim == 1:
        return gradient @ b.T, np.outer(a, gradient)
    if b.ndim == 1:
        return np.outer(gradient, b), a.T @ gradient
    return gradient @ np.swapaxes(b, -1, -2), np.swapaxes(a, -1, -2) @ gradient


def matmul(a, b):
    """Matrix product.

    Supported: 2D @ 2D, 1D @ 2D, 2D @ 1D and batched 3D @ 3D.
    """
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim == 1 and b.ndim == 2:
        valid = a.shape[0] == b.shape[0]
    elif a.ndim == 2 and b.ndim == 1:
        valid = a.shape[1] == b.shape[0]
    elif a.ndim == b.ndim and a.ndim in (2, 3):
        valid = a.shape[:-2] == b.shape[:-2] and a.shape[-1] == b.shape[-2]
    else:
        valid = False
    if not valid:
        raise DimensionError(f"cannot matmul shapes {a.shape} and {b.shape}")

    def _backward(gradient):
        # Looked up at call time so a replacement takes effect
        grad_a, grad_b = _matmul_grads(a.data, b.data, gradient)
        a._accumulate(grad_a)
        b._accumulate(grad_b)

    return _result(a.data @ b.data, (a, b), _backward, "matmul")


def spmm(matrix, x):
    """Product of a constant (dense or scipy sparse) matrix with a tensor."""
    x = as_tensor(x)
    if matrix.ndim != 2 or x.ndim not in (1, 2) or matrix.shape[1] != x.shape[0]:
        raise DimensionError(f"cannot spmm shapes {matrix.shape} and {x.shape}")

    def _backward(gradient):
        x._accumulate(np.asarray(matrix.T @ gradient))

    return _result(np.asarray(matrix @ x.data), (x,), _backward, "spmm")


def tanh(x):
    """Hyperbolic tangent."""
    x = as_tensor(x)
    value = np.tanh(x.data)

    def _backward(gradient):
        x._accumulate(gradient * (1.0 - value * value))

    return _result(value, (x,), _backward, "tanh")


def relu(x):
    """Rectified linear unit."""
    x = as_tensor(x)

    def _backward(gradient):
        x._accumulate(gradient * (x.data > 0))

    return _result(np.maximum(x.data, 0.0), (x,), _backward, "relu")


def leaky_relu(x, slope=0.2):
    """Leaky rectified linear unit."""
    x = as_tensor(x)
    factor = np.where(x.data > 0, 1.0, slope)

    def _backward(gradient):
        x._accumulate(gradient * factor)

    return _result(x.data * factor, (x,), _backward, "leaky_relu")


def sigmoid(x):
    """Logistic sigmoid."""
    x = as_tensor(x)
    value = expit(x.data)

    def _backward(gradient):
        x._accumulate(gradient * value * (1.0 - value))

    return _result(value, (x,), _backward, "sigmoid")


def exp(x):
    """Elementwise exponential."""
    x = as_tensor(x)
    value = np.exp(x.data)

    def _backward(gradient):
        x._accumulate(gradient * value)

    return _result(value, (x,), _backward, "exp")


def log(x):
    """Elementwise natural logarithm."""
    x = as_tensor(x)
    if np.any(x.data <= 0):
        raise NumericGuardError("log of a non-positive value")

    def _backward(gradient):
        x._accumulate(gradient / x.data)

    return _result(np.log(x.data), (x,), _backward, "log")


def clamp(x, low, high):
    """Clip into [low, high]; gradient is zero where clipped."""
    x = as_tensor(x)
    inside = (x.data >= low) & (x.data <= high)

    def _backward(gradient):
        x._accumulate(gradient * inside)

    return _result(np.clip(x.data, low, high), (x,), _backward, "clamp")


def softmax(x, axis=-1):
    """Softmax along an axis with max-subtraction."""
    x = as_tensor(x)
    shifted = np.exp(x.data - x.data.max(axis=axis, keepdims=True))
    value = shifted / shifted.sum(axis=axis, keepdims=True)

    def _backward(gradient):
        inner = (gradient * value).sum(axis=axis, keepdims=True)
        x._accumulate(value * (gradient - inner))

    return _result(value, (x,), _backward, "softmax")


def layernorm(x, gain, bias, eps=1e-5):
    """Normalize the last axis to zero mean and unit variance, then gain*x+bias."""
    x, gain, bias = as_tensor(x), as_tensor(gain), as_tensor(bias)
    width = x.shape[-1]
    if gain.shape != (width,) or bias.shape != (width,):
        raise DimensionError(
            f"layernorm gain {gain.shape} and bias {bias.shape} must match width {width}"
        )
    centered = x.data - x.data.mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt((centered * centered).mean(axis=-1, keepdims=True) + eps)
    normalized = centered * inv_std

    def _backward(gradient):
        gain._accumulate((gradient * normalized).reshape(-1, width).sum(axis=0))
        bias._accumulate(gradient.reshape(-1, width).sum(axis=0))
        grad_hat = gradient * gain.data
        x._accumulate(
            inv_std
            * (
                grad_hat
                - grad_hat.mean(axis=-1, keepdims=True)
                - normalized * (grad_hat * normalized).mean(axis=-1, keepdims=True)
            )
        )

    return _result(normalized * gain.data + bias.data, (x, gain, bias), _backward, "layernorm")


def tensor_sum(x, axis=None):
    """Sum over an axis, or over all elements when axis is None."""
    x = as_tensor(x)
    shape = x.shape

    def _backward(gradient):
        if axis is not None:
            gradient = np.expand_dims(gradient, axis)
        x._accumulate(np.broadcast_to(gradient, shape))

    return _result(x.data.sum(axis=axis), (x,), _backward, "sum")


def mean(x, axis=None):
    """Mean over an axis, or over all elements when axis is None."""
    x = as_tensor(x)
    count = x.size if axis is None else x.shape[axis]
    if count == 0:
        raise ContractError(f"mean over an empty axis of shape {x.shape}")
    return scale(tensor_sum(x, axis), 1.0 / count)


def concat(tensors, axis=0):
    """Concatenate tensors along an existing axis."""
    tensors = [as_tensor(tensor) for tensor in tensors]
    if not tensors:
        raise ContractError("concat needs at least one tensor")
    reference = tensors[0].shape
    kept_axes = [index for index in range(len(reference)) if index != axis % len(reference)]
    for tensor in tensors[1:]:
        if tensor.ndim != len(reference) or any(
            tensor.shape[index] != reference[index] for index in kept_axes
        ):
            raise DimensionError(f"cannot concat shapes {reference} and {tensor.shape}")
    boundaries = np.cumsum([tensor.shape[axis] for tensor in tensors])[:-1]

    def _backward(gradient):
        for tensor, piece in zip(tensors, np.split(gradient, boundaries, axis=axis)):
            tensor._accumulate(piece)

    return _result(
        np.concatenate([tensor.data for tensor in tensors], axis=axis), tensors, _backward, "concat"
    )


def stack(tensors, axis=0):
    """Stack equally shaped tensors along a new axis."""
    tensors = [as_tensor(tensor) for tensor in tensors]
    if not tensors:
        raise ContractError("stack needs at least one tensor")
    for tensor in tensors[1:]:
        if tensor.shape != tensors[0].shape:
            raise DimensionError(f"cannot stack shapes {tensors[0].shape} and {tensor.shape}")

    def _backward(gradient):
        for index, tensor in enumerate(tensors):
            tensor._accumulate(np.take(gradient, index, axis=axis))

    return _result(np.stack([tensor.data for tensor in tensors], axis=axis), tensors, _backward, "stack")


def getitem(x, key):
    """Indexing and slicing."""
    x = as_tensor(x)
    if isinstance(key, list):
        key = np.asarray(key, dtype=np.int64)

    def _backward(gradient):
        full = np.zeros_like(x.data)
        np.add.at(full, key, gradient)
        x._accumulate(full)

    return _result(x.data[key], (x,), _backward, "getitem")


def take_rows(table, indices):
    """Gather rows of table (repeated indices accumulate gradient)."""
    table = as_tensor(table)
    indices = np.asarray(indices, dtype=np.int64).reshape(-1)
    if indices.size and (indices.min() < 0 or indices.max() >= table.shape[0]):
        raise DimensionError(
            f"row index out of range for table of shape {table.shape}"
        )

    def _backward(gradient):
        full = np.zeros_like(table.data)
        np.add.at(full, indices, gradient)
        table._accumulate(full)

    return _result(table.data[indices], (table,), _backward, "take_rows")


def transpose(x, axes=None):
    """Permute axes (reverse them when axes is None)."""
    x = as_tensor(x)
    axes = tuple(range(x.ndim))[::-1] if axes is None else tuple(axes)
    inverse = tuple(np.argsort(axes))

    def _backward(gradient):
        x._accumulate(np.transpose(gradient, inverse))

    return _result(np.transpose(x.data, axes), (x,), _backward, "transpose")


def reshape(x, shape):
    """Reshape in row-major order."""
    x = as_tensor(x)
    original = x.shape

    def _backward(gradient):
        x._accumulate(gradient.reshape(original))

    try:
        value = x.data.reshape(shape)
    except ValueError as exc:
        raise DimensionError(f"cannot reshape {original} into {tuple(shape)}") from exc
    return _result(value, (x,), _backward, "reshape")


def cosine_rows(a, matrix, eps=1e-8):
    """Cosine similarity between vector a and every row of matrix.

    Norms are clamped from below at eps. With eps == 0 a zero norm raises
    NumericGuardError.
    """
    a, matrix = as_tensor(a), as_tensor(matrix)
    if a.ndim != 1 or matrix.ndim != 2 or matrix.shape[1] != a.shape[0]:
        raise DimensionError(f"cannot compare shapes {a.shape} and {matrix.shape}")
    a_norm = np.linalg.norm(a.data)
    row_norms = np.linalg.norm(matrix.data, axis=1)
    if eps <= 0 and (a_norm == 0 or np.any(row_norms == 0)):
        raise NumericGuardError("cosine similarity of a zero-norm vector")
    a_clamped = max(a_norm, eps)
    rows_clamped = np.maximum(row_norms, eps)
    dots = matrix.data @ a.data
    value = dots / (a_clamped * rows_clamped)

    def _backward(gradient):
        weights = gradient / (a_clamped * rows_clamped)
        grad_a = matrix.data.T @ weights
        if a_norm > eps:
            grad_a = grad_a - a.data * (weights @ dots) / (a_clamped * a_clamped)
        a._accumulate(grad_a)
        grad_rows = np.outer(weights, a.data)
        stretch = np.where(row_norms > eps, weights * dots / (rows_clamped * rows_clamped), 0.0)
        matrix._accumulate(grad_rows - stretch[:, None] * matrix.data)

    return _result(value, (a, matrix), _backward, "cosine_rows")


def segment_softmax(scores, segments, n_segments):
    """Softmax of a 1D score vector within each segment id."""
    scores = as_tensor(scores)
    segments = np.asarray(segments, dtype=np.int64)
    if scores.shape != segments.shape:
        raise DimensionError(f"cannot segment scores {scores.shape} by {segments.shape}")
    peaks = np.full(n_segments, -np.inf)
    np.maximum.at(peaks, segments, scores.data)
    shifted = np.exp(scores.data - peaks[segments])
    totals = np.zeros(n_segments)
    np.add.at(totals, segments, shifted)
    value = shifted / totals[segments]

    def _backward(gradient):
        inner = np.zeros(n_segments)
        np.add.at(inner, segments, gradient * value)
        scores._accumulate(value * (gradient - inner[segments]))

    return _result(value, (scores,), _backward, "segment_softmax")


def edge_aggregate(weights, messages, segments, n_segments):
    """Return out[s] = sum of weights[e] * messages[e] over edges e in segment s."""
    weights, messages = as_tensor(weights), as_tensor(messages)
    segments = np.asarray(segments, dtype=np.int64)
    if weights.shape != segments.shape or messages.shape[0] != segments.shape[0]:
        raise DimensionError(
            f"cannot aggregate weights {weights.shape} and messages {messages.shape}"
        )
    value = np.zeros((n_segments,) + messages.shape[1:])
    np.add.at(value, segments, weights.data[:, None] * messages.data)

    def _backward(gradient):
        routed = gradient[segments]
        weights._accumulate((routed * messages.data).sum(axis=1))
        messages._accumulate(routed * weights.data[:, None])

    return _result(value, (weights, messages), _backward, "edge_aggregate")


def dropout(x, rate, rng):
    """Inverted dropout with a mask drawn from rng."""
    if rate <= 0:
        return x
    x = as_tensor(x)
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return mul(x, Tensor(mask))


class ParamRegistry:
    """Insertion-ordered map of uniquely named trainable tensors."""

    def __init__(self):
        self._params = {}

    def add(self, name, data):
        """Register a new parameter initialized with data."""
        if name in self._params:
            raise ContractError(f"parameter {name} already registered")
        tensor = Tensor(data, requires_grad=True)
        self._params[name] = tensor
        return tensor

    def __getitem__(self, name):
        try:
            return self._params[name]
        except KeyError as exc:
            raise ContractError(f"unknown parameter {name}") from exc

    def __contains__(self, name):
        return name in self._params

    def __iter__(self):
        return iter(self._params)

    def __len__(self):
        return len(self._params)

    def names(self):
        """Parameter names in insertion order."""
        return list(self._params)

    def items(self):
        """(name, tensor) pairs in insertion order."""
        return self._params.items()

    def zero_grad(self):
        """Drop every accumulated gradient."""
        for tensor in self._params.values():
            tensor.grad = None

    def gradients(self):
        """Return a name -> gradient copy map (zeros where absent)."""
        return {
            name: tensor.grad.copy() if tensor.grad is not None else np.zeros_like(tensor.data)
            for name, tensor in self._params.items()
        }

    def state(self):
        """Return a name -> data copy map."""
        return {name: tensor.data.copy() for name, tensor in self._params.items()}

    def load_state(self, state):
        """Overwrite parameter values from a name -> array map."""
        missing = set(self._params) - set(state)
        unknown = set(state) - set(self._params)
        if missing or unknown:
            raise ContractError(
                f"parameter set mismatch, missing {sorted(missing)}, unknown {sorted(unknown)}"
            )
        for name, value in state.items():
            tensor = self._params[name]
            value = np.asarray(value, dtype=np.float64)
            if value.shape != tensor.shape:
                raise DimensionError(
                    f"parameter {name} has shape {tensor.shape}, got {value.shape}"
                )
            tensor.data = value.copy()

    def count(self):
        """Total number of scalar parameters."""
        return int(sum(tensor.size for tensor in self._params.values()))
