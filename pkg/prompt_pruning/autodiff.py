"""
Dense reverse-mode differentiation over float64 numpy arrays.

Each primitive is a `Function` subclass with a `forward` on raw arrays and a
`backward` that maps the output gradient to one gradient per input. Calling
`backward(root)` orders the operations reachable from `root` on a `Tape` and
walks it once in reverse.
"""

from __future__ import annotations

import logging
from enum import Enum
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ContractError, DegenerateVectorError, DimensionError, NumericError

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, float, int, Sequence[float], Sequence[Sequence[float]]]

NORM_FLOOR = 1e-12


class Tensor:
    """A read-only float64 array plus the operation that produced it"""

    __array_priority__ = 100

    def __init__(self, values: ArrayLike, requires_grad: bool = False,
                 name: Optional[str] = None, creator: Optional["Function"] = None):
        data = np.array(values, dtype=np.float64)
        data.setflags(write=False)
        self.values = data
        self.requires_grad = requires_grad
        self.name = name
        self.creator = creator

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.values.shape

    @property
    def ndim(self) -> int:
        return self.values.ndim

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def is_leaf(self) -> bool:
        return self.creator is None

    def item(self) -> float:
        if self.values.size != 1:
            raise ContractError(f"item() needs a single value, got shape {self.shape}")
        return float(self.values.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        """Writable copy of the values"""
        return np.array(self.values)

    def __add__(self, other: Union["Tensor", ArrayLike]) -> "Tensor":
        return add(self, _as_tensor(other))

    def __radd__(self, other: ArrayLike) -> "Tensor":
        return add(_as_tensor(other), self)

    def __mul__(self, other: Union["Tensor", ArrayLike]) -> "Tensor":
        if isinstance(other, (int, float)):
            return scale(self, float(other))
        return mul(self, _as_tensor(other))

    def __rmul__(self, other: ArrayLike) -> "Tensor":
        return self.__mul__(other)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})"


def constant(values: ArrayLike, name: Optional[str] = None) -> Tensor:
    """Tensor that never receives a gradient"""
    return Tensor(values, requires_grad=False, name=name)


def parameter(values: ArrayLike, name: Optional[str] = None) -> Tensor:
    """Leaf tensor that receives a gradient"""
    return Tensor(values, requires_grad=True, name=name)


def _as_tensor(value: Union[Tensor, ArrayLike]) -> Tensor:
    return value if isinstance(value, Tensor) else constant(value)


class Function:
    """Base class for differentiable primitives"""

    def __init__(self, *inputs: Tensor):
        self.inputs = inputs
        self.saved: Dict[str, Any] = {}

    def forward(self, *arrays: np.ndarray, **kwargs: Any) -> np.ndarray:
        raise NotImplementedError("Forward pass not implemented for this function")

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        raise NotImplementedError("Backward pass not implemented for this function")

    @classmethod
    def apply(cls, *inputs: Tensor, **kwargs: Any) -> Tensor:
        func = cls(*inputs)
        out = func.forward(*(t.values for t in inputs), **kwargs)
        requires_grad = any(t.requires_grad for t in inputs)
        return Tensor(out, requires_grad=requires_grad, creator=func if requires_grad else None)


def _broadcast_check(a: np.ndarray, b: np.ndarray, op: str) -> None:
    if a.shape == b.shape:
        return
    if b.ndim == 1 and a.ndim >= 1 and a.shape[-1:] == b.shape:
        return
    if a.ndim == 1 and b.ndim >= 1 and b.shape[-1:] == a.shape:
        return
    raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} are not broadcastable")


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    return grad


class MatMul(Function):
    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
            raise DimensionError(f"matmul: cannot multiply shapes {a.shape} and {b.shape}")
        return a @ b

    def backward(self, grad):
        a, b = self.inputs
        return grad @ b.values.T, a.values.T @ grad


class Add(Function):
    def forward(self, a, b):
        _broadcast_check(a, b, "add")
        return a + b

    def backward(self, grad):
        a, b = self.inputs
        return _unbroadcast(grad, a.shape), _unbroadcast(grad, b.shape)


class Mul(Function):
    def forward(self, a, b):
        _broadcast_check(a, b, "mul")
        return a * b

    def backward(self, grad):
        a, b = self.inputs
        return (_unbroadcast(grad * b.values, a.shape),
                _unbroadcast(grad * a.values, b.shape))


class Relu(Function):
    def forward(self, a):
        return np.maximum(a, 0.0)

    def backward(self, grad):
        (a,) = self.inputs
        return (grad * (a.values > 0.0),)


class Scale(Function):
    def forward(self, a, factor: float = 1.0):
        self.saved["factor"] = float(factor)
        return a * float(factor)

    def backward(self, grad):
        return (grad * self.saved["factor"],)


class Sum(Function):
    def forward(self, a, axis: Optional[int] = None):
        self.saved["axis"] = axis
        return np.sum(a, axis=axis)

    def backward(self, grad):
        (a,) = self.inputs
        axis = self.saved["axis"]
        if axis is not None:
            grad = np.expand_dims(grad, axis)
        return (np.broadcast_to(grad, a.shape).copy(),)


class Reshape(Function):
    def forward(self, a, shape: Tuple[int, ...] = ()):
        try:
            return a.reshape(shape)
        except ValueError as exc:
            raise DimensionError(f"reshape: cannot view {a.shape} as {shape}") from exc

    def backward(self, grad):
        (a,) = self.inputs
        return (grad.reshape(a.shape),)


class Take(Function):
    """Gather rows (entries of the first axis) by index"""

    def forward(self, a, indices: Optional[np.ndarray] = None):
        idx = np.asarray(indices, dtype=np.int64)
        if a.ndim == 0:
            raise DimensionError("take: cannot index a scalar")
        if idx.size and (idx.min() < 0 or idx.max() >= a.shape[0]):
            raise DimensionError(f"take: index out of range for leading dimension {a.shape[0]}")
        self.saved["indices"] = idx
        return a[idx]

    def backward(self, grad):
        (a,) = self.inputs
        out = np.zeros(a.shape, dtype=np.float64)
        np.add.at(out, self.saved["indices"], grad)
        return (out,)


class CosineSim(Function):
    """Cosine similarity of two vectors, or of paired rows of two matrices"""

    def forward(self, a, b):
        if a.shape != b.shape or a.ndim not in (1, 2):
            raise DimensionError(f"cosine_sim: shapes {a.shape} and {b.shape} must match (vector or matrix)")
        norm_a = np.linalg.norm(a, axis=-1)
        norm_b = np.linalg.norm(b, axis=-1)
        for label, norms in (("first", norm_a), ("second", norm_b)):
            bad = np.flatnonzero(np.atleast_1d(norms) < NORM_FLOOR)
            if bad.size:
                raise DegenerateVectorError(
                    f"cosine_sim: {label} argument has norm below {NORM_FLOOR} (row {int(bad[0])})",
                    index=int(bad[0]))
        dot = np.sum(a * b, axis=-1)
        cos = dot / (norm_a * norm_b)
        self.saved.update(norm_a=norm_a, norm_b=norm_b, cos=cos)
        return cos

    def backward(self, grad):
        a, b = self.inputs
        na = self.saved["norm_a"]
        nb = self.saved["norm_b"]
        cos = self.saved["cos"]
        if a.ndim == 2:
            na, nb, cos, grad = na[:, None], nb[:, None], cos[:, None], grad[:, None]
        ga = grad * (b.values / (na * nb) - cos * a.values / (na * na))
        gb = grad * (a.values / (na * nb) - cos * b.values / (nb * nb))
        return ga, gb


class SoftmaxNLL(Function):
    """Negative log softmax probability of the target class"""

    def forward(self, logits, targets: Any = 0):
        if logits.ndim not in (1, 2):
            raise DimensionError(f"softmax_nll: logits must be a vector or matrix, got {logits.shape}")
        rows = np.atleast_2d(logits)
        tgt = np.atleast_1d(np.asarray(targets, dtype=np.int64))
        classes = rows.shape[1]
        if classes < 2:
            raise ContractError(f"softmax_nll: need at least 2 classes, got {classes}")
        if tgt.shape != (rows.shape[0],):
            raise ContractError(f"softmax_nll: {tgt.size} targets for {rows.shape[0]} rows")
        if tgt.size and (tgt.min() < 0 or tgt.max() >= classes):
            raise ContractError(f"softmax_nll: target outside [0, {classes})")
        bad = np.flatnonzero(~np.isfinite(rows.reshape(-1)))
        if bad.size:
            raise NumericError(f"softmax_nll: non-finite logit at index {int(bad[0])}", index=int(bad[0]))
        shifted = rows - rows.max(axis=1, keepdims=True)
        log_norm = np.log(np.exp(shifted).sum(axis=1))
        losses = log_norm - shifted[np.arange(rows.shape[0]), tgt]
        probs = np.exp(shifted - log_norm[:, None])
        self.saved.update(probs=probs, targets=tgt)
        return losses if logits.ndim == 2 else losses[0]

    def backward(self, grad):
        (logits,) = self.inputs
        probs = self.saved["probs"].copy()
        tgt = self.saved["targets"]
        probs[np.arange(probs.shape[0]), tgt] -= 1.0
        out = probs * np.atleast_1d(grad)[:, None]
        return (out.reshape(logits.shape),)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    return MatMul.apply(a, b)


def add(a: Tensor, b: Tensor) -> Tensor:
    return Add.apply(a, b)


def mul(a: Tensor, b: Tensor) -> Tensor:
    return Mul.apply(a, b)


def relu(a: Tensor) -> Tensor:
    return Relu.apply(a)


def scale(a: Tensor, factor: float) -> Tensor:
    return Scale.apply(a, factor=factor)


def tensor_sum(a: Tensor, axis: Optional[int] = None) -> Tensor:
    return Sum.apply(a, axis=axis)


def reshape(a: Tensor, shape: Tuple[int, ...]) -> Tensor:
    return Reshape.apply(a, shape=tuple(shape))


def take(a: Tensor, indices: Iterable[int]) -> Tensor:
    return Take.apply(a, indices=np.asarray(list(indices) if not isinstance(indices, np.ndarray) else indices))


def cosine_sim(a: Tensor, b: Tensor) -> Tensor:
    return CosineSim.apply(a, b)


def softmax_nll(logits: Tensor, target: Union[int, Sequence[int], np.ndarray]) -> Tensor:
    return SoftmaxNLL.apply(logits, targets=target)


class ElementwiseOp(Enum):
    ADD = "add"
    MUL = "mul"
    RELU = "relu"
    SCALE = "scale"


def elementwise(op: Union[ElementwiseOp, str], a: Tensor, b: Optional[Tensor] = None,
                factor: Optional[float] = None) -> Tensor:
    """Dispatch one of the elementwise primitives by name"""
    op = ElementwiseOp(op)
    if op in (ElementwiseOp.ADD, ElementwiseOp.MUL):
        if b is None:
            raise ContractError(f"elementwise {op.value} needs two operands")
        return add(a, b) if op is ElementwiseOp.ADD else mul(a, b)
    if op is ElementwiseOp.RELU:
        return relu(a)
    if factor is None:
        raise ContractError("elementwise scale needs a factor")
    return scale(a, factor)


class GradientMap(dict):
    """Gradients keyed by leaf tensor identity"""

    def __getitem__(self, tensor: Tensor) -> np.ndarray:
        return dict.__getitem__(self, id(tensor))

    def __contains__(self, tensor: object) -> bool:
        return dict.__contains__(self, id(tensor))

    def get(self, tensor: Tensor, default: Optional[np.ndarray] = None) -> Optional[np.ndarray]:
        return dict.get(self, id(tensor), default)


class Tape:
    """Topologically ordered record of the operations behind a root tensor"""

    def __init__(self, root: Tensor):
        self.root = root
        self.nodes: List[Tensor] = self._order(root)

    @staticmethod
    def _order(root: Tensor) -> List[Tensor]:
        order: List[Tensor] = []
        seen = set()
        stack: List[Tuple[Tensor, bool]] = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            if node.creator is not None:
                for parent in reversed(node.creator.inputs):
                    if parent.requires_grad and id(parent) not in seen:
                        stack.append((parent, False))
        return order

    @property
    def leaves(self) -> List[Tensor]:
        return [node for node in self.nodes if node.is_leaf and node.requires_grad]

    def backward(self) -> GradientMap:
        grads: Dict[int, np.ndarray] = {id(self.root): np.ones(self.root.shape)}
        for node in reversed(self.nodes):
            if node.creator is None:
                continue
            grad = grads.get(id(node))
            if grad is None:
                continue
            for parent, pgrad in zip(node.creator.inputs, node.creator.backward(grad)):
                if pgrad is None or not parent.requires_grad:
                    continue
                previous = grads.get(id(parent))
                grads[id(parent)] = pgrad if previous is None else previous + pgrad
        result = GradientMap()
        for leaf in self.leaves:
            dict.__setitem__(result, id(leaf), grads.get(id(leaf), np.zeros(leaf.shape)))
        return result


def backward(root: Tensor) -> GradientMap:
    """Gradients of a scalar root with respect to every leaf that requires them"""
    if root.size != 1 or root.ndim != 0:
        raise ContractError(f"backward needs a scalar root, got shape {root.shape}")
    if not root.requires_grad:
        return GradientMap()
    return Tape(root).backward()


def central_difference(fn: Callable[[np.ndarray], float], point: np.ndarray,
                       eps: float = 1e-5) -> np.ndarray:
    """Central finite-difference gradient of a scalar function of an array"""
    base = np.array(point, dtype=np.float64)
    grad = np.zeros_like(base)
    flat = grad.reshape(-1)
    for i in range(base.size):
        plus = base.copy()
        minus = base.copy()
        plus.reshape(-1)[i] += eps
        minus.reshape(-1)[i] -= eps
        flat[i] = (fn(plus) - fn(minus)) / (2.0 * eps)
    return grad
