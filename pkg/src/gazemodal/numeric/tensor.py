"""Reverse-mode differentiable values."""

from typing import Callable, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from gazemodal.config import settings
from gazemodal.errors import ArgumentError

GradRule = Callable[[np.ndarray], np.ndarray]
ArrayLike = Union["DifferentiableValue", np.ndarray, float, int, Sequence[float]]

_check_finite = settings.check_finite


def set_finite_checks(enabled: bool) -> None:
    """Toggle NaN/Inf assertions on every forward and backward buffer."""
    global _check_finite
    _check_finite = bool(enabled)


def finite_checks_enabled() -> bool:
    """Whether NaN/Inf assertions are active."""
    return _check_finite


def _assert_finite(array: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(array)):
        raise FloatingPointError(f"non-finite values in {what}")


class DifferentiableValue:
    """A float64 array plus an accumulated-gradient slot, one node of the reverse-mode graph.

    ``parents`` holds ``(node, rule)`` pairs where ``rule`` maps the upstream gradient of
    this node to the contribution it makes to ``node.grad``.
    """

    __slots__ = ("value", "grad", "parents", "requires_grad", "name")

    def __init__(
        self,
        value: Union[np.ndarray, float, Sequence[float]],
        parents: Iterable[Tuple["DifferentiableValue", GradRule]] = (),
        requires_grad: Optional[bool] = None,
        name: Optional[str] = None,
    ):
        array = np.array(value, dtype=np.float64)
        if _check_finite:
            _assert_finite(array, name or "forward value")
        self.value = array
        self.parents: Tuple[Tuple[DifferentiableValue, GradRule], ...] = tuple(parents)
        self.requires_grad = bool(self.parents) if requires_grad is None else requires_grad
        self.grad = np.zeros_like(array)
        self.name = name

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    @property
    def size(self) -> int:
        return int(self.value.size)

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.value)

    def item(self) -> float:
        return float(self.value.reshape(-1)[0])

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"DifferentiableValue(shape={self.shape}{label}, requires_grad={self.requires_grad})"

    # Operators delegate to the kernels in gazemodal.numeric.ops.
    def __add__(self, other: ArrayLike) -> "DifferentiableValue":
        from gazemodal.numeric.ops import add

        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other: ArrayLike) -> "DifferentiableValue":
        from gazemodal.numeric.ops import add, scale

        return add(self, scale(other, -1.0))

    def __rsub__(self, other: ArrayLike) -> "DifferentiableValue":
        from gazemodal.numeric.ops import add, scale

        return add(other, scale(self, -1.0))

    def __mul__(self, other: ArrayLike) -> "DifferentiableValue":
        from gazemodal.numeric.ops import mul

        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self) -> "DifferentiableValue":
        from gazemodal.numeric.ops import scale

        return scale(self, -1.0)

    def __getitem__(self, key) -> "DifferentiableValue":
        from gazemodal.numeric.ops import getitem

        return getitem(self, key)


def parameter(value: Union[np.ndarray, Sequence[float], float], name: Optional[str] = None) -> DifferentiableValue:
    """A leaf that accumulates gradients."""
    return DifferentiableValue(value, requires_grad=True, name=name)


def constant(value: ArrayLike) -> DifferentiableValue:
    """Wrap an array as a leaf that never receives gradients."""
    if isinstance(value, DifferentiableValue):
        return value
    return DifferentiableValue(value, requires_grad=False)


def node(value: np.ndarray, *edges: Tuple[DifferentiableValue, GradRule]) -> DifferentiableValue:
    """Build an interior node, keeping only edges that lead to gradient-carrying inputs."""
    kept = [(parent, rule) for parent, rule in edges if parent.requires_grad]
    return DifferentiableValue(value, parents=kept, requires_grad=bool(kept))


def _topological_order(root: DifferentiableValue) -> List[DifferentiableValue]:
    order: List[DifferentiableValue] = []
    visited = set()
    stack: List[Tuple[DifferentiableValue, bool]] = [(root, False)]
    while stack:
        current, expanded = stack.pop()
        if expanded:
            order.append(current)
            continue
        if id(current) in visited:
            continue
        visited.add(id(current))
        stack.append((current, True))
        for parent, _ in current.parents:
            if id(parent) not in visited:
                stack.append((parent, False))
    return order


def reverse_sweep(loss: DifferentiableValue) -> None:
    """Populate ``grad`` of every node reachable from a scalar ``loss``.

    Interior gradients are reset on each sweep; leaf gradients accumulate until the
    optimizer zeroes them.
    """
    if loss.size != 1:
        raise ArgumentError(f"reverse_sweep needs a scalar loss, got shape {loss.shape}")

    order = _topological_order(loss)
    for current in order:
        if current.parents:
            current.grad = np.zeros_like(current.value)
    loss.grad = loss.grad + np.ones_like(loss.value)

    for current in reversed(order):
        if _check_finite:
            _assert_finite(current.grad, current.name or "gradient")
        for parent, rule in current.parents:
            parent.grad += rule(current.grad)
