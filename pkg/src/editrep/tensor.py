"""Dense float64 tensors with taped reverse-mode differentiation and Adam.

Every model in this package is built from the small op set below. Ops
validate shapes eagerly and refuse non-finite inputs, so numerical
problems surface at the op that caused them rather than three layers up.
"""

from __future__ import annotations

import json
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np


class ShapeMismatch(ValueError):
    """Raised when operand shapes do not conform to an op's rule."""


class NonFiniteValue(ValueError):
    """Raised when an op receives (or would store) NaN or Inf values."""


class Tensor:
    """A dense float64 array plus an optional gradient buffer."""

    __slots__ = ("values", "requires_grad", "grad", "name")

    def __init__(self, values, requires_grad: bool = False, name: str | None = None):
        self.values = np.asarray(values, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def ndim(self) -> int:
        return self.values.ndim

    @property
    def size(self) -> int:
        return self.values.size

    def item(self) -> float:
        return float(self.values.reshape(-1)[0])

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.values)

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{tag}, requires_grad={self.requires_grad})"


def tensor(values, requires_grad: bool = False, name: str | None = None) -> Tensor:
    return Tensor(values, requires_grad=requires_grad, name=name)


def constant(values, name: str | None = None) -> Tensor:
    return Tensor(values, requires_grad=False, name=name)


@dataclass
class TapeEntry:
    inputs: tuple[Tensor, ...]
    output: Tensor
    backward_fn: "callable"


@dataclass
class Tape:
    """Execution-ordered record of ops; reverse traversal computes grads."""

    entries: list[TapeEntry] = field(default_factory=list)

    def record(self, inputs: tuple[Tensor, ...], output: Tensor, backward_fn) -> None:
        self.entries.append(TapeEntry(inputs, output, backward_fn))

    def __len__(self) -> int:
        return len(self.entries)


_ACTIVE_TAPE: Tape | None = None


@contextmanager
def recording(tape: Tape):
    """Record every op executed in this block onto ``tape``."""
    global _ACTIVE_TAPE
    previous = _ACTIVE_TAPE
    _ACTIVE_TAPE = tape
    try:
        yield tape
    finally:
        _ACTIVE_TAPE = previous


def active_tape() -> Tape | None:
    return _ACTIVE_TAPE


def _check_finite(op: str, *tensors: Tensor) -> None:
    for t in tensors:
        if not np.all(np.isfinite(t.values)):
            raise NonFiniteValue(f"{op}: input contains NaN or Inf")


def _make_output(op: str, values: np.ndarray, inputs: tuple[Tensor, ...], backward_fn) -> Tensor:
    if not np.all(np.isfinite(values)):
        raise NonFiniteValue(f"{op}: result contains NaN or Inf")
    out = Tensor(values, requires_grad=any(t.requires_grad for t in inputs))
    if _ACTIVE_TAPE is not None and out.requires_grad:
        _ACTIVE_TAPE.record(inputs, out, backward_fn)
    return out


_ADJOINTS: dict[int, np.ndarray] | None = None


def _accumulate(t: Tensor, grad) -> None:
    if not t.requires_grad:
        return
    grad = np.asarray(grad, dtype=np.float64)
    if _ADJOINTS is not None:
        buf = _ADJOINTS.get(id(t))
        if buf is None:
            _ADJOINTS[id(t)] = np.array(grad)  # own a mutable ndarray copy
        else:
            buf += grad
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.values)
    t.grad += grad


# ---------------------------------------------------------------------------
# ops


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeMismatch(f"matmul: shapes {a.shape} and {b.shape} do not conform")
    _check_finite("matmul", a, b)

    def backward(g: np.ndarray) -> None:
        _accumulate(a, g @ b.values.T)
        _accumulate(b, a.values.T @ g)

    return _make_output("matmul", a.values @ b.values, (a, b), backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    # Equal shapes, or a row bias [1, d] added to [n, d]. No other broadcast.
    bias_add = a.ndim == 2 and b.ndim == 2 and b.shape == (1, a.shape[1]) and a.shape[0] != 1
    if a.shape != b.shape and not bias_add:
        raise ShapeMismatch(f"add: shapes {a.shape} and {b.shape} do not conform")
    _check_finite("add", a, b)

    def backward(g: np.ndarray) -> None:
        _accumulate(a, g)
        _accumulate(b, g.sum(axis=0, keepdims=True) if bias_add else g)

    return _make_output("add", a.values + b.values, (a, b), backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    # Elementwise with equal shapes; a size-1 operand may scale the other.
    if a.shape != b.shape and a.size != 1 and b.size != 1:
        raise ShapeMismatch(f"mul: shapes {a.shape} and {b.shape} do not conform")
    _check_finite("mul", a, b)

    def backward(g: np.ndarray) -> None:
        ga = g * b.values
        gb = g * a.values
        if a.size == 1 and a.shape != b.shape:
            ga = ga.sum().reshape(a.shape)
        if b.size == 1 and b.shape != a.shape:
            gb = gb.sum().reshape(b.shape)
        _accumulate(a, ga)
        _accumulate(b, gb)

    return _make_output("mul", a.values * b.values, (a, b), backward)


def concat(tensors: list[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise ShapeMismatch("concat: need at least one tensor")
    first = tensors[0].shape
    for t in tensors[1:]:
        ok = len(t.shape) == len(first) and all(
            s == f for i, (s, f) in enumerate(zip(t.shape, first)) if i != axis % len(first)
        )
        if not ok:
            raise ShapeMismatch(f"concat: shapes {first} and {t.shape} do not conform on axis {axis}")
    _check_finite("concat", *tensors)
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g: np.ndarray) -> None:
        for t, start, stop in zip(tensors, offsets[:-1], offsets[1:]):
            idx = [slice(None)] * g.ndim
            idx[axis] = slice(start, stop)
            _accumulate(t, g[tuple(idx)])

    values = np.concatenate([t.values for t in tensors], axis=axis)
    return _make_output("concat", values, tuple(tensors), backward)


def slice_(t: Tensor, start: int, stop: int, axis: int = -1) -> Tensor:
    axis = axis % t.ndim
    if not (0 <= start < stop <= t.shape[axis]):
        raise ShapeMismatch(f"slice: range [{start}:{stop}] invalid for shape {t.shape} axis {axis}")
    _check_finite("slice", t)
    idx = [slice(None)] * t.ndim
    idx[axis] = slice(start, stop)
    idx = tuple(idx)

    def backward(g: np.ndarray) -> None:
        full = np.zeros_like(t.values)
        full[idx] = g
        _accumulate(t, full)

    return _make_output("slice", t.values[idx].copy(), (t,), backward)


def tanh(t: Tensor) -> Tensor:
    _check_finite("tanh", t)
    y = np.tanh(t.values)

    def backward(g: np.ndarray) -> None:
        _accumulate(t, g * (1.0 - y * y))

    return _make_output("tanh", y, (t,), backward)


def sigmoid(t: Tensor) -> Tensor:
    _check_finite("sigmoid", t)
    y = np.where(t.values >= 0, 1.0 / (1.0 + np.exp(-t.values)),
                 np.exp(t.values) / (1.0 + np.exp(t.values)))

    def backward(g: np.ndarray) -> None:
        _accumulate(t, g * y * (1.0 - y))

    return _make_output("sigmoid", y, (t,), backward)


def softmax(t: Tensor, axis: int = -1, mask: np.ndarray | None = None) -> Tensor:
    """Stable softmax; masked-out entries get exactly zero probability.

    ``mask`` is a plain boolean array (True = allowed) matching t's shape.
    """
    _check_finite("softmax", t)
    x = t.values
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != x.shape:
            raise ShapeMismatch(f"softmax: mask shape {mask.shape} does not match {x.shape}")
        if not mask.any(axis=axis).all():
            raise ShapeMismatch("softmax: some slice has no allowed entries")
        x = np.where(mask, x, -np.inf)
    m = np.max(x, axis=axis, keepdims=True)
    e = np.exp(x - m)
    p = e / e.sum(axis=axis, keepdims=True)

    def backward(g: np.ndarray) -> None:
        inner = (g * p).sum(axis=axis, keepdims=True)
        _accumulate(t, p * (g - inner))

    return _make_output("softmax", p, (t,), backward)


def log(t: Tensor) -> Tensor:
    _check_finite("log", t)
    if np.any(t.values <= 0.0):
        raise NonFiniteValue("log: input must be strictly positive")
    y = np.log(t.values)

    def backward(g: np.ndarray) -> None:
        _accumulate(t, g / t.values)

    return _make_output("log", y, (t,), backward)


def embedding_lookup(table: Tensor, indices) -> Tensor:
    if table.ndim != 2:
        raise ShapeMismatch(f"embedding_lookup: table must be 2-D, got {table.shape}")
    idx = np.asarray(indices, dtype=np.int64)
    if idx.ndim != 1:
        raise ShapeMismatch(f"embedding_lookup: indices must be 1-D, got shape {idx.shape}")
    if idx.size and (idx.min() < 0 or idx.max() >= table.shape[0]):
        raise ShapeMismatch(f"embedding_lookup: index out of range for table {table.shape}")
    _check_finite("embedding_lookup", table)

    def backward(g: np.ndarray) -> None:
        if not table.requires_grad:
            return
        full = np.zeros_like(table.values)
        np.add.at(full, idx, g)
        _accumulate(table, full)

    return _make_output("embedding_lookup", table.values[idx].copy(), (table,), backward)


def _reduce(op: str, t: Tensor, axis: int | None, values: np.ndarray, backward) -> Tensor:
    return _make_output(op, values, (t,), backward)


def sum_(t: Tensor, axis: int | None = None) -> Tensor:
    _check_finite("sum", t)
    if axis is None:
        def backward(g: np.ndarray) -> None:
            _accumulate(t, np.full_like(t.values, float(g)))
        return _reduce("sum", t, axis, t.values.sum(), backward)

    def backward(g: np.ndarray) -> None:
        _accumulate(t, np.broadcast_to(g, t.values.shape).copy())

    return _reduce("sum", t, axis, t.values.sum(axis=axis, keepdims=True), backward)


def mean(t: Tensor, axis: int | None = None) -> Tensor:
    _check_finite("mean", t)
    if axis is None:
        n = t.size
        def backward(g: np.ndarray) -> None:
            _accumulate(t, np.full_like(t.values, float(g) / n))
        return _reduce("mean", t, axis, t.values.mean(), backward)

    n = t.shape[axis]

    def backward(g: np.ndarray) -> None:
        _accumulate(t, np.broadcast_to(g, t.values.shape) / n)

    return _reduce("mean", t, axis, t.values.mean(axis=axis, keepdims=True), backward)


def max_(t: Tensor, axis: int | None = None) -> Tensor:
    _check_finite("max", t)
    if axis is None:
        flat_arg = int(t.values.argmax())
        def backward(g: np.ndarray) -> None:
            full = np.zeros_like(t.values)
            full.reshape(-1)[flat_arg] = float(g)
            _accumulate(t, full)
        return _reduce("max", t, axis, t.values.max(), backward)

    arg = np.expand_dims(t.values.argmax(axis=axis), axis)

    def backward(g: np.ndarray) -> None:
        full = np.zeros_like(t.values)
        np.put_along_axis(full, arg, np.take_along_axis(np.broadcast_to(g, full.shape), arg, axis), axis)
        _accumulate(t, full)

    return _reduce("max", t, axis, t.values.max(axis=axis, keepdims=True), backward)


def transpose(t: Tensor) -> Tensor:
    if t.ndim != 2:
        raise ShapeMismatch(f"transpose: expected 2-D, got {t.shape}")
    _check_finite("transpose", t)

    def backward(g: np.ndarray) -> None:
        _accumulate(t, g.T)

    return _make_output("transpose", t.values.T.copy(), (t,), backward)


def scale(t: Tensor, c: float) -> Tensor:
    _check_finite("scale", t)
    c = float(c)

    def backward(g: np.ndarray) -> None:
        _accumulate(t, g * c)

    return _make_output("scale", t.values * c, (t,), backward)


_FORWARD_OPS = {
    "matmul": matmul,
    "add": add,
    "mul": mul,
    "concat": concat,
    "slice": slice_,
    "tanh": tanh,
    "sigmoid": sigmoid,
    "softmax": softmax,
    "log": log,
    "embedding_lookup": embedding_lookup,
    "sum": sum_,
    "mean": mean,
    "max": max_,
}


def forward_op(op_kind: str, *inputs, **kwargs) -> Tensor:
    """Dispatch by op name; the supported kinds are fixed."""
    if op_kind not in _FORWARD_OPS:
        raise ValueError(f"unknown op kind {op_kind!r}; supported: {sorted(_FORWARD_OPS)}")
    return _FORWARD_OPS[op_kind](*inputs, **kwargs)


def backward(loss: Tensor, tape: Tape) -> None:
    """Populate .grad on every requires_grad tensor recorded on the tape.

    Gradients accumulate into existing .grad buffers; tensors on the tape
    that do not contribute to the loss end up with zero gradients.
    """
    global _ADJOINTS
    if loss.size != 1:
        raise ShapeMismatch(f"backward: loss must be scalar, got shape {loss.shape}")
    tensors: dict[int, Tensor] = {}
    for entry in tape.entries:
        for t in (entry.output, *entry.inputs):
            if t.requires_grad:
                tensors[id(t)] = t
    tensors[id(loss)] = loss
    _ADJOINTS = {id(loss): np.ones_like(loss.values)}
    try:
        for entry in reversed(tape.entries):
            adjoint = _ADJOINTS.get(id(entry.output))
            if adjoint is not None:
                entry.backward_fn(adjoint)
        adjoints = _ADJOINTS
    finally:
        _ADJOINTS = None
    for key, t in tensors.items():
        if t.grad is None:
            t.grad = np.zeros_like(t.values)
        found = adjoints.get(key)
        if found is not None:
            t.grad += found


# ---------------------------------------------------------------------------
# parameter initialization


def glorot_matrix(rng: np.random.Generator, fan_in: int, fan_out: int, name: str | None = None) -> Tensor:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-limit, limit, size=(fan_in, fan_out)), requires_grad=True, name=name)


def zeros_bias(dim: int, name: str | None = None) -> Tensor:
    return Tensor(np.zeros((1, dim)), requires_grad=True, name=name)


def uniform_embedding(rng: np.random.Generator, rows: int, dim: int, name: str | None = None) -> Tensor:
    return Tensor(rng.uniform(-0.1, 0.1, size=(rows, dim)), requires_grad=True, name=name)


# ---------------------------------------------------------------------------
# Adam


@dataclass
class AdamState:
    """Bias-corrected Adam accumulators for an ordered parameter list."""

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_params(cls, params: list[Tensor], learning_rate: float = 1e-3,
                   beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8) -> "AdamState":
        return cls(learning_rate=learning_rate, beta1=beta1, beta2=beta2, epsilon=epsilon,
                   m=[np.zeros_like(p.values) for p in params],
                   v=[np.zeros_like(p.values) for p in params])


def adam_step(params: list[Tensor], grads: list[np.ndarray], state: AdamState) -> None:
    """One in-place Adam update; increments the step counter by exactly 1."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ShapeMismatch("adam_step: params, grads and state must have equal lengths")
    for p, g, m in zip(params, grads, state.m):
        if p.values.shape != g.shape or m.shape != g.shape:
            raise ShapeMismatch(f"adam_step: shapes {p.values.shape}, {g.shape}, {m.shape} misaligned")
        if not np.all(np.isfinite(g)):
            raise NonFiniteValue("adam_step: gradient contains NaN or Inf")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1 ** state.step
    bc2 = 1.0 - b2 ** state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p.values -= state.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + state.epsilon)


def clip_global_norm(grads: list[np.ndarray], max_norm: float) -> float:
    """Scale all grads in place so the global L2 norm is at most max_norm."""
    total = np.sqrt(sum(float((g * g).sum()) for g in grads))
    if total > max_norm and total > 0.0:
        factor = max_norm / total
        for g in grads:
            g *= factor
    return total


def zero_grads(params: list[Tensor]) -> None:
    for p in params:
        p.zero_grad()


# ---------------------------------------------------------------------------
# checkpoint serialization (.erck)


def save_tensors(path, named: dict[str, Tensor | np.ndarray]) -> None:
    """Write named tensors: one-line JSON manifest, then raw little-endian f64 blobs."""
    entries = []
    blobs = []
    offset = 0
    for name, t in named.items():
        values = t.values if isinstance(t, Tensor) else np.asarray(t, dtype=np.float64)
        blob = np.ascontiguousarray(values, dtype="<f8").tobytes()
        entries.append({"name": name, "shape": list(values.shape), "offset": offset})
        blobs.append(blob)
        offset += len(blob)
    manifest = json.dumps({"format": "erck", "version": 1, "tensors": entries})
    with open(path, "wb") as fh:
        fh.write(manifest.encode("utf-8") + b"\n")
        for blob in blobs:
            fh.write(blob)


def load_tensors(path) -> dict[str, np.ndarray]:
    """Inverse of save_tensors; bit-exact round-trip."""
    with open(path, "rb") as fh:
        header = fh.readline()
        manifest = json.loads(header.decode("utf-8"))
        if manifest.get("format") != "erck":
            raise ValueError(f"{path}: not a tensor checkpoint file")
        body = fh.read()
    out: dict[str, np.ndarray] = {}
    for entry in manifest["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        raw = body[start:start + 8 * count]
        out[entry["name"]] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
    return out
