"""Tape-based reverse-mode differentiation.

Operations append a node to the active :class:`Tape` while one is open via
:func:`record`. :func:`backward` then walks the tape in reverse and pulls
gradients back to whichever tensors the caller asks about.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Iterator, Mapping, Sequence

import numpy as np


class AutodiffError(RuntimeError):
    pass


@dataclass
class Node:
    out: object
    inputs: tuple
    vjp: Callable[[np.ndarray], Sequence[np.ndarray | None]]


class Tape:
    def __init__(self) -> None:
        self.nodes: list[Node] = []
        self._produced: set[int] = set()

    def push(self, out, inputs, vjp) -> None:
        self.nodes.append(Node(out, tuple(inputs), vjp))
        self._produced.add(id(out))

    def produced(self, t) -> bool:
        return id(t) in self._produced

    def __len__(self) -> int:
        return len(self.nodes)


_state = threading.local()


def current_tape() -> Tape | None:
    return getattr(_state, "tape", None)


@contextmanager
def record() -> Iterator[Tape]:
    """Open a recording scope; every op executed inside lands on the tape."""
    prev = current_tape()
    tape = Tape()
    _state.tape = tape
    try:
        yield tape
    finally:
        _state.tape = prev


@contextmanager
def no_record() -> Iterator[None]:
    prev = current_tape()
    _state.tape = None
    try:
        yield
    finally:
        _state.tape = prev


def push(out, inputs, vjp) -> None:
    tape = current_tape()
    if tape is not None:
        tape.push(out, inputs, vjp)


def backward(loss, tape: Tape | None, wrt: Mapping[str, object]) -> dict:
    """Gradients of the scalar ``loss`` with respect to each tensor in ``wrt``.

    Returns a dict keyed like ``wrt`` whose values are Tensors of the same
    shape. Tensors the loss does not depend on get zero gradients.
    """
    from .tensor import Tensor

    if tape is None:
        raise AutodiffError("backward called without a recording tape")
    if not tape.produced(loss):
        raise AutodiffError("loss was not computed inside this recording")
    if loss.data.size != 1:
        raise AutodiffError(f"loss must be a scalar, got shape {loss.shape}")

    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(tape.nodes):
        g = grads.get(id(node.out))
        if g is None:
            continue
        for inp, gi in zip(node.inputs, node.vjp(g)):
            if gi is None:
                continue
            key = id(inp)
            if key in grads:
                grads[key] = grads[key] + gi
            else:
                grads[key] = gi

    out = {}
    for name, t in wrt.items():
        g = grads.get(id(t))
        if g is None:
            g = np.zeros_like(t.data)
        out[name] = Tensor(g, dtype=t.data.dtype)
    return out
