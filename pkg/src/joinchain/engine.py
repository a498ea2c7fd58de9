"""Execution of join-chain plans over finite interpretations.

The only primitive is the join ``out[s] = OR_{s'} W[s, s'] AND P[s']``, with
AND and OR supplied by an :class:`Algebra`:

============  ===========  ==============================
tag           conjunction  disjunction over a sequence a
============  ===========  ==============================
boolean       AND          OR
noisy-or      product      1 - prod(1 - a)
sum-clamp     product      min(1, sum(a))
plain-sum     product      sum(a)
============  ===========  ==============================

Under ``plain-sum`` a join is literally the matrix-vector product ``Z = A V``
with the binary predicate as attention matrix ``A`` and the unary predicate
as value vector ``V``. Its outputs are unnormalized scores, not truth values.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from .interpretation import Interpretation, InterpretationError
from .planner import JoinChainPlan


class DomainError(ValueError):
    """Values outside what an algebra accepts (e.g. 0.5 under boolean)."""


@dataclass(frozen=True)
class Algebra:
    tag: str
    disj_reduce: Callable[[np.ndarray, int], np.ndarray]
    bounded: bool = True

    @staticmethod
    def conj(a, b):
        # AND on {0,1} and the product on [0,1] coincide.
        return np.multiply(a, b)

    def check(self, arr: np.ndarray, what: str = "value") -> None:
        if self.tag == "boolean":
            if not np.all((arr == 0) | (arr == 1)):
                raise DomainError(f"boolean algebra requires 0/1 {what}s")
        elif self.bounded:
            if arr.size and (arr.min() < 0 or arr.max() > 1):
                raise DomainError(f"{self.tag} requires {what}s in [0, 1]")
        elif arr.size and arr.min() < 0:
            raise DomainError(f"{self.tag} requires non-negative {what}s")

    def join(self, W: np.ndarray, P: np.ndarray) -> np.ndarray:
        if self.tag == "plain-sum":
            return W @ P
        if self.tag == "sum-clamp":
            return np.minimum(1.0, W @ P)
        return self.disj_reduce(W * P[None, :], 1)

    def disj(self, vectors: Sequence[np.ndarray]) -> np.ndarray:
        return self.disj_reduce(np.stack(vectors), 0)


def _noisy_or(a, axis):
    return 1.0 - np.prod(1.0 - a, axis=axis)


ALGEBRAS = {
    "boolean": Algebra("boolean", lambda a, axis: np.max(a, axis=axis)),
    "noisy-or": Algebra("noisy-or", _noisy_or),
    "sum-clamp": Algebra("sum-clamp", lambda a, axis: np.minimum(1.0, np.sum(a, axis=axis))),
    "plain-sum": Algebra("plain-sum", lambda a, axis: np.sum(a, axis=axis), bounded=False),
}


def get_algebra(alg: Union[str, Algebra]) -> Algebra:
    if isinstance(alg, Algebra):
        return alg
    try:
        return ALGEBRAS[alg]
    except KeyError:
        raise ValueError(f"unknown algebra {alg!r}; choose from {', '.join(ALGEBRAS)}") from None


def join(W, P, alg: Union[str, Algebra] = "boolean") -> np.ndarray:
    """``out[s] = disj over s' of conj(W[s, s'], P[s'])``."""
    alg = get_algebra(alg)
    W = np.asarray(W, dtype=np.float64)
    P = np.asarray(P, dtype=np.float64)
    if W.ndim != 2 or P.ndim != 1 or W.shape != (P.shape[0], P.shape[0]):
        raise ValueError(f"dimension mismatch: W {W.shape} vs P {P.shape}")
    alg.check(W, "matrix value")
    alg.check(P, "vector value")
    return alg.join(W, P)


def node_vector(names: Iterable[str], itp: Interpretation) -> np.ndarray:
    out = np.ones(itp.domain_size)
    for name in sorted(names):
        out = Algebra.conj(out, itp.unary_vector(name))
    return out


def edge_matrix(names: Iterable[str], itp: Interpretation) -> np.ndarray:
    S = itp.domain_size
    out = np.ones((S, S))
    for name in sorted(names):
        out = Algebra.conj(out, itp.binary_matrix(name))
    return out


@dataclass
class LayerTrace:
    head_inputs: dict[tuple[str, int], np.ndarray] = field(default_factory=dict)
    head_outputs: dict[tuple[str, int], np.ndarray] = field(default_factory=dict)
    slots: dict[str, np.ndarray] = field(default_factory=dict)


@dataclass
class Trace:
    algebra: str
    inputs: dict[str, np.ndarray]
    layers: list[LayerTrace]
    output: np.ndarray

    def to_json(self) -> dict:
        def vec(v):
            return [float(x) for x in v]

        return {
            "inputs": {k: vec(v) for k, v in self.inputs.items()},
            "layers": [
                {
                    "heads": {f"{h}@t{m}": vec(v) for (h, m), v in lt.head_outputs.items()},
                    "slots": {k: vec(v) for k, v in lt.slots.items()},
                }
                for lt in self.layers
            ],
        }


def _check_interpretation(itp: Interpretation, alg: Algebra) -> None:
    if alg.tag == "boolean" and not itp.is_boolean():
        raise DomainError("boolean algebra requires a 0/1 interpretation")


def _run(plan: JoinChainPlan, itp: Interpretation, alg: Algebra, keep: bool) -> Trace:
    _check_interpretation(itp, alg)
    slots = {slot: node_vector(names, itp) for slot, (_, _, names) in plan.inputs.items()}
    trace = Trace(alg.tag, dict(slots) if keep else {}, [], np.empty(0))
    for layer in plan.layers:
        lt = LayerTrace()
        outputs = {}
        for h in layer.heads:
            W = edge_matrix(h.edge_predicates, itp)
            for m in h.trees:
                V = slots[h.slot_for(m)]
                outputs[(h.id, m)] = alg.join(W, V)
                if keep:
                    lt.head_inputs[(h.id, m)] = V
        new_slots = {}
        for slot, entry in layer.aggregation.items():
            v = slots[entry.base]
            for hid in entry.heads:
                v = Algebra.conj(v, outputs[(hid, entry.tree)])
            new_slots[slot] = v
        slots = new_slots
        if keep:
            lt.head_outputs = outputs
            lt.slots = dict(slots)
            trace.layers.append(lt)
    terms = [Algebra.conj(slots[t.slot], itp.prop_value(t.constant)) for t in plan.final]
    trace.output = alg.disj(terms) if terms else np.zeros(itp.domain_size)
    return trace


def execute(plan: JoinChainPlan, itp: Interpretation, alg: Union[str, Algebra] = "boolean") -> np.ndarray:
    """Output vector of ``plan``: entry ``s`` is the value of the formula at ``x_s``."""
    return _run(plan, itp, get_algebra(alg), keep=False).output


def trace_execution(plan: JoinChainPlan, itp: Interpretation, alg: Union[str, Algebra] = "boolean") -> Trace:
    """Like :func:`execute` but keeps every slot and head output per layer."""
    return _run(plan, itp, get_algebra(alg), keep=True)


@dataclass(frozen=True)
class HeadRecord:
    head: str
    tree: int
    A: np.ndarray
    V: np.ndarray
    Z: np.ndarray
    A_display: Optional[np.ndarray] = None


def _softmax_rows(A: np.ndarray) -> np.ndarray:
    e = np.exp(A - A.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def attention_view(plan: JoinChainPlan, itp: Interpretation, softmax: bool = False) -> list[HeadRecord]:
    """Per head (and per tree it feeds) the attention matrix, value vector and ``Z = A V``.

    Values come from a plain-sum run. ``softmax=True`` attaches a row-normalized
    copy of ``A`` for display only; it never enters execution.
    """
    tr = trace_execution(plan, itp, "plain-sum")
    records = []
    for layer, lt in zip(plan.layers, tr.layers):
        for h in layer.heads:
            A = edge_matrix(h.edge_predicates, itp)
            for m in h.trees:
                V = lt.head_inputs[(h.id, m)]
                records.append(HeadRecord(h.id, m, A, V, A @ V, _softmax_rows(A) if softmax else None))
    return records


# ---------------------------------------------------------------------------
# binary predicates derived from unary features


@dataclass(frozen=True)
class OuterConj:
    """``W[x, y] = a(x) AND b(y)``."""

    a: str
    b: str
    name: Optional[str] = None

    def derived_name(self) -> str:
        return self.name or f"{self.a}_and_{self.b}"


@dataclass(frozen=True)
class DotThreshold:
    """``W[x, y] = 1`` iff the unary feature rows of x and y have dot product >= tau."""

    names: tuple[str, ...]
    tau: float
    name: Optional[str] = None

    def derived_name(self) -> str:
        return self.name or "dot_" + "_".join(self.names)


KernelSpec = Union[OuterConj, DotThreshold]


def derive_binary(kernel: KernelSpec, itp: Interpretation) -> Interpretation:
    """Return a copy of ``itp`` with one binary predicate computed from unary ones."""
    if isinstance(kernel, OuterConj):
        W = np.outer(itp.unary_vector(kernel.a), itp.unary_vector(kernel.b))
    elif isinstance(kernel, DotThreshold):
        if not np.isfinite(kernel.tau):
            raise ValueError(f"threshold must be finite, got {kernel.tau}")
        if not kernel.names:
            raise ValueError("dot-threshold needs at least one unary feature")
        F = np.stack([itp.unary_vector(n) for n in kernel.names], axis=1)
        W = (F @ F.T >= kernel.tau).astype(np.float64)
    else:
        raise TypeError(f"unknown kernel {kernel!r}")
    return itp.with_binary(kernel.derived_name(), W)


__all__ = [
    "ALGEBRAS",
    "Algebra",
    "DomainError",
    "DotThreshold",
    "HeadRecord",
    "InterpretationError",
    "OuterConj",
    "Trace",
    "attention_view",
    "derive_binary",
    "edge_matrix",
    "execute",
    "get_algebra",
    "join",
    "node_vector",
    "trace_execution",
]
