"""Finite-domain interpretations: unary vectors, binary matrices, propositional values."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .formula import TAUT1, TAUT2


class InterpretationError(ValueError):
    pass


def _frozen(values, shape, name) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.shape != shape:
        raise InterpretationError(f"{name}: expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)) or arr.min(initial=0.0) < 0.0 or arr.max(initial=0.0) > 1.0:
        raise InterpretationError(f"{name}: values must lie in [0, 1]")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Interpretation:
    """Valuation of every predicate over the domain ``x_1 .. x_S``.

    ``binary[name][i, j]`` is the value of ``name(x_i, x_j)``. The tautologies
    TAUT1 and TAUT2 are always available; missing propositional symbols read
    as true.
    """

    domain_size: int
    unary: Mapping[str, np.ndarray] = field(default_factory=dict)
    binary: Mapping[str, np.ndarray] = field(default_factory=dict)
    prop: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        S = self.domain_size
        if not isinstance(S, (int, np.integer)) or S < 1:
            raise InterpretationError(f"domain size must be a positive integer, got {S!r}")
        object.__setattr__(self, "unary", {k: _frozen(v, (S,), k) for k, v in self.unary.items()})
        object.__setattr__(self, "binary", {k: _frozen(v, (S, S), k) for k, v in self.binary.items()})
        prop = {}
        for k, v in self.prop.items():
            v = float(v)
            if not 0.0 <= v <= 1.0:
                raise InterpretationError(f"{k}: propositional value must lie in [0, 1]")
            prop[k] = v
        object.__setattr__(self, "prop", prop)

    def unary_vector(self, name: str) -> np.ndarray:
        if name == TAUT1:
            return np.ones(self.domain_size)
        try:
            return self.unary[name]
        except KeyError:
            raise InterpretationError(f"unary predicate {name!r} missing from interpretation") from None

    def binary_matrix(self, name: str) -> np.ndarray:
        if name == TAUT2:
            return np.ones((self.domain_size, self.domain_size))
        try:
            return self.binary[name]
        except KeyError:
            raise InterpretationError(f"binary predicate {name!r} missing from interpretation") from None

    def prop_value(self, constant) -> float:
        """Value of a :class:`~joinchain.formula.PropConst` (``None`` reads as true)."""
        if constant is None:
            return 1.0
        if constant.is_literal:
            return 1.0 if constant.name else 0.0
        return self.prop.get(constant.name, 1.0)

    def is_boolean(self) -> bool:
        arrays = list(self.unary.values()) + list(self.binary.values())
        scalars = np.array(list(self.prop.values()))
        return all(np.all((a == 0) | (a == 1)) for a in arrays) and bool(np.all((scalars == 0) | (scalars == 1)))

    def with_binary(self, name: str, matrix) -> "Interpretation":
        binary = dict(self.binary)
        binary[name] = matrix
        return Interpretation(self.domain_size, self.unary, binary, self.prop)

    def to_json(self) -> dict:
        def num(x):
            x = float(x)
            return int(x) if x.is_integer() else x

        return {
            "domain": int(self.domain_size),
            "unary": {k: [num(v) for v in self.unary[k]] for k in sorted(self.unary)},
            "binary": {k: [[num(v) for v in row] for row in self.binary[k]] for k in sorted(self.binary)},
            "prop": {k: num(self.prop[k]) for k in sorted(self.prop)},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1) + "\n"

    @classmethod
    def from_json(cls, data: dict) -> "Interpretation":
        try:
            return cls(
                int(data["domain"]),
                data.get("unary", {}),
                data.get("binary", {}),
                data.get("prop", {}),
            )
        except (KeyError, TypeError) as exc:
            raise InterpretationError(f"malformed interpretation: {exc!r}") from exc


def load_interpretation(path) -> Interpretation:
    with open(path, encoding="utf-8") as fh:
        return Interpretation.from_json(json.load(fh))


def all_ones(sig, domain_size: int, prop_value: Optional[float] = 1.0) -> Interpretation:
    """Every predicate in ``sig`` true everywhere."""
    S = domain_size
    return Interpretation(
        S,
        {n: np.ones(S) for n in sig.unary_names},
        {n: np.ones((S, S)) for n in sig.binary_names},
        {n: prop_value for n in sig.prop_names},
    )
