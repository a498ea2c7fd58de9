"""Brute-force model checking of existential formulas over boolean interpretations.

This module is the ground truth for the compiler. It enumerates every
assignment of the quantified variables and must not depend on the planner or
the engine.
"""
from __future__ import annotations

import os
from typing import Iterator, Optional, Union

import numpy as np

from .formula import PrenexFormula
from .interpretation import Interpretation
from .normalize import FoetFormula

DEFAULT_BUDGET = 10**7


class BudgetExceeded(RuntimeError):
    def __init__(self, assignments: int, budget: int):
        self.assignments = assignments
        self.budget = budget
        super().__init__(f"S^T = {assignments} assignments exceeds the budget of {budget}")


class NonBooleanInterpretation(ValueError):
    pass


def default_budget() -> int:
    raw = os.environ.get("JCN_BUDGET")
    return int(raw) if raw else DEFAULT_BUDGET


def _conjuncts(f) -> Iterator[tuple[list, list, object]]:
    """(unary (name, var), binary (name, var, var), constant) per disjunct."""
    if isinstance(f, FoetFormula):
        for g in f.graphs:
            unary = [(p, n) for n in sorted(g.nodes) for p in sorted(g.node_predicates[n])]
            binary = [(w, a, b) for (a, b) in sorted(g.edges) for w in sorted(g.edge_predicates[(a, b)])]
            yield unary, binary, g.constant
    else:
        for d in f.disjuncts:
            unary = [(a.predicate, a.arg.index) for a in d.unary_atoms]
            binary = [(b.predicate, b.left.index, b.right.index) for b in d.binary_atoms]
            yield unary, binary, d.constant


def brute_force_eval(
    f: Union[PrenexFormula, FoetFormula], itp: Interpretation, budget: Optional[int] = None
) -> np.ndarray:
    """Truth value of ``f`` at every domain element, by full enumeration.

    For each ``x`` a boolean tensor indexed by ``(y1, .., yT)`` holds the body
    of one disjunct at every assignment; the formula is true at ``x`` iff some
    cell of some disjunct's tensor is true.
    """
    if not itp.is_boolean():
        raise NonBooleanInterpretation("the oracle evaluates 0/1 interpretations only")
    budget = default_budget() if budget is None else budget
    S, T = itp.domain_size, f.num_quantified
    if S**T > budget:
        raise BudgetExceeded(S**T, budget)

    def along(values: np.ndarray, axes: tuple[int, ...]) -> np.ndarray:
        shape = [1] * T
        for ax in axes:
            shape[ax] = S
        return values.reshape(shape)

    bodies = list(_conjuncts(f))
    out = np.zeros(S, dtype=bool)
    for x in range(S):
        for unary, binary, constant in bodies:
            if not itp.prop_value(constant):
                continue
            body = np.ones((S,) * T, dtype=bool)
            for name, v in unary:
                vec = itp.unary_vector(name).astype(bool)
                body = body & (vec[x] if v == 0 else along(vec, (v - 1,)))
            for name, a, b in binary:
                mat = itp.binary_matrix(name).astype(bool)
                if a == b == 0:
                    body = body & mat[x, x]
                elif a == 0:
                    body = body & along(mat[x], (b - 1,))
                elif b == 0:
                    body = body & along(mat[:, x], (a - 1,))
                elif a == b:
                    body = body & along(np.diagonal(mat).copy(), (a - 1,))
                elif a < b:
                    body = body & along(mat, (a - 1, b - 1))
                else:
                    body = body & along(mat.T, (b - 1, a - 1))
            if body.any():
                out[x] = True
                break
    return out.astype(np.float64)
