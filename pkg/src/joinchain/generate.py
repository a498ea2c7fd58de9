"""Seeded generators for tree-shaped formulas and random interpretations."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .formula import (
    TAUT1,
    TAUT2,
    BinaryAtom,
    Disjunct,
    PredicateSignature,
    PrenexFormula,
    PropConst,
    UnaryAtom,
    Variable,
    make_formula,
)
from .interpretation import Interpretation


def derive_seed(seed: int, *path: int) -> int:
    """A 64-bit sub-seed for position ``path`` under ``seed``; stable across platforms."""
    ss = np.random.SeedSequence([seed & (2**64 - 1), *path])
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class GeneratorParams:
    max_trees: int = 3
    max_height: int = 3
    max_width: int = 5
    max_vars: int = 6
    domain_size: int = 3
    num_unary: int = 4
    num_binary: int = 3
    num_props: int = 2
    tautology_rate: float = 0.2
    seed: int = 0

    def __post_init__(self):
        for name in ("max_trees", "num_unary", "num_binary", "domain_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        for name in ("max_height", "max_width", "max_vars", "num_props"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not 0.0 <= self.tautology_rate <= 1.0:
            raise ValueError("tautology_rate must lie in [0, 1]")


def _random_tree(rng: np.random.Generator, max_height: int, width_left: int, max_vars: int):
    """Parent list (creation order, parent before child) and its leaf count."""
    n_target = int(rng.integers(0, max_vars + 1)) if max_height > 0 else 0
    parent = [-1]
    depth = [0]
    kids = [0]
    leaves = 0
    for _ in range(n_target):
        options = []
        for q in range(len(parent)):
            if depth[q] >= max_height:
                continue
            grows = q == 0 or kids[q] > 0
            if leaves + grows <= width_left:
                options.append(q)
        if not options:
            break
        q = options[int(rng.integers(len(options)))]
        leaves += q == 0 or kids[q] > 0
        parent.append(q)
        depth.append(depth[q] + 1)
        kids.append(0)
        kids[q] += 1
    return parent, leaves


def random_foet(params: GeneratorParams, scramble: bool = True) -> PrenexFormula:
    """A random formula whose normalized trees respect the height and width bounds.

    With ``scramble`` the text splits node and edge conjunctions, repeats some
    atoms, shuffles atom order and leaves out some tautology edges so that the
    normalizer has work to do. Without it every node and edge is spelled out
    once, tautologies included.
    """
    rng = np.random.default_rng(params.seed)
    unary_names = [f"P{i}" for i in range(params.num_unary)]
    binary_names = [f"W{i}" for i in range(params.num_binary)]
    prop_names = [f"Q{i}" for i in range(params.num_props)]
    M = int(rng.integers(1, params.max_trees + 1))
    width_left = params.max_width
    disjuncts = []
    for _ in range(M):
        parent, leaves = _random_tree(rng, params.max_height, width_left, params.max_vars)
        width_left -= leaves
        n = len(parent)
        labels = [0] + sorted(int(v) for v in rng.choice(np.arange(1, params.max_vars + 1), n - 1, replace=False))
        var = [Variable(labels[i]) for i in range(n)]

        unary: list[UnaryAtom] = []
        for i in range(n):
            if rng.random() < params.tautology_rate:
                if not scramble:
                    unary.append(UnaryAtom(TAUT1, var[i]))
                continue
            k = int(rng.integers(1, 3)) if scramble else 1
            names = sorted({unary_names[int(j)] for j in rng.integers(0, len(unary_names), k)})
            unary.extend(UnaryAtom(p, var[i]) for p in names)
            if scramble and rng.random() < 0.1:
                unary.append(UnaryAtom(names[0], var[i]))

        binary: list[BinaryAtom] = []
        kept_children = [0] * n
        for i in range(1, n):
            kept_children[parent[i]] += 1
        for i in rng.permutation(np.arange(1, n)) if n > 1 else []:
            i = int(i)
            p = parent[i]
            if rng.random() < params.tautology_rate:
                # only drop when the parent cannot turn into a new leaf
                if scramble and (p == 0 or kept_children[p] > 1):
                    kept_children[p] -= 1
                    continue
                binary.append(BinaryAtom(TAUT2, var[p], var[i]))
                continue
            k = int(rng.integers(1, 3)) if scramble else 1
            names = sorted({binary_names[int(j)] for j in rng.integers(0, len(binary_names), k)})
            binary.extend(BinaryAtom(w, var[p], var[i]) for w in names)
        if not scramble:
            binary.sort(key=lambda b: (b.left.index, b.right.index, b.predicate))

        r = rng.random()
        if r < 0.4:
            constant = None
        elif r < 0.6:
            constant = PropConst(True)
        elif r < 0.7:
            constant = PropConst(False)
        elif prop_names:
            constant = PropConst(prop_names[int(rng.integers(len(prop_names)))])
        else:
            constant = None
        if scramble:
            order = rng.permutation(len(unary))
            unary = [unary[int(j)] for j in order]
            order = rng.permutation(len(binary))
            binary = [binary[int(j)] for j in order]
        if not unary and not binary and constant is None:
            constant = PropConst(True)
        disjuncts.append(Disjunct(tuple(unary), tuple(binary), constant))
    return make_formula(disjuncts)


def random_interpretation(
    sig: PredicateSignature,
    domain_size: int,
    mode: str = "boolean",
    density: float = 0.5,
    seed: int = 0,
) -> Interpretation:
    """Random valuation of every name in ``sig`` (tautologies stay implicit).

    Boolean cells are 1 with probability ``density``; real cells are uniform on
    [0, 1]. Names are drawn in sorted order so a seed fixes the result.
    """
    if domain_size < 1:
        raise ValueError("domain size must be at least 1")
    if not 0.0 <= density <= 1.0:
        raise ValueError("density must lie in [0, 1]")
    if mode not in ("boolean", "real"):
        raise ValueError(f"mode must be 'boolean' or 'real', got {mode!r}")
    rng = np.random.default_rng(seed)
    S = domain_size

    def draw(shape):
        u = rng.random(shape)
        return (u < density).astype(np.float64) if mode == "boolean" else u

    unary = {n: draw(S) for n in sorted(sig.unary_names - {TAUT1})}
    binary = {n: draw((S, S)) for n in sorted(sig.binary_names - {TAUT2})}
    prop = {n: float(draw(())) for n in sorted(sig.prop_names)}
    return Interpretation(S, unary, binary, prop)

