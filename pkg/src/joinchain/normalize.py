"""Normalization of prenex formulas into per-disjunct predicate trees.

Two rewriting passes turn a :class:`~joinchain.formula.PrenexFormula` into a
:class:`FoetFormula`:

* transformation A merges atoms per variable and per ordered variable pair and
  hooks variables that are not yet connected to the free variable onto node 0
  with tautology edges;
* transformation B connects every remaining forest root to node 0.

Both passes only add tautologies, so the result is logically equivalent to the
input. A disjunct whose graph is not a forest (a node with two parents, which
with parent < child orientation is the same as an undirected cycle) is outside
the supported class and raises :class:`NotAForest`.
"""
from __future__ import annotations

import json
from collections import defaultdict, deque
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

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
    infer_signature,
)

Edge = tuple[int, int]


class NotAForest(ValueError):
    """A disjunct's predicate graph has a node with more than one parent."""

    def __init__(self, disjunct: int, node: int, parents: Sequence[int], cycle: Optional[Sequence[int]] = None):
        self.disjunct = disjunct
        self.node = node
        self.parents = tuple(parents)
        self.cycle = tuple(cycle) if cycle else None
        msg = f"disjunct {disjunct}: node {node} has parents {list(self.parents)}"
        if self.cycle:
            msg += "; cycle " + " - ".join(map(str, self.cycle + self.cycle[:1]))
        super().__init__(msg)


@dataclass(frozen=True, eq=True)
class PredicateGraph:
    disjunct_index: int
    nodes: frozenset[int]
    edges: frozenset[Edge]
    node_predicates: Mapping[int, frozenset[str]]
    edge_predicates: Mapping[Edge, frozenset[str]]
    constant: Optional[PropConst] = None

    def children(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {n: [] for n in self.nodes}
        for p, c in sorted(self.edges):
            out[p].append(c)
        return out

    def parents(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = defaultdict(list)
        for p, c in sorted(self.edges):
            out[c].append(p)
        return out

    def is_tree(self) -> bool:
        if 0 not in self.nodes or len(self.edges) != len(self.nodes) - 1:
            return False
        kids = self.children()
        seen, stack = {0}, [0]
        while stack:
            for c in kids[stack.pop()]:
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return seen == set(self.nodes)

    def structure_key(self):
        """Edge set with edge predicates; equal keys mean interchangeable join heads."""
        return frozenset((e, self.edge_predicates[e]) for e in self.edges)


@dataclass(frozen=True)
class Measures:
    per_tree_height: tuple[int, ...]
    per_tree_leaves: tuple[int, ...]
    height: int
    width: int


@dataclass(frozen=True)
class FoetFormula:
    name: str
    num_quantified: int
    graphs: tuple[PredicateGraph, ...]
    signature: PredicateSignature
    measures: Measures = field(compare=False)


# ---------------------------------------------------------------------------


def _disjunct_graph(m: int, d: Disjunct) -> PredicateGraph:
    node_preds: dict[int, set[str]] = defaultdict(set)
    for a in d.unary_atoms:
        node_preds[a.arg.index].add(a.predicate)
    edge_preds: dict[Edge, set[str]] = defaultdict(set)
    for b in d.binary_atoms:
        edge_preds[(b.left.index, b.right.index)].add(b.predicate)

    incident = {n for e in edge_preds for n in e}
    if edge_preds and 0 not in incident:
        edge_preds[(0, min(incident))].add(TAUT2)
    for t in node_preds:
        if t != 0 and t not in incident:
            edge_preds[(0, t)].add(TAUT2)

    nodes = {0} | incident | set(node_preds)
    return PredicateGraph(
        disjunct_index=m,
        nodes=frozenset(nodes),
        edges=frozenset(edge_preds),
        node_predicates={n: frozenset(node_preds.get(n) or {TAUT1}) for n in sorted(nodes)},
        edge_predicates={e: frozenset(edge_preds[e]) for e in sorted(edge_preds)},
        constant=d.constant,
    )


def transformation_a(f: PrenexFormula) -> list[PredicateGraph]:
    """Merge atoms per node and per edge and attach stray variables to node 0."""
    return [_disjunct_graph(m, d) for m, d in enumerate(f.disjuncts)]


def _undirected_path(g: PredicateGraph, src: int, dst: int, banned: int) -> Optional[list[int]]:
    adj: dict[int, set[int]] = defaultdict(set)
    for p, c in g.edges:
        if banned not in (p, c):
            adj[p].add(c)
            adj[c].add(p)
    prev = {src: None}
    queue = deque([src])
    while queue:
        n = queue.popleft()
        if n == dst:
            path = []
            while n is not None:
                path.append(n)
                n = prev[n]
            return path[::-1]
        for k in sorted(adj[n]):
            if k not in prev:
                prev[k] = n
                queue.append(k)
    return None


def check_forest(g: PredicateGraph) -> None:
    """Raise :class:`NotAForest` with a witness unless every node has at most one parent."""
    for node, ps in sorted(g.parents().items()):
        if len(ps) > 1:
            path = _undirected_path(g, ps[0], ps[1], node)
            cycle = [node] + path if path else None
            raise NotAForest(g.disjunct_index, node, ps, cycle)


def transformation_b(graphs: Sequence[PredicateGraph]) -> list[PredicateGraph]:
    """Hook every non-zero forest root onto node 0 with a tautology edge."""
    out = []
    for g in graphs:
        check_forest(g)
        has_parent = {c for _, c in g.edges}
        roots = sorted(n for n in g.nodes if n != 0 and n not in has_parent)
        if not roots:
            out.append(g)
            continue
        edge_preds = dict(g.edge_predicates)
        for r in roots:
            edge_preds[(0, r)] = frozenset({TAUT2})
        out.append(
            replace(
                g,
                edges=frozenset(edge_preds),
                edge_predicates={e: edge_preds[e] for e in sorted(edge_preds)},
            )
        )
    return out


def tree_height(g: PredicateGraph) -> int:
    kids = g.children()
    best, stack = 0, [(0, 0)]
    while stack:
        n, depth = stack.pop()
        best = max(best, depth)
        stack.extend((c, depth + 1) for c in kids[n])
    return best


def tree_leaves(g: PredicateGraph) -> int:
    kids = g.children()
    return sum(1 for n in g.nodes if n != 0 and not kids[n])


def measure(g) -> Measures:
    """Height (deepest root-to-node edge count) and width (total leaf count).

    Accepts a :class:`FoetFormula` or a plain sequence of trees. A tree made of
    the root alone has height 0 and contributes no leaves.
    """
    graphs = g.graphs if isinstance(g, FoetFormula) else tuple(g)
    heights = tuple(tree_height(t) for t in graphs)
    leaves = tuple(tree_leaves(t) for t in graphs)
    return Measures(heights, leaves, max(heights, default=0), sum(leaves))


def normalize_to_foet(f: PrenexFormula) -> FoetFormula:
    graphs = tuple(transformation_b(transformation_a(f)))
    return FoetFormula(f.name, f.num_quantified, graphs, f.signature, measure(graphs))


# ---------------------------------------------------------------------------
# output forms


def graphs_to_prenex(
    graphs: Sequence[PredicateGraph], num_quantified: int, name: str = "P", signature: Optional[PredicateSignature] = None
) -> PrenexFormula:
    """Spell graphs back out as a prenex formula, tautologies included."""
    disjuncts = []
    for t in graphs:
        unary = tuple(
            UnaryAtom(p, Variable(n)) for n in sorted(t.nodes) for p in sorted(t.node_predicates[n])
        )
        binary = tuple(
            BinaryAtom(w, Variable(p), Variable(c))
            for (p, c) in sorted(t.edges)
            for w in sorted(t.edge_predicates[(p, c)])
        )
        disjuncts.append(Disjunct(unary, binary, t.constant))
    sig = infer_signature(disjuncts)
    if signature is not None:
        sig = signature.merge(sig)
    return PrenexFormula(name, num_quantified, tuple(disjuncts), sig)


def foet_to_prenex(g: FoetFormula) -> PrenexFormula:
    return graphs_to_prenex(g.graphs, g.num_quantified, g.name, g.signature)


def foet_to_json(g: FoetFormula) -> dict:
    disjuncts = []
    for t in g.graphs:
        disjuncts.append(
            {
                "nodes": sorted(t.nodes),
                "edges": [list(e) for e in sorted(t.edges)],
                "node_preds": {str(n): sorted(t.node_predicates[n]) for n in sorted(t.nodes)},
                "edge_preds": {f"{p},{c}": sorted(t.edge_predicates[(p, c)]) for p, c in sorted(t.edges)},
                "const": None if t.constant is None else str(t.constant),
            }
        )
    m = g.measures
    return {
        "name": g.name,
        "num_quantified": g.num_quantified,
        "disjuncts": disjuncts,
        "measures": {
            "height": m.height,
            "width": m.width,
            "per_tree_height": list(m.per_tree_height),
            "per_tree_leaves": list(m.per_tree_leaves),
        },
    }


def dump_foet(g: FoetFormula) -> str:
    return json.dumps(foet_to_json(g), indent=2, sort_keys=True) + "\n"
