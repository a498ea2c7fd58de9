"""Compile normalized trees into layered join-chain plans.

Each tree is stripped leaf by leaf. Round ``l`` of stripping becomes layer
``l`` of the plan: one join head per stripped edge, followed by an explicit
aggregation step that conjoins head outputs into the parent's slot and passes
every other surviving slot through (the skip connection). A final stage
disjoins the root slots, each conjoined with its disjunct's constant.

Slots are named ``t<m>.y<node>``; head ids are ``L<layer>H<k>``, both 1-based
for layers and heads and 0-based for trees.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Mapping, Optional, Sequence

from .formula import PropConst
from .normalize import Edge, FoetFormula, PredicateGraph


def slot_name(tree: int, node: int) -> str:
    return f"t{tree}.y{node}"


@dataclass(frozen=True)
class LeafStratum:
    level: int
    leaves: tuple[int, ...]
    parents: tuple[int, ...]
    edges: tuple[Edge, ...]
    tree_of: tuple[int, ...]

    def per_tree_counts(self, num_trees: int) -> list[int]:
        counts = [0] * num_trees
        for m in self.tree_of:
            counts[m] += 1
        return counts


@dataclass(frozen=True)
class HeadSpec:
    id: str
    tree: int
    parent: int
    child: int
    edge_predicates: frozenset[str]
    child_slot: str
    # other trees fed by this head after dedup_heads
    shared_with: tuple[int, ...] = ()

    @property
    def trees(self) -> tuple[int, ...]:
        return (self.tree,) + self.shared_with

    def slot_for(self, tree: int) -> str:
        return self.child_slot if tree == self.tree else slot_name(tree, self.child)


@dataclass(frozen=True)
class AggEntry:
    tree: int
    node: int
    base: str
    heads: tuple[str, ...] = ()


@dataclass(frozen=True)
class Layer:
    heads: tuple[HeadSpec, ...]
    aggregation: Mapping[str, AggEntry]


@dataclass(frozen=True)
class FinalTerm:
    tree: int
    slot: str
    constant: Optional[PropConst]


@dataclass(frozen=True)
class PlanStats:
    layers: int
    heads_per_layer: tuple[int, ...]
    max_heads: int

    def as_dict(self) -> dict:
        return {"layers": self.layers, "heads_per_layer": list(self.heads_per_layer), "max_heads": self.max_heads}


@dataclass(frozen=True)
class JoinChainPlan:
    inputs: Mapping[str, tuple[int, int, frozenset[str]]]
    layers: tuple[Layer, ...]
    final: tuple[FinalTerm, ...]

    @property
    def stats(self) -> PlanStats:
        return plan_stats(self)

    def head(self, head_id: str) -> HeadSpec:
        for layer in self.layers:
            for h in layer.heads:
                if h.id == head_id:
                    return h
        raise KeyError(head_id)


# ---------------------------------------------------------------------------


def _tree_strata(g: PredicateGraph) -> list[list[Edge]]:
    """Leaf-stripping rounds of one tree; each round lists (parent, leaf) edges.

    Within a round leaves appear in depth-first order, children visited by
    ascending index.
    """
    kids = g.children()
    parent = {c: p for p, c in g.edges}
    alive = {n: list(ks) for n, ks in kids.items()}
    rounds = []
    while any(alive[n] for n in alive):
        order, stack = [], [0]
        while stack:
            n = stack.pop()
            if n != 0 and not alive[n]:
                order.append(n)
            stack.extend(reversed(alive[n]))
        rounds.append([(parent[n], n) for n in order])
        for n in order:
            alive[parent[n]].remove(n)
            del alive[n]
    return rounds


def leaf_partition(g: FoetFormula) -> list[LeafStratum]:
    """Stratify all trees by leaf-elimination round.

    Stratum ``l`` concatenates, tree by tree, the leaves removed at round ``l``.
    The same node index may appear once per tree.
    """
    per_tree = [_tree_strata(t) for t in g.graphs]
    depth = max((len(r) for r in per_tree), default=0)
    strata = []
    for level in range(depth):
        edges, trees = [], []
        for m, rounds in enumerate(per_tree):
            if level < len(rounds):
                edges.extend(rounds[level])
                trees.extend([m] * len(rounds[level]))
        strata.append(
            LeafStratum(
                level=level + 1,
                leaves=tuple(c for _, c in edges),
                parents=tuple(p for p, _ in edges),
                edges=tuple(edges),
                tree_of=tuple(trees),
            )
        )
    return strata


def compile_plan(g: FoetFormula) -> JoinChainPlan:
    """Compile a normalized formula, one head per stratified edge (no sharing)."""
    inputs = {
        slot_name(m, n): (m, n, t.node_predicates[n]) for m, t in enumerate(g.graphs) for n in sorted(t.nodes)
    }
    alive = {m: set(t.nodes) for m, t in enumerate(g.graphs)}
    layers = []
    for stratum in leaf_partition(g):
        entries = sorted(zip(stratum.tree_of, stratum.edges), key=lambda e: (e[0], e[1][1]))
        heads = []
        for k, (m, (p, c)) in enumerate(entries, start=1):
            heads.append(
                HeadSpec(
                    id=f"L{stratum.level}H{k}",
                    tree=m,
                    parent=p,
                    child=c,
                    edge_predicates=g.graphs[m].edge_predicates[(p, c)],
                    child_slot=slot_name(m, c),
                )
            )
            alive[m].discard(c)
        agg = {}
        for m in sorted(alive):
            for n in sorted(alive[m]):
                feeding = tuple(h.id for h in heads if h.tree == m and h.parent == n)
                agg[slot_name(m, n)] = AggEntry(m, n, slot_name(m, n), feeding)
        layers.append(Layer(tuple(heads), agg))
    final = tuple(FinalTerm(m, slot_name(m, 0), t.constant) for m, t in enumerate(g.graphs))
    return JoinChainPlan(inputs, tuple(layers), final)


def dedup_heads(p: JoinChainPlan, g: FoetFormula) -> JoinChainPlan:
    """Share heads between trees with identical edges and edge predicates.

    A shared head keeps one binary predicate and joins it against each member
    tree's own child slot, so every tree still receives its own output.
    """
    groups: dict = {}
    leader = {}
    for m, t in enumerate(g.graphs):
        leader[m] = groups.setdefault(t.structure_key(), m)

    layers = []
    for li, layer in enumerate(p.layers, start=1):
        merged: dict[tuple, HeadSpec] = {}
        renamed: dict[str, str] = {}
        owner: dict[str, tuple] = {}
        for h in layer.heads:
            key = (leader[h.tree], h.parent, h.child, h.edge_predicates)
            if key in merged:
                lead = merged[key]
                merged[key] = replace(lead, shared_with=lead.shared_with + h.trees)
            else:
                merged[key] = h
            owner[h.id] = key
        new_heads = []
        for k, (key, h) in enumerate(merged.items(), start=1):
            new_id = f"L{li}H{k}"
            new_heads.append(replace(h, id=new_id))
            renamed[key] = new_id
        agg = {
            slot: replace(e, heads=tuple(dict.fromkeys(renamed[owner[hid]] for hid in e.heads)))
            for slot, e in layer.aggregation.items()
        }
        layers.append(Layer(tuple(new_heads), agg))
    return replace(p, layers=tuple(layers))


def plan_stats(p: JoinChainPlan) -> PlanStats:
    counts = tuple(len(layer.heads) for layer in p.layers)
    return PlanStats(len(counts), counts, max(counts, default=0))


# ---------------------------------------------------------------------------
# plan files


def plan_to_json(p: JoinChainPlan) -> dict:
    layers = []
    for layer in p.layers:
        heads = []
        for h in layer.heads:
            rec = {"id": h.id, "tree": h.tree, "parent": h.parent, "child": h.child,
                   "w": sorted(h.edge_predicates), "slot": h.child_slot}
            if h.shared_with:
                rec["shared_with"] = list(h.shared_with)
            heads.append(rec)
        agg = {
            slot: {"tree": e.tree, "node": e.node, "base": e.base, "heads": list(e.heads)}
            for slot, e in layer.aggregation.items()
        }
        layers.append({"heads": heads, "agg": agg})
    return {
        "inputs": {s: {"tree": m, "node": n, "p": sorted(ps)} for s, (m, n, ps) in p.inputs.items()},
        "layers": layers,
        "final": [
            {"tree": t.tree, "slot": t.slot, "q": None if t.constant is None else str(t.constant)}
            for t in p.final
        ],
        "stats": plan_stats(p).as_dict(),
    }


def plan_from_json(data: dict) -> JoinChainPlan:
    try:
        inputs = {s: (v["tree"], v["node"], frozenset(v["p"])) for s, v in data["inputs"].items()}
        layers = []
        for rec in data["layers"]:
            heads = tuple(
                HeadSpec(h["id"], h["tree"], h["parent"], h["child"], frozenset(h["w"]),
                         h.get("slot", slot_name(h["tree"], h["child"])), tuple(h.get("shared_with", ())))
                for h in rec["heads"]
            )
            agg = {s: AggEntry(e["tree"], e["node"], e["base"], tuple(e["heads"])) for s, e in rec["agg"].items()}
            layers.append(Layer(heads, agg))
        final = tuple(
            FinalTerm(t["tree"], t["slot"], None if t["q"] is None else PropConst.from_text(t["q"]))
            for t in data["final"]
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed plan file: {exc!r}") from exc
    return JoinChainPlan(inputs, tuple(layers), final)


def dump_plan(p: JoinChainPlan) -> str:
    return json.dumps(plan_to_json(p), indent=2) + "\n"


def check_plan(p: JoinChainPlan, trees: Sequence[PredicateGraph]) -> list[str]:
    """Structural problems of a plan with respect to its source trees (empty if sound)."""
    problems = []
    consumed: dict[tuple[int, int], int] = {}
    for layer in p.layers:
        head_ids = {h.id for h in layer.heads}
        for h in layer.heads:
            for m in h.trees:
                if (h.parent, h.child) not in trees[m].edges:
                    problems.append(f"{h.id}: ({h.parent},{h.child}) is not an edge of tree {m}")
                consumed[(m, h.child)] = consumed.get((m, h.child), 0) + 1
        for slot, e in layer.aggregation.items():
            for hid in e.heads:
                if hid not in head_ids:
                    problems.append(f"{slot}: unknown head {hid}")
                    continue
                h = next(x for x in layer.heads if x.id == hid)
                if e.tree not in h.trees or h.parent != e.node:
                    problems.append(f"{slot}: head {hid} has parent {h.parent} in trees {h.trees}")
    for m, t in enumerate(trees):
        for n in t.nodes - {0}:
            if consumed.get((m, n), 0) != 1:
                problems.append(f"tree {m} node {n} consumed {consumed.get((m, n), 0)} times")
    return problems
