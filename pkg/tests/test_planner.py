import json

import pytest
from hypothesis import given, settings, strategies as st

from joinchain.formula import make_formula, parse_formula
from joinchain.generate import GeneratorParams, derive_seed, random_foet
from joinchain.normalize import normalize_to_foet
from joinchain.planner import (
    check_plan,
    compile_plan,
    dedup_heads,
    dump_plan,
    leaf_partition,
    plan_from_json,
    plan_stats,
    plan_to_json,
    slot_name,
)


def test_tree8_strata(tree8):
    s1, s2, s3 = leaf_partition(normalize_to_foet(tree8))
    assert s1.leaves == (4, 7, 6, 3)
    assert s1.parents == (1, 5, 2, 0)
    assert s1.edges == ((1, 4), (5, 7), (2, 6), (0, 3))
    assert (s2.leaves, s2.parents) == ((5, 2), (1, 0))
    assert (s3.leaves, s3.parents) == ((1,), (0,))
    assert [s.level for s in (s1, s2, s3)] == [1, 2, 3]


def test_tree5_strata(tree5_foet):
    s1, s2 = leaf_partition(tree5_foet)
    assert (s1.leaves, s1.parents) == ((3, 4, 2), (1, 1, 0))
    assert (s2.leaves, s2.parents) == ((1,), (0,))


def test_root_only_strata():
    g = normalize_to_foet(parse_formula("P(x) := . (A(x))"))
    assert leaf_partition(g) == []
    p = compile_plan(g)
    assert p.layers == ()
    assert len(p.final) == 1
    assert plan_stats(p).as_dict() == {"layers": 0, "heads_per_layer": [], "max_heads": 0}


def test_multi_tree_strata_carry_duplicates(twin8):
    s1 = leaf_partition(normalize_to_foet(twin8))[0]
    assert s1.leaves == (4, 7, 6, 3, 4, 7, 6, 3)
    assert s1.tree_of == (0,) * 4 + (1,) * 4
    assert s1.per_tree_counts(2) == [4, 4]


def test_compile_tree5(tree5_foet):
    p = compile_plan(tree5_foet)
    assert [(h.parent, h.child) for h in p.layers[0].heads] == [(0, 2), (1, 3), (1, 4)]
    assert [(h.parent, h.child) for h in p.layers[1].heads] == [(0, 1)]
    assert [h.id for h in p.layers[0].heads] == ["L1H1", "L1H2", "L1H3"]
    assert plan_stats(p).as_dict() == {"layers": 2, "heads_per_layer": [3, 1], "max_heads": 3}
    agg = p.layers[0].aggregation
    assert agg["t0.y1"].heads == ("L1H2", "L1H3")
    assert agg["t0.y0"].heads == ("L1H1",)
    assert set(agg) == {"t0.y0", "t0.y1"}
    assert p.head("L1H2").edge_predicates == {"W13"}
    with pytest.raises(KeyError):
        p.head("L9H9")


def test_compile_tree8(tree8):
    p = compile_plan(normalize_to_foet(tree8))
    assert plan_stats(p).as_dict() == {"layers": 3, "heads_per_layer": [4, 2, 1], "max_heads": 4}


def test_dedup_twin8(twin8):
    g = normalize_to_foet(twin8)
    p = compile_plan(g)
    assert list(p.stats.heads_per_layer) == [8, 4, 2]
    d = dedup_heads(p, g)
    assert list(d.stats.heads_per_layer) == [4, 2, 1]
    assert all(h.trees == (0, 1) for layer in d.layers for h in layer.heads)
    assert check_plan(d, g.graphs) == []


def test_dedup_single_tree_unchanged(tree5_foet):
    p = compile_plan(tree5_foet)
    assert dedup_heads(p, tree5_foet) == p


def test_dedup_needs_matching_edge_predicates():
    f = parse_formula("P(x) := exists y1 . (A(y1) & R(x,y1)) | (B(y1) & S(x,y1))")
    g = normalize_to_foet(f)
    assert dedup_heads(compile_plan(g), g).stats.heads_per_layer == (2,)


def _corpus(n, seed, **kw):
    return [normalize_to_foet(random_foet(GeneratorParams(seed=derive_seed(seed, i), **kw))) for i in range(n)]


def test_partition_laws():
    for g in _corpus(300, 51):
        strata = leaf_partition(g)
        for m, t in enumerate(g.graphs):
            leaves = [n for s in strata for n, k in zip(s.leaves, s.tree_of) if k == m]
            edges = [e for s in strata for e, k in zip(s.edges, s.tree_of) if k == m]
            assert sorted(leaves) == sorted(t.nodes - {0})
            assert sorted(edges) == sorted(t.edges)
            counts = [s.per_tree_counts(len(g.graphs))[m] for s in strata]
            assert counts == sorted(counts, reverse=True)
        for s in strata:
            assert len(s.leaves) == len(s.parents) == len(s.edges) == len(s.tree_of)


def test_budget_law_and_consumption():
    for g in _corpus(300, 53):
        p = compile_plan(g)
        st_ = plan_stats(p)
        assert st_.layers == g.measures.height
        assert (st_.heads_per_layer[0] if st_.layers else 0) == g.measures.width
        assert list(st_.heads_per_layer) == sorted(st_.heads_per_layer, reverse=True)
        assert check_plan(p, g.graphs) == []


def test_check_plan_flags_corruption(tree5_foet):
    from joinchain.fuzz import drop_head, redirect_parent

    p = compile_plan(tree5_foet)
    assert any("consumed 0 times" in msg for msg in check_plan(drop_head(p), tree5_foet.graphs))
    assert check_plan(redirect_parent(p), tree5_foet.graphs)


def test_aggregation_skip_connections(tree8):
    p = compile_plan(normalize_to_foet(tree8))
    agg = p.layers[0].aggregation
    assert set(agg) == {slot_name(0, n) for n in (0, 1, 2, 5)}
    assert all(e.base == slot for slot, e in agg.items())
    assert agg["t0.y5"].heads == ("L1H4",)
    assert set(p.layers[1].aggregation) == {"t0.y0", "t0.y1"}


def test_pass_through_slot():
    f = parse_formula("P(x) := exists y1 y2 y3 y4 . (R(x,y1) & R(y1,y2) & R(y2,y3) & R(x,y4))")
    p = compile_plan(normalize_to_foet(f))
    agg = p.layers[0].aggregation
    # node 1 keeps its child 2 this round: its slot passes through untouched
    assert agg["t0.y1"].heads == ()
    assert agg["t0.y2"].heads and agg["t0.y0"].heads


def test_plan_json_round_trip(twin8):
    g = normalize_to_foet(twin8)
    for p in (compile_plan(g), dedup_heads(compile_plan(g), g)):
        data = json.loads(dump_plan(p))
        assert data == plan_to_json(p)
        assert plan_from_json(data) == p
        assert data["stats"]["heads_per_layer"] == list(p.stats.heads_per_layer)


def test_plan_from_json_rejects_garbage():
    with pytest.raises(ValueError):
        plan_from_json({"layers": []})


def test_plan_ignores_atom_order(tree5):
    shuffled = (
        "P(x) := exists y1 y2 y3 y4 . (W14(y1,y4) & W13(y1,y3) & W02(x,y2) & W01(x,y1) "
        "& P0(x) & P4(y4) & P3(y3) & P2(y2) & P1(y1))"
    )
    a = dump_plan(compile_plan(normalize_to_foet(tree5)))
    b = dump_plan(compile_plan(normalize_to_foet(parse_formula(shuffled))))
    assert a == b


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_dedup_is_structural(seed, copies):
    f = random_foet(GeneratorParams(seed=seed, max_trees=1))
    single = normalize_to_foet(f)
    g = normalize_to_foet(make_formula(list(f.disjuncts) * copies, f.num_quantified))
    p = compile_plan(g)
    d = dedup_heads(p, g)
    assert d.stats.heads_per_layer == compile_plan(single).stats.heads_per_layer
    assert [len(x.heads) for x in p.layers] == [copies * n for n in d.stats.heads_per_layer]
    assert check_plan(d, g.graphs) == []
