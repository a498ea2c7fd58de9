import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from joinchain.engine import (
    ALGEBRAS,
    DomainError,
    DotThreshold,
    OuterConj,
    attention_view,
    derive_binary,
    execute,
    get_algebra,
    join,
    trace_execution,
)
from joinchain.formula import TAUT1, TAUT2, parse_formula
from joinchain.generate import GeneratorParams, derive_seed, random_foet, random_interpretation
from joinchain.interpretation import Interpretation, InterpretationError, all_ones
from joinchain.modelcheck import brute_force_eval
from joinchain.normalize import normalize_to_foet
from joinchain.planner import compile_plan, dedup_heads

TAGS = list(ALGEBRAS)


def _plan(f):
    return compile_plan(normalize_to_foet(f))


# --- join -----------------------------------------------------------------------


def test_identity_join():
    P = np.array([1.0, 0.0, 1.0, 1.0])
    assert np.array_equal(join(np.eye(4), P, "boolean"), P)


@pytest.mark.parametrize("tag", TAGS)
def test_zero_join(tag):
    P = np.random.default_rng(0).random(5)
    if tag == "boolean":
        P = (P > 0.5).astype(float)
    assert np.array_equal(join(np.zeros((5, 5)), P, tag), np.zeros(5))


def test_boolean_join_by_enumeration():
    rng = np.random.default_rng(3)
    for _ in range(200):
        W = (rng.random((3, 3)) < 0.5).astype(float)
        P = (rng.random(3) < 0.5).astype(float)
        want = [any(W[s, t] == 1 and P[t] == 1 for t in range(3)) for s in range(3)]
        assert join(W, P, "boolean").tolist() == [float(v) for v in want]


def test_real_joins_by_definition():
    rng = np.random.default_rng(4)
    W, P = rng.random((4, 4)), rng.random(4)
    terms = [[W[s, t] * P[t] for t in range(4)] for s in range(4)]
    np.testing.assert_allclose(join(W, P, "plain-sum"), [sum(r) for r in terms], atol=1e-12)
    np.testing.assert_allclose(join(W, P, "sum-clamp"), [min(1.0, sum(r)) for r in terms], atol=1e-12)
    np.testing.assert_allclose(join(W, P, "noisy-or"), [1 - np.prod([1 - a for a in r]) for r in terms], atol=1e-12)


def test_join_errors():
    with pytest.raises(ValueError, match="dimension"):
        join(np.eye(3), np.ones(4))
    with pytest.raises(DomainError):
        join(np.eye(2), np.array([0.5, 1.0]), "boolean")
    with pytest.raises(DomainError):
        join(np.eye(2), np.array([1.5, 1.0]), "noisy-or")
    with pytest.raises(ValueError, match="unknown algebra"):
        get_algebra("fuzzy")


# --- execute vs oracle ------------------------------------------------------------


def test_all_true(tree5):
    out = execute(_plan(tree5), all_ones(tree5.signature, 4), "boolean")
    assert out.tolist() == [1.0] * 4


@pytest.mark.parametrize("which", ["tree5", "tree8"])
def test_matches_oracle(which, request):
    f = request.getfixturevalue(which)
    plan = _plan(f)
    for S in range(2, 6):
        for j in range(1000):
            itp = random_interpretation(f.signature, S, "boolean", 0.6, derive_seed(S, j))
            assert np.array_equal(execute(plan, itp), brute_force_eval(f, itp)), (S, j)


def test_missing_predicate(tree5):
    itp = Interpretation(2, {"P0": [1, 1]})
    with pytest.raises(InterpretationError, match="missing"):
        execute(_plan(tree5), itp)


def test_boolean_needs_boolean_interpretation(tree5):
    itp = random_interpretation(tree5.signature, 3, "real", seed=1)
    with pytest.raises(DomainError):
        execute(_plan(tree5), itp, "boolean")
    execute(_plan(tree5), itp, "noisy-or")


def test_constants_and_missing_props():
    f = parse_formula("P(x) := exists y1 . (A(y1) & R(x,y1) & $Q) | (B(x) & false)")
    plan = _plan(f)
    itp = Interpretation(2, {"A": [1, 0], "B": [1, 1]}, {"R": [[1, 0], [0, 1]]})
    assert execute(plan, itp).tolist() == [1.0, 0.0]  # missing Q reads as true
    itp = Interpretation(2, {"A": [1, 0], "B": [1, 1]}, {"R": [[1, 0], [0, 1]]}, {"Q": 0})
    assert execute(plan, itp).tolist() == [0.0, 0.0]


# --- algebra laws -----------------------------------------------------------------


def _corpus(n, seed):
    return [random_foet(GeneratorParams(seed=derive_seed(seed, i))) for i in range(n)]


def test_boolean_fidelity_and_union_bound():
    for i, f in enumerate(_corpus(100, 61)):
        plan = _plan(f)
        b = random_interpretation(f.signature, 4, "boolean", 0.5, derive_seed(62, i))
        outs = {tag: execute(plan, b, tag) for tag in ("boolean", "noisy-or", "sum-clamp")}
        assert np.array_equal(outs["boolean"], outs["noisy-or"])
        assert np.array_equal(outs["boolean"], outs["sum-clamp"])
        r = random_interpretation(f.signature, 4, "real", seed=derive_seed(63, i))
        no, sc, ps = (execute(plan, r, tag) for tag in ("noisy-or", "sum-clamp", "plain-sum"))
        assert np.all(no <= sc + 1e-12) and np.all(sc <= ps + 1e-12)
        assert np.all((no >= 0) & (no <= 1)) and np.all((sc >= 0) & (sc <= 1))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(TAGS), st.floats(0.0, 1.0))
def test_monotonicity(seed, tag, bump):
    f = random_foet(GeneratorParams(seed=seed, max_vars=4))
    plan = _plan(f)
    mode = "boolean" if tag == "boolean" else "real"
    lo = random_interpretation(f.signature, 3, mode, 0.4, seed)
    rng = np.random.default_rng(seed)

    def raise_(a):
        a = np.asarray(a)
        if mode == "boolean":
            return np.maximum(a, (rng.random(a.shape) < bump).astype(float))
        return np.minimum(1.0, a + bump * rng.random(a.shape))

    hi = Interpretation(
        3,
        {k: raise_(v) for k, v in lo.unary.items()},
        {k: raise_(v) for k, v in lo.binary.items()},
        {k: float(raise_(v)) for k, v in lo.prop.items()},
    )
    assert np.all(execute(plan, lo, tag) <= execute(plan, hi, tag) + 1e-12)


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, (4, 4), elements=st.floats(0, 1)), arrays(np.float64, 4, elements=st.floats(0, 1)))
def test_join_ordering_property(W, P):
    no, sc, ps = (join(W, P, t) for t in ("noisy-or", "sum-clamp", "plain-sum"))
    assert np.all(no <= sc + 1e-12) and np.all(sc <= ps + 1e-12)
    Wb, Pb = np.round(W), np.round(P)
    assert np.array_equal(join(Wb, Pb, "boolean"), join(Wb, Pb, "noisy-or"))
    assert np.array_equal(join(Wb, Pb, "boolean"), join(Wb, Pb, "sum-clamp"))


# --- trace and attention view -----------------------------------------------------


def test_trace_completeness(twin8):
    plan = _plan(twin8)
    itp = random_interpretation(twin8.signature, 3, "boolean", 0.7, 5)
    tr = trace_execution(plan, itp)
    assert np.array_equal(tr.output, execute(plan, itp))
    assert set(tr.inputs) == set(plan.inputs)
    for layer, lt in zip(plan.layers, tr.layers):
        assert list(lt.slots) == list(layer.aggregation)
        assert {hid for hid, _ in lt.head_outputs} == {h.id for h in layer.heads}
    data = tr.to_json()
    assert len(data["layers"]) == len(plan.layers)


def test_attention_tree5_head(tree5):
    plan = _plan(tree5)
    itp = random_interpretation(tree5.signature, 4, "real", seed=9)
    (rec,) = [r for r in attention_view(plan, itp) if plan.head(r.head).child == 3]
    assert rec.head == "L1H2"
    assert np.array_equal(rec.A, itp.binary["W13"])
    assert np.array_equal(rec.V, itp.unary["P3"])


def test_attention_identity_matrix():
    f = parse_formula("P(x) := exists y1 . (V(y1) & I(x,y1))")
    V = np.array([0.2, 0.9, 0.4])
    itp = Interpretation(3, {"V": V}, {"I": np.eye(3)})
    (rec,) = attention_view(_plan(f), itp)
    assert np.array_equal(rec.Z, V)


def _matvec(A, V):
    return np.array([sum(float(A[i, j]) * float(V[j]) for j in range(len(V))) for i in range(A.shape[0])])


def test_attention_matches_dense_matvec_and_trace():
    for i, f in enumerate(_corpus(60, 71)):
        plan = compile_plan(normalize_to_foet(f))
        itp = random_interpretation(f.signature, 5, "real", seed=derive_seed(72, i))
        tr = trace_execution(plan, itp, "plain-sum")
        outputs = {k: v for lt in tr.layers for k, v in lt.head_outputs.items()}
        for rec in attention_view(plan, itp):
            np.testing.assert_allclose(rec.Z, _matvec(rec.A, rec.V), rtol=0, atol=1e-12)
            assert np.array_equal(rec.Z, outputs[(rec.head, rec.tree)])


def test_softmax_is_display_only(tree5):
    plan = _plan(tree5)
    itp = random_interpretation(tree5.signature, 3, "real", seed=2)
    plain = attention_view(plan, itp)
    shown = attention_view(plan, itp, softmax=True)
    for a, b in zip(plain, shown):
        assert a.A_display is None
        np.testing.assert_allclose(b.A_display.sum(axis=1), 1.0)
        assert np.array_equal(a.Z, b.Z)


# --- dedup soundness --------------------------------------------------------------


@pytest.mark.parametrize("tag", TAGS)
def test_dedup_outputs_identical(twin8, tag):
    g = normalize_to_foet(twin8)
    p = compile_plan(g)
    d = dedup_heads(p, g)
    mode = "boolean" if tag == "boolean" else "real"
    for j in range(100):
        itp = random_interpretation(twin8.signature, 4, mode, 0.5, derive_seed(81, j))
        assert np.array_equal(execute(p, itp, tag), execute(d, itp, tag))


# --- derived binary predicates ----------------------------------------------------


def test_outer_conj_tautology():
    itp = derive_binary(OuterConj(TAUT1, TAUT1, "T"), Interpretation(3))
    assert np.array_equal(itp.binary["T"], np.ones((3, 3)))


def test_outer_conj_enumeration():
    rng = np.random.default_rng(5)
    a, b = (rng.random(4) < 0.5).astype(float), (rng.random(4) < 0.5).astype(float)
    base = Interpretation(4, {"Pa": a, "Pb": b})
    itp = derive_binary(OuterConj("Pa", "Pb"), base)
    W = itp.binary["Pa_and_Pb"]
    for x, y in itertools.product(range(4), repeat=2):
        assert W[x, y] == float(a[x] == 1 and b[y] == 1)
    assert "Pa_and_Pb" not in base.binary


def test_dot_threshold_indicator():
    v = np.array([1.0, 0.0, 1.0, 1.0])
    itp = derive_binary(DotThreshold(("F",), 1.0), Interpretation(4, {"F": v}))
    assert np.array_equal(itp.binary["dot_F"], np.outer(v, v))


def test_kernel_errors():
    itp = Interpretation(2, {"F": [1, 0]})
    with pytest.raises(InterpretationError):
        derive_binary(OuterConj("F", "G"), itp)
    with pytest.raises(ValueError, match="finite"):
        derive_binary(DotThreshold(("F",), float("nan")), itp)


def test_tautologies_resolve():
    itp = Interpretation(2)
    assert np.array_equal(itp.unary_vector(TAUT1), np.ones(2))
    assert np.array_equal(itp.binary_matrix(TAUT2), np.ones((2, 2)))
