import pytest

from joinchain.formula import parse_formula
from joinchain.normalize import normalize_to_foet

TREE5_TEXT = (
    "P(x) := exists y1 y2 y3 y4 . (P1(y1) & P2(y2) & P3(y3) & P4(y4) & P0(x) "
    "& W01(x,y1) & W02(x,y2) & W13(y1,y3) & W14(y1,y4))"
)

TREE8_EDGES = [(0, 1), (0, 2), (0, 3), (1, 4), (1, 5), (2, 6), (5, 7)]


def _var(i):
    return "x" if i == 0 else f"y{i}"


def tree8_disjunct(tag=""):
    unary = [f"P{tag}{t}({_var(t)})" for t in range(8)]
    binary = [f"W{p}{c}({_var(p)},{_var(c)})" for p, c in TREE8_EDGES]
    return "(" + " & ".join(unary + binary) + ")"


TREE8_TEXT = "A(x) := exists y1 y2 y3 y4 y5 y6 y7 . " + tree8_disjunct()
# two trees sharing edges and binary predicates, distinct node predicates
TWIN8_TEXT = (
    "A(x) := exists y1 y2 y3 y4 y5 y6 y7 . " + tree8_disjunct("a") + " | " + tree8_disjunct("b")
)


@pytest.fixture
def tree5():
    return parse_formula(TREE5_TEXT)


@pytest.fixture
def tree5_foet(tree5):
    return normalize_to_foet(tree5)


@pytest.fixture
def tree8():
    return parse_formula(TREE8_TEXT)


@pytest.fixture
def twin8():
    return parse_formula(TWIN8_TEXT)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
