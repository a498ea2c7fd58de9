"""Compile tree-shaped existential formulas into join-chain plans and run them."""
from .engine import ALGEBRAS, attention_view, derive_binary, execute, join, trace_execution
from .formula import PrenexFormula, parse_formula, render_formula, validate
from .fuzz import EquivalenceReport, fuzz_campaign
from .generate import GeneratorParams, random_foet, random_interpretation
from .interpretation import Interpretation
from .modelcheck import brute_force_eval
from .normalize import FoetFormula, NotAForest, measure, normalize_to_foet, transformation_a, transformation_b
from .planner import JoinChainPlan, compile_plan, dedup_heads, leaf_partition, plan_stats

__version__ = "0.1.0"
