"""Equivalence campaigns: compiled plans against the brute-force oracle.

Every trial checks two things on one random boolean interpretation:

* the oracle gives the same answer on the original formula and on its
  normalized trees;
* the boolean engine run of the compiled plan gives the oracle's answer on the
  original formula.

Per-formula and per-trial seeds are derived from the campaign seed, so serial
and parallel runs produce the same report.
"""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .engine import execute
from .formula import PrenexFormula, render_formula
from .generate import GeneratorParams, derive_seed, random_foet, random_interpretation
from .modelcheck import BudgetExceeded, brute_force_eval
from .normalize import NotAForest, normalize_to_foet
from .planner import AggEntry, JoinChainPlan, Layer, compile_plan

PlanMutation = Callable[[JoinChainPlan], JoinChainPlan]


@dataclass
class EquivalenceReport:
    trials: int = 0
    mismatches: int = 0
    engine_mismatches: int = 0
    normalization_mismatches: int = 0
    budget_errors: int = 0
    rejected: int = 0
    formulas: int = 0
    seed: int = 0
    formula_seeds: list[int] = field(default_factory=list)
    wall_time: float = 0.0
    first_counterexample: Optional[dict] = None

    @property
    def ok(self) -> bool:
        return self.mismatches == 0 and self.budget_errors == 0 and self.rejected == 0

    def merge(self, other: "EquivalenceReport") -> "EquivalenceReport":
        self.trials += other.trials
        self.mismatches += other.mismatches
        self.engine_mismatches += other.engine_mismatches
        self.normalization_mismatches += other.normalization_mismatches
        self.budget_errors += other.budget_errors
        self.rejected += other.rejected
        self.formulas += other.formulas
        self.formula_seeds.extend(other.formula_seeds)
        if self.first_counterexample is None:
            self.first_counterexample = other.first_counterexample
        return self

    def to_json(self) -> dict:
        return {
            "trials": self.trials,
            "mismatches": self.mismatches,
            "engine_mismatches": self.engine_mismatches,
            "normalization_mismatches": self.normalization_mismatches,
            "budget_errors": self.budget_errors,
            "rejected": self.rejected,
            "formulas": self.formulas,
            "seed": self.seed,
            "formula_seeds": self.formula_seeds,
            "wall_time": round(self.wall_time, 3),
            "first_counterexample": self.first_counterexample,
        }


def check_formula(
    f: PrenexFormula,
    trials: int,
    domain_size: int,
    seed: int,
    *,
    mutate: Optional[PlanMutation] = None,
    density: float = 0.5,
    budget: Optional[int] = None,
) -> EquivalenceReport:
    """Compare plan, oracle and normalized oracle on ``trials`` interpretations of ``f``."""
    report = EquivalenceReport(formulas=1, seed=seed, formula_seeds=[seed])
    try:
        g = normalize_to_foet(f)
    except NotAForest:
        report.rejected += 1
        return report
    plan = compile_plan(g)
    if mutate is not None:
        plan = mutate(plan)
    for j in range(trials):
        itp = random_interpretation(f.signature, domain_size, "boolean", density, derive_seed(seed, j))
        report.trials += 1
        try:
            truth = brute_force_eval(f, itp, budget)
            via_trees = brute_force_eval(g, itp, budget)
        except BudgetExceeded:
            report.budget_errors += 1
            continue
        out = execute(plan, itp, "boolean")
        bad_norm = not np.array_equal(truth, via_trees)
        bad_engine = not np.array_equal(truth, out)
        report.normalization_mismatches += bad_norm
        report.engine_mismatches += bad_engine
        if bad_norm or bad_engine:
            report.mismatches += 1
            if report.first_counterexample is None:
                report.first_counterexample = {
                    "formula": render_formula(f),
                    "interpretation": itp.to_json(),
                    "engine_output": out.tolist(),
                    "oracle_output": truth.tolist(),
                    "normalized_oracle_output": via_trees.tolist(),
                    "trial": j,
                }
    return report


def _one(args) -> EquivalenceReport:
    params, i, trials, mutate, density, budget = args
    fseed = derive_seed(params.seed, i)
    f = random_foet(replace(params, seed=fseed))
    return check_formula(f, trials, params.domain_size, fseed, mutate=mutate, density=density, budget=budget)


def fuzz_campaign(
    params: GeneratorParams,
    trials_per_formula: int,
    formulas: int,
    *,
    mutate: Optional[PlanMutation] = None,
    density: float = 0.5,
    budget: Optional[int] = None,
    workers: int = 1,
) -> EquivalenceReport:
    """Run ``formulas`` generated formulas with ``trials_per_formula`` interpretations each."""
    start = time.perf_counter()
    jobs = [(params, i, trials_per_formula, mutate, density, budget) for i in range(formulas)]
    report = EquivalenceReport(seed=params.seed)
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_one, jobs, chunksize=max(1, formulas // (4 * workers))))
    else:
        parts = [_one(job) for job in jobs]
    for part in parts:
        report.merge(part)
    report.seed = params.seed
    report.wall_time = time.perf_counter() - start
    return report


# ---------------------------------------------------------------------------
# plan mutations: each should make a sound harness report mismatches


def _replace_layer(plan: JoinChainPlan, li: int, layer: Layer) -> JoinChainPlan:
    layers = list(plan.layers)
    layers[li] = layer
    return replace(plan, layers=tuple(layers))


def drop_head(plan: JoinChainPlan) -> JoinChainPlan:
    """Remove the first head and every aggregation reference to it."""
    for li, layer in enumerate(plan.layers):
        if layer.heads:
            gone = layer.heads[0].id
            agg = {s: replace(e, heads=tuple(h for h in e.heads if h != gone)) for s, e in layer.aggregation.items()}
            return _replace_layer(plan, li, Layer(layer.heads[1:], agg))
    return plan


def redirect_parent(plan: JoinChainPlan) -> JoinChainPlan:
    """Feed the first redirectable head into a different surviving node of its tree."""
    for li, layer in enumerate(plan.layers):
        for hi, h in enumerate(layer.heads):
            targets = [e for e in layer.aggregation.values() if e.tree == h.tree and e.node != h.parent]
            if not targets:
                continue
            target = min(targets, key=lambda e: e.node)
            agg = {}
            for s, e in layer.aggregation.items():
                heads = tuple(x for x in e.heads if x != h.id)
                if e is target:
                    heads += (h.id,)
                agg[s] = replace(e, heads=heads)
            heads = list(layer.heads)
            heads[hi] = replace(h, parent=target.node)
            return _replace_layer(plan, li, Layer(tuple(heads), agg))
    return plan


def drop_agg_conjunct(plan: JoinChainPlan) -> JoinChainPlan:
    """Drop one head output from the first aggregation that conjoins any."""
    for li, layer in enumerate(plan.layers):
        for s, e in layer.aggregation.items():
            if e.heads:
                agg = dict(layer.aggregation)
                agg[s] = AggEntry(e.tree, e.node, e.base, e.heads[:-1])
                return _replace_layer(plan, li, Layer(layer.heads, agg))
    return plan


MUTATIONS: dict[str, PlanMutation] = {
    "drop-head": drop_head,
    "redirect-parent": redirect_parent,
    "drop-agg-conjunct": drop_agg_conjunct,
}
