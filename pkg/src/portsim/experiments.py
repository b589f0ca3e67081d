"""Experiment drivers: single runs, multi-seed setting sweeps, count
optimization for rail-door installs, and one-way ANOVA statistics.

Sweeps reuse the same seed ladder (base, base+1, ...) for every setting, so
settings are compared under common random numbers: a run differs between
two settings only through draws the settings actually consume differently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from scipy.special import betainc

from .agents import FreightSimulation, ReplenishPolicy, SelectionPolicy
from .domain import Scenario, install_intermodal
from .kernel import RngStream
from .metrics import RunResult, summarize


@dataclass(frozen=True)
class ModelSetting:
    """A warehouse-selection policy paired with a replenishment policy."""

    label: str
    selection: SelectionPolicy
    replenish: ReplenishPolicy


def canonical_settings() -> list[ModelSetting]:
    """The six standard settings, in reporting order."""
    random, nearest = (
        SelectionPolicy.RANDOM_AVAILABLE,
        SelectionPolicy.NEAREST_AVAILABLE,
    )
    return [
        ModelSetting("RandomWHS", random, ReplenishPolicy()),
        ModelSetting("N-WHS", nearest, ReplenishPolicy()),
        ModelSetting("DRD(0,24)", random, ReplenishPolicy(hi_hours=24.0)),
        ModelSetting("DRD(0,72)", random, ReplenishPolicy(hi_hours=72.0)),
        ModelSetting("DRD(0,200)", random, ReplenishPolicy(hi_hours=200.0)),
        ModelSetting("DRD(0,200)&N-WHS", nearest, ReplenishPolicy(hi_hours=200.0)),
    ]


def setting_for_label(label: str) -> ModelSetting:
    for setting in canonical_settings():
        if setting.label == label:
            return setting
    known = ", ".join(s.label for s in canonical_settings())
    raise ValueError(f"unknown setting label {label!r}; known labels: {known}")


def default_optimization_setting() -> ModelSetting:
    """Nearest selection with a 0-72h replenishment draw."""
    return ModelSetting(
        "N-WHS&DRD(0,72)",
        SelectionPolicy.NEAREST_AVAILABLE,
        ReplenishPolicy(hi_hours=72.0),
    )


# ------------------------------------------------------------------ drivers


def run_single(
    scenario: Scenario,
    setting: ModelSetting,
    p: int,
    seed: int,
    *,
    trace: list | None = None,
    collect_legs: bool = False,
    debug: bool = False,
) -> RunResult:
    """Install p rail doors (seeded draw), simulate the horizon, report."""
    upgraded = install_intermodal(scenario, p, RngStream(seed, "install"))
    capital = p * scenario.cost_table.facility_upgrade
    sim = FreightSimulation(
        upgraded,
        selection=setting.selection,
        replenish=setting.replenish,
        seed=seed,
        label=setting.label,
        p=p,
        capital_cost=capital,
        trace=trace,
        collect_legs=collect_legs,
        debug=debug,
    )
    return sim.run()


@dataclass(frozen=True)
class ExperimentPlan:
    scenario: Scenario
    settings: tuple[ModelSetting, ...]
    p: int = 0
    iterations: int = 100
    base_seed: int = 0
    # Caps the first setting's run count, reproducing sweeps whose first
    # batch stopped early; remaining settings run the full iterations.
    budget: int | None = None

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if self.budget is not None and self.budget < 1:
            raise ValueError("budget must be at least 1 when set")


@dataclass
class VariationResult:
    results: list[RunResult]
    summary: list[dict]


def variation_tasks(plan: ExperimentPlan) -> list[tuple[tuple[int, int], ModelSetting, int]]:
    """Flat (sort key, setting, seed) list; key order defines merge order."""
    tasks = []
    for index, setting in enumerate(plan.settings):
        iterations = plan.iterations
        if index == 0 and plan.budget is not None:
            iterations = min(iterations, plan.budget)
        for i in range(iterations):
            tasks.append(((index, plan.base_seed + i), setting, plan.base_seed + i))
    return tasks


def collect_variation(
    plan: ExperimentPlan, raw: list[tuple[tuple[int, int], RunResult]]
) -> VariationResult:
    """Deterministic merge of possibly out-of-order replication results."""
    ordered = [result for _, result in sorted(raw, key=lambda item: item[0])]
    return VariationResult(results=ordered, summary=summarize(ordered))


def run_variation(plan: ExperimentPlan) -> VariationResult:
    raw = [
        (key, run_single(plan.scenario, setting, plan.p, seed))
        for key, setting, seed in variation_tasks(plan)
    ]
    return collect_variation(plan, raw)


# ----------------------------------------------------------------- optimize


class Objective(Enum):
    OPERATING = "operating"
    OPERATING_PLUS_CAPITAL = "total"


@dataclass(frozen=True)
class OptimizationPlan:
    scenario: Scenario
    p_values: tuple[int, ...] = tuple(range(11))
    setting: ModelSetting = field(default_factory=default_optimization_setting)
    replications: int = 5
    base_seed: int = 0
    objective: Objective = Objective.OPERATING

    def __post_init__(self) -> None:
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if not self.p_values:
            raise ValueError("p_values must not be empty")


@dataclass(frozen=True)
class OptimizeRow:
    p: int
    replications: int
    capital_cost: float
    operating_mean: float
    operating_min: float
    total_mean: float
    total_min: float
    unmet_mean: float
    objective_mean: float
    objective_min: float


@dataclass
class OptimizeResult:
    best_p: int
    best_mean_objective: float
    rows: list[OptimizeRow]
    results: list[RunResult]


def optimization_tasks(plan: OptimizationPlan) -> list[tuple[tuple[int, int], int, int]]:
    """Flat (sort key, p, seed) list; each p reuses the same seed ladder."""
    tasks = []
    for p in plan.p_values:
        for i in range(plan.replications):
            tasks.append(((p, plan.base_seed + i), p, plan.base_seed + i))
    return tasks


def collect_optimization(
    plan: OptimizationPlan, raw: list[tuple[tuple[int, int], RunResult]]
) -> OptimizeResult:
    results = [result for _, result in sorted(raw, key=lambda item: item[0])]
    rows = []
    for p in plan.p_values:
        batch = [r for r in results if r.p == p]
        operating = [r.operating_cost for r in batch]
        totals = [r.operating_cost + r.capital_cost for r in batch]
        objectives = (
            operating if plan.objective is Objective.OPERATING else totals
        )
        rows.append(
            OptimizeRow(
                p=p,
                replications=len(batch),
                capital_cost=batch[0].capital_cost,
                operating_mean=sum(operating) / len(operating),
                operating_min=min(operating),
                total_mean=sum(totals) / len(totals),
                total_min=min(totals),
                unmet_mean=sum(r.unmet_tons for r in batch) / len(batch),
                objective_mean=sum(objectives) / len(objectives),
                objective_min=min(objectives),
            )
        )
    best = min(rows, key=lambda row: (row.objective_mean, row.p))
    return OptimizeResult(
        best_p=best.p,
        best_mean_objective=best.objective_mean,
        rows=rows,
        results=results,
    )


def check_p_values(plan: OptimizationPlan) -> None:
    """Reject any p outside the scenario's upgradeable warehouse count."""
    feasible = sum(1 for w in plan.scenario.warehouses() if not w.intermodal)
    for p in plan.p_values:
        if p < 0 or p > feasible:
            raise ValueError(
                f"p={p} infeasible: scenario has {feasible} candidate warehouses"
            )


def optimize_p(plan: OptimizationPlan) -> OptimizeResult:
    """Mean-objective argmin over p; ties go to the smaller count.

    Each replication draws a fresh random install subset for its p, so the
    table averages over placement randomness as well as operational noise.
    """
    check_p_values(plan)
    raw = [
        (key, run_single(plan.scenario, plan.setting, p, seed))
        for key, p, seed in optimization_tasks(plan)
    ]
    return collect_optimization(plan, raw)


# -------------------------------------------------------------------- anova


@dataclass(frozen=True)
class AnovaResult:
    f_statistic: float
    df_between: int
    df_within: int
    p_value: float


def anova_one_way(groups: Sequence[Sequence[float]]) -> AnovaResult:
    """Standard one-way ANOVA from sums of squares.

    Degenerate inputs follow fixed conventions: all observations identical
    gives F=0, p=1; zero within-group variance with distinct means gives
    F=inf, p=0.
    """
    if len(groups) < 2:
        raise ValueError("anova needs at least two groups")
    if any(len(g) < 2 for g in groups):
        raise ValueError("anova needs at least two observations per group")
    sizes = [len(g) for g in groups]
    n = sum(sizes)
    k = len(groups)
    means = [math.fsum(g) / len(g) for g in groups]
    grand = math.fsum(math.fsum(g) for g in groups) / n
    ssb = math.fsum(s * (m - grand) ** 2 for s, m in zip(sizes, means))
    ssw = math.fsum(
        math.fsum((x - m) ** 2 for x in g) for g, m in zip(groups, means)
    )
    df_between = k - 1
    df_within = n - k
    if ssw == 0.0:
        if ssb == 0.0:
            return AnovaResult(0.0, df_between, df_within, 1.0)
        return AnovaResult(math.inf, df_between, df_within, 0.0)
    f = (ssb / df_between) / (ssw / df_within)
    return AnovaResult(f, df_between, df_within, f_upper_tail(f, df_between, df_within))


def f_upper_tail(f: float, d1: int, d2: int) -> float:
    """P(F > f) for the F(d1, d2) distribution.

    Uses the regularized incomplete beta identity
    sf(f) = I_{d2/(d2 + d1 f)}(d2/2, d1/2).
    """
    if d1 < 1 or d2 < 1:
        raise ValueError(f"degrees of freedom must be >= 1, got ({d1}, {d2})")
    if f < 0:
        raise ValueError(f"F statistic must be non-negative, got {f}")
    if math.isinf(f):
        return 0.0
    x = d2 / (d2 + d1 * f)
    return float(betainc(d2 / 2.0, d1 / 2.0, x))
