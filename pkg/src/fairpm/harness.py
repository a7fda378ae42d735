"""Controlled-discrimination experiments: inject bias, compare trees.

Discrimination is injected by flipping + labels to - on randomly chosen
deprived instances until the group rates differ by the target amount;
features and group assignments are never touched. Sweeps report both
held-out and training metrics so threshold compliance can be audited.
"""

from __future__ import annotations

import csv
import io
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .fairness import (apply_relabeling, disc_classifier, disc_data,
                       enumerate_candidates, select_relabeling)
from .situations import (DEPRIVED, NEGATIVE, POSITIVE, AnnotatedTable,
                         Instance, SituationSpecification, split_table)
from .tree import DecisionTree, TreeParams, accuracy, grow_tree


class InjectionError(ValueError):
    pass


@dataclass(frozen=True)
class InjectionSpec:
    target_disc_levels: Tuple[float, ...]
    seed: int = 0
    repeats: int = 5

    def __post_init__(self):
        if self.repeats < 1:
            raise ValueError("repeats must be positive")
        levels = self.target_disc_levels
        if any(not 0 <= lv < 1 for lv in levels):
            raise ValueError("target levels must lie in [0, 1)")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ValueError("target levels must be strictly increasing")


@dataclass(frozen=True)
class ExperimentRow:
    injected_level: float
    seed: int
    disc_data: float
    disc_standard: float
    disc_fair: float
    acc_standard: float
    acc_fair: float
    # auxiliary training-side metrics, not part of the report CSV
    disc_fair_train: float = 0.0
    acc_standard_train: float = 0.0
    acc_fair_train: float = 0.0
    feasible: bool = True
    relabeled_leaves: int = 0
    epsilon: Optional[float] = None


def inject_discrimination(table: AnnotatedTable, target: float,
                          seed: int) -> AnnotatedTable:
    """Raise the table's disc to the target by +/- flips on deprived rows."""
    report = disc_data(table)
    p_f = report.favorable_positive_rate
    p_d = report.deprived_positive_rate
    target_frac = Fraction(str(target))
    wanted_dep_rate = p_f - target_frac
    if wanted_dep_rate < 0:
        raise InjectionError(
            f"target {target} unreachable; the maximum level is {float(p_f)}")
    if wanted_dep_rate > p_d:
        # tolerate float round-trips of the exact current level
        if wanted_dep_rate - p_d <= Fraction(1, 10**9):
            return table
        raise InjectionError(
            f"target {target} is below the current disc {float(report.disc)}; "
            "injection only adds discrimination")
    if p_d == 0:
        return table

    flip_probability = float((p_d - wanted_dep_rate) / p_d)
    rng = random.Random(seed)
    instances = []
    for inst in table.instances:
        if (inst.sensitive == DEPRIVED and inst.label == POSITIVE
                and rng.random() < flip_probability):
            instances.append(Instance(inst.values, inst.sensitive, NEGATIVE, ref=inst.ref))
        else:
            instances.append(inst)
    return AnnotatedTable(table.schema, tuple(instances), table.dropped)


@dataclass(frozen=True)
class SweepParams:
    train_fraction: float = 0.6
    tree_params: TreeParams = TreeParams()
    granularity: float = 1e-3


def _evaluate(table: AnnotatedTable, spec: SituationSpecification, seed: int,
              params: SweepParams, level: float,
              epsilon: Optional[float] = None,
              fixed_split: Optional[Tuple[AnnotatedTable, AnnotatedTable]] = None
              ) -> Tuple[ExperimentRow, DecisionTree, DecisionTree]:
    eps = spec.epsilon if epsilon is None else epsilon
    train, test = fixed_split or split_table(table, params.train_fraction, seed)
    standard = grow_tree(train, params.tree_params)

    base_disc = disc_classifier(standard, train).disc
    base_acc = Fraction(round(accuracy(standard, train) * len(train)), len(train))
    candidates = enumerate_candidates(standard, spec.relabel_mode)
    plan = select_relabeling(base_disc, candidates, eps,
                             granularity=params.granularity, base_acc=base_acc)
    fair = apply_relabeling(standard, plan)

    row = ExperimentRow(
        injected_level=level,
        seed=seed,
        disc_data=float(disc_data(table).disc),
        disc_standard=float(disc_classifier(standard, test).disc),
        disc_fair=float(disc_classifier(fair, test).disc),
        acc_standard=accuracy(standard, test),
        acc_fair=accuracy(fair, test),
        disc_fair_train=float(disc_classifier(fair, train).disc),
        acc_standard_train=accuracy(standard, train),
        acc_fair_train=accuracy(fair, train),
        feasible=plan.feasible,
        relabeled_leaves=len(plan.chosen),
        epsilon=eps,
    )
    return row, standard, fair


def run_sweep_detailed(table: AnnotatedTable, spec: SituationSpecification,
                       injection: InjectionSpec,
                       params: SweepParams = SweepParams()
                       ) -> List[Tuple[ExperimentRow, DecisionTree, DecisionTree]]:
    """Per level and repeat: (row, standard tree, fair tree)."""
    results = []
    for level in injection.target_disc_levels:
        for repeat in range(injection.repeats):
            seed = injection.seed + repeat
            injected = inject_discrimination(table, level, seed)
            results.append(_evaluate(injected, spec, seed, params, level))
    return results


def run_sweep(table: AnnotatedTable, spec: SituationSpecification,
              injection: InjectionSpec,
              params: SweepParams = SweepParams()) -> List[ExperimentRow]:
    """Standard-vs-fair comparison per injected level and repeat."""
    return [row for row, _, _ in run_sweep_detailed(table, spec, injection, params)]


def run_epsilon_sweep_detailed(table: AnnotatedTable, spec: SituationSpecification,
                               epsilons: Sequence[float], seed: int,
                               params: SweepParams = SweepParams()
                               ) -> List[Tuple[ExperimentRow, DecisionTree, DecisionTree]]:
    split = split_table(table, params.train_fraction, seed)
    level = float(disc_data(table).disc)
    return [
        _evaluate(table, spec, seed, params, level, epsilon=eps, fixed_split=split)
        for eps in epsilons
    ]


def run_epsilon_sweep(table: AnnotatedTable, spec: SituationSpecification,
                      epsilons: Sequence[float], seed: int,
                      params: SweepParams = SweepParams()) -> List[ExperimentRow]:
    """One row per epsilon on a single shared train/test split."""
    return [row for row, _, _ in
            run_epsilon_sweep_detailed(table, spec, epsilons, seed, params)]


REPORT_HEADER = ["level", "seed", "disc_data", "disc_standard", "disc_fair",
                 "acc_standard", "acc_fair"]


def render_report(rows: Sequence[ExperimentRow], with_epsilon: bool = False) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    header = (["epsilon"] + REPORT_HEADER if with_epsilon else list(REPORT_HEADER))
    writer.writerow(header)
    for row in rows:
        record = [row.injected_level, row.seed, row.disc_data, row.disc_standard,
                  row.disc_fair, row.acc_standard, row.acc_fair]
        if with_epsilon:
            record = [row.epsilon] + record
        writer.writerow([f"{v:.10g}" if isinstance(v, float) else v for v in record])
    return out.getvalue()


def write_report(rows: Sequence[ExperimentRow], destination,
                 with_epsilon: bool = False) -> None:
    text = render_report(rows, with_epsilon)
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        with open(destination, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
