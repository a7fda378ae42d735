"""Demographic-parity measurement and optimal leaf relabeling.

disc = positive rate of the favorable group minus positive rate of the
deprived group, kept as exact rationals throughout. Relabeling picks the
leaf flips that bring the classifier's training disc under epsilon at
minimum training-accuracy loss; the selection is a 0/1 covering knapsack
solved by dynamic programming over integer discrimination units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ._kernels import min_cost_cover
from .situations import (DEPRIVED, FAVORABLE, NEGATIVE, POSITIVE,
                         AnnotatedTable)
from .tree import (CategoricalNode, DecisionTree, Leaf, Node, NumericNode,
                   predict)

NEG_TO_POS = "neg_to_pos"
POS_TO_NEG = "pos_to_neg"

# exact units are used while the DP table stays under this many cells;
# beyond that, deltas are rounded toward zero at the configured granularity
MAX_DP_CELLS = 20_000_000


class FairnessError(ValueError):
    pass


@dataclass(frozen=True)
class DiscReport:
    disc: Fraction
    favorable_positive_rate: Fraction
    deprived_positive_rate: Fraction
    n_favorable: int
    n_deprived: int
    reverse_discrimination: bool = False

    def to_json(self) -> dict:
        return {
            "disc": float(self.disc),
            "favorable_positive_rate": float(self.favorable_positive_rate),
            "deprived_positive_rate": float(self.deprived_positive_rate),
            "n_favorable": self.n_favorable,
            "n_deprived": self.n_deprived,
            "reverse_discrimination": self.reverse_discrimination,
        }


def _disc_from_labels(pairs: Iterable[Tuple[str, str]],
                      epsilon: Optional[float] = None) -> DiscReport:
    fav = fav_pos = dep = dep_pos = 0
    for sensitive, label in pairs:
        if sensitive == FAVORABLE:
            fav += 1
            fav_pos += label == POSITIVE
        else:
            dep += 1
            dep_pos += label == POSITIVE
    if fav == 0 or dep == 0:
        raise FairnessError("both sensitive groups must be non-empty")
    fav_rate = Fraction(fav_pos, fav)
    dep_rate = Fraction(dep_pos, dep)
    disc = fav_rate - dep_rate
    reverse = epsilon is not None and disc < -Fraction(str(epsilon))
    return DiscReport(disc, fav_rate, dep_rate, fav, dep, reverse)


def disc_data(table: AnnotatedTable, epsilon: Optional[float] = None) -> DiscReport:
    """Discrimination present in the annotated data itself."""
    return _disc_from_labels(
        ((i.sensitive, i.label) for i in table.instances), epsilon)


def disc_classifier(tree: DecisionTree, table: AnnotatedTable,
                    epsilon: Optional[float] = None) -> DiscReport:
    """Discrimination imposed by the tree's predictions on the table."""
    return _disc_from_labels(
        ((i.sensitive, predict(tree, i.values)) for i in table.instances), epsilon)


@dataclass(frozen=True)
class RelabelCandidate:
    leaf_id: int
    direction: str  # NEG_TO_POS | POS_TO_NEG
    delta_disc: Fraction
    delta_acc: Fraction
    acc_loss_count: int  # newly misclassified training instances, >= 0
    n_train: int


@dataclass(frozen=True)
class RelabelPlan:
    chosen: Tuple[RelabelCandidate, ...]
    predicted_disc_after: Fraction
    predicted_acc_after: Fraction
    feasible: bool

    @property
    def leaf_ids(self) -> frozenset:
        return frozenset(c.leaf_id for c in self.chosen)

    def to_json(self) -> dict:
        return {
            "feasible": self.feasible,
            "predicted_disc_after": float(self.predicted_disc_after),
            "predicted_acc_after": float(self.predicted_acc_after),
            "flips": [
                {"leaf": c.leaf_id, "direction": c.direction,
                 "delta_disc": float(c.delta_disc), "delta_acc": float(c.delta_acc)}
                for c in self.chosen
            ],
        }


def enumerate_candidates(tree: DecisionTree, mode: str = "both",
                         reduce_positive: bool = True) -> List[RelabelCandidate]:
    """One flip candidate per leaf whose label matches the mode's source.

    With ``reduce_positive`` (the normal goal of shrinking a positive
    disc), candidates that do not strictly reduce disc are dropped.
    """
    fav = dep = 0
    leaves = list(tree.leaves())
    for leaf in leaves:
        fav += leaf.counts.favorable
        dep += leaf.counts.deprived
    n = tree.n_train
    if fav == 0 or dep == 0:
        raise FairnessError("both sensitive groups must appear in the training data")

    candidates = []
    for leaf in leaves:
        c = leaf.counts
        if leaf.label == NEGATIVE and mode in ("both", NEG_TO_POS):
            delta_disc = Fraction(c.favorable, fav) - Fraction(c.deprived, dep)
            delta_acc = Fraction(c.positives - c.negatives, n)
            direction = NEG_TO_POS
        elif leaf.label == POSITIVE and mode in ("both", POS_TO_NEG):
            delta_disc = Fraction(c.deprived, dep) - Fraction(c.favorable, fav)
            delta_acc = Fraction(c.negatives - c.positives, n)
            direction = POS_TO_NEG
        else:
            continue
        if reduce_positive and delta_disc >= 0:
            continue
        candidates.append(RelabelCandidate(
            leaf_id=leaf.id,
            direction=direction,
            delta_disc=delta_disc,
            delta_acc=delta_acc,
            acc_loss_count=int(max(0, -(delta_acc * n))),
            n_train=n,
        ))
    return candidates


def _as_fraction(value: Union[float, Fraction]) -> Fraction:
    if isinstance(value, Fraction):
        return value
    return Fraction(str(value))


def _lcm(values: Iterable[int]) -> int:
    result = 1
    for v in values:
        result = result * v // math.gcd(result, v)
    return result


def _solve(candidates: Sequence[RelabelCandidate], deficit: Fraction,
           granularity: float) -> Optional[List[int]]:
    """Indices of a min-loss subset whose disc reduction covers the deficit.

    Exact integer units are used when the DP table is small enough;
    otherwise reductions are rounded toward zero at ``granularity``, which
    keeps feasibility claims conservative.
    """
    reductions = [max(Fraction(0), -c.delta_disc) for c in candidates]
    scale = _lcm([r.denominator for r in reductions] + [deficit.denominator])
    required_exact = int(deficit * scale)
    if (len(candidates) + 1) * (required_exact + 1) <= MAX_DP_CELLS:
        units = [int(r * scale) for r in reductions]
        required = required_exact
    else:
        units = [int(r / Fraction(str(granularity))) for r in reductions]
        required = math.ceil(deficit / Fraction(str(granularity)))
    units_arr = np.array(units, dtype=np.int64)
    costs = np.array([c.acc_loss_count for c in candidates], dtype=np.int64)
    chosen = min_cost_cover(units_arr, costs, required)
    if chosen is None:
        return None
    return [i for i in range(len(candidates)) if chosen[i]]


def select_relabeling(base_disc: Union[float, Fraction],
                      candidates: Sequence[RelabelCandidate],
                      epsilon: float,
                      granularity: float = 1e-3,
                      base_acc: Union[float, Fraction] = Fraction(1)) -> RelabelPlan:
    """Minimum accuracy-loss flip set bringing disc at or below epsilon.

    If no subset reaches epsilon, the plan takes every disc-reducing
    candidate (the lowest reachable disc) and is marked infeasible.
    """
    base_disc = _as_fraction(base_disc)
    base_acc = _as_fraction(base_acc)
    eps = _as_fraction(epsilon)
    if base_disc <= eps:
        return RelabelPlan((), base_disc, base_acc, True)

    candidates = list(candidates)
    reducers = [c for c in candidates if c.delta_disc < 0]
    deficit = base_disc - eps
    total_reduction = sum((-c.delta_disc for c in reducers), Fraction(0))
    if total_reduction < deficit:
        return _finish(reducers, base_disc, base_acc, feasible=False)

    grain = granularity
    for _ in range(3):
        indices = _solve(candidates, deficit, grain)
        if indices is not None:
            chosen = [candidates[i] for i in indices]
            plan = _finish(chosen, base_disc, base_acc, feasible=True)
            if plan.predicted_disc_after <= eps:
                return plan
        grain /= 10
    # conservative rounding means the loop above virtually always exits
    return _finish(reducers, base_disc, base_acc, feasible=True)


def _finish(chosen: Sequence[RelabelCandidate], base_disc: Fraction,
            base_acc: Fraction, feasible: bool) -> RelabelPlan:
    disc_after = base_disc + sum((c.delta_disc for c in chosen), Fraction(0))
    acc_after = base_acc + sum((c.delta_acc for c in chosen), Fraction(0))
    return RelabelPlan(tuple(chosen), disc_after, acc_after, feasible)


def select_relabeling_greedy(base_disc: Union[float, Fraction],
                             candidates: Sequence[RelabelCandidate],
                             epsilon: float,
                             base_acc: Union[float, Fraction] = Fraction(1)) -> RelabelPlan:
    """Reference strategy: take flips in descending disc-gain/acc-loss ratio."""
    base_disc = _as_fraction(base_disc)
    base_acc = _as_fraction(base_acc)
    eps = _as_fraction(epsilon)
    if base_disc <= eps:
        return RelabelPlan((), base_disc, base_acc, True)

    def ratio(c: RelabelCandidate) -> Fraction:
        unit_loss = Fraction(1, c.n_train)
        return -c.delta_disc / max(abs(c.delta_acc), unit_loss)

    ordered = sorted((c for c in candidates if c.delta_disc < 0),
                     key=lambda c: (-ratio(c), c.leaf_id))
    chosen = []
    disc = base_disc
    for candidate in ordered:
        if disc <= eps:
            break
        chosen.append(candidate)
        disc += candidate.delta_disc
    return _finish(chosen, base_disc, base_acc, feasible=disc <= eps)


def apply_relabeling(tree: DecisionTree, plan: RelabelPlan) -> DecisionTree:
    """New tree with the plan's leaves flipped; the original is untouched."""
    known = {leaf.id for leaf in tree.leaves()}
    unknown = plan.leaf_ids - known
    if unknown:
        raise FairnessError(f"plan references unknown leaf ids: {sorted(unknown)}")

    flip = {NEGATIVE: POSITIVE, POSITIVE: NEGATIVE}

    def walk(node: Node) -> Node:
        if isinstance(node, Leaf):
            if node.id in plan.leaf_ids:
                return replace(node, label=flip[node.label])
            return node
        if isinstance(node, CategoricalNode):
            return replace(node, branches={k: walk(v) for k, v in node.branches.items()})
        return replace(node, low=walk(node.low), high=walk(node.high))

    return replace(tree, root=walk(tree.root),
                   relabeled=tree.relabeled | plan.leaf_ids)
