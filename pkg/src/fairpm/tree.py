"""C4.5-style decision tree over annotated tables.

Gain-ratio splits with the mean-gain admissibility guard, multiway
categorical branches (missing values get their own branch), binary
numeric thresholds at midpoints, no post-pruning. Leaves keep per
group-by-label training counts for the relabeler.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

from .situations import (DEPRIVED, FAVORABLE, NEGATIVE, POSITIVE,
                         AnnotatedTable, Instance)

MISSING = "?"  # branch key for absent categorical values


@dataclass(frozen=True)
class TreeParams:
    min_instances_per_leaf: int = 2
    max_depth: int = 20


@dataclass(frozen=True)
class LeafCounts:
    pos_favorable: int
    neg_favorable: int
    pos_deprived: int
    neg_deprived: int

    @property
    def positives(self) -> int:
        return self.pos_favorable + self.pos_deprived

    @property
    def negatives(self) -> int:
        return self.neg_favorable + self.neg_deprived

    @property
    def favorable(self) -> int:
        return self.pos_favorable + self.neg_favorable

    @property
    def deprived(self) -> int:
        return self.pos_deprived + self.neg_deprived

    @property
    def total(self) -> int:
        return self.positives + self.negatives


@dataclass(frozen=True)
class Leaf:
    id: int
    label: str
    counts: LeafCounts

    @property
    def size(self) -> int:
        return self.counts.total


@dataclass(frozen=True)
class CategoricalNode:
    feature: int
    branches: Dict[object, "Node"]
    majority_key: object

    @property
    def size(self) -> int:
        return sum(child.size for child in self.branches.values())


@dataclass(frozen=True)
class NumericNode:
    feature: int
    threshold: float
    low: "Node"   # value <= threshold
    high: "Node"  # value > threshold
    missing_low: bool  # route absent values to the low side?

    @property
    def size(self) -> int:
        return self.low.size + self.high.size


Node = Union[Leaf, CategoricalNode, NumericNode]


@dataclass(frozen=True)
class DecisionTree:
    root: Node
    feature_names: Tuple[str, ...]
    column_kinds: Tuple[str, ...]
    n_train: int
    relabeled: frozenset = frozenset()

    def leaves(self) -> Iterator[Leaf]:
        yield from _iter_leaves(self.root)

    def leaf(self, leaf_id: int) -> Leaf:
        for leaf in self.leaves():
            if leaf.id == leaf_id:
                return leaf
        raise KeyError(f"no leaf with id {leaf_id}")


def _iter_leaves(node: Node) -> Iterator[Leaf]:
    if isinstance(node, Leaf):
        yield node
    elif isinstance(node, CategoricalNode):
        for key in sorted(node.branches, key=repr):
            yield from _iter_leaves(node.branches[key])
    else:
        yield from _iter_leaves(node.low)
        yield from _iter_leaves(node.high)


def entropy(pos: int, neg: int) -> float:
    """Shannon entropy of a binary label distribution, in bits."""
    total = pos + neg
    if total == 0:
        return 0.0
    result = 0.0
    for count in (pos, neg):
        if count > 0:
            p = count / total
            result -= p * math.log2(p)
    return result


def _label_entropy(instances: Sequence[Instance]) -> float:
    pos = sum(1 for i in instances if i.label == POSITIVE)
    return entropy(pos, len(instances) - pos)


@dataclass(frozen=True)
class Split:
    feature: int
    kind: str  # "categorical" | "numeric"
    threshold: Optional[float]
    gain: float
    gain_ratio: float


def _categorical_split(instances, feature, min_leaf):
    groups: Dict[object, list] = {}
    for inst in instances:
        key = inst.values[feature]
        groups.setdefault(MISSING if key is None else key, []).append(inst)
    if sum(1 for g in groups.values() if len(g) >= min_leaf) < 2:
        return None
    n = len(instances)
    parent = _label_entropy(instances)
    weighted = sum(len(g) / n * _label_entropy(g) for g in groups.values())
    gain = max(0.0, parent - weighted)
    split_info = entropy_of_partition([len(g) for g in groups.values()])
    return Split(feature, "categorical", None, gain, gain / split_info)


def _numeric_split(instances, feature, min_leaf):
    known = [i for i in instances if i.values[feature] is not None]
    if len(known) < 2 * min_leaf:
        return None
    values = sorted({i.values[feature] for i in known})
    if len(values) < 2:
        return None
    n = len(instances)
    parent = _label_entropy(known)
    best = None
    for lo, hi in zip(values, values[1:]):
        threshold = (lo + hi) / 2
        left = [i for i in known if i.values[feature] <= threshold]
        right = [i for i in known if i.values[feature] > threshold]
        if len(left) < min_leaf or len(right) < min_leaf:
            continue
        weighted = (len(left) * _label_entropy(left) + len(right) * _label_entropy(right)) / len(known)
        # gain prorated by the fraction of instances with a known value
        gain = max(0.0, len(known) / n * (parent - weighted))
        split_info = entropy_of_partition([len(left), len(right)])
        candidate = Split(feature, "numeric", threshold, gain, gain / split_info)
        if best is None or candidate.gain_ratio > best.gain_ratio + 1e-12:
            best = candidate
    return best


def entropy_of_partition(sizes: Sequence[int]) -> float:
    total = sum(sizes)
    result = 0.0
    for size in sizes:
        if size > 0:
            p = size / total
            result -= p * math.log2(p)
    return result


def best_split(instances: Sequence[Instance], column_kinds: Sequence[str],
               min_leaf: int = 2) -> Optional[Split]:
    """Best admissible split by gain ratio, with C4.5's mean-gain guard.

    At an impure node where every candidate has zero gain (XOR-like
    interactions), the first admissible split is taken anyway so nested
    structure stays reachable; pure nodes always return None.
    """
    candidates = []
    for feature, kind in enumerate(column_kinds):
        maker = _categorical_split if kind == "categorical" else _numeric_split
        candidate = maker(instances, feature, min_leaf)
        if candidate is not None:
            candidates.append(candidate)
    if not candidates:
        return None
    positive = [c for c in candidates if c.gain > 1e-12]
    if positive:
        mean_gain = sum(c.gain for c in positive) / len(positive)
        admissible = [c for c in positive if c.gain >= mean_gain - 1e-12]
        return min(admissible,
                   key=lambda c: (-c.gain_ratio, c.feature, c.threshold or 0.0))
    if _label_entropy(instances) > 0:
        return min(candidates, key=lambda c: (c.feature, c.threshold or 0.0))
    return None


def _make_leaf(instances: Sequence[Instance], leaf_id: int) -> Leaf:
    counts = LeafCounts(
        pos_favorable=sum(1 for i in instances
                          if i.label == POSITIVE and i.sensitive == FAVORABLE),
        neg_favorable=sum(1 for i in instances
                          if i.label == NEGATIVE and i.sensitive == FAVORABLE),
        pos_deprived=sum(1 for i in instances
                         if i.label == POSITIVE and i.sensitive == DEPRIVED),
        neg_deprived=sum(1 for i in instances
                         if i.label == NEGATIVE and i.sensitive == DEPRIVED),
    )
    # ties default to the desirable label
    label = POSITIVE if counts.positives >= counts.negatives else NEGATIVE
    return Leaf(leaf_id, label, counts)


def grow_tree(table: AnnotatedTable, params: TreeParams = TreeParams()) -> DecisionTree:
    if not table.instances:
        raise ValueError("cannot grow a tree from an empty table")
    kinds = table.column_kinds()
    counter = [0]

    def grow(instances, depth) -> Node:
        split = None
        if depth < params.max_depth and len(instances) >= 2 * params.min_instances_per_leaf:
            split = best_split(instances, kinds, params.min_instances_per_leaf)
        if split is None:
            leaf = _make_leaf(instances, counter[0])
            counter[0] += 1
            return leaf
        if split.kind == "categorical":
            groups: Dict[object, list] = {}
            for inst in instances:
                key = inst.values[split.feature]
                groups.setdefault(MISSING if key is None else key, []).append(inst)
            branches = {
                key: grow(groups[key], depth + 1)
                for key in sorted(groups, key=repr)
            }
            majority_key = max(sorted(branches, key=repr), key=lambda k: branches[k].size)
            return CategoricalNode(split.feature, branches, majority_key)
        left = [i for i in instances
                if i.values[split.feature] is not None
                and i.values[split.feature] <= split.threshold]
        right = [i for i in instances
                 if i.values[split.feature] is not None
                 and i.values[split.feature] > split.threshold]
        missing = [i for i in instances if i.values[split.feature] is None]
        missing_low = len(left) >= len(right)
        if missing_low:
            left += missing
        else:
            right += missing
        return NumericNode(split.feature, split.threshold,
                           grow(left, depth + 1), grow(right, depth + 1), missing_low)

    root = grow(list(table.instances), 0)
    return DecisionTree(
        root=root,
        feature_names=table.schema.names,
        column_kinds=kinds,
        n_train=len(table),
    )


def predict(tree: DecisionTree, values: Sequence) -> str:
    if len(values) != len(tree.feature_names):
        raise ValueError("tuple arity does not match the tree schema")
    node = tree.root
    while not isinstance(node, Leaf):
        if isinstance(node, CategoricalNode):
            key = values[node.feature]
            key = MISSING if key is None else key
            node = node.branches.get(key) or node.branches[node.majority_key]
        else:
            value = values[node.feature]
            if value is None:
                node = node.low if node.missing_low else node.high
            else:
                node = node.low if value <= node.threshold else node.high
    return node.label


def accuracy(tree: DecisionTree, table: AnnotatedTable) -> float:
    if not table.instances:
        raise ValueError("accuracy is undefined on an empty table")
    correct = sum(1 for inst in table.instances
                  if predict(tree, inst.values) == inst.label)
    return correct / len(table)


def export_dot(tree: DecisionTree, highlight: frozenset = frozenset()) -> bytes:
    """Render the tree as a DOT digraph; highlighted leaves are filled."""
    lines = ["digraph decision_tree {", "  node [shape=box];"]
    ids = iter(range(10 ** 9))

    def emit(node: Node) -> str:
        name = f"n{next(ids)}"
        if isinstance(node, Leaf):
            c = node.counts
            text = (f"{node.label} (+:{c.positives} -:{c.negatives}\\n"
                    f"fav:{c.favorable} dep:{c.deprived})")
            attrs = f'label="{text}"'
            if node.id in highlight:
                attrs += ', style=filled, fillcolor=yellow'
            lines.append(f"  {name} [{attrs}];")
            return name
        if isinstance(node, CategoricalNode):
            lines.append(f'  {name} [label="{tree.feature_names[node.feature]}"];')
            for key in sorted(node.branches, key=repr):
                child = emit(node.branches[key])
                lines.append(f'  {name} -> {child} [label="= {key}"];')
            return name
        lines.append(f'  {name} [label="{tree.feature_names[node.feature]}"];')
        low = emit(node.low)
        high = emit(node.high)
        lines.append(f'  {name} -> {low} [label="<= {node.threshold:g}"];')
        lines.append(f'  {name} -> {high} [label="> {node.threshold:g}"];')
        return name

    emit(tree.root)
    lines.append("}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def tree_to_json(tree: DecisionTree) -> str:
    def walk(node: Node):
        if isinstance(node, Leaf):
            c = node.counts
            return {"leaf": node.id, "label": node.label,
                    "counts": [c.pos_favorable, c.neg_favorable,
                               c.pos_deprived, c.neg_deprived],
                    "relabeled": node.id in tree.relabeled}
        if isinstance(node, CategoricalNode):
            return {"split": tree.feature_names[node.feature],
                    "branches": {repr(k): walk(v) for k, v in sorted(
                        node.branches.items(), key=lambda kv: repr(kv[0]))}}
        return {"split": tree.feature_names[node.feature],
                "threshold": node.threshold,
                "low": walk(node.low), "high": walk(node.high)}

    return json.dumps({"n_train": tree.n_train, "root": walk(tree.root)}, indent=2)
