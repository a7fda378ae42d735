import itertools
import random

import pytest

from fairpm.situations import NEGATIVE, POSITIVE
from fairpm.tree import (CategoricalNode, Leaf, NumericNode, TreeParams,
                         accuracy, best_split, entropy, export_dot, grow_tree,
                         predict, tree_to_json)

from conftest import make_biased_table, make_table


def test_entropy_values():
    assert entropy(5, 5) == 1.0
    assert abs(entropy(9, 5) - 0.94029) < 1e-5
    assert entropy(0, 7) == 0.0
    assert entropy(0, 0) == 0.0


def test_best_split_pure_node_returns_none():
    table = make_table([((v,), False, True) for v in "aabb"])
    assert best_split(list(table.instances), table.column_kinds(), 1) is None


def test_best_split_perfect_binary_feature():
    table = make_table([(("a",), False, True)] * 3 + [(("b",), False, False)] * 5)
    split = best_split(list(table.instances), table.column_kinds(), 1)
    assert split is not None
    assert split.feature == 0
    assert split.gain_ratio == pytest.approx(1.0)


def test_best_split_numeric_threshold_at_midpoint():
    table = make_table([((1,), False, True), ((3,), False, True),
                        ((5,), False, False)])
    split = best_split(list(table.instances), table.column_kinds(), 1)
    assert split.kind == "numeric"
    assert split.threshold == pytest.approx(4.0)


def test_grow_single_instance():
    table = make_table([((1,), False, False)])
    tree = grow_tree(table, TreeParams(min_instances_per_leaf=1))
    assert isinstance(tree.root, Leaf)
    assert tree.root.label == NEGATIVE


def test_grow_xor(xor_table):
    tree = grow_tree(xor_table, TreeParams(min_instances_per_leaf=1))
    assert accuracy(tree, xor_table) == 1.0
    assert len(list(tree.leaves())) == 4


def test_grow_all_missing_features_gives_majority_leaf():
    table = make_table([((None,), False, True)] * 3 + [((None,), True, False)])
    tree = grow_tree(table)
    assert isinstance(tree.root, Leaf)
    assert tree.root.label == POSITIVE


def test_leaf_tie_goes_positive():
    table = make_table([((None,), False, True), ((None,), False, False)])
    tree = grow_tree(table)
    assert tree.root.label == POSITIVE


def test_predict_single_leaf_tree():
    table = make_table([((1,), False, True)])
    tree = grow_tree(table)
    assert predict(tree, (99,)) == POSITIVE


def test_predict_xor(xor_table):
    tree = grow_tree(xor_table, TreeParams(min_instances_per_leaf=1))
    assert predict(tree, (0, 1)) == POSITIVE
    assert predict(tree, (1, 1)) == NEGATIVE


def test_predict_unseen_category_majority_routing():
    table = make_table(
        [(("a",), False, True)] * 5 + [(("b",), False, False)] * 2)
    tree = grow_tree(table, TreeParams(min_instances_per_leaf=1))
    # "c" was never seen: falls through to the larger ("a") branch
    assert predict(tree, ("c",)) == POSITIVE


def test_accuracy_counts():
    table = make_table([((1,), False, True)] * 3 + [((1,), False, False)])
    tree = grow_tree(table)
    assert accuracy(tree, table) == 0.75


def test_accuracy_beats_majority_leaf():
    rng = random.Random(3)
    table = make_biased_table(rng, 120, disc=0.2)
    tree = grow_tree(table)
    positives = sum(1 for i in table.instances if i.label == POSITIVE)
    majority_acc = max(positives, len(table) - positives) / len(table)
    assert accuracy(tree, table) >= majority_acc


def test_leaf_counts_sum_to_table_size():
    rng = random.Random(5)
    table = make_biased_table(rng, 200, disc=0.25)
    tree = grow_tree(table)
    assert sum(leaf.counts.total for leaf in tree.leaves()) == len(table)
    for leaf in tree.leaves():
        c = leaf.counts
        if c.positives > c.negatives:
            assert leaf.label == POSITIVE
        elif c.negatives > c.positives:
            assert leaf.label == NEGATIVE
        else:
            assert leaf.label == POSITIVE


def test_chosen_split_maximizes_gain_ratio():
    from fairpm.tree import _categorical_split, _numeric_split
    rng = random.Random(11)
    for _ in range(20):
        table = make_biased_table(rng, 60, n_features=4, disc=0.2)
        kinds = table.column_kinds()
        instances = list(table.instances)
        split = best_split(instances, kinds, 2)
        if split is None or split.gain <= 1e-12:
            continue
        candidates = []
        for feature, kind in enumerate(kinds):
            maker = _categorical_split if kind == "categorical" else _numeric_split
            candidate = maker(instances, feature, 2)
            if candidate is not None and candidate.gain > 1e-12:
                candidates.append(candidate)
        mean_gain = sum(c.gain for c in candidates) / len(candidates)
        admissible = [c for c in candidates if c.gain >= mean_gain - 1e-12]
        assert split.gain_ratio == pytest.approx(
            max(c.gain_ratio for c in admissible))


def test_no_split_on_out_of_schema_feature():
    rng = random.Random(7)
    table = make_biased_table(rng, 150, n_features=3, disc=0.3)
    tree = grow_tree(table)
    arity = len(table.schema)

    def walk(node):
        if isinstance(node, Leaf):
            return
        assert 0 <= node.feature < arity
        if isinstance(node, CategoricalNode):
            for child in node.branches.values():
                walk(child)
        else:
            walk(node.low)
            walk(node.high)

    walk(tree.root)


def test_export_dot_single_leaf():
    table = make_table([((1,), False, True)])
    dot = grow_tree(table)
    text = export_dot(dot).decode()
    assert text.startswith("digraph")
    assert text.count("n0") >= 1


def test_export_dot_xor_shape(xor_table):
    tree = grow_tree(xor_table, TreeParams(min_instances_per_leaf=1))
    text = export_dot(tree).decode()
    # 3 internal + 4 leaf nodes
    assert text.count("[label=") == 7 + 6  # 7 nodes + 6 labeled edges


def test_export_dot_highlight():
    table = make_table([((1,), False, True)])
    tree = grow_tree(table)
    leaf_id = tree.root.id
    text = export_dot(tree, highlight=frozenset({leaf_id})).decode()
    assert text.count("fillcolor=yellow") == 1


def test_tree_json_summary(xor_table):
    tree = grow_tree(xor_table, TreeParams(min_instances_per_leaf=1))
    import json
    doc = json.loads(tree_to_json(tree))
    assert doc["n_train"] == 4
    assert "split" in doc["root"]
