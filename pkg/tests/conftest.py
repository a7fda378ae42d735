import random

import pytest

from fairpm.conformance import PetriNet
from fairpm.log_model import Event, EventLog, Timestamp, Trace
from fairpm.situations import (DEPRIVED, FAVORABLE, NEGATIVE, POSITIVE,
                               AnnotatedTable, ExtractionPlan, Instance,
                               SituationFeature)


def make_event(activity, time, ordinal=0, **attrs):
    return Event(activity, Timestamp(time), attrs, ordinal)


def make_trace(activities, start=0, step=100, attrs=None, case_id=None):
    trace_attrs = dict(attrs or {})
    if case_id is not None:
        trace_attrs["concept:name"] = case_id
    events = tuple(
        make_event(act, start + i * step, ordinal=i)
        for i, act in enumerate(activities)
    )
    return Trace(trace_attrs, events)


def make_plan(*names):
    return ExtractionPlan(tuple(SituationFeature(None, n) for n in names))


def make_table(rows, feature_names=("f0",)):
    """rows: iterables of (values tuple, deprived bool, positive bool)."""
    instances = tuple(
        Instance(tuple(values),
                 DEPRIVED if deprived else FAVORABLE,
                 POSITIVE if positive else NEGATIVE)
        for values, deprived, positive in rows
    )
    return AnnotatedTable(make_plan(*feature_names), instances)


@pytest.fixture
def eight_instance_table():
    """Favorable positive rate 2/4, deprived 1/4: disc exactly 1/4."""
    rows = [((i,), False, i < 2) for i in range(4)]
    rows += [((i,), True, i < 1) for i in range(4)]
    return make_table(rows)


@pytest.fixture
def xor_table():
    rows = []
    for a in (0, 1):
        for b in (0, 1):
            rows.append(((a, b), a == 0, bool(a ^ b)))
    return make_table(rows, feature_names=("a", "b"))


def sequence_net():
    """p0 -> A -> p1 -> B -> p2."""
    return PetriNet(
        places=frozenset({"p0", "p1", "p2"}),
        transitions={"tA": "A", "tB": "B"},
        arcs=frozenset({("p0", "tA"), ("tA", "p1"), ("p1", "tB"), ("tB", "p2")}),
        initial_marking={"p0": 1},
        final_marking={"p2": 1},
    )


def choice_net():
    """A then either B or a silent skip, then C; exercises silent closure."""
    return PetriNet(
        places=frozenset({"p0", "p1", "p2", "p3"}),
        transitions={"tA": "A", "tB": "B", "tSkip": None, "tC": "C"},
        arcs=frozenset({
            ("p0", "tA"), ("tA", "p1"),
            ("p1", "tB"), ("tB", "p2"),
            ("p1", "tSkip"), ("tSkip", "p2"),
            ("p2", "tC"), ("tC", "p3"),
        }),
        initial_marking={"p0": 1},
        final_marking={"p3": 1},
    )


def make_biased_table(rng: random.Random, n: int, n_features: int = 3,
                      deprived_share: float = 0.4, pos_rate: float = 0.6,
                      disc: float = 0.0, proxy_strength: float = 0.85):
    """Synthetic table: f0 tracks the label, f1 proxies the group.

    ``disc`` lowers the deprived group's positive rate by that amount.
    """
    rows = []
    for _ in range(n):
        deprived = rng.random() < deprived_share
        p_pos = pos_rate - (disc if deprived else 0.0)
        positive = rng.random() < p_pos
        values = []
        for feature in range(n_features):
            if feature == 0:
                noisy = positive if rng.random() < 0.8 else not positive
                values.append("hi" if noisy else "lo")
            elif feature == 1:
                proxy = deprived if rng.random() < proxy_strength else not deprived
                values.append("d" if proxy else "f")
            else:
                values.append(rng.randint(0, 3))
        rows.append((tuple(values), deprived, positive))
    names = tuple(f"f{i}" for i in range(n_features))
    return make_table(rows, feature_names=names)
