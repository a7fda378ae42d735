"""Situation derivation and (annotated) situation feature tables.

A situation pairs a trace's attribute map with a prefix of its events.
Feature evaluation reads either the trace map (no anchor) or the latest
occurrence of the anchoring activity inside the prefix, so independent
features are always collected from before the class-relevant event.
"""

from __future__ import annotations

import csv
import io
import json
import math
import random
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

from .log_model import (AttributeValue, EventLog, Timestamp, Trace,
                        latest_event_with_activity)

FAVORABLE = "favorable"
DEPRIVED = "deprived"
POSITIVE = "+"
NEGATIVE = "-"


class SpecificationError(ValueError):
    pass


class TableError(ValueError):
    pass


@dataclass(frozen=True)
class Situation:
    trace_attributes: dict
    events: tuple

    def __post_init__(self):
        if not self.events:
            raise ValueError("a situation needs a non-empty event prefix")


@dataclass(frozen=True)
class SituationFeature:
    anchor: Optional[str]  # activity name, or None for trace level
    attribute: str

    def __post_init__(self):
        if not self.attribute:
            raise ValueError("situation feature attribute must be non-empty")

    @property
    def name(self) -> str:
        return self.attribute if self.anchor is None else f"{self.anchor}@{self.attribute}"


@dataclass(frozen=True)
class ExtractionPlan:
    features: Tuple[SituationFeature, ...]

    def __post_init__(self):
        if not self.features:
            raise ValueError("extraction plan must contain at least one feature")
        if len(set(self.features)) != len(self.features):
            raise ValueError("extraction plan features must be pairwise distinct")

    def __len__(self) -> int:
        return len(self.features)

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(f.name for f in self.features)


@dataclass(frozen=True)
class SensitiveBinarizer:
    feature: SituationFeature
    deprived_values: frozenset

    def __post_init__(self):
        if not self.deprived_values:
            raise ValueError("deprived value set must be non-empty")

    def __call__(self, value: Optional[AttributeValue]) -> Optional[str]:
        if value is None:
            return None
        return DEPRIVED if value in self.deprived_values else FAVORABLE


@dataclass(frozen=True)
class ClassBinarizer:
    feature: SituationFeature
    positive_values: Optional[frozenset] = None
    threshold: Optional[float] = None
    negative_if: str = "gt"  # "gt": value > threshold is the bad outcome

    def __post_init__(self):
        if (self.positive_values is None) == (self.threshold is None):
            raise ValueError("exactly one of positive_values / threshold is required")
        if self.negative_if not in ("gt", "lt"):
            raise ValueError("negative_if must be 'gt' or 'lt'")

    def __call__(self, value: Optional[AttributeValue]) -> Optional[str]:
        if value is None:
            return None
        if self.positive_values is not None:
            return POSITIVE if value in self.positive_values else NEGATIVE
        if self.negative_if == "gt":
            return NEGATIVE if value > self.threshold else POSITIVE
        return NEGATIVE if value < self.threshold else POSITIVE


@dataclass(frozen=True)
class SituationSpecification:
    plan: ExtractionPlan
    sensitive: SensitiveBinarizer
    label: ClassBinarizer
    epsilon: float = 0.05
    relabel_mode: str = "both"

    def __post_init__(self):
        if self.sensitive.feature in self.plan.features:
            raise SpecificationError("sensitive feature must not appear in the plan")
        if self.label.feature in self.plan.features:
            raise SpecificationError("class feature must not appear in the plan")
        if self.sensitive.feature == self.label.feature:
            raise SpecificationError("sensitive and class features must differ")
        if not 0 <= self.epsilon <= 1:
            raise SpecificationError("epsilon must be in [0, 1]")
        if self.relabel_mode not in ("both", "neg_to_pos", "pos_to_neg"):
            raise SpecificationError(f"unknown relabel mode {self.relabel_mode!r}")


@dataclass(frozen=True)
class Instance:
    values: tuple  # feature values per plan position; None where absent
    sensitive: str  # FAVORABLE | DEPRIVED
    label: str  # POSITIVE | NEGATIVE
    ref: object = field(default=None, compare=False, hash=False)

    def __post_init__(self):
        if self.sensitive not in (FAVORABLE, DEPRIVED):
            raise ValueError(f"bad sensitive annotation {self.sensitive!r}")
        if self.label not in (POSITIVE, NEGATIVE):
            raise ValueError(f"bad label {self.label!r}")


@dataclass(frozen=True)
class AnnotatedTable:
    schema: ExtractionPlan
    instances: Tuple[Instance, ...]
    dropped: int = 0

    def __post_init__(self):
        arity = len(self.schema)
        for inst in self.instances:
            if len(inst.values) != arity:
                raise ValueError("instance arity does not match the plan")

    def __len__(self) -> int:
        return len(self.instances)

    def column_kinds(self) -> Tuple[str, ...]:
        """Per-column 'numeric' or 'categorical', from observed values."""
        kinds = []
        for i in range(len(self.schema)):
            observed = [inst.values[i] for inst in self.instances if inst.values[i] is not None]
            numeric = bool(observed) and all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in observed)
            kinds.append("numeric" if numeric else "categorical")
        return tuple(kinds)


def derive_situations(log: EventLog, anchor: Optional[str]) -> List[Situation]:
    """All situations for the anchor: full traces, or per-occurrence prefixes."""
    situations = []
    for trace in log:
        if not trace.events:
            continue
        if anchor is None:
            situations.append(Situation(dict(trace.attributes), trace.events))
        else:
            for i, event in enumerate(trace.events):
                if event.activity == anchor:
                    situations.append(
                        Situation(dict(trace.attributes), trace.events[:i + 1]))
    return situations


def eval_feature(feature: SituationFeature, situation: Situation) -> Optional[AttributeValue]:
    """Value of the feature in the situation, None when absent."""
    if feature.anchor is None:
        return situation.trace_attributes.get(feature.attribute)
    event = latest_event_with_activity(situation.events, feature.anchor)
    if event is None:
        return None
    if feature.attribute == "concept:name":
        return event.activity
    if feature.attribute == "time:timestamp":
        return event.time
    return event.attributes.get(feature.attribute)


def build_annotated_table(log: EventLog, spec: SituationSpecification) -> AnnotatedTable:
    """Extract and annotate the situation feature table for the spec.

    Situations whose sensitive or class feature is absent are dropped and
    counted in the result's ``dropped`` field.
    """
    situations = derive_situations(log, spec.label.feature.anchor)
    instances = []
    dropped = 0
    for situation in situations:
        sensitive = spec.sensitive(eval_feature(spec.sensitive.feature, situation))
        label = spec.label(eval_feature(spec.label.feature, situation))
        if sensitive is None or label is None:
            dropped += 1
            continue
        values = tuple(eval_feature(f, situation) for f in spec.plan.features)
        instances.append(Instance(values, sensitive, label, ref=situation))

    if not instances:
        raise TableError("no situation survived sensitive/class annotation")
    groups = {inst.sensitive for inst in instances}
    if len(groups) < 2:
        raise TableError(
            f"only the {groups.pop()} group is present; discrimination is undefined")
    return AnnotatedTable(spec.plan, tuple(instances), dropped)


def split_table(table: AnnotatedTable, train_fraction: float,
                seed: int) -> Tuple[AnnotatedTable, AnnotatedTable]:
    """Deterministic seeded shuffle split; train gets ceil(fraction * N)."""
    if not 0 < train_fraction < 1:
        raise ValueError("train fraction must be strictly between 0 and 1")
    indices = list(range(len(table)))
    random.Random(seed).shuffle(indices)
    train_size = math.ceil(train_fraction * len(table))
    if train_size == 0 or train_size == len(table):
        raise TableError("split would leave an empty partition")
    train = tuple(table.instances[i] for i in indices[:train_size])
    test = tuple(table.instances[i] for i in indices[train_size:])
    return (AnnotatedTable(table.schema, train), AnnotatedTable(table.schema, test))


# --- specification JSON -------------------------------------------------


def _feature_from_json(doc: dict) -> SituationFeature:
    return SituationFeature(doc.get("anchor"), doc["attribute"])


def load_specification(source) -> SituationSpecification:
    """Read a SituationSpecification from a JSON document or file object."""
    if isinstance(source, (str, bytes)):
        doc = json.loads(source)
    else:
        doc = json.load(source)
    try:
        plan = ExtractionPlan(tuple(_feature_from_json(f) for f in doc["plan"]))
        sensitive = SensitiveBinarizer(
            _feature_from_json(doc["sensitive"]),
            frozenset(doc["sensitive"]["deprived_values"]),
        )
        class_doc = doc["class"]
        if "threshold" in class_doc:
            label = ClassBinarizer(
                _feature_from_json(class_doc),
                threshold=class_doc["threshold"]["value"],
                negative_if=class_doc["threshold"].get("delayed_if", "gt"),
            )
        else:
            label = ClassBinarizer(
                _feature_from_json(class_doc),
                positive_values=frozenset(class_doc["positive_values"]),
            )
    except KeyError as exc:
        raise SpecificationError(f"specification JSON missing key {exc}") from exc
    return SituationSpecification(
        plan=plan,
        sensitive=sensitive,
        label=label,
        epsilon=doc.get("epsilon", 0.05),
        relabel_mode=doc.get("relabel_mode", "both"),
    )


# --- table CSV ----------------------------------------------------------


def table_to_csv(table: AnnotatedTable) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(list(table.schema.names) + ["sensitive", "label"])
    for inst in table.instances:
        row = ["" if v is None else v for v in inst.values]
        writer.writerow(row + [inst.sensitive, inst.label])
    return out.getvalue()


def table_from_csv(source, schema: Optional[ExtractionPlan] = None) -> AnnotatedTable:
    if isinstance(source, bytes):
        source = io.StringIO(source.decode("utf-8"))
    elif isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    header = next(reader, None)
    if header is None or header[-2:] != ["sensitive", "label"]:
        raise TableError("table CSV must end with sensitive,label columns")
    if schema is None:
        schema = ExtractionPlan(tuple(_feature_from_name(name) for name in header[:-2]))
    instances = []
    for row in reader:
        values = tuple(None if cell == "" else _coerce(cell) for cell in row[:-2])
        instances.append(Instance(values, row[-2], row[-1]))
    return AnnotatedTable(schema, tuple(instances))


def _feature_from_name(name: str) -> SituationFeature:
    if "@" in name:
        anchor, attribute = name.split("@", 1)
        return SituationFeature(anchor, attribute)
    return SituationFeature(None, name)


def _coerce(text: str):
    for parser in (int, float):
        try:
            return parser(text)
        except ValueError:
            pass
    if text in ("True", "False"):
        return text == "True"
    return text
