"""In-memory event log model with XES and CSV ingestion.

Events are ordered by (time, ordinal) inside each trace; the ordinal is
the ingestion order and breaks timestamp ties, so the ordering is always
total even when real logs reuse timestamps.
"""

from __future__ import annotations

import csv
import io
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, Iterator, Mapping, Optional, Union


class Timestamp(int):
    """UTC milliseconds since the epoch, distinguishable from plain ints."""

    @classmethod
    def from_iso(cls, text: str) -> "Timestamp":
        text = text.strip()
        if text.endswith("Z"):
            text = text[:-1] + "+00:00"
        dt = datetime.fromisoformat(text)
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        return cls(round(dt.timestamp() * 1000))

    def to_iso(self) -> str:
        dt = datetime.fromtimestamp(self / 1000.0, tz=timezone.utc)
        return dt.isoformat(timespec="milliseconds").replace("+00:00", "Z")


AttributeValue = Union[str, int, float, bool, Timestamp]


def value_tag(value: AttributeValue) -> str:
    """XES type tag for a value. Order matters: bool and Timestamp are ints."""
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, Timestamp):
        return "date"
    if isinstance(value, int):
        return "int"
    if isinstance(value, float):
        return "float"
    if isinstance(value, str):
        return "string"
    raise TypeError(f"unsupported attribute value: {value!r}")


class LogParseError(ValueError):
    pass


@dataclass(frozen=True)
class Event:
    activity: str
    time: Timestamp
    attributes: Mapping[str, AttributeValue]
    ordinal: int

    def __post_init__(self):
        if not self.activity:
            raise ValueError("event activity must be non-empty")

    @property
    def key(self) -> tuple:
        return (self.time, self.ordinal)


@dataclass(frozen=True)
class Trace:
    attributes: Mapping[str, AttributeValue]
    events: tuple

    def __post_init__(self):
        ordered = tuple(sorted(self.events, key=lambda e: e.key))
        ordinals = [e.ordinal for e in ordered]
        if len(set(ordinals)) != len(ordinals):
            raise ValueError("event ordinals must be unique within a trace")
        object.__setattr__(self, "events", ordered)

    @property
    def case_id(self) -> Optional[str]:
        cid = self.attributes.get("concept:name")
        return None if cid is None else str(cid)


class EventLog:
    """Immutable collection of traces plus the observed attribute catalog."""

    def __init__(self, traces: Iterable[Trace]):
        self.traces = tuple(traces)
        self._catalog = {}
        for trace in self.traces:
            for name, value in trace.attributes.items():
                self._observe(name, value)
            for event in trace.events:
                self._observe("concept:name", event.activity)
                self._observe("time:timestamp", event.time)
                for name, value in event.attributes.items():
                    self._observe(name, value)

    def _observe(self, name: str, value: AttributeValue) -> None:
        tag = value_tag(value)
        entry = self._catalog.setdefault(name, (tag, set()))
        entry[1].add(value)

    def values(self, attribute: str) -> frozenset:
        """Observed value set of an attribute across the whole log."""
        entry = self._catalog.get(attribute)
        return frozenset(entry[1]) if entry else frozenset()

    def attribute_tag(self, attribute: str) -> Optional[str]:
        entry = self._catalog.get(attribute)
        return entry[0] if entry else None

    @property
    def attributes(self) -> frozenset:
        return frozenset(self._catalog)

    def __len__(self) -> int:
        return len(self.traces)

    def __iter__(self) -> Iterator[Trace]:
        return iter(self.traces)


def events_up_to(trace: Trace, cutoff: tuple) -> tuple:
    """Events of the trace with (time, ordinal) at most the cutoff."""
    return tuple(e for e in trace.events if e.key <= cutoff)


def latest_event_with_activity(events: Iterable[Event], activity: str) -> Optional[Event]:
    """The (time, ordinal)-maximal event with the given activity, if any."""
    best = None
    for event in events:
        if event.activity == activity and (best is None or event.key > best.key):
            best = event
    return best


# --- XES ---------------------------------------------------------------

_XES_PARSERS = {
    "string": lambda s: s,
    "int": int,
    "float": float,
    "boolean": lambda s: s.strip().lower() == "true",
    "date": Timestamp.from_iso,
}


def _local(tag: str) -> str:
    return tag.rpartition("}")[2]


def _read_attributes(element) -> dict:
    attrs = {}
    for child in element:
        kind = _local(child.tag)
        parser = _XES_PARSERS.get(kind)
        if parser is None:
            continue
        key = child.get("key")
        if key is None:
            continue
        try:
            attrs[key] = parser(child.get("value", ""))
        except ValueError as exc:
            raise LogParseError(f"bad {kind} value for attribute {key!r}: {exc}") from exc
    return attrs


def parse_xes(source, synthetic_timestamps: bool = False) -> EventLog:
    """Parse an IEEE XES document into an EventLog.

    ``synthetic_timestamps`` assigns sequence-derived times (1 ms apart) to
    events lacking time:timestamp instead of rejecting the document.
    """
    if isinstance(source, bytes):
        source = io.BytesIO(source)
    try:
        root = ET.parse(source).getroot()
    except ET.ParseError as exc:
        line, col = exc.position
        raise LogParseError(f"malformed XES at line {line}, column {col}: {exc.msg}") from exc

    traces = []
    for trace_index, trace_el in enumerate(e for e in root if _local(e.tag) == "trace"):
        trace_attrs = _read_attributes(trace_el)
        events = []
        ordinal = 0
        for event_el in trace_el:
            if _local(event_el.tag) != "event":
                continue
            attrs = _read_attributes(event_el)
            activity = attrs.pop("concept:name", None)
            time = attrs.pop("time:timestamp", None)
            if time is None:
                if not synthetic_timestamps:
                    raise LogParseError(
                        f"event without time:timestamp in trace {trace_index}"
                    )
                time = Timestamp(ordinal)
            if activity is None:
                raise LogParseError(f"event without concept:name in trace {trace_index}")
            events.append(Event(str(activity), time, attrs, ordinal))
            ordinal += 1
        traces.append(Trace(trace_attrs, tuple(events)))
    return EventLog(traces)


def _attribute_element(parent, key: str, value: AttributeValue) -> None:
    tag = value_tag(value)
    if tag == "date":
        text = value.to_iso()
    elif tag == "boolean":
        text = "true" if value else "false"
    else:
        text = str(value)
    ET.SubElement(parent, tag, key=key, value=text)


def serialize_xes(log: EventLog) -> bytes:
    root = ET.Element("log", attrib={"xes.version": "1.0"})
    for trace in log:
        trace_el = ET.SubElement(root, "trace")
        for key in sorted(trace.attributes):
            _attribute_element(trace_el, key, trace.attributes[key])
        for event in trace.events:
            event_el = ET.SubElement(trace_el, "event")
            _attribute_element(event_el, "concept:name", event.activity)
            _attribute_element(event_el, "time:timestamp", event.time)
            for key in sorted(event.attributes):
                _attribute_element(event_el, key, event.attributes[key])
    ET.indent(root)
    return ET.tostring(root, encoding="utf-8", xml_declaration=True)


# --- CSV ingestion (fixture path) --------------------------------------


def parse_csv_log(source, case_column: str = "case_id",
                  activity_column: str = "activity",
                  time_column: str = "timestamp") -> EventLog:
    """Read a flat CSV (case id, activity, ISO-8601 timestamp, extras)."""
    if isinstance(source, bytes):
        source = io.StringIO(source.decode("utf-8"))
    reader = csv.DictReader(source)
    if reader.fieldnames is None:
        raise LogParseError("CSV log has no header row")
    for required in (case_column, activity_column, time_column):
        if required not in reader.fieldnames:
            raise LogParseError(f"CSV log missing column {required!r}")

    per_case = {}
    for row_number, row in enumerate(reader, start=2):
        case = row[case_column]
        try:
            time = Timestamp.from_iso(row[time_column])
        except ValueError as exc:
            raise LogParseError(f"row {row_number}: bad timestamp: {exc}") from exc
        extras = {
            k: _coerce_csv_value(v)
            for k, v in row.items()
            if k not in (case_column, activity_column, time_column) and v not in (None, "")
        }
        events = per_case.setdefault(case, [])
        events.append(Event(row[activity_column], time, extras, len(events)))
    return EventLog(
        Trace({"concept:name": case}, tuple(events))
        for case, events in per_case.items()
    )


def _coerce_csv_value(text: str) -> AttributeValue:
    for parser in (int, float):
        try:
            return parser(text)
        except ValueError:
            pass
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    return text
