"""Derived trace and event attributes written back into a new log.

All enrichers are log-in/log-out and only add namespaced attributes
(trace:, next:, prev:, total:, resource:); events and traces are never
removed or reordered.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Dict, Mapping, Optional

import numpy as np

from ._kernels import window_counts
from .conformance import ReplayResult
from .log_model import Event, EventLog, Trace

WEEK_MS = 7 * 24 * 60 * 60 * 1000


@dataclass(frozen=True)
class EnrichmentConfig:
    delay_threshold_mode: str = "fraction-of-max-duration"
    delay_threshold_value: float = 0.02
    deadline_attribute: Optional[str] = None
    workload_window: int = WEEK_MS

    def __post_init__(self):
        if self.delay_threshold_mode not in ("fraction-of-max-duration", "absolute-milliseconds"):
            raise ValueError(f"unknown delay threshold mode {self.delay_threshold_mode!r}")
        if self.delay_threshold_mode == "fraction-of-max-duration":
            if not 0 < self.delay_threshold_value <= 1:
                raise ValueError("fraction-of-max-duration value must be in (0, 1]")
        elif self.delay_threshold_value <= 0:
            raise ValueError("absolute threshold must be positive")
        if self.workload_window <= 0:
            raise ValueError("workload window must be positive")


def _with_trace_attributes(trace: Trace, extra: Mapping) -> Trace:
    return Trace({**trace.attributes, **extra}, trace.events)


def _with_event_attributes(event: Event, extra: Mapping) -> Event:
    return replace(event, attributes={**event.attributes, **extra})


def enrich_trace_duration(log: EventLog) -> EventLog:
    """Add trace:duration = last event time - first event time (ms)."""
    traces = []
    for trace in log:
        if trace.events:
            duration = int(trace.events[-1].time) - int(trace.events[0].time)
            traces.append(_with_trace_attributes(trace, {"trace:duration": duration}))
        else:
            traces.append(trace)
    return EventLog(traces)


def enrich_trace_delay(log: EventLog, config: EnrichmentConfig) -> EventLog:
    """Label traces on-time/delayed; delayed iff duration > threshold."""
    durations = [t.attributes["trace:duration"] for t in log if "trace:duration" in t.attributes]
    if config.delay_threshold_mode == "fraction-of-max-duration":
        if not durations:
            return log
        threshold = config.delay_threshold_value * max(durations)
    else:
        threshold = config.delay_threshold_value

    traces = []
    for trace in log:
        duration = trace.attributes.get("trace:duration")
        if duration is None:
            traces.append(trace)
        else:
            label = "delayed" if duration > threshold else "on-time"
            traces.append(_with_trace_attributes(trace, {"trace:delay": label}))
    return EventLog(traces)


def enrich_neighbor_activities(log: EventLog) -> EventLog:
    """Add next:activity / prev:activity per event (absent at boundaries)."""
    traces = []
    for trace in log:
        events = []
        for i, event in enumerate(trace.events):
            extra = {}
            if i > 0:
                extra["prev:activity"] = trace.events[i - 1].activity
            if i + 1 < len(trace.events):
                extra["next:activity"] = trace.events[i + 1].activity
            events.append(_with_event_attributes(event, extra))
        traces.append(Trace(trace.attributes, tuple(events)))
    return EventLog(traces)


def enrich_workloads(log: EventLog, config: EnrichmentConfig) -> EventLog:
    """Add total:workload and resource:workload sliding-window counts.

    The window is half-open, (t - window, t], so every event counts itself.
    """
    all_times = np.sort(np.array(
        [int(e.time) for t in log for e in t.events], dtype=np.int64))
    by_resource: Dict[str, list] = {}
    for trace in log:
        for event in trace.events:
            resource = event.attributes.get("org:resource")
            if resource is not None:
                by_resource.setdefault(resource, []).append(int(event.time))
    resource_times = {r: np.sort(np.array(ts, dtype=np.int64)) for r, ts in by_resource.items()}

    flat = [(trace, event) for trace in log for event in trace.events]
    queries = np.array([int(e.time) for _, e in flat], dtype=np.int64)
    totals = window_counts(all_times, queries, config.workload_window)
    per_resource = {}
    for resource, times in resource_times.items():
        per_resource[resource] = window_counts(times, queries, config.workload_window)

    totals_by_key = {}
    for i, (trace, event) in enumerate(flat):
        extra = {"total:workload": int(totals[i])}
        resource = event.attributes.get("org:resource")
        if resource is not None:
            extra["resource:workload"] = int(per_resource[resource][i])
        totals_by_key[(id(trace), event.ordinal)] = extra

    traces = []
    for trace in log:
        events = [
            _with_event_attributes(event, totals_by_key[(id(trace), event.ordinal)])
            for event in trace.events
        ]
        traces.append(Trace(trace.attributes, tuple(events)))
    return EventLog(traces)


def enrich_conformance(log: EventLog, results: Mapping[str, ReplayResult]) -> EventLog:
    """Join replay results onto traces by case id (concept:name)."""
    traces = []
    for trace in log:
        result = results.get(trace.case_id) if trace.case_id is not None else None
        if result is None:
            traces.append(trace)
        else:
            traces.append(_with_trace_attributes(trace, {
                "trace:deviation": result.deviation,
                "trace:numberModelMove": result.model_moves,
                "trace:numberLogMove": result.log_moves,
            }))
    return EventLog(traces)
