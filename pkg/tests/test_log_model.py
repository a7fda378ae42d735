import pytest
from hypothesis import given, strategies as st

from fairpm.log_model import (Event, EventLog, LogParseError, Timestamp,
                              Trace, events_up_to, latest_event_with_activity,
                              parse_csv_log, parse_xes, serialize_xes)

from conftest import make_event, make_trace

MINIMAL_XES = b"""<?xml version="1.0" encoding="UTF-8"?>
<log xes.version="1.0">
  <trace>
    <string key="concept:name" value="c1"/>
    <event>
      <string key="concept:name" value="A"/>
      <date key="time:timestamp" value="2020-01-01T00:00:00.000Z"/>
    </event>
  </trace>
</log>
"""


def test_parse_minimal_document():
    log = parse_xes(MINIMAL_XES)
    assert len(log) == 1
    assert len(log.traces[0].events) == 1
    assert log.traces[0].events[0].activity == "A"


def test_parse_empty_log():
    log = parse_xes(b'<log xes.version="1.0"/>')
    assert len(log) == 0


def test_equal_timestamps_keep_document_order():
    doc = b"""<log>
      <trace>
        <event><string key="concept:name" value="X"/>
               <date key="time:timestamp" value="2020-01-01T00:00:00Z"/></event>
        <event><string key="concept:name" value="Y"/>
               <date key="time:timestamp" value="2020-01-01T00:00:00Z"/></event>
      </trace>
    </log>"""
    log = parse_xes(doc)
    assert [e.activity for e in log.traces[0].events] == ["X", "Y"]


def test_malformed_xml_reports_position():
    with pytest.raises(LogParseError, match=r"line \d+"):
        parse_xes(b"<log><trace></log>")


def test_missing_timestamp_rejected_with_trace_index():
    doc = b"""<log><trace>
      <event><string key="concept:name" value="A"/></event>
    </trace></log>"""
    with pytest.raises(LogParseError, match="trace 0"):
        parse_xes(doc)
    log = parse_xes(doc, synthetic_timestamps=True)
    assert len(log.traces[0].events) == 1


def test_roundtrip_empty_log():
    assert len(parse_xes(serialize_xes(EventLog([])))) == 0


def test_roundtrip_preserves_all_value_tags():
    trace = Trace(
        {"concept:name": "c1", "count": 3, "ratio": 0.5, "flag": True,
         "deadline": Timestamp(1577836800000)},
        (make_event("A", 1000, resource="r1", cost=2.5, ok=False),),
    )
    log = EventLog([trace])
    back = parse_xes(serialize_xes(log))
    t = back.traces[0]
    assert t.attributes == trace.attributes
    assert isinstance(t.attributes["deadline"], Timestamp)
    assert t.events[0].attributes == trace.events[0].attributes
    assert t.events[0].time == Timestamp(1000)


def test_roundtrip_counts():
    log = EventLog([make_trace(["A", "B"]), make_trace(["C"])])
    back = parse_xes(serialize_xes(log))
    assert len(back) == 2
    assert [len(t.events) for t in back] == [2, 1]


def test_events_up_to_boundaries():
    trace = make_trace(["A", "B", "C"])
    assert events_up_to(trace, (Timestamp(-1), 0)) == ()
    assert events_up_to(trace, trace.events[-1].key) == trace.events
    assert events_up_to(trace, trace.events[1].key) == trace.events[:2]


@given(st.lists(st.integers(min_value=0, max_value=50), min_size=1, max_size=12),
       st.integers(0, 60), st.integers(0, 60))
def test_events_up_to_monotone_prefix(times, cut_a, cut_b):
    events = tuple(Event("A", Timestamp(t), {}, i) for i, t in enumerate(times))
    trace = Trace({}, events)
    lo, hi = sorted([cut_a, cut_b])
    first = events_up_to(trace, (Timestamp(lo), 10 ** 9))
    second = events_up_to(trace, (Timestamp(hi), 10 ** 9))
    assert second[:len(first)] == first


def test_latest_event_with_activity():
    trace = make_trace(["A", "B", "A", "C"])
    assert latest_event_with_activity(trace.events, "Z") is None
    assert latest_event_with_activity(trace.events, "B") is trace.events[1]
    assert latest_event_with_activity(trace.events, "A") is trace.events[2]


def test_ordinals_must_be_unique():
    with pytest.raises(ValueError, match="ordinal"):
        Trace({}, (make_event("A", 0, 0), make_event("B", 1, 0)))


def test_csv_ingestion():
    text = ("case_id,activity,timestamp,org:resource\n"
            "c1,A,2020-01-01T00:00:00Z,r1\n"
            "c1,B,2020-01-01T01:00:00Z,r2\n"
            "c2,A,2020-01-01T02:00:00Z,\n")
    import io
    log = parse_csv_log(io.StringIO(text))
    assert len(log) == 2
    c1 = next(t for t in log if t.case_id == "c1")
    assert [e.activity for e in c1.events] == ["A", "B"]
    assert c1.events[0].attributes["org:resource"] == "r1"


def test_catalog_tracks_observed_values():
    log = EventLog([make_trace(["A", "B"], attrs={"channel": "web"})])
    assert log.values("channel") == frozenset({"web"})
    assert log.values("concept:name") >= {"A", "B"}
    assert log.attribute_tag("channel") == "string"
