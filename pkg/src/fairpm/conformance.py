"""Petri-net ingestion and token-based replay.

Replay follows a simple token game: unmapped activities count as log
moves, disabled transitions are force-fired after inserting the missing
tokens, and the missing-token total doubles as the model-move count.
Externally computed alignment results can be imported instead.
"""

from __future__ import annotations

import csv
import io
import xml.etree.ElementTree as ET
from collections import Counter, deque
from dataclasses import dataclass
from typing import Dict, Mapping, Optional

from .log_model import Trace


class PnmlError(ValueError):
    pass


class AlignmentImportError(ValueError):
    pass


@dataclass(frozen=True)
class PetriNet:
    places: frozenset
    transitions: Mapping[str, Optional[str]]  # id -> label, None if silent
    arcs: frozenset  # (source, target) pairs
    initial_marking: Mapping[str, int]
    final_marking: Mapping[str, int]

    def __post_init__(self):
        for source, target in self.arcs:
            src_place = source in self.places
            tgt_place = target in self.places
            if src_place == tgt_place:
                raise ValueError(f"arc {source}->{target} is not place/transition bipartite")
        for marking in (self.initial_marking, self.final_marking):
            unknown = set(marking) - set(self.places)
            if unknown:
                raise ValueError(f"marking references unknown places: {sorted(unknown)}")

    def preset(self, transition: str) -> tuple:
        return tuple(sorted(s for s, t in self.arcs if t == transition))

    def postset(self, transition: str) -> tuple:
        return tuple(sorted(t for s, t in self.arcs if s == transition))

    @property
    def silent_transitions(self) -> tuple:
        return tuple(sorted(t for t, label in self.transitions.items() if label is None))

    def label_map(self) -> Dict[str, str]:
        """Default activity -> transition map by exact label match."""
        return {label: t for t, label in sorted(self.transitions.items()) if label is not None}


@dataclass(frozen=True)
class ReplayResult:
    deviation: bool
    missing_tokens: int
    remaining_tokens: int
    log_moves: int
    model_moves: int

    def __post_init__(self):
        for name in ("missing_tokens", "remaining_tokens", "log_moves", "model_moves"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    @property
    def fitting(self) -> bool:
        return self.missing_tokens == 0 and self.remaining_tokens == 0 and self.log_moves == 0


def _local(tag: str) -> str:
    return tag.rpartition("}")[2]


def parse_pnml(source) -> PetriNet:
    """Parse a single-net PNML document.

    The final marking is taken from a <finalmarkings> declaration when
    present, otherwise inferred as the set of sink places.
    """
    if isinstance(source, bytes):
        source = io.BytesIO(source)
    try:
        root = ET.parse(source).getroot()
    except ET.ParseError as exc:
        raise PnmlError(f"malformed PNML: {exc}") from exc

    nets = [el for el in root.iter() if _local(el.tag) == "net"]
    if len(nets) != 1:
        raise PnmlError(f"expected exactly one net element, found {len(nets)}")
    net_el = nets[0]

    places = set()
    transitions = {}
    arcs = set()
    initial = Counter()
    final = Counter()

    for el in net_el.iter():
        tag = _local(el.tag)
        if tag == "place":
            pid = el.get("id")
            places.add(pid)
            for marking_el in el.iter():
                if _local(marking_el.tag) == "initialMarking":
                    text = "".join(marking_el.itertext()).strip()
                    initial[pid] = int(text) if text else 1
        elif tag == "transition":
            tid = el.get("id")
            label = None
            for name_el in el.iter():
                if _local(name_el.tag) == "name":
                    text = "".join(name_el.itertext()).strip()
                    label = text or None
            # toolSpecific "invisible" markers also denote silent transitions
            for tool_el in el.iter():
                if _local(tool_el.tag) == "toolspecific" and tool_el.get("activity") == "$invisible$":
                    label = None
            transitions[tid] = label
        elif tag == "arc":
            arcs.add((el.get("source"), el.get("target")))

    for marking_el in net_el.iter():
        if _local(marking_el.tag) == "finalmarkings":
            for place_el in marking_el.iter():
                if _local(place_el.tag) == "place":
                    text = "".join(place_el.itertext()).strip()
                    count = int(text) if text else 1
                    if count > 0:
                        final[place_el.get("idref")] = count

    if not final:
        sinks = {p for p in places if not any(s == p for s, _ in arcs)}
        if not sinks:
            raise PnmlError("no declared final marking and no sink place to infer one")
        final = Counter({p: 1 for p in sinks})

    if not initial:
        sources = {p for p in places if not any(t == p for _, t in arcs)}
        initial = Counter({p: 1 for p in sources})

    return PetriNet(
        places=frozenset(places),
        transitions=transitions,
        arcs=frozenset(arcs),
        initial_marking=dict(initial),
        final_marking=dict(final),
    )


def _enabled(net: PetriNet, marking: Counter, transition: str) -> bool:
    return all(marking[p] >= 1 for p in net.preset(transition))


def _fire(net: PetriNet, marking: Counter, transition: str) -> None:
    for p in net.preset(transition):
        marking[p] -= 1
    for p in net.postset(transition):
        marking[p] += 1


def _marking_key(marking: Counter) -> tuple:
    return tuple(sorted((p, c) for p, c in marking.items() if c > 0))


def _silent_sequence(net: PetriNet, marking: Counter, goal) -> Optional[list]:
    """Shortest silent firing sequence after which ``goal(marking)`` holds.

    Bounded breadth-first search of depth at most the number of silent
    transitions; ties broken by transition-id order via sorted expansion.
    """
    silents = net.silent_transitions
    if goal(marking):
        return []
    if not silents:
        return None
    seen = {_marking_key(marking)}
    queue = deque([(marking, [])])
    while queue:
        current, path = queue.popleft()
        if len(path) >= len(silents):
            continue
        for t in silents:
            if not _enabled(net, current, t):
                continue
            nxt = current.copy()
            _fire(net, nxt, t)
            key = _marking_key(nxt)
            if key in seen:
                continue
            seen.add(key)
            new_path = path + [t]
            if goal(nxt):
                return new_path
            queue.append((nxt, new_path))
    return None


def token_replay(net: PetriNet, trace: Trace,
                 label_map: Optional[Mapping[str, str]] = None) -> ReplayResult:
    """Replay one trace, counting missing/remaining tokens and log moves."""
    if label_map is None:
        label_map = net.label_map()

    marking = Counter(net.initial_marking)
    missing = 0
    log_moves = 0

    for event in trace.events:
        transition = label_map.get(event.activity)
        if transition is None:
            log_moves += 1
            continue
        if not _enabled(net, marking, transition):
            path = _silent_sequence(net, marking, lambda m: _enabled(net, m, transition))
            if path is not None:
                for t in path:
                    _fire(net, marking, t)
        if not _enabled(net, marking, transition):
            for p in net.preset(transition):
                deficit = 1 - marking[p]
                if deficit > 0:
                    missing += deficit
                    marking[p] += deficit
        _fire(net, marking, transition)

    final = Counter(net.final_marking)

    def at_final(m: Counter) -> bool:
        return _marking_key(m) == _marking_key(final)

    path = _silent_sequence(net, marking, at_final)
    if path is not None:
        for t in path:
            _fire(net, marking, t)

    remaining = sum(max(0, marking[p] - final[p]) for p in set(marking) | set(final))
    missing += sum(max(0, final[p] - marking[p]) for p in set(marking) | set(final))

    return ReplayResult(
        deviation=(missing > 0 or remaining > 0 or log_moves > 0),
        missing_tokens=missing,
        remaining_tokens=remaining,
        log_moves=log_moves,
        model_moves=missing,
    )


def import_alignment_results(source) -> Dict[str, ReplayResult]:
    """Read externally computed conformance results keyed by case id.

    CSV layout: case_id,deviation,model_moves,log_moves. The deviation
    column is recomputed from the counts when it disagrees.
    """
    if isinstance(source, bytes):
        source = io.StringIO(source.decode("utf-8"))
    reader = csv.DictReader(source)
    expected = ["case_id", "deviation", "model_moves", "log_moves"]
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != expected:
        raise AlignmentImportError(f"expected header {','.join(expected)}")

    results = {}
    for row_number, row in enumerate(reader, start=2):
        try:
            model_moves = int(row["model_moves"])
            log_moves = int(row["log_moves"])
        except (TypeError, ValueError) as exc:
            raise AlignmentImportError(f"row {row_number}: bad count: {exc}") from exc
        if model_moves < 0 or log_moves < 0:
            raise AlignmentImportError(f"row {row_number}: negative move count")
        deviation = model_moves + log_moves > 0
        results[row["case_id"]] = ReplayResult(
            deviation=deviation,
            missing_tokens=model_moves,
            remaining_tokens=0,
            log_moves=log_moves,
            model_moves=model_moves,
        )
    return results
