"""Automata graphs and the structural features that drive overlay cost.

One automaton state occupies one STE+ processing element and one edge occupies
one interconnect wire, so the state count, edge count and fan-out profile are
the first-order predictors of whether a pattern fits a given overlay.

Edge-list text format (line oriented, ``#`` starts a comment line)::

    states 3
    start 0
    accept 2
    edge 0 1 5
    edge 1 2        # score defaults to 0

When ``states`` is omitted, ids may be sparse; they are re-indexed densely in
ascending order and the original ids are kept in ``Automaton.original_ids``.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ParseError, ValidationError

SCORE_MIN = -(1 << 15)
SCORE_MAX = (1 << 15) - 1


@dataclass(frozen=True)
class Edge:
    source: int
    target: int
    score: int = 0


@dataclass(frozen=True)
class Automaton:
    num_states: int
    edges: tuple[Edge, ...]
    start_states: frozenset[int]
    accept_states: frozenset[int]
    original_ids: tuple[int, ...] | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "start_states", frozenset(self.start_states))
        object.__setattr__(self, "accept_states", frozenset(self.accept_states))
        validate(self)

    def to_text(self) -> str:
        lines = [f"states {self.num_states}"]
        if self.start_states:
            lines.append("start " + " ".join(map(str, sorted(self.start_states))))
        if self.accept_states:
            lines.append("accept " + " ".join(map(str, sorted(self.accept_states))))
        lines.extend(f"edge {e.source} {e.target} {e.score}" for e in self.edges)
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class FeatureVector:
    num_states: int
    num_edges: int
    max_fan_out: int
    max_fan_in: int
    avg_fan_out: Fraction


def validate(a: Automaton, score_min: int | None = None, score_max: int | None = None) -> None:
    """Structural checks; edge scores are range-checked only when bounds are given."""
    if a.num_states < 0:
        raise ValidationError("num_states must be non-negative")
    n = a.num_states
    for s in a.start_states | a.accept_states:
        if not 0 <= s < n:
            raise ValidationError(f"state id {s} out of range for {n} states")
    seen = set()
    for e in a.edges:
        for s in (e.source, e.target):
            if not 0 <= s < n:
                raise ValidationError(f"state id {s} out of range for {n} states")
        if (e.source, e.target) in seen:
            raise ValidationError(f"duplicate edge {e.source} -> {e.target}")
        seen.add((e.source, e.target))
        if score_min is not None and score_max is not None and not score_min <= e.score <= score_max:
            raise ValidationError(
                f"edge score {e.score} outside [{score_min}, {score_max}]"
            )
        # accepting elements report their score and never feed the start element
        if e.source in a.accept_states and e.target in a.start_states:
            raise ValidationError(
                f"edge {e.source} -> {e.target} runs from an accept state to a start state"
            )


def _ints(tokens: list[str], lineno: int) -> list[int]:
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise ParseError(f"expected integers, got {' '.join(tokens)!r}", lineno) from None


def parse_automaton(
    text: str, score_min: int = SCORE_MIN, score_max: int = SCORE_MAX
) -> Automaton:
    declared: int | None = None
    starts: list[int] = []
    accepts: list[int] = []
    raw_edges: list[tuple[int, int, int, int]] = []

    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "#" in line:
            line = line[: line.index("#")].strip()
        keyword, *rest = line.split()
        args = _ints(rest, lineno)
        if keyword == "states":
            if len(args) != 1 or args[0] < 0:
                raise ParseError("'states' takes one non-negative count", lineno)
            if declared is not None:
                raise ParseError("'states' declared twice", lineno)
            declared = args[0]
        elif keyword == "start":
            starts.extend(args)
        elif keyword == "accept":
            accepts.extend(args)
        elif keyword == "edge":
            if len(args) not in (2, 3):
                raise ParseError("'edge' takes: src dst [score]", lineno)
            src, dst = args[0], args[1]
            score = args[2] if len(args) == 3 else 0
            raw_edges.append((src, dst, score, lineno))
        else:
            raise ParseError(f"unknown keyword {keyword!r}", lineno)

    original_ids = None
    if declared is None:
        ids = sorted(set(starts) | set(accepts) | {x for e in raw_edges for x in e[:2]})
        if ids and ids[0] < 0:
            raise ParseError(f"negative state id {ids[0]}")
        remap = {old: new for new, old in enumerate(ids)}
        if ids != list(range(len(ids))):
            original_ids = tuple(ids)
        declared = len(ids)
    else:
        remap = None

    def idx(s: int, lineno: int | None) -> int:
        if remap is not None:
            return remap[s]
        if not 0 <= s < declared:
            raise ParseError(f"state id {s} out of range for {declared} states", lineno)
        return s

    seen: set[tuple[int, int]] = set()
    edges = []
    for src, dst, score, lineno in raw_edges:
        e = Edge(idx(src, lineno), idx(dst, lineno), score)
        if (e.source, e.target) in seen:
            raise ParseError(f"duplicate edge {src} -> {dst}", lineno)
        if not score_min <= score <= score_max:
            raise ParseError(f"edge score {score} outside [{score_min}, {score_max}]", lineno)
        seen.add((e.source, e.target))
        edges.append(e)

    try:
        return Automaton(
            num_states=declared,
            edges=tuple(edges),
            start_states=frozenset(idx(s, None) for s in starts),
            accept_states=frozenset(idx(s, None) for s in accepts),
            original_ids=original_ids,
        )
    except ValidationError as exc:
        raise ParseError(str(exc)) from None


def extract_features(a: Automaton) -> FeatureVector:
    fan_out = [0] * a.num_states
    fan_in = [0] * a.num_states
    for e in a.edges:
        fan_out[e.source] += 1
        fan_in[e.target] += 1
    n = a.num_states
    return FeatureVector(
        num_states=n,
        num_edges=len(a.edges),
        max_fan_out=max(fan_out, default=0),
        max_fan_in=max(fan_in, default=0),
        avg_fan_out=Fraction(len(a.edges), n) if n else Fraction(0),
    )


def disjoint_union(a: Automaton, b: Automaton) -> Automaton:
    """Place ``b`` after ``a``, shifting ``b``'s state ids by ``a.num_states``."""
    k = a.num_states
    return Automaton(
        num_states=k + b.num_states,
        edges=a.edges + tuple(Edge(e.source + k, e.target + k, e.score) for e in b.edges),
        start_states=a.start_states | {s + k for s in b.start_states},
        accept_states=a.accept_states | {s + k for s in b.accept_states},
    )


def from_edges(
    num_states: int,
    edges: Iterable[tuple[int, int] | tuple[int, int, int]],
    start: Iterable[int] = (),
    accept: Iterable[int] = (),
) -> Automaton:
    return Automaton(
        num_states=num_states,
        edges=tuple(Edge(*e) for e in edges),
        start_states=frozenset(start),
        accept_states=frozenset(accept),
    )
