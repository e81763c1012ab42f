"""Structured summaries of FlowGraphs (top transitions, frequencies)."""

from __future__ import annotations

from dataclasses import dataclass

from ..engine import FlowGraph


@dataclass(frozen=True, slots=True)
class TransitionStat:
    from_value: str
    to_value: str
    count: int
    fraction: float  # count / cohort_size


@dataclass(frozen=True, slots=True)
class ColumnPairSummary:
    from_col: int
    to_col: int
    transitions: tuple[TransitionStat, ...]  # desc count, ties lexicographic


def flowgraph_summary(g: FlowGraph) -> tuple[ColumnPairSummary, ...]:
    pairs: list[ColumnPairSummary] = []
    for c in range(len(g.columns) - 1):
        stats = [
            TransitionStat(
                g.nodes[f.source].value,
                g.nodes[f.target].value,
                f.count,
                f.count / g.cohort_size,
            )
            for f in g.flows
            if g.nodes[f.source].col == c
        ]
        stats.sort(key=lambda t: (-t.count, t.from_value, t.to_value))
        pairs.append(ColumnPairSummary(c, c + 1, tuple(stats)))
    return tuple(pairs)
