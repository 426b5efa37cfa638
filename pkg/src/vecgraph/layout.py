"""Shared vector-layout vocabulary: where scalar values live in vector land.

A *slot* is one virtual vector register worth of scalar nodes.  Load and
store slots come from the memory split choice; operation slots from the
sub-grouping of each operation group.  A placement pins one scalar value
to (slot key, lane).  Splat placements (broadcast constants) satisfy any
lane for free.
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Placement:
    vec: tuple  # hashable key naming the producing vector
    lane: int
    splat: bool = False


def memory_runs(graph, members: list[int]) -> list[tuple[int, list[int]]]:
    """Split a slot's load/store nodes into maximal memory-consecutive runs.

    Members must be sorted by element index.  Returns (start_index, nodes)
    pairs; stores must never touch the holes between runs.
    """
    runs: list[tuple[int, list[int]]] = []
    for nid in members:
        idx = graph.nodes[nid].index
        if runs and idx == runs[-1][0] + len(runs[-1][1]):
            runs[-1][1].append(nid)
        else:
            runs.append((idx, [nid]))
    return runs


def fetch_covers(graph, members: list[int], vec_size: int) -> list[tuple[int, int, list[int]]]:
    """Greedy contiguous windows (<= vec_size wide) covering a load slot.

    Loads may over-fetch unused elements between accessed indices, so one
    window covers every member within vec_size of its first element.
    Returns (start_index, count, member nodes in window) triples.
    """
    covers: list[tuple[int, int, list[int]]] = []
    pending = list(members)
    while pending:
        start = graph.nodes[pending[0]].index
        window = [n for n in pending if graph.nodes[n].index < start + vec_size]
        last = graph.nodes[window[-1]].index
        covers.append((start, last - start + 1, window))
        pending = pending[len(window):]
    return covers
