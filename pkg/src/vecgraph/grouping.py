"""Group scalar instructions into vectorization candidates.

Loads group per array, stores per array, operations per (opcode, distance
from the load/set frontier).  Depth stratification guarantees members of
one operation group never depend on each other, so any subset can share
one vector instruction.  The group graph carries an edge wherever at
least one scalar edge crosses between two groups.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .scalar_ir import LOAD, OP, REDUCE, SET, STORE, ScalarGraph

_KIND_RANK = {LOAD: 0, SET: 1, OP: 2, REDUCE: 3, STORE: 4}


@dataclass
class Group:
    id: int
    kind: str  # load | set | op | reduce | store
    array: str | None = None
    opcode: str | None = None
    depth: int | None = None
    constant: float | None = None
    members: list[int] = field(default_factory=list)

    def label(self) -> str:
        if self.kind in (LOAD, STORE):
            return f"{self.kind}[{self.array}]"
        if self.kind == SET:
            return f"set({self.constant})"
        if self.kind == REDUCE:
            return f"reduce:{self.opcode}@{self.depth}"
        return f"{self.opcode}@{self.depth}"


@dataclass
class GroupGraph:
    groups: list[Group]
    edges: set[tuple[int, int]]
    group_of: dict[int, int]  # scalar node id -> group id

    def by_kind(self, kind: str) -> list[Group]:
        return [g for g in self.groups if g.kind == kind]


def _group_key(graph: ScalarGraph, depth: dict[int, int], nid: int) -> tuple:
    node = graph.nodes[nid]
    if node.kind == LOAD:
        return (_KIND_RANK[LOAD], node.array, -1, -1)
    if node.kind == STORE:
        return (_KIND_RANK[STORE], node.array, -1, -1)
    if node.kind == SET:
        return (_KIND_RANK[SET], repr(node.constant), -1, -1)
    if node.kind == OP:
        # unary pass-throughs cannot share a vector op with binary members
        return (_KIND_RANK[OP], node.opcode, depth[nid], len(node.inputs))
    return (_KIND_RANK[node.kind], node.opcode, depth[nid], -1)


def build_group_graph(graph: ScalarGraph) -> GroupGraph:
    depth = graph.depth_from_leaves()
    buckets: dict[tuple, list[int]] = {}
    for nid in sorted(graph.nodes):
        buckets.setdefault(_group_key(graph, depth, nid), []).append(nid)

    groups = []
    group_of = {}
    for gid, key in enumerate(sorted(buckets)):
        members = buckets[key]
        sample = graph.nodes[members[0]]
        if sample.kind in (LOAD, STORE):
            members = sorted(members, key=lambda m: (graph.nodes[m].index, m))
        group = Group(
            id=gid,
            kind=sample.kind,
            array=sample.array,
            opcode=sample.opcode,
            depth=None if sample.kind in (LOAD, STORE, SET) else depth[members[0]],
            constant=sample.constant,
            members=members,
        )
        groups.append(group)
        for m in members:
            group_of[m] = gid

    edges = set()
    for nid in sorted(graph.nodes):
        for inp in graph.nodes[nid].inputs:
            a, b = group_of[inp], group_of[nid]
            if a != b:
                edges.add((a, b))
    return GroupGraph(groups=groups, edges=edges, group_of=group_of)
