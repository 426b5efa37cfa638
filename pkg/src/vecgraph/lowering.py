"""Materialize a vector instruction graph for one pipeline configuration.

Given a memory split choice and an operation-split strategy this plans
lane placements for every scalar value (loads by slot position, stores by
memory run, operations via the ordering heuristic) and then builds the
vector graph: contiguous loads covering each slot, permute/extract/merge
nodes wherever lanes disagree, one vector op per sub-group, reduces over
chain tails, and one store per memory-consecutive run.  Assembly nodes are
hash-consed so a shuffle shared by several consumers is built once.

Move planning and move counting share ``ordering.move_cost``: the number
of transform nodes built here for a sub-group equals its counted cost.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .grouping import GroupGraph
from .layout import Placement, fetch_covers, memory_runs
from .ordering import fix_order
from .scalar_ir import LOAD, OP, REDUCE, SET, STORE, ScalarGraph
from .splitting import (
    LoadStoreSplitChoice,
    ScoreMatrix,
    compute_score_matrix,
    split_by_clustering,
    split_by_partitioning,
    split_identity,
)
from .vector_ir import (
    BROADCAST,
    EXTRACT,
    MERGE,
    PERMUTE,
    VLOAD,
    VOP,
    VREDUCE,
    VSTORE,
    VectorGraph,
    VectorNode,
)

STRATEGIES = ("identity", "partitioning", "clustering")


class LoweringError(RuntimeError):
    pass


@dataclass
class OpPlan:
    group_id: int
    kind: str
    subgroups: list[list[int]]
    lanes: list[dict[int, int]]


@dataclass
class Layout:
    placements: dict[int, Placement]
    store_lane_of: dict[int, int]
    store_run_of: dict[int, tuple]
    runs: list[tuple[tuple, str, int, list[int]]]  # (key, array, start, store nodes)
    plans: list[OpPlan]
    matrices: list[ScoreMatrix] = field(default_factory=list)


def plan_layout(g: ScalarGraph, gg: GroupGraph, choice: LoadStoreSplitChoice,
                strategy: str, vec_size: int) -> Layout:
    if strategy not in STRATEGIES:
        raise LoweringError(f"unknown strategy {strategy!r}")
    placements: dict[int, Placement] = {}
    for group in gg.groups:
        if group.kind == LOAD:
            for si, slot in enumerate(choice.slots[group.id]):
                for lane, nid in enumerate(slot):
                    placements[nid] = Placement(("slot", group.id, si), lane)
        elif group.kind == SET:
            for nid in group.members:
                placements[nid] = Placement(("bcast", repr(group.constant)), 0, splat=True)

    store_lane_of: dict[int, int] = {}
    store_run_of: dict[int, tuple] = {}
    runs = []
    for group in gg.by_kind(STORE):
        for si, slot in enumerate(choice.slots[group.id]):
            for ri, (start, nodes) in enumerate(memory_runs(g, list(slot))):
                key = ("run", group.id, si, ri)
                runs.append((key, group.array, start, nodes))
                for lane, s in enumerate(nodes):
                    store_lane_of[s] = lane
                    store_run_of[s] = key

    layout = Layout(placements, store_lane_of, store_run_of, runs, plans=[])
    op_groups = [grp for grp in gg.groups if grp.kind in (OP, REDUCE)]
    for group in sorted(op_groups, key=lambda grp: (grp.depth, grp.id)):
        if group.kind == REDUCE:
            for nid in group.members:
                placements[nid] = Placement(("reduce", nid), 0)
            layout.plans.append(OpPlan(group.id, REDUCE,
                                       [[nid] for nid in group.members], []))
            continue
        members = group.members
        if strategy == "identity" or len(members) <= vec_size:
            subgroups = split_identity(members, vec_size)
        else:
            matrix = compute_score_matrix(g, gg, group, placements, vec_size)
            layout.matrices.append(matrix)
            if strategy == "partitioning":
                subgroups = split_by_partitioning(members, matrix, vec_size)
            else:
                subgroups = split_by_clustering(members, matrix, vec_size)
        lanes_list = []
        for si, sub in enumerate(subgroups):
            lanes = fix_order(g, sub, placements, store_lane_of)
            for m, lane in lanes.items():
                placements[m] = Placement(("op", group.id, si), lane)
            lanes_list.append(lanes)
        layout.plans.append(OpPlan(group.id, OP, subgroups, lanes_list))
    return layout


class _Builder:
    def __init__(self, arrays, width: int):
        self.graph = VectorGraph(arrays, width)
        self.width = width
        self._memo: dict[tuple, int] = {}
        self._next = 0

    def node(self, kind: str, *, memo: bool = True, **kw) -> int:
        key = (kind, tuple(sorted(kw.items())))
        if memo and key in self._memo:
            return self._memo[key]
        nid = self._next
        self._next += 1
        self.graph.add(VectorNode(id=nid, kind=kind, width=self.width, **kw))
        if memo:
            self._memo[key] = nid
        return nid


def _assemble(vb: _Builder, targets: dict[int, tuple[int, int, bool]],
              purpose: str) -> int:
    """Build (or reuse) a vector holding targets[lane] = (src node, src lane,
    splat) at each requested lane.  Mirrors ordering.move_cost exactly."""
    if not targets:
        raise LoweringError(f"empty assembly for {purpose}")
    w = vb.width
    order: list[int] = []
    for lane in sorted(targets):
        src = targets[lane][0]
        if src not in order:
            order.append(src)

    real = {src for src, _, sp in targets.values() if not sp}
    if not real:
        splats = [src for src in order]
        if len(splats) == 1:
            return splats[0]
    elif len(order) == 1:
        src = order[0]
        if all(sp or sl == lane for lane, (s, sl, sp) in targets.items()):
            return src

    if len(order) == 1:
        src = order[0]
        pattern = tuple(targets[lane][1] if lane in targets else None for lane in range(w))
        kind = PERMUTE if len(targets) == w else EXTRACT
        return vb.node(kind, pattern=pattern, inputs=(src,))

    acc = order[0]
    merged = {order[0]}
    first = True
    for nxt in order[1:]:
        pattern: list = [None] * w
        for lane, (src, srclane, sp) in targets.items():
            if src == nxt:
                pattern[lane] = (1, srclane)
            elif src in merged:
                pattern[lane] = (0, srclane if first else lane)
        acc = vb.node(MERGE, pattern=tuple(pattern), inputs=(acc, nxt))
        merged.add(nxt)
        first = False
    return acc


def materialize(g: ScalarGraph, gg: GroupGraph, choice: LoadStoreSplitChoice,
                layout: Layout, vec_size: int) -> VectorGraph:
    vb = _Builder(list(g.arrays.values()), vec_size)
    vecmap: dict[tuple, int] = {}

    def resolve(pl: Placement) -> tuple[int, int, bool]:
        if pl.vec not in vecmap:
            if pl.vec[0] != "bcast":
                raise LoweringError(f"vector {pl.vec} used before it is built")
            const = float(pl.vec[1])
            vecmap[pl.vec] = vb.node(BROADCAST, constant=const)
        return (vecmap[pl.vec], pl.lane, pl.splat)

    for group in gg.by_kind(LOAD):
        for si, slot in enumerate(choice.slots[group.id]):
            key = ("slot", group.id, si)
            covers = fetch_covers(g, list(slot), vec_size)
            loads = [vb.node(VLOAD, array=group.array, start=start, count=count)
                     for start, count, _ in covers]
            if len(covers) == 1 and covers[0][1] == len(slot):
                vecmap[key] = loads[0]
                continue
            targets = {}
            for (start, _, nodes), load in zip(covers, loads):
                for nid in nodes:
                    targets[slot.index(nid)] = (load, g.nodes[nid].index - start, False)
            vecmap[key] = _assemble(vb, targets, f"load slot {key}")

    for plan in layout.plans:
        group = gg.groups[plan.group_id]
        if plan.kind == REDUCE:
            for nid in plan.subgroups:
                rid = nid[0]
                tails = [resolve(layout.placements[t]) for t in g.nodes[rid].inputs]
                count = len(tails)
                src_nodes = {t[0] for t in tails}
                tail_lanes = sorted(t[1] for t in tails)
                if len(src_nodes) == 1 and tail_lanes == list(range(count)):
                    vec = tails[0][0]
                else:
                    ordered = sorted(tails, key=lambda t: (t[0], t[1]))
                    vec = _assemble(vb, {i: t for i, t in enumerate(ordered)},
                                    f"reduce {rid}")
                vecmap[("reduce", rid)] = vb.node(
                    VREDUCE, opcode=g.nodes[rid].opcode, count=count, inputs=(vec,))
            continue
        for si, (sub, lanes) in enumerate(zip(plan.subgroups, plan.lanes)):
            key = ("op", plan.group_id, si)
            arity = max(len(g.nodes[m].inputs) for m in sub)
            operands = []
            for pos in range(arity):
                targets = {}
                for m in sub:
                    inputs = g.nodes[m].inputs
                    if pos < len(inputs):
                        targets[lanes[m]] = resolve(layout.placements[inputs[pos]])
                operands.append(_assemble(vb, targets, f"{key} arg{pos}"))
            if arity == 1:
                vecmap[key] = operands[0]  # copies stay invisible
            else:
                vecmap[key] = vb.node(VOP, opcode=group.opcode, inputs=tuple(operands))

    for key, array, start, nodes in layout.runs:
        targets = {}
        for lane, s in enumerate(nodes):
            targets[lane] = resolve(layout.placements[g.nodes[s].inputs[0]])
        src = _assemble(vb, targets, f"store {key}")
        vb.node(VSTORE, memo=False, array=array, start=start, count=len(nodes),
                inputs=(src,))
    return vb.graph


def vectorize(g: ScalarGraph, gg: GroupGraph, choice: LoadStoreSplitChoice,
              strategy: str, vec_size: int) -> tuple[VectorGraph, Layout]:
    layout = plan_layout(g, gg, choice, strategy, vec_size)
    return materialize(g, gg, choice, layout, vec_size), layout
