"""Vector instruction graphs: node types, interpreter, census, serialization.

Lanes carry doubles or ``None`` for never-written positions.  Undefined
lanes flow silently through arithmetic and shuffles (partial vectors
compute garbage in their tail lanes exactly like real hardware) but it is
a hard error for one to reach memory through a store.

Patterns: permute/extract carry one source lane per output lane
(``None`` = don't care); merge carries ``(side, lane)`` pairs selecting
from either of its two inputs per output lane.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from .scalar_ir import OPCODES, ArrayDecl, KernelError

VLOAD = "vload"
VSTORE = "vstore"
VOP = "vop"
BROADCAST = "broadcast"
PERMUTE = "permute"
EXTRACT = "extract"
MERGE = "merge"
VREDUCE = "vreduce"

TRANSFORM_KINDS = {PERMUTE, EXTRACT, MERGE}


class UninitializedLaneError(RuntimeError):
    pass


@dataclass(frozen=True)
class VectorNode:
    id: int
    kind: str
    width: int
    opcode: str | None = None
    array: str | None = None
    start: int | None = None
    count: int | None = None
    constant: float | None = None
    pattern: tuple | None = None
    inputs: tuple[int, ...] = ()


class VectorGraph:
    def __init__(self, arrays: list[ArrayDecl], width: int):
        self.arrays: dict[str, ArrayDecl] = {a.name: a for a in arrays}
        self.width = width
        self.nodes: dict[int, VectorNode] = {}

    def add(self, node: VectorNode) -> None:
        self.nodes[node.id] = node

    def users(self) -> dict[int, list[int]]:
        users: dict[int, list[int]] = {nid: [] for nid in self.nodes}
        for nid in sorted(self.nodes):
            for inp in self.nodes[nid].inputs:
                users[inp].append(nid)
        return users

    def topo_order(self) -> list[int]:
        users = self.users()
        pending = {nid: len(self.nodes[nid].inputs) for nid in self.nodes}
        ready = [nid for nid, c in pending.items() if c == 0]
        heapq.heapify(ready)
        order = []
        while ready:
            nid = heapq.heappop(ready)
            order.append(nid)
            for u in users[nid]:
                pending[u] -= 1
                if pending[u] == 0:
                    heapq.heappush(ready, u)
        if len(order) != len(self.nodes):
            raise KernelError("vector graph contains a cycle")
        return order

    def census(self) -> dict[str, int]:
        counts = {"loads": 0, "stores": 0, "operations": 0, "transforms": 0}
        for node in self.nodes.values():
            if node.kind == VLOAD:
                counts["loads"] += 1
            elif node.kind == VSTORE:
                counts["stores"] += 1
            elif node.kind in TRANSFORM_KINDS:
                counts["transforms"] += 1
            else:
                counts["operations"] += 1
        return counts

    def serialize(self) -> str:
        """One node per line: id kind args inputs."""
        lines = []
        for nid in sorted(self.nodes):
            n = self.nodes[nid]
            args = []
            if n.opcode is not None:
                args.append(n.opcode)
            if n.array is not None:
                args.append(f"{n.array}+{n.start}x{n.count}")
            if n.constant is not None:
                args.append(repr(n.constant))
            if n.pattern is not None:
                args.append("[" + ",".join(_pat_str(p) for p in n.pattern) + "]")
            ins = ",".join(str(i) for i in n.inputs)
            lines.append(f"{n.id} {n.kind} {' '.join(args) or '-'} {ins or '-'}")
        return "\n".join(lines) + ("\n" if lines else "")


def _pat_str(p) -> str:
    if p is None:
        return "_"
    if isinstance(p, tuple):
        return f"{'ab'[p[0]]}{p[1]}"
    return str(p)


def interpret_vector(vg: VectorGraph, mem: dict[str, list[float]],
                     order: list[int] | None = None) -> dict[str, list[float]]:
    result = {name: list(buf) for name, buf in mem.items()}
    for name, decl in vg.arrays.items():
        if name not in result or len(result[name]) != decl.length:
            raise KernelError(f"memory image does not match array {name!r}")
    w = vg.width
    lanes: dict[int, list] = {}
    for nid in order if order is not None else vg.topo_order():
        n = vg.nodes[nid]
        if n.kind == VLOAD:
            buf = result[n.array]
            if n.start < 0 or n.start + n.count > len(buf):
                raise KernelError(f"vload out of range: {n.array}[{n.start}:{n.start+n.count}]")
            lanes[nid] = [buf[n.start + i] if i < n.count else None for i in range(w)]
        elif n.kind == BROADCAST:
            lanes[nid] = [n.constant] * w
        elif n.kind == VOP:
            ins = [lanes[i] for i in n.inputs]
            if len(ins) == 1:
                lanes[nid] = list(ins[0])
            else:
                fn = OPCODES[n.opcode]
                lanes[nid] = [
                    fn(a, b) if a is not None and b is not None else None
                    for a, b in zip(ins[0], ins[1])
                ]
        elif n.kind in (PERMUTE, EXTRACT):
            src = lanes[n.inputs[0]]
            lanes[nid] = [src[p] if p is not None else None for p in n.pattern]
        elif n.kind == MERGE:
            a, b = lanes[n.inputs[0]], lanes[n.inputs[1]]
            lanes[nid] = [
                (a if p[0] == 0 else b)[p[1]] if p is not None else None
                for p in n.pattern
            ]
        elif n.kind == VREDUCE:
            src = lanes[n.inputs[0]]
            vals = src[:n.count]
            if any(v is None for v in vals):
                raise UninitializedLaneError(f"reduce {nid} folds an undefined lane")
            fn = OPCODES[n.opcode]
            acc = vals[0]
            for v in vals[1:]:
                acc = fn(acc, v)
            lanes[nid] = [acc] + [None] * (w - 1)
        elif n.kind == VSTORE:
            src = lanes[n.inputs[0]]
            buf = result[n.array]
            if n.start < 0 or n.start + n.count > len(buf):
                raise KernelError(f"vstore out of range: {n.array}[{n.start}:{n.start+n.count}]")
            for i in range(n.count):
                if src[i] is None:
                    raise UninitializedLaneError(
                        f"store {nid} writes undefined lane {i} to {n.array}[{n.start + i}]")
                buf[n.start + i] = src[i]
        else:
            raise KernelError(f"unknown vector node kind {n.kind!r}")
    return result
