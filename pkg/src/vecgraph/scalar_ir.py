"""Scalar instruction graphs for fully unrolled static kernels.

A static kernel (fixed trip counts, straight-line after unrolling) is
represented as a DAG of four node kinds: ``set`` (constant), ``load``,
``op`` (arithmetic) and ``store``.  Values flow from loads/sets to stores;
local variables never appear as nodes, so copies are invisible.  A fifth
kind, ``reduce``, is introduced by the reduction rewrite and folds its
inputs with one commutative opcode.

Graphs are immutable by convention: every transformation returns a new
graph and never mutates its argument, so graphs can be shared freely
across concurrent pipeline evaluations.
"""
from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field, replace

SET = "set"
LOAD = "load"
OP = "op"
STORE = "store"
REDUCE = "reduce"

COMMUTATIVE = {"add", "mul"}

OPCODES = {
    "add": lambda a, b: a + b,
    "sub": lambda a, b: a - b,
    "mul": lambda a, b: a * b,
    "div": lambda a, b: a / b,
}


class KernelError(ValueError):
    """Raised for malformed kernels: bad indices, unknown opcodes, etc."""


@dataclass(frozen=True)
class ScalarNode:
    id: int
    kind: str
    opcode: str | None = None
    array: str | None = None
    index: int | None = None
    constant: float | None = None
    inputs: tuple[int, ...] = ()

    @property
    def commutative(self) -> bool:
        return self.opcode in COMMUTATIVE


@dataclass(frozen=True)
class ArrayDecl:
    name: str
    role: str  # "input" | "output" | "inout"
    length: int


class ScalarGraph:
    def __init__(self, arrays: list[ArrayDecl]):
        self.arrays: dict[str, ArrayDecl] = {a.name: a for a in arrays}
        self.nodes: dict[int, ScalarNode] = {}
        self._users: dict[int, list[int]] | None = None
        self._depths: dict[int, int] | None = None

    def add(self, node: ScalarNode) -> None:
        if node.id in self.nodes:
            raise KernelError(f"duplicate node id {node.id}")
        self.nodes[node.id] = node
        self._users = None
        self._depths = None

    def users(self) -> dict[int, list[int]]:
        """Consumer lists, each sorted ascending; one entry per edge."""
        if self._users is None:
            users: dict[int, list[int]] = {nid: [] for nid in self.nodes}
            for nid in sorted(self.nodes):
                for inp in self.nodes[nid].inputs:
                    users[inp].append(nid)
            self._users = users
        return self._users

    def topo_order(self) -> list[int]:
        """Deterministic topological order (ready nodes by ascending id)."""
        users = self.users()
        pending = {nid: len(self.nodes[nid].inputs) for nid in self.nodes}
        ready = [nid for nid, n in pending.items() if n == 0]
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
            raise KernelError("graph contains a cycle")
        return order

    def depth_from_leaves(self) -> dict[int, int]:
        """Longest distance to the load/set frontier; 0 for loads and sets."""
        if self._depths is None:
            depths: dict[int, int] = {}
            for nid in self.topo_order():
                node = self.nodes[nid]
                if node.kind in (LOAD, SET):
                    depths[nid] = 0
                else:
                    depths[nid] = 1 + max(depths[i] for i in node.inputs)
            self._depths = depths
        return self._depths

    def census(self) -> dict[str, int]:
        counts = {"loads": 0, "stores": 0, "operations": 0}
        for node in self.nodes.values():
            if node.kind == LOAD:
                counts["loads"] += 1
            elif node.kind == STORE:
                counts["stores"] += 1
            else:
                counts["operations"] += 1
        return counts

    def validate(self) -> None:
        for nid, node in self.nodes.items():
            for inp in node.inputs:
                if inp not in self.nodes:
                    raise KernelError(f"node {nid} references missing node {inp}")
            if node.kind in (LOAD, STORE):
                if node.array is None or node.index is None:
                    raise KernelError(f"node {nid}: {node.kind} needs array and index")
                decl = self.arrays.get(node.array)
                if decl is None:
                    raise KernelError(f"node {nid}: unknown array {node.array!r}")
                if not 0 <= node.index < decl.length:
                    raise KernelError(
                        f"node {nid}: index {node.index} out of bounds for "
                        f"{node.array}[{decl.length}]"
                    )
            if node.kind in (SET, OP) and (node.array is not None or node.index is not None):
                raise KernelError(f"node {nid}: {node.kind} must not carry array/index")
            arity = len(node.inputs)
            if node.kind in (SET, LOAD) and arity != 0:
                raise KernelError(f"node {nid}: {node.kind} takes no inputs")
            if node.kind == OP and arity not in (1, 2):
                raise KernelError(f"node {nid}: op takes 1 or 2 inputs, got {arity}")
            if node.kind == STORE and arity != 1:
                raise KernelError(f"node {nid}: store takes exactly 1 input")
            if node.kind in (OP, REDUCE) and node.opcode not in OPCODES:
                raise KernelError(f"node {nid}: unknown opcode {node.opcode!r}")
        self.topo_order()  # raises on cycles

    def to_json(self) -> str:
        doc = {
            "arrays": [
                {"name": a.name, "role": a.role, "length": a.length}
                for a in sorted(self.arrays.values(), key=lambda a: a.name)
            ],
            "nodes": [
                {
                    "id": n.id,
                    "kind": n.kind,
                    "opcode": n.opcode,
                    "array": n.array,
                    "index": n.index,
                    "constant": n.constant,
                    "inputs": list(n.inputs),
                }
                for n in (self.nodes[i] for i in sorted(self.nodes))
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# Building


class _Pending:
    """Constant placeholder; materialized as a set node only on real use."""

    __slots__ = ("constant",)

    def __init__(self, constant: float):
        self.constant = constant


Value = "int | _Pending"


class GraphBuilder:
    """Builds a ScalarGraph statement by statement.

    Memory writes are tracked per element: a load that follows a store to
    the same element is wired to the stored value instead of memory
    (store-to-load forwarding), and only the final value written to each
    element materializes as a store node.  Accumulating writes therefore
    desugar into load + op + store with last-writer-wins semantics.

    A constant 0 feeding an add folds away instead of becoming a set node,
    which keeps accumulator chains clean.
    """

    def __init__(self, arrays: list[ArrayDecl]):
        self.graph = ScalarGraph(arrays)
        self._next_id = 0
        self._written: dict[tuple[str, int], int] = {}
        self._write_order: list[tuple[str, int]] = []
        self._sets: dict[float, int] = {}

    def _new(self, **kw) -> int:
        nid = self._next_id
        self._next_id += 1
        self.graph.add(ScalarNode(id=nid, **kw))
        return nid

    def _check_index(self, array: str, index: int) -> None:
        decl = self.graph.arrays.get(array)
        if decl is None:
            raise KernelError(f"unknown array {array!r}")
        if not isinstance(index, int) or not 0 <= index < decl.length:
            raise KernelError(f"index {index!r} out of bounds for {array}[{decl.length}]")

    def const(self, value: float) -> _Pending:
        return _Pending(float(value))

    def _resolve(self, v) -> int:
        if isinstance(v, _Pending):
            if v.constant not in self._sets:
                self._sets[v.constant] = self._new(kind=SET, constant=v.constant)
            return self._sets[v.constant]
        return v

    def load(self, array: str, index: int) -> int:
        self._check_index(array, index)
        if (array, index) in self._written:
            return self._written[(array, index)]
        return self._new(kind=LOAD, array=array, index=index)

    def op(self, opcode: str, a, b=None) -> int:
        if opcode not in OPCODES:
            raise KernelError(f"unknown opcode {opcode!r}")
        if b is None:
            return self._new(kind=OP, opcode=opcode, inputs=(self._resolve(a),))
        if opcode == "add":
            if isinstance(a, _Pending) and a.constant == 0.0:
                return b if not isinstance(b, _Pending) else self._resolve(b)
            if isinstance(b, _Pending) and b.constant == 0.0:
                return a if not isinstance(a, _Pending) else self._resolve(a)
        return self._new(kind=OP, opcode=opcode, inputs=(self._resolve(a), self._resolve(b)))

    def store(self, array: str, index: int, value) -> None:
        self._check_index(array, index)
        if (array, index) not in self._written:
            self._write_order.append((array, index))
        self._written[(array, index)] = self._resolve(value)

    def finish(self) -> ScalarGraph:
        for array, index in self._write_order:
            self._new(kind=STORE, array=array, index=index,
                      inputs=(self._written[(array, index)],))
        self.graph.validate()
        return self.graph


# ---------------------------------------------------------------------------
# Normalization and interpretation

MemoryImage = dict[str, list[float]]


def dedup(graph: ScalarGraph) -> ScalarGraph:
    """Merge equivalent nodes: same kind/opcode/array/index/constant and same
    inputs, ignoring input order for commutative opcodes.  The lowest id of
    each equivalence class survives and all consumers are rewired to it."""
    out = ScalarGraph(list(graph.arrays.values()))
    canon: dict[tuple, int] = {}
    remap: dict[int, int] = {}
    for nid in graph.topo_order():
        node = graph.nodes[nid]
        inputs = tuple(remap[i] for i in node.inputs)
        key_inputs = tuple(sorted(inputs)) if node.kind == OP and node.commutative else inputs
        key = (node.kind, node.opcode, node.array, node.index, node.constant, key_inputs)
        if key in canon:
            remap[nid] = canon[key]
            continue
        canon[key] = nid
        remap[nid] = nid
        out.add(replace(node, inputs=inputs))
    return out


def _apply(opcode: str, values: list[float]) -> float:
    if len(values) == 1:
        return values[0]
    fn = OPCODES[opcode]
    acc = values[0]
    for v in values[1:]:
        acc = fn(acc, v)
    return acc


def interpret_scalar(graph: ScalarGraph, mem: MemoryImage,
                     order: list[int] | None = None) -> MemoryImage:
    """Evaluate the graph over a memory image and return the new image.

    NaNs propagate through arithmetic; out-of-range element accesses raise.
    """
    result = {name: list(buf) for name, buf in mem.items()}
    for name, decl in graph.arrays.items():
        if name not in result:
            raise KernelError(f"memory image missing array {name!r}")
        if len(result[name]) != decl.length:
            raise KernelError(f"array {name!r} has wrong length")
    values: dict[int, float] = {}
    for nid in order if order is not None else graph.topo_order():
        node = graph.nodes[nid]
        if node.kind == SET:
            values[nid] = node.constant
        elif node.kind == LOAD:
            if not 0 <= node.index < len(result[node.array]):
                raise KernelError(f"load index {node.index} out of range")
            values[nid] = result[node.array][node.index]
        elif node.kind in (OP, REDUCE):
            values[nid] = _apply(node.opcode, [values[i] for i in node.inputs])
        elif node.kind == STORE:
            if not 0 <= node.index < len(result[node.array]):
                raise KernelError(f"store index {node.index} out of range")
            result[node.array][node.index] = values[node.inputs[0]]
        else:
            raise KernelError(f"unknown node kind {node.kind!r}")
    return result
