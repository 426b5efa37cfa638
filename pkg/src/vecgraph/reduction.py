"""Rewrite serial chains of one commutative operation into parallel partials.

A chain like ``(((a+b)+c)+d)+e`` forces sequential evaluation.  When it is
longer than the vector width we split its operands round-robin over
``vec_size`` independent sub-chains and join them with a single reduce
node, trading association order (and bit-exactness on arbitrary floats)
for lane parallelism.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

from .scalar_ir import OP, REDUCE, ScalarGraph, ScalarNode


@dataclass(frozen=True)
class ReductionPath:
    opcode: str
    nodes: tuple[int, ...]  # chain order, each node consumes the previous one


def _sole_chain_pred(graph: ScalarGraph, users, nid: int, claimed: set[int]) -> list[int]:
    """Inputs of nid that are same-opcode ops consumed only by nid (once)."""
    node = graph.nodes[nid]
    out = []
    for inp in dict.fromkeys(node.inputs):
        cand = graph.nodes[inp]
        if cand.kind != OP or cand.opcode != node.opcode or inp in claimed:
            continue
        if users[inp] == [nid] and node.inputs.count(inp) == 1:
            out.append(inp)
    return out


def find_reduction_paths(graph: ScalarGraph, vec_size: int) -> list[ReductionPath]:
    """Maximal node-disjoint chains of one commutative opcode, each strictly
    longer than vec_size nodes.

    Chains are discovered backwards from their last node (the one whose
    consumer leaves the chain).  A step extends through the unique
    same-opcode input that nothing else consumes; at a symmetric join
    (several candidates equally deep) the chain stops, which keeps the
    accumulation spine and leaves balanced operand trees as chain operands.
    """
    users = graph.users()
    depth = graph.depth_from_leaves()
    claimed: set[int] = set()
    paths = []
    for nid in sorted(graph.nodes):
        node = graph.nodes[nid]
        if node.kind != OP or not node.commutative or nid in claimed:
            continue
        consumers = users[nid]
        extends_forward = (
            len(consumers) == 1
            and graph.nodes[consumers[0]].kind == OP
            and graph.nodes[consumers[0]].opcode == node.opcode
            and graph.nodes[consumers[0]].inputs.count(nid) == 1
        )
        if extends_forward:
            continue  # interior of some chain, not its end
        chain = [nid]
        while True:
            cands = _sole_chain_pred(graph, users, chain[-1], claimed)
            if len(cands) == 1:
                chain.append(cands[0])
            elif len(cands) >= 2:
                cands.sort(key=lambda c: (-depth[c], c))
                if depth[cands[0]] > depth[cands[1]]:
                    chain.append(cands[0])
                else:
                    break
            else:
                break
        if len(chain) > vec_size:
            chain.reverse()
            claimed.update(chain)
            paths.append(ReductionPath(node.opcode, tuple(chain)))
    return paths


def _chain_operands(graph: ScalarGraph, path: ReductionPath) -> list[int]:
    first = graph.nodes[path.nodes[0]]
    operands = list(first.inputs)
    for prev, nid in zip(path.nodes, path.nodes[1:]):
        node = graph.nodes[nid]
        others = [i for i in node.inputs if i != prev]
        if len(others) != len(node.inputs) - 1:
            raise ValueError(f"chain node {nid} does not consume {prev} exactly once")
        operands.extend(others)
    return operands


def apply_reduction(graph: ScalarGraph, path: ReductionPath, vec_size: int) -> ScalarGraph:
    """Replace the chain with vec_size round-robin sub-chains plus one reduce
    node feeding the original consumers.  Operand multiset is preserved."""
    if vec_size < 2:
        raise ValueError("vec_size must be >= 2")
    for nid in path.nodes:
        if nid not in graph.nodes or graph.nodes[nid].opcode != path.opcode:
            raise ValueError(f"stale reduction path: node {nid} missing or rewritten")
    operands = _chain_operands(graph, path)
    buckets: list[list[int]] = [[] for _ in range(vec_size)]
    for j, operand in enumerate(operands):
        buckets[j % vec_size].append(operand)

    out = ScalarGraph(list(graph.arrays.values()))
    removed = set(path.nodes)
    next_id = max(graph.nodes) + 1
    for nid in sorted(graph.nodes):
        if nid not in removed:
            out.add(graph.nodes[nid])

    tails = []
    for bucket in buckets:
        if not bucket:
            continue
        tail = bucket[0]
        for operand in bucket[1:]:
            out.add(ScalarNode(id=next_id, kind=OP, opcode=path.opcode,
                               inputs=(tail, operand)))
            tail = next_id
            next_id += 1
        tails.append(tail)

    reduce_id = next_id
    out.add(ScalarNode(id=reduce_id, kind=REDUCE, opcode=path.opcode,
                       inputs=tuple(tails)))

    last = path.nodes[-1]
    rewired = ScalarGraph(list(out.arrays.values()))
    for nid in sorted(out.nodes):
        node = out.nodes[nid]
        if any(i == last for i in node.inputs):
            node = replace(node, inputs=tuple(reduce_id if i == last else i
                                              for i in node.inputs))
        rewired.add(node)
    rewired.validate()
    return rewired


def apply_all_reductions(graph: ScalarGraph, vec_size: int) -> ScalarGraph:
    """Rewrite every disjoint maximal chain; identity when none are found."""
    for path in find_reduction_paths(graph, vec_size):
        graph = apply_reduction(graph, path, vec_size)
    return graph
