"""Register-pressure-aware list scheduling and stack-traffic simulation.

Works on any DAG whose nodes expose ``.inputs`` (both scalar and vector
graphs qualify).  Scheduling runs in two stages: disconnected components
are scheduled separately (so unrelated chains never interleave), then a
ready list is drained picking the cheapest instruction each step.  The
cost of issuing an instruction is +1 if its result must be kept, minus
the fraction of each operand register it gets closer to freeing, so an
instruction that kills its operands scores negative and goes first.

``simulate_stack_accesses`` replays an order against an ideal allocator
with K registers and farthest-next-use eviction, charging one access per
spill store and one per reload.
"""
from __future__ import annotations

from .scalar_ir import KernelError


def _users(dag) -> dict[int, list[int]]:
    users: dict[int, list[int]] = {nid: [] for nid in dag.nodes}
    for nid in sorted(dag.nodes):
        for inp in dict.fromkeys(dag.nodes[nid].inputs):
            users[inp].append(nid)
    return users


def connected_components(dag) -> list[list[int]]:
    """Weakly connected components, ordered by smallest contained id."""
    users = _users(dag)
    seen: set[int] = set()
    components = []
    for start in sorted(dag.nodes):
        if start in seen:
            continue
        comp = []
        stack = [start]
        seen.add(start)
        while stack:
            nid = stack.pop()
            comp.append(nid)
            for nb in list(dag.nodes[nid].inputs) + users[nid]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        components.append(sorted(comp))
    return components


def distance_from_sinks(dag) -> dict[int, int]:
    users = _users(dag)
    dist: dict[int, int] = {}
    for nid in reversed(dag.topo_order() if hasattr(dag, "topo_order")
                        else sorted(dag.nodes)):
        succ = users[nid]
        dist[nid] = 0 if not succ else 1 + max(dist[s] for s in succ)
    return dist


def sched_cost(dag, users, nid: int, done: set[int]) -> float:
    """Cost of issuing nid next: +1 to hold a live result, minus 1/k for
    each operand whose k remaining consumers include this one."""
    cost = 0.0
    if users[nid]:
        cost += 1.0
    for p in dict.fromkeys(dag.nodes[nid].inputs):
        counter = sum(1 for sp in users[p] if sp not in done)
        cost -= 1.0 / counter
    return cost


def _greedy_order(dag, sink_distance_first: bool) -> list[int]:
    users = _users(dag)
    invdepth = distance_from_sinks(dag)
    tie = (lambda nid: invdepth[nid]) if sink_distance_first else (lambda nid: -invdepth[nid])
    order: list[int] = []
    for comp in connected_components(dag):
        in_comp = set(comp)
        pending = {nid: len(dag.nodes[nid].inputs) for nid in comp}
        ready = sorted(nid for nid, c in pending.items() if c == 0)
        done: set[int] = set()
        while ready:
            ready.sort(key=lambda nid: (sched_cost(dag, users, nid, done),
                                        tie(nid), nid))
            nid = ready.pop(0)
            done.add(nid)
            order.append(nid)
            for u in users[nid]:
                if u in in_comp:
                    pending[u] -= 1
                    if pending[u] == 0:
                        ready.append(u)
        if len(done) != len(comp):
            raise KernelError("scheduling left unreachable instructions")
    return order


def schedule(dag, registers: int | None = None) -> list[int]:
    """Topological order chosen to minimize live values: per component,
    repeatedly issue the ready instruction with the lowest cost, breaking
    ties by distance to the stores and then by id.

    The tie direction cuts both ways on real graphs, so when the register
    count is known both directions are simulated along with the incoming
    order and the cheapest wins: reordering then never loses to not
    reordering.  Without a register count the upstream-first order is
    returned (loads surface in consumption order)."""
    primary = _greedy_order(dag, sink_distance_first=False)
    if registers is None:
        return primary
    candidates = [primary, _greedy_order(dag, sink_distance_first=True),
                  dag.topo_order()]
    costed = [(simulate_stack_accesses(dag, order, registers), i, order)
              for i, order in enumerate(candidates)]
    return min(costed)[2]


def simulate_stack_accesses(dag, order: list[int], registers: int) -> int:
    """Stack traffic (spill stores + reloads) of executing ``order`` with
    ``registers`` registers under farthest-next-use (Belady) eviction.
    Values are immutable, so re-evicting an already spilled value is free.
    """
    max_arity = max((len(set(dag.nodes[n].inputs)) for n in order), default=0)
    if registers < max_arity + 1:
        raise KernelError(f"need at least {max_arity + 1} registers")
    users = _users(dag)
    position = {nid: i for i, nid in enumerate(order)}
    next_uses: dict[int, list[int]] = {
        nid: sorted((position[u] for u in users[nid]), reverse=True)
        for nid in order
    }

    in_reg: set[int] = set()
    spilled: set[int] = set()
    accesses = 0

    def next_use(nid: int) -> int:
        uses = next_uses[nid]
        return uses[-1] if uses else -1

    def evict_one(pinned: set[int]) -> None:
        nonlocal accesses
        victims = sorted(in_reg - pinned, key=lambda v: (-next_use(v), v))
        victim = victims[0]
        in_reg.discard(victim)
        if victim not in spilled:
            spilled.add(victim)
            accesses += 1  # spill store

    def make_room(pinned: set[int]) -> None:
        while len(in_reg) >= registers:
            evict_one(pinned)

    for step, nid in enumerate(order):
        node = dag.nodes[nid]
        operands = list(dict.fromkeys(node.inputs))
        for op in operands:
            if op not in in_reg:  # reload
                make_room(set(operands) | {op})
                in_reg.add(op)
                accesses += 1
        for op in operands:
            uses = next_uses[op]
            while uses and uses[-1] <= step:
                uses.pop()
            if not uses:
                in_reg.discard(op)  # dead after this instruction
        produces = bool(users[nid]) or node.kind not in ("store", "vstore")
        if node.kind in ("store", "vstore"):
            produces = False
        if produces:
            make_room(set(operands))
            in_reg.add(nid)
            if not users[nid]:
                in_reg.discard(nid)  # dead-on-arrival result
    return accesses
