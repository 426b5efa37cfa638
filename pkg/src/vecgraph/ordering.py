"""Fix the lane order inside each operation sub-group.

Loads and stores have their lanes pinned by memory contiguity; operations
are free, and a bad order forces extract/permute/merge instructions to
line operands up.  Each member collects the lanes its fixed neighbours
would like it at (one per argument source, one per consuming store).
Members whose wishes agree on a single reachable lane are placed there
first, most-constrained first; everyone else needs a data move no matter
what and simply fills the vacancies, preferring any lane that still
satisfies one wish.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from .layout import Placement
from .scalar_ir import STORE, ScalarGraph


@dataclass(frozen=True)
class DataMove:
    kind: str  # permute | extract | merge
    sources: tuple
    pattern: tuple
    purpose: str


def move_cost(targets: dict[int, Placement]) -> int:
    """Data moves needed to build one vector holding `targets`: value for
    output lane L comes from targets[L].  One permute fixes any single
    misaligned source; k sources need k-1 merges; broadcasts align free."""
    real = {pl.vec for pl in targets.values() if not pl.splat}
    splat = {pl.vec for pl in targets.values() if pl.splat}
    if not real:
        return max(len(splat) - 1, 0)
    sources = real | splat
    if len(sources) == 1:
        aligned = all(pl.splat or pl.lane == lane for lane, pl in targets.items())
        return 0 if aligned else 1
    return len(sources) - 1


def _wishes(graph: ScalarGraph, member: int, placements: dict[int, Placement],
            store_lane_of: dict[int, int], users: dict[int, list[int]]) -> list[int]:
    raw = []
    for inp in graph.nodes[member].inputs:
        pl = placements[inp]
        if not pl.splat:
            raw.append(pl.lane)
    for u in users[member]:
        if graph.nodes[u].kind == STORE and u in store_lane_of:
            raw.append(store_lane_of[u])
    return raw


def _cost_model(graph: ScalarGraph, members: list[int],
                placements: dict[int, Placement],
                store_lane_of: dict[int, int],
                store_run_of: dict[int, tuple] | None):
    """Precompiled per-member source/store data, and a fast evaluator of a
    lane assignment's move count over it."""
    users = graph.users()
    arity = max(len(graph.nodes[m].inputs) for m in members)
    args = []  # per position: list of (member index, vec, lane, splat)
    for pos in range(arity):
        column = []
        for mi, m in enumerate(members):
            inputs = graph.nodes[m].inputs
            if pos < len(inputs):
                pl = placements[inputs[pos]]
                column.append((mi, pl.vec, pl.lane, pl.splat))
        args.append(column)
    run_cols: dict[tuple, list[tuple[int, int]]] = {}  # run -> (member idx, run lane)
    for mi, m in enumerate(members):
        for u in users[m]:
            if graph.nodes[u].kind == STORE and u in store_lane_of:
                run = store_run_of[u] if store_run_of else ("run",)
                run_cols.setdefault(run, []).append((mi, store_lane_of[u]))

    def cost(lane_of: list[int]) -> int:
        total = 0
        for column in args:
            sources = set()
            aligned = True
            has_real = False
            for mi, vec, lane, splat in column:
                sources.add(vec)
                if not splat:
                    has_real = True
                    if lane != lane_of[mi]:
                        aligned = False
            if len(sources) > 1:
                total += len(sources) - 1
            elif has_real and not aligned:
                total += 1
        for column in run_cols.values():
            if any(lane_of[mi] != runlane for mi, runlane in column):
                total += 1
        return total

    return cost


def fix_order(graph: ScalarGraph, members: list[int],
              placements: dict[int, Placement],
              store_lane_of: dict[int, int],
              store_run_of: dict[int, tuple] | None = None) -> dict[int, int]:
    """Assign each member a lane in [0, len(members)).

    If a zero-move assignment exists (every member has exactly one wish and
    the wishes are pairwise distinct) it is found.  Wish-driven placement
    is polished exactly for small remainders and by pairwise swaps
    otherwise, because operand alignment only pays off when a whole
    argument vector lines up, which per-member wishes cannot see.
    """
    k = len(members)
    users = graph.users()
    raw = {m: _wishes(graph, m, placements, store_lane_of, users) for m in members}
    wishes = {m: sorted(set(w for w in raw[m])) for m in members}

    def conflicts(m: int) -> int:
        mine = set(wishes[m])
        clash = sum(1 for other in members if other != m and mine & set(wishes[other]))
        return (len(mine) - 1) + clash

    order = sorted(members, key=lambda m: (-conflicts(m), m))
    lanes: dict[int, int] = {}
    taken: set[int] = set()
    for m in order:  # conflict-free placements first: these avoid any move
        ws = wishes[m]
        if len(ws) == 1 and ws[0] < k and ws[0] not in taken:
            lanes[m] = ws[0]
            taken.add(ws[0])

    evaluate = _cost_model(graph, members, placements, store_lane_of, store_run_of)
    index = {m: i for i, m in enumerate(members)}

    def lane_vec() -> list[int]:
        return [lanes[m] for m in members]

    remainder = [m for m in order if m not in lanes]
    vacant = sorted(p for p in range(k) if p not in taken)
    if 0 < len(remainder) <= 4:
        # few enough to place exactly; a lane helps only when the whole
        # argument vector lines up, which per-member greed cannot judge
        best = None
        for perm in itertools.permutations(vacant):
            for m, p in zip(remainder, perm):
                lanes[m] = p
            c = evaluate(lane_vec())
            if best is None or c < best[0]:
                best = (c, dict(lanes))
        lanes = best[1]
    else:
        for m in remainder:  # prefer a lane that satisfies some wish
            prefs = [w for w in wishes[m] if w < k and w not in taken]
            if prefs:
                prefs.sort(key=lambda w: (-raw[m].count(w), w))
                pick = prefs[0]
            else:
                pick = min(p for p in range(k) if p not in taken)
            lanes[m] = pick
            taken.add(pick)

    vec = lane_vec()
    cost = evaluate(vec)
    while cost > 0:
        improved = False
        for i in range(k):
            for j in range(i + 1, k):
                vec[i], vec[j] = vec[j], vec[i]
                c = evaluate(vec)
                if c < cost:
                    cost = c
                    improved = True
                else:
                    vec[i], vec[j] = vec[j], vec[i]
        if not improved:
            break
    return {m: vec[index[m]] for m in members}


def count_extracts(graph: ScalarGraph, members: list[int],
                   lanes: dict[int, int],
                   placements: dict[int, Placement],
                   store_lane_of: dict[int, int],
                   store_run_of: dict[int, tuple] | None = None) -> int:
    """Data moves implied by a lane assignment: operand-vector assembly plus
    store-side shuffles for runs fed by these members."""
    users = graph.users()
    total = 0
    arity = max(len(graph.nodes[m].inputs) for m in members)
    for pos in range(arity):
        targets = {}
        for m in members:
            inputs = graph.nodes[m].inputs
            if pos < len(inputs):
                targets[lanes[m]] = placements[inputs[pos]]
        total += move_cost(targets)

    self_vec = ("group-under-order",)
    runs: dict[tuple, dict[int, Placement]] = {}
    for m in members:
        for u in users[m]:
            if graph.nodes[u].kind == STORE and u in store_lane_of:
                run = store_run_of[u] if store_run_of else ("run",)
                runs.setdefault(run, {})[store_lane_of[u]] = Placement(self_vec, lanes[m])
    for targets in runs.values():
        total += move_cost(targets)
    return total
