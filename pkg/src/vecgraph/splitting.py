"""Divide oversized groups into sub-groups of at most vec_size members.

Memory groups enumerate every legal slot layout: slots cover the accessed
elements in ascending order and at most one slot per group is partial, so
a group of L elements offers ceil(L/vec_size) layouts when L is not a
multiple of vec_size and exactly one otherwise.  Operation groups are cut
by heuristics over an affinity score matrix instead: partitioning bisects
recursively at the weakest link, clustering grows seeds greedily.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from .grouping import Group, GroupGraph
from .layout import Placement
from .scalar_ir import LOAD, OP, REDUCE, STORE, ScalarGraph

SubGrouping = list[list[int]]


@dataclass(frozen=True)
class LoadStoreSplitChoice:
    """One slot layout per memory group: group id -> ordered member slots."""

    slots: dict[int, tuple[tuple[int, ...], ...]]

    def slot_of(self) -> dict[int, tuple[int, int, int]]:
        """scalar node id -> (group id, slot index, lane)."""
        out = {}
        for gid, slots in self.slots.items():
            for si, slot in enumerate(slots):
                for lane, nid in enumerate(slot):
                    out[nid] = (gid, si, lane)
        return out


def _layouts(members: list[int], vec_size: int) -> list[tuple[tuple[int, ...], ...]]:
    length = len(members)
    k, r = divmod(length, vec_size)
    if r == 0:
        sizes_options = [[vec_size] * k]
    else:
        sizes_options = [[vec_size] * p + [r] + [vec_size] * (k - p) for p in range(k + 1)]
    layouts = []
    for sizes in sizes_options:
        slots = []
        at = 0
        for s in sizes:
            slots.append(tuple(members[at:at + s]))
            at += s
        layouts.append(tuple(slots))
    return layouts


def count_load_store_combinations(gg: GroupGraph, vec_size: int) -> int:
    total = 1
    for group in gg.groups:
        if group.kind in (LOAD, STORE) and group.members:
            k, r = divmod(len(group.members), vec_size)
            total *= (k + 1) if r else 1
    return total


def enumerate_load_store_splits(gg: GroupGraph, vec_size: int,
                                c_max: int | None = None) -> list[LoadStoreSplitChoice]:
    """Cartesian product of per-group slot layouts, lexicographic order,
    truncated to the first c_max when given."""
    gids = []
    per_group = []
    for group in gg.groups:
        if group.kind in (LOAD, STORE) and group.members:
            gids.append(group.id)
            per_group.append(_layouts(group.members, vec_size))
    combos = itertools.product(*per_group) if per_group else iter([()])
    if c_max is not None:
        combos = itertools.islice(combos, c_max)
    return [LoadStoreSplitChoice(slots=dict(zip(gids, combo))) for combo in combos]


# ---------------------------------------------------------------------------
# Affinity scores


@dataclass
class ScoreMatrix:
    group_id: int
    members: list[int]
    scores: list[list[float]]

    def get(self, a: int, b: int) -> float:
        return self.scores[self.members.index(a)][self.members.index(b)]

    def to_csv(self) -> str:
        head = "," + ",".join(str(m) for m in self.members)
        rows = [head]
        for m, row in zip(self.members, self.scores):
            rows.append(str(m) + "," + ",".join(repr(v) for v in row))
        return "\n".join(rows) + "\n"


class UnplacedPredecessorError(RuntimeError):
    pass


def compute_score_matrix(graph: ScalarGraph, gg: GroupGraph, group: Group,
                         placements: dict[int, Placement],
                         vec_size: int) -> ScoreMatrix:
    """Affinity of putting two group members in the same vector.

    Off-diagonal entries gain 1 per argument position whose sources sit in
    the same already-fixed predecessor vector; the diagonal holds the
    member's source count.  Every destination group two members share adds
    1 (stores and small operation groups) or 1/size (large operation
    groups).
    """
    users = graph.users()
    members = group.members
    size = len(members)

    def placement(nid: int) -> Placement:
        p = placements.get(nid)
        if p is None:
            raise UnplacedPredecessorError(
                f"source node {nid} has no vector placement yet")
        return p

    source_vecs = [tuple(placement(inp).vec for inp in graph.nodes[m].inputs)
                   for m in members]
    dest_groups = [{gg.group_of[u] for u in users[m]} for m in members]
    dest_value = {}
    for ds in dest_groups:
        for d in ds:
            if d not in dest_value:
                dest = gg.groups[d]
                if dest.kind == STORE:
                    dest_value[d] = 1.0
                elif dest.kind in (OP, REDUCE):
                    dest_value[d] = 1.0 if len(dest.members) <= vec_size \
                        else 1.0 / len(dest.members)
                else:
                    dest_value[d] = 0.0

    scores = [[0.0] * size for _ in range(size)]
    for i in range(size):
        vi, di = source_vecs[i], dest_groups[i]
        for j in range(i, size):
            if i != j:
                score = sum(1.0 for pa, pb in zip(vi, source_vecs[j]) if pa == pb)
            else:
                score = float(len(vi))
            for d in di & dest_groups[j]:
                score += dest_value[d]
            scores[i][j] = score
            scores[j][i] = score
    return ScoreMatrix(group_id=group.id, members=list(members), scores=scores)


# ---------------------------------------------------------------------------
# Heuristics

def _min_score_pair(pool: list[int], index: dict[int, int], scores) -> tuple[int, int]:
    best = None
    for ii, a in enumerate(pool):
        for b in pool[ii + 1:]:
            s = scores[index[a]][index[b]]
            if best is None or s < best[0]:
                best = (s, a, b)
    return best[1], best[2]


def split_by_partitioning(group_members: list[int], matrix: ScoreMatrix,
                          vec_size: int) -> SubGrouping:
    """Recursive bisection: seed two partitions with the weakest pair, then
    pull remaining elements towards whichever side they score higher on,
    capped so both sides stay fillable with whole vectors."""
    index = {m: i for i, m in enumerate(matrix.members)}
    scores = matrix.scores
    n_final = -(-len(group_members) // vec_size)

    wip = [sorted(group_members)]
    final = []
    while len(final) != n_final:
        p = wip.pop()
        if len(p) <= vec_size:
            final.append(p)
            continue
        vecs_in_p = -(-len(p) // vec_size)
        size_max_p1 = (vecs_in_p - vecs_in_p // 2) * vec_size
        size_max_p2 = (vecs_in_p // 2) * vec_size
        i, j = _min_score_pair(p, index, scores)
        sub_p1, sub_p2 = [i], [j]
        pool = [m for m in p if m not in (i, j)]
        # accumulated affinity towards either side, updated as sides grow
        acc1 = {n: scores[index[n]][index[i]] for n in pool}
        acc2 = {n: scores[index[n]][index[j]] for n in pool}

        def grab(side: list[int], acc: dict[int, float], n: int) -> None:
            side.append(n)
            pool.remove(n)
            row = scores[index[n]]
            for m in pool:
                acc[m] += row[index[m]]

        while pool:
            if len(sub_p1) == size_max_p1:
                grab(sub_p2, acc2, pool[0])
                continue
            if len(sub_p2) == size_max_p2:
                grab(sub_p1, acc1, pool[0])
                continue
            best = None
            for n in pool:
                high = acc1[n] if acc1[n] >= acc2[n] else acc2[n]
                if best is None or high > best[0]:
                    best = (high, n)
            n = best[1]
            s1, s2 = acc1[n], acc2[n]
            if s1 > s2 or (s1 == s2 and size_max_p1 - len(sub_p1) >= size_max_p2 - len(sub_p2)):
                grab(sub_p1, acc1, n)
            else:
                grab(sub_p2, acc2, n)
        wip.append(sorted(sub_p2))
        wip.append(sorted(sub_p1))
    return sorted((sorted(s) for s in final), key=lambda s: s[0])


def split_by_clustering(group_members: list[int], matrix: ScoreMatrix,
                        vec_size: int) -> SubGrouping:
    """Seed each sub-group with mutually distant elements, then greedily give
    every remaining element to the sub-group it scores highest against,
    respecting capacity."""
    index = {m: i for i, m in enumerate(matrix.members)}
    scores = matrix.scores
    members = sorted(group_members)
    n_sub = -(-len(members) // vec_size)
    if n_sub == 1:
        return [members]

    i, j = _min_score_pair(members, index, scores)
    subgroups: list[list[int]] = [[i], [j]]
    pool = [m for m in members if m not in (i, j)]
    seed_sum = {m: scores[index[m]][index[i]] + scores[index[m]][index[j]]
                for m in pool}
    while len(subgroups) < n_sub:
        worst = None
        for idx in pool:
            if worst is None or seed_sum[idx] < worst[0]:
                worst = (seed_sum[idx], idx)
        seed = worst[1]
        pool.remove(seed)
        subgroups.append([seed])
        row = scores[index[seed]]
        for m in pool:
            seed_sum[m] += row[index[m]]

    # affinity of each remaining element towards each sub-group so far
    acc = [{m: scores[index[m]][index[sg[0]]] for m in pool} for sg in subgroups]
    while pool:
        best = None
        for v, sg in enumerate(subgroups):
            if len(sg) >= vec_size:
                continue
            col = acc[v]
            for idx in pool:
                if best is None or col[idx] > best[0]:
                    best = (col[idx], v, idx)
        _, v, idx = best
        pool.remove(idx)
        subgroups[v].append(idx)
        row = scores[index[idx]]
        for m in pool:
            acc[v][m] += row[index[m]]
    return sorted((sorted(s) for s in subgroups), key=lambda s: s[0])


def split_identity(group_members: list[int], vec_size: int) -> SubGrouping:
    """Chunk members in their existing order."""
    members = list(group_members)
    return [members[i:i + vec_size] for i in range(0, len(members), vec_size)]
