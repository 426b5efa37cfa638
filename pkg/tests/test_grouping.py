from vecgraph.grouping import build_group_graph
from vecgraph.kernels import KernelSpec, PredXSpec, make_kernel, make_predx
from vecgraph.reduction import apply_all_reductions
from vecgraph.scalar_ir import ArrayDecl, GraphBuilder, dedup


def test_ka_group_structure():
    g = dedup(make_kernel(KernelSpec("KA", 6)))
    gg = build_group_graph(g)
    loads = {grp.array: len(grp.members) for grp in gg.by_kind("load")}
    assert loads == {"in1": 6, "in2": 3}  # in2 elements shared across iterations
    ops = gg.by_kind("op")
    assert len(ops) == 1 and len(ops[0].members) == 6
    stores = gg.by_kind("store")
    assert len(stores) == 1 and len(stores[0].members) == 6


def test_singleton_graph_single_group():
    b = GraphBuilder([ArrayDecl("a", "input", 1), ArrayDecl("o", "output", 1)])
    b.store("o", 0, b.load("a", 0))
    gg = build_group_graph(b.finish())
    assert sorted(len(g.members) for g in gg.groups) == [1, 1]


def test_kb_after_reduction_groups():
    g = apply_all_reductions(dedup(make_kernel(KernelSpec("KB", 6))), vec_size=4)
    gg = build_group_graph(g)
    loads = {grp.array: len(grp.members) for grp in gg.by_kind("load")}
    assert loads == {"src0": 6, "src1": 6}
    reduces = gg.by_kind("reduce")
    assert len(reduces) == 1 and len(reduces[0].members) == 1
    stores = gg.by_kind("store")
    assert len(stores) == 1 and len(stores[0].members) == 1
    # pairwise adds at depth 1, chain adds deeper
    op_groups = {(grp.opcode, grp.depth): len(grp.members) for grp in gg.by_kind("op")}
    assert op_groups[("add", 1)] == 6
    assert sum(n for (_, d), n in op_groups.items() if d > 1) == 2


def test_partition_property():
    for name, size in (("KA", 6), ("rNN_N", 12), ("NN_rN", 8)):
        g = dedup(make_kernel(KernelSpec(name, size)))
        gg = build_group_graph(g)
        seen = []
        for grp in gg.groups:
            seen.extend(grp.members)
        assert sorted(seen) == sorted(g.nodes)


def test_op_group_independence():
    g = dedup(make_predx(PredXSpec(x=4, size=60, seed=5)))
    gg = build_group_graph(g)

    reach: dict[int, set[int]] = {}
    for nid in g.topo_order():
        r = set()
        for inp in g.nodes[nid].inputs:
            r |= reach[inp]
            r.add(inp)
        reach[nid] = r
    for grp in gg.groups:
        if grp.kind not in ("op", "reduce"):
            continue
        for m in grp.members:
            assert not (reach[m] & set(grp.members))


def test_edge_soundness_and_completeness():
    g = dedup(make_kernel(KernelSpec("KB", 8)))
    gg = build_group_graph(g)
    expected = set()
    for nid, node in g.nodes.items():
        for inp in node.inputs:
            a, b = gg.group_of[inp], gg.group_of[nid]
            if a != b:
                expected.add((a, b))
    assert gg.edges == expected


def test_group_ids_deterministic():
    g = dedup(make_kernel(KernelSpec("sNsN_N", 8)))
    a = build_group_graph(g)
    b = build_group_graph(g)
    assert [grp.label() for grp in a.groups] == [grp.label() for grp in b.groups]
    assert [grp.members for grp in a.groups] == [grp.members for grp in b.groups]
