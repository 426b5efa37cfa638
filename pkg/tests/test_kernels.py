import random

import pytest

from vecgraph.kernels import (
    KERNEL_NAMES,
    KernelSpec,
    PredXSpec,
    make_kernel,
    make_memory,
    make_predx,
    random_index,
    reference_result,
    shift_index,
)
from vecgraph.scalar_ir import KernelError, dedup, interpret_scalar


def test_shift_index():
    assert shift_index(0, 6) == 2
    assert shift_index(5, 6) == 1
    assert shift_index(4, 6) == 0


def test_random_index():
    assert random_index(0, 128) == 85
    assert random_index(0, 1) == 0
    # collisions are allowed for sizes that are not powers of two
    n = 12
    hits = [random_index(x, n) for x in range(n)]
    assert all(0 <= h < n for h in hits)


def test_nn_n_census():
    g = make_kernel(KernelSpec("NN_N", 8))
    assert g.census() == {"loads": 16, "operations": 8, "stores": 8}


def test_nn_1_is_kb_shape():
    g = make_kernel(KernelSpec("NN_1", 6))
    assert g.census() == {"loads": 12, "operations": 11, "stores": 1}


def test_snsn_n_shape():
    g = make_kernel(KernelSpec("sNsN_N", 6))
    assert g.census() == {"loads": 12, "operations": 6, "stores": 6}


def test_unknown_kernel_rejected():
    with pytest.raises(KernelError):
        KernelSpec("bogus", 4)


@pytest.mark.parametrize("name", KERNEL_NAMES)
@pytest.mark.parametrize("op", ["add", "mul"])
def test_kernels_match_reference_loop(name, op):
    for size in (4, 6, 9, 16):
        spec = KernelSpec(name, size, op)
        g = make_kernel(spec)
        mem = make_memory(g, seed=size * 31 + hash(name) % 97)
        assert interpret_scalar(g, mem) == reference_result(spec, mem)
        assert interpret_scalar(dedup(g), mem) == reference_result(spec, mem)


def test_predx_single_variable():
    g = make_predx(PredXSpec(x=4, size=1, seed=0))
    assert g.census() == {"loads": 1, "operations": 0, "stores": 1}


def test_predx_deterministic():
    a = make_predx(PredXSpec(x=4, size=100, seed=7))
    b = make_predx(PredXSpec(x=4, size=100, seed=7))
    assert a.to_json() == b.to_json()
    c = make_predx(PredXSpec(x=4, size=100, seed=8))
    assert c.to_json() != a.to_json()


def test_predx_structure():
    g = make_predx(PredXSpec(x=10, size=200, seed=3))
    users = g.users()
    for nid, node in g.nodes.items():
        if node.kind != "store" and not users[nid]:
            pytest.fail(f"non-store node {nid} has no successors")
        if node.kind == "op":
            assert 1 <= len(node.inputs) <= 2
    g.validate()


def test_predx_acyclic_by_construction():
    for seed in range(5):
        g = make_predx(PredXSpec(x=6, size=64, seed=seed))
        g.topo_order()  # raises on cycles
