"""Built-in kernel corpus: parametric array kernels and random DAGs.

Ten signatures combine two inputs into one output with contiguous,
shifted (circular) or scrambled access on either side.  ``ka`` and ``kb``
are the two small worked kernels used throughout the docs and goldens.
``make_predx`` generates seeded random straight-line graphs for scheduler
experiments.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from .scalar_ir import ArrayDecl, GraphBuilder, KernelError, ScalarGraph


def shift_index(x: int, n: int) -> int:
    return (x + 2) % n


def random_index(x: int, n: int) -> int:
    return (x ^ 0x55555555) % n


def _linear(x: int, n: int) -> int:
    return x


# signature -> (src0 pattern, src1 is scalar?, src1 pattern, dest scalar?, dest pattern)
_SIGNATURES = {
    "NN_N":   (_linear, False, _linear, False, _linear),
    "NN_1":   (_linear, False, _linear, True, None),
    "N1_N":   (_linear, True, None, False, _linear),
    "N1_1":   (_linear, True, None, True, None),
    "rNN_N":  (random_index, False, _linear, False, _linear),
    "NN_rN":  (_linear, False, _linear, False, random_index),
    "rNN_1":  (random_index, False, _linear, True, None),
    "rN1_N":  (random_index, True, None, False, _linear),
    "rN1_1":  (random_index, True, None, True, None),
    "sNsN_N": (shift_index, False, shift_index, False, _linear),
}

KERNEL_NAMES = tuple(_SIGNATURES) + ("KA", "KB")


@dataclass(frozen=True)
class KernelSpec:
    name: str
    size: int
    op: str = "add"

    def __post_init__(self):
        if self.name not in KERNEL_NAMES:
            raise KernelError(f"unknown kernel {self.name!r}")
        if self.size < 1:
            raise KernelError("kernel size must be >= 1")


def make_kernel(spec: KernelSpec) -> ScalarGraph:
    """Fully unroll a kernel spec into a scalar graph (no dedup applied)."""
    if spec.name == "KA":
        return _make_ka(spec.size)
    if spec.name == "KB":
        return make_kernel(KernelSpec("NN_1", spec.size, "add"))
    src0_pat, src1_scalar, src1_pat, dest_scalar, dest_pat = _SIGNATURES[spec.name]
    n = spec.size
    arrays = [
        ArrayDecl("src0", "input", n),
        ArrayDecl("src1", "input", 1 if src1_scalar else n),
    ]
    accumulating_dest = spec.name == "NN_rN"
    if dest_scalar:
        arrays.append(ArrayDecl("dest", "output", 1))
    else:
        arrays.append(ArrayDecl("dest", "inout" if accumulating_dest else "output", n))
    b = GraphBuilder(arrays)
    acc = b.const(0.0) if dest_scalar else None
    for i in range(n):
        a = b.load("src0", src0_pat(i, n))
        c = b.load("src1", 0) if src1_scalar else b.load("src1", src1_pat(i, n))
        v = b.op(spec.op, a, c)
        if dest_scalar:
            acc = b.op("add", acc, v)
        elif accumulating_dest:
            idx = dest_pat(i, n)
            b.store("dest", idx, b.op("add", b.load("dest", idx), v))
        else:
            b.store("dest", dest_pat(i, n), v)
    if dest_scalar:
        b.store("dest", 0, acc)
    return b.finish()


def _make_ka(n: int) -> ScalarGraph:
    # out[i] = in1[(i+2) % n] + in2[i/2]: one circularly shifted operand, one
    # operand read at half rate so consecutive iterations share elements.
    arrays = [
        ArrayDecl("in1", "input", n),
        ArrayDecl("in2", "input", n),
        ArrayDecl("out", "output", n),
    ]
    b = GraphBuilder(arrays)
    for i in range(n):
        v = b.op("add", b.load("in1", shift_index(i, n)), b.load("in2", i // 2))
        b.store("out", i, v)
    return b.finish()


def reference_result(spec: KernelSpec, mem: dict[str, list[float]]) -> dict[str, list[float]]:
    """Run the kernel as a plain loop over the memory image (no graphs)."""
    out = {name: list(buf) for name, buf in mem.items()}
    n = spec.size
    if spec.name == "KA":
        for i in range(n):
            out["out"][i] = mem["in1"][shift_index(i, n)] + mem["in2"][i // 2]
        return out
    if spec.name == "KB":
        return reference_result(KernelSpec("NN_1", n, "add"), mem)
    from .scalar_ir import OPCODES

    fn = OPCODES[spec.op]
    src0_pat, src1_scalar, src1_pat, dest_scalar, dest_pat = _SIGNATURES[spec.name]
    acc = 0.0
    for i in range(n):
        a = mem["src0"][src0_pat(i, n)]
        c = mem["src1"][0] if src1_scalar else mem["src1"][src1_pat(i, n)]
        v = fn(a, c)
        if dest_scalar:
            acc = acc + v
        elif spec.name == "NN_rN":
            out["dest"][dest_pat(i, n)] += v
        else:
            out["dest"][dest_pat(i, n)] = v
    if dest_scalar:
        out["dest"][0] = acc
    return out


def make_memory(graph: ScalarGraph, seed: int) -> dict[str, list[float]]:
    """Seeded random doubles for every declared array."""
    rng = random.Random(seed)
    return {
        name: [rng.uniform(-100.0, 100.0) for _ in range(decl.length)]
        for name, decl in sorted(graph.arrays.items())
    }


# ---------------------------------------------------------------------------
# Random straight-line graphs


@dataclass(frozen=True)
class PredXSpec:
    x: int
    size: int
    seed: int = 0
    max_jump: int = 10

    def __post_init__(self):
        if self.x < 1 or self.size < 1:
            raise KernelError("predx needs x >= 1 and size >= 1")


def make_predx(spec: PredXSpec) -> ScalarGraph:
    """Random DAG of variables, each summing 1..x earlier variables.

    Predecessors are found by walking backwards in jumps of 1..max_jump,
    so early variables can end up with none: those become loads.  Variables
    nothing consumes become stores.  Deterministic per seed.
    """
    rng = random.Random(spec.seed)
    preds: list[list[int]] = []
    for i in range(spec.size):
        chosen = []
        cur = i
        for _ in range(rng.randint(1, spec.x)):
            cur -= rng.randint(1, spec.max_jump)
            if cur < 0:
                break
            chosen.append(cur)
        preds.append(chosen)

    has_user = [False] * spec.size
    for chosen in preds:
        for p in chosen:
            has_user[p] = True

    n_loads = sum(1 for c in preds if not c)
    n_stores = sum(1 for u in has_user if not u)
    arrays = [
        ArrayDecl("in", "input", max(n_loads, 1)),
        ArrayDecl("out", "output", max(n_stores, 1)),
    ]
    b = GraphBuilder(arrays)
    values: list[int] = []
    next_load = 0
    for chosen in preds:
        if not chosen:
            values.append(b.load("in", next_load))
            next_load += 1
            continue
        if len(chosen) == 1:
            values.append(b.op("add", values[chosen[0]]))
            continue
        acc = values[chosen[0]]
        for p in chosen[1:]:
            acc = b.op("add", acc, values[p])
        values.append(acc)
    next_store = 0
    for i, used in enumerate(has_user):
        if not used:
            b.store("out", next_store, values[i])
            next_store += 1
    return b.finish()
