"""Emitters: GraphViz views of every pipeline stage and intrinsic-style C.

All output is byte-deterministic for a given graph so files can be frozen
as goldens.  The C emitter performs no optimization of its own: one call
per vector node, in scheduled order.  ``vec_size == 8`` uses AVX-512
double intrinsics; any other width falls back to a self-contained portable
vocabulary defined by an inline prelude, so the file compiles stand-alone.
"""
from __future__ import annotations

from .grouping import GroupGraph
from .scalar_ir import LOAD, REDUCE, SET, STORE, ScalarGraph
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
)


def _scalar_label(node) -> str:
    if node.kind in (LOAD, STORE):
        return f"{node.kind}[{node.array}:{node.index}]"
    if node.kind == SET:
        return f"set({node.constant:g})"
    if node.kind == REDUCE:
        return f"reduce:{node.opcode}"
    return node.opcode


def scalar_dot(g: ScalarGraph, title: str = "scalar") -> str:
    lines = [f"digraph {title} {{"]
    for nid in sorted(g.nodes):
        node = g.nodes[nid]
        shape = "diamond" if node.kind == REDUCE else "box" if node.kind in (LOAD, STORE) else "ellipse"
        lines.append(f'  n{nid} [label="{_scalar_label(node)}", shape={shape}];')
    for nid in sorted(g.nodes):
        for inp in g.nodes[nid].inputs:
            lines.append(f"  n{inp} -> n{nid};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def group_dot(gg: GroupGraph, title: str = "groups") -> str:
    lines = [f"digraph {title} {{"]
    for group in gg.groups:
        lines.append(f'  g{group.id} [label="{group.label()} x{len(group.members)}", shape=box];')
    for a, b in sorted(gg.edges):
        lines.append(f"  g{a} -> g{b};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _vector_label(node) -> str:
    if node.kind == VLOAD:
        return f"vload {node.array}[{node.start}:{node.start + node.count}]"
    if node.kind == VSTORE:
        return f"vstore {node.array}[{node.start}:{node.start + node.count}]"
    if node.kind == VOP:
        return f"v{node.opcode}"
    if node.kind == BROADCAST:
        return f"bcast({node.constant:g})"
    if node.kind == VREDUCE:
        return f"reduce:{node.opcode}/{node.count}"
    pat = ",".join("_" if p is None else
                   (f"{'ab'[p[0]]}{p[1]}" if isinstance(p, tuple) else str(p))
                   for p in node.pattern)
    return f"{node.kind}[{pat}]"


def vector_dot(vg: VectorGraph, order: list[int] | None = None,
               title: str = "vector") -> str:
    rank = {nid: i for i, nid in enumerate(order)} if order else {}
    lines = [f"digraph {title} {{"]
    for nid in sorted(vg.nodes):
        node = vg.nodes[nid]
        label = _vector_label(node)
        if rank:
            label = f"#{rank[nid]} {label}"
        shape = ("box" if node.kind in (VLOAD, VSTORE)
                 else "diamond" if node.kind == VREDUCE
                 else "hexagon" if node.kind in (PERMUTE, EXTRACT, MERGE)
                 else "ellipse")
        lines.append(f'  v{nid} [label="{label}", shape={shape}];')
    for nid in sorted(vg.nodes):
        for inp in vg.nodes[nid].inputs:
            lines.append(f"  v{inp} -> v{nid};")
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Intrinsic-style C

_GENERIC_PRELUDE = """\
#include <stddef.h>

typedef struct {{ double lane[{w}]; }} vec{w};

static inline vec{w} vload{w}(const double *p, long n) {{
    vec{w} r; for (long i = 0; i < {w}; ++i) r.lane[i] = i < n ? p[i] : 0.0; return r;
}}
static inline void vstore{w}(double *p, long n, vec{w} v) {{
    for (long i = 0; i < n; ++i) p[i] = v.lane[i];
}}
static inline vec{w} vbroadcast{w}(double c) {{
    vec{w} r; for (long i = 0; i < {w}; ++i) r.lane[i] = c; return r;
}}
static inline vec{w} vshuffle{w}(vec{w} a, const long idx[{w}]) {{
    vec{w} r; for (long i = 0; i < {w}; ++i) r.lane[i] = a.lane[idx[i]]; return r;
}}
static inline vec{w} vselect{w}(vec{w} a, vec{w} b, const long idx[{w}]) {{
    vec{w} r;
    for (long i = 0; i < {w}; ++i)
        r.lane[i] = idx[i] < {w} ? a.lane[idx[i]] : b.lane[idx[i] - {w}];
    return r;
}}
static inline vec{w} vadd{w}(vec{w} a, vec{w} b) {{
    vec{w} r; for (long i = 0; i < {w}; ++i) r.lane[i] = a.lane[i] + b.lane[i]; return r;
}}
static inline vec{w} vsub{w}(vec{w} a, vec{w} b) {{
    vec{w} r; for (long i = 0; i < {w}; ++i) r.lane[i] = a.lane[i] - b.lane[i]; return r;
}}
static inline vec{w} vmul{w}(vec{w} a, vec{w} b) {{
    vec{w} r; for (long i = 0; i < {w}; ++i) r.lane[i] = a.lane[i] * b.lane[i]; return r;
}}
static inline vec{w} vdiv{w}(vec{w} a, vec{w} b) {{
    vec{w} r; for (long i = 0; i < {w}; ++i) r.lane[i] = a.lane[i] / b.lane[i]; return r;
}}
static inline double vreduce_add{w}(vec{w} a, long n) {{
    double r = a.lane[0]; for (long i = 1; i < n; ++i) r += a.lane[i]; return r;
}}
static inline double vreduce_mul{w}(vec{w} a, long n) {{
    double r = a.lane[0]; for (long i = 1; i < n; ++i) r *= a.lane[i]; return r;
}}
"""


class EmitError(ValueError):
    pass


def _perm_indices(pattern, width: int) -> list[int]:
    # don't-care lanes copy lane 0; they are never stored
    return [p if p is not None else 0 for p in pattern]


def _merge_indices(pattern, width: int) -> list[int]:
    out = []
    for p in pattern:
        if p is None:
            out.append(0)
        else:
            side, lane = p
            out.append(lane + (width if side else 0))
    return out


def emit_intrinsics(vg: VectorGraph, order: list[int], kernel_name: str) -> str:
    if vg.width == 8:
        return _emit_avx512(vg, order, kernel_name)
    if vg.width in (2, 4, 16):
        return _emit_generic(vg, order, kernel_name)
    raise EmitError(f"no emission vocabulary for vec_size={vg.width}")


def _signature(vg: VectorGraph, kernel_name: str) -> str:
    params = []
    for name in sorted(vg.arrays):
        decl = vg.arrays[name]
        const = "const " if decl.role == "input" else ""
        params.append(f"{const}double *{name}")
    return f"void {kernel_name}({', '.join(params)})"


def _emit_generic(vg: VectorGraph, order: list[int], kernel_name: str) -> str:
    w = vg.width
    out = [_GENERIC_PRELUDE.format(w=w)]
    out.append(_signature(vg, kernel_name) + " {")
    reduce_ids = {nid for nid in vg.nodes if vg.nodes[nid].kind == VREDUCE}
    for nid in order:
        n = vg.nodes[nid]
        if n.kind == VLOAD:
            out.append(f"    vec{w} v{nid} = vload{w}(&{n.array}[{n.start}], {n.count});")
        elif n.kind == BROADCAST:
            out.append(f"    vec{w} v{nid} = vbroadcast{w}({n.constant!r});")
        elif n.kind == VOP:
            a, b = n.inputs
            out.append(f"    vec{w} v{nid} = v{n.opcode}{w}(v{a}, v{b});")
        elif n.kind in (PERMUTE, EXTRACT):
            idx = ", ".join(str(i) for i in _perm_indices(n.pattern, w))
            out.append(f"    const long p{nid}[{w}] = {{{idx}}};")
            out.append(f"    vec{w} v{nid} = vshuffle{w}(v{n.inputs[0]}, p{nid});")
        elif n.kind == MERGE:
            idx = ", ".join(str(i) for i in _merge_indices(n.pattern, w))
            a, b = n.inputs
            out.append(f"    const long p{nid}[{w}] = {{{idx}}};")
            out.append(f"    vec{w} v{nid} = vselect{w}(v{a}, v{b}, p{nid});")
        elif n.kind == VREDUCE:
            out.append(f"    double v{nid} = vreduce_{n.opcode}{w}(v{n.inputs[0]}, {n.count});")
        elif n.kind == VSTORE:
            src = n.inputs[0]
            if src in reduce_ids:
                out.append(f"    {n.array}[{n.start}] = v{src};")
            else:
                out.append(f"    vstore{w}(&{n.array}[{n.start}], {n.count}, v{src});")
    out.append("}")
    return "\n".join(out) + "\n"


def _emit_avx512(vg: VectorGraph, order: list[int], kernel_name: str) -> str:
    w = 8
    out = ["#include <immintrin.h>", ""]
    out.append(_signature(vg, kernel_name) + " {")
    reduce_ids = {nid for nid in vg.nodes if vg.nodes[nid].kind == VREDUCE}

    def setr(indices):
        return "_mm512_setr_epi64(" + ", ".join(str(i) for i in indices) + ")"

    for nid in order:
        n = vg.nodes[nid]
        if n.kind == VLOAD:
            if n.count == w:
                out.append(f"    __m512d v{nid} = _mm512_loadu_pd(&{n.array}[{n.start}]);")
            else:
                mask = (1 << n.count) - 1
                out.append(f"    __m512d v{nid} = _mm512_maskz_loadu_pd(0x{mask:02x}, "
                           f"&{n.array}[{n.start}]);")
        elif n.kind == BROADCAST:
            out.append(f"    __m512d v{nid} = _mm512_set1_pd({n.constant!r});")
        elif n.kind == VOP:
            a, b = n.inputs
            out.append(f"    __m512d v{nid} = _mm512_{n.opcode}_pd(v{a}, v{b});")
        elif n.kind in (PERMUTE, EXTRACT):
            idx = setr(_perm_indices(n.pattern, w))
            out.append(f"    __m512d v{nid} = _mm512_permutexvar_pd({idx}, v{n.inputs[0]});")
        elif n.kind == MERGE:
            idx = setr(_merge_indices(n.pattern, w))
            a, b = n.inputs
            out.append(f"    __m512d v{nid} = _mm512_permutex2var_pd(v{a}, {idx}, v{b});")
        elif n.kind == VREDUCE:
            if n.opcode not in ("add", "mul"):
                raise EmitError(f"no AVX-512 reduce for opcode {n.opcode!r}")
            if n.count == w:
                out.append(f"    double v{nid} = _mm512_reduce_{n.opcode}_pd(v{n.inputs[0]});")
            else:
                mask = (1 << n.count) - 1
                out.append(f"    double v{nid} = _mm512_mask_reduce_{n.opcode}_pd("
                           f"0x{mask:02x}, v{n.inputs[0]});")
        elif n.kind == VSTORE:
            src = n.inputs[0]
            if src in reduce_ids:
                out.append(f"    {n.array}[{n.start}] = v{src};")
            elif n.count == w:
                out.append(f"    _mm512_storeu_pd(&{n.array}[{n.start}], v{src});")
            else:
                mask = (1 << n.count) - 1
                out.append(f"    _mm512_mask_storeu_pd(&{n.array}[{n.start}], "
                           f"0x{mask:02x}, v{src});")
    out.append("}")
    return "\n".join(out) + "\n"
