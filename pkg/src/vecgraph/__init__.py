"""Vectorize fully unrolled static kernels by instruction-graph transformation.

Pipeline: build a scalar DAG, remove duplicate nodes, optionally rewrite
commutative chains into parallel partials, group same-kind instructions,
split oversized groups, fix lane orders, and greedily pick the
configuration whose vector graph has the fewest instructions.  Twin
interpreters (scalar and vector) prove each result equivalent; emitters
produce vector IR text, intrinsic-style C, and GraphViz views; a
register-pressure-aware scheduler orders the final instruction list.
"""

from .grouping import Group, GroupGraph, build_group_graph
from .kernels import (
    KERNEL_NAMES,
    KernelSpec,
    PredXSpec,
    make_kernel,
    make_memory,
    make_predx,
    random_index,
    shift_index,
)
from .lowering import vectorize
from .ordering import count_extracts, fix_order, move_cost
from .reduction import apply_all_reductions, apply_reduction, find_reduction_paths
from .scalar_ir import (
    ArrayDecl,
    GraphBuilder,
    KernelError,
    MemoryImage,
    ScalarGraph,
    ScalarNode,
    dedup,
    interpret_scalar,
)
from .scheduling import sched_cost, schedule, simulate_stack_accesses
from .search import (
    NoValidConfigError,
    PipelineConfig,
    ProspectOutcome,
    SearchReport,
    count_nodes,
    prospect,
)
from .splitting import (
    LoadStoreSplitChoice,
    ScoreMatrix,
    compute_score_matrix,
    count_load_store_combinations,
    enumerate_load_store_splits,
    split_by_clustering,
    split_by_partitioning,
)
from .vector_ir import UninitializedLaneError, VectorGraph, VectorNode, interpret_vector

__all__ = [
    "ArrayDecl", "GraphBuilder", "Group", "GroupGraph", "KERNEL_NAMES",
    "KernelError", "KernelSpec", "LoadStoreSplitChoice", "MemoryImage",
    "NoValidConfigError", "PipelineConfig", "PredXSpec", "ProspectOutcome",
    "ScalarGraph", "ScalarNode", "ScoreMatrix", "SearchReport",
    "UninitializedLaneError", "VectorGraph", "VectorNode",
    "apply_all_reductions", "apply_reduction", "build_group_graph",
    "compute_score_matrix", "count_extracts", "count_load_store_combinations",
    "count_nodes", "dedup", "enumerate_load_store_splits", "find_reduction_paths",
    "fix_order", "interpret_scalar", "interpret_vector", "make_kernel",
    "make_memory", "make_predx", "move_cost", "prospect", "random_index",
    "sched_cost", "schedule", "shift_index", "simulate_stack_accesses",
    "split_by_clustering", "split_by_partitioning", "vectorize",
]
