"""Greedy prospecting over the whole transformation-configuration space.

Reduction on/off, every memory split layout, and each operation-split
strategy are mutually exclusive choices, so all combinations are built
end-to-end and the vector graph with the fewest nodes wins (ties go to
fewer data transformations, then to enumeration order).  Candidates are
checked against the scalar interpreter on a seeded random memory image,
best first, so the returned winner is always semantics-verified; a failed
check discards the candidate with a diagnostic and promotes the next one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .grouping import GroupGraph, build_group_graph
from .kernels import make_memory
from .lowering import STRATEGIES, Layout, vectorize
from .reduction import apply_all_reductions, find_reduction_paths
from .scalar_ir import MemoryImage, ScalarGraph, dedup, interpret_scalar
from .splitting import count_load_store_combinations, enumerate_load_store_splits
from .vector_ir import VectorGraph, interpret_vector

REASSOCIATION_RTOL = 1e-10


class NoValidConfigError(RuntimeError):
    def __init__(self, diagnostics: list[str]):
        super().__init__("no configuration passed the oracle check:\n  "
                         + "\n  ".join(diagnostics))
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class PipelineConfig:
    use_reduction: bool
    load_choice: int
    strategy: str
    vec_size: int


@dataclass
class ConfigResult:
    config: PipelineConfig
    census: dict[str, int] | None = None
    error: str | None = None
    verified: bool = False

    @property
    def total(self) -> int:
        return sum(self.census.values()) if self.census else -1

    def to_dict(self) -> dict:
        return {
            "reduction": self.config.use_reduction,
            "load_choice": self.config.load_choice,
            "strategy": self.config.strategy,
            "census": self.census,
            "total": self.total if self.census else None,
            "verified": self.verified,
            "error": self.error,
        }


@dataclass
class SearchReport:
    scalar_census: dict[str, int]
    results: list[ConfigResult]
    winner: int = -1
    combinations: int = 0
    truncated: bool = False

    def to_dict(self) -> dict:
        return {
            "scalar": self.scalar_census,
            "configs_evaluated": len(self.results),
            "combinations": self.combinations,
            "truncated": self.truncated,
            "winner": self.results[self.winner].to_dict() if self.winner >= 0 else None,
            "configs": [r.to_dict() for r in self.results],
        }


@dataclass
class ProspectOutcome:
    graph: VectorGraph
    report: SearchReport
    scalar: ScalarGraph          # normalized scalar graph the winner was built from
    groups: GroupGraph
    layout: Layout
    config: PipelineConfig


def count_nodes(vg: VectorGraph) -> dict[str, int]:
    return vg.census()


def equivalent(want: MemoryImage, got: MemoryImage, exact: bool) -> bool:
    for name in want:
        for a, b in zip(want[name], got[name]):
            if a != b and not (math.isnan(a) and math.isnan(b)):
                if exact or not math.isclose(a, b, rel_tol=REASSOCIATION_RTOL, abs_tol=0.0):
                    return False
    return True


def prospect(graph: ScalarGraph, vec_size: int, *, c_max: int = 4096, seed: int = 0,
             pin_reduction: bool | None = None, pin_load_choice: int | None = None,
             pin_strategy: str | None = None) -> ProspectOutcome:
    base = dedup(graph)
    mem = make_memory(base, seed)
    want = interpret_scalar(base, mem)

    variants: list[tuple[bool, ScalarGraph]] = []
    if pin_reduction is not True:
        variants.append((False, base))
    if pin_reduction is not False and find_reduction_paths(base, vec_size):
        variants.append((True, apply_all_reductions(base, vec_size)))
    if not variants:
        variants.append((False, base))  # reduction pinned on but not applicable

    report = SearchReport(scalar_census=base.census(), results=[])
    built: list[tuple[ConfigResult, VectorGraph, ScalarGraph, GroupGraph, object, Layout]] = []
    for use_reduction, scalar in variants:
        gg = build_group_graph(scalar)
        choices = enumerate_load_store_splits(gg, vec_size, c_max=c_max)
        report.combinations = max(report.combinations,
                                  count_load_store_combinations(gg, vec_size))
        report.truncated = report.truncated or len(choices) < report.combinations
        for ci, choice in enumerate(choices):
            if pin_load_choice is not None and ci != pin_load_choice:
                continue
            for strategy in STRATEGIES:
                if pin_strategy is not None and strategy != pin_strategy:
                    continue
                config = PipelineConfig(use_reduction, ci, strategy, vec_size)
                result = ConfigResult(config=config)
                report.results.append(result)
                try:
                    vg, layout = vectorize(scalar, gg, choice, strategy, vec_size)
                except Exception as exc:  # pipeline bug surface, keep prospecting
                    result.error = f"build failed: {exc}"
                    continue
                result.census = count_nodes(vg)
                built.append((result, vg, scalar, gg, choice, layout))

    ranked = sorted(
        range(len(built)),
        key=lambda i: (built[i][0].total, built[i][0].census["transforms"], i),
    )
    diagnostics = [r.error for r in report.results if r.error]
    for i in ranked:
        result, vg, scalar, gg, choice, layout = built[i]
        try:
            got = interpret_vector(vg, mem)
        except Exception as exc:
            result.error = f"interpretation failed: {exc}"
            diagnostics.append(f"{result.config}: {result.error}")
            continue
        result.verified = True
        if equivalent(want, got, exact=not result.config.use_reduction):
            report.winner = report.results.index(result)
            return ProspectOutcome(vg, report, scalar, gg, layout, result.config)
        result.error = "oracle mismatch"
        result.verified = False
        diagnostics.append(f"{result.config}: oracle mismatch")
    raise NoValidConfigError(diagnostics or ["no candidate was built"])
