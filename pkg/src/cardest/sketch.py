"""Bound sketches: hash-partition relations on selected join attributes and
sum per-partition estimates.

The attribute set S comes from a chosen estimation-graph path: join
attributes that the path does not extend through a bound (conditioned) edge.
Each attribute gets K**(1/|S|) hash buckets; a relation hashes on the subset
of S it contains, and the query splits into K disjoint components whose true
counts add up to the original.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .catalogue import build_catalogue
from .errors import SketchPlanError
from .estgraph import BOUND, PROJECTION, PathEstimate
from .estimators import (Estimate, HeuristicChoice, estimate_molp,
                         estimate_optimistic, evaluate_optimistic_path,
                         optimistic_paths)
from .graphstore import LabeledGraph
from .querymodel import QEdge, QueryGraph

MIX = 0x9E3779B97F4A7C15
MASK = (1 << 64) - 1


def _mix64(value: int, seed: int) -> int:
    x = (value * MIX + seed * 0xBF58476D1CE4E5B9 + 0x94D049BB133111EB) & MASK
    x ^= x >> 31
    x = (x * 0xD6E8FEB86659FD93) & MASK
    x ^= x >> 27
    return x


def bucket_of(vertex: int, buckets: int, seed: int) -> int:
    return _mix64(vertex, seed) % buckets


@dataclass(frozen=True)
class EdgeTag:
    bound: bool
    extension_vars: frozenset[str]


def classify_edges(path: PathEstimate, q: QueryGraph, ceg_kind: str) -> list[EdgeTag]:
    """Tag each path edge bound/unbound and record its extension attributes.

    Start edges are unbound by definition; projection edges extend nothing.
    """
    tags = []
    for e in path.edges:
        if e.kind == PROJECTION:
            tags.append(EdgeTag(bound=True, extension_vars=frozenset()))
            continue
        tags.append(EdgeTag(bound=(e.kind == BOUND or e.kind == "extension"
                                   or e.kind == "cycle-closing"),
                            extension_vars=e.extension_vars(q, ceg_kind)))
    return tags


def join_attributes(q: QueryGraph) -> frozenset[str]:
    seen: dict[str, int] = {}
    for e in q.edges:
        for v in (e.src, e.dst):
            seen[v] = seen.get(v, 0) + 1
    return frozenset(v for v, n in seen.items() if n >= 2)


def sketch_attributes(path: PathEstimate, q: QueryGraph, ceg_kind: str) -> frozenset[str]:
    """Join attributes not extended through a bound edge."""
    bound_ext: set[str] = set()
    for tag in classify_edges(path, q, ceg_kind):
        if tag.bound:
            bound_ext |= tag.extension_vars
    return join_attributes(q) - bound_ext


@dataclass(frozen=True)
class SketchComponent:
    index: tuple[int, ...]
    graph: LabeledGraph
    query: QueryGraph


@dataclass
class SketchPlan:
    path: PathEstimate | None
    attrs: tuple[str, ...]          # S, sorted
    k: int
    per_attr_parts: int             # K ** (1/|S|)
    partition_assignments: dict[int, tuple[tuple[str, ...], int]]  # edge -> (PA, pieces)
    seed: int
    fallback: bool = False          # S was empty; identity sketch used


def make_sketch(q: QueryGraph, g: LabeledGraph, path: PathEstimate | None, k: int,
                ceg_kind: str = "max-degree", seed: int = 0,
                ) -> tuple[SketchPlan, list[SketchComponent]]:
    """Partition plan plus the K component instances (disjoint, exhaustive).

    k=1 is the identity sketch.  Otherwise k must be a perfect |S|-th power of
    an integer >= 2 and S must be non-empty.
    """
    if k == 1:
        plan = SketchPlan(path=path, attrs=(), k=1, per_attr_parts=1,
                          partition_assignments={}, seed=seed)
        return plan, [SketchComponent((), g, q)]
    if path is None:
        raise SketchPlanError("k > 1 needs a sketch path")
    attrs = sorted(sketch_attributes(path, q, ceg_kind))
    if not attrs:
        raise SketchPlanError("every join attribute is bound; sketching degenerates (use k=1)")
    parts = _integer_root(k, len(attrs))
    if parts is None or parts < 2:
        raise SketchPlanError(
            f"K={k} is not a perfect |S|-th power >= 2**|S| for |S|={len(attrs)}")

    s_index = {v: i for i, v in enumerate(attrs)}
    assignments: dict[int, tuple[tuple[str, ...], int]] = {}
    for i, e in enumerate(q.edges):
        pa = tuple(v for v in attrs if v in (e.src, e.dst))
        assignments[i] = (pa, parts ** len(pa))

    components: list[SketchComponent] = []
    for index in _indices(parts, len(attrs)):
        sigma = {attrs[i]: index[i] for i in range(len(attrs))}
        edges = []
        for i, e in enumerate(q.edges):
            want_src = sigma.get(e.src) if e.src in s_index else None
            want_dst = sigma.get(e.dst) if e.dst in s_index else None
            for u, v in g.edges_with_label(e.label):
                if want_src is not None and bucket_of(u, parts, seed) != want_src:
                    continue
                if want_dst is not None and bucket_of(v, parts, seed) != want_dst:
                    continue
                edges.append((u, v, f"e{i}"))
        comp_graph = LabeledGraph(edges)
        comp_query = QueryGraph([QEdge(e.src, e.dst, f"e{i}")
                                 for i, e in enumerate(q.edges)])
        components.append(SketchComponent(index, comp_graph, comp_query))
    plan = SketchPlan(path=path, attrs=tuple(attrs), k=k, per_attr_parts=parts,
                      partition_assignments=assignments, seed=seed)
    return plan, components


def _integer_root(k: int, degree: int) -> int | None:
    root = round(k ** (1.0 / degree))
    for candidate in (root - 1, root, root + 1):
        if candidate >= 1 and candidate ** degree == k:
            return candidate
    return None


def _indices(parts: int, dims: int):
    if dims == 0:
        yield ()
        return
    for rest in _indices(parts, dims - 1):
        for j in range(parts):
            yield (j,) + rest


# ---------------------------------------------------------------------------
# Sketched estimators
# ---------------------------------------------------------------------------

def estimate_with_sketch(q: QueryGraph, g: LabeledGraph, k: int, base: str,
                         h: int = 2, seed: int = 0, walk_budget: int | None = 1000,
                         choice: HeuristicChoice | None = None,
                         ceg_kind: str = "avg-degree",
                         starts: str = "anchored") -> Estimate:
    """Sum of per-component base estimates under a K-way bound sketch.

    base="molp": the sketch follows the unpartitioned minimum-weight path and
    each component is re-bounded from its own statistics.  base="optimistic":
    the heuristic's chosen path on the unpartitioned graph is fixed and its
    formula re-evaluated per component (min/max aggregators only).
    """
    cat = build_catalogue(g, [q], h, walk_budget=walk_budget, seed=seed)
    fixed_path: PathEstimate | None = None
    if base == "molp":
        unsketched = estimate_molp(q, cat)
        sketch_path = unsketched.chosen_path
        sketch_ceg_kind = "attrs"
        method = f"sketch:bound:k{k}"
        if sketch_path is None:  # zero short-circuit upstream
            return Estimate.from_exact(Fraction(0), method=method,
                                       ceg_kind=unsketched.ceg_kind,
                                       considered_paths=0, chosen_path=None)
    elif base == "optimistic":
        if choice is None or choice.aggr == "avg-aggr":
            raise SketchPlanError("optimistic sketches need a min-aggr or max-aggr choice")
        _, paths = optimistic_paths(q, cat, ceg_kind, starts=starts)
        unsketched = estimate_optimistic(q, cat, ceg_kind, choice, paths=paths)
        sketch_path = unsketched.chosen_path
        fixed_path = sketch_path
        sketch_ceg_kind = "edges"
        method = f"sketch:optimistic:{choice}:k{k}"
    else:
        raise ValueError(f"unknown sketch base {base!r}")

    if k > 1 and not sketch_attributes(sketch_path, q, sketch_ceg_kind):
        # every join attribute is bound: partitioning degenerates (identity)
        plan, components = make_sketch(q, g, sketch_path, 1,
                                       ceg_kind=sketch_ceg_kind, seed=seed)
        plan.fallback = True
    else:
        plan, components = make_sketch(q, g, sketch_path, k,
                                       ceg_kind=sketch_ceg_kind, seed=seed)

    total = Fraction(0)
    for comp in components:
        comp_cat = build_catalogue(comp.graph, [comp.query], h,
                                   walk_budget=walk_budget, seed=seed)
        if base == "molp":
            total += estimate_molp(comp.query, comp_cat).exact
        else:
            total += evaluate_optimistic_path(fixed_path, comp.query, comp_cat)
    return Estimate.from_exact(total, method=method, ceg_kind=unsketched.ceg_kind,
                               considered_paths=unsketched.considered_paths,
                               chosen_path=sketch_path)
