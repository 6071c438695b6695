"""Estimation graphs: subqueries as vertices, extension rates as edge weights.

Four builds share one graph type.  Over edge subsets: the optimistic graph
(average-degree rates from pattern counts) and its cycle-closing-rate variant.
Over attribute subsets: the max-degree graph whose minimum-weight path is the
pessimistic bound, and the cover graph induced by a per-relation attribute
cover (a sub-graph of the max-degree graph).

Every bottom-to-top path yields an estimate: the exact rational product of
its rates.  Base-2 log weights are carried alongside for the additive view.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

from .catalogue import Catalogue, canonical_form, closing_spec
from .errors import (ConfigError, EstimationError, MissingStatisticError,
                     PathOverflowError, QueryValidationError)
from .querymodel import QueryGraph, Subquery, connected_subqueries, cycles

START = "start"
EXTENSION = "extension"
PROJECTION = "projection"
CYCLE_CLOSING = "cycle-closing"
UNBOUND = "unbound"
BOUND = "bound"

MAX_ATTR_VARS = 12
DEFAULT_PATH_CAP = 10 ** 6


@dataclass(frozen=True)
class CegEdge:
    src: frozenset
    dst: frozenset
    rate: Fraction
    kind: str
    provenance: tuple

    @property
    def log_weight(self) -> float:
        if self.rate == 0:
            return float("-inf")
        return math.log2(self.rate)

    def extension_vars(self, q: QueryGraph, ceg_kind: str) -> frozenset[str]:
        if ceg_kind == "attrs":
            return frozenset(self.dst - self.src)
        return q.vars_of(self.dst) - q.vars_of(self.src)


@dataclass(frozen=True)
class PathEstimate:
    edges: tuple[CegEdge, ...]
    estimate: Fraction

    @property
    def hops(self) -> int:
        return len(self.edges)

    def vertices(self) -> tuple[frozenset, ...]:
        if not self.edges:
            return (frozenset(),)
        return (self.edges[0].src,) + tuple(e.dst for e in self.edges)

    def log_weight(self) -> float:
        return sum(e.log_weight for e in self.edges)


def _vkey(vertex: frozenset) -> tuple:
    return tuple(sorted(vertex))


class Ceg:
    """Weighted DAG-ish graph over subquery vertices, frozen after build."""

    def __init__(self, kind: str, query: QueryGraph, top: frozenset,
                 adjacency: dict[frozenset, list[CegEdge]], meta: dict | None = None):
        self.kind = kind
        self.query = query
        self.top = top
        self.bottom: frozenset = frozenset()
        self._adj = {
            v: tuple(sorted(edges, key=lambda e: (_vkey(e.dst), e.rate, e.kind, e.provenance)))
            for v, edges in adjacency.items()
        }
        self.meta = dict(meta or {})

    def out(self, vertex: frozenset) -> tuple[CegEdge, ...]:
        return self._adj.get(vertex, ())

    def all_edges(self) -> Iterator[CegEdge]:
        for v in sorted(self._adj, key=_vkey):
            yield from self._adj[v]

    def vertices(self) -> list[frozenset]:
        seen = set(self._adj)
        for edges in self._adj.values():
            seen.update(e.dst for e in edges)
        return sorted(seen | {self.bottom, self.top}, key=_vkey)

    def has_projection_edges(self) -> bool:
        return any(e.kind == PROJECTION for e in self.all_edges())


class _EdgeAccumulator:
    """Collects edges, merging parallels that agree on endpoints, rate, kind."""

    def __init__(self):
        self._merged: dict[tuple, list] = {}

    def add(self, src: frozenset, dst: frozenset, rate: Fraction, kind: str, prov: tuple):
        key = (_vkey(src), _vkey(dst), rate, kind)
        entry = self._merged.setdefault(key, [src, dst, rate, kind, []])
        if prov not in entry[4]:
            entry[4].append(prov)

    def discard_pair(self, src: frozenset, dst: frozenset):
        sk, dk = _vkey(src), _vkey(dst)
        for key in [k for k in self._merged if k[0] == sk and k[1] == dk]:
            del self._merged[key]

    def pairs(self) -> set[tuple[frozenset, frozenset]]:
        return {(entry[0], entry[1]) for entry in self._merged.values()}

    def adjacency(self) -> dict[frozenset, list[CegEdge]]:
        adj: dict[frozenset, list[CegEdge]] = {}
        for src, dst, rate, kind, provs in self._merged.values():
            adj.setdefault(src, []).append(
                CegEdge(src, dst, rate, kind, tuple(sorted(provs))))
        return adj


# ---------------------------------------------------------------------------
# Optimistic builds (edge-subset vertices)
# ---------------------------------------------------------------------------

def build_optimistic(q: QueryGraph, cat: Catalogue, closing: bool = False,
                     starts: str = "anchored") -> Ceg:
    """Estimation graph over connected subqueries with average-degree rates.

    Start edges leave the empty vertex with the known count of a size
    min(h, |Q|) subquery; by default only the lexicographically smallest such
    subquery anchors the graph (starts="all" admits every one).  An extension
    from S to S' conditions a size-min(h,|S'|) pattern E on its overlap with S
    and carries rate count(E)/count(E&S).  When several extensions of S close
    a cycle that S lacks, only those are kept (early cycle closing).  With
    closing=True, the hop that completes a cycle longer than h uses the
    sampled closing rate instead of a count ratio.
    """
    m = len(q)
    h = cat.h
    subs = connected_subqueries(q, m)
    index_sets = {s.indices for s in subs}
    by_indices = {s.indices: s for s in subs}
    start_size = min(h, m)
    start_vertices = sorted((s for s in index_sets if len(s) == start_size),
                            key=_vkey)
    if starts == "anchored":
        start_vertices = start_vertices[:1]
    elif starts != "all":
        raise ValueError(f"starts must be 'anchored' or 'all', got {starts!r}")

    acc = _EdgeAccumulator()
    for s in start_vertices:
        cnt = _require_count(cat, by_indices[s])
        acc.add(frozenset(), s, Fraction(cnt), START, ("count", tuple(sorted(s))))

    ext_patterns = [s.indices for s in subs if len(s.indices) <= h]
    for s_set in sorted(index_sets, key=_vkey):
        if len(s_set) < start_size or s_set == frozenset(range(m)):
            continue
        for ext in ext_patterns:
            diff = ext - s_set
            inter = ext & s_set
            if not diff or not inter:
                continue
            target = s_set | diff
            if target not in index_sets or inter not in index_sets:
                continue
            if len(ext) != min(h, len(target)):
                continue
            c_ext = _require_count(cat, by_indices[ext])
            c_int = _require_count(cat, by_indices[inter])
            rate = Fraction(c_ext, c_int) if c_int else Fraction(0)
            acc.add(s_set, target, rate, EXTENSION,
                    ("ratio", tuple(sorted(ext)), tuple(sorted(inter))))

    meta: dict = {"h": h, "starts": starts}
    all_cycles = cycles(q).cycles
    if closing:
        _apply_closing_rates(q, cat, acc, [c for c in all_cycles if len(c) > h], meta)
    adjacency = acc.adjacency()
    _prune_early_cycle_closing(adjacency, all_cycles)
    return Ceg("edges", q, frozenset(range(m)), adjacency, meta)


def _require_count(cat: Catalogue, sub: Subquery) -> int:
    cnt = cat.count(sub)
    if cnt is None:
        raise MissingStatisticError(f"count for pattern {canonical_form(sub.pattern())[0]}")
    return cnt


def _apply_closing_rates(q: QueryGraph, cat: Catalogue, acc: _EdgeAccumulator,
                         big_cycles: list[frozenset[int]], meta: dict) -> None:
    if not big_cycles:
        return
    for src, dst in sorted(acc.pairs(), key=lambda p: (_vkey(p[0]), _vkey(p[1]))):
        closable = [c for c in big_cycles if c <= dst and len(c & src) == len(c) - 1]
        if not closable:
            continue
        acc.discard_pair(src, dst)
        if len(closable) > 1:
            meta["overlapping_cycles"] = True
        added = dst - src
        for cyc in closable:
            missing = cyc - src
            if added != missing:
                continue  # impure closing hop; the single-edge route still exists
            (close_idx,) = missing
            spec = closing_spec(q, cyc, close_idx)
            rate = cat.closing_rate(spec.key())
            if rate is None:
                raise MissingStatisticError(f"closing rate {spec.key()}")
            acc.add(src, dst, rate, CYCLE_CLOSING,
                    ("closing", spec.key(), tuple(sorted(cyc))))


def _prune_early_cycle_closing(adjacency: dict[frozenset, list[CegEdge]],
                               all_cycles: Sequence[frozenset[int]]) -> None:
    if not all_cycles:
        return
    contained: dict[frozenset, frozenset[int]] = {}

    def cycles_in(vertex: frozenset) -> frozenset[int]:
        got = contained.get(vertex)
        if got is None:
            got = frozenset(i for i, c in enumerate(all_cycles) if c <= vertex)
            contained[vertex] = got
        return got

    for src in list(adjacency):
        edges = adjacency[src]
        src_cycles = cycles_in(src)
        closing_edges = [e for e in edges if cycles_in(e.dst) > src_cycles]
        if closing_edges:
            adjacency[src] = closing_edges


# ---------------------------------------------------------------------------
# Max-degree and cover builds (attribute-subset vertices)
# ---------------------------------------------------------------------------

def maxdeg_moves(q: QueryGraph, cat: Catalogue) -> list[tuple[frozenset, frozenset, int, tuple]]:
    """(X, Y, deg, provenance) extension moves from every catalogue pattern of q."""
    moves: list[tuple[frozenset, frozenset, int, tuple]] = []
    for sub in connected_subqueries(q, cat.h):
        pattern_vars = sorted(sub.vars())
        for y in _var_subsets(pattern_vars):
            if not y:
                continue
            for x in _var_subsets(sorted(y)):
                if frozenset(x) == frozenset(y):
                    continue
                deg = cat.max_deg(sub, x, y)
                if deg is None:
                    raise MissingStatisticError(
                        f"deg({sorted(x)}, {sorted(y)}) for pattern "
                        f"{canonical_form(sub.pattern())[0]}")
                moves.append((frozenset(x), frozenset(y), deg,
                              ("deg", sub.sorted_indices(), tuple(sorted(x)), tuple(sorted(y)))))
    return moves


def _var_subsets(items: Sequence[str]) -> list[tuple[str, ...]]:
    out: list[tuple[str, ...]] = [()]
    for item in items:
        out += [s + (item,) for s in out]
    return sorted(out, key=lambda s: (len(s), s))


def _all_var_subsets(q: QueryGraph) -> list[frozenset[str]]:
    if len(q.vars) > MAX_ATTR_VARS:
        raise ConfigError(f"attribute-subset graphs are capped at {MAX_ATTR_VARS} variables")
    return [frozenset(s) for s in _var_subsets(sorted(q.vars))]


def build_maxdeg(q: QueryGraph, cat: Catalogue, with_projection_edges: bool = False) -> Ceg:
    """Pessimistic graph: one vertex per attribute subset, max-degree rates.

    For every catalogue pattern P of q, every X subset Y over P's variables,
    and every vertex W1 containing X there is an edge W1 -> W1|Y with rate
    deg(X, Y, P).  Projection edges (weight 0, downward one attribute) are
    included only on request; they never change minimum path weights.
    """
    subsets = _all_var_subsets(q)
    moves = maxdeg_moves(q, cat)
    acc = _EdgeAccumulator()
    for w1 in subsets:
        for x, y, deg, prov in moves:
            if not x <= w1:
                continue
            w2 = w1 | y
            if w2 == w1:
                continue
            acc.add(w1, w2, Fraction(deg), UNBOUND if not x else BOUND, prov)
    if with_projection_edges:
        for w in subsets:
            for a in sorted(w):
                acc.add(w, w - {a}, Fraction(1), PROJECTION, ("proj", a))
    return Ceg("attrs", q, frozenset(q.vars), acc.adjacency(), {"h": cat.h})


def build_cover(q: QueryGraph, cat: Catalogue,
                cover: Sequence[tuple[int, Iterable[str]]]) -> Ceg:
    """Cover graph: extension edges restricted to a per-relation attribute cover.

    cover lists (query-edge index, covered variable subset) pairs whose
    subsets must union to all query variables.  Edges W1 -> W1|(Aj-Aj') with
    rate deg(Aj', Aj, R_j) exist for every Aj' subset of Aj contained in W1.
    No projection edges.  The result is a sub-graph of the max-degree graph.
    """
    covered: set[str] = set()
    normalized: list[tuple[int, frozenset[str]]] = []
    for edge_idx, attr_set in cover:
        attrs = frozenset(attr_set)
        edge_vars = frozenset(q.edge_vars(edge_idx))
        if not attrs <= edge_vars:
            raise QueryValidationError(
                f"cover entry {sorted(attrs)} not within edge {edge_idx} vars")
        covered |= attrs
        normalized.append((edge_idx, attrs))
    if covered != set(q.vars):
        raise QueryValidationError("cover does not span all query variables")

    subsets = _all_var_subsets(q)
    acc = _EdgeAccumulator()
    for edge_idx, attrs in normalized:
        sub = Subquery(q, frozenset({edge_idx}))
        for ajp in _var_subsets(sorted(attrs)):
            ajp_set = frozenset(ajp)
            add = attrs - ajp_set
            if not add:
                continue
            deg = cat.max_deg(sub, ajp_set, attrs)
            if deg is None:
                raise MissingStatisticError(
                    f"deg({sorted(ajp_set)}, {sorted(attrs)}) for edge {edge_idx}")
            prov = ("cover", edge_idx, tuple(sorted(attrs)), tuple(sorted(ajp_set)))
            for w1 in subsets:
                if not ajp_set <= w1:
                    continue
                w2 = w1 | add
                if w2 == w1:
                    continue
                acc.add(w1, w2, Fraction(deg), UNBOUND if not ajp_set else BOUND, prov)
    return Ceg("attrs", q, frozenset(q.vars), acc.adjacency(), {"cover": True})


# ---------------------------------------------------------------------------
# Path enumeration and minimum-weight search
# ---------------------------------------------------------------------------

def count_paths(ceg: Ceg) -> int:
    memo: dict[frozenset, int] = {}

    def rec(v: frozenset) -> int:
        if v == ceg.top:
            return 1
        got = memo.get(v)
        if got is None:
            got = sum(rec(e.dst) for e in ceg.out(v))
            memo[v] = got
        return got

    return rec(ceg.bottom)


def iter_paths(ceg: Ceg) -> Iterator[PathEstimate]:
    """All simple bottom-to-top paths in deterministic order (DFS)."""
    if ceg.has_projection_edges():
        raise ValueError("path enumeration needs an extension-only graph")

    def walk(v: frozenset, edges: tuple[CegEdge, ...], prod: Fraction) -> Iterator[PathEstimate]:
        if v == ceg.top:
            yield PathEstimate(edges, prod)
            return
        for e in ceg.out(v):
            yield from walk(e.dst, edges + (e,), prod * e.rate)

    yield from walk(ceg.bottom, (), Fraction(1))


def enumerate_paths(ceg: Ceg, cap: int = DEFAULT_PATH_CAP) -> list[PathEstimate]:
    total = count_paths(ceg)
    if total > cap:
        raise PathOverflowError(total, cap)
    return list(iter_paths(ceg))


def min_weight_path(ceg: Ceg) -> PathEstimate:
    """Minimum-weight bottom-to-top path (Dijkstra on log weights).

    Rates below 1 are rejected except exact zeros, which short-circuit: a
    zero-rate edge reachable on a bottom-to-top route makes the minimum 0.
    Ties break toward the lexicographically smallest vertex sequence.
    """
    import heapq

    zero_path = _zero_short_circuit(ceg)
    if zero_path is not None:
        return zero_path
    for e in ceg.all_edges():
        if 0 < e.rate < 1:
            raise ValueError("min_weight_path needs all rates >= 1 (or exactly 0)")

    counter = 0  # breaks exact heap ties before unorderable payloads
    heap: list[tuple[Fraction, tuple, int, frozenset, tuple[CegEdge, ...]]] = [
        (Fraction(1), (_vkey(ceg.bottom),), counter, ceg.bottom, ())
    ]
    settled: set[frozenset] = set()
    while heap:
        weight, keys, _, vertex, edges = heapq.heappop(heap)
        if vertex in settled:
            continue
        settled.add(vertex)
        if vertex == ceg.top:
            return PathEstimate(edges, weight)
        for e in ceg.out(vertex):
            if e.dst in settled or e.rate == 0:
                continue
            counter += 1
            heapq.heappush(heap, (weight * e.rate, keys + (_vkey(e.dst),),
                                  counter, e.dst, edges + (e,)))
    raise EstimationError("top vertex unreachable; statistics missing")


def _zero_short_circuit(ceg: Ceg) -> PathEstimate | None:
    zero_edges = [e for e in ceg.all_edges() if e.rate == 0]
    if not zero_edges:
        return None
    fwd = _hop_tree(ceg, ceg.bottom, forward=True)
    bwd = _hop_tree(ceg, ceg.top, forward=False)
    for e in sorted(zero_edges, key=lambda e: (_vkey(e.src), _vkey(e.dst))):
        if e.src in fwd and e.dst in bwd:
            prefix = _trace(fwd, e.src)
            suffix = _trace_back(bwd, e.dst)
            return PathEstimate(tuple(prefix) + (e,) + tuple(suffix), Fraction(0))
    return None


def _hop_tree(ceg: Ceg, root: frozenset, forward: bool) -> dict[frozenset, CegEdge | None]:
    tree: dict[frozenset, CegEdge | None] = {root: None}
    frontier = [root]
    incoming: dict[frozenset, list[CegEdge]] = {}
    if not forward:
        for e in ceg.all_edges():
            incoming.setdefault(e.dst, []).append(e)
    while frontier:
        nxt: list[frozenset] = []
        for v in frontier:
            edges = ceg.out(v) if forward else incoming.get(v, [])
            for e in edges:
                other = e.dst if forward else e.src
                if other not in tree:
                    tree[other] = e
                    nxt.append(other)
        frontier = sorted(nxt, key=_vkey)
    return tree


def _trace(tree: dict[frozenset, CegEdge | None], vertex: frozenset) -> list[CegEdge]:
    edges: list[CegEdge] = []
    while tree[vertex] is not None:
        e = tree[vertex]
        edges.append(e)
        vertex = e.src
    return list(reversed(edges))


def _trace_back(tree: dict[frozenset, CegEdge | None], vertex: frozenset) -> list[CegEdge]:
    edges: list[CegEdge] = []
    while tree[vertex] is not None:
        e = tree[vertex]
        edges.append(e)
        vertex = e.dst
    return edges


# ---------------------------------------------------------------------------
# Debug dump
# ---------------------------------------------------------------------------

def to_dot(ceg: Ceg) -> str:
    """DOT rendering with rates and provenance on the edges."""

    def name(v: frozenset) -> str:
        if not v:
            return "{}"
        if ceg.kind == "edges":
            return "{" + ",".join(f"e{i}:{ceg.query.edges[i].label}" for i in sorted(v)) + "}"
        return "{" + ",".join(sorted(v)) + "}"

    lines = ["digraph ceg {", "  rankdir=BT;"]
    for v in ceg.vertices():
        lines.append(f'  "{name(v)}";')
    for e in ceg.all_edges():
        rate = f"{float(e.rate):g}"
        prov = ";".join(str(p) for p in e.provenance)
        lines.append(f'  "{name(e.src)}" -> "{name(e.dst)}" '
                     f'[label="{rate} [{e.kind}] {prov}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
