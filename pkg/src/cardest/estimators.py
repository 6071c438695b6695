"""Cardinality estimators on top of estimation graphs.

The optimistic family picks paths by a hop filter (max-hop / min-hop /
all-hops) and aggregates their estimates (max-aggr / min-aggr / avg-aggr),
giving 9 heuristics per graph kind.  The path oracle picks the single most
accurate path given the true count.  The pessimistic bound is the
minimum-weight path of the max-degree graph, found combinatorially.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction

from .catalogue import Catalogue, canonical_form, closing_spec
from .errors import EstimationError, MissingStatisticError
from .estgraph import (BOUND, DEFAULT_PATH_CAP, UNBOUND, Ceg, CegEdge,
                       PathEstimate, build_optimistic, enumerate_paths,
                       maxdeg_moves)
from .querymodel import QueryGraph, Subquery, connected_subqueries

HOP_CHOICES = ("max-hop", "min-hop", "all-hops")
AGGR_CHOICES = ("max-aggr", "min-aggr", "avg-aggr")

KIND_AVG = "avg-degree"
KIND_CLOSING = "closing-rate"
KIND_MAXDEG = "max-degree"


@dataclass(frozen=True)
class HeuristicChoice:
    hop: str
    aggr: str

    def __post_init__(self):
        if self.hop not in HOP_CHOICES:
            raise ValueError(f"hop must be one of {HOP_CHOICES}, got {self.hop!r}")
        if self.aggr not in AGGR_CHOICES:
            raise ValueError(f"aggr must be one of {AGGR_CHOICES}, got {self.aggr!r}")

    def __str__(self) -> str:
        return f"{self.hop}.{self.aggr}"


ALL_CHOICES = tuple(HeuristicChoice(h, a) for h in HOP_CHOICES for a in AGGR_CHOICES)


@dataclass
class Estimate:
    value: float
    exact: Fraction | None
    method: str
    ceg_kind: str
    considered_paths: int
    chosen_path: PathEstimate | None

    @staticmethod
    def from_exact(exact: Fraction, **kw) -> "Estimate":
        try:
            value = float(exact)
        except OverflowError:
            value = float("inf")
        return Estimate(value=value, exact=exact, **kw)


# ---------------------------------------------------------------------------
# Optimistic heuristics
# ---------------------------------------------------------------------------

def optimistic_paths(q: QueryGraph, cat: Catalogue, ceg_kind: str = KIND_AVG,
                     starts: str = "anchored",
                     cap: int = DEFAULT_PATH_CAP) -> tuple[Ceg, list[PathEstimate]]:
    if ceg_kind not in (KIND_AVG, KIND_CLOSING):
        raise ValueError(f"optimistic graphs are {KIND_AVG!r} or {KIND_CLOSING!r}")
    ceg = build_optimistic(q, cat, closing=(ceg_kind == KIND_CLOSING), starts=starts)
    paths = enumerate_paths(ceg, cap)
    if not paths:
        raise EstimationError("no bottom-to-top path; closing rates or counts missing")
    return ceg, paths


def filter_paths(paths: list[PathEstimate], hop: str) -> list[PathEstimate]:
    if hop == "all-hops":
        return list(paths)
    target = max(p.hops for p in paths) if hop == "max-hop" else min(p.hops for p in paths)
    return [p for p in paths if p.hops == target]


def estimate_optimistic(q: QueryGraph, cat: Catalogue, ceg_kind: str,
                        choice: HeuristicChoice, average: str = "arithmetic",
                        starts: str = "anchored", cap: int = DEFAULT_PATH_CAP,
                        paths: list[PathEstimate] | None = None) -> Estimate:
    if paths is None:
        _, paths = optimistic_paths(q, cat, ceg_kind, starts=starts, cap=cap)
    pool = filter_paths(paths, choice.hop)
    method = f"optimistic:{choice}"
    if choice.aggr == "avg-aggr":
        if average == "geometric":
            prod = Fraction(1)
            for p in pool:
                prod *= p.estimate
            value = float(prod) ** (1.0 / len(pool)) if prod > 0 else 0.0
            return Estimate(value=value, exact=None, method=method + ":geo",
                            ceg_kind=ceg_kind, considered_paths=len(pool), chosen_path=None)
        mean = sum((p.estimate for p in pool), Fraction(0)) / len(pool)
        return Estimate.from_exact(mean, method=method, ceg_kind=ceg_kind,
                                   considered_paths=len(pool), chosen_path=None)
    best = None
    for p in pool:  # first hit wins ties; enumeration order is deterministic
        if best is None:
            best = p
        elif choice.aggr == "max-aggr" and p.estimate > best.estimate:
            best = p
        elif choice.aggr == "min-aggr" and p.estimate < best.estimate:
            best = p
    return Estimate.from_exact(best.estimate, method=method, ceg_kind=ceg_kind,
                               considered_paths=len(pool), chosen_path=best)


def estimate_pstar(q: QueryGraph, cat: Catalogue, ceg_kind: str, true_count: int,
                   starts: str = "anchored", cap: int = DEFAULT_PATH_CAP,
                   paths: list[PathEstimate] | None = None) -> Estimate:
    """Oracle pick: the path whose estimate minimizes q-error vs the true count."""
    if paths is None:
        _, paths = optimistic_paths(q, cat, ceg_kind, starts=starts, cap=cap)

    def qerr(p: PathEstimate) -> Fraction | float:
        if p.estimate == 0:
            return float("inf") if true_count else Fraction(1)
        if true_count == 0:
            return float("inf")
        return max(Fraction(true_count) / p.estimate, p.estimate / Fraction(true_count))

    best = min(paths, key=lambda p: (qerr(p), p.estimate))
    return Estimate.from_exact(best.estimate, method="pstar", ceg_kind=ceg_kind,
                               considered_paths=len(paths), chosen_path=best)


# ---------------------------------------------------------------------------
# Pessimistic bound (minimum-weight path over max-degree statistics)
# ---------------------------------------------------------------------------

def estimate_molp(q: QueryGraph, cat: Catalogue) -> Estimate:
    """Upper bound on the true count: 2**(min-weight path of the max-degree graph).

    Runs Dijkstra directly over the degree-statistic move table; materializing
    the graph is unnecessary.  An empty catalogue pattern of q short-circuits
    to 0 (the query then has no answers either).
    """
    for sub in connected_subqueries(q, cat.h):
        cnt = cat.count(sub)
        if cnt is None:
            raise MissingStatisticError(
                f"count for pattern {canonical_form(sub.pattern())[0]}")
        if cnt == 0:
            return Estimate.from_exact(Fraction(0), method="bound", ceg_kind=KIND_MAXDEG,
                                       considered_paths=0, chosen_path=None)
    path = _molp_min_path(q, cat)
    return Estimate.from_exact(path.estimate, method="bound", ceg_kind=KIND_MAXDEG,
                               considered_paths=1, chosen_path=path)


def _molp_min_path(q: QueryGraph, cat: Catalogue) -> PathEstimate:
    names = sorted(q.vars)
    bit = {v: 1 << i for i, v in enumerate(names)}
    full = (1 << len(names)) - 1

    grouped: dict[tuple[int, int], tuple[int, tuple]] = {}
    for x, y, deg, prov in maxdeg_moves(q, cat):
        xm = sum(bit[v] for v in x)
        ym = sum(bit[v] for v in y)
        old = grouped.get((xm, ym))
        if old is None or (deg, prov) < old:
            grouped[(xm, ym)] = (deg, prov)
    moves = sorted((xm, ym, deg, prov) for (xm, ym), (deg, prov) in grouped.items())

    key_cache: dict[int, tuple[str, ...]] = {}

    def key_of(mask: int) -> tuple[str, ...]:
        got = key_cache.get(mask)
        if got is None:
            got = tuple(n for n in names if bit[n] & mask)
            key_cache[mask] = got
        return got

    counter = 0
    heap: list[tuple[int, tuple, int, int, tuple]] = [(1, (key_of(0),), 0, 0, ())]
    settled: set[int] = set()
    while heap:
        weight, keys, _, mask, edges = heapq.heappop(heap)
        if mask in settled:
            continue
        settled.add(mask)
        if mask == full:
            ceg_edges = tuple(
                CegEdge(frozenset(key_of(sm)), frozenset(key_of(dm)), Fraction(deg),
                        UNBOUND if xm == 0 else BOUND, (prov,))
                for sm, dm, deg, xm, prov in edges)
            return PathEstimate(ceg_edges, Fraction(weight))
        for xm, ym, deg, prov in moves:
            if xm & mask != xm:
                continue
            nxt = mask | ym
            if nxt == mask or nxt in settled:
                continue
            counter += 1
            heapq.heappush(heap, (weight * deg, keys + (key_of(nxt),), counter, nxt,
                                  edges + ((mask, nxt, deg, xm, prov),)))
    raise EstimationError("attribute lattice top unreachable; degree statistics missing")


# ---------------------------------------------------------------------------
# Re-evaluating a fixed optimistic path against another catalogue
# ---------------------------------------------------------------------------

def evaluate_optimistic_path(path: PathEstimate, query: QueryGraph,
                             cat: Catalogue) -> Fraction:
    """Value of the formula behind `path` using `cat`'s statistics.

    Merged parallel provenances are disambiguated by the first (sorted) entry,
    so the same formula is applied to every statistics source.
    """
    prod = Fraction(1)
    for e in path.edges:
        prov = e.provenance[0]
        tag = prov[0]
        if tag == "count":
            cnt = _need_count(query, cat, prov[1])
            prod *= cnt
        elif tag == "ratio":
            c_ext = _need_count(query, cat, prov[1])
            c_int = _need_count(query, cat, prov[2])
            if c_int == 0:
                return Fraction(0)
            prod *= Fraction(c_ext, c_int)
        elif tag == "closing":
            cyc = frozenset(prov[2])
            missing = e.dst - e.src
            if len(missing) != 1:
                raise EstimationError("closing edge must add exactly one query edge")
            (close_idx,) = missing
            rate = cat.closing_rate(closing_spec(query, cyc, close_idx).key())
            if rate is None:
                raise MissingStatisticError(f"closing rate for cycle {sorted(cyc)}")
            prod *= rate
        else:
            raise EstimationError(f"cannot re-evaluate edge kind {e.kind!r}")
        if prod == 0:
            return Fraction(0)
    return prod


def _need_count(query: QueryGraph, cat: Catalogue, indices: tuple[int, ...]) -> int:
    cnt = cat.count(Subquery(query, frozenset(indices)))
    if cnt is None:
        raise MissingStatisticError(f"count for subquery {sorted(indices)}")
    return cnt
