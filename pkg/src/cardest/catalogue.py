"""Statistics store: pattern counts, max-degree statistics, cycle-closing rates.

Patterns are connected, directed, edge-labeled graphs with at most `h` edges,
keyed up to isomorphism (variable names are irrelevant).  Counts and degree
statistics are exact oracle values on the source graph; closing rates come
from sampled (or exhaustively enumerated) walks.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import permutations
from typing import IO, Iterable, Sequence

from . import oracle
from .errors import CatalogueFormatError, ConfigError, QueryValidationError
from .graphstore import LabeledGraph, dump_graph
from .oracle import FWD, REV, LabelStep
from .querymodel import QEdge, QueryGraph, Subquery, connected_subqueries, cycles

FORMAT_VERSION = 1

Pattern = tuple[tuple[str, str, str], ...]  # (srcVar, dstVar, label) triples


# ---------------------------------------------------------------------------
# Canonical forms
# ---------------------------------------------------------------------------

@lru_cache(maxsize=65536)
def canonical_form(pattern: Pattern) -> tuple[str, tuple[tuple[str, int], ...]]:
    """Isomorphism-invariant key plus one optimal variable->index mapping.

    Minimizes the sorted edge encoding over all variable orderings; any
    automorphic mapping gives identical degree statistics, so returning a
    single optimal mapping is enough for lookups.
    """
    var_list: list[str] = []
    for s, d, _ in pattern:
        if s not in var_list:
            var_list.append(s)
        if d not in var_list:
            var_list.append(d)
    n = len(var_list)
    best_enc = None
    best_perm = None
    for perm in permutations(range(n)):
        pos = {var_list[i]: perm[i] for i in range(n)}
        enc = tuple(sorted((pos[s], pos[d], lab) for s, d, lab in pattern))
        if best_enc is None or enc < best_enc:
            best_enc = enc
            best_perm = perm
    key = json.dumps(best_enc, separators=(",", ":"))
    mapping = tuple((var_list[i], best_perm[i]) for i in range(n))
    return key, mapping


def canonical_key(sub: Subquery) -> str:
    return canonical_form(sub.pattern())[0]


def pattern_of(sub: Subquery) -> Pattern:
    return sub.pattern()


def _key_to_query(key: str) -> QueryGraph:
    """Representative query for a canonical key; its vars are x0..x{n-1}."""
    enc = json.loads(key)
    return QueryGraph([QEdge(f"x{s}", f"x{d}", lab) for s, d, lab in enc])


def _index_subset_key(indices: Iterable[int]) -> str:
    return ",".join(str(i) for i in sorted(indices))


def _deg_entry_key(x_idx: Iterable[int], y_idx: Iterable[int]) -> str:
    return f"{_index_subset_key(x_idx)}|{_index_subset_key(y_idx)}"


# ---------------------------------------------------------------------------
# Cycle-closing keys
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClosingSpec:
    """How to sample one cycle-closing rate.

    walk: the label sequence of the cycle minus its closing edge.
    close_label: the closing edge's label.
    close_from_end: True when the closing data edge runs from the walk's last
    vertex to its first (False: first to last).
    """

    walk: tuple[LabelStep, ...]
    close_label: str
    close_from_end: bool

    @property
    def length(self) -> int:
        return len(self.walk)

    def key(self) -> str:
        prev = f"{self.walk[0][0]}{self.walk[0][1]}"
        nxt = f"{self.walk[-1][0]}{self.walk[-1][1]}"
        orient = "e>s" if self.close_from_end else "s>e"
        return json.dumps([prev, f"{self.close_label}:{orient}", nxt, self.length],
                          separators=(",", ":"))

    def marginal_key(self) -> str:
        prev = f"{self.walk[0][0]}{self.walk[0][1]}"
        nxt = f"{self.walk[-1][0]}{self.walk[-1][1]}"
        orient = "e>s" if self.close_from_end else "s>e"
        return json.dumps([prev, f"{self.close_label}:{orient}", nxt, None],
                          separators=(",", ":"))


def closing_spec(q: QueryGraph, cycle: frozenset[int], close_idx: int) -> ClosingSpec:
    """Walk specification for closing `cycle` with edge `close_idx`.

    The walk traverses the cycle minus the closing edge; of the two possible
    traversal directions the one with the lexicographically smaller token
    sequence is used, so building and lookup agree on the key.
    """
    if close_idx not in cycle:
        raise QueryValidationError("closing edge must belong to the cycle")
    close = q.edges[close_idx]
    residual = sorted(cycle - {close_idx})
    path_a = _walk_steps(q, residual, start=close.src)   # src -> ... -> dst
    path_b = _walk_steps(q, residual, start=close.dst)   # dst -> ... -> src
    # Walk from src: closing edge runs start -> end; from dst: end -> start.
    spec_a = ClosingSpec(path_a, close.label, close_from_end=False)
    spec_b = ClosingSpec(path_b, close.label, close_from_end=True)
    return min(spec_a, spec_b, key=lambda s: (s.walk, s.close_from_end))


def _walk_steps(q: QueryGraph, residual: Sequence[int], start: str) -> tuple[LabelStep, ...]:
    incidence: dict[str, list[int]] = {}
    for i in residual:
        incidence.setdefault(q.edges[i].src, []).append(i)
        incidence.setdefault(q.edges[i].dst, []).append(i)
    steps: list[LabelStep] = []
    current = start
    used: set[int] = set()
    for _ in residual:
        nxt = [i for i in incidence[current] if i not in used]
        if len(nxt) != 1:
            raise QueryValidationError("cycle edges do not form a simple path")
        i = nxt[0]
        used.add(i)
        e = q.edges[i]
        if e.src == current:
            steps.append((e.label, FWD))
            current = e.dst
        else:
            steps.append((e.label, REV))
            current = e.src
    return tuple(steps)


# ---------------------------------------------------------------------------
# The catalogue
# ---------------------------------------------------------------------------

@dataclass
class ClosingStat:
    samples: int
    closures: int

    @property
    def rate(self) -> Fraction:
        if self.samples == 0:
            return Fraction(0)
        return Fraction(self.closures, self.samples)


@dataclass
class Catalogue:
    h: int
    counts: dict[str, int] = field(default_factory=dict)
    deg_stats: dict[str, dict[str, int]] = field(default_factory=dict)
    closing: dict[str, ClosingStat] = field(default_factory=dict)
    closing_marginal: dict[str, ClosingStat] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    # -- lookups ------------------------------------------------------------

    def count_pattern(self, pattern: Pattern) -> int | None:
        key, _ = canonical_form(pattern)
        return self.counts.get(key)

    def count(self, sub: Subquery) -> int | None:
        return self.count_pattern(sub.pattern())

    def max_deg(self, sub: Subquery, x_vars: Iterable[str], y_vars: Iterable[str]) -> int | None:
        key, mapping = canonical_form(sub.pattern())
        stats = self.deg_stats.get(key)
        if stats is None:
            return None
        pos = dict(mapping)
        xs = frozenset(x_vars)
        ys = frozenset(y_vars)
        if not xs <= ys or not ys <= set(pos):
            raise QueryValidationError("need X ⊆ Y ⊆ vars(pattern)")
        return stats.get(_deg_entry_key((pos[v] for v in xs), (pos[v] for v in ys)))

    def closing_rate(self, key: str) -> Fraction | None:
        stat = self.closing.get(key)
        if stat is None:
            stat = self.closing_marginal.get(key)
        if stat is None:
            return None
        return stat.rate

    def pattern_keys(self) -> list[str]:
        return sorted(self.counts)

    def footprint_bytes(self) -> int:
        """Rough serialized size of the statistics tables."""
        return len(serialize(self).encode("utf-8"))

    def graph_signature(self) -> str | None:
        return (self.meta.get("graph") or {}).get("sha256")


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def build_catalogue(
    g: LabeledGraph,
    workload: Sequence[QueryGraph] | None,
    h: int,
    walk_budget: int | None = 1000,
    seed: int = 0,
    exhaustive: bool = False,
    max_exhaustive_patterns: int = 200_000,
) -> Catalogue:
    """Collect statistics for every connected pattern of <= h edges that the
    workload needs (or every label/shape combination in exhaustive mode), plus
    degree statistics per pattern and closing rates for workload cycles longer
    than h.

    walk_budget=None switches closing-rate estimation to exhaustive walk
    enumeration.
    """
    if h < 2:
        raise ConfigError(f"h must be >= 2, got {h}")
    if exhaustive:
        keys = _exhaustive_pattern_keys(g, h, max_exhaustive_patterns)
    else:
        if workload is None:
            raise ConfigError("workload mode needs a workload")
        keys = set()
        for q in workload:
            for sub in connected_subqueries(q, h):
                keys.add(canonical_key(sub))

    cat = Catalogue(h=h)
    for key in sorted(keys):
        rep = _key_to_query(key)
        rows = oracle.matches(g, rep)
        cat.counts[key] = len(set(rows))
        cat.deg_stats[key] = _degree_table(rep, rows)

    if workload:
        _build_closing_rates(cat, g, workload, h, walk_budget, seed)

    cat.meta = {
        "h": h,
        "seed": seed,
        "walk_budget": walk_budget,
        "mode": "exhaustive" if exhaustive else "workload",
        "patterns": len(cat.counts),
        "graph": {
            "vertices": len(g.vertices),
            "edges": len(g.edges),
            "labels": len(g.labels),
            "sha256": hashlib.sha256(dump_graph(g).encode("utf-8")).hexdigest(),
        },
    }
    return cat


def _degree_table(rep: QueryGraph, rows: list[tuple[int, ...]]) -> dict[str, int]:
    """deg(X, Y) for every X subseteq Y over the representative's variables."""
    n = len(rep.vars)
    uniq = sorted(set(rows))
    table: dict[str, int] = {}
    subsets = _subsets(range(n))
    for y in subsets:
        y_set = frozenset(y)
        for x in subsets:
            if not frozenset(x) <= y_set:
                continue
            if not uniq:
                table[_deg_entry_key(x, y)] = 0
                continue
            buckets: dict[tuple[int, ...], set[tuple[int, ...]]] = {}
            for row in uniq:
                buckets.setdefault(tuple(row[i] for i in x), set()).add(
                    tuple(row[i] for i in y))
            table[_deg_entry_key(x, y)] = max(len(v) for v in buckets.values())
    return table


def _subsets(items: Iterable[int]) -> list[tuple[int, ...]]:
    items = list(items)
    out: list[tuple[int, ...]] = [()]
    for item in items:
        out += [s + (item,) for s in out]
    return sorted(out, key=lambda s: (len(s), s))


def _build_closing_rates(cat: Catalogue, g: LabeledGraph, workload: Sequence[QueryGraph],
                         h: int, walk_budget: int | None, seed: int) -> None:
    demanded: dict[str, ClosingSpec] = {}
    for q in workload:
        for cyc in cycles(q).longer_than(h):
            for close_idx in sorted(cyc):
                spec = closing_spec(q, cyc, close_idx)
                demanded.setdefault(spec.key(), spec)
    for i, key in enumerate(sorted(demanded)):
        spec = demanded[key]
        if walk_budget is None:
            walks = list(oracle.enumerate_label_paths(g, spec.walk))
            samples = len(walks)
        else:
            walks = oracle.sample_label_paths(g, spec.walk, walk_budget, seed + i)
            samples = walk_budget
        closures = 0
        for walk in walks:
            a, b = (walk[-1], walk[0]) if spec.close_from_end else (walk[0], walk[-1])
            if g.has_edge(a, b, spec.close_label):
                closures += 1
        cat.closing[key] = ClosingStat(samples, closures)
    marginals: dict[str, ClosingStat] = {}
    for key, spec in demanded.items():
        stat = cat.closing[key]
        agg = marginals.setdefault(spec.marginal_key(), ClosingStat(0, 0))
        agg.samples += stat.samples
        agg.closures += stat.closures
    cat.closing_marginal = marginals


def _exhaustive_pattern_keys(g: LabeledGraph, h: int, cap: int) -> set[str]:
    """Canonical keys of every connected <=h-edge pattern over the graph's labels."""
    labels = list(g.labels)
    if not labels:
        return set()
    shapes = _connected_shapes(h)
    estimated = sum(len(labels) ** len(shape) for shape in shapes)
    if estimated > cap:
        raise ConfigError(
            f"exhaustive catalogue would hold ~{estimated} patterns (cap {cap}); "
            "use workload mode")
    keys: set[str] = set()
    for shape in shapes:
        keys |= _label_shape(shape, labels, 0, [])
    return keys


def _label_shape(shape, labels, i, acc) -> set[str]:
    if i == len(shape):
        pattern = tuple(sorted((f"x{s}", f"x{d}", lab)
                               for (s, d), lab in zip(shape, acc)))
        return {canonical_form(pattern)[0]}
    out: set[str] = set()
    for lab in labels:
        out |= _label_shape(shape, labels, i + 1, acc + [lab])
    return out


def _connected_shapes(h: int) -> list[tuple[tuple[int, int], ...]]:
    """Unlabeled connected directed shapes with <= h edges, deduped up to iso."""
    shapes: set[tuple[tuple[int, int], ...]] = {((0, 1),)}
    frontier = list(shapes)
    for _ in range(h - 1):
        grown: list[tuple[tuple[int, int], ...]] = []
        for shape in frontier:
            n = max(max(e) for e in shape) + 1
            candidates = set()
            for a in range(n):
                for b in list(range(n)) + [n]:
                    if a == b:
                        continue
                    for e in ((a, b), (b, a)):
                        if e in shape or max(e) > n:
                            continue
                        candidates.add(e)
            for e in candidates:
                new = tuple(sorted(shape + (e,)))
                pattern = tuple(sorted((f"x{s}", f"x{d}", "L") for s, d in new))
                canon = canonical_form(pattern)[0]
                marker = tuple(tuple(x[:2]) for x in json.loads(canon))
                if marker not in shapes:
                    shapes.add(marker)
                    grown.append(marker)
        frontier = grown
    return sorted(shapes, key=lambda s: (len(s), s))


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def serialize(cat: Catalogue) -> str:
    payload = {
        "version": FORMAT_VERSION,
        "h": cat.h,
        "meta": cat.meta,
        "counts": cat.counts,
        "degStats": cat.deg_stats,
        "closingRates": {
            key: {"samples": st.samples, "closures": st.closures,
                  "rate": {"num": st.rate.numerator, "den": st.rate.denominator}}
            for key, st in cat.closing.items()
        },
        "closingMarginal": {
            key: {"samples": st.samples, "closures": st.closures,
                  "rate": {"num": st.rate.numerator, "den": st.rate.denominator}}
            for key, st in cat.closing_marginal.items()
        },
    }
    return json.dumps(payload, sort_keys=True, indent=1)


def save(cat: Catalogue, sink: IO[str] | str) -> None:
    text = serialize(cat)
    if isinstance(sink, str):
        with open(sink, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sink.write(text)


def load(source: IO[str] | str) -> Catalogue:
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8") as handle:
            text = handle.read()
    else:
        text = source.read()
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CatalogueFormatError(f"not a catalogue file: {exc}") from None
    if not isinstance(payload, dict) or payload.get("version") != FORMAT_VERSION:
        raise CatalogueFormatError(
            f"unsupported catalogue version {payload.get('version')!r}")
    try:
        cat = Catalogue(
            h=int(payload["h"]),
            counts={k: int(v) for k, v in payload["counts"].items()},
            deg_stats={k: {kk: int(vv) for kk, vv in v.items()}
                       for k, v in payload["degStats"].items()},
            closing={k: ClosingStat(int(v["samples"]), int(v["closures"]))
                     for k, v in payload["closingRates"].items()},
            closing_marginal={k: ClosingStat(int(v["samples"]), int(v["closures"]))
                              for k, v in payload["closingMarginal"].items()},
            meta=payload["meta"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CatalogueFormatError(f"malformed catalogue file: {exc}") from None
    return cat
