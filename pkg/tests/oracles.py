"""Independent brute-force oracles used to check the library implementations.

Everything here deliberately avoids the library's algorithms: joins are
nested loops in query order with no indexes, subset enumeration filters the
power set, isomorphism tries every bijection.
"""

from __future__ import annotations

from itertools import permutations

from cardest.graphstore import LabeledGraph
from cardest.querymodel import QueryGraph


def nested_loop_matches(g: LabeledGraph, q: QueryGraph) -> list[tuple[int, ...]]:
    edges = [(e.src, e.dst, e.label) for e in q.edges]
    rels = [sorted(g.edges_with_label(lab)) for _, _, lab in edges]
    out: list[tuple[int, ...]] = []

    def rec(i: int, binding: dict[str, int]):
        if i == len(edges):
            out.append(tuple(binding[v] for v in q.vars))
            return
        u, v, _ = edges[i]
        for s, d in rels[i]:
            if binding.get(u, s) != s or binding.get(v, d) != d:
                continue
            nxt = dict(binding)
            nxt[u] = s
            nxt[v] = d
            rec(i + 1, nxt)

    rec(0, {})
    return out


def nested_loop_count(g: LabeledGraph, q: QueryGraph) -> int:
    return len(nested_loop_matches(g, q))


def brute_group_degree(g: LabeledGraph, q: QueryGraph, x_vars, y_vars) -> int:
    x_idx = [i for i, v in enumerate(q.vars) if v in set(x_vars)]
    y_idx = [i for i, v in enumerate(q.vars) if v in set(y_vars)]
    buckets: dict[tuple, set] = {}
    for row in nested_loop_matches(g, q):
        buckets.setdefault(tuple(row[i] for i in x_idx), set()).add(
            tuple(row[i] for i in y_idx))
    return max((len(v) for v in buckets.values()), default=0)


def brute_connected_subsets(q: QueryGraph, max_edges: int) -> set[frozenset[int]]:
    m = len(q.edges)
    adj = q.edge_adjacency()
    out: set[frozenset[int]] = set()
    for mask in range(1, 1 << m):
        sub = [i for i in range(m) if mask & (1 << i)]
        if len(sub) > max_edges:
            continue
        seen = {sub[0]}
        stack = [sub[0]]
        while stack:
            for j in adj[stack.pop()]:
                if j in sub and j not in seen:
                    seen.add(j)
                    stack.append(j)
        if len(seen) == len(sub):
            out.add(frozenset(sub))
    return out


def brute_cycles(q: QueryGraph) -> set[frozenset[int]]:
    """Edge subsets that are simple cycles: connected, every vertex degree 2."""
    m = len(q.edges)
    out: set[frozenset[int]] = set()
    for mask in range(1, 1 << m):
        sub = [i for i in range(m) if mask & (1 << i)]
        degree: dict[str, int] = {}
        for i in sub:
            degree[q.edges[i].src] = degree.get(q.edges[i].src, 0) + 1
            degree[q.edges[i].dst] = degree.get(q.edges[i].dst, 0) + 1
        if any(d != 2 for d in degree.values()):
            continue
        if frozenset(sub) in brute_connected_subsets_of(q, sub):
            out.add(frozenset(sub))
    return out


def brute_connected_subsets_of(q: QueryGraph, sub: list[int]) -> set[frozenset[int]]:
    adj = q.edge_adjacency()
    seen = {sub[0]}
    stack = [sub[0]]
    while stack:
        for j in adj[stack.pop()]:
            if j in sub and j not in seen:
                seen.add(j)
                stack.append(j)
    return {frozenset(sub)} if len(seen) == len(sub) else set()


def brute_isomorphic(p1, p2) -> bool:
    """Directed edge-labeled isomorphism by trying every vertex bijection."""
    v1 = sorted({v for e in p1 for v in e[:2]})
    v2 = sorted({v for e in p2 for v in e[:2]})
    if len(v1) != len(v2) or len(p1) != len(p2):
        return False
    s1 = set(p1)
    for perm in permutations(v2):
        mapping = dict(zip(v1, perm))
        if {(mapping[s], mapping[d], lab) for s, d, lab in p1} == \
           {(e[0], e[1], e[2]) for e in p2} and len(s1) == len(p1):
            return True
    return False


def dfs_path_count(ceg) -> int:
    """Path count by plain recursion (no memoization, unlike the library)."""

    def rec(v) -> int:
        if v == ceg.top:
            return 1
        return sum(rec(e.dst) for e in ceg.out(v))

    return rec(ceg.bottom)


def dag_min_product(ceg):
    """Minimum over all bottom-to-top path products, by memoized DP.

    Same quantity as min(p.estimate for p in iter_paths(ceg)) but independent
    of the library's Dijkstra; usable when literal enumeration is infeasible.
    """
    from fractions import Fraction

    memo: dict = {}

    def rec(v):
        if v == ceg.top:
            return Fraction(1)
        if v in memo:
            return memo[v]
        best = None
        for e in ceg.out(v):
            tail = rec(e.dst)
            if tail is None:
                continue
            candidate = e.rate * tail
            if best is None or candidate < best:
                best = candidate
        memo[v] = best
        return best

    return rec(ceg.bottom)


def brute_label_walks(g: LabeledGraph, label_seq) -> list[tuple[int, ...]]:
    """All walks realizing the (label, direction) sequence, by recursion."""
    from cardest.oracle import FWD

    def step(vertex, spec):
        lab, direction = spec
        return g.out_neighbors(vertex, lab) if direction == FWD else g.in_neighbors(vertex, lab)

    firsts = []
    lab, direction = label_seq[0]
    for s, d in g.edges_with_label(lab):
        firsts.append((s, d) if direction == FWD else (d, s))
    walks = []

    def rec(prefix):
        i = len(prefix) - 1
        if i == len(label_seq):
            walks.append(tuple(prefix))
            return
        for w in step(prefix[-1], label_seq[i]):
            rec(prefix + [w])

    for w0, w1 in sorted(firsts):
        rec([w0, w1])
    return walks
