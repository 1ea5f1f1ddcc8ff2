"""Clique bootstrap percolation, with and without pollution.

The closure of a graph under K_s-bootstrap percolation adds an edge uv
whenever the common neighbourhood of u and v contains an (s-2)-clique.
In the polluted variant (s = d+3), the (d+1)-vertex clique serving as the
base must additionally avoid a family of forbidden (d+1)-subsets.

The engine sweeps the shrinking candidate list until stable, using
bitmask adjacency.  ``naive_closure`` is the literal synchronous
fixed-point recomputation, kept as a reference implementation for tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np


@dataclass(frozen=True)
class SimpleGraph:
    """Undirected simple graph on vertex set [n]."""

    n: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        norm = set()
        for e in self.edges:
            u, v = e
            if u == v:
                raise ValueError("loops are not allowed")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError("vertex out of range")
            norm.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(norm))

    def adjacency_masks(self):
        adj = [0] * self.n
        for u, v in self.edges:
            adj[u] |= 1 << v
            adj[v] |= 1 << u
        return adj

    def is_complete(self) -> bool:
        return len(self.edges) == self.n * (self.n - 1) // 2

    def __contains__(self, e):
        u, v = e
        return (min(u, v), max(u, v)) in self.edges

    @classmethod
    def from_edge_list(cls, text: str, n=None):
        edges = set()
        top = -1
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            u, v = (int(x) for x in line.split())
            edges.add((u, v))
            top = max(top, u, v)
        if n is None:
            n = top + 1
        return cls(n=n, edges=frozenset(edges))

    def to_edge_list(self) -> str:
        return "\n".join(f"{u} {v}" for u, v in sorted(self.edges)) + ("\n" if self.edges else "")


@dataclass(frozen=True)
class PollutionSet:
    """Family of (d+1)-subsets on which percolation may not spread."""

    d: int
    members: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        norm = set()
        for m in self.members:
            t = tuple(sorted(m))
            if len(t) != self.d + 1 or len(set(t)) != self.d + 1:
                raise ValueError(f"pollution member must have {self.d + 1} distinct vertices")
            norm.add(t)
        object.__setattr__(self, "members", frozenset(norm))

    def to_json(self):
        return [list(m) for m in sorted(self.members)]

    @classmethod
    def from_json(cls, d, data):
        return cls(d=d, members=frozenset(tuple(m) for m in data))


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _find_base(u, v, adj, base_size, polluted):
    """First (lexicographic) base_size-clique in N(u) & N(v) avoiding pollution."""
    common = adj[u] & adj[v]
    if common == 0 and base_size > 0:
        return None
    if base_size == 1:
        for x in _bits(common):
            if polluted is None or (x,) not in polluted:
                return (x,)
        return None
    cand = list(_bits(common))
    if len(cand) < base_size:
        return None

    def extend(prefix, pref_mask, rest):
        if len(prefix) == base_size:
            if polluted is not None and tuple(prefix) in polluted:
                return None
            return tuple(prefix)
        for i, x in enumerate(rest):
            if pref_mask & ~adj[x]:
                continue
            got = extend(prefix + [x], pref_mask | (1 << x), rest[i + 1:])
            if got is not None:
                return got
        return None

    if polluted is None:
        return extend([], 0, cand)
    # with pollution, the first clique found may be forbidden; enumerate all
    for T in combinations(cand, base_size):
        if tuple(T) in polluted:
            continue
        ok = True
        for i in range(base_size):
            for j in range(i + 1, base_size):
                if not (adj[T[i]] >> T[j]) & 1:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return T
    return None


def _closure(G: SimpleGraph, base_size: int, polluted) -> SimpleGraph:
    n = G.n
    adj = G.adjacency_masks()
    edges = set(G.edges)
    candidates = [(u, v) for u in range(n) for v in range(u + 1, n) if (u, v) not in edges]
    changed = True
    while changed and candidates:
        changed = False
        remaining = []
        for u, v in candidates:
            if _find_base(u, v, adj, base_size, polluted) is not None:
                edges.add((u, v))
                adj[u] |= 1 << v
                adj[v] |= 1 << u
                changed = True
            else:
                remaining.append((u, v))
        candidates = remaining
    return SimpleGraph(n=n, edges=frozenset(edges))


def closure(G: SimpleGraph, clique_size: int) -> SimpleGraph:
    """Closure of G under K_{clique_size}-bootstrap percolation."""
    if clique_size < 3:
        raise ValueError("clique_size must be at least 3")
    return _closure(G, clique_size - 2, None)


def polluted_closure(G: SimpleGraph, d: int, P: PollutionSet) -> SimpleGraph:
    """Closure under K_{d+3}-percolation avoiding polluted (d+1)-bases."""
    if P.d != d:
        raise ValueError("pollution arity does not match d")
    members = P.members if P.members else None
    return _closure(G, d + 1, set(members) if members else None)


def naive_closure(G: SimpleGraph, clique_size: int, pollution=None):
    """Synchronous fixed point by full rescan; returns (closure, rounds).

    Reference implementation: recomputes every addable edge of G_t from
    scratch to form G_{t+1}.
    """
    base_size = clique_size - 2
    polluted = None
    if pollution is not None and pollution.members:
        polluted = set(pollution.members)
    n = G.n
    edges = set(G.edges)
    rounds = 0
    while True:
        adj = [0] * n
        for u, v in edges:
            adj[u] |= 1 << v
            adj[v] |= 1 << u
        new = set()
        for u in range(n):
            for v in range(u + 1, n):
                if (u, v) in edges:
                    continue
                common = [x for x in range(n) if (adj[u] >> x) & 1 and (adj[v] >> x) & 1]
                for T in combinations(common, base_size):
                    if polluted is not None and T in polluted:
                        continue
                    if all((adj[a] >> b) & 1 for a, b in combinations(T, 2)):
                        new.add((u, v))
                        break
        if not new:
            return SimpleGraph(n=n, edges=frozenset(edges)), rounds
        edges |= new
        rounds += 1


@dataclass(frozen=True)
class GadgetDescriptor:
    """Chain of r copies of K_{d+3} glued along removed edges, rooted at e_1."""

    d: int
    r: int
    graph: SimpleGraph
    root_edge: tuple
    bases: tuple


def build_gadget(d: int, r: int) -> GadgetDescriptor:
    """Rooted percolation gadget with r(d+1)+2 vertices.

    Copy i is complete on {u_i, v_i} + base_i except for its removed
    edge(s); consecutive removed edges share no endpoints.  Percolating
    with any pollution avoiding the bases recovers the root edge.
    """
    if d < 1 or r < 1:
        raise ValueError("require d >= 1 and r >= 1")
    edges = set()
    bases = []
    u, v = 0, 1
    next_vertex = 2
    for i in range(r):
        base = tuple(range(next_vertex, next_vertex + d + 1))
        next_vertex += d + 1
        bases.append(base)
        copy = (u, v) + base
        for a, b in combinations(copy, 2):
            edges.add((min(a, b), max(a, b)))
        edges.discard((min(u, v), max(u, v)))  # e_i stays removed
        # e_{i+1} joins the first two base vertices; removed from both copies
        u, v = base[0], base[1]
        if i < r - 1:
            edges.discard((min(u, v), max(u, v)))
    n = r * (d + 1) + 2
    g = SimpleGraph(n=n, edges=frozenset(edges))
    assert len(g.edges) == r * (comb(d + 3, 2) - 2) + 1
    return GadgetDescriptor(d=d, r=r, graph=g, root_edge=(0, 1), bases=tuple(bases))


def sample_gnp(n: int, p: float, rng) -> SimpleGraph:
    """Erdos-Renyi G(n, p) sample from a numpy Generator."""
    iu, ju = np.triu_indices(n, k=1)
    mask = rng.random(iu.size) < p
    edges = frozenset((int(a), int(b)) for a, b in zip(iu[mask], ju[mask]))
    return SimpleGraph(n=n, edges=edges)


def estimate_percolation_probability(n: int, p: float, clique_size: int,
                                     trials: int, seed: int) -> float:
    """Monte Carlo estimate of P(closure(G(n,p)) = K_n)."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    hits = 0
    for t in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence([seed, t]))
        g = sample_gnp(n, p, rng)
        if closure(g, clique_size).is_complete():
            hits += 1
    return hits / trials
