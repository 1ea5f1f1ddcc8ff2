"""Coordinate-free reconstruction from partially known distances.

The reconstructor never sees coordinates: independence of candidate bases
is decided from the known distances alone, and recovered values come from
embedding small subsets and extending uniquely.  Ground truth is consulted
only by tests.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .geometry import (
    DEFAULT_TOL,
    PointConfig,
    SquaredDistanceMatrix,
    Tolerance,
    embed_from_distances,
    affine_dimension,
    lift_point,
)

REVEALED = "revealed"
INFERRED = "inferred"
REDUCED = "reduced"


class ReconstructionError(Exception):
    pass


class InconsistencyDetected(ReconstructionError):
    """Known distances contradict any embedding; input is corrupted."""


class ZeroConflict(ReconstructionError):
    """Coincident points disagree about a distance to a third point."""


class NegativeResidual(ReconstructionError):
    """Reduced squared distance significantly negative."""


def _pair(u, v):
    return (u, v) if u < v else (v, u)


class DistanceState:
    """Partial symmetric store of squared distances with provenance tags."""

    def __init__(self, n: int):
        self.n = n
        self.dist2 = {}
        self.provenance = {}
        self.adj = [0] * n  # bitmask adjacency of the known-pair graph

    def copy(self) -> "DistanceState":
        s = DistanceState(self.n)
        s.dist2 = dict(self.dist2)
        s.provenance = dict(self.provenance)
        s.adj = list(self.adj)
        return s

    def known(self, u, v) -> bool:
        return _pair(u, v) in self.dist2

    def get(self, u, v) -> float:
        if u == v:
            return 0.0
        return self.dist2[_pair(u, v)]

    def set(self, u, v, d2, provenance=REVEALED):
        if u == v:
            raise ValueError("no self distances")
        if d2 < 0:
            raise ValueError("squared distance must be nonnegative")
        p = _pair(u, v)
        self.dist2[p] = float(d2)
        self.provenance[p] = provenance
        self.adj[u] |= 1 << v
        self.adj[v] |= 1 << u

    def known_pairs(self):
        return self.dist2.keys()

    def mask_graph(self):
        from .percolation import SimpleGraph
        return SimpleGraph(n=self.n, edges=frozenset(self.dist2.keys()))

    def complete_over(self, idx) -> bool:
        return all(self.known(u, v) for u, v in combinations(sorted(idx), 2))

    def submatrix(self, idx) -> SquaredDistanceMatrix:
        idx = list(idx)
        k = len(idx)
        m = np.zeros((k, k))
        for a in range(k):
            for b in range(a + 1, k):
                m[a, b] = m[b, a] = self.get(idx[a], idx[b])
        return SquaredDistanceMatrix(m)

    def to_json(self):
        return {
            "n": self.n,
            "pairs": [[u, v, self.dist2[(u, v)], self.provenance[(u, v)]]
                      for u, v in sorted(self.dist2)],
        }

    @classmethod
    def from_json(cls, data):
        s = cls(int(data["n"]))
        for rec in data["pairs"]:
            u, v, d2 = rec[0], rec[1], rec[2]
            prov = rec[3] if len(rec) > 3 else REVEALED
            s.set(int(u), int(v), float(d2), prov)
        return s


@dataclass
class ClosureRecord:
    u: int
    v: int
    base: tuple
    dist2: float

    def to_json(self):
        return {"u": self.u, "v": self.v, "base": list(self.base), "dist2": self.dist2}


@dataclass
class ClosureLog:
    records: list = field(default_factory=list)

    def append(self, rec: ClosureRecord):
        self.records.append(rec)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r.to_json()) + "\n" for r in self.records)

    def replay(self, S: DistanceState) -> DistanceState:
        """Re-apply the log to a revealed-only state."""
        out = S.copy()
        for r in self.records:
            out.set(r.u, r.v, r.dist2, INFERRED)
        return out


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class _BaseFinder:
    """DFS for a d-independent (d+1)-clique in a common neighbourhood.

    Prefixes are required to be affinely independent, which prunes the
    search hard on degenerate configurations (every subset of an
    independent set is independent).  Well-conditioned bases are preferred:
    a first pass demands a comfortable independence margin and a fallback
    pass accepts anything above the dependence threshold, so that rare
    barely-independent bases cannot poison cascaded inferences.  Placement
    results are cached per closure run; confluence makes the search order
    irrelevant, so we fix lexicographic order for determinism.
    """

    STRONG_MARGIN = 1e-3

    def __init__(self, state: DistanceState, d: int, tol: Tolerance):
        self.state = state
        self.d = d
        self.tol = tol
        self.weak_margin = tol.eps_rel ** (2.0 / 3.0)
        # margins are relative to the global scale: inference noise is
        # absolute, so small-extent bases must not look better conditioned
        self.scale = max(max(state.dist2.values(), default=0.0), 1.0)
        self.cache = {}  # prefix tuple -> (coords, min relative residual) or None
        # per-prefix bitmasks of extensions known dependent / weakly
        # independent, so repeated failing searches prune in bulk
        self.dep = {}
        self.weakx = {}
        self.tried = {}

    def _place(self, prefix, x):
        """Placement of prefix + (x,); None when affinely dependent."""
        key = prefix + (x,)
        if key in self.cache:
            return self.cache[key]
        if not prefix:
            out = (np.zeros((1, 0)), float("inf"))
        else:
            got = self.cache.get(prefix)
            if got is None:
                out = None
            else:
                pc, worst = got
                d2s = [self.state.get(q, x) for q in prefix]
                if pc.shape[1] == 0:
                    resid2, proj = d2s[0], np.zeros(0)
                else:
                    proj, resid2 = lift_point(pc, d2s, self.tol)
                rel = resid2 / self.scale
                if rel <= self.weak_margin:
                    out = None  # x lies in the span: dependent prefix
                else:
                    k = len(prefix)
                    coords = np.zeros((k + 1, k))
                    coords[:k, :k - 1] = pc
                    coords[k, :k - 1] = proj
                    coords[k, k - 1] = np.sqrt(max(resid2, 0.0))
                    out = (coords, min(worst, rel))
        if out is None:
            self.dep[prefix] = self.dep.get(prefix, 0) | (1 << x)
        elif out[1] <= self.STRONG_MARGIN:
            self.weakx[prefix] = self.weakx.get(prefix, 0) | (1 << x)
        self.tried[prefix] = self.tried.get(prefix, 0) | (1 << x)
        self.cache[key] = out
        return out

    def find(self, u, v):
        """First d-independent (d+1)-clique T in N(u) & N(v), or None.

        Returns (T, coords) with coords an embedding of T in R^d.
        """
        adj = self.state.adj
        common = adj[u] & adj[v]
        if bin(common).count("1") < self.d + 1:
            return None
        target = self.d + 1

        def extend(prefix, allowed, margin):
            skip = self.dep.get(prefix, 0)
            if margin > 0.0:
                skip |= self.weakx.get(prefix, 0)
            if len(prefix) == target - 1:
                # last level: any tried, unskipped extension completes the
                # clique, so known-good bits resolve without lookups
                viable = allowed & ~skip
                known_good = viable & self.tried.get(prefix, 0)
                while viable:
                    low = viable & -viable
                    x = low.bit_length() - 1
                    if low & known_good:
                        key = prefix + (x,)
                        return key, self.cache[key][0]
                    placed = self._place(prefix, x)
                    if placed is not None and placed[1] > margin:
                        key = prefix + (x,)
                        return key, self.cache[key][0]
                    viable &= ~low
                return None
            tried = self.tried.get(prefix, 0)
            for x in _bits(allowed & ~skip):
                if not (tried >> x) & 1:
                    placed = self._place(prefix, x)
                    if placed is None or placed[1] <= margin:
                        continue
                got = extend(prefix + (x,),
                             allowed & adj[x] & ~((1 << (x + 1)) - 1), margin)
                if got is not None:
                    return got
            return None

        got = extend((), common, self.STRONG_MARGIN)
        if got is None:
            got = extend((), common, 0.0)
        return got


def geometric_closure(S: DistanceState, d: int, tol: Tolerance = DEFAULT_TOL):
    """Fixed point of distance inference via independent (d+1)-bases.

    For each unknown pair uv, if some (d+1)-subset T of the common known
    neighbourhood is fully known, d-independent, and the distances from u
    and v to T are known, the distance uv is determined by embedding T and
    lifting u and v into its span.

    Returns (closed state, log).  The known-pair mask of the result equals
    the polluted K_{d+3}-closure of the input mask with the d-dependent
    subsets as pollution.
    """
    out = S.copy()
    log = ClosureLog()
    finder = _BaseFinder(out, d, tol)
    n = out.n
    candidates = [(u, v) for u in range(n) for v in range(u + 1, n) if not out.known(u, v)]
    scale = max(max(out.dist2.values(), default=0.0), 1.0)
    consistency = (tol.eps_rel ** 0.5) * scale
    changed = True
    # vertices whose adjacency grew last pass: a failed pair is worth
    # retrying only if its common neighbourhood could have changed
    touched = (1 << n) - 1
    while changed and candidates:
        changed = False
        touched_now = 0
        remaining = []
        for u, v in candidates:
            if not (((out.adj[u] & out.adj[v]) | (1 << u) | (1 << v)) & touched):
                remaining.append((u, v))
                continue
            got = finder.find(u, v)
            if got is None:
                remaining.append((u, v))
                continue
            T, coords = got
            margin = finder.cache[T][1]
            placed = []
            bad = False
            for w in (u, v):
                d2s = [out.get(q, w) for q in T]
                proj, resid2 = lift_point(coords, d2s, tol)
                if abs(resid2) > consistency:
                    # only pristine inputs witness corruption; violations
                    # involving inferred values (or an ill-conditioned base)
                    # are our own accumulated noise, so skip the pair
                    pristine = all(
                        out.provenance.get(_pair(a, b)) == REVEALED
                        for a, b in combinations(T + (w,), 2))
                    if pristine and margin >= finder.STRONG_MARGIN:
                        raise InconsistencyDetected(
                            f"pair ({u},{v}) with base {T}: residual {resid2:g}")
                    bad = True
                    break
                placed.append(proj)
            if bad:
                remaining.append((u, v))
                continue
            diff = placed[0] - placed[1]
            d2 = float(np.dot(diff, diff))
            out.set(u, v, d2, INFERRED)
            log.append(ClosureRecord(u=u, v=v, base=T, dist2=d2))
            touched_now |= (1 << u) | (1 << v)
            changed = True
        candidates = remaining
        touched = touched_now
    return out, log


def merge_duplicates(S: DistanceState, tol: Tolerance = DEFAULT_TOL):
    """Partition [n] by connected components of revealed zero distances.

    Points in a component are coincident; their known distances are shared
    across the component (written back into S as inferred pairs).  Raises
    ZeroConflict when two coincident points disagree about a distance to a
    third point.
    """
    n = S.n
    scale = max(max(S.dist2.values(), default=0.0), 1.0)
    zero_tol = tol.eps_rel * scale
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for (u, v), d2 in S.dist2.items():
        if d2 <= zero_tol:
            parent[find(u)] = find(v)
    comps = {}
    for x in range(n):
        comps.setdefault(find(x), []).append(x)
    partition = sorted(comps.values())
    for comp in partition:
        if len(comp) == 1:
            continue
        # distance from the component to each outside point, shared by all
        for w in range(n):
            if w in comp:
                continue
            vals = [(x, S.get(x, w)) for x in comp if S.known(x, w)]
            if not vals:
                continue
            ref = vals[0][1]
            conflict_tol = (tol.eps_rel ** (1.0 / 3.0)) * max(scale, ref)
            for x, val in vals[1:]:
                if abs(val - ref) > conflict_tol:
                    raise ZeroConflict(
                        f"coincident points {vals[0][0]} and {x} disagree about {w}")
            for x in comp:
                if not S.known(x, w):
                    S.set(x, w, ref, INFERRED)
        # zero distances inside the component
        for a, b in combinations(comp, 2):
            if not S.known(a, b):
                S.set(a, b, 0.0, INFERRED)
    return partition


def extract_reconstructible_clique(S: DistanceState, delta: float):
    """Degree-threshold vertex set, trimmed until all internal pairs known.

    D = vertices of known-pair degree above (1 - delta) n, then greedily
    drop the vertex with the most missing internal pairs until complete.
    """
    if not (0 < delta < 1):
        raise ValueError("delta must lie in (0, 1)")
    n = S.n
    thresh = (1.0 - delta) * n
    D = [x for x in range(n) if bin(S.adj[x]).count("1") > thresh]
    if not D:
        return []
    D = set(D)
    while True:
        missing = {x: 0 for x in D}
        total = 0
        for u, v in combinations(sorted(D), 2):
            if not S.known(u, v):
                missing[u] += 1
                missing[v] += 1
                total += 1
        if total == 0:
            return sorted(D)
        worst = max(missing, key=lambda x: (missing[x], x))
        D.remove(worst)
        if not D:
            return []


def recover_projection(A_embed: PointConfig, A_indices, S: DistanceState, v: int,
                       d_sub: int, tol: Tolerance = DEFAULT_TOL):
    """Projection of point v onto the span of an embedded clique.

    A_embed holds coordinates in R^d_sub for the points listed in
    A_indices.  If some d_sub+1 of them are affinely independent and have
    known distances to v, returns (projection coords, residual2); returns
    None when no such subset exists (the point is not covered).
    """
    coords = A_embed.as_array()
    index_of = {idx: i for i, idx in enumerate(A_indices)}
    if v in index_of:
        return coords[index_of[v]].copy(), 0.0
    cand = [idx for idx in A_indices if S.known(v, idx)]
    if len(cand) < d_sub + 1:
        return None
    C = coords[[index_of[idx] for idx in cand]]
    scale = max(float(np.max(np.abs(coords))) ** 2, 1.0)
    # best-conditioned affinely independent subset: repeatedly take the
    # candidate farthest from the span of those already chosen, so that a
    # nearly coincident pair cannot amplify distance noise in the lift
    sel = [0]
    Q = np.zeros((0, C.shape[1]))
    rel = C - C[0]
    while len(sel) < d_sub + 1:
        resid = rel - (rel @ Q.T) @ Q if Q.shape[0] else rel
        r2 = np.einsum("ij,ij->i", resid, resid)
        k = int(np.argmax(r2))
        if r2[k] <= tol.eps_rel * scale:
            return None
        sel.append(k)
        Q = np.vstack([Q, resid[k] / np.sqrt(r2[k])])
    # the subset only certifies coverage; the lift itself is overdetermined
    # across every known anchor distance, averaging out distance noise
    d2s = np.array([S.get(v, idx) for idx in cand])
    proj, _ = lift_point(C, d2s, tol)
    gaps = proj[None, :] - C
    resid2 = float(np.mean(d2s - np.einsum("ij,ij->i", gaps, gaps)))
    scale = max(float(d2s.max()), 1.0)
    if resid2 < -(tol.eps_rel ** 0.5) * scale:
        raise InconsistencyDetected(f"point {v}: negative residual {resid2:g}")
    return proj, max(resid2, 0.0)


def _polish_distances(emb: PointConfig, result, distances, prov, tol: Tolerance):
    """Gauss-Newton refinement of the final embedding against revealed pairs.

    Cascaded inferences carry accumulated float noise, but the revealed
    distances are exact; with the closure output as initialization, a few
    damped Gauss-Newton steps on r = |x_i - x_j|^2 - d2 recover the
    configuration to near machine precision.  Inferred pairs participate
    with a tiny weight so that directions unconstrained by revealed data
    stay pinned at the closure values.  Returns (embedding, distances),
    unchanged if the refinement does not help.
    """
    k, dim = len(result), emb.dim
    if dim == 0 or not distances:
        return emb, distances
    index = {v: i for i, v in enumerate(result)}
    I = np.empty(len(distances), dtype=int)
    J = np.empty(len(distances), dtype=int)
    T = np.empty(len(distances))
    W = np.empty(len(distances))
    for m, ((u, v), d2) in enumerate(sorted(distances.items())):
        I[m], J[m], T[m] = index[u], index[v], d2
        W[m] = 1.0 if prov.get((u, v)) == REVEALED else 1e-3
    revealed = W == 1.0
    if int(revealed.sum()) < k * dim:  # too few exact pins to refine against
        return emb, distances
    scale = max(float(T.max()), 1.0)
    X = emb.as_array().copy()

    def max_revealed_residual(X):
        diff = X[I] - X[J]
        r = np.einsum("ij,ij->i", diff, diff) - T
        return float(np.abs(r[revealed]).max())

    best = max_revealed_residual(X)
    X_best = X.copy()
    lam = 1e-12 * scale
    for _ in range(12):
        if best < 1e-12 * scale:
            break
        diff = X[I] - X[J]
        r = (np.einsum("ij,ij->i", diff, diff) - T) * W
        G = 2.0 * diff * W[:, None]
        JTr = np.zeros((k, dim))
        np.add.at(JTr, I, G * r[:, None])
        np.add.at(JTr, J, -G * r[:, None])
        JTJ = np.zeros((k * dim, k * dim))
        for a in range(dim):
            for b in range(dim):
                blk = G[:, a] * G[:, b]
                np.add.at(JTJ, (I * dim + a, I * dim + b), blk)
                np.add.at(JTJ, (J * dim + a, J * dim + b), blk)
                np.add.at(JTJ, (I * dim + a, J * dim + b), -blk)
                np.add.at(JTJ, (J * dim + a, I * dim + b), -blk)
        step = None
        for _ in range(4):
            try:
                step = np.linalg.solve(JTJ + lam * np.eye(k * dim), JTr.ravel())
            except np.linalg.LinAlgError:
                lam *= 100.0
                continue
            cand = X - step.reshape(k, dim)
            got = max_revealed_residual(cand)
            if got < best:
                break
            lam *= 100.0
            step = None
        if step is None:
            break
        X = cand
        best = got
        X_best = X.copy()
        lam = max(lam / 10.0, 1e-12 * scale)
    if X_best is None or best >= max_revealed_residual(emb.as_array()):
        return emb, distances
    polished = PointConfig(dim=dim, points=tuple(map(tuple, X_best)))
    diff = X_best[I] - X_best[J]
    d2_new = np.einsum("ij,ij->i", diff, diff)
    out = {}
    for m, ((u, v), d2) in enumerate(sorted(distances.items())):
        out[(u, v)] = d2 if revealed[m] else float(max(d2_new[m], 0.0))
    return polished, out


@dataclass
class ReductionStep:
    round_index: int
    surviving: tuple
    offsets: dict          # pair -> b_{i,j}
    subspace_dim: int
    anchor_indices: tuple
    anchor_embedding: PointConfig

    def to_json(self):
        return {
            "round": self.round_index,
            "surviving": list(self.surviving),
            "offsets": [[u, v, b] for (u, v), b in sorted(self.offsets.items())],
            "subspace_dim": self.subspace_dim,
            "anchor": list(self.anchor_indices),
            "anchor_embedding": self.anchor_embedding.to_json(),
        }


def reduce_dimension(S: DistanceState, proj, surviving, round_index=0,
                     subspace_dim=0, anchor_indices=(), anchor_embedding=None,
                     tol: Tolerance = DEFAULT_TOL):
    """Subtract squared projection distances, lowering the dimension.

    proj maps index -> (projection coords, residual2).  For every pair in
    the surviving set, b = |proj_i - proj_j|^2; pairs with known squared
    distance get the reduced value dist2 - b (snapped to zero within
    tolerance).  Raises NegativeResidual when a reduced value is
    significantly negative.
    """
    surviving = sorted(surviving)
    for i in surviving:
        if i not in proj:
            raise ValueError(f"index {i} has no recovered projection")
    scale = max(max(S.dist2.values(), default=0.0), 1.0)
    # an offset combines two lifted projections, each built from inferred
    # distances; its error is a small multiple of the eps^(1/3) noise
    # floor, while genuine corruption produces deficits of order scale
    snap = 10.0 * (tol.eps_rel ** (1.0 / 3.0)) * scale
    offsets = {}
    new = DistanceState(S.n)
    for i, j in combinations(surviving, 2):
        pi, pj = proj[i][0], proj[j][0]
        diff = np.asarray(pi) - np.asarray(pj)
        b = float(np.dot(diff, diff))
        offsets[(i, j)] = b
        if S.known(i, j):
            red = S.get(i, j) - b
            if red < -snap:
                raise NegativeResidual(
                    f"pair ({i},{j}): dist2 {S.get(i, j):g} < offset {b:g}")
            new.set(i, j, max(red, 0.0), REDUCED)
    if anchor_embedding is None:
        anchor_embedding = PointConfig(dim=0, points=())
    step = ReductionStep(round_index=round_index, surviving=tuple(surviving),
                         offsets=offsets, subspace_dim=subspace_dim,
                         anchor_indices=tuple(anchor_indices),
                         anchor_embedding=anchor_embedding)
    return step, new


def run_pipeline(rounds, d: int, delta: float = 0.1, tol: Tolerance = DEFAULT_TOL):
    """Full reconstruction pipeline over sprinkled reveal rounds.

    Each level: merge duplicates, close geometrically, pick an anchor
    clique, embed it, recover projections of the remaining points, and
    reduce the dimension; repeat until the reduced instance has dimension
    zero or no progress is made.

    Returns (surviving index list, embedding of that set in R^d,
    list of ReductionStep, assembled squared distances dict, info dict).
    """
    if not rounds:
        raise ValueError("at least one reveal round required")
    n = rounds[0].n
    surviving = list(range(n))
    acc_b = {}             # pair -> accumulated squared projection offset
    known_orig = {}        # pair -> full squared distance (original scale)
    prov = {}
    steps = []
    info = {"levels": 0, "frac_known_after_first_closure": 0.0}
    d_cur = d
    next_round = 0

    def consume_round():
        nonlocal next_round
        if next_round < len(rounds):
            for (u, v), d2 in rounds[next_round].dist2.items():
                if (u, v) not in known_orig:
                    known_orig[(u, v)] = d2
                    prov[(u, v)] = REVEALED
            next_round += 1

    consume_round()
    for level in range(d):
        # current-level state: reduced values over the surviving set
        S = DistanceState(n)
        sset = set(surviving)
        scale = max(max(known_orig.values(), default=0.0), 1.0)
        snap = (tol.eps_rel ** (1.0 / 3.0)) * scale
        for (u, v), d2 in known_orig.items():
            if u in sset and v in sset:
                if (u, v) in acc_b:
                    red = d2 - acc_b[(u, v)]
                    S.set(u, v, 0.0 if red < snap else red, REDUCED)
                else:
                    S.set(u, v, d2, prov[(u, v)])
        merge_duplicates(S, tol)
        S, log = geometric_closure(S, d_cur, tol)
        for (u, v), d2 in S.dist2.items():
            if (u, v) not in known_orig:
                known_orig[(u, v)] = d2 + acc_b.get((u, v), 0.0)
                prov[(u, v)] = INFERRED
        if level == 0:
            total = n * (n - 1) // 2
            info["frac_known_after_first_closure"] = len(S.dist2) / total if total else 1.0
        info["levels"] = level + 1
        if S.complete_over(surviving):
            break
        anchor = extract_reconstructible_clique(S, delta)
        anchor = [a for a in anchor if a in sset]
        if len(anchor) < 2:
            break
        D_anchor = S.submatrix(anchor)
        # anchor distances carry cascaded inference noise, amplified by
        # base conditioning; embed/rank decisions use a much looser floor
        tol_embed = Tolerance(eps_rel=max(tol.eps_rel, tol.eps_rel ** (1.0 / 3.0)))
        emb_full = embed_from_distances(D_anchor, target_dim=d_cur, tol=tol_embed)
        d_sub = affine_dimension(emb_full, tol_embed)
        if d_sub == 0:
            break  # coincident cluster: no dimension to peel off
        emb = embed_from_distances(D_anchor, target_dim=d_sub, tol=tol_embed)
        proj = {}
        for v in surviving:
            got = recover_projection(emb, anchor, S, v, d_sub, tol_embed)
            if got is not None:
                proj[v] = got
        new_surviving = sorted(proj.keys())
        if len(new_surviving) < 2:
            break
        step, S_red = reduce_dimension(
            S, proj, new_surviving, round_index=level, subspace_dim=d_sub,
            anchor_indices=anchor, anchor_embedding=emb, tol=tol)
        steps.append(step)
        for p, b in step.offsets.items():
            acc_b[p] = acc_b.get(p, 0.0) + b
        surviving = new_surviving
        d_cur -= d_sub
        if d_cur == 0:
            # residual space is trivial: every pair distance equals its offset
            for p in combinations(surviving, 2):
                if p not in known_orig:
                    known_orig[p] = acc_b.get(p, 0.0)
                    prov[p] = INFERRED
            break
        consume_round()

    # final reconstructible set: all pairwise distances assembled
    final = DistanceState(n)
    sset = set(surviving)
    for (u, v), d2 in known_orig.items():
        if u in sset and v in sset:
            final.set(u, v, d2, prov[(u, v)])
    if final.complete_over(surviving):
        result = sorted(surviving)
    else:
        result = extract_reconstructible_clique(final, delta)
        result = [x for x in result if x in sset]
    distances = {p: known_orig[p] for p in combinations(sorted(result), 2)} \
        if result and final.complete_over(result) else {}
    if result:
        tol_embed = Tolerance(eps_rel=max(tol.eps_rel, tol.eps_rel ** (1.0 / 3.0)))
        emb_final = embed_from_distances(final.submatrix(result), target_dim=d, tol=tol_embed)
        emb_final, distances = _polish_distances(emb_final, result, distances, prov, tol)
    else:
        emb_final = PointConfig(dim=d, points=())
    info["provenance"] = prov
    return sorted(result), emb_final, steps, distances, info
