"""Ground-truth instance generation and random distance revelation.

Generators are deterministic given their seed.  Coordinates can be drawn
on an integer lattice so that exact rational arithmetic is available
end-to-end in oracle tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np

from .geometry import (
    DEFAULT_TOL,
    PointConfig,
    Tolerance,
    affine_dimension,
    exact_affine_rank,
    project_onto_span,
)
from .reconstruct import DistanceState, REVEALED


class SimulationError(Exception):
    pass


class TooLarge(SimulationError):
    """Enumeration would exceed the feasibility guard."""


GENERATOR_KINDS = (
    "uniform_cube",
    "hyperplane_adversarial",
    "subspace_cluster",
    "multiset_atoms",
    "lattice",
    "explicit_points",
)


@dataclass(frozen=True)
class InstanceSpec:
    kind: str
    n: int
    d: int
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in GENERATOR_KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.n < 1 or self.d < 1:
            raise ValueError("require n >= 1 and d >= 1")

    @classmethod
    def from_json(cls, data):
        return cls(kind=data["kind"], n=int(data["n"]), d=int(data["d"]),
                   params=dict(data.get("params", {})), seed=int(data.get("seed", 0)))


@dataclass(frozen=True)
class RevealPlan:
    p: float
    rounds: int = 1
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0):
            raise ValueError("p must lie in [0, 1]")
        if self.rounds < 1:
            raise ValueError("rounds must be at least 1")

    @property
    def per_round_p(self) -> float:
        """p' with (1 - p')^rounds = 1 - p."""
        if self.p == 1.0:
            return 1.0
        return 1.0 - (1.0 - self.p) ** (1.0 / self.rounds)

    @classmethod
    def from_json(cls, data):
        return cls(p=float(data["p"]), rounds=int(data.get("rounds", 1)),
                   seed=int(data.get("seed", 0)))


def _rng(spec_seed, *stream):
    return np.random.default_rng(np.random.SeedSequence([int(spec_seed), *map(int, stream)]))


def generate(spec: InstanceSpec) -> PointConfig:
    """Deterministic ground-truth configuration for an instance spec."""
    n, d, params = spec.n, spec.d, spec.params
    rng = _rng(spec.seed)
    if spec.kind == "uniform_cube":
        pts = rng.random((n, d))
        if params.get("general_position", False):
            pts = _reject_degenerate(pts, d, spec.seed)
    elif spec.kind == "hyperplane_adversarial":
        if n < 3:
            raise ValueError("hyperplane_adversarial needs n >= 3")
        # the two off-hyperplane points come first, at indices 0 and 1
        off = rng.random((2, d))
        off[:, -1] = 1.0 + rng.random(2)
        flat = rng.random((n - 2, d))
        flat[:, -1] = 0.0
        pts = np.vstack([off, flat])
    elif spec.kind == "subspace_cluster":
        d_sub = int(params.get("subspace_dim", max(d - 1, 1)))
        m = int(params.get("cluster_size", n // 2))
        if not (0 <= d_sub < d) or not (0 <= m <= n):
            raise ValueError("invalid subspace_cluster parameters")
        inside = rng.random((m, d))
        inside[:, d_sub:] = 0.0
        outside = rng.random((n - m, d))
        pts = np.vstack([inside, outside]) if m else outside
    elif spec.kind == "multiset_atoms":
        mults = [int(x) for x in params.get("multiplicities", [n])]
        if sum(mults) != n or any(m < 1 for m in mults):
            raise ValueError("multiplicities must be positive and sum to n")
        atoms = rng.random((len(mults), d)) * 10.0
        pts = np.vstack([np.tile(a, (m, 1)) for a, m in zip(atoms, mults)])
    elif spec.kind == "lattice":
        side = int(params.get("side", 10))
        if side < 1:
            raise ValueError("side must be positive")
        pts = rng.integers(0, side + 1, size=(n, d)).astype(float)
    elif spec.kind == "explicit_points":
        pts = np.asarray(params["points"], dtype=float)
        if pts.shape != (n, d):
            raise ValueError("explicit points have wrong shape")
    else:  # pragma: no cover
        raise ValueError(spec.kind)
    return PointConfig(dim=d, points=tuple(map(tuple, pts)))


def _reject_degenerate(pts, d, seed, max_tries=50):
    """Resample until no (d+1)-subset is affinely dependent (small n only)."""
    n = len(pts)
    if comb(n, d + 1) > 200_000:
        return pts  # guard: rejection sampling is for small instances
    tol = Tolerance(eps_rel=1e-12)
    for t in range(max_tries):
        ok = True
        for sub in combinations(range(n), d + 1):
            cfg = PointConfig(dim=d, points=tuple(map(tuple, pts[list(sub)])))
            if affine_dimension(cfg, tol) < d:
                ok = False
                break
        if ok:
            return pts
        pts = _rng(seed, 1, t).random((n, d))
    raise SimulationError("could not reach general position")


def reveal(P: PointConfig, plan: RevealPlan):
    """Independent G(n, p') reveals, one DistanceState per round.

    The union over rounds is distributed as G(n, p).  Squared distances
    are exact.  A ``hide_pair`` attribute on the plan params is not
    supported here; callers drop pairs themselves if needed.
    """
    n = P.n
    a = P.as_array()
    pp = plan.per_round_p
    states = []
    iu, ju = np.triu_indices(n, k=1)
    for r in range(plan.rounds):
        rng = _rng(plan.seed, r)
        mask = rng.random(iu.size) < pp
        S = DistanceState(n)
        for u, v in zip(iu[mask], ju[mask]):
            diff = a[u] - a[v]
            S.set(int(u), int(v), float(np.dot(diff, diff)), REVEALED)
        states.append(S)
    return states


def _is_integral(P: PointConfig) -> bool:
    a = P.as_array()
    return bool(np.all(a == np.round(a)))


def _subset_dependent(P, sub, d, tol, exact):
    pts = [P.points[i] for i in sub]
    if exact:
        return exact_affine_rank([[int(c) for c in p] for p in pts]) < d
    cfg = PointConfig(dim=P.dim, points=tuple(pts))
    return affine_dimension(cfg, tol) < d


def dependent_family_count(P: PointConfig, d: int, tol: Tolerance = DEFAULT_TOL,
                           guard: int = 10**7) -> int:
    """Exact count of d-dependent (d+1)-subsets of the configuration."""
    n = P.n
    if comb(n, d + 1) > guard:
        raise TooLarge(f"C({n},{d + 1}) exceeds the enumeration guard")
    exact = _is_integral(P)
    return sum(1 for sub in combinations(range(n), d + 1)
               if _subset_dependent(P, sub, d, tol, exact))


def dependent_families(P: PointConfig, d: int, tol: Tolerance = DEFAULT_TOL,
                       guard: int = 10**7):
    """All d-dependent (d+1)-subsets, as sorted tuples."""
    n = P.n
    if comb(n, d + 1) > guard:
        raise TooLarge(f"C({n},{d + 1}) exceeds the enumeration guard")
    exact = _is_integral(P)
    return [sub for sub in combinations(range(n), d + 1)
            if _subset_dependent(P, sub, d, tol, exact)]


@dataclass
class DenseSubspace:
    dim: int
    origin: np.ndarray
    basis: np.ndarray          # (dim, ambient) orthonormal rows; empty for dim 0
    indices: tuple
    exhaustive: bool = True


def _points_on_span(P, span_points, tol):
    a = P.as_array()
    scale = max(float(np.max(np.abs(a))) ** 2, 1.0)
    out = []
    for i in range(P.n):
        _, resid2 = project_onto_span(a[i], span_points, tol)
        if resid2 <= tol.eps_rel * scale:
            out.append(i)
    return out


def find_dense_subspace(P: PointConfig, mu: float, tol: Tolerance = DEFAULT_TOL,
                        guard: int = 10**6, seed: int = 0) -> DenseSubspace:
    """Subspace with many points and few dependent families.

    Recursively descends into any proper subspace holding at least
    n_level^mu points; when none exists, the current ambient space itself
    satisfies the dependent-family bound.  Mirrors the dichotomy between
    dense subspaces and few dependent families.
    """
    if not (0.0 < mu < 1.0):
        raise ValueError("mu must lie in (0, 1)")
    a = P.as_array()
    exhaustive = True

    def descend(indices, d_eff):
        nonlocal exhaustive
        n_level = len(indices)
        if d_eff == 0 or n_level <= 1:
            return indices, 0, None
        threshold = n_level ** mu
        pts = a[indices]
        # lowest dimension first; spanning subsets of d'+1 points suffice
        for d_prime in range(0, d_eff):
            total = comb(n_level, d_prime + 1)
            if total > guard:
                exhaustive = False
                rng = _rng(seed, d_prime)
                pool = [tuple(sorted(rng.choice(n_level, size=d_prime + 1, replace=False)))
                        for _ in range(guard)]
                subsets = sorted(set(pool))
            else:
                subsets = combinations(range(n_level), d_prime + 1)
            best = None
            for sub in subsets:
                span_pts = pts[list(sub)]
                cfg = PointConfig(dim=P.dim, points=tuple(map(tuple, span_pts)))
                if affine_dimension(cfg, tol) != d_prime:
                    continue
                contained = [indices[i] for i in _points_on_span(
                    PointConfig(dim=P.dim, points=tuple(map(tuple, pts))), span_pts, tol)]
                if len(contained) >= threshold:
                    if best is None or len(contained) > len(best[0]):
                        best = (contained, span_pts)
            if best is not None:
                contained, span_pts = best
                sub_idx, sub_dim, sub_span = descend(contained, d_prime)
                if sub_span is None and sub_dim == d_prime:
                    return sub_idx, d_prime, span_pts
                return sub_idx, sub_dim, sub_span
        return indices, d_eff, None

    indices, dim, span_pts = descend(list(range(P.n)), P.dim)
    if dim == 0:
        origin = a[indices[0]] if indices else np.zeros(P.dim)
        result = DenseSubspace(dim=0, origin=origin, basis=np.zeros((0, P.dim)),
                               indices=tuple(sorted(indices)), exhaustive=exhaustive)
    else:
        if span_pts is None:
            origin = np.zeros(P.dim)
            basis = np.eye(P.dim)[:dim]
        else:
            origin = span_pts[0]
            diffs = span_pts[1:] - origin
            q, _ = np.linalg.qr(diffs.T)
            basis = q.T[:dim]
        result = DenseSubspace(dim=dim, origin=origin, basis=basis,
                               indices=tuple(sorted(indices)), exhaustive=exhaustive)
    _check_dense_subspace(P, mu, result, tol)
    return result


def _check_dense_subspace(P, mu, result, tol):
    """Self-check: point count and dependent-family bounds must hold."""
    n, d = P.n, P.dim
    cnt = len(result.indices)
    if cnt < n ** (mu ** (d - result.dim)) - 1e-9:
        raise SimulationError("dense subspace self-check failed: too few points")
    if result.dim >= 1:
        sub = PointConfig(dim=d, points=tuple(P.points[i] for i in result.indices))
        try:
            dep = dependent_family_count(sub, result.dim, tol, guard=200_000)
        except TooLarge:
            return
        if dep > d * cnt ** (result.dim + mu) + 1e-9:
            raise SimulationError("dense subspace self-check failed: too many dependent families")
