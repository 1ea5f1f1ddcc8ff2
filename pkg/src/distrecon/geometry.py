"""Euclidean distance geometry on squared distances.

All distances are squared internally; square roots appear only at
presentation boundaries.  Inputs with integer (or Fraction) entries can be
handled exactly by enabling ``Tolerance.exact_mode``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np


class GeometryError(Exception):
    pass


class NonEuclidean(GeometryError):
    """The squared-distance matrix admits no Euclidean embedding."""


class RankTooHigh(GeometryError):
    """The affine dimension of the input exceeds the requested dimension."""


class InconsistentDistances(GeometryError):
    """The given distances admit no embedding within tolerance."""


class DegenerateBasis(GeometryError):
    """Supplied basis points are affinely dependent."""


class EmptyInput(GeometryError):
    pass


@dataclass(frozen=True)
class Tolerance:
    """Relative threshold for eigenvalue/rank decisions.

    ``exact_mode`` switches independence tests to fraction-free rational
    arithmetic when the inputs are int/Fraction valued.
    """

    eps_rel: float = 1e-9
    exact_mode: bool = False

    def __post_init__(self):
        if not (0.0 < self.eps_rel < 1.0):
            raise ValueError("eps_rel must lie in (0, 1)")


DEFAULT_TOL = Tolerance()


@dataclass(frozen=True)
class PointConfig:
    """An ordered multiset of points in R^dim.

    Duplicate points are legal and meaningful; nothing is deduplicated.
    """

    dim: int
    points: tuple = field(default_factory=tuple)

    def __post_init__(self):
        pts = tuple(tuple(float(c) for c in p) for p in self.points)
        object.__setattr__(self, "points", pts)
        for p in pts:
            if len(p) != self.dim:
                raise ValueError("point has wrong dimension")

    @property
    def n(self) -> int:
        return len(self.points)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float).reshape(self.n, self.dim)

    def to_json(self):
        return [list(p) for p in self.points]

    @classmethod
    def from_json(cls, data, dim=None):
        if dim is None:
            if not data:
                raise ValueError("cannot infer dim from empty point list")
            dim = len(data[0])
        return cls(dim=dim, points=tuple(tuple(p) for p in data))

    def squared_distance_matrix(self) -> "SquaredDistanceMatrix":
        a = self.as_array()
        diff = a[:, None, :] - a[None, :, :]
        return SquaredDistanceMatrix(np.einsum("ijk,ijk->ij", diff, diff))


class SquaredDistanceMatrix:
    """Symmetric n x n matrix of squared distances, zero diagonal."""

    def __init__(self, entries):
        m = np.asarray(entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("entries must be square")
        if not np.allclose(m, m.T):
            raise ValueError("entries must be symmetric")
        if np.any(np.diag(m) != 0.0):
            raise ValueError("diagonal must be zero")
        if np.any(m < 0.0):
            raise ValueError("squared distances must be nonnegative")
        self.entries = 0.5 * (m + m.T)
        self.n = m.shape[0]

    def submatrix(self, idx) -> "SquaredDistanceMatrix":
        idx = list(idx)
        return SquaredDistanceMatrix(self.entries[np.ix_(idx, idx)])

    def to_json(self):
        return {"n": self.n, "entries": [float(x) for x in self.entries.ravel()]}

    @classmethod
    def from_json(cls, data):
        n = int(data["n"])
        m = np.asarray(data["entries"], dtype=float).reshape(n, n)
        return cls(m)


@dataclass
class GramMatrix:
    """Gram matrix of difference vectors anchored at one point of a k-subset."""

    k: int
    anchor: int
    entries: np.ndarray


def gram_from_distances(D: SquaredDistanceMatrix, anchor: int) -> GramMatrix:
    """Gram matrix of the points of D relative to the anchor point.

    G[i][j] = (d2(i, a) + d2(j, a) - d2(i, j)) / 2 over the non-anchor
    indices in their original order.
    """
    k = D.n
    if not (0 <= anchor < k):
        raise ValueError("anchor out of range")
    rest = [i for i in range(k) if i != anchor]
    da = D.entries[rest, anchor]
    G = 0.5 * (da[:, None] + da[None, :] - D.entries[np.ix_(rest, rest)])
    return GramMatrix(k=k, anchor=anchor, entries=G)


def _exact_leading_minors_positive(M) -> bool:
    """Positive definiteness of a rational symmetric matrix.

    Sylvester's criterion with exact Fraction determinants.
    """
    m = [[Fraction(x) for x in row] for row in M]
    n = len(m)
    for k in range(1, n + 1):
        sub = [row[:k] for row in m[:k]]
        if _fraction_det(sub) <= 0:
            return False
    return True


def _fraction_det(m) -> Fraction:
    m = [row[:] for row in m]
    n = len(m)
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = -det
        det *= m[col][col]
        inv = Fraction(1, 1) / m[col][col]
        for r in range(col + 1, n):
            f = m[r][col] * inv
            for c in range(col, n):
                m[r][c] -= f * m[col][c]
    return det


def is_positive_definite(G: GramMatrix, tol: Tolerance = DEFAULT_TOL) -> bool:
    """Smallest eigenvalue above eps_rel * trace (exact minors in exact_mode).

    A 0 x 0 matrix is vacuously positive definite.
    """
    m = np.asarray(G.entries, dtype=float)
    if m.size == 0:
        return True
    if tol.exact_mode:
        # entries of 2G are integers for integer squared distances
        doubled = [[2 * x for x in row] for row in np.asarray(G.entries).tolist()]
        return _exact_leading_minors_positive(doubled)
    tr = float(np.trace(m))
    if tr <= 0.0:
        return False
    return float(np.linalg.eigvalsh(m)[0]) > tol.eps_rel * tr


def is_independent(D: SquaredDistanceMatrix, d: int, tol: Tolerance = DEFAULT_TOL) -> bool:
    """Whether d+1 points (given by their squared distances) affinely span R^d.

    The verdict does not depend on the anchor choice.
    """
    if D.n != d + 1:
        raise ValueError(f"expected {d + 1} points, got {D.n}")
    return is_positive_definite(gram_from_distances(D, anchor=D.n - 1), tol)


def _signed_eigvecs(vecs: np.ndarray) -> np.ndarray:
    """Fix each column's first component of significant size to be positive."""
    out = vecs.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size and col[nz[0]] < 0:
            out[:, j] = -col
    return out


def embed_from_distances(D: SquaredDistanceMatrix, target_dim: int,
                         tol: Tolerance = DEFAULT_TOL) -> PointConfig:
    """Embed a complete squared-distance matrix into R^target_dim.

    The first point is the anchor, placed at the origin.  Output is
    deterministic: eigenpairs sorted descending, eigenvector signs fixed.

    Raises NonEuclidean if the anchored Gram matrix has a significantly
    negative eigenvalue, RankTooHigh if the affine dimension exceeds
    target_dim.
    """
    n = D.n
    if n == 0:
        return PointConfig(dim=target_dim, points=())
    if n == 1:
        return PointConfig(dim=target_dim, points=((0.0,) * target_dim,))
    G = gram_from_distances(D, anchor=0).entries
    tr = float(np.trace(G))
    scale = tr if tr > 0 else 1.0
    evals, evecs = np.linalg.eigh(G)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    if evals[-1] < -tol.eps_rel * scale:
        raise NonEuclidean(f"negative Gram eigenvalue {evals[-1]:g}")
    rank = int(np.sum(evals > tol.eps_rel * scale))
    if rank > target_dim:
        raise RankTooHigh(f"affine dimension {rank} exceeds target {target_dim}")
    evecs = _signed_eigvecs(evecs)
    coords = np.zeros((n - 1, target_dim))
    for j in range(min(rank, target_dim)):
        coords[:, j] = evecs[:, j] * np.sqrt(max(evals[j], 0.0))
    pts = np.vstack([np.zeros((1, target_dim)), coords])
    return PointConfig(dim=target_dim, points=tuple(map(tuple, pts)))


def lift_point(prefix_coords: np.ndarray, dists2, tol: Tolerance = DEFAULT_TOL):
    """Place a new point given squared distances to already-placed points.

    prefix_coords is a (k, m) array of affinely independent points whose
    span has dimension k-1.  Returns (coords_in_span, residual2): the
    orthogonal projection of the new point onto the affine span of the
    prefix, and its squared distance to that span.
    """
    q = np.asarray(prefix_coords, dtype=float)
    d2 = np.asarray(dists2, dtype=float)
    k = q.shape[0]
    if k == 0:
        raise ValueError("empty prefix")
    if k == 1:
        return q[0].copy(), float(d2[0])
    A = 2.0 * (q[1:] - q[0])
    norms = np.einsum("ij,ij->i", q[1:] - q[0], q[1:] - q[0])
    b = d2[0] - d2[1:] + norms
    if A.shape[0] == A.shape[1]:
        try:
            x = np.linalg.solve(A, b)
        except np.linalg.LinAlgError:
            x, *_ = np.linalg.lstsq(A, b, rcond=None)
    else:
        x, *_ = np.linalg.lstsq(A, b, rcond=None)
    proj = q[0] + x
    resid2 = float(d2[0] - np.dot(proj - q[0], proj - q[0]))
    return proj, resid2


def affine_dimension(P: PointConfig, tol: Tolerance = DEFAULT_TOL) -> int:
    """Dimension of the affine span of a point multiset."""
    if P.n == 0:
        raise EmptyInput("no points")
    a = P.as_array()
    diffs = a[1:] - a[0]
    if diffs.size == 0:
        return 0
    s = np.linalg.svd(diffs, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    total = float(np.sum(s * s))
    return int(np.sum(s * s > tol.eps_rel * total))


def exact_affine_rank(points) -> int:
    """Affine rank over the rationals; points must be int/Fraction valued."""
    pts = [[Fraction(c) for c in p] for p in points]
    if not pts:
        raise EmptyInput("no points")
    rows = [[c - c0 for c, c0 in zip(p, pts[0])] for p in pts[1:]]
    rank = 0
    ncols = len(pts[0])
    pivot_row = 0
    for col in range(ncols):
        piv = next((r for r in range(pivot_row, len(rows)) if rows[r][col] != 0), None)
        if piv is None:
            continue
        rows[pivot_row], rows[piv] = rows[piv], rows[pivot_row]
        pr = rows[pivot_row]
        for r in range(pivot_row + 1, len(rows)):
            if rows[r][col] != 0:
                f = rows[r][col] / pr[col]
                rows[r] = [x - f * y for x, y in zip(rows[r], pr)]
        pivot_row += 1
        rank += 1
        if pivot_row == len(rows):
            break
    return rank


def project_onto_span(x, basis_points, tol: Tolerance = DEFAULT_TOL):
    """Orthogonal projection of x onto the affine span of basis_points.

    Returns (projection, squared distance to the span).  Raises
    DegenerateBasis if the basis points are affinely dependent.
    """
    x = np.asarray(x, dtype=float)
    basis = np.asarray(basis_points, dtype=float)
    if basis.ndim != 2 or basis.shape[0] == 0:
        raise ValueError("basis_points must be a nonempty list of points")
    b0 = basis[0]
    A = basis[1:] - b0
    if A.shape[0]:
        s = np.linalg.svd(A, compute_uv=False)
        total = float(np.sum(s * s))
        rank = int(np.sum(s * s > tol.eps_rel * total)) if total > 0 else 0
        if rank < A.shape[0]:
            raise DegenerateBasis("basis points are affinely dependent")
        coef, *_ = np.linalg.lstsq(A.T, x - b0, rcond=None)
        proj = b0 + A.T @ coef
    else:
        proj = b0.copy()
    resid = x - proj
    return proj, float(np.dot(resid, resid))


def recover_missing_distance(known: SquaredDistanceMatrix, u: int, v: int, d: int,
                             tol: Tolerance = DEFAULT_TOL):
    """Recover the one missing squared distance uv from a (d+3)-point matrix.

    ``known`` holds all pairwise squared distances over T + {u, v} except
    the uv entry (whose stored value is ignored).  If T = all indices other
    than u, v is d-independent, returns ("determined", uv2); otherwise
    ("dependent", None).

    Raises InconsistentDistances when the known distances admit no
    embedding of T + {u} or T + {v} in dimension d within tolerance.
    """
    k = known.n
    if k != d + 3:
        raise ValueError(f"expected {d + 3} points, got {k}")
    T = [i for i in range(k) if i not in (u, v)]
    DT = known.submatrix(T)
    if not is_independent(DT, d, tol):
        return "dependent", None
    emb = embed_from_distances(DT, target_dim=d, tol=tol)
    coords = emb.as_array()
    scale = max(float(np.max(known.entries)), 1.0)
    # corrupted input, not a tolerance blip: use a forgiving sqrt(eps) margin
    consistency = (tol.eps_rel ** 0.5) * scale
    placed = {}
    for w in (u, v):
        d2w = known.entries[T, w]
        pw, resid2 = lift_point(coords, d2w, tol)
        # u, v are assumed to lie in the d-dimensional span of T
        if abs(resid2) > consistency:
            raise InconsistentDistances(
                f"point {w} does not embed in dimension {d} (residual {resid2:g})")
        placed[w] = pw
    diff = placed[u] - placed[v]
    return "determined", float(np.dot(diff, diff))
