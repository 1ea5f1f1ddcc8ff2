import numpy as np
import pytest

from distrecon.geometry import (
    DegenerateBasis,
    EmptyInput,
    GramMatrix,
    InconsistentDistances,
    NonEuclidean,
    PointConfig,
    RankTooHigh,
    SquaredDistanceMatrix,
    Tolerance,
    affine_dimension,
    embed_from_distances,
    exact_affine_rank,
    gram_from_distances,
    is_independent,
    is_positive_definite,
    lift_point,
    project_onto_span,
    recover_missing_distance,
)


def sdm(entries):
    return SquaredDistanceMatrix(np.asarray(entries, dtype=float))


# squared distances of a 3-4-5 right triangle, vertices v1, v2, v3
TRIANGLE_345 = [[0, 9, 16], [9, 0, 25], [16, 25, 0]]

# collinear points at coordinates 0, 1, 3 on a line
COLLINEAR_013 = [[0, 1, 9], [1, 0, 4], [9, 4, 0]]


def test_gram_triangle_anchor_last():
    G = gram_from_distances(sdm(TRIANGLE_345), anchor=2)
    assert np.allclose(G.entries, [[16, 16], [16, 25]])


def test_gram_identical_points():
    G = gram_from_distances(sdm([[0, 0], [0, 0]]), anchor=1)
    assert np.allclose(G.entries, [[0.0]])


def test_gram_collinear_is_singular():
    G = gram_from_distances(sdm(COLLINEAR_013), anchor=2)
    assert np.allclose(G.entries, [[9, 6], [6, 4]])
    assert abs(np.linalg.det(G.entries)) < 1e-12


def test_gram_anchor_out_of_range():
    with pytest.raises(ValueError):
        gram_from_distances(sdm(TRIANGLE_345), anchor=3)


def test_positive_definite_examples():
    assert is_positive_definite(GramMatrix(3, 2, np.array([[16.0, 16], [16, 25]])))
    assert not is_positive_definite(GramMatrix(3, 2, np.array([[9.0, 6], [6, 4]])))
    assert is_positive_definite(GramMatrix(2, 1, np.array([[1.0]])))


def test_positive_definite_exact_mode_agrees():
    tol = Tolerance(exact_mode=True)
    assert is_positive_definite(GramMatrix(3, 2, np.array([[16.0, 16], [16, 25]])), tol)
    assert not is_positive_definite(GramMatrix(3, 2, np.array([[9.0, 6], [6, 4]])), tol)


def test_is_independent_triangle_and_collinear():
    assert is_independent(sdm(TRIANGLE_345), 2)
    assert not is_independent(sdm(COLLINEAR_013), 2)


def test_is_independent_single_point():
    # any multiset of size 1 spans dimension 0
    assert is_independent(sdm([[0]]), 0)


def test_is_independent_wrong_cardinality():
    with pytest.raises(ValueError):
        is_independent(sdm(TRIANGLE_345), 1)


def test_is_independent_anchor_invariance():
    rng = np.random.default_rng(3)
    for _ in range(25):
        d = int(rng.integers(1, 4))
        pts = rng.integers(-10, 11, size=(d + 1, d)).astype(float)
        D = PointConfig(dim=d, points=tuple(map(tuple, pts))).squared_distance_matrix()
        verdicts = {is_positive_definite(gram_from_distances(D, a))
                    for a in range(d + 1)}
        assert len(verdicts) == 1


def test_embed_unit_square_round_trip():
    D = sdm([[0, 1, 2, 1], [1, 0, 1, 2], [2, 1, 0, 1], [1, 2, 1, 0]])
    P = embed_from_distances(D, target_dim=2)
    back = P.squared_distance_matrix()
    assert np.allclose(back.entries, D.entries, atol=1e-9)


def test_embed_single_point_dim_zero():
    P = embed_from_distances(sdm([[0]]), target_dim=0)
    assert P.points == ((),)


def test_embed_rank_too_high():
    with pytest.raises(RankTooHigh):
        embed_from_distances(sdm(TRIANGLE_345), target_dim=1)


def test_embed_non_euclidean():
    # d(0,2) = 3 but d(0,1) = d(1,2) = 1 violates the triangle inequality
    with pytest.raises(NonEuclidean):
        embed_from_distances(sdm([[0, 1, 9], [1, 0, 1], [9, 1, 0]]), target_dim=2)


def test_embed_deterministic():
    D = sdm(TRIANGLE_345)
    a = embed_from_distances(D, target_dim=2)
    b = embed_from_distances(D, target_dim=2)
    assert a.points == b.points


def test_embed_anchor_at_origin():
    P = embed_from_distances(sdm(TRIANGLE_345), target_dim=2)
    assert P.points[0] == (0.0, 0.0)


def test_gram_round_trip_random_integer_configs():
    rng = np.random.default_rng(17)
    for _ in range(30):
        d = int(rng.integers(1, 5))
        n = int(rng.integers(d + 1, 12))
        pts = rng.integers(-10, 11, size=(n, d)).astype(float)
        D = PointConfig(dim=d, points=tuple(map(tuple, pts))).squared_distance_matrix()
        Q = embed_from_distances(D, target_dim=d)
        assert np.allclose(Q.squared_distance_matrix().entries, D.entries, atol=1e-6)


def test_lift_point_in_plane():
    # place (1, 1) from distances to (0,0), (1,0), (0,1)
    q = np.array([[0.0, 0], [1, 0], [0, 1]])
    proj, resid2 = lift_point(q, [2.0, 1.0, 1.0])
    assert np.allclose(proj, [1, 1])
    assert abs(resid2) < 1e-12


def test_lift_point_off_line_residual():
    # point (3, 4) against prefix {0, 3} on a line
    q = np.array([[0.0], [3.0]])
    proj, resid2 = lift_point(q, [25.0, 16.0])
    assert np.allclose(proj, [3.0])
    assert abs(resid2 - 16.0) < 1e-12


def test_lift_point_single_prefix():
    proj, resid2 = lift_point(np.array([[2.0, 5.0]]), [7.0])
    assert np.allclose(proj, [2, 5])
    assert resid2 == 7.0


def test_affine_dimension_cases():
    collinear = PointConfig(dim=2, points=((0, 0), (1, 1), (3, 3)))
    assert affine_dimension(collinear) == 1
    assert affine_dimension(PointConfig(dim=3, points=((1, 2, 3),))) == 0
    simplex = PointConfig(dim=3, points=((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)))
    assert affine_dimension(simplex) == 3
    with pytest.raises(EmptyInput):
        affine_dimension(PointConfig(dim=2, points=()))


def test_exact_affine_rank_matches_float():
    rng = np.random.default_rng(5)
    for _ in range(40):
        d = int(rng.integers(1, 4))
        k = int(rng.integers(1, d + 3))
        pts = rng.integers(-6, 7, size=(k, d))
        exact = exact_affine_rank(pts.tolist())
        cfg = PointConfig(dim=d, points=tuple(map(tuple, pts.astype(float))))
        assert exact == affine_dimension(cfg)


def test_project_onto_span_examples():
    basis = [(0.0, 0.0), (1.0, 0.0)]
    proj, resid2 = project_onto_span((3.0, 4.0), basis)
    assert np.allclose(proj, [3, 0]) and abs(resid2 - 16) < 1e-12
    proj, resid2 = project_onto_span((0.0, 2.0), basis)
    assert np.allclose(proj, [0, 0]) and abs(resid2 - 4) < 1e-12
    proj, resid2 = project_onto_span((0.5, 0.0), basis)
    assert abs(resid2) < 1e-12


def test_project_onto_span_pythagoras():
    rng = np.random.default_rng(11)
    basis = rng.random((3, 4))
    x = rng.random(4)
    proj, resid2 = project_onto_span(x, basis)
    for b in basis:
        lhs = np.dot(x - b, x - b)
        rhs = np.dot(proj - b, proj - b) + resid2
        assert abs(lhs - rhs) < 1e-9


def test_project_onto_span_degenerate_basis():
    with pytest.raises(DegenerateBasis):
        project_onto_span((1.0, 1.0), [(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)])


def _full_matrix(points):
    return PointConfig(dim=len(points[0]),
                       points=tuple(map(tuple, points))).squared_distance_matrix()


def test_recover_missing_distance_line():
    # T at {0, 1} on a line, u at 3, v at 5; uv^2 = 4
    D = _full_matrix([(3.0,), (5.0,), (0.0,), (1.0,)])
    status, uv2 = recover_missing_distance(D, 0, 1, d=1)
    assert status == "determined"
    assert abs(uv2 - 4.0) < 1e-9


def test_recover_missing_distance_plane():
    # T = {(0,0), (1,0), (0,1)}, u = (1,1), v = (2,0); uv^2 = 2
    D = _full_matrix([(1.0, 1), (2, 0), (0, 0), (1, 0), (0, 1)])
    status, uv2 = recover_missing_distance(D, 0, 1, d=2)
    assert status == "determined"
    assert abs(uv2 - 2.0) < 1e-9


def test_recover_missing_distance_coincident():
    D = _full_matrix([(1.0, 1), (1, 1), (0, 0), (1, 0), (0, 1)])
    status, uv2 = recover_missing_distance(D, 0, 1, d=2)
    assert status == "determined" and abs(uv2) < 1e-9


def test_recover_missing_distance_dependent_base():
    # T collinear: the distance uv is genuinely ambiguous (reflection)
    D = _full_matrix([(0.0, 1), (1, 2), (0, 0), (1, 0), (2, 0)])
    status, uv2 = recover_missing_distance(D, 0, 1, d=2)
    assert status == "dependent" and uv2 is None


def test_recover_refuses_reflected_ambiguity():
    # the two candidate placements of u across the line give different uv
    base = [(0.0, 0), (1, 0), (2, 0)]
    u, v = (0.5, 1.0), (1.5, -1.0)
    mirrored = (0.5, -1.0)
    d_keep = np.dot(np.subtract(u, v), np.subtract(u, v))
    d_flip = np.dot(np.subtract(mirrored, v), np.subtract(mirrored, v))
    assert abs(d_keep - d_flip) > 1.0  # genuinely different candidates
    D = _full_matrix([u, v] + base)
    status, _ = recover_missing_distance(D, 0, 1, d=2)
    assert status == "dependent"


def test_recover_missing_distance_inconsistent():
    # u claims to be far from every base point of a tiny triangle in d=1
    m = _full_matrix([(0.0,), (1.0,), (0.0,), (4.0,)]).entries.copy()
    m[0, 2] = m[2, 0] = 100.0  # contradicts |u - t1| implied by the rest
    with pytest.raises(InconsistentDistances):
        recover_missing_distance(SquaredDistanceMatrix(m), 0, 1, d=1)


def test_recover_randomized_soundness():
    rng = np.random.default_rng(23)
    for _ in range(50):
        d = int(rng.integers(1, 4))
        pts = rng.integers(-10, 11, size=(d + 3, d)).astype(float)
        cfg = PointConfig(dim=d, points=tuple(map(tuple, pts)))
        if affine_dimension(PointConfig(dim=d, points=cfg.points[2:])) < d:
            expect = "dependent"
        else:
            expect = "determined"
        status, uv2 = recover_missing_distance(cfg.squared_distance_matrix(), 0, 1, d)
        assert status == expect
        if status == "determined":
            truth = np.dot(pts[0] - pts[1], pts[0] - pts[1])
            assert abs(uv2 - truth) < 1e-6


def test_sdm_validation():
    with pytest.raises(ValueError):
        SquaredDistanceMatrix(np.array([[0.0, 1], [2, 0]]))  # asymmetric
    with pytest.raises(ValueError):
        SquaredDistanceMatrix(np.array([[1.0, 1], [1, 0]]))  # nonzero diagonal
    with pytest.raises(ValueError):
        SquaredDistanceMatrix(np.array([[0.0, -1], [-1, 0]]))  # negative


def test_sdm_json_round_trip():
    D = sdm(TRIANGLE_345)
    again = SquaredDistanceMatrix.from_json(D.to_json())
    assert np.array_equal(D.entries, again.entries)


def test_tolerance_validation():
    with pytest.raises(ValueError):
        Tolerance(eps_rel=0.0)
    with pytest.raises(ValueError):
        Tolerance(eps_rel=1.5)


def test_point_config_json_round_trip():
    P = PointConfig(dim=2, points=((0, 1), (2.5, -3)))
    assert PointConfig.from_json(P.to_json()).points == P.points
