from itertools import combinations

import numpy as np
import pytest

from distrecon.geometry import PointConfig, Tolerance
from distrecon.percolation import PollutionSet, polluted_closure
from distrecon.reconstruct import (
    INFERRED,
    REVEALED,
    DistanceState,
    InconsistencyDetected,
    NegativeResidual,
    ZeroConflict,
    extract_reconstructible_clique,
    geometric_closure,
    merge_duplicates,
    recover_projection,
    reduce_dimension,
    run_pipeline,
)
from distrecon.simulate import (
    InstanceSpec,
    RevealPlan,
    dependent_families,
    generate,
    reveal,
)


def state_from_points(points, hide=()):
    """Fully revealed DistanceState, minus the pairs in hide."""
    P = PointConfig(dim=len(points[0]), points=tuple(map(tuple, points)))
    a = P.as_array()
    S = DistanceState(P.n)
    hidden = {tuple(sorted(h)) for h in hide}
    for u, v in combinations(range(P.n), 2):
        if (u, v) in hidden:
            continue
        diff = a[u] - a[v]
        S.set(u, v, float(np.dot(diff, diff)), REVEALED)
    return S, a


GENERAL_POSITION_5 = [(0.0, 0), (4, 0), (0, 4), (3, 3), (1, 2)]


def test_closure_infers_hidden_pair():
    S, a = state_from_points(GENERAL_POSITION_5, hide=[(3, 4)])
    out, log = geometric_closure(S, 2)
    assert out.known(3, 4)
    assert out.provenance[(3, 4)] == INFERRED
    truth = float(np.dot(a[3] - a[4], a[3] - a[4]))
    assert abs(out.get(3, 4) - truth) < 1e-6
    assert len(log.records) == 1
    rec = log.records[0]
    assert (rec.u, rec.v) == (3, 4) and len(rec.base) == 3


def test_closure_too_few_points():
    # n = d+2: no (d+1)-subset remains outside the hidden pair
    S, _ = state_from_points(GENERAL_POSITION_5[:4], hide=[(0, 1)])
    out, log = geometric_closure(S, 2)
    assert not out.known(0, 1)
    assert not log.records


def test_closure_conservative_on_collinear_witnesses():
    # all potential bases for the hidden pair are collinear: two points off
    # a line, the rest on it, reconstructing uv would need to pick a side
    points = [(0.5, 1.0), (1.5, -2.0)] + [(float(k), 0.0) for k in range(6)]
    S, _ = state_from_points(points, hide=[(0, 1)])
    out, log = geometric_closure(S, 2)
    assert not out.known(0, 1)
    assert not log.records


def test_closure_cascades():
    # inferring one pair unlocks another
    pts = [(0.0, 0), (5, 0), (0, 5), (4, 3), (2, 6), (7, 1)]
    S, a = state_from_points(pts, hide=[(3, 4), (4, 5)])
    out, _ = geometric_closure(S, 2)
    for u, v in [(3, 4), (4, 5)]:
        truth = float(np.dot(a[u] - a[v], a[u] - a[v]))
        assert abs(out.get(u, v) - truth) < 1e-6


def test_closure_log_replay_reproduces_state():
    pts = [(0.0, 0), (5, 0), (0, 5), (4, 3), (2, 6), (7, 1)]
    S, _ = state_from_points(pts, hide=[(3, 4), (4, 5), (0, 5)])
    out, log = geometric_closure(S, 2)
    replayed = log.replay(S)
    assert replayed.dist2 == out.dist2
    assert replayed.provenance == out.provenance


def test_closure_detects_corruption():
    S, _ = state_from_points(GENERAL_POSITION_5, hide=[(3, 4)])
    S.set(0, 3, S.get(0, 3) + 50.0, REVEALED)  # contradicts the embedding
    with pytest.raises(InconsistencyDetected):
        geometric_closure(S, 2)


def test_closure_shadow_property_small():
    # known-pair mask after closure == polluted percolation with the
    # ground-truth dependent families as pollution
    for seed in range(5):
        spec = InstanceSpec(kind="lattice", n=14, d=2,
                            params={"side": 4}, seed=seed)
        P = generate(spec)
        S = reveal(P, RevealPlan(p=0.55, rounds=1, seed=seed + 100))[0]
        out, _ = geometric_closure(S, 2)
        pollution = PollutionSet(d=2, members=frozenset(dependent_families(P, 2)))
        expect = polluted_closure(S.mask_graph(), 2, pollution)
        assert out.mask_graph() == expect, seed


def test_merge_triple_multiset():
    S = DistanceState(3)
    S.set(0, 1, 0.0)
    S.set(1, 2, 0.0)
    parts = merge_duplicates(S)
    assert parts == [[0, 1, 2]]
    assert S.get(0, 2) == 0.0


def test_merge_no_zeros():
    S, _ = state_from_points(GENERAL_POSITION_5)
    assert merge_duplicates(S) == [[i] for i in range(5)]


def test_merge_two_clusters_shares_distances():
    S = DistanceState(5)
    S.set(0, 1, 0.0)
    S.set(2, 3, 0.0)
    S.set(0, 4, 9.0)
    S.set(2, 4, 16.0)
    parts = merge_duplicates(S)
    assert parts == [[0, 1], [2, 3], [4]]
    assert S.get(1, 4) == 9.0 and S.get(3, 4) == 16.0
    assert not S.known(0, 2)  # cross-cluster distance stays unknown


def test_merge_zero_conflict():
    S = DistanceState(3)
    S.set(0, 1, 0.0)
    S.set(0, 2, 4.0)
    S.set(1, 2, 25.0)
    with pytest.raises(ZeroConflict):
        merge_duplicates(S)


def test_clique_all_known():
    S, _ = state_from_points(GENERAL_POSITION_5)
    assert extract_reconstructible_clique(S, 0.3) == [0, 1, 2, 3, 4]


def test_clique_drops_isolated_vertex():
    S, _ = state_from_points(GENERAL_POSITION_5)
    T = DistanceState(6)
    for (u, v), d2 in S.dist2.items():
        T.set(u, v, d2)
    assert extract_reconstructible_clique(T, 0.5) == [0, 1, 2, 3, 4]


def test_clique_empty_state():
    assert extract_reconstructible_clique(DistanceState(4), 0.5) == []


def test_clique_delta_range():
    with pytest.raises(ValueError):
        extract_reconstructible_clique(DistanceState(4), 0.0)


def test_recover_projection_line():
    # anchor embedded at 0 and 3 on a line; v at squared distances 25, 16
    emb = PointConfig(dim=1, points=((0.0,), (3.0,)))
    S = DistanceState(4)
    S.set(2, 0, 25.0)
    S.set(2, 1, 16.0)
    proj, resid2 = recover_projection(emb, [0, 1], S, 2, 1)
    assert np.allclose(proj, [3.0])
    assert abs(resid2 - 16.0) < 1e-9


def test_recover_projection_member_of_anchor():
    emb = PointConfig(dim=1, points=((0.0,), (3.0,)))
    proj, resid2 = recover_projection(emb, [0, 1], DistanceState(2), 1, 1)
    assert np.allclose(proj, [3.0]) and resid2 == 0.0


def test_recover_projection_not_covered():
    emb = PointConfig(dim=2, points=((0.0, 0), (1, 0), (0, 1)))
    S = DistanceState(4)
    S.set(3, 0, 1.0)
    S.set(3, 1, 1.0)  # only two known distances for d_sub = 2
    assert recover_projection(emb, [0, 1, 2], S, 3, 2) is None


def test_recover_projection_dependent_anchor_subset():
    # v only sees collinear anchor points: not covered in the plane
    emb = PointConfig(dim=2, points=((0.0, 0), (1, 0), (2, 0), (0, 1)))
    S = DistanceState(5)
    for i, d2 in enumerate([2.0, 1.0, 2.0]):
        S.set(4, i, d2)
    assert recover_projection(emb, [0, 1, 2, 3], S, 4, 2) is None


def test_reduce_dimension_example():
    # points (3,4) and (0,2) over the line y=0: b = 9, 13 - 9 = 4
    S = DistanceState(2)
    S.set(0, 1, 13.0)
    proj = {0: (np.array([3.0]), 16.0), 1: (np.array([0.0]), 4.0)}
    step, new = reduce_dimension(S, proj, [0, 1])
    assert step.offsets[(0, 1)] == 9.0
    assert abs(new.get(0, 1) - 4.0) < 1e-12
    # reduction identity
    assert abs(S.get(0, 1) - (step.offsets[(0, 1)] + new.get(0, 1))) < 1e-12


def test_reduce_dimension_in_subspace():
    S = DistanceState(2)
    S.set(0, 1, 25.0)
    proj = {0: (np.array([0.0, 0.0]), 0.0), 1: (np.array([3.0, 4.0]), 0.0)}
    _, new = reduce_dimension(S, proj, [0, 1])
    assert new.get(0, 1) == 0.0


def test_reduce_dimension_unknown_pair():
    S = DistanceState(3)
    S.set(0, 1, 13.0)
    proj = {i: (np.array([float(i)]), 0.0) for i in range(3)}
    step, new = reduce_dimension(S, proj, [0, 1, 2])
    assert not new.known(1, 2)
    assert (1, 2) in step.offsets  # offsets exist for all surviving pairs


def test_reduce_dimension_negative():
    S = DistanceState(2)
    S.set(0, 1, 1.0)
    proj = {0: (np.array([0.0]), 0.0), 1: (np.array([5.0]), 0.0)}
    with pytest.raises(NegativeResidual):
        reduce_dimension(S, proj, [0, 1])


def test_reduce_dimension_missing_projection():
    S = DistanceState(2)
    with pytest.raises(ValueError):
        reduce_dimension(S, {0: (np.array([0.0]), 0.0)}, [0, 1])


def test_pipeline_all_revealed():
    S, a = state_from_points(GENERAL_POSITION_5)
    result, emb, steps, distances, info = run_pipeline([S], d=2)
    assert result == [0, 1, 2, 3, 4]
    back = emb.squared_distance_matrix().entries
    for u, v in combinations(range(5), 2):
        truth = float(np.dot(a[u] - a[v], a[u] - a[v]))
        assert abs(back[u, v] - truth) < 1e-6
        assert abs(distances[(u, v)] - truth) < 1e-6


def test_pipeline_repeated_point():
    # single repeated point with a connected zero-distance reveal
    S = DistanceState(6)
    for i in range(5):
        S.set(i, i + 1, 0.0)
    result, emb, steps, distances, info = run_pipeline([S], d=2)
    assert result == list(range(6))
    assert all(v == 0.0 for v in distances.values())


def test_pipeline_partial_reveal_sound():
    rng = np.random.default_rng(31)
    spec = InstanceSpec(kind="lattice", n=25, d=2, params={"side": 12}, seed=5)
    P = generate(spec)
    a = P.as_array()
    rounds = reveal(P, RevealPlan(p=0.7, rounds=2, seed=6))
    result, emb, steps, distances, info = run_pipeline(rounds, d=2)
    assert len(result) >= 20
    for (u, v), d2 in distances.items():
        truth = float(np.dot(a[u] - a[v], a[u] - a[v]))
        assert abs(d2 - truth) < 1e-6, (u, v)


def test_pipeline_requires_rounds():
    with pytest.raises(ValueError):
        run_pipeline([], d=2)


def test_state_json_round_trip():
    S, _ = state_from_points(GENERAL_POSITION_5, hide=[(0, 4)])
    again = DistanceState.from_json(S.to_json())
    assert again.dist2 == S.dist2
    assert again.provenance == S.provenance


def test_state_validation():
    S = DistanceState(3)
    with pytest.raises(ValueError):
        S.set(1, 1, 0.0)
    with pytest.raises(ValueError):
        S.set(0, 1, -1.0)
