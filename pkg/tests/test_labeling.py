import itertools
import math

import pytest

from hublabel.errors import InfeasibleLabelingError, IntegrityError, LabelingError
from hublabel.graph import Graph, compute_shortest_paths
from hublabel.instances import gen_random_graph, gen_random_tree, gen_star
from hublabel.labeling import (HubLabeling, canonical_from_order, cost, deserialize_labeling,
                               is_hierarchical, normalize_degree_one, power_cost, query_distance, serialize_labeling,
                               verify_covering)
from hublabel.oracle import canonical_by_definition
from hublabel.rng import SplitMix64

from conftest import path_graph


def lab(sets, spd):
    return HubLabeling.from_sets(sets, spd.dist, spd.n)


def sized(*sizes):
    # a labeling on a path whose sizes are the given ones (cost depends only on sizes)
    n = len(sizes)
    hubs = {u: [(u, 0)] + [(w, abs(u - w)) for w in range(1, n + 1) if w != u][: s - 1]
            for u, s in zip(range(1, n + 1), sizes)}
    return HubLabeling(n, hubs)


def test_cost_examples():
    assert cost(sized(2, 1, 2), 1).value == 5
    assert cost(sized(2, 1, 2), math.inf).value == 2
    assert cost(sized(3, 4, 1, 1, 1), 2).power_sum == 9 + 16 + 3
    assert power_cost([3, 4], 2) == 25
    assert math.sqrt(power_cost([3, 4], 2)) == 5.0


def test_cost_domain():
    with pytest.raises(ValueError):
        cost(sized(1), 0.5)


def test_verify_pass_and_violations(path3):
    _, spd = path3
    assert verify_covering(lab({1: {1, 2}, 2: {2}, 3: {2, 3}}, spd), spd).ok
    rep = verify_covering(lab({1: {1}, 2: {2}, 3: {3}}, spd), spd)
    assert set(rep.violations) == {(1, 2), (1, 3), (2, 3)}


def test_missing_self_hub_rejected():
    with pytest.raises(LabelingError):
        HubLabeling(2, {1: [(2, 1)], 2: [(2, 0)]})


def test_integrity_error(path3):
    _, spd = path3
    h = HubLabeling(3, {1: [(1, 0), (2, 5)], 2: [(2, 0)], 3: [(2, 1), (3, 0)]})
    with pytest.raises(IntegrityError):
        verify_covering(h, spd)


def test_query(path3):
    _, spd = path3
    h = canonical_from_order([2, 1, 3], spd)
    assert query_distance(h, 1, 3) == (2, 2)
    assert query_distance(h, 3, 3) == (0, 3)
    bad = lab({1: {1}, 2: {2}, 3: {3}}, spd)
    with pytest.raises(InfeasibleLabelingError):
        query_distance(bad, 1, 3)


def test_query_random_tree_all_pairs():
    t = gen_random_tree(20, 5)
    spd = compute_shortest_paths(t)
    h = canonical_from_order(SplitMix64(1).permutation(range(1, 21)), spd)
    for u in range(1, 21):
        for v in range(1, 21):
            assert query_distance(h, u, v)[0] == spd.dist[u, v]


def test_canonical_examples(path3):
    _, spd = path3
    h = canonical_from_order([2, 1, 3], spd)
    assert h.sets() == {1: {1, 2}, 2: {2}, 3: {2, 3}} and h.total() == 5
    h = canonical_from_order([1, 2, 3], spd)
    assert h.sets() == {1: {1}, 2: {1, 2}, 3: {1, 2, 3}} and h.total() == 6
    with pytest.raises(ValueError):
        canonical_from_order([1, 1, 3], spd)


def test_canonical_matches_definition():
    g = gen_random_graph(12, 22, seed=8)
    spd = compute_shortest_paths(g)
    for s in range(10):
        pi = SplitMix64(s).permutation(range(1, 13))
        h = canonical_from_order(pi, spd)
        assert h.same_hubs(canonical_by_definition(pi, spd))
        assert verify_covering(h, spd).ok
        rank = {v: i for i, v in enumerate(pi)}
        assert all(rank[w] <= rank[u] for u in range(1, 13) for w in h.hub_set(u))


def test_canonical_on_trees_is_hierarchical():
    for s in range(10):
        t = gen_random_tree(14, s)
        spd = compute_shortest_paths(t)
        h = canonical_from_order(SplitMix64(s).permutation(range(1, 15)), spd)
        assert is_hierarchical(h)


def test_is_hierarchical_negative(path3):
    _, spd = path3
    assert not is_hierarchical(lab({1: {1, 2}, 2: {1, 2}, 3: {3}}, spd))
    assert not is_hierarchical(lab({1: {1, 2}, 2: {2, 3}, 3: {3}}, spd))


def test_is_hierarchical_is_partial_order():
    # agrees with the direct reflexive/antisymmetric/transitive check on small random set systems
    rng = SplitMix64(3)
    for _ in range(300):
        n = 4
        S = {u: {u} | {w for w in range(1, n + 1) if rng.randbelow(3) == 0} for u in range(1, n + 1)}
        h = HubLabeling(n, {u: [(w, 0 if w == u else 1) for w in S[u]] for u in S})
        rel = {(v, u) for u in S for v in S[u]}
        anti = all(not ((a, b) in rel and (b, a) in rel) for a in S for b in S if a != b)
        trans = all((a, c) in rel for a, b in rel for b2, c in rel if b == b2)
        assert is_hierarchical(h) == (anti and trans)


def test_normalize_two_path():
    g = path_graph(2)
    spd = compute_shortest_paths(g)
    h = normalize_degree_one(g, lab({1: {1, 2}, 2: {1, 2}}, spd), spd)
    assert h.total() == 3 and verify_covering(h, spd).ok
    assert h.sets() == {1: {1, 2}, 2: {2}}


def test_normalize_fixed_point(path3):
    g, spd = path3
    h = canonical_from_order([2, 1, 3], spd)
    assert normalize_degree_one(g, h, spd).same_hubs(h)


def test_normalize_star_all_labelings():
    g = gen_star(3)
    spd = compute_shortest_paths(g)
    verts = range(1, 5)
    seen = 0
    choices = [list(itertools.chain.from_iterable(itertools.combinations([w for w in verts if w != u], r)
                                                  for r in range(4))) for u in verts]
    for combo in itertools.product(*choices):
        S = {u: {u, *extra} for u, extra in zip(verts, combo)}
        h = lab(S, spd)
        if not verify_covering(h, spd).ok:
            continue
        seen += 1
        out = normalize_degree_one(g, h, spd)
        assert verify_covering(out, spd).ok and out.total() <= h.total()
        O = out.sets()
        for leaf in (2, 3, 4):
            assert O[leaf] == O[1] | {leaf}
            assert all(leaf not in O[v] for v in verts if v != leaf)
    assert seen > 100


def test_normalize_rejects_infeasible(path3):
    g, spd = path3
    with pytest.raises(InfeasibleLabelingError):
        normalize_degree_one(g, lab({1: {1}, 2: {2}, 3: {3}}, spd), spd)


def test_serialize_roundtrip():
    g = gen_random_graph(9, 14, seed=1)
    spd = compute_shortest_paths(g)
    h = canonical_from_order(SplitMix64(2).permutation(range(1, 10)), spd)
    assert deserialize_labeling(serialize_labeling(h)) == h


def test_deserialize_rejects_bad_input():
    with pytest.raises(LabelingError):
        deserialize_labeling('{"version": 1, "n": 2, "order": null, "hubs": {"1": [[1, 0]], "2": []}}')
    with pytest.raises(LabelingError):
        deserialize_labeling('{"version": 1, "n": 2, "hubs": {"1": [[1,')


def test_bad_dist_caught_by_integrity():
    g = Graph.from_edges(2, [(1, 2, 4)])
    spd = compute_shortest_paths(g)
    text = '{"version": 1, "n": 2, "order": null, "hubs": {"1": [[1, 0]], "2": [[1, 3], [2, 0]]}}'
    with pytest.raises(IntegrityError):
        verify_covering(deserialize_labeling(text), spd)
