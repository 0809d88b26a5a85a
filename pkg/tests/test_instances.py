import math

import pytest

from hublabel.errors import SizeGuardError
from hublabel.graph import compute_shortest_paths, parse_graph, perturb_lengths, serialize_graph, \
    verify_unique_shortest_paths
from hublabel.instances import (SetCoverInstance, annotation_text, extract_set_cover, gen_caterpillar,
                                gen_complete_binary_tree, gen_hl1_hardness, gen_hlinf_hardness, gen_path,
                                gen_random_graph, gen_random_tree, gen_star, gen_star_path_star, optimal_cover,
                                parse_annotation, prufer_decode)
from hublabel.labeling import HubLabeling, cost, verify_covering
from hublabel.lp import build_lp1, check_feasibility, solve
from hublabel.rounding import extract_prehubs, round_lp

COVERS = [
    SetCoverInstance(1, [{1}]),
    SetCoverInstance(3, [{1, 2}, {2, 3}, {3}]),
    SetCoverInstance(4, [{1, 2}, {3, 4}, {1, 3}, {2}]),
]


def test_simple_sizes():
    assert gen_complete_binary_tree(2).n == 7
    assert gen_path(1).n == 1 and gen_path(1).m == 0
    assert gen_random_tree(10, 5).edges == gen_random_tree(10, 5).edges
    assert gen_star(4).degree(1) == 4


def test_caterpillar_counts():
    t = gen_caterpillar(2)
    assert t.n == 3 and t.degree(1) == 2
    for k in range(1, 9):
        assert gen_caterpillar(k).n == 2 ** k - 1
    with pytest.raises(SizeGuardError):
        gen_caterpillar(21)


def test_prufer_roundtrip_small():
    # every labeled tree on 5 vertices appears exactly once among the 5^3 sequences
    import itertools
    seen = set()
    for seq in itertools.product(range(1, 6), repeat=3):
        seen.add(frozenset(frozenset(e) for e in prufer_decode(list(seq), 5)))
    assert len(seen) == 5 ** 3


def test_random_graph():
    g = gen_random_graph(10, 9, seed=1)
    assert g.is_tree()
    g = gen_random_graph(10, 20, seed=1)
    assert g.m == 20 and verify_unique_shortest_paths(g)[0]
    assert gen_random_graph(10, 20, seed=1) == g
    with pytest.raises(ValueError):
        gen_random_graph(5, 3, seed=0)


def test_generators_roundtrip_through_file_format():
    graphs = [gen_path(5), gen_complete_binary_tree(3), gen_star(6), gen_caterpillar(4),
              gen_random_tree(17, 2), gen_random_graph(12, 25, 3), gen_star_path_star(1).graph,
              gen_hl1_hardness(COVERS[1], 2, 2).graph, gen_hlinf_hardness(COVERS[1], 1, 2, 2).graph]
    for g in graphs:
        back = parse_graph(serialize_graph(g))
        assert (back.n, back.edges) == (g.n, g.edges)


def test_star_path_star_counts():
    for t, n in ((1, 11), (2, 38)):
        inst = gen_star_path_star(t)
        k, N = inst.meta["k"], inst.meta["N"]
        assert k == 3 * t and N == math.comb(k, 2 * t)
        assert inst.graph.n == n == 2 * N + 2 + k
        assert check_feasibility(inst.fractional, compute_shortest_paths(inst.graph)).ok


def test_annotation_roundtrip():
    inst = gen_star_path_star(1)
    assert parse_annotation(annotation_text(inst)) == inst.roles
    assert inst.role_of(inst.meta["k"] + 1) == "center_a"


def test_set_cover_validation():
    with pytest.raises(ValueError):
        SetCoverInstance(3, [{1, 2}])
    sc = COVERS[2]
    assert sc.is_cover([1, 2]) and not sc.is_cover([1, 4])
    assert sc.first_covering(3) == 2
    assert len(optimal_cover(sc)) == 2


def test_hl1_tiny_counts():
    inst = gen_hl1_hardness(COVERS[0], 1, 1)
    assert inst.graph.n == 6
    assert verify_covering(inst.intended, compute_shortest_paths(inst.graph)).ok


@pytest.mark.parametrize("sc", COVERS)
def test_hl1_intended_and_extraction(sc):
    A, B = 2, 3
    inst = gen_hl1_hardness(sc, A, B)
    assert inst.graph.n == A * B + A + sc.m + sc.n + B * sc.n + 1
    assert verify_covering(inst.intended, compute_shortest_paths(inst.graph)).ok
    c = len(inst.meta["cover"])
    bound = A * B * (c + 2) + A * (c + 1) + sc.m * (A + sc.n + 2) + 3 * sc.n + 4 * B * sc.n + (1 + sc.m + A)
    assert inst.intended.total() <= bound
    ex = extract_set_cover(inst, inst.intended)
    assert sc.is_cover(ex.cover) and ex.size == len(optimal_cover(sc))


def test_hl1_lengths():
    inst = gen_hl1_hardness(COVERS[1], 1, 1)
    W = inst.roles["W"][0]
    X = set(inst.roles["x"])
    for u, v, ln in inst.graph.edges:
        assert ln == (1 if {u, v} & {W} and {u, v} & X else 2)


def test_extract_one_set_covers_all():
    sc = SetCoverInstance(3, [{1}, {1, 2, 3}, {2}])
    inst = gen_hl1_hardness(sc, 2, 2)
    assert extract_set_cover(inst, inst.intended).size == 1


def test_extract_from_rounded_labeling():
    sc = SetCoverInstance(3, [{1, 2}, {2, 3}, {1, 3}])
    inst = gen_hl1_hardness(sc, 1, 1)
    g = inst.graph
    # rounding needs unique shortest paths; perturbed shortest paths are shortest in g too
    spd_p = compute_shortest_paths(perturb_lengths(g, 0))
    h = round_lp(extract_prehubs(solve(build_lp1(spd_p)).x, spd_p), spd_p, 1, derandomize=True)
    spd = compute_shortest_paths(g)
    h = HubLabeling.from_sets(h.sets(), spd.dist, g.n)
    assert verify_covering(h, spd).ok
    ex = extract_set_cover(inst, h)
    assert sc.is_cover(ex.cover)


def test_hlinf_tiny_counts():
    inst = gen_hlinf_hardness(COVERS[0], 1, 1, 1)
    assert inst.graph.n == 6


@pytest.mark.parametrize("sc", COVERS)
def test_hlinf_intended(sc):
    A, B, K = 2, 2, 3
    inst = gen_hlinf_hardness(sc, A, B, K)
    assert inst.graph.n == A * K + B * sc.n + A * B * sc.m + 3
    assert verify_covering(inst.intended, compute_shortest_paths(inst.graph)).ok
    c = len(inst.meta["cover"])
    assert cost(inst.intended, math.inf).value == max(B * c + 4, A + 4, K + sc.n + 4, 3)


def test_size_guard():
    with pytest.raises(SizeGuardError):
        gen_hl1_hardness(COVERS[1], 2000, 2000)


def _on_path_relation(g):
    spd = compute_shortest_paths(g)
    D = spd.dist
    n = g.n
    return {(u, v, w) for u in range(1, n + 1) for v in range(u, n + 1) for w in range(1, n + 1)
            if D[u, w] + D[w, v] == D[u, v]}


@pytest.mark.parametrize("which", ["hl1", "hlinf"])
def test_length_encoding_matches_smaller_eps(which):
    # the shipped encoding is eps-edges 1, others 2; a reference with eps = 1/4
    # (eps-edges 1, others 4 after scaling) must give the same shortest paths
    from hublabel.graph import Graph
    for sc in COVERS[1:]:
        inst = gen_hl1_hardness(sc, 2, 2) if which == "hl1" else gen_hlinf_hardness(sc, 2, 2, 2)
        g = inst.graph
        ref = Graph(g.n, tuple((u, v, 1 if ln == 1 else 4) for u, v, ln in g.edges))
        assert _on_path_relation(g) == _on_path_relation(ref)
