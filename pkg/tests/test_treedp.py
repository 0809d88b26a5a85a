import math

import pytest

from hublabel.graph import compute_shortest_paths
from hublabel.instances import gen_caterpillar, gen_complete_binary_tree, gen_path, gen_random_tree, gen_star
from hublabel.labeling import cost, is_hierarchical, power_cost, verify_covering
from hublabel.oracle import brute_force_hhl_multi
from hublabel.treedp import TreeDP, ptas_k, quasi_poly_k, tree_dp
from hublabel.trees import path_opt_cost, peleg_tree

NORMS = (1, 2, 3, math.inf)


def check(t, h):
    spd = compute_shortest_paths(t)
    assert verify_covering(h, spd).ok and is_hierarchical(h)


def test_ptas_k():
    assert [ptas_k(e) for e in (1, 0.5, 0.3, 0.25)] == [4, 8, 16, 16]
    for bad in (0, 1.5, -1):
        with pytest.raises(ValueError):
            ptas_k(bad)


def test_examples():
    assert tree_dp(gen_path(7))[0].total() == 17
    assert tree_dp(gen_complete_binary_tree(2))[0].total() == 16
    h, _ = tree_dp(gen_path(3), math.inf)
    assert cost(h, math.inf).value == 2


def test_paths_closed_form():
    for t in range(1, 25):
        h, tab = tree_dp(gen_path(t))
        assert h.total() == path_opt_cost(t) == tab.root_value


@pytest.mark.parametrize("seed", range(6))
def test_exact_matches_oracle(seed):
    t = gen_random_tree(7, seed)
    ref = brute_force_hhl_multi(compute_shortest_paths(t), NORMS)
    for p in NORMS:
        h, tab = tree_dp(t, p)
        check(t, h)
        assert power_cost(h.sizes(), p) == ref[p].cost == tab.root_value


def test_prune_does_not_change_answer():
    for s in range(4):
        t = gen_random_tree(14, s)
        for p in NORMS:
            for mode, eps in (("exact", None), ("ptas", 1)):
                a = tree_dp(t, p, mode, eps=eps, prune=True)[0]
                b = tree_dp(t, p, mode, eps=eps, prune=False)[0]
                assert a.same_hubs(b)


def test_lower_bounds_are_admissible():
    trees = [gen_random_tree(n, s) for n, s in ((16, 0), (20, 1), (22, 2), (24, 3))]
    trees += [gen_caterpillar(4), gen_star(9)]
    for t in trees:
        for p in NORMS:
            for mode, eps in (("exact", None), ("ptas", 1), ("ptas", 0.5), ("ptas", 0.25)):
                full = TreeDP(t, p, mode, eps=eps, prune=False)
                full.solve()
                probe = TreeDP(t, p, mode, eps=eps)
                for (m, tt), (v, _, _) in full.memo.items():
                    assert probe.lower_bound(m, tt) <= v + 1e-9, (t.n, p, mode, eps)
                probe.solve()
                assert probe.memo[(probe.full, 0)] == full.memo[(full.full, 0)]
                assert probe.steps() == full.steps()


def test_memo_satisfies_recurrence():
    t = gen_random_tree(12, 3)
    for p in NORMS:
        for mode, eps in (("exact", None), ("ptas", 1), ("ptas", 0.5)):
            dp = TreeDP(t, p, mode, eps=eps, prune=False)
            dp.solve()
            assert all(dp.recheck(m, tt) for m, tt in list(dp.memo))


def test_quasi_poly_k_is_exact():
    for n in (8, 16, 24):
        t = gen_random_tree(n, n)
        for p in (1, 2, math.inf):
            k = quasi_poly_k(n, p)
            assert tree_dp(t, p, "exact", k=k)[1].root_value == tree_dp(t, p)[1].root_value


def test_tiny_k_is_feasible_but_not_better():
    # rooting next to the single boundary vertex keeps every child at |boundary| = 1,
    # so even k = 1 reaches the root with a finite value
    for s in range(5):
        t = gen_random_tree(15, s)
        for p in NORMS:
            h, _ = tree_dp(t, p, "exact", k=1)
            check(t, h)
            assert power_cost(h.sizes(), p) >= power_cost(tree_dp(t, p)[0].sizes(), p)


def test_small_k_still_exact_when_it_fits():
    t = gen_path(20)
    assert tree_dp(t, 1, "exact", k=2)[0].total() == path_opt_cost(20)


@pytest.mark.parametrize("eps", [1, 0.5, 0.25])
def test_ptas_bound(eps):
    for s in range(4):
        t = gen_random_tree(20, 100 + s)
        for p in (1, 2, math.inf):
            exact = tree_dp(t, p)[0]
            h, tab = tree_dp(t, p, "ptas", eps=eps)
            check(t, h)
            a, b = power_cost(h.sizes(), p), power_cost(exact.sizes(), p)
            if p == 1 or p == math.inf:
                assert a <= (1 + eps) * b
                assert a <= tab.root_value
            else:
                assert a <= (1 + eps) ** p * b
            assert tab.dp.sep_children_max <= tab.dp.k // 2 + 1


def test_table_keys_and_csv():
    t = gen_random_tree(11, 4)
    h, tab = tree_dp(t, 1, "ptas", eps=1)
    for key, tt, size, val, r, sep in tab.entries():
        m = tab.dp.full if not key.boundary else tab.mask_of(key)
        assert m.bit_count() == size and tab.key(m) == key
        assert tab.get(key, tt)[0] == val
    lines = tab.to_csv().splitlines()
    assert lines[0] == "boundary,anchor,size,t,B,root,separator_step"
    assert len(lines) == len(tab) + 1


def test_caterpillar_gap():
    t = gen_caterpillar(8)
    peleg = cost(peleg_tree(t), math.inf).value
    best = cost(tree_dp(t, math.inf)[0], math.inf).value
    assert peleg / best >= 2


def test_single_vertex_and_edge():
    for n in (1, 2):
        for p in NORMS:
            h, _ = tree_dp(gen_path(n), p)
            assert h.total() == (1 if n == 1 else 3)
