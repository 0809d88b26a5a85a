import itertools
import math

import pytest

from hublabel.errors import SizeGuardError
from hublabel.graph import Graph, compute_shortest_paths
from hublabel.instances import gen_complete_binary_tree, gen_path, gen_random_graph, gen_random_tree, gen_star
from hublabel.labeling import canonical_from_order, power_cost, verify_covering
from hublabel.oracle import (brute_force_hhl, brute_force_hhl_multi, brute_force_hl, brute_force_records,
                             canonical_by_definition)
from hublabel.rounding import harmonic


def spd_of(g):
    return compute_shortest_paths(g)


def test_three_path():
    r = brute_force_hhl(spd_of(gen_path(3)))
    assert r.cost == 5 and r.order[0] == 2 and r.optimal_orders == 2
    assert brute_force_hhl(spd_of(gen_path(3)), math.inf).cost == 2


def test_cbt1():
    assert brute_force_hhl(spd_of(gen_complete_binary_tree(1))).cost == 5


def test_multi_matches_single():
    spd = spd_of(gen_random_tree(6, 4))
    multi = brute_force_hhl_multi(spd, (1, 2, math.inf))
    for p in (1, 2, math.inf):
        assert multi[p].cost == brute_force_hhl(spd, p).cost


def test_hhl_against_plain_enumeration():
    # no pruning, no incremental counts: the best canonical labeling over all orders
    for s in range(3):
        spd = spd_of(gen_random_graph(6, 8, seed=s))
        for p in (1, 2, math.inf):
            best = min(power_cost(canonical_by_definition(pi, spd).sizes(), p)
                       for pi in itertools.permutations(range(1, 7)))
            assert brute_force_hhl(spd, p).cost == best


def test_hl_small():
    assert brute_force_hl(spd_of(gen_path(3))).cost == 5
    assert brute_force_hl(spd_of(gen_path(2))).cost == 3
    assert brute_force_hl(spd_of(gen_star(4))).cost == 9


def test_hl_without_lp_bound_agrees():
    for s in range(4):
        spd = spd_of(gen_random_tree(5, s))
        for p in (1, 2, math.inf):
            a = brute_force_hl(spd, p, lp_bound=True)
            b = brute_force_hl(spd, p, lp_bound=False)
            assert a.cost == b.cost
            assert verify_covering(a.witness, spd).ok


def test_hl_non_tree_below_hhl():
    g = Graph.from_edges(5, [(1, 2, 3), (2, 3, 4), (3, 4, 5), (4, 5, 6), (5, 1, 7)])
    spd = spd_of(g)
    assert brute_force_hl(spd).cost <= brute_force_hhl(spd).cost


def test_guards():
    with pytest.raises(SizeGuardError):
        brute_force_hhl(spd_of(gen_path(10)))
    with pytest.raises(SizeGuardError):
        brute_force_hl(spd_of(gen_path(6)))


def test_canonical_by_definition_matches_process():
    spd = spd_of(gen_random_tree(8, 9))
    for pi in itertools.islice(itertools.permutations(range(1, 9)), 0, 40000, 997):
        assert canonical_by_definition(pi, spd).same_hubs(canonical_from_order(pi, spd))


def test_records():
    for m in (1, 2, 4, 16):
        mean, se = brute_force_records(m, trials=20000, seed=m)
        assert abs(mean - harmonic(m)) <= 4 * se + 1e-12
    with pytest.raises(ValueError):
        brute_force_records(0)
