import math

import numpy as np
import pytest
import scipy.sparse as sp

from hublabel.errors import NonUniquePathsError, SolverStallError
from hublabel.graph import Graph, compute_shortest_paths
from hublabel.instances import gen_random_graph, gen_random_tree, gen_star_path_star
from hublabel.labeling import canonical_from_order
from hublabel.lp import build_lp1, check_feasibility, labeling_to_fractional, solve, solve_lp_convex, write_mps
from hublabel.oracle import brute_force_hhl
from hublabel.simplex import simplex_solve

from conftest import path_graph


def spd_of(g):
    return compute_shortest_paths(g)


def test_single_vertex():
    g = Graph(1, ())
    assert solve(build_lp1(spd_of(g))).objective == pytest.approx(1.0)


@pytest.mark.parametrize("method", ["highs", "simplex"])
def test_single_edge_and_three_path(method):
    assert solve(build_lp1(spd_of(path_graph(2))), method=method).objective == pytest.approx(3.0, abs=1e-7)
    assert solve(build_lp1(spd_of(path_graph(3))), method=method).objective == pytest.approx(5.0, abs=1e-7)


def test_y_count():
    spd = spd_of(gen_random_tree(9, 2))
    inst = build_lp1(spd)
    want = sum(int(spd.dist[u, v]) + 1 for u in range(1, 10) for v in range(u, 10))
    assert inst.num_y == want
    assert inst.n_cover_rows == 9 * 10 // 2
    # one linking row per (endpoint, y)
    assert inst.num_rows == inst.n_cover_rows + sum(1 if u == v else 2 for u, v, _ in inst.y_keys)


def test_non_unique_rejected():
    g = Graph.from_edges(4, [(1, 2), (2, 3), (3, 4), (4, 1)])
    with pytest.raises(NonUniquePathsError):
        build_lp1(spd_of(g))


def test_simplex_matches_highs():
    for s in range(6):
        spd = spd_of(gen_random_graph(7, 10, seed=s))
        for obj in ("l1", "linf"):
            inst = build_lp1(spd, obj)
            a = solve(inst, method="highs")
            b = solve(inst, method="simplex")
            assert a.objective == pytest.approx(b.objective, abs=1e-6)
            assert check_feasibility(b.x, spd).ok


def test_simplex_deterministic():
    inst = build_lp1(spd_of(gen_random_graph(6, 8, seed=4)))
    r1 = solve(inst, method="simplex")
    r2 = solve(inst, method="simplex")
    assert r1.objective == r2.objective and r1.pivots == r2.pivots


def test_simplex_stall():
    inst = build_lp1(spd_of(gen_random_graph(6, 8, seed=4)))
    with pytest.raises(SolverStallError):
        solve(inst, method="simplex", max_pivots=3)


def test_simplex_small_lp():
    # min x + y s.t. x + 2y >= 2, 3x + y >= 3
    r = simplex_solve(sp.csr_matrix([[1.0, 2.0], [3.0, 1.0]]), np.array([2.0, 3.0]), np.array([1.0, 1.0]))
    assert r.objective == pytest.approx(1.4)
    assert r.z == pytest.approx([0.8, 0.6])


def test_lp_below_integral_optimum():
    for s in range(8):
        spd = spd_of(gen_random_tree(6, s))
        lp = solve(build_lp1(spd)).objective
        assert lp <= brute_force_hhl(spd, 1).cost + 1e-7
        lpi = solve(build_lp1(spd, "linf")).objective
        assert lpi <= brute_force_hhl(spd, math.inf).cost + 1e-7


def test_star_path_star_lp_below_shipped():
    inst = gen_star_path_star(1)
    spd = spd_of(inst.graph)
    val = solve(build_lp1(spd)).objective
    assert val <= float(inst.meta["lp_cost"]) + 1e-6
    assert inst.fractional.x[1:, 1:].sum() == pytest.approx(float(inst.meta["lp_cost"]))


def test_frank_wolfe_near_l1():
    inst = build_lp1(spd_of(path_graph(2)))
    r = solve_lp_convex(inst, 1.0001, K=20)
    assert abs(r.objective - 3.0) <= 0.03 * 3.0


def test_frank_wolfe_single_edge_p2():
    # rows are 1 + a and 1 + b with a + b >= 1, so the optimum is sqrt(1.5^2 * 2)
    inst = build_lp1(spd_of(path_graph(2)))
    r = solve_lp_convex(inst, 2, K=200)
    assert r.objective >= math.sqrt(4.5) - 1e-6
    assert r.objective == pytest.approx(math.sqrt(4.5), rel=1e-2)
    assert r.objective - r.gap <= math.sqrt(4.5) + 1e-9


def test_frank_wolfe_k0():
    inst = build_lp1(spd_of(path_graph(3)))
    r = solve_lp_convex(inst, 2, K=0)
    assert math.isfinite(r.objective)
    assert r.x[1:, 1:].sum() == pytest.approx(5.0)


def test_frank_wolfe_domain():
    inst = build_lp1(spd_of(path_graph(2)))
    for p in (1, math.inf):
        with pytest.raises(ValueError):
            solve_lp_convex(inst, p)


def test_check_feasibility_examples():
    spd = spd_of(gen_random_tree(8, 1))
    h = canonical_from_order(range(1, 9), spd)
    assert check_feasibility(labeling_to_fractional(h), spd).ok
    rep = check_feasibility(np.zeros((9, 9)), spd)
    assert len(rep.violations) == 8 * 9 // 2


def test_star_path_star_t3_feasible():
    inst = gen_star_path_star(3)
    assert check_feasibility(inst.fractional, spd_of(inst.graph)).ok


def _read_mps(text):
    rows, cols, b, c = {}, {}, {}, {}
    entries = []
    sec = None
    for line in text.splitlines():
        if not line.startswith(" "):
            sec = line.split()[0]
            continue
        f = line.split()
        if sec == "ROWS" and f[0] == "G":
            rows[f[1]] = len(rows)
        elif sec == "COLUMNS":
            j = cols.setdefault(f[0], len(cols))
            for r, v in zip(f[1::2], f[2::2]):
                if r == "COST":
                    c[j] = float(v)
                else:
                    entries.append((rows[r], j, float(v)))
        elif sec == "RHS":
            for r, v in zip(f[1::2], f[2::2]):
                b[rows[r]] = float(v)
    i, j, v = zip(*entries)
    A = sp.csr_matrix((v, (i, j)), shape=(len(rows), len(cols)))
    bb = np.array([b.get(k, 0.0) for k in range(len(rows))])
    cc = np.array([c.get(k, 0.0) for k in range(len(cols))])
    return A, bb, cc


def test_mps_roundtrip():
    inst = build_lp1(spd_of(gen_random_graph(5, 7, seed=2)), "linf")
    A, b, c = _read_mps(write_mps(inst))
    assert (A != inst.A).nnz == 0
    assert np.array_equal(b, inst.b) and np.array_equal(c, inst.c)
