"""Brute-force references for tests: optimal hierarchical labelings by order
enumeration, optimal unrestricted labelings at tiny n, and the record count
of random permutations."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import SizeGuardError
from .graph import ShortestPathData, require_unique
from .labeling import HubLabeling, canonical_from_order, normalize_p, power_cost, verify_covering

HHL_MAX_N = 9
HL_MAX_N = 5


@dataclass
class OracleResult:
    p: object
    cost: object  # sum for p=1, max for inf, sum of p-th powers otherwise
    witness: HubLabeling
    optimal_orders: Optional[int] = None
    order: Optional[tuple] = None


def _path_masks(spd: ShortestPathData):
    """pm[u][w]: bitmask (bit i = vertex i+1) of the vertices on P_uw."""
    n = spd.n
    D = spd.dist
    pm = [[0] * n for _ in range(n)]
    for u in range(1, n + 1):
        for w in range(1, n + 1):
            m = 0
            duw = D[u, w]
            for x in range(1, n + 1):
                if D[u, x] + D[x, w] == duw:
                    m |= 1 << (x - 1)
            pm[u - 1][w - 1] = m
    return pm


def _value(counts, p):
    if p == math.inf:
        return max(counts, default=0)
    return power_cost(counts, p)


def brute_force_hhl_multi(spd: ShortestPathData, ps=(1,)) -> dict:
    """Enumerate every total order once and return {p: OracleResult}.

    Placing w after the set `placed` makes w a hub of exactly those u whose
    path to w avoids `placed`, so hub counts are kept incrementally.
    """
    require_unique(spd)
    n = spd.n
    if n > HHL_MAX_N:
        raise SizeGuardError(f"order enumeration limited to n <= {HHL_MAX_N}")
    ps = [normalize_p(p) for p in ps]
    pm = _path_masks(spd)
    counts = [0] * n
    best = {p: None for p in ps}
    nbest = {p: 0 for p in ps}
    first = {p: None for p in ps}
    order = []

    def partial_hopeless():
        # counts only grow, so a partial value above every incumbent is dead
        for p in ps:
            if best[p] is None or _value(counts, p) <= best[p]:
                return False
        return True

    def rec(placed):
        if len(order) == n:
            for p in ps:
                v = _value(counts, p)
                if best[p] is None or v < best[p]:
                    best[p], nbest[p], first[p] = v, 1, tuple(order)
                elif v == best[p]:
                    nbest[p] += 1
            return
        if partial_hopeless():
            return
        for w in range(n):
            if placed >> w & 1:
                continue
            row = pm
            hit = [u for u in range(n) if not (row[u][w] & placed)]
            for u in hit:
                counts[u] += 1
            order.append(w + 1)
            rec(placed | (1 << w))
            order.pop()
            for u in hit:
                counts[u] -= 1

    rec(0)
    out = {}
    for p in ps:
        h = canonical_from_order(first[p], spd)
        got = _value(h.sizes(), p)
        assert got == best[p], f"witness cost {got} != enumerated {best[p]}"
        # h carries its order, so every hub already ranks no lower than its owner
        assert verify_covering(h, spd).ok and h.order is not None
        out[p] = OracleResult(p, best[p], h, nbest[p], first[p])
    return out


def brute_force_hhl(spd: ShortestPathData, p=1) -> OracleResult:
    """Optimal hierarchical labeling: best canonical labeling over all n! orders."""
    return brute_force_hhl_multi(spd, [p])[normalize_p(p)]


def brute_force_hl(spd: ShortestPathData, p=1, lp_bound: bool = True) -> OracleResult:
    """Optimal unrestricted labeling by branch and bound.

    Branches on the uncovered pair with the fewest shortest-path vertices,
    trying each such w as a common hub. For p = 1 the LP optimum rounded up
    stops the search as soon as the incumbent reaches it.
    """
    n = spd.n
    if n > HL_MAX_N:
        raise SizeGuardError(f"unrestricted search limited to n <= {HL_MAX_N}")
    p = normalize_p(p)
    pm = _path_masks(spd)
    paths = {(u, v): [w for w in range(n) if pm[u][v] >> w & 1] for u in range(n) for v in range(u + 1, n)}
    H = [1 << u for u in range(n)]
    floor_val = None
    if lp_bound and p == 1 and n > 1:
        try:
            from .lp import build_lp1, solve
            floor_val = math.ceil(solve(build_lp1(spd)).objective - 1e-6)
        except Exception:  # non-unique paths: no LP bound
            floor_val = None
    best = [None, None]

    def val():
        return _value([x.bit_count() for x in H], p)

    def rec():
        cur = val()
        if best[0] is not None and cur >= best[0]:
            return
        pick = None
        for (u, v), P in paths.items():
            common = H[u] & H[v] & pm[u][v]
            if common:
                continue
            if pick is None or len(P) < len(pick[1]):
                pick = ((u, v), P)
                if len(P) == 1:
                    break
        if pick is None:
            best[0], best[1] = cur, list(H)
            return
        (u, v), P = pick
        for w in P:
            bu, bv = H[u], H[v]
            H[u] |= 1 << w
            H[v] |= 1 << w
            rec()
            H[u], H[v] = bu, bv
            if floor_val is not None and best[0] == floor_val:
                return

    rec()
    sets = {u + 1: {w + 1 for w in range(n) if best[1][u] >> w & 1} for u in range(n)}
    h = HubLabeling.from_sets(sets, spd.dist, n)
    assert verify_covering(h, spd).ok
    assert _value(h.sizes(), p) == best[0]
    return OracleResult(p, best[0], h)


def canonical_by_definition(order, spd: ShortestPathData) -> HubLabeling:
    """Canonical labeling straight from the definition: for every pair the
    highest-ranked vertex of P_uv goes into both hub sets."""
    require_unique(spd)
    n = spd.n
    rank = {v: i for i, v in enumerate(order)}
    if sorted(rank) != list(range(1, n + 1)):
        raise ValueError("order must be a permutation of 1..n")
    pm = _path_masks(spd)
    sets = {u: {u} for u in range(1, n + 1)}
    for u in range(1, n + 1):
        for v in range(u + 1, n + 1):
            m = pm[u - 1][v - 1]
            w = min((x + 1 for x in range(n) if m >> x & 1), key=rank.__getitem__)
            sets[u].add(w)
            sets[v].add(w)
    return HubLabeling.from_sets(sets, spd.dist, n)


def brute_force_records(m: int, trials: int = 100_000, seed: int = 0):
    """Mean and standard error of the number of records (prefix minima) in
    a uniformly random order of m distinct keys."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if trials < 2:
        raise ValueError("need at least two trials")
    rng = np.random.default_rng(seed)
    keys = rng.permuted(np.tile(np.arange(m), (trials, 1)), axis=1)
    rec = (keys == np.minimum.accumulate(keys, axis=1)).sum(axis=1)
    return float(rec.mean()), float(rec.std(ddof=1) / math.sqrt(trials))
