"""Deterministic instance generators.

Families: paths, complete binary trees (heap layout), stars, caterpillars,
random trees (Pruefer sequences) and random graphs, the star-path-star tree
that defeats "natural" roundings, and the two Set Cover reductions (l1 and
l-inf) with their intended labelings.

Lengths that the constructions want as eps are encoded as 1 and everything
else as 2, so all distances stay integral.
"""
from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import LabelingError, SizeGuardError
from .graph import Graph, compute_shortest_paths, perturb_lengths
from .labeling import HubLabeling, normalize_degree_one, verify_covering
from .lp import FractionalSolution, check_feasibility
from .rng import SplitMix64
from .trees import Tree

MAX_VERTICES = 10 ** 6
MAX_STAR_LEAVES = 10 ** 6


# ---- simple families -----------------------------------------------------

def gen_path(t: int) -> Tree:
    if t < 1:
        raise ValueError("a path needs t >= 1 vertices")
    return Tree.from_edges(t, [(i, i + 1, 1) for i in range(1, t)])


def gen_complete_binary_tree(h: int) -> Tree:
    """Heap layout: the children of i are 2i and 2i+1; 2^(h+1) - 1 vertices."""
    if h < 0:
        raise ValueError("height must be >= 0")
    n = 2 ** (h + 1) - 1
    if n > MAX_VERTICES:
        raise SizeGuardError(f"complete binary tree of height {h} is too large")
    return Tree.from_edges(n, [(i // 2, i, 1) for i in range(2, n + 1)])


def gen_star(leaves: int) -> Tree:
    """Center 1, leaves 2..leaves+1."""
    if leaves < 0:
        raise ValueError("leaves must be >= 0")
    return Tree.from_edges(leaves + 1, [(1, i, 1) for i in range(2, leaves + 2)])


def prufer_decode(seq, n: int) -> list:
    """Edges of the labeled tree on 1..n with the given Pruefer sequence."""
    if n == 1:
        return []
    if n == 2:
        return [(1, 2)]
    deg = [1] * (n + 1)
    for x in seq:
        deg[x] += 1
    leaves = [v for v in range(1, n + 1) if deg[v] == 1]
    heapq.heapify(leaves)
    edges = []
    for x in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, x))
        deg[x] -= 1
        if deg[x] == 1:
            heapq.heappush(leaves, x)
    u, v = heapq.heappop(leaves), heapq.heappop(leaves)
    edges.append((u, v))
    return edges


def gen_random_tree(n: int, seed: int) -> Tree:
    """Uniform labeled tree via a Pruefer sequence drawn from SplitMix64."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = SplitMix64(seed)
    seq = [rng.randint(1, n) for _ in range(max(0, n - 2))]
    return Tree.from_edges(n, [(min(a, b), max(a, b), 1) for a, b in prufer_decode(seq, n)])


def gen_caterpillar(k: int) -> Tree:
    """Spine 1..k; spine vertex i carries 2^(k-i) - 1 leaves; n = 2^k - 1."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > 20:
        raise SizeGuardError("caterpillar with k > 20 exceeds the size guard")
    edges = [(i, i + 1, 1) for i in range(1, k)]
    nxt = k + 1
    for i in range(1, k + 1):
        for _ in range(2 ** (k - i) - 1):
            edges.append((i, nxt, 1))
            nxt += 1
    return Tree.from_edges(nxt - 1, edges)


def gen_random_graph(n: int, m: int, seed: int, max_len: int = 10) -> Graph:
    """Random spanning tree plus m - n + 1 extra edges; lengths drawn from
    1..max_len and then perturbed so that shortest paths are unique."""
    if n < 1 or m < n - 1 or m > n * (n - 1) // 2:
        raise ValueError(f"need n-1 <= m <= n(n-1)/2, got n={n}, m={m}")
    rng = SplitMix64(seed)
    tree = gen_random_tree(n, rng.next_u64())
    present = {(min(u, v), max(u, v)) for u, v, _ in tree.edges}
    extra = m - (n - 1)
    if extra:
        free = [(u, v) for u in range(1, n + 1) for v in range(u + 1, n + 1) if (u, v) not in present]
        rng.shuffle(free)
        present |= set(free[:extra])
    edges = [(u, v, rng.randint(1, max_len)) for u, v in sorted(present)]
    return perturb_lengths(Graph.from_edges(n, edges), rng.next_u64() >> 1)


# ---- annotated instances ---------------------------------------------------

@dataclass
class GeneratedInstance:
    graph: Graph
    roles: dict  # role name -> list of vertex ids; a partition of 1..n
    intended: Optional[HubLabeling] = None
    fractional: Optional[FractionalSolution] = None
    meta: dict = field(default_factory=dict)

    def check_partition(self):
        seen = sorted(v for vs in self.roles.values() for v in vs)
        if seen != list(range(1, self.graph.n + 1)):
            raise ValueError("role annotations do not partition the vertex set")

    def role_of(self, v: int) -> str:
        for name, vs in self.roles.items():
            if v in vs:
                return name
        raise KeyError(v)


def _ranges(ids):
    out = []
    for _, grp in itertools.groupby(enumerate(sorted(ids)), key=lambda p: p[1] - p[0]):
        grp = [v for _, v in grp]
        out.append(f"{grp[0]}-{grp[-1]}" if len(grp) > 1 else str(grp[0]))
    return ",".join(out)


def annotation_text(inst: GeneratedInstance) -> str:
    """One line per role: name followed by comma separated id ranges."""
    return "".join(f"{name} {_ranges(vs)}\n" for name, vs in inst.roles.items())


def parse_annotation(text: str) -> dict:
    roles = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        name, spec = line.split(None, 1)
        ids = []
        for part in spec.split(","):
            if "-" in part:
                lo, hi = part.split("-")
                ids.extend(range(int(lo), int(hi) + 1))
            else:
                ids.append(int(part))
        roles[name] = ids
    return roles


def _require_cover(h: HubLabeling, g: Graph, what: str, spd=None):
    spd = spd or compute_shortest_paths(g)
    rep = verify_covering(h, spd, max_violations=1)
    if not rep.ok:
        raise LabelingError(f"{what}: intended labeling misses pair {rep.violations[0]}")
    return spd


# ---- star - path - star ----------------------------------------------------

def gen_star_path_star(t: int) -> GeneratedInstance:
    """Path 1..k (k = 3t) between two stars whose leaves are the 2t-subsets
    of [k]. Ids: path 1..k, centers a = k+1 and b = k+2, then the A leaves,
    then the B leaves (both in lexicographic subset order).

    The shipped fractional solution puts 1/t on every path vertex of a
    leaf's subset, 1 on its own center, 1 between the centers and from the
    path to both centers, and an optimal integral labeling on the path.
    """
    from .treedp import tree_dp

    if t < 1:
        raise ValueError("t must be >= 1")
    k = 3 * t
    subsets = list(itertools.combinations(range(1, k + 1), 2 * t))
    N = len(subsets)
    if N > MAX_STAR_LEAVES:
        raise SizeGuardError(f"star-path-star with t={t} has {N} leaves per star")
    a, b = k + 1, k + 2
    A = list(range(k + 3, k + 3 + N))
    B = list(range(k + 3 + N, k + 3 + 2 * N))
    n = 2 * N + 2 + k
    edges = [(i, i + 1, 1) for i in range(1, k)] + [(1, a, 1), (k, b, 1)]
    edges += [(a, s, 1) for s in A] + [(b, w, 1) for w in B]
    g = Tree.from_edges(n, edges)

    X = np.zeros((n + 1, n + 1))
    X[np.arange(1, n + 1), np.arange(1, n + 1)] = 1.0
    for center, leaves in ((a, A), (b, B)):
        for leaf, S in zip(leaves, subsets):
            X[leaf, center] = 1.0
            X[leaf, list(S)] = 1.0 / t
    X[a, b] = X[b, a] = 1.0
    X[1:k + 1, a] = 1.0
    X[1:k + 1, b] = 1.0
    hp, _ = tree_dp(Tree.from_edges(k, [(i, i + 1, 1) for i in range(1, k)]), 1)
    for i in range(1, k + 1):
        for j in hp.hub_set(i):
            X[i, j] = 1.0
    frac = FractionalSolution(X, float(X.sum()), 0.0)
    spd = compute_shortest_paths(g)
    rep = check_feasibility(frac, spd)
    assert rep.ok, f"shipped fractional solution infeasible at {rep.violations[:1]}"
    path_cost = hp.total()
    meta = {"t": t, "k": k, "N": N, "n": n, "path_cost": path_cost,
            "lp_cost": Fraction(n + 6 * N + 2 + 2 * k + path_cost - k),
            "subsets": subsets}
    meta["cost_per_vertex"] = float(meta["lp_cost"]) / n
    inst = GeneratedInstance(g, {"path": list(range(1, k + 1)), "center_a": [a], "center_b": [b],
                                 "leaves_a": A, "leaves_b": B}, fractional=frac, meta=meta)
    inst.check_partition()
    return inst


# ---- Set Cover --------------------------------------------------------------

@dataclass(frozen=True)
class SetCoverInstance:
    n: int  # elements are 1..n
    sets: tuple  # tuple of frozensets

    def __init__(self, n: int, sets):
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "sets", tuple(frozenset(s) for s in sets))
        self.validate()

    @property
    def m(self) -> int:
        return len(self.sets)

    def validate(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("empty set cover instance")
        if self.m > self.n ** 4:
            raise ValueError("too many sets (m > n^4)")
        covered = set()
        for s in self.sets:
            if any(not (1 <= x <= self.n) for x in s):
                raise ValueError("set element outside 1..n")
            covered |= s
        if len(covered) != self.n:
            raise ValueError(f"elements {sorted(set(range(1, self.n + 1)) - covered)} are in no set")

    def is_cover(self, idx) -> bool:
        got = set()
        for j in idx:
            got |= self.sets[j - 1]
        return len(got) == self.n

    def first_covering(self, x: int, among=None) -> int:
        """Lowest 1-based index of a set containing x (restricted to `among`)."""
        cand = range(1, self.m + 1) if among is None else sorted(among)
        for j in cand:
            if x in self.sets[j - 1]:
                return j
        raise ValueError(f"element {x} not covered")


def optimal_cover(sc: SetCoverInstance) -> list:
    """Smallest cover by exhaustive search (1-based set indices)."""
    if sc.m > 22:
        raise SizeGuardError("exhaustive set cover limited to m <= 22")
    full = (1 << sc.n) - 1
    masks = [sum(1 << (x - 1) for x in s) for s in sc.sets]
    for size in range(1, sc.m + 1):
        for combo in itertools.combinations(range(sc.m), size):
            acc = 0
            for j in combo:
                acc |= masks[j]
            if acc == full:
                return [j + 1 for j in combo]
    raise AssertionError("unreachable: instance validated as coverable")


def _guard(count: int):
    if count > MAX_VERTICES:
        raise SizeGuardError(f"instance would have {count} vertices (limit {MAX_VERTICES})")


def gen_hl1_hardness(sc: SetCoverInstance, A: Optional[int] = None, B: Optional[int] = None,
                     cover=None) -> GeneratedInstance:
    """Six-layer graph: B pendant t's per hub r_i (A of them), the set layer,
    the element layer, B pendant y's per element, and W next to every element.
    (W, x_j) has length 1, every other edge length 2.

    Ids follow the layers: t^(i)_j, r_i, S_j, x_j, y^(j)_a, W.
    The intended labeling is built from `cover` (default: an optimal one).
    """
    n, m = sc.n, sc.m
    d = math.ceil(max(m, n) ** 1.5)
    A = d if A is None else int(A)
    B = d if B is None else int(B)
    if A < 1 or B < 1:
        raise ValueError("A and B must be >= 1")
    total = A * B + A + m + n + B * n + 1
    _guard(total)
    nxt = itertools.count(1)
    T = [[next(nxt) for _ in range(B)] for _ in range(A)]
    R = [next(nxt) for _ in range(A)]
    S = [next(nxt) for _ in range(m)]
    X = [next(nxt) for _ in range(n)]
    Y = [[next(nxt) for _ in range(B)] for _ in range(n)]
    W = next(nxt)
    assert W == total
    edges = []
    for i in range(A):
        edges += [(R[i], tv, 2) for tv in T[i]]
        edges += [(R[i], sv, 2) for sv in S]
    for j, s in enumerate(sc.sets):
        edges += [(S[j], X[x - 1], 2) for x in sorted(s)]
    for x in range(n):
        edges += [(X[x], yv, 2) for yv in Y[x]]
        edges.append((X[x], W, 1))
    g = Graph.from_edges(total, edges)

    if cover is None:
        cover = optimal_cover(sc)
    cover = sorted(set(cover))
    if not sc.is_cover(cover):
        raise ValueError("supplied cover does not cover the universe")
    CS = {S[j - 1] for j in cover}
    sets = {}
    for i in range(A):
        sets[R[i]] = {R[i]} | CS
        for tv in T[i]:
            sets[tv] = sets[R[i]] | {tv}
    for j, s in enumerate(sc.sets):
        sets[S[j]] = {S[j], W} | set(R) | {X[x - 1] for x in s}
    for x in range(n):
        sx = S[sc.first_covering(x + 1, cover) - 1]
        sets[X[x]] = {X[x], W, sx}
        for yv in Y[x]:
            sets[yv] = sets[X[x]] | {yv}
    sets[W] = {W} | set(S) | set(R)
    spd = compute_shortest_paths(g)
    h = HubLabeling.from_sets(sets, spd.dist, total)
    _require_cover(h, g, "HL1 reduction", spd)
    c = len(cover)
    bound = A * B * (c + 2) + A * (c + 1) + m * (A + n + 2) + 3 * n + 4 * B * n + (1 + m + A)
    roles = {"t": [v for row in T for v in row], "r": R, "S": S, "x": X,
             "y": [v for row in Y for v in row], "W": [W]}
    inst = GeneratedInstance(g, roles, intended=h,
                             meta={"kind": "hl1", "A": A, "B": B, "sc": sc, "cover": cover,
                                   "cost_bound": bound, "T": T, "Y": Y, "spd": spd})
    inst.check_partition()
    assert h.total() <= bound
    return inst


def gen_hlinf_hardness(sc: SetCoverInstance, A: Optional[int] = None, B: Optional[int] = None,
                       K: Optional[int] = None, cover=None) -> GeneratedInstance:
    """Complete bipartite A x B skeleton: side-A vertex u holds r_{u,1..K},
    side-B vertex v holds a copy x_{v,1..n} of the universe, and edge (u,v)
    becomes a copy S_{uv,1..m} of the set family. Hubs W_A, W_B, W_S hang
    off all r's, x's and S's with length-1 edges; the rest have length 2.

    Ids: r's (u-major), then x's (v-major), then S_{uv,j}, then W_A, W_B, W_S.
    """
    n, m = sc.n, sc.m
    A = n * n if A is None else int(A)
    B = n * n if B is None else int(B)
    K = n * n if K is None else int(K)
    if min(A, B, K) < 1:
        raise ValueError("A, B and K must be >= 1")
    N = A * K + B * n + A * B * m + 3
    _guard(N)
    nxt = itertools.count(1)
    Rv = [[next(nxt) for _ in range(K)] for _ in range(A)]
    Xv = [[next(nxt) for _ in range(n)] for _ in range(B)]
    Sv = [[[next(nxt) for _ in range(m)] for _ in range(B)] for _ in range(A)]
    WA, WB, WS = next(nxt), next(nxt), next(nxt)
    assert WS == N
    edges = []
    for u in range(A):
        for v in range(B):
            for j, s in enumerate(sc.sets):
                sv = Sv[u][v][j]
                edges += [(r, sv, 2) for r in Rv[u]]
                edges += [(sv, Xv[v][x - 1], 2) for x in sorted(s)]
                edges.append((WS, sv, 1))
        edges += [(WA, r, 1) for r in Rv[u]]
    for v in range(B):
        edges += [(WB, xv, 1) for xv in Xv[v]]
    g = Graph.from_edges(N, edges)

    if cover is None:
        cover = optimal_cover(sc)
    cover = sorted(set(cover))
    if not sc.is_cover(cover):
        raise ValueError("supplied cover does not cover the universe")
    Ws = {WA, WB, WS}
    sets = {}
    for u in range(A):
        base = {Sv[u][v][j - 1] for v in range(B) for j in cover} | Ws
        for r in Rv[u]:
            sets[r] = base | {r}
    for v in range(B):
        for x in range(n):
            ij = sc.first_covering(x + 1, cover)
            sets[Xv[v][x]] = {Xv[v][x]} | {Sv[u][v][ij - 1] for u in range(A)} | Ws
    for u in range(A):
        for v in range(B):
            for j in range(m):
                sets[Sv[u][v][j]] = {Sv[u][v][j]} | set(Rv[u]) | set(Xv[v]) | Ws
    for w in Ws:
        sets[w] = set(Ws)
    spd = compute_shortest_paths(g)
    h = HubLabeling.from_sets(sets, spd.dist, N)
    _require_cover(h, g, "HL-inf reduction", spd)
    c = len(cover)
    sizes = {"r": B * c + 4, "x": A + 4, "S": K + n + 4, "W": 3}
    roles = {"r": [r for row in Rv for r in row], "x": [x for row in Xv for x in row],
             "S": [s for a in Sv for b in a for s in b], "W": [WA, WB, WS]}
    inst = GeneratedInstance(g, roles, intended=h,
                             meta={"kind": "hlinf", "A": A, "B": B, "K": K, "sc": sc, "cover": cover,
                                   "N": N, "expected_sizes": sizes, "expected_max": max(sizes.values())})
    inst.check_partition()
    for name, want in sizes.items():
        got = {len(h.hub_set(v)) for v in roles[name]}
        assert got == {want}, f"{name}: hub set sizes {got}, expected {want}"
    return inst


@dataclass
class CoverExtraction:
    cover: list  # 1-based set indices
    per_hub: list  # (F_i as set indices, Z_i) for every r_i
    labeling: HubLabeling  # the post-processed labeling

    @property
    def size(self) -> int:
        return len(self.cover)


def extract_set_cover(inst: GeneratedInstance, h: HubLabeling) -> CoverExtraction:
    """Read a set cover off a feasible labeling of the l1 reduction.

    Normalizes the pendant vertices, adds every r_i to H_W, moves element
    hubs out of the r_i sets (x_j in H_{r_i} becomes r_i in H_{x_j} and in
    its pendants), then takes F_i = H_{r_i} restricted to the set layer and
    patches the Z_i uncovered elements with one set each. Returns the best i.
    """
    if inst.meta.get("kind") != "hl1":
        raise ValueError("extract_set_cover needs an HL1 reduction instance")
    g, sc = inst.graph, inst.meta["sc"]
    spd = inst.meta.get("spd") or compute_shortest_paths(g)
    h2 = normalize_degree_one(g, h, spd)  # raises on infeasible input
    S = h2.sets()
    R, Sl, X = inst.roles["r"], inst.roles["S"], inst.roles["x"]
    T, Y = inst.meta["T"], inst.meta["Y"]
    W = inst.roles["W"][0]
    S[W] |= set(R)
    xpos = {xv: j for j, xv in enumerate(X)}
    for i, r in enumerate(R):
        for xv in [v for v in S[r] if v in xpos]:
            j = xpos[xv]
            S[r].discard(xv)
            for tv in T[i]:
                S[tv].discard(xv)
            S[xv].add(r)
            for yv in Y[j]:
                S[yv].add(r)
    h3 = HubLabeling.from_sets(S, spd.dist, g.n)
    sidx = {sv: j + 1 for j, sv in enumerate(Sl)}
    best = None
    per = []
    for r in R:
        F = sorted(sidx[v] for v in S[r] if v in sidx)
        got = set()
        for j in F:
            got |= sc.sets[j - 1]
        missing = sorted(set(range(1, sc.n + 1)) - got)
        per.append((F, len(missing)))
        cover = sorted(set(F) | {sc.first_covering(x) for x in missing})
        if best is None or len(F) + len(missing) < best[0]:
            best = (len(F) + len(missing), cover)
    cover = best[1]
    assert sc.is_cover(cover)
    return CoverExtraction(cover, per, h3)
