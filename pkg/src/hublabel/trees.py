"""Tree machinery: balanced separators, the separator-recursion labeling and
its dual lower bound, HL -> hierarchical conversion, and the closed forms for
paths and complete binary trees."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Optional

from .errors import CertificateError, GraphError, InfeasibleLabelingError, HubLabelError
from .graph import Graph, compute_shortest_paths
from .labeling import HubLabeling, verify_covering


@dataclass(frozen=True)
class Tree(Graph):
    def __post_init__(self):
        super().__post_init__()
        if len(self.edges) != self.n - 1:
            raise GraphError(f"a tree on {self.n} vertices needs {self.n - 1} edges, got {len(self.edges)}")

    @classmethod
    def from_graph(cls, g: Graph) -> "Tree":
        if isinstance(g, Tree):
            return g
        return cls(g.n, g.edges)


def as_tree(g) -> Tree:
    return Tree.from_graph(g)


# ---- components and separators -------------------------------------------

def components(t: Graph, verts: Iterable[int], removed: int) -> list:
    """Connected components of t[verts] - removed, each as a sorted list."""
    vs = set(verts)
    vs.discard(removed)
    adj = t.adj
    out = []
    seen = set()
    for s in sorted(vs):
        if s in seen:
            continue
        comp = [s]
        seen.add(s)
        stack = [s]
        while stack:
            x = stack.pop()
            for y, _ in adj[x]:
                if y in vs and y not in seen:
                    seen.add(y)
                    comp.append(y)
                    stack.append(y)
        comp.sort()
        out.append(comp)
    return out


def balanced_separator(t: Graph, weights=None, vertices: Optional[Iterable[int]] = None) -> int:
    """Smallest-id vertex u of the (sub)tree whose removal leaves components of
    weight at most half the total. Unit weights by default."""
    verts = sorted(vertices) if vertices is not None else list(range(1, t.n + 1))
    vs = set(verts)
    if weights is None:
        wt = {v: 1 for v in verts}
    elif isinstance(weights, dict):
        wt = {v: weights.get(v, 0) for v in verts}
    else:
        wt = {v: weights[v] for v in verts}
    total = sum(wt.values())
    if total <= 0:
        raise ValueError("balanced_separator needs positive total weight")
    root = verts[0]
    adj = t.adj
    parent = {root: 0}
    order = [root]
    i = 0
    while i < len(order):
        x = order[i]
        i += 1
        for y, _ in adj[x]:
            if y in vs and y not in parent:
                parent[y] = x
                order.append(y)
    if len(order) != len(verts):
        raise ValueError("vertex set is not connected")
    sub = dict(wt)
    for x in reversed(order[1:]):
        sub[parent[x]] += sub[x]
    up = {v: total - sub[v] for v in verts}  # weight on the parent side
    best_child = {v: 0 for v in verts}
    for x in order[1:]:
        p = parent[x]
        if sub[x] > best_child[p]:
            best_child[p] = sub[x]
    for v in verts:
        if 2 * max(best_child[v], up[v]) <= total:
            return v
    raise AssertionError("every tree has a balanced separator")


# ---- labelings from decomposition steps ------------------------------------

def _dists_from(t: Graph, r: int, comp) -> dict:
    cs = comp if isinstance(comp, (set, frozenset)) else set(comp)
    d = {r: 0}
    stack = [r]
    adj = t.adj
    while stack:
        x = stack.pop()
        for y, ln in adj[x]:
            if y in cs and y not in d:
                d[y] = d[x] + ln
                stack.append(y)
    return d


def labeling_from_steps(t: Graph, steps) -> HubLabeling:
    """steps: (r, component) pairs in preorder; r becomes a hub of the whole component."""
    hubs = {u: [] for u in range(1, t.n + 1)}
    order = []
    for r, comp in steps:
        d = _dists_from(t, r, comp)
        for u in comp:
            hubs[u].append((r, d[u]))
        order.append(r)
    return HubLabeling(t.n, hubs, order if len(order) == t.n else None)


def peleg_steps(t: Graph, start=None) -> list:
    start = sorted(start) if start is not None else list(range(1, t.n + 1))
    steps = []
    stack = [start]
    while stack:
        comp = stack.pop()
        r = balanced_separator(t, vertices=comp)
        steps.append((r, comp))
        # push in reverse so components are handled in increasing-id order
        stack.extend(reversed(components(t, comp, r)))
    return steps


def peleg_tree(t: Graph) -> HubLabeling:
    """Recursive balanced-separator labeling: the separator r is a hub of its whole subtree."""
    return labeling_from_steps(t, peleg_steps(t))


# ---- dual certificate ------------------------------------------------------

@dataclass
class DualCertificate:
    value: Fraction
    contributions: list  # (iteration, n', contribution)
    max_load: Fraction  # max over (u, w) of sum_v beta_uvw
    min_pair_slack: Fraction  # min of beta_uvw + beta_vuw - alpha_uv
    alg_cost: int  # l1 cost of the separator labeling it certifies
    feasible: bool = True

    def ratio(self) -> Fraction:
        return Fraction(self.alg_cost) / self.value


def _subtree_sizes(t, comp_set, root):
    parent = {root: 0}
    order = [root]
    i = 0
    adj = t.adj
    while i < len(order):
        x = order[i]
        i += 1
        for y, _ in adj[x]:
            if y in comp_set and y not in parent:
                parent[y] = x
                order.append(y)
    size = {v: 1 for v in order}
    for x in reversed(order[1:]):
        size[parent[x]] += size[x]
    return size


def dual_certificate(t: Graph) -> DualCertificate:
    """Replay the separator recursion and build the dual solution
    alpha = A on split pairs and on (u, r), alpha_rr = B, with A = 2/n', B = 1/n'.

    All constraints are checked in exact rationals. The per-(u, w) load
    sum_v beta_uvw is accumulated across iterations; within one iteration it is
    A * (number of v behind w) for w in another component, B * (n' - k_i) at
    w = r and 1 at (r, r).
    """
    steps = peleg_steps(t)
    value = Fraction(0)
    contribs = []
    load = {}
    min_slack = None
    alg = 0
    N1 = t.n + 1

    def add(u, w, num, den):
        key = u * N1 + w
        cur = load.get(key)
        if cur is None:
            load[key] = (num, den)
        else:
            f = Fraction(*cur) + Fraction(num, den)
            load[key] = (f.numerator, f.denominator)

    for it, (r, comp) in enumerate(steps, 1):
        n1 = len(comp)
        alg += n1
        A, B = Fraction(2, n1), Fraction(1, n1)
        parts = components(t, comp, r)
        ks = [len(p) for p in parts]
        cross = (sum(ks) ** 2 - sum(k * k for k in ks)) // 2
        contrib = A * cross + A * (n1 - 1) + B
        # constraint alpha_uv <= beta_uvw + beta_vuw: every w on a split path
        # gets (0, A), (A, 0) or (B, B); the self pair gets alpha_rr = beta_rrr = B
        slacks = []
        if cross or n1 > 1:
            slacks += [A - A, 2 * B - A]
        slacks.append(B - B)
        s = min(slacks)
        min_slack = s if min_slack is None else min(min_slack, s)
        if contrib * 2 < n1 + 1:
            raise CertificateError(f"iteration {it} contributes {contrib} < (n'+1)/2")
        value += contrib
        contribs.append((it, n1, contrib))
        # loads
        add(r, r, 1, 1)
        for part, k in zip(parts, ks):
            pset = set(part)
            # attachment vertex: the neighbor of r inside this part
            c = next(y for y, _ in t.adj[r] if y in pset)
            size = _subtree_sizes(t, pset, c)
            others = [u for u in comp if u not in pset]  # includes r
            for u in part:
                add(u, r, n1 - k, n1)
            for w, sw in size.items():
                for u in others:
                    add(u, w, 2 * sw, n1)
    max_load = max(Fraction(*v) for v in load.values())
    if max_load > 1:
        raise CertificateError(f"dual load {max_load} exceeds 1")
    if min_slack < 0:
        raise CertificateError("alpha exceeds beta sum on some pair")
    if 2 * value < alg:
        raise CertificateError("certificate value below half the algorithm's cost")
    return DualCertificate(value, contribs, max_load, min_slack, alg)


def certificate_csv(cert: DualCertificate) -> str:
    lines = ["iteration,n_prime,contribution"]
    lines += [f"{i},{n1},{c}" for i, n1, c in cert.contributions]
    return "\n".join(lines) + "\n"


# ---- HL -> hierarchical conversion ----------------------------------------

class _Rooted:
    def __init__(self, t: Graph):
        n = t.n
        self.parent = [0] * (n + 1)
        self.depth = [0] * (n + 1)
        seen = [False] * (n + 1)
        seen[1] = True
        stack = [1]
        while stack:
            x = stack.pop()
            for y, _ in t.adj[x]:
                if not seen[y]:
                    seen[y] = True
                    self.parent[y] = x
                    self.depth[y] = self.depth[x] + 1
                    stack.append(y)

    def path(self, u, v):
        a, b = u, v
        left, right = [], []
        while self.depth[a] > self.depth[b]:
            left.append(a)
            a = self.parent[a]
        while self.depth[b] > self.depth[a]:
            right.append(b)
            b = self.parent[b]
        while a != b:
            left.append(a)
            right.append(b)
            a, b = self.parent[a], self.parent[b]
        return left + [a] + right[::-1]


def convert_to_hierarchical(t: Graph, h: HubLabeling, check: bool = True) -> HubLabeling:
    """Turn a feasible labeling of a tree into a hierarchical one, vertex by vertex no larger.

    On the current subtree Q, T_u is the union of the paths from u to its
    hubs in Q; these subtrees pairwise intersect, so they share a vertex.
    The smallest such vertex r becomes the top of Q and the labels are
    restricted to the components of Q - r.
    """
    t = as_tree(t)
    if check:
        spd = compute_shortest_paths(t)
        rep = verify_covering(h, spd, max_violations=1)
        if not rep.ok:
            raise InfeasibleLabelingError(f"input labeling violates pair {rep.violations[0]}")
    R = _Rooted(t)
    steps = []
    stack = [(list(range(1, t.n + 1)), {u: set(h.hub_set(u)) for u in range(1, t.n + 1)})]
    while stack:
        Q, labels = stack.pop()
        inter = None
        for u in Q:
            Tu = set()
            for v in labels[u]:
                Tu.update(R.path(u, v))
            inter = Tu if inter is None else inter & Tu
            if not inter:
                raise HubLabelError("empty intersection of label subtrees (input must be infeasible)")
        r = min(inter)
        steps.append((r, Q))
        for comp in reversed(components(t, Q, r)):
            cs = set(comp)
            stack.append((comp, {u: labels[u] & cs for u in comp}))
    out = labeling_from_steps(t, steps)
    for u in range(1, t.n + 1):
        assert len(out.hubs[u]) <= len(h.hubs[u]), f"conversion grew the label of {u}"
    return out


# ---- closed forms ----------------------------------------------------------

def path_opt_cost(t: int) -> int:
    """(t+1)*L - 2**L + 1 with L = ceil(log2(t+1)): optimal l1 cost of a t-vertex path."""
    if t < 0:
        raise ValueError("t must be >= 0")
    L = t.bit_length()
    return (t + 1) * L - (1 << L) + 1


def alg_complete_binary(h: int) -> int:
    """l1 cost of the separator labeling on the complete binary tree of height h."""
    return 2 * h * (1 << h) + 1


@lru_cache(maxsize=None)
def p_recursion(h: int, t: int) -> int:
    """Cost of the left-child-first labeling of a height-h complete binary tree
    with a t-vertex tail hanging off its root."""
    if h == 0:
        return path_opt_cost(t + 1)
    if h == 1:
        return 5 + t + path_opt_cost(t)
    return (1 << (h + 1)) - 1 + t + 2 * p_recursion(h - 2, 0) + p_recursion(h - 1, t + 1)


def cbt_with_tail(h: int, t: int = 0) -> Tree:
    """Complete binary tree in heap layout (root 1, children 2i, 2i+1) plus a
    path of t extra vertices hanging off the root."""
    nh = (1 << (h + 1)) - 1
    edges = [(i // 2, i, 1) for i in range(2, nh + 1)]
    prev = 1
    for j in range(t):
        v = nh + 1 + j
        edges.append((prev, v, 1) if prev < v else (v, prev, 1))
        prev = v
    return Tree(nh + t, tuple(edges))


def _heap_subtree(root, h):
    out = []
    level = [root]
    for _ in range(h + 1):
        out.extend(level)
        level = [c for x in level for c in (2 * x, 2 * x + 1)]
    return out


def left_child_steps(tree: Tree, h: int, tail: list) -> list:
    steps = []
    stack = [(1, h, list(tail))]
    while stack:
        p, hh, tl = stack.pop()
        if hh == 0:
            steps.extend(peleg_steps(tree, [p] + tl))
            continue
        comp = _heap_subtree(p, hh) + tl
        if hh == 1:
            steps.append((p, comp))
            steps.append((2 * p, [2 * p]))
            steps.append((2 * p + 1, [2 * p + 1]))
            if tl:
                steps.extend(peleg_steps(tree, tl))
            continue
        l = 2 * p
        steps.append((l, comp))
        # the rest: right subtree of height h-1 with tail p + old tail
        stack.append((2 * p + 1, hh - 1, [p] + tl))
        stack.append((2 * l + 1, hh - 2, []))
        stack.append((2 * l, hh - 2, []))
    return steps


@dataclass
class BinaryTreeReport:
    h: int
    t: int
    alg: int
    p_value: int
    labeling: HubLabeling
    tree: Tree = field(repr=False)

    @property
    def ratio(self) -> float:
        return self.alg / self.p_value


def binary_tree_heuristics(h: int, t: int = 0) -> BinaryTreeReport:
    """Both cost formulas plus the left-child-first labeling itself.

    The labeling is built on the complete binary tree of height h with a
    t-vertex tail at the root; its l1 cost should equal p_recursion(h, t).
    """
    if h < 0 or t < 0:
        raise ValueError("h and t must be >= 0")
    tree = cbt_with_tail(h, t)
    nh = (1 << (h + 1)) - 1
    tail = list(range(nh + 1, nh + t + 1))
    lab = labeling_from_steps(tree, left_child_steps(tree, h, tail))
    return BinaryTreeReport(h, t, alg_complete_binary(h), p_recursion(h, t), lab, tree)
