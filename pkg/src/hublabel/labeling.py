"""Hub labelings: data model, costs, covering checks, canonical construction,
degree-one normalization, distance queries and the JSON file format."""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Optional

import numpy as np

from .errors import InfeasibleLabelingError, IntegrityError, LabelingError
from .graph import Graph, ShortestPathData, compute_shortest_paths, require_unique

FORMAT_VERSION = 1


def normalize_p(p):
    """Accept 1, 2, 2.5, 'inf', math.inf; ints stay ints. p < 1 is rejected."""
    if isinstance(p, str):
        s = p.strip().lower()
        if s in ("inf", "infinity", "∞"):
            return math.inf
        p = float(s)
    if isinstance(p, bool):
        raise ValueError("p must be a number")
    if p != p:
        raise ValueError("p is NaN")
    if p < 1:
        raise ValueError(f"p must be >= 1 (got {p})")
    if p == math.inf:
        return math.inf
    if float(p).is_integer():
        return int(p)
    return float(p)


class HubLabeling:
    """Per-vertex hub lists ``hubs[u] = ((hub, dist), ...)`` sorted by hub id.

    ``order`` (optional) is a total order pi given as a vertex sequence,
    highest rank first; when present every hub of u is ranked no lower than u.
    """

    def __init__(self, n: int, hubs: Mapping[int, Iterable], order: Optional[Iterable[int]] = None):
        self.n = n
        hh = {}
        for u in range(1, n + 1):
            if u not in hubs:
                raise LabelingError(f"vertex {u} has no hub list")
            lst = sorted((int(w), int(d)) for w, d in hubs[u])
            ids = [w for w, _ in lst]
            if len(set(ids)) != len(ids):
                raise LabelingError(f"duplicate hub in list of vertex {u}")
            if any(not (1 <= w <= n) for w in ids):
                raise LabelingError(f"hub id out of range for vertex {u}")
            if (u, 0) not in lst:
                raise LabelingError(f"vertex {u} is missing itself as a hub at distance 0")
            hh[u] = tuple(lst)
        extra = set(hubs) - set(range(1, n + 1))
        if extra:
            raise LabelingError(f"hub lists for unknown vertices {sorted(extra)[:5]}")
        self.hubs = hh
        if order is not None:
            order = tuple(int(x) for x in order)
            if sorted(order) != list(range(1, n + 1)):
                raise LabelingError("order is not a permutation of 1..n")
            rank = {v: i for i, v in enumerate(order)}
            for u in range(1, n + 1):
                for w, _ in hh[u]:
                    if rank[w] > rank[u]:
                        raise LabelingError(f"hub {w} of {u} ranks below {u} in the given order")
        self.order = order

    @classmethod
    def from_sets(cls, sets: Mapping[int, Iterable[int]], dist, n: Optional[int] = None,
                  order=None) -> "HubLabeling":
        """Build from plain hub sets; ``dist`` is a matrix (or spd) giving d(u, w)."""
        if isinstance(dist, ShortestPathData):
            dist = dist.dist
        if n is None:
            n = len(sets)
        hubs = {u: [(w, int(dist[u][w])) for w in set(sets[u])] for u in range(1, n + 1)}
        return cls(n, hubs, order)

    def hub_set(self, u: int) -> frozenset:
        return self._sets[u]

    @cached_property
    def _sets(self):
        return {u: frozenset(w for w, _ in lst) for u, lst in self.hubs.items()}

    def sets(self) -> dict:
        return {u: set(s) for u, s in self._sets.items()}

    def sizes(self) -> list:
        return [len(self.hubs[u]) for u in range(1, self.n + 1)]

    def total(self) -> int:
        return sum(self.sizes())

    def __eq__(self, other):
        return (isinstance(other, HubLabeling) and self.n == other.n
                and self.hubs == other.hubs and self.order == other.order)

    def same_hubs(self, other) -> bool:
        return self.n == other.n and self.hubs == other.hubs

    def __repr__(self):
        return f"HubLabeling(n={self.n}, total={self.total()}, order={'yes' if self.order else 'no'})"


@dataclass
class CostReport:
    p: object
    value: object  # int for p in {1, inf}, float otherwise
    per_vertex: Counter  # histogram |H_u| -> count
    power_sum: object = None  # sum |H_u|^p, exact int for integer p

    def __str__(self):
        return str(self.value)


def cost(h: HubLabeling, p=1) -> CostReport:
    p = normalize_p(p)
    sizes = h.sizes()
    hist = Counter(sizes)
    if p == math.inf:
        return CostReport(p, max(sizes), hist)
    if isinstance(p, int):
        ps = sum(s ** p for s in sizes)
        val = ps if p == 1 else ps ** (1.0 / p)
        return CostReport(p, val, hist, ps)
    ps = math.fsum(s ** p for s in sizes)
    return CostReport(p, ps ** (1.0 / p), hist, ps)


def power_cost(sizes, p):
    """sum |H_u|^p (exact for integer p) or max for p = inf."""
    p = normalize_p(p)
    if p == math.inf:
        return max(sizes)
    if isinstance(p, int):
        return sum(s ** p for s in sizes)
    return math.fsum(s ** p for s in sizes)


@dataclass
class CoverReport:
    ok: bool
    violations: list = field(default_factory=list)  # (u, v) with u <= v
    pairs_checked: int = 0

    def __bool__(self):
        return self.ok


def check_integrity(h: HubLabeling, spd: ShortestPathData):
    if h.n != spd.n:
        raise IntegrityError(f"labeling has n={h.n} but graph has n={spd.n}")
    dist = spd.dist
    for u, lst in h.hubs.items():
        row = dist[u]
        for w, d in lst:
            if int(row[w]) != d:
                raise IntegrityError(f"stored d({u},{w})={d} but true distance is {int(row[w])}")


def membership_matrix(h: HubLabeling) -> np.ndarray:
    n = h.n
    M = np.zeros((n + 1, n + 1), dtype=bool)
    for u, lst in h.hubs.items():
        M[u, [w for w, _ in lst]] = True
    return M


def verify_covering(h: HubLabeling, spd: ShortestPathData, max_violations: Optional[int] = None) -> CoverReport:
    """Check every pair u <= v has a common hub w with d(u,w) + d(w,v) = d(u,v)."""
    check_integrity(h, spd)
    n = h.n
    M = membership_matrix(h)
    dist = spd.dist
    viol = []
    for u in range(1, n + 1):
        hu = np.flatnonzero(M[u])
        # rows v >= u, columns restricted to hubs of u
        vs = slice(u, n + 1)
        common = M[vs][:, hu]
        on = (dist[u, hu][None, :] + dist[vs][:, hu]) == dist[u, vs][:, None]
        good = (common & on).any(axis=1)
        if not good.all():
            for off in np.flatnonzero(~good):
                viol.append((u, u + int(off)))
            if max_violations is not None and len(viol) >= max_violations:
                break
    return CoverReport(not viol, viol, n * (n + 1) // 2)


def query_distance(h: HubLabeling, u: int, v: int):
    """Merge the two hub lists; return (distance, hub) with the smallest hub id among minima."""
    a, b = h.hubs[u], h.hubs[v]
    i = j = 0
    best = None
    hub = None
    while i < len(a) and j < len(b):
        wa, wb = a[i][0], b[j][0]
        if wa == wb:
            d = a[i][1] + b[j][1]
            if best is None or d < best:
                best, hub = d, wa
            i += 1
            j += 1
        elif wa < wb:
            i += 1
        else:
            j += 1
    if best is None:
        raise InfeasibleLabelingError(f"H_{u} and H_{v} share no hub")
    return best, hub


def canonical_from_order(pi: Iterable[int], spd: ShortestPathData) -> HubLabeling:
    """Canonical labeling of a total order (pi[0] has the highest rank).

    Runs the incremental process: take vertices in order and give w to both
    ends of every not-yet-covered pair whose shortest path passes through w.
    """
    require_unique(spd)
    n = spd.n
    pi = [int(x) for x in pi]
    if sorted(pi) != list(range(1, n + 1)):
        raise ValueError("pi must be a permutation of 1..n")
    dist = spd.dist[1:, 1:]
    covered = np.zeros((n, n), dtype=bool)
    sets = {u: [] for u in range(1, n + 1)}
    for w in pi:
        col = dist[:, w - 1]
        on = (col[:, None] + col[None, :]) == dist
        new = on & ~covered
        rows = np.flatnonzero(new.any(axis=1))
        for r in rows:
            sets[int(r) + 1].append(w)
        covered |= on
    hubs = {u: [(w, int(spd.dist[u, w])) for w in ws] for u, ws in sets.items()}
    return HubLabeling(n, hubs, pi)


def is_hierarchical(h: HubLabeling) -> bool:
    """v <= u iff v in H_u must be a partial order (reflexive, antisymmetric
    and transitive as a relation, without taking a closure).

    Canonical labelings of trees always pass. On general graphs a canonical
    labeling can fail transitivity while still respecting its order.
    """
    S = h._sets
    for u in range(1, h.n + 1):
        Hu = S[u]
        if u not in Hu:
            return False
        for v in Hu:
            if v == u:
                continue
            if u in S[v]:
                return False
            if not S[v] <= Hu:
                return False
    return True


def _leaf_ok(S, u, w):
    if S[u] != S[w] | {u}:
        return False
    return not any(u in S[v] for v in S if v != u)


def normalize_degree_one(g: Graph, h: HubLabeling, spd: Optional[ShortestPathData] = None,
                         check: bool = True) -> HubLabeling:
    """Rewrite the labeling so every degree-1 vertex u with neighbor w has
    H_u = H_w + {u} and u in no other hub set, without raising the l1 cost.

    Repeated until no leaf violates the property. In a two-vertex graph both
    ends are leaves and the property cannot hold for both, so only vertex 1 is
    normalized there.
    """
    if spd is None:
        spd = compute_shortest_paths(g)
    if check:
        rep = verify_covering(h, spd, max_violations=1)
        if not rep.ok:
            raise InfeasibleLabelingError(f"input labeling violates pair {rep.violations[0]}")
    S = h.sets()
    leaves = [u for u in range(1, g.n + 1) if g.degree(u) == 1]
    if g.n == 2:
        leaves = [1]
    for _ in range(4 * g.n + 4):
        changed = False
        for u in leaves:
            w = g.adj[u][0][0]
            if _leaf_ok(S, u, w):
                continue
            Hu, Hw = S[u] - {u}, S[w] - {u}
            B = set(Hw) if len(Hw) <= len(Hu) else set(Hu)
            for v in S:
                if v not in (u, w) and u in S[v]:
                    S[v].discard(u)
                    S[v].add(w)
            S[u] = B | {u, w}
            S[w] = B | {w}
            changed = True
        if not changed:
            break
    else:
        raise LabelingError("degree-one normalization did not reach a fixed point")
    return HubLabeling.from_sets(S, spd.dist, g.n)


# ---- file format -------------------------------------------------------

def labeling_to_obj(h: HubLabeling) -> dict:
    return {
        "version": FORMAT_VERSION,
        "n": h.n,
        "order": list(h.order) if h.order is not None else None,
        "hubs": {str(u): [list(e) for e in h.hubs[u]] for u in range(1, h.n + 1)},
    }


def serialize_labeling(h: HubLabeling) -> str:
    obj = labeling_to_obj(h)
    # one vertex per line keeps large files diffable
    lines = ['{"version": %d, "n": %d, "order": %s, "hubs": {' % (
        obj["version"], obj["n"], json.dumps(obj["order"], separators=(",", ":")))]
    items = list(obj["hubs"].items())
    for i, (k, v) in enumerate(items):
        sep = "," if i + 1 < len(items) else ""
        lines.append(f'  "{k}": {json.dumps(v, separators=(",", ":"))}{sep}')
    lines.append("}}")
    return "\n".join(lines) + "\n"


def deserialize_labeling(data) -> HubLabeling:
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as e:
        raise LabelingError(f"truncated or malformed labeling file: {e}") from None
    if not isinstance(obj, dict) or obj.get("version") != FORMAT_VERSION:
        raise LabelingError(f"unsupported labeling version {obj.get('version') if isinstance(obj, dict) else None!r}")
    try:
        n = int(obj["n"])
        raw = obj["hubs"]
        order = obj.get("order")
        hubs = {}
        for k, lst in raw.items():
            u = int(k)
            if not lst:
                raise LabelingError(f"vertex {u} has an empty hub list")
            hubs[u] = [(int(w), int(d)) for w, d in lst]
    except (KeyError, TypeError, ValueError) as e:
        raise LabelingError(f"malformed labeling file: {e}") from None
    return HubLabeling(n, hubs, order)
