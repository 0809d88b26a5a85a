"""Weighted undirected graphs, the text format, and shortest-path data.

Vertex ids are 1..n everywhere. Arrays indexed by vertex are padded with an
unused slot 0 so that ``dist[u, v]`` reads naturally.
"""
from __future__ import annotations

import heapq
import io
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Optional

import numpy as np

from .errors import GraphError, LengthOverflowError, NonUniquePathsError, PerturbationError
from .rng import SplitMix64

# Sums of two distances must fit in int64, so total length stays below 2**62.
LENGTH_LIMIT = 1 << 62
# Extra noise bits on top of ceil(3 log2 n) + 1; see perturb_lengths.
NOISE_EXTRA_BITS = 20
PERTURB_RETRIES = 16


@dataclass(frozen=True)
class Graph:
    n: int
    edges: tuple  # of (u, v, length) with u < v

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(tuple(e) for e in self.edges))
        _validate(self.n, self.edges)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable) -> "Graph":
        """Build from (u, v, len) or (u, v) triples in any orientation."""
        norm = []
        for e in edges:
            u, v = int(e[0]), int(e[1])
            ln = int(e[2]) if len(e) > 2 else 1
            if u > v:
                u, v = v, u
            norm.append((u, v, ln))
        return cls(n, tuple(norm))

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def adj(self) -> list:
        """adj[u] = list of (neighbor, length), sorted by neighbor id."""
        a = [[] for _ in range(self.n + 1)]
        for u, v, ln in self.edges:
            a[u].append((v, ln))
            a[v].append((u, ln))
        for lst in a:
            lst.sort()
        return a

    def degree(self, u: int) -> int:
        return len(self.adj[u])

    def neighbors(self, u: int) -> list:
        return [v for v, _ in self.adj[u]]

    def is_tree(self) -> bool:
        return self.m == self.n - 1

    def total_length(self) -> int:
        return sum(e[2] for e in self.edges)


def _validate(n, edges, lines=None):
    if n < 1:
        raise GraphError("graph needs at least one vertex")
    seen = set()
    total = 0
    for i, e in enumerate(edges):
        line = lines[i] if lines else None
        if len(e) != 3:
            raise GraphError(f"edge {e!r} is not (u, v, len)", line)
        u, v, ln = e
        if u == v:
            raise GraphError(f"self-loop at vertex {u}", line)
        if not (1 <= u <= n and 1 <= v <= n):
            raise GraphError(f"vertex id out of range 1..{n} in edge ({u}, {v})", line)
        if u > v:
            raise GraphError(f"edge ({u}, {v}) must be stored with u < v", line)
        if ln < 1:
            raise GraphError(f"non-positive length {ln} on edge ({u}, {v})", line)
        if (u, v) in seen:
            raise GraphError(f"duplicate edge ({u}, {v})", line)
        seen.add((u, v))
        total += ln
    if total >= LENGTH_LIMIT:
        raise LengthOverflowError(f"total edge length {total} exceeds 2^62")
    # connectivity
    adj = [[] for _ in range(n + 1)]
    for u, v, _ in edges:
        adj[u].append(v)
        adj[v].append(u)
    seen_v = [False] * (n + 1)
    seen_v[1] = True
    stack = [1]
    cnt = 1
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if not seen_v[y]:
                seen_v[y] = True
                cnt += 1
                stack.append(y)
    if cnt != n:
        raise GraphError(f"graph is disconnected ({cnt} of {n} vertices reachable from 1)")


def parse_graph(text) -> Graph:
    """Parse the line format: 'c ...' comments, 'p hl n m', then m lines 'a u v len'."""
    if isinstance(text, (bytes, bytearray)):
        text = text.decode("utf-8")
    n = m = None
    edges, lines = [], []
    header_line = None
    for lineno, raw in enumerate(io.StringIO(text), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        parts = line.split()
        if parts[0] == "p":
            if n is not None:
                raise GraphError("second header line", lineno)
            if len(parts) != 4 or parts[1] != "hl":
                raise GraphError(f"malformed header {line!r}", lineno)
            try:
                n, m = int(parts[2]), int(parts[3])
            except ValueError:
                raise GraphError(f"malformed header {line!r}", lineno) from None
            if n < 1 or m < 0:
                raise GraphError("header counts out of range", lineno)
            header_line = lineno
        elif parts[0] == "a":
            if n is None:
                raise GraphError("edge before header", lineno)
            if len(parts) != 4:
                raise GraphError(f"malformed edge line {line!r}", lineno)
            try:
                u, v, ln = (int(x) for x in parts[1:])
            except ValueError:
                raise GraphError(f"malformed edge line {line!r}", lineno) from None
            if u == v:
                raise GraphError(f"self-loop at vertex {u}", lineno)
            if ln <= 0:
                raise GraphError(f"zero or negative length {ln}", lineno)
            if u > v:
                u, v = v, u
            edges.append((u, v, ln))
            lines.append(lineno)
        else:
            raise GraphError(f"unknown line type {parts[0]!r}", lineno)
    if n is None:
        raise GraphError("missing 'p hl n m' header")
    if len(edges) != m:
        raise GraphError(f"header announces {m} edges, found {len(edges)}", header_line)
    _validate(n, edges, lines)
    return Graph(n, tuple(edges))


def serialize_graph(g: Graph, comments: Iterable[str] = ()) -> str:
    out = [f"c {c}" for c in comments]
    out.append(f"p hl {g.n} {g.m}")
    out.extend(f"a {u} {v} {ln}" for u, v, ln in g.edges)
    return "\n".join(out) + "\n"


@dataclass(frozen=True, eq=False)
class ShortestPathData:
    n: int
    dist: np.ndarray  # (n+1, n+1) int64
    parent: np.ndarray  # (n+1, n+1) int32, parent[u, v] = predecessor of v on P_uv; 0 for v == u
    D: int
    rho: Fraction
    unique: bool
    witness: Optional[tuple] = None
    min_length: int = 1

    def on_path(self, u: int, v: int, w: int) -> bool:
        d = self.dist
        return int(d[u, w]) + int(d[w, v]) == int(d[u, v])

    def path(self, u: int, v: int) -> list:
        return path_between(self, u, v)

    @cached_property
    def _path_cache(self):
        return {}

    def path_set(self, u: int, v: int) -> frozenset:
        key = (u, v) if u <= v else (v, u)
        c = self._path_cache
        s = c.get(key)
        if s is None:
            s = frozenset(path_between(self, *key))
            c[key] = s
        return s


def _dijkstra(g: Graph, s: int):
    n = g.n
    INF = None
    dist = [INF] * (n + 1)
    par = [0] * (n + 1)
    tie = [False] * (n + 1)
    maxhop = [0] * (n + 1)
    done = [False] * (n + 1)
    dist[s] = 0
    pq = [(0, s)]
    adj = g.adj
    while pq:
        d, x = heapq.heappop(pq)
        if done[x]:
            continue
        done[x] = True
        for y, ln in adj[x]:
            nd = d + ln
            dy = dist[y]
            if dy is None or nd < dy:
                dist[y] = nd
                par[y] = x
                tie[y] = tie[x]
                maxhop[y] = maxhop[x] + 1
                heapq.heappush(pq, (nd, y))
            elif nd == dy and not done[y] and par[y] != x:
                tie[y] = True
                maxhop[y] = max(maxhop[y], maxhop[x] + 1)
    return dist, par, tie, maxhop


def compute_shortest_paths(g: Graph) -> ShortestPathData:
    """All-pairs distances by n Dijkstra runs on exact integer keys.

    Ties are detected during relaxation: if two different predecessors give
    the same final distance to some v, the pair (root, v) has two shortest
    paths and the uniqueness flag is cleared. Tie flags are inherited down
    the tree, since both paths extend to every descendant.
    """
    n = g.n
    dist = np.zeros((n + 1, n + 1), dtype=np.int64)
    parent = np.zeros((n + 1, n + 1), dtype=np.int32)
    unique = True
    witness = None
    D = 0
    for s in range(1, n + 1):
        ds, ps, tie, hops = _dijkstra(g, s)
        ds[0] = 0
        dist[s] = ds
        parent[s] = ps
        D = max(D, max(hops))
        if unique:
            # a tie at v (own or inherited from a tree ancestor) means two
            # distinct shortest s-v paths
            for v in range(1, n + 1):
                if tie[v]:
                    unique = False
                    witness = (s, v)
                    break
    minlen = min((e[2] for e in g.edges), default=1)
    maxd = int(dist[1:, 1:].max()) if n > 1 else 0
    rho = Fraction(maxd, minlen) if g.m else Fraction(0)
    return ShortestPathData(n, dist, parent, D, rho, unique, witness, minlen)


def verify_unique_shortest_paths(g: Graph):
    """Return (True, None) or (False, (u, v)) for a pair with two shortest paths."""
    spd = compute_shortest_paths(g)
    return spd.unique, spd.witness


def path_between(spd: ShortestPathData, u: int, v: int) -> list:
    """P_uv from u to v, read off the parent pointers of u's tree."""
    out = [v]
    par = spd.parent[u]
    x = v
    while x != u:
        x = int(par[x])
        if x == 0:
            raise NonUniquePathsError(f"no parent chain from {v} back to {u}")
        out.append(x)
    out.reverse()
    return out


def require_unique(spd: ShortestPathData):
    if not spd.unique:
        raise NonUniquePathsError(
            f"shortest paths are not unique (e.g. pair {spd.witness}); run perturb_lengths first")


def _noise_bits(n: int) -> int:
    # ceil(3 log2 n) computed exactly: smallest c with 2**c >= n**3
    c = (n ** 3 - 1).bit_length() if n > 1 else 0
    return c + 1 + NOISE_EXTRA_BITS


def perturb_lengths(g: Graph, seed: int) -> Graph:
    """Scale every length by 2**b and add seeded noise in [0, 2**b // n**3).

    Total noise along any simple path is below 2**b, so a path that was
    strictly longer before stays strictly longer; only ties get broken.
    Retries with seed+1, ... if the result still has a tie.
    """
    n = g.n
    b = _noise_bits(n)
    hi = (1 << b) // (n ** 3)
    for attempt in range(PERTURB_RETRIES):
        rng = SplitMix64(seed + attempt)
        edges = [(u, v, (ln << b) + rng.randbelow(hi)) for u, v, ln in g.edges]
        h = Graph(n, tuple(edges))
        ok, _ = verify_unique_shortest_paths(h)
        if ok:
            return h
    raise PerturbationError(
        f"could not break all shortest-path ties with seeds {seed}..{seed + PERTURB_RETRIES - 1}")
