"""Pre-hubs from a fractional solution and the permutation rounding built on them.

Segments. For a vertex u and a pre-hub u' of u, walk from u' toward u and
stop just before the next pre-hub u''. The vertices seen (u' first) form the
segment of (u, u'); a vertex at position k on it is k hops from u'. During
rounding a vertex z becomes a hub of u when, for some segment containing z,
no current hub of u sits strictly closer to u' on that segment.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import LabelingError
from .graph import ShortestPathData, require_unique
from .labeling import HubLabeling, normalize_p
from .lp import FractionalSolution, require_feasible
from .rng import SplitMix64

ZERO_EPS = 1e-12
HALF = 0.5 - 1e-9


@dataclass
class PreHubLabeling:
    n: int
    prehubs: dict  # u -> tuple of vertex ids, sorted
    source_lp_cost: Optional[dict] = None  # u -> sum_v x_uv

    def sizes(self):
        return [len(self.prehubs[u]) for u in range(1, self.n + 1)]

    @classmethod
    def from_labeling(cls, h: HubLabeling) -> "PreHubLabeling":
        return cls(h.n, {u: tuple(w for w, _ in h.hubs[u]) for u in range(1, h.n + 1)})


def harmonic(k: int) -> float:
    return math.fsum(1.0 / i for i in range(1, k + 1))


def extract_prehubs(x, spd: ShortestPathData, check: bool = True) -> PreHubLabeling:
    """Bottom-up sweep over each shortest-path tree T_u.

    Residual weight of a subtree is the sum of its x_uv; whenever it reaches
    1/2 the subtree root becomes a pre-hub and the residual is reset to 0.
    """
    require_unique(spd)
    X = x.x if isinstance(x, FractionalSolution) else np.asarray(x, dtype=float)
    if check:
        require_feasible(X, spd)
    n = spd.n
    X = np.where(X < ZERO_EPS, 0.0, X)
    pre, src = {}, {}
    for u in range(1, n + 1):
        du = spd.dist[u]
        par = spd.parent[u]
        order = sorted(range(1, n + 1), key=lambda v: (-int(du[v]), v))
        W = X[u].copy()
        H = []
        for v in order:
            if W[v] >= HALF:
                H.append(v)
                W[v] = 0.0
            if v != u:
                W[int(par[v])] += W[v]
        pre[u] = tuple(sorted(H))
        src[u] = float(X[u, 1:].sum())
    return PreHubLabeling(n, pre, src)


@dataclass
class PrehubReport:
    ok: bool
    violations: list = field(default_factory=list)  # (u, v) pairs
    witnesses: dict = field(default_factory=dict)  # (u, v) -> (u', v') closest pair

    def __bool__(self):
        return self.ok


def verify_prehub_property(ph: PreHubLabeling, spd: ShortestPathData) -> PrehubReport:
    """Check that every pair u, v has pre-hubs ordered u, v', u', v along P_uv.

    It suffices to take u' the pre-hub of u on P_uv closest to v and v' the
    pre-hub of v on P_uv closest to u and compare their offsets from u.
    """
    n = spd.n
    dist = spd.dist
    viol, wit = [], {}
    for u in range(1, n + 1):
        if u not in ph.prehubs[u]:
            viol.append((u, u))
        Hu = np.array(ph.prehubs[u], dtype=np.int64)
        du = dist[u]
        for v in range(u + 1, n + 1):
            duv = du[v]
            Hv = np.array(ph.prehubs[v], dtype=np.int64)
            on_u = Hu[du[Hu] + dist[v, Hu] == duv]
            on_v = Hv[du[Hv] + dist[v, Hv] == duv]
            if len(on_u) == 0 or len(on_v) == 0:
                viol.append((u, v))
                continue
            up = int(on_u[np.argmax(du[on_u])])
            vp = int(on_v[np.argmin(du[on_v])])
            wit[(u, v)] = (up, vp)
            if du[vp] > du[up]:
                viol.append((u, v))
    return PrehubReport(not viol, viol, wit)


def _tree_edges(spd, u, hubs):
    """Vertex set of the union of P_{u u'} over u' in hubs, with degrees."""
    par = spd.parent[u]
    inT = set()
    for h in hubs:
        z = h
        while z and z not in inT:
            inT.add(z)
            z = int(par[z]) if z != u else 0
    deg = {z: 0 for z in inT}
    for z in inT:
        if z != u:
            deg[z] += 1
            deg[int(par[z])] += 1
    return deg


def augment_prehubs_branching(ph: PreHubLabeling, spd: ShortestPathData) -> PreHubLabeling:
    """Add every vertex of degree >= 3 in T_u = union of P_{uu'} to the pre-hubs of u."""
    new = {}
    for u in range(1, ph.n + 1):
        H = set(ph.prehubs[u])
        deg = _tree_edges(spd, u, H)
        F = {z for z, d in deg.items() if d >= 3}
        assert len(F) <= len(H), "branching vertices outnumber pre-hubs"
        new[u] = tuple(sorted(H | F))
    out = PreHubLabeling(ph.n, new, ph.source_lp_cost)
    segs = _Segments(out, spd)
    for u in range(1, ph.n + 1):
        seen = set()
        for _, seg in segs.segs[u]:
            for z in seg:
                assert z not in seen, f"segments of {u} overlap at {z} after augmentation"
                seen.add(z)
    return out


class _Segments:
    def __init__(self, ph: PreHubLabeling, spd: ShortestPathData):
        self.n = ph.n
        self.spd = spd
        self.segs = {}  # u -> list of (u', [u', ..., toward u])
        self.index = [dict() for _ in range(ph.n + 1)]  # z -> {u: [(sidx, pos)]}
        for u in range(1, ph.n + 1):
            H = set(ph.prehubs[u])
            if u not in H:
                raise LabelingError(f"pre-hubs of {u} do not contain {u}")
            par = spd.parent[u]
            lst = []
            for up in sorted(H):
                seg = [up]
                z = up
                while z != u:
                    z = int(par[z])
                    if z in H:
                        break
                    seg.append(z)
                lst.append((up, seg))
            self.segs[u] = lst
            for sidx, (_, seg) in enumerate(lst):
                for pos, z in enumerate(seg):
                    self.index[z].setdefault(u, []).append((sidx, pos))

    def initial_closest(self):
        return {u: [len(seg) for _, seg in lst] for u, lst in self.segs.items()}


def _finish(n, spd, H, order=None):
    hubs = {u: [(w, int(spd.dist[u, w])) for w in H[u]] for u in range(1, n + 1)}
    return HubLabeling(n, hubs)


def _round_with_order(S: _Segments, perm, trace):
    n, spd = S.n, S.spd
    dist = spd.dist
    closest = S.initial_closest()
    last_charge = {}
    H = {u: [] for u in range(1, n + 1)}
    for i, z in enumerate(perm, 1):
        for u, group in S.index[z].items():
            cl = closest[u]
            qual = [(sidx, pos) for sidx, pos in group if pos < cl[sidx]]
            if not qual:
                continue
            H[u].append(z)
            segs = S.segs[u]
            sidx, pos = min(qual, key=lambda t: (int(dist[z, segs[t[0]][0]]), segs[t[0]][0]))
            up = segs[sidx][0]
            prev = last_charge.get((u, sidx))
            assert prev is None or pos < prev, "charging is not monotone"
            last_charge[(u, sidx)] = pos
            if trace is not None:
                trace.append((u, up, z, i))
            for s2, p2 in group:
                if p2 < cl[s2]:
                    cl[s2] = p2
    return H


def round_random(ph: PreHubLabeling, spd: ShortestPathData, seed: int,
                 trace: Optional[list] = None) -> HubLabeling:
    """Rounding along a seeded uniform permutation (Fisher-Yates on SplitMix64).

    ``trace`` (a list) receives (u, u', hub, i) for each hub, charged to the
    qualifying pre-hub u' closest to the hub.
    """
    require_unique(spd)
    S = _Segments(ph, spd)
    perm = SplitMix64(seed).permutation(range(1, ph.n + 1))
    H = _round_with_order(S, perm, trace)
    return _finish(ph.n, spd, H)


class _Greedy:
    """Shared state for the conditional-expectation greedy."""

    def __init__(self, S: _Segments):
        self.S = S
        n = S.n
        self.done = [False] * (n + 1)
        self.closest = S.initial_closest()
        self.r = {u: [len(seg) for _, seg in lst] for u, lst in S.segs.items()}
        self.placed = {u: 0 for u in S.segs}
        self.Hm = [0.0]
        for i in range(1, n + 2):
            self.Hm.append(self.Hm[-1] + 1.0 / i)

    def _count_open(self, u, sidx, below):
        seg = self.S.segs[u][sidx][1]
        done = self.done
        return sum(1 for q in seg[:below] if not done[q])

    def effect(self, z):
        """Per-vertex change of (placed_u, sum of Harm over u's segments) if z comes next."""
        out = {}
        Hm = self.Hm
        for u, group in self.S.index[z].items():
            cl = self.closest[u]
            qual = [(s, pos) for s, pos in group if pos < cl[s]]
            if not qual:
                continue
            d = 1.0
            newr = []
            for s, pos in qual:
                # z itself sits at pos, so only positions < pos stay open
                rn = self._count_open(u, s, pos)
                d += Hm[rn] - Hm[self.r[u][s]]
                newr.append((s, pos, rn))
            out[u] = (d, newr)
        return out

    def apply(self, z, eff, H):
        self.done[z] = True
        # segments where z was not open never counted it, so only eff changes
        for u, (d, newr) in eff.items():
            H[u].append(z)
            self.placed[u] += 1
            for s, pos, rn in newr:
                self.closest[u][s] = pos
                self.r[u][s] = rn

    def vertex_value(self, u):
        return self.placed[u] + sum(self.Hm[r] for r in self.r[u])


def round_derandomized(ph: PreHubLabeling, spd: ShortestPathData,
                       trace: Optional[list] = None, _p=1) -> HubLabeling:
    """Pick the next vertex by minimizing the conditional expectation.

    E = hubs placed + sum over segments of Harm(r), r = number of unprocessed
    segment vertices strictly closer to u' than the segment's current best.
    The greedy invariant (E never increases) is asserted for p = 1.
    """
    require_unique(spd)
    S = _Segments(ph, spd)
    n = ph.n
    G = _Greedy(S)
    H = {u: [] for u in range(1, n + 1)}
    p = _p
    vals = {u: G.vertex_value(u) for u in S.segs}

    def total(vs):
        if p == 1:
            return math.fsum(vs.values())
        return math.fsum(v ** p for v in vs.values())

    E = total(vals)
    perm = []
    for i in range(1, n + 1):
        best = None
        for z in range(1, n + 1):
            if G.done[z]:
                continue
            eff = G.effect(z)
            if p == 1:
                delta = math.fsum(d for d, _ in eff.values())
            else:
                delta = math.fsum((vals[u] + d) ** p - vals[u] ** p for u, (d, _) in eff.items())
            if best is None or delta < best[0] - 1e-12:
                best = (delta, z, eff)
        delta, z, eff = best
        if p == 1:
            assert delta <= 1e-9, f"conditional expectation increased by {delta}"
        G.apply(z, eff, H)
        for u, (d, _) in eff.items():
            vals[u] += d
        E += delta
        perm.append(z)
    if trace is not None:
        # replay for the audit trace; the replay reproduces the same hubs
        H2 = _round_with_order(S, perm, trace)
        assert all(sorted(H2[u]) == sorted(H[u]) for u in H)
    return _finish(n, spd, H)


def round_lp(ph: PreHubLabeling, spd: ShortestPathData, p=1, seed: Optional[int] = None,
             derandomize: bool = False, trace: Optional[list] = None) -> HubLabeling:
    """Branching augmentation followed by the permutation rounding.

    For p > 1 the derandomized variant greedily minimizes
    sum_u (placed_u + sum of Harm over u's segments)^p, a first-moment
    surrogate; the randomized variant is the one with a proven bound.
    """
    p = normalize_p(p)
    if p == math.inf:
        raise ValueError("round_lp needs a finite p")
    aug = augment_prehubs_branching(ph, spd)
    if derandomize:
        return round_derandomized(aug, spd, trace, _p=p)
    if seed is None:
        raise ValueError("round_lp needs a seed unless derandomize=True")
    return round_random(aug, spd, seed, trace)


def expected_cost_bound(ph: PreHubLabeling, spd: ShortestPathData) -> float:
    """Initial expectation: sum over segments of Harm(segment length)."""
    S = _Segments(ph, spd)
    return math.fsum(harmonic(len(seg)) for lst in S.segs.values() for _, seg in lst)


# ---- dumps ---------------------------------------------------------------

def serialize_prehubs(ph: PreHubLabeling) -> str:
    obj = {"version": 1, "n": ph.n,
           "prehubs": {str(u): list(ph.prehubs[u]) for u in range(1, ph.n + 1)}}
    if ph.source_lp_cost is not None:
        obj["source_lp_cost"] = {str(u): ph.source_lp_cost[u] for u in range(1, ph.n + 1)}
    return json.dumps(obj) + "\n"


def deserialize_prehubs(data) -> PreHubLabeling:
    obj = json.loads(data)
    if obj.get("version") != 1:
        raise LabelingError("unsupported pre-hub file version")
    n = int(obj["n"])
    pre = {int(k): tuple(sorted(int(w) for w in v)) for k, v in obj["prehubs"].items()}
    src = obj.get("source_lp_cost")
    if src is not None:
        src = {int(k): float(v) for k, v in src.items()}
    return PreHubLabeling(n, pre, src)


def trace_csv(trace) -> str:
    lines = ["u,u_prime,hub,i"]
    lines += [f"{u},{up},{z},{i}" for u, up, z, i in trace]
    return "\n".join(lines) + "\n"
