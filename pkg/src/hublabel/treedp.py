"""Dynamic programs over connected subtrees for optimal / near-optimal
hierarchical labelings of trees (l1, lp and l-inf).

A state is a connected vertex set T' (a bitmask; bit v is vertex v), plus a
depth shift t for finite p > 1. Its boundary is the set of outside vertices
adjacent to T'. For each state the program picks the top vertex r of T' and
recurses on the components of T' - r:

    l1     B[T']    = |T'| + min_r sum B[T'']
    lp     B[T', t] = (1+t)^p + min_r sum B[T'', t+1]
    l-inf  B[T']    = 1 + min_r max B[T'']

The approximation mode caps the boundary at k = 4 * ceil(1/eps). A state
whose boundary has exactly k vertices does not minimize; it splits at a
weighted balanced separator r0 (weight = number of boundary neighbours) and
does not charge for that step (l1, l-inf) or does not shift t (lp). In that
mode the l1 / l-inf step costs are (1 + 4/k)|T'| and (1 + 4/k); values are
stored multiplied by q = k/4 so they stay integral.

Exact mode may cap the boundary too (states beyond k are infinite).

Search. Values are computed top-down with memoization. Candidate roots are
tried in order of a lower bound on their total and skipped once the bound
cannot beat (or tie with a smaller id) the best so far. The bound for a
child T'' uses only its degree sequence: the vertices at depth j are the
roots of the components left after deleting the shallower ones, which caps
how many fit at each depth, so filling depths greedily gives a minimum for
sum f(depth) with f nondecreasing. In the approximation mode f counts only
the levels that can not be separator steps, and for l1 with k >= 8 the exact
optimum of T'' tightens it further. Pruning never changes the memoized values or
the chosen roots, which are the exact recurrence values with ties broken
toward the smallest vertex id.
"""
from __future__ import annotations

import csv
import io
import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .errors import KExhaustedError
from .labeling import HubLabeling, normalize_p, power_cost
from .trees import Tree, as_tree, labeling_from_steps

INF = math.inf


def _bits(m):
    while m:
        low = m & -m
        yield low.bit_length() - 1
        m ^= low


def ptas_k(eps) -> int:
    eps = Fraction(eps).limit_denominator(10 ** 9) if not isinstance(eps, Fraction) else eps
    if not (0 < eps <= 1):
        raise ValueError("eps must lie in (0, 1]")
    return 4 * math.ceil(1 / eps)


def quasi_poly_k(n: int, p=1, c: int = 6) -> int:
    """ceil(c log2 n) for p in {1, inf}; ceil(c log2^2 n) for finite p > 1."""
    p = normalize_p(p)
    lg = math.log2(max(n, 2))
    if p == 1 or p == math.inf:
        return max(1, math.ceil(c * lg))
    return max(1, math.ceil(c * lg * lg))


class TreeDP:
    def __init__(self, tree, p=1, mode: str = "exact", k: Optional[int] = None, eps=None,
                 prune: bool = True):
        self.tree = tree = as_tree(tree)
        n = self.n = tree.n
        p = self.p = normalize_p(p)
        self.kind = "l1" if p == 1 else ("linf" if p == math.inf else "lp")
        self.exact_p = self.kind != "lp" or isinstance(p, int)
        if mode == "ptas":
            if eps is None:
                raise ValueError("ptas mode needs eps")
            self.k = ptas_k(eps)
            self.q = self.k // 4
        elif mode == "exact":
            self.k = n if k is None else int(k)
            if self.k < 1:
                raise ValueError("k must be >= 1")
            self.q = 1
        else:
            raise ValueError(f"unknown mode {mode!r}")
        self.mode = mode
        self.eps = eps
        self.prune = prune
        self.need_bnd = mode == "ptas" or self.k < n - 1
        self.nbr = [0] * (n + 1)
        for u, v, _ in tree.edges:
            self.nbr[u] |= 1 << v
            self.nbr[v] |= 1 << u
        self.full = sum(1 << v for v in range(1, n + 1))
        # side[r][c]: mask of the part of the tree on c's side of edge (r, c)
        parent = [0] * (n + 1)
        order = [1]
        seen = {1}
        for x in order:
            for y, _ in tree.adj[x]:
                if y not in seen:
                    seen.add(y)
                    parent[y] = x
                    order.append(y)
        sub = [0] * (n + 1)
        for x in reversed(order):
            sub[x] |= 1 << x
            if parent[x]:
                sub[parent[x]] |= sub[x]
        self.side = [dict() for _ in range(n + 1)]
        for x in range(2, n + 1):
            px = parent[x]
            self.side[px][x] = sub[x]
            self.side[x][px] = self.full ^ sub[x]
        self.nl = [[(1 << c, self.side[r][c]) for c in sorted(tree.neighbors(r))] if r else []
                   for r in range(n + 1)]
        self.memo = {}
        self.info = {}
        self.fits = {}
        self.lbc = {}
        self.levc = {}
        self.seps = {}
        self.sep_children_max = 0
        self.states = 0
        if self.kind == "lp" and self.exact_p:
            self._pw = lambda x: x ** p
        else:
            self._pw = lambda x: float(x) ** p
        self.slack = 0 if self.exact_p else 1e-9
        sys.setrecursionlimit(max(sys.getrecursionlimit(), 20 * n + 1000))
        self._exact = None
        if mode == "ptas" and self.kind == "l1" and self.k >= 8 and prune:
            self._exact = TreeDP(tree, p, "exact")
            self._exact.info = self.info

    # ---- helpers ---------------------------------------------------------
    def _info(self, m):
        """(size, max degree inside, boundary mask)"""
        r = self.info.get(m)
        if r is None:
            nbr = self.nbr
            bnd = 0
            dmax = 0
            x = m
            while x:
                low = x & -x
                x ^= low
                nb = nbr[low.bit_length() - 1]
                bnd |= nb
                d = (nb & m).bit_count()
                if d > dmax:
                    dmax = d
            r = (m.bit_count(), dmax, bnd & ~m)
            self.info[m] = r
        return r

    def boundary(self, m) -> list:
        return list(_bits(self._info(m)[2]))

    def comps(self, m, r):
        return [sd & m for bit, sd in self.nl[r] if m & bit]

    def _levels(self, m):
        """Counts per depth of the greedy fill: [(depth, count), ...].

        Removing a vertex set A from a tree leaves at most 1 + sum_A (deg - 1)
        components, one per vertex at the next depth. Filling depths in order
        of decreasing degree maximizes every prefix count."""
        out = self.levc.get(m)
        if out is not None:
            return out
        nbr = self.nbr
        degs = sorted(((nbr[v] & m).bit_count() for v in _bits(m)), reverse=True)
        out = []
        depth, cap, i, s = 1, 1, 0, len(degs)
        while i < s:
            take = min(s - i, cap)
            out.append((depth, take))
            i += take
            depth += 1
            cap = 1 + sum(degs[:i]) - i
        self.levc[m] = out
        return out

    def _charged(self, d, L):
        """Levels among the first d that are not separator steps (a lower bound)."""
        if d <= L:
            return d
        return d - -(-(d - L) // (self.k // 2))

    def lower_bound(self, m, t=0):
        key = (m, t)
        lb = self.lbc.get(key)
        if lb is None:
            lb = self._lower_bound(m, t)
            if self._exact is not None:
                lb = max(lb, self.fine_bound(m))
            self.lbc[key] = lb
        return lb

    def _lower_bound(self, m, t):
        s, D, bnd = self._info(m)
        if s == 0:
            return 0
        lev = self._levels(m)
        if self.mode != "ptas":
            if self.kind == "l1":
                return sum(c * d for d, c in lev)
            if self.kind == "linf":
                return lev[-1][0]
            pw = self._pw
            return sum(c * pw(d + t) for d, c in lev)
        # Separator steps need |boundary| = k. The boundary grows by at most
        # one per level and drops to k/2 + 1 after a separator step, so they
        # sit at levels > L and at least k/2 apart. Non-separator levels cost
        # q + 1 per vertex, except the (at most two) base levels, which cost q.
        b = bnd.bit_count()
        L = self.k - b
        q1 = self.q + 1
        ch = self._charged
        if self.kind == "l1":
            return sum(c * (q1 * ch(d, L) - min(ch(d, L), 2)) for d, c in lev)
        if self.kind == "linf":
            x = ch(lev[-1][0], L)
            return q1 * x - min(x, 2)
        pw = self._pw
        return sum(c * pw(1 + t + ch(d - 1, L)) for d, c in lev)

    def fine_bound(self, m):
        """q (OPT[T'] - C[T']) with OPT the exact value and C the boundary
        excess term; B[T'] is never below it (induction over the recurrence).
        Costs an exact solve per mask, which pays off for l1 with k >= 8."""
        if self._exact is None:
            return 0
        s, _, bnd = self._info(m)
        excess = max(0, bnd.bit_count() - 3 * self.q)
        if self.kind == "l1":
            extra = max(-excess * s, self._level_surplus(m, bnd.bit_count()))
            return self.q * self._exact.value(m) + extra
        return self.q * self._exact.value(m) - excess

    def _level_surplus(self, m, b):
        """Lower bound on B[T'] - q OPT[T'] for l1.

        Compared with the exact cost of the same elimination tree, a vertex
        gains 1 on each non-separator, non-base level and loses q on each
        separator level. With N >= depth - 2 such levels, at most
        ceil((N - L) / (k/2)) are separators (L = k - |boundary|), so it gains
        at least phi(N) = N - (q+1) ceil((N - L)^+ / (k/2)). Taking the running
        minimum over N >= depth - 2 makes that nondecreasing in depth, so the
        greedy depth fill bounds the sum."""
        L = self.k - b
        h = self.k // 2
        q1 = self.q + 1

        def phi(N):
            return N - q1 * (-(-max(0, N - L) // h))

        def psi(x):
            # phi(N + h) >= phi(N) since q + 1 <= k/2, so one period suffices
            return min(phi(N) for N in range(x, x + h + 1))

        return sum(c * psi(max(0, d - 2)) for d, c in self._levels(m))

    def _base(self, s, t):
        q = self.q
        if self.kind == "l1":
            return q if s == 1 else 3 * q
        if self.kind == "linf":
            return q if s == 1 else 2 * q
        pw = self._pw
        return pw(1 + t) if s == 1 else pw(1 + t) + pw(2 + t)

    def _step(self, s, t):
        if self.kind == "l1":
            return (self.q + 1) * s if self.mode == "ptas" else s
        if self.kind == "linf":
            return self.q + 1 if self.mode == "ptas" else 1
        return self._pw(1 + t)

    # ---- the recurrence --------------------------------------------------
    def value(self, m, t=0):
        key = (m, t)
        e = self.memo.get(key)
        if e is not None:
            return e[0]
        self.states += 1
        s, D, bnd = self._info(m)
        nb = bnd.bit_count() if self.need_bnd else 0
        if self.mode == "exact" and nb > self.k:
            e = (INF, None, False)
        elif s <= 2:
            e = (self._base(s, t), min(_bits(m)), False)
        elif self.mode == "ptas" and nb == self.k:
            e = self._separator_state(m, t, bnd)
        elif self.kind == "linf":
            e = self._minimize_linf(m, s)
        else:
            e = self._minimize(m, t, s)
        self.memo[key] = e
        return e[0]

    def _sep_root(self, m, bnd):
        r0 = self.seps.get(m)
        if r0 is not None:
            return r0
        # w(u) counts boundary vertices next to u; in a tree each boundary
        # vertex has exactly one neighbour (its anchor) inside T'
        anchors = [self.nbr[x] & m for x in _bits(bnd)]
        total = len(anchors)
        for u in _bits(m):  # increasing id
            if all(2 * sum(1 for a in anchors if a & c) <= total for c in self.comps(m, u)):
                r0 = u
                break
        assert r0 is not None, "no weighted separator"
        half = self.k // 2 + 1
        for c in self.comps(m, r0):
            cb = self._info(c)[2].bit_count()
            self.sep_children_max = max(self.sep_children_max, cb)
            assert cb <= half, f"separator child has boundary {cb} > k/2 + 1"
        self.seps[m] = r0
        return r0

    def _separator_state(self, m, t, bnd):
        r0 = self._sep_root(m, bnd)
        vals = [self.value(c, t) for c in self.comps(m, r0)]
        if self.kind == "linf":
            v = max(vals, default=0)
        elif self.kind == "l1":
            v = sum(vals)
        else:
            v = self._pw(1 + t) + sum(vals)
        return (v, r0, True)

    # l-inf: B[T'] is found by asking "B[T'] <= H ?" for increasing H. The
    # question is answered recursively with its own memo and stops at the first
    # root that works (or the first child that fails), so the many ties of
    # the max recurrence cost nothing.
    def _fits(self, m, H):
        e = self.memo.get((m, 0))
        if e is not None:
            return e[0] <= H
        key = (m, H)
        f = self.fits.get(key)
        if f is not None:
            return f
        s, D, bnd = self._info(m)
        nb = bnd.bit_count() if self.need_bnd else 0
        if self.mode == "exact" and nb > self.k:
            f = False
        elif s <= 2:
            f = self._base(s, 0) <= H
        elif self.prune and self.lower_bound(m) > H:
            f = False
        elif self.mode == "exact" and not self.need_bnd and H >= s.bit_length():
            f = True  # centroid decomposition has height floor(log2 s) + 1
        elif self.mode == "ptas" and nb == self.k:
            f = all(self._fits(c, H) for c in self.comps(m, self._sep_root(m, bnd)))
        else:
            f = self._root_fitting(m, H - self._step(s, 0)) is not None
        self.fits[key] = f
        return f

    def _root_fitting(self, m, h):
        """Smallest-id r whose components all have B <= h."""
        if h < 0:
            return None
        for r in _bits(m):
            if all(self._fits(c, h) for c in self.comps(m, r)):
                return r
        return None

    def _minimize_linf(self, m, s):
        step = self._step(s, 0)
        H = self.lower_bound(m) if self.prune else step
        top = (self.q + 1) * s
        while H <= top:
            r = self._root_fitting(m, H - step)
            if r is not None:
                return (H, r, False)
            H += 1
        return (INF, None, False)

    def _minimize(self, m, t, s):
        kind = self.kind
        step = self._step(s, t)
        tc = t + 1 if kind == "lp" else 0
        slack = self.slack
        cands = []
        for r in _bits(m):
            cs = self.comps(m, r)
            lbs = []
            for c in cs:
                e = self.memo.get((c, tc))
                lbs.append(e[0] if e is not None else (self.lower_bound(c, tc) if self.prune else 0))
            if kind == "linf":
                lb = step + max(lbs, default=0)
            else:
                lb = step + sum(lbs)
            cands.append((lb, r, cs, lbs))
        cands.sort(key=lambda x: (x[0], x[1]))
        best, best_r = INF, None
        for lb, r, cs, lbs in cands:
            if best_r is not None:
                if lb > best + slack * max(1.0, abs(best)):
                    break
                if lb >= best - slack * max(1.0, abs(best)) and r > best_r:
                    continue
            # evaluate children, biggest bound first, keeping a running bound
            idx = sorted(range(len(cs)), key=lambda i: -lbs[i])
            cur = list(lbs)
            ok = True
            for i in idx:
                cur[i] = self.value(cs[i], tc)
                est = step + (max(cur, default=0) if kind == "linf" else sum(cur))
                if best_r is not None:
                    tol = slack * max(1.0, abs(best)) if best != INF else 0
                    if est > best + tol or (est >= best - tol and r > best_r):
                        ok = False
                        break
                if est == INF:
                    ok = False
                    break
            if not ok:
                continue
            val = step + (max(cur, default=0) if kind == "linf" else sum(cur))
            if best_r is None or val < best - slack * max(1.0, abs(best)) or r < best_r:
                best, best_r = val, r
        return (best, best_r, False)

    # ---- results ---------------------------------------------------------
    def solve(self):
        v = self.value(self.full, 0)
        if v == INF:
            raise KExhaustedError(self.k)
        return v

    def steps(self):
        out = []
        stack = [(self.full, 0)]
        while stack:
            m, t = stack.pop()
            s = m.bit_count()
            verts = sorted(_bits(m))
            if s <= 2:
                r = verts[0]
                out.append((r, verts))
                if s == 2:
                    out.append((verts[1], [verts[1]]))
                continue
            self.value(m, t)
            val, r, sep = self.memo[(m, t)]
            out.append((r, verts))
            tc = t if (sep or self.kind != "lp") else t + 1
            for c in reversed(self.comps(m, r)):
                stack.append((c, tc))
        return out

    def labeling(self) -> HubLabeling:
        return labeling_from_steps(self.tree, self.steps())

    def recheck(self, m, t=0):
        """Recompute one memo entry straight from the recurrence (no pruning)."""
        val, r, sep = self.memo[(m, t)]
        s, _, bnd = self._info(m)
        if sep or s <= 2 or val == INF:
            return True
        step = self._step(s, t)
        tc = t + 1 if self.kind == "lp" else 0
        best, best_r = None, None
        for x in sorted(_bits(m)):
            vals = [self.value(c, tc) for c in self.comps(m, x)]
            v = step + (max(vals, default=0) if self.kind == "linf" else sum(vals))
            if best is None or v < best - self.slack * max(1.0, abs(best)):
                best, best_r = v, x
        close = (best == val) if self.exact_p else abs(best - val) <= 1e-9 * max(1.0, abs(val))
        return close and best_r == r

    def scaled(self, v):
        """Undo the q scaling of the l1 / l-inf approximation values."""
        if self.kind == "lp" or self.q == 1 or v == INF:
            return v
        return Fraction(v, self.q)

    def c_value(self, m):
        s, _, bnd = self._info(m)
        b = bnd.bit_count()
        k = self.k
        if self.kind == "l1":
            return max(Fraction(0), (b - Fraction(3 * k, 4)) * Fraction(4 * s, k))
        if self.kind == "linf":
            return max(Fraction(0), (b - Fraction(3 * k, 4)) * Fraction(4, k))
        return None


@dataclass(frozen=True)
class SubtreeKey:
    boundary: tuple
    anchor: Optional[int]


class DpTable:
    """Read-only view of the memo keyed by SubtreeKey (plus t for finite p > 1)."""

    def __init__(self, dp: TreeDP):
        self.dp = dp

    @property
    def root_value(self):
        return self.dp.scaled(self.dp.memo[(self.dp.full, 0)][0])

    def key(self, m) -> SubtreeKey:
        dp = self.dp
        bnd = sorted(dp.boundary(m))
        anchor = None
        if len(bnd) == 1:
            anchor = next(_bits(dp.nbr[bnd[0]] & m))
        return SubtreeKey(tuple(bnd), anchor)

    def mask_of(self, key: SubtreeKey) -> int:
        """Inverse of key(): the component of T - boundary next to all of it."""
        dp = self.dp
        if not key.boundary:
            return dp.full
        b = key.boundary[0]
        start = key.anchor if key.anchor is not None else None
        if start is None:
            # any neighbour of b whose side contains the other boundary vertices
            others = 0
            for x in key.boundary[1:]:
                others |= 1 << x
            for c in _bits(dp.nbr[b]):
                if dp.side[b][c] & others == others:
                    start = c
                    break
        m = dp.side[b][start]
        for x in key.boundary[1:]:
            # cut away the far side of every other boundary vertex
            for c in _bits(dp.nbr[x]):
                if not (dp.side[x][c] >> start) & 1:
                    m &= ~dp.side[x][c]
            m &= ~(1 << x)
        return m

    def __len__(self):
        return len(self.dp.memo)

    def entries(self):
        dp = self.dp
        for (m, t), (val, r, sep) in dp.memo.items():
            yield self.key(m), t, m.bit_count(), dp.scaled(val), r, sep

    def get(self, key: SubtreeKey, t: int = 0):
        e = self.dp.memo.get((self.mask_of(key), t))
        return None if e is None else (self.dp.scaled(e[0]), e[1], e[2])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["boundary", "anchor", "size", "t", "B", "root", "separator_step"])
        rows = sorted(self.entries(), key=lambda e: (e[2], e[0].boundary, e[1]))
        for key, t, s, val, r, sep in rows:
            w.writerow([" ".join(map(str, key.boundary)), key.anchor if key.anchor is not None else "",
                        s, t, val, r if r is not None else "", int(sep)])
        return buf.getvalue()


def tree_dp(tree, p=1, mode: str = "exact", k: Optional[int] = None, eps=None, prune: bool = True):
    """Run the DP and rebuild the labeling; returns (HubLabeling, DpTable).

    mode="exact" with k=None uses k = n, which is always exact.
    mode="ptas" needs eps and uses k = 4 * ceil(1/eps).
    """
    dp = TreeDP(tree, p, mode, k, eps, prune)
    v = dp.solve()
    h = dp.labeling()
    if mode == "exact":
        got = power_cost(h.sizes(), dp.p)
        ok = got == v if dp.exact_p else abs(got - v) <= 1e-9 * max(1.0, abs(v))
        assert ok, f"labeling cost {got} differs from table value {v}"
    return h, DpTable(dp)
