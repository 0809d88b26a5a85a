"""Command line front end: gen / build / verify / query / cost / certify / bench.

Exit codes: 0 ok, 1 covering violations (verify), 2 usage, 3 I/O or
unparsable input, 4 solver stall or exhausted k.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

from . import __version__
from .errors import GraphError, HubLabelError, KExhaustedError, LabelingError, SolverStallError
from .graph import compute_shortest_paths, parse_graph, require_unique, serialize_graph
from .labeling import (canonical_from_order, cost, deserialize_labeling, normalize_p, query_distance,
                       serialize_labeling, verify_covering)

ALGOS = ("peleg", "lp-round", "lp-round-derand", "tree-ptas", "tree-exact", "canonical", "left-child")
FAMILIES = ("path", "cbt", "star", "random-tree", "caterpillar", "random-graph", "star-path-star",
            "hl1", "hlinf")
CSV_FIELDS = ["instance", "algo", "p", "cost", "lower_bound", "ratio", "wall_ms", "seed"]


class UsageError(Exception):
    pass


# ---- io helpers -------------------------------------------------------------

def _read(path: str) -> str:
    if path in (None, "-"):
        return sys.stdin.read()
    with open(path) as f:
        return f.read()


def _write(path, text: str):
    if path in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(path, "w") as f:
            f.write(text)


def _parse_p(s: str):
    s = str(s).strip().lower()
    if s in ("inf", "infinity"):
        return math.inf
    try:
        v = float(s)
    except ValueError:
        raise UsageError(f"--p must be a number >= 1 or 'inf', got {s!r}") from None
    if v.is_integer():
        v = int(v)
    try:
        return normalize_p(v)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _fmt_p(p) -> str:
    return "inf" if p == math.inf else str(p)


def _fmt_num(x) -> str:
    if x is None:
        return ""
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if x.is_integer():
        return str(int(x))
    return f"{x:.6f}"


def serialize_fractional(x, n: int) -> str:
    """Sparse JSON: {"n": n, "x": {"u": {"w": value}}}."""
    rows = {}
    for u in range(1, n + 1):
        row = {str(w): float(x[u, w]) for w in range(1, n + 1) if x[u, w] != 0}
        if row:
            rows[str(u)] = row
    return json.dumps({"version": 1, "n": n, "x": rows}) + "\n"


# ---- building labelings -------------------------------------------------------

def _tree_or_usage(g, algo):
    from .trees import Tree
    if not g.is_tree():
        raise UsageError(f"--algo {algo} needs a tree (graph has n={g.n}, m={g.m})")
    return Tree.from_graph(g)


def build_labeling(g, algo: str, p=1, eps=None, k=None, seed=None, order=None, retry: bool = True,
                   method: str = "highs"):
    """Run one algorithm; returns (labeling, info dict)."""
    info = {}
    if algo == "peleg":
        from .trees import peleg_tree
        return peleg_tree(_tree_or_usage(g, algo)), info
    if algo in ("tree-exact", "tree-ptas"):
        from .treedp import tree_dp
        t = _tree_or_usage(g, algo)
        if p not in (1, math.inf) and not isinstance(p, int):
            raise UsageError("tree DPs accept integer p or inf only")
        if algo == "tree-ptas":
            h, tab = tree_dp(t, p, "ptas", eps=eps)
            info["dp_value"] = tab.root_value
            return h, info
        while True:
            try:
                h, tab = tree_dp(t, p, "exact", k=k)
                info["k"] = tab.dp.k
                info["dp_value"] = tab.root_value
                return h, info
            except KExhaustedError:
                if not retry or k is None or k >= t.n:
                    raise
                print(f"k={k} exhausted, retrying with k={min(2 * k, t.n)}", file=sys.stderr)
                k = min(2 * k, t.n)
    if algo == "left-child":
        from .instances import gen_complete_binary_tree
        from .trees import binary_tree_heuristics
        t = _tree_or_usage(g, algo)
        h_ = (t.n + 1).bit_length() - 2
        if (1 << (h_ + 1)) - 1 != t.n or set(t.edges) != set(gen_complete_binary_tree(h_).edges):
            raise UsageError("--algo left-child needs a complete binary tree in heap layout")
        rep = binary_tree_heuristics(h_)
        info["P"] = rep.p_value
        info["ALG"] = rep.alg
        return rep.labeling, info
    spd = compute_shortest_paths(g)
    if algo == "canonical":
        require_unique(spd)
        if order is None:
            from .rng import SplitMix64
            order = SplitMix64(0 if seed is None else seed).permutation(range(1, g.n + 1))
        if sorted(order) != list(range(1, g.n + 1)):
            raise UsageError("--order must be a permutation of 1..n")
        return canonical_from_order(order, spd), info
    if algo in ("lp-round", "lp-round-derand"):
        from .lp import build_lp1, solve, solve_lp_convex
        from .rounding import extract_prehubs, round_lp
        if p == math.inf:
            raise UsageError("LP rounding is defined for finite p only")
        require_unique(spd)
        inst = build_lp1(spd, "l1")
        sol = solve(inst, method=method) if p == 1 else solve_lp_convex(inst, p, method=method)
        info["lp_value"] = sol.objective
        ph = extract_prehubs(sol.x, spd)
        derand = algo == "lp-round-derand"
        h = round_lp(ph, spd, p, seed=None if derand else (0 if seed is None else seed), derandomize=derand)
        return h, info
    raise UsageError(f"unknown algorithm {algo!r}")


def _cost_value(h, p):
    rep = cost(h, p)
    if p == 1 or p == math.inf:
        return int(rep.value)
    return rep.value


def lower_bound(g, p):
    """Dual certificate (trees, p=1), LP value (p=1 or inf), or the convex
    relaxation value minus its gap (finite p > 1, small graphs only)."""
    if p == 1 and g.is_tree():
        from .trees import Tree, dual_certificate
        return float(dual_certificate(Tree.from_graph(g)).value)
    from .lp import build_lp1, solve, solve_lp_convex
    spd = compute_shortest_paths(g)
    if not spd.unique:
        return None
    if p == 1:
        return solve(build_lp1(spd, "l1")).objective
    if p == math.inf:
        return solve(build_lp1(spd, "linf")).objective
    if g.n > 40:
        return None
    sol = solve_lp_convex(build_lp1(spd, "l1"), p, K=32)
    return max(0.0, sol.objective - (sol.gap or 0.0))


# ---- subcommands ----------------------------------------------------------------

def _parse_sets(text: str, n=None):
    from .instances import SetCoverInstance
    sets = [[int(x) for x in part.split(",") if x.strip()] for part in text.split(";") if part.strip()]
    n = n or max((max(s) for s in sets if s), default=0)
    return SetCoverInstance(n, sets)


def cmd_gen(a) -> int:
    from . import instances as I
    fam = a.family
    inst = None
    if fam == "path":
        g = I.gen_path(a.t)
    elif fam == "cbt":
        g = I.gen_complete_binary_tree(a.h)
    elif fam == "star":
        g = I.gen_star(a.leaves)
    elif fam == "random-tree":
        g = I.gen_random_tree(a.n, a.seed)
    elif fam == "caterpillar":
        g = I.gen_caterpillar(a.k)
    elif fam == "random-graph":
        g = I.gen_random_graph(a.n, a.m if a.m is not None else 2 * a.n, a.seed)
    elif fam == "star-path-star":
        inst = I.gen_star_path_star(a.t)
    elif fam in ("hl1", "hlinf"):
        if not a.sets:
            raise UsageError(f"--family {fam} needs --sets, e.g. '1,2;2,3;3'")
        sc = _parse_sets(a.sets, a.elements)
        if fam == "hl1":
            inst = I.gen_hl1_hardness(sc, a.A, a.B)
        else:
            inst = I.gen_hlinf_hardness(sc, a.A, a.B, a.K)
    else:
        raise UsageError(f"unknown family {fam!r}")
    if inst is not None:
        g = inst.graph
        if a.annotations:
            _write(a.annotations, I.annotation_text(inst))
        if a.intended and inst.intended is not None:
            _write(a.intended, serialize_labeling(inst.intended))
        if a.fractional and inst.fractional is not None:
            _write(a.fractional, serialize_fractional(inst.fractional.x, g.n))
    _write(a.output, serialize_graph(g, [f"family {fam}"]))
    return 0


def cmd_build(a) -> int:
    g = parse_graph(_read(a.graph))
    order = [int(x) for x in a.order.split(",")] if a.order else None
    h, info = build_labeling(g, a.algo, a.p, eps=a.eps, k=a.k, seed=a.seed, order=order,
                             retry=not a.no_retry, method=a.lp_method)
    if a.check:
        rep = verify_covering(h, compute_shortest_paths(g), max_violations=1)
        if not rep.ok:
            print(f"internal error: {a.algo} produced an infeasible labeling", file=sys.stderr)
            return 1
    _write(a.output, serialize_labeling(h))
    return 0


def cmd_verify(a) -> int:
    g = parse_graph(_read(a.graph))
    h = deserialize_labeling(_read(a.labeling))
    if h.n != g.n:
        raise LabelingError(f"labeling has n={h.n} but graph has n={g.n}")
    rep = verify_covering(h, compute_shortest_paths(g), max_violations=a.max_violations)
    out = {"ok": rep.ok, "n": g.n, "violations": [list(v) for v in rep.violations]}
    print(json.dumps(out))
    return 0 if rep.ok else 1


def cmd_query(a) -> int:
    h = deserialize_labeling(_read(a.labeling))
    for pair in a.pairs:
        try:
            u, v = (int(x) for x in pair.split(","))
        except ValueError:
            raise UsageError(f"pairs look like 'u,v', got {pair!r}") from None
        if not (1 <= u <= h.n and 1 <= v <= h.n):
            raise UsageError(f"pair {pair} outside 1..{h.n}")
        d, w = query_distance(h, u, v)
        print(f"{u} {v} {d} {w}")
    return 0


def cmd_cost(a) -> int:
    h = deserialize_labeling(_read(a.labeling))
    print(_fmt_num(_cost_value(h, a.p)))
    return 0


def cmd_certify(a) -> int:
    g = parse_graph(_read(a.graph))
    if g.is_tree():
        from .trees import Tree, certificate_csv, dual_certificate, peleg_tree
        t = Tree.from_graph(g)
        cert = dual_certificate(t)
        alg = peleg_tree(t).total()
        print(f"dual_value {cert.value}")
        print(f"dual_feasible {int(cert.feasible)}")
        print(f"peleg_cost {alg}")
        print(f"ratio {_fmt_num(alg / cert.value) if cert.value else ''}")
        if a.csv:
            _write(a.csv, certificate_csv(cert))
        return 0 if cert.feasible else 1
    from .lp import build_lp1, solve, write_mps
    spd = compute_shortest_paths(g)
    require_unique(spd)
    inst = build_lp1(spd, "linf" if a.p == math.inf else "l1")
    sol = solve(inst, method=a.lp_method)
    print(f"lp_value {_fmt_num(sol.objective)}")
    print(f"residual {sol.residual:.3g}")
    if a.mps:
        _write(a.mps, write_mps(inst))
    return 0


def _bench_graph(family, n, seed):
    from . import instances as I
    if family == "random-tree":
        return I.gen_random_tree(n, seed)
    if family == "random-graph":
        return I.gen_random_graph(n, min(2 * n, n * (n - 1) // 2), seed)
    if family == "path":
        return I.gen_path(n)
    if family == "cbt":
        return I.gen_complete_binary_tree(n)
    if family == "caterpillar":
        return I.gen_caterpillar(n)
    if family == "star":
        return I.gen_star(n)
    raise UsageError(f"family {family!r} is not available in bench")


def _bench_task(task):
    family, n, seed, algos, p, eps, timing = task
    g = _bench_graph(family, n, seed)
    name = f"{family}-n{n}-s{seed}"
    lb = lower_bound(g, p)
    rows = []
    for algo in algos:
        t0 = time.perf_counter()
        h, _ = build_labeling(g, algo, p, eps=eps if algo == "tree-ptas" else None, seed=seed)
        ms = (time.perf_counter() - t0) * 1000.0
        c = _cost_value(h, p)
        ratio = (c / lb) if lb else None
        rows.append([name, algo, _fmt_p(p), _fmt_num(c), _fmt_num(lb), _fmt_num(ratio),
                     f"{ms:.1f}" if timing else "", str(seed)])
    return rows


def cmd_bench(a) -> int:
    algos = [x.strip() for x in a.algos.split(",") if x.strip()]
    for x in algos:
        if x not in ALGOS:
            raise UsageError(f"unknown algorithm {x!r}")
    sizes = [int(x) for x in a.sizes.split(",") if x.strip()]
    tasks = [(a.family, n, a.seed + i, algos, a.p, a.eps, not a.no_timing)
             for n in sizes for i in range(a.count)]
    jobs = a.jobs or int(os.environ.get("HUBLABEL_THREADS", "1") or 1)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_bench_task, tasks))
    else:
        results = [_bench_task(t) for t in tasks]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for rows in results:  # task order, whatever order workers finished in
        w.writerows(rows)
    _write(a.output, buf.getvalue())
    return 0


# ---- argument parsing ---------------------------------------------------------------

def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hublabel", description="Hub labeling toolkit")
    ap.add_argument("--version", action="version", version=f"hublabel {__version__}")
    sub = ap.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen", help="generate an instance")
    g.add_argument("--family", required=True, choices=FAMILIES)
    g.add_argument("--t", type=int, default=3, help="path length / star-path-star parameter")
    g.add_argument("--h", type=int, default=2, help="complete binary tree height")
    g.add_argument("--leaves", type=int, default=4)
    g.add_argument("--n", type=int, default=10)
    g.add_argument("--m", type=int, default=None)
    g.add_argument("--k", type=int, default=4, help="caterpillar spine length")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--sets", default=None, help="set family for hl1/hlinf, e.g. '1,2;2,3;3'")
    g.add_argument("--elements", type=int, default=None)
    g.add_argument("--A", type=int, default=None)
    g.add_argument("--B", type=int, default=None)
    g.add_argument("--K", type=int, default=None)
    g.add_argument("-o", "--output", default="-")
    g.add_argument("--annotations", default=None, help="write role -> id ranges here")
    g.add_argument("--intended", default=None, help="write the intended labeling here")
    g.add_argument("--fractional", default=None, help="write the shipped fractional solution here")
    g.set_defaults(func=cmd_gen)

    b = sub.add_parser("build", help="build a labeling")
    b.add_argument("graph", nargs="?", default="-")
    b.add_argument("--algo", required=True, choices=ALGOS)
    b.add_argument("--p", type=_parse_p, default=1)
    b.add_argument("--eps", type=float, default=None)
    b.add_argument("--k", type=int, default=None)
    b.add_argument("--seed", type=int, default=None)
    b.add_argument("--order", default=None, help="comma separated order for --algo canonical")
    b.add_argument("--no-retry", action="store_true", help="fail instead of doubling an exhausted k")
    b.add_argument("--lp-method", default="highs", choices=("highs", "simplex"))
    b.add_argument("--check", action="store_true", help="verify before writing")
    b.add_argument("-o", "--output", default="-")
    b.set_defaults(func=cmd_build)

    v = sub.add_parser("verify", help="check the covering property")
    v.add_argument("graph")
    v.add_argument("labeling", nargs="?", default="-")
    v.add_argument("--max-violations", type=int, default=100)
    v.set_defaults(func=cmd_verify)

    q = sub.add_parser("query", help="distance queries from a labeling")
    q.add_argument("pairs", nargs="+", help="u,v")
    q.add_argument("--labeling", default="-")
    q.set_defaults(func=cmd_query)

    c = sub.add_parser("cost", help="l_p cost of a labeling")
    c.add_argument("labeling", nargs="?", default="-")
    c.add_argument("--p", type=_parse_p, default=1)
    c.set_defaults(func=cmd_cost)

    ce = sub.add_parser("certify", help="lower bounds: dual certificate (trees) or LP value")
    ce.add_argument("graph", nargs="?", default="-")
    ce.add_argument("--p", type=_parse_p, default=1)
    ce.add_argument("--csv", default=None, help="certificate dump (trees)")
    ce.add_argument("--mps", default=None, help="LP dump in fixed MPS format (graphs)")
    ce.add_argument("--lp-method", default="highs", choices=("highs", "simplex"))
    ce.set_defaults(func=cmd_certify)

    be = sub.add_parser("bench", help="run algorithms over a generated corpus, CSV out")
    be.add_argument("--family", default="random-tree")
    be.add_argument("--sizes", default="10,20")
    be.add_argument("--count", type=int, default=3)
    be.add_argument("--algos", default="peleg,tree-exact")
    be.add_argument("--p", type=_parse_p, default=1)
    be.add_argument("--eps", type=float, default=0.5)
    be.add_argument("--seed", type=int, default=0)
    be.add_argument("--jobs", type=int, default=None, help="worker processes (default $HUBLABEL_THREADS or 1)")
    be.add_argument("--no-timing", action="store_true", help="leave wall_ms empty for byte-stable output")
    be.add_argument("-o", "--output", default="-")
    be.set_defaults(func=cmd_bench)
    return ap


def _validate(a):
    if a.cmd == "build":
        if a.eps is not None and a.algo != "tree-ptas":
            raise UsageError("--eps only applies to --algo tree-ptas")
        if a.algo == "tree-ptas" and a.eps is None:
            raise UsageError("--algo tree-ptas needs --eps")
        if a.eps is not None and not (0 < a.eps <= 1):
            raise UsageError("--eps must lie in (0, 1]")
        if a.k is not None and a.algo != "tree-exact":
            raise UsageError("--k only applies to --algo tree-exact")
        if a.k is not None and a.k < 1:
            raise UsageError("--k must be >= 1")
        if a.order is not None and a.algo != "canonical":
            raise UsageError("--order only applies to --algo canonical")
        if a.seed is not None and a.algo not in ("lp-round", "canonical"):
            raise UsageError("--seed only applies to --algo lp-round and canonical")
    if a.cmd == "bench" and not (0 < a.eps <= 1):
        raise UsageError("--eps must lie in (0, 1]")


def main(argv=None) -> int:
    ap = make_parser()
    a = ap.parse_args(argv)  # exits with 2 on bad flags
    try:
        _validate(a)
        return a.func(a)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return 3
    except (GraphError, LabelingError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return 3
    except KExhaustedError as e:
        print(f"error: {e}", file=sys.stderr)
        return 4
    except SolverStallError as e:
        print(f"solver stalled: {e}; try --lp-method highs or a looser tolerance", file=sys.stderr)
        return 4
    except HubLabelError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
