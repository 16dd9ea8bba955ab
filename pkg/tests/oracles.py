"""Slow, independent reference implementations used by the tests.

Nothing here touches bitsets or the vectorised code paths: relations are
Python sets of tuples and every check is a plain nested loop.
"""

from __future__ import annotations

import itertools

from centralclones.relcore import Relation


def tuples_of(rel: Relation) -> set[tuple[int, ...]]:
    return {tuple(int(a) for a in t) for t in rel.tuples()}


def table_fn(f):
    k, n = f.k, f.arity
    table = [int(v) for v in f.table]

    def call(*xs):
        r = 0
        for x in xs:
            r = r * k + x
        return table[r]

    assert len(table) == k ** n
    return call


def naive_preserves(f, rel: Relation) -> bool:
    """Pick n members (as columns), apply f row by row, test membership."""
    members = sorted(tuples_of(rel))
    member_set = set(members)
    call = table_fn(f)
    h = rel.arity
    for cols in itertools.product(members, repeat=f.arity):
        image = []
        for i in range(h):
            image.append(call(*[c[i] for c in cols]))
        if tuple(image) not in member_set:
            return False
    return True


def naive_center(k: int, members: set) -> set[int]:
    h = len(next(iter(members)))
    return {a for a in range(k)
            if all((a,) + rest in members for rest in itertools.product(range(k), repeat=h - 1))}


def is_central(k: int, members: set, h: int) -> bool:
    if h == 1:
        return 0 < len(members) < k
    for t in itertools.product(range(k), repeat=h):
        if len(set(t)) < h and t not in members:
            return False
        if t in members and any(p not in members for p in itertools.permutations(t)):
            return False
    c = naive_center(k, members)
    return 0 < len(c) < k


# ---------------------------------------------------------------------------
# derived relations, straight from their defining formulas


def _sel(pool, size, mode):
    pool = list(pool)
    if mode == "strict":
        return list(itertools.combinations(pool, size))
    return list(itertools.product(pool, repeat=size))


def _build(k, arity, pred):
    return {x for x in itertools.product(range(k), repeat=arity) if pred(x)}


def slow_derived(spec: dict, rho: Relation, sigma: Relation) -> set:
    """Evaluate a derivation transcript (in its JSON form)."""
    R, S = tuples_of(rho), tuples_of(sigma)
    k, h, s = rho.k, rho.arity, sigma.arity
    sig_el = {t[0] for t in S} if s == 1 else set()
    kind = spec["kind"]
    p = spec.get("params", {})
    mode = p.get("index_mode")
    E = range(k)

    if kind == "Rho":
        return R
    if kind == "Sigma":
        return S
    if kind == "Intersect":
        a, b = spec["inputs"]
        return slow_derived(a, rho, sigma) & slow_derived(b, rho, sigma)
    if kind == "Tau":
        return _build(k, 1, lambda x: any((x[0], u) in R for u in sig_el))
    if kind in ("GammaT", "GammaBinary"):
        t = p.get("t", 2)
        return _build(k, t, lambda x: any(all((xi, u) in R for xi in x) for u in sig_el))
    if kind == "RhoL":
        l = p["l"]
        return _build(k, l, lambda x: all((x[i], x[j]) in R for i in range(l) for j in range(l) if i != j))
    if kind == "AlphaN":
        n = p["n"]
        sels = _sel(range(n), h - 1, mode)
        return _build(k, n, lambda x: any(all((u,) + tuple(x[i] for i in I) in R for I in sels)
                                          for u in sig_el))
    if kind == "BetaChain":
        j = p["j"]
        arity = j * (h - 1) + 1
        blocks = [range(1 + b * (h - 1), 1 + (b + 1) * (h - 1)) for b in range(j)]
        return _build(k, arity, lambda x: any(all((u,) + tuple(x[i] for i in B) in R for B in blocks)
                                              for u in sig_el))
    if kind == "Alpha1Of":
        G = slow_derived(spec["inputs"][0], rho, sigma)
        hh = len(next(iter(G))) if G else h
        last = hh - 1 if p.get("positions", "lt_h") == "lt_h" else hh

        def ok(x):
            for u in E:
                if all(x[:i] + (u,) + x[i + 1:] in G for i in range(last)):
                    return True
            return False
        return _build(k, hh, ok)
    if kind == "BetaT":
        G = slow_derived(spec["inputs"][1], rho, sigma)
        t = p["t"]
        sels = _sel(range(t), h - 1, mode)

        def ok(x):
            for u in E:
                if all(tuple(x[i] for i in I[:h - 2]) + (x[0], u) in G
                       and tuple(x[i] for i in I) + (u,) in R for I in sels):
                    return True
            return False
        return _build(k, t, ok)
    if kind == "Lambda":
        return _build(k, p["s"], lambda x: x[:h] in R)
    if kind == "GammaPrime":
        return _build(k, s, lambda x: x[:h] in R and x in S)
    if kind == "ThetaUp":
        t = p["t"]
        sels = _sel(range(t), h - 1, mode)
        return _build(k, t, lambda x: any(
            all(tuple(x[i] for i in I) + (u,) in R for I in sels) and x + (u,) * (s - t) in S
            for u in E))
    if kind == "ThetaDown":
        t = p["t"]
        sels = _sel(range(t), s - 1, mode)
        return _build(k, t, lambda x: any(
            all(tuple(x[i] for i in I) + (u,) in S for I in sels) and x + (u,) * (h - t) in R
            for u in E))
    if kind == "ThetaCommon":
        t = p["t"]
        sels = _sel(range(t), h - 1, mode)
        return _build(k, t, lambda x: any(
            all(tuple(x[i] for i in I[:s - 1]) + (v,) in S and tuple(x[i] for i in I) + (v,) in R
                for I in sels) for v in E))
    if kind == "GammaS":
        sels = _sel(range(s), h - 1, mode)
        return _build(k, s, lambda x: x in S and all(
            (x[0],) + tuple(x[i] for i in I) in R and (x[1],) + tuple(x[i] for i in I) in R
            for I in sels))
    if kind == "GammaPrimeT":
        t = p["t"]
        pool = range(s) if p.get("index_range", "s") == "s" else range(t)
        sels = _sel(pool, s - 1, mode)
        return _build(k, t, lambda x: any(
            all(tuple(x[i] for i in I[:h - 1]) + (v,) in R and tuple(x[i] for i in I) + (v,) in S
                for I in sels) for v in E))
    if kind == "GammaPrimeH":
        sels = _sel(range(h), s - 1, mode)
        return _build(k, h, lambda x: any(
            x[1:] + (v,) in R and all(tuple(x[i] for i in I) + (v,) in S for I in sels)
            for v in E))
    if kind == "GammaPrimeChain":
        n = p["n"]
        arity = n * (h - 1) + 1
        blocks = [range(1 + b * (h - 1), 1 + (b + 1) * (h - 1)) for b in range(n)]
        sels = _sel(range(arity), s - 1, mode)
        return _build(k, arity, lambda x: any(
            all(tuple(x[i] for i in B) + (v,) in R for B in blocks)
            and all(tuple(x[i] for i in I) + (v,) in S for I in sels) for v in E))
    raise ValueError(f"no slow evaluator for {kind}")


# ---------------------------------------------------------------------------
# clones


def compose_tables(k: int, g: tuple, args: list[tuple]) -> tuple:
    """g(args[0], ..., args[m-1]) for tables of equal arity."""
    size = len(args[0])
    out = []
    for x in range(size):
        r = 0
        for a in args:
            r = r * k + a[x]
        out.append(g[r])
    return tuple(out)


def projections(k: int, n: int) -> list[tuple]:
    pts = list(itertools.product(range(k), repeat=n))
    return [tuple(p[i] for p in pts) for i in range(n)]


def naive_closure(k: int, gens: list[tuple[int, tuple]], n: int) -> set[tuple]:
    """n-ary part of the clone generated by ``gens`` (pairs (arity, table)),
    by plain fixpoint iteration: apply every generator to every tuple of
    known n-ary members until nothing new appears."""
    members = set(projections(k, n))
    while True:
        new = set()
        pool = sorted(members)
        for m, g in gens:
            for args in itertools.product(pool, repeat=m):
                t = compose_tables(k, g, list(args))
                if t not in members:
                    new.add(t)
        if not new:
            return members
        members |= new


def unary_pol(k: int, rels: list[Relation]) -> set[tuple]:
    from centralclones.relcore import Operation
    out = set()
    for t in itertools.product(range(k), repeat=k):
        f = Operation.from_table(k, list(t))
        if all(naive_preserves(f, r) for r in rels):
            out.add(t)
    return out
