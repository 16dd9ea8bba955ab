"""Constructive interpolation for maximal pairs.

Given g in Pol rho but not in Pol sigma, and a target t in Pol rho, build
operations f_1..f_q in the clone generated by Pol{rho, sigma} and g, plus an
(m+q)-ary operation H in Pol{rho, sigma}, with

    t(x) = H(x, f_1(x), ..., f_q(x))   for every x in E_k^m.

Each f_i is g applied to small "inner" operations that lie in Pol{rho, sigma};
the composition tree is kept so it can be re-checked.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .classifier import classify
from .polycheck import BudgetExceeded, find_violation_columns, preserves
from .relcore import (CentralRelation, Comparison, Domain, Operation, Relation, RelationError,
                      all_tuples, compare, place_values, validate_central)

EXHAUSTIVE_LIMIT = 10 ** 7
SAMPLES = 10 ** 5
# largest m + q per domain size; other sizes fall back to the k^(m+q) bound
WIDTH_LIMIT = {3: 8, 4: 6}
TABLE_LIMIT = 3 ** 8

CASES = ("i", "ii", "iii")


def find_violation(g: Operation, sigma) -> tuple[tuple, tuple]:
    """First member tuples (rank order) that g maps outside sigma, with the image."""
    sigma = sigma.rel if isinstance(sigma, CentralRelation) else sigma
    found = find_violation_columns(g, sigma)
    if found is None:
        raise RelationError("no violation exists: g preserves sigma")
    return found


def case_for(verdict: str, rho: CentralRelation, sigma: CentralRelation) -> str:
    if verdict in ("TypeI", "TypeII"):
        return "i"
    if verdict == "TypeIV":
        return "ii"
    if verdict == "TypeV":
        return "iii"
    if verdict == "TypeIII":
        cmp = compare(rho.rel, sigma.rel)
        if cmp is Comparison.RIGHT_STRICT:
            return "ii"
        if cmp is Comparison.LEFT_STRICT:
            return "iii"
    raise RelationError(f"no interpolation case for verdict {verdict}")


def compose(g: Operation, inner: list[Operation]) -> Operation:
    """g(f_1, ..., f_n) for inner operations of a common arity."""
    if len(inner) != g.arity:
        raise RelationError(f"g has arity {g.arity} but {len(inner)} inner operations were given")
    m = inner[0].arity
    if any(f.arity != m for f in inner):
        raise RelationError("inner operations must share an arity")
    k = g.k
    idx = np.zeros(k ** m, dtype=np.int64)
    for f in inner:
        idx = idx * k + f.table
    return Operation(Domain(k), m, g.table[idx])


@dataclass
class Gadget:
    """An operation f = g(inner...) together with the context it was built for."""

    case: str
    context: tuple
    inner: list[Operation]
    op: Operation


def _rows_fail_rho(rows, rho: Relation) -> bool:
    h = rho.arity
    for sel in itertools.combinations(range(len(rows)), h):
        if all(tuple(rows[i][j] for i in sel) in rho for j in range(len(rows[0]))):
            return False
    return True


def build_fc(case: str, g: Operation, violation: tuple, context: tuple, rho, sigma,
             c: int | None = None) -> Gadget:
    """Gadget for one context.

    Case "i": ``context`` is an m-tuple of sigma elements (sigma unary); the
    inner operations are constants.  Cases "ii"/"iii": ``context`` lists the
    s rows b_1..b_s (each an m-tuple); inner operation i sends b_j to the
    j-th entry of the i-th violating tuple and everything else to that
    tuple's first entry ("ii") or to the central element c ("iii").
    """
    rho = validate_central(rho)
    sigma = validate_central(sigma)
    k, s = rho.k, sigma.arity
    cols = [tuple(a) for a in violation]
    if len(cols) != g.arity:
        raise RelationError("violation must list one sigma tuple per argument of g")
    if case == "i":
        if s != 1:
            raise RelationError("case i needs a unary sigma")
        if not context or any((x,) not in sigma.rel for x in context):
            raise RelationError("case i context must be a nonempty tuple of sigma elements")
        m = len(context)
        inner = [Operation(Domain(k), m, np.full(k ** m, a[0], dtype=np.int64)) for a in cols]
    elif case in ("ii", "iii"):
        rows = [tuple(int(x) for x in b) for b in context]
        if len(rows) != s or not rows:
            raise RelationError(f"context must list {s} rows")
        m = len(rows[0])
        if any(len(b) != m for b in rows) or m < 1:
            raise RelationError("context rows must share a positive length")
        if len(set(rows)) != s:
            raise RelationError("context rows must be pairwise distinct")
        if case == "iii":
            if c is None:
                raise RelationError("case iii needs a central element c")
            if not _rows_fail_rho(rows, rho.rel):
                raise RelationError("some h context rows jointly satisfy rho")
        pv = place_values(k, m)
        where = [int(np.dot(b, pv)) for b in rows]
        inner = []
        for a in cols:
            fill = a[0] if case == "ii" else c
            table = np.full(k ** m, fill, dtype=np.int64)
            table[where] = a
            inner.append(Operation(Domain(k), m, table))
    else:
        raise RelationError(f"case must be one of {CASES}")
    return Gadget(case, tuple(context), inner, compose(g, inner))


def contexts(case: str, m: int, rho: CentralRelation, sigma: CentralRelation):
    """All contexts of the given case at arity m, in a fixed order."""
    k, s = rho.k, sigma.arity
    if case == "i":
        yield from itertools.product(sorted(sigma.rel.elements()), repeat=m)
        return
    points = [tuple(int(x) for x in t) for t in all_tuples(k, m).tolist()]
    for rows in itertools.permutations(points, s):
        if case == "iii" and not _rows_fail_rho(rows, rho.rel):
            continue
        yield rows


def ext_map(S: list[Operation], x) -> tuple:
    if not S:
        raise RelationError("S must be nonempty")
    x = tuple(int(v) for v in x)
    return x + tuple(f(*x) for f in S)


def _width_ok(k: int, width: int) -> bool:
    if k in WIDTH_LIMIT:
        return width <= WIDTH_LIMIT[k]
    return k ** width <= TABLE_LIMIT


@dataclass
class ChainRecord:
    y: tuple
    values: tuple  # the set D_y, sorted
    is_chain: bool
    u: int


def _ext_rows(S: list[Operation], k: int, m: int) -> np.ndarray:
    xs = all_tuples(k, m)
    return np.hstack([xs] + [f.table[:, None] for f in S])


def build_H(target: Operation, S: list[Operation], sigma_type: str, c: int, rho, sigma
            ) -> tuple[Operation, list[ChainRecord]]:
    """The (m+q)-ary operation: target on the image of ext, the type II
    chain value on sigma^(m+q), c elsewhere."""
    rho, sigma = validate_central(rho), validate_central(sigma)
    k, m, q = rho.k, target.arity, len(S)
    if not S:
        raise RelationError("S must be nonempty")
    if any(f.arity != m for f in S):
        raise RelationError("S members must have the arity of the target")
    width = m + q
    if not _width_ok(k, width):
        raise BudgetExceeded(f"H would have arity {width} on E_{k}")
    ext = _ext_rows(S, k, m)
    pv = place_values(k, width)
    table = np.full(k ** width, c, dtype=np.int64)
    records: list[ChainRecord] = []
    if sigma_type == "TypeII":
        if rho.arity != 2 or sigma.arity != 1:
            raise RelationError("the type II branch needs binary rho and unary sigma")
        members = sorted(sigma.rel.elements())
        ys = np.array(list(itertools.product(members, repeat=width)), dtype=np.int64)
        in_ext = set((ext @ pv).tolist())
        overlap = in_ext & set((ys @ pv).tolist())
        if overlap:
            raise RuntimeError("ext image meets sigma^(m+q)")
        related = rho.rel.bits[ext[:, None, :] * k + ys[None, :, :]].all(axis=2)
        tvals = target.table
        chains = rho.maximal_chains
        for j, y in enumerate(ys.tolist()):
            dset = frozenset(int(v) for v in tvals[related[:, j]])
            pairs_ok = all((a, b) in rho.rel for a in dset for b in dset)
            eta = [B for B in chains if dset <= B]
            pool = sorted(set().union(*eta) & sigma.rel.elements()) if eta else []
            if not pool:
                raise RuntimeError(f"no sigma element in the chains covering {sorted(dset)}")
            u = pool[0]
            table[int(np.dot(y, pv))] = u
            records.append(ChainRecord(tuple(y), tuple(sorted(dset)), pairs_ok, u))
    table[ext @ pv] = target.table
    return Operation(Domain(k), width, table), records


def sampled_preserves(f: Operation, rel: Relation, samples: int, seed: int) -> bool:
    rng = np.random.default_rng(seed)
    members = rel.member_array
    idx = rng.integers(members.shape[0], size=(samples, f.arity))
    pts = members[idx].transpose(0, 2, 1)  # (samples, h, n)
    image = f.table[pts @ place_values(f.k, f.arity)]
    return bool(rel.bits[image @ place_values(f.k, rel.arity)].all())


def checked_preserves(f: Operation, rel: Relation, seed: int = 0) -> tuple[bool, str]:
    """Exhaustive when |rel|^arity is within budget, else seeded sampling."""
    if len(rel) ** f.arity <= EXHAUSTIVE_LIMIT:
        return preserves(f, rel), "exhaustive"
    return sampled_preserves(f, rel, SAMPLES, seed), f"sampled({SAMPLES})"


@dataclass
class InterpTranscript:
    sigma_type: str
    case: str
    g: Operation
    violation: tuple
    violation_image: tuple
    gadgets: list[Gadget]
    S: list[Operation]
    c: int
    H: Operation
    target: Operation
    chain_records: list[ChainRecord] = field(default_factory=list)
    checks: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return self.target.arity

    @property
    def q(self) -> int:
        return len(self.S)

    @property
    def ok(self) -> bool:
        return all(v["ok"] for v in self.checks.values())

    def to_json(self) -> dict:
        return {
            "sigma_type": self.sigma_type,
            "case": self.case,
            "g": {"arity": self.g.arity, "table": self.g.table.tolist()},
            "violation": [list(a) for a in self.violation],
            "violation_image": list(self.violation_image),
            "contexts": len(self.gadgets),
            "S": [f.table.tolist() for f in self.S],
            "c": self.c,
            "m": self.m,
            "q": self.q,
            "H": {"arity": self.H.arity, "table": self.H.table.tolist()},
            "target": self.target.table.tolist(),
            "chain_records": [{"y": list(r.y), "values": list(r.values), "is_chain": r.is_chain,
                               "u": r.u} for r in self.chain_records],
            "checks": self.checks,
        }


def _pick_c(verdict: str, rho: CentralRelation, sigma: CentralRelation) -> int:
    if verdict == "TypeI":
        pool = rho.center & sigma.rel.elements()
    elif verdict == "TypeII":
        pool = rho.center
    else:
        pool = rho.center & sigma.center
    if not pool:
        raise RelationError(f"no suitable central element for {verdict}")
    return min(pool)


def interpolate(rho, sigma, g: Operation, target: Operation, seed: int = 0) -> InterpTranscript:
    """Run the whole construction and its post-checks.  Check failures are
    recorded in ``checks`` rather than raised."""
    rho, sigma = validate_central(rho), validate_central(sigma)
    verdict = classify(rho, sigma).verdict
    if verdict == "NotSubmaximal":
        raise RelationError("pair is not maximal; nothing to interpolate")
    if g.k != rho.k or target.k != rho.k:
        raise RelationError("operations live on a different domain")
    if not preserves(g, rho.rel):
        raise RelationError("g does not preserve rho")
    if not preserves(target, rho.rel):
        raise RelationError("target does not preserve rho")
    cols, image = find_violation(g, sigma)
    case = case_for(verdict, rho, sigma)
    c = _pick_c(verdict, rho, sigma)
    m = target.arity
    gadgets = [build_fc(case, g, cols, ctx, rho, sigma, c) for ctx in contexts(case, m, rho, sigma)]
    S, seen = [], set()
    for gd in gadgets:
        key = gd.op.key()
        if key not in seen:
            seen.add(key)
            S.append(gd.op)
    if not _width_ok(rho.k, m + len(S)):
        raise BudgetExceeded(f"m + q = {m + len(S)} exceeds the table budget on E_{rho.k}")
    H, records = build_H(target, S, verdict, c, rho, sigma)
    t = InterpTranscript(verdict, case, g, cols, image, gadgets, S, c, H, target, records)

    ext = _ext_rows(S, rho.k, m)
    identity = bool(np.array_equal(H.table[ext @ place_values(rho.k, H.arity)], target.table))
    t.checks["identity"] = {"ok": identity, "mode": f"exhaustive({rho.k ** m})"}
    inner_ok = all(preserves(f, rho.rel) and preserves(f, sigma.rel)
                   for gd in gadgets for f in gd.inner)
    t.checks["inner_in_pol_rho_sigma"] = {"ok": inner_ok, "mode": "exhaustive"}
    composed_ok = all(compose(g, gd.inner) == gd.op for gd in gadgets)
    t.checks["S_is_composition"] = {"ok": composed_ok, "mode": "exhaustive"}
    s_rho = all(preserves(f, rho.rel) for f in S)
    t.checks["S_in_pol_rho"] = {"ok": s_rho, "mode": "exhaustive"}
    hits = True
    for gd in gadgets:
        if case == "i":
            val = gd.op(*gd.context)
            hits &= (val,) not in sigma.rel
        else:
            pv = place_values(rho.k, m)
            img = tuple(int(gd.op.table[int(np.dot(b, pv))]) for b in gd.context)
            hits &= img not in sigma.rel
    t.checks["gadgets_leave_sigma"] = {"ok": bool(hits), "mode": "exhaustive"}
    ok, mode = checked_preserves(H, rho.rel, seed)
    t.checks["H_preserves_rho"] = {"ok": ok, "mode": mode}
    ok, mode = checked_preserves(H, sigma.rel, seed + 1)
    t.checks["H_preserves_sigma"] = {"ok": ok, "mode": mode}
    if verdict == "TypeII":
        t.checks["chain_facts"] = {
            "ok": all(r.is_chain and (r.u,) in sigma.rel for r in records),
            "mode": f"exhaustive({len(records)})"}
    return t
