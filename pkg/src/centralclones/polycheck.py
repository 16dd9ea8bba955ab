"""Preservation (the Pol side), operation enumeration and separator search."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .relcore import Domain, Operation, Relation, RelationError, _as_domain, place_values

# Default enumeration guards: largest arity enumerated per domain size.
DEFAULT_MAX_ENUM_ARITY = {2: 4, 3: 3, 4: 2}
DEFAULT_SEARCH_BUDGET = 2_000_000
_CHUNK = 1 << 20


class BudgetExceeded(RuntimeError):
    """A search or enumeration would exceed its budget; nothing was truncated."""


class SearchExhausted(BudgetExceeded):
    """Separator search ran out of budget before finishing an arity."""

    def __init__(self, arity: int, examined: int):
        self.arity = arity
        self.examined = examined
        super().__init__(f"separator search budget exhausted at arity {arity} "
                         f"after {examined} nodes")


# ---------------------------------------------------------------------------
# basic operations


def apply(f: Operation, args: Sequence[int]) -> int:
    return f(*args)


def projection(k, n: int, i: int) -> Operation:
    """pi_i^(n), 1-based i."""
    dom = _as_domain(k)
    if not 1 <= i <= n:
        raise RelationError(f"projection index {i} out of range 1..{n}")
    return Operation(dom, n, dom.tuples(n)[:, i - 1])


def constant(k, a: int, n: int = 1) -> Operation:
    dom = _as_domain(k)
    if not 0 <= a < dom.k:
        raise RelationError(f"constant {a} outside E_{dom.k}")
    return Operation(dom, n, np.full(dom.k ** n, a, dtype=np.int64))


# ---------------------------------------------------------------------------
# preservation


def _check_domains(f: Operation, rel: Relation) -> None:
    if f.k != rel.k:
        raise RelationError(f"domain mismatch: operation k={f.k}, relation k={rel.k}")


def _point_blocks(members: np.ndarray, n: int, k: int):
    """Yield (prefix, points) covering every selection of n member tuples.

    ``points[r, j]`` is the rank in E_k^n of row j of the argument matrix
    whose columns are ``members[prefix + suffix_r]``; selections come out in
    rank order.  The trailing coordinates are vectorised in one precomputed
    block and the leading ones are looped over.
    """
    m, h = members.shape
    pv = place_values(k, n)
    v = n
    while v > 1 and m ** v > _CHUNK:
        v -= 1
    tail = np.zeros((1, h), dtype=np.int64)
    for i in range(n - v, n):
        tail = (tail[:, None, :] + members[None, :, :] * pv[i]).reshape(-1, h)
    for prefix in itertools.product(range(m), repeat=n - v):
        head = np.zeros(h, dtype=np.int64)
        for i, j in enumerate(prefix):
            head += members[j] * pv[i]
        yield prefix, tail + head


def preserves(f: Operation, rel: Relation) -> bool:
    """True iff f applied coordinatewise to any n member tuples gives a member.

    Iterates over column selections from the member list (|rel|^n of them),
    block by block, exiting at the first violating block.
    """
    _check_domains(f, rel)
    members = rel.member_array
    if members.shape[0] == 0:
        return True
    pv_h = place_values(f.k, rel.arity)
    table = f.table
    if f.arity == 1:
        return bool(rel.bits[table[members] @ pv_h].all())
    for _, pts in _point_blocks(members, f.arity, f.k):
        if not rel.bits[table[pts] @ pv_h].all():
            return False
    return True


def find_violation_columns(f: Operation, rel: Relation):
    """First selection (in rank order) of member tuples that f maps outside rel.

    Returns ``(columns, image)`` or None when f preserves rel.
    """
    _check_domains(f, rel)
    members = rel.member_array
    m = members.shape[0]
    if m == 0:
        return None
    n = f.arity
    pv_h = place_values(f.k, rel.arity)
    for prefix, pts in _point_blocks(members, n, f.k):
        bad = np.flatnonzero(~rel.bits[f.table[pts] @ pv_h])
        if bad.size:
            v = n - len(prefix)
            suffix = np.unravel_index(int(bad[0]), (m,) * v) if v else ()
            sel = tuple(prefix) + tuple(int(x) for x in suffix)
            cols = tuple(tuple(int(x) for x in members[j]) for j in sel)
            image = tuple(int(x) for x in f.table[pts[bad[0]]])
            return cols, image
    return None


def in_pol(f: Operation, rels: Sequence[Relation]) -> bool:
    return all(preserves(f, r) for r in rels)


# ---------------------------------------------------------------------------
# enumeration


def enumeration_size(k: int, n: int) -> int:
    return k ** (k ** n)


def enumerate_ops(domain, n: int, budget: int | None = None) -> Iterator[Operation]:
    """All n-ary operations in lexicographic table order.

    Refuses (BudgetExceeded) rather than truncating when the space is beyond
    the default arity guard or the explicit ``budget`` on the table count.
    """
    dom = _as_domain(domain)
    size = enumeration_size(dom.k, n)
    if budget is not None:
        if size > budget:
            raise BudgetExceeded(f"{size} operations of arity {n} on E_{dom.k} exceed budget {budget}")
    elif n > DEFAULT_MAX_ENUM_ARITY.get(dom.k, 1):
        raise BudgetExceeded(f"arity {n} enumeration on E_{dom.k} is beyond the default guard")
    for table in itertools.product(range(dom.k), repeat=dom.k ** n):
        yield Operation(dom, n, np.asarray(table, dtype=np.int64))


def all_tables(k: int, n: int) -> np.ndarray:
    """Every n-ary table as rows of a (k^(k^n), k^n) array, lexicographic order."""
    size = enumeration_size(k, n)
    if size > 5_000_000:
        raise BudgetExceeded(f"{size} tables is too many to materialise")
    return _all_tables(k, n)


@lru_cache(maxsize=8)
def _all_tables(k: int, n: int) -> np.ndarray:
    width = k ** n
    out = np.indices((k,) * width, dtype=np.int8).reshape(width, -1).T
    out = np.ascontiguousarray(out)
    out.setflags(write=False)
    return out


def _point_constraints(rel: Relation, n: int) -> np.ndarray:
    """Distinct input-rank h-tuples that any n-ary polymorphism must respect."""
    members = rel.member_array
    m = members.shape[0]
    if m == 0:
        return np.zeros((0, rel.arity), dtype=np.int64)
    if m ** n > 50_000_000:
        raise BudgetExceeded(f"{m}^{n} column selections for a {rel.arity}-ary relation")
    chunks = [pts for _, pts in _point_blocks(members, n, rel.k)]
    return np.unique(np.concatenate(chunks), axis=0)


def preserving_mask(tables: np.ndarray, rel: Relation, n: int) -> np.ndarray:
    """Boolean mask over rows of ``tables`` (n-ary, all on E_k) preserving rel."""
    pts = _point_constraints(rel, n)
    pv = place_values(rel.k, rel.arity)
    ok = np.ones(tables.shape[0], dtype=bool)
    step = max(1, 4_000_000 // max(1, pts.shape[0] * rel.arity))
    for start in range(0, tables.shape[0], step):
        block = tables[start:start + step].astype(np.int64)
        vals = block[:, pts]  # (b, c, h)
        ok[start:start + step] = rel.bits[vals @ pv].all(axis=1)
    return ok


# ---------------------------------------------------------------------------
# separator search


@dataclass
class OpQuery:
    """Find an operation preserving every ``preserve`` relation and violating
    at least one ``violate`` relation."""

    preserve: list
    violate: list
    max_arity: int = 2
    budget: int = DEFAULT_SEARCH_BUDGET
    examined: int = field(default=0, compare=False)

    def __post_init__(self):
        if self.max_arity < 1:
            raise ValueError("max_arity must be >= 1")
        if self.budget <= 0:
            raise ValueError("budget must be positive")
        rels = list(self.preserve) + list(self.violate)
        if not self.violate:
            raise ValueError("violate set must be nonempty")
        ks = {r.k for r in rels}
        if len(ks) != 1:
            raise RelationError(f"relations live on different domains: {sorted(ks)}")


class _Constraints:
    """Point constraints of one relation grouped by their largest input rank."""

    def __init__(self, rel: Relation, n: int):
        self.rel = rel
        self.pv = place_values(rel.k, rel.arity)
        pts = _point_constraints(rel, n)
        width = rel.k ** n
        last = pts.max(axis=1) if pts.size else np.zeros(0, dtype=np.int64)
        self.by_last = [pts[last == i] for i in range(width)]

    def allowed_values(self, table: np.ndarray, pos: int, k: int) -> np.ndarray:
        pts = self.by_last[pos]
        if pts.shape[0] == 0:
            return np.ones(k, dtype=bool)
        vals = np.broadcast_to(table[pts], (k,) + pts.shape).copy()
        vals[:, pts == pos] = np.arange(k)[:, None]
        return self.rel.bits[vals @ self.pv].all(axis=1)

    def fails_at(self, table: np.ndarray, pos: int) -> bool:
        pts = self.by_last[pos]
        if pts.shape[0] == 0:
            return False
        return not bool(self.rel.bits[table[pts] @ self.pv].all())


def _search_unary_vectorised(query: OpQuery, k: int) -> Operation | None:
    tables = all_tables(k, 1)
    ok = np.ones(tables.shape[0], dtype=bool)
    for r in query.preserve:
        ok &= preserving_mask(tables, r, 1)
    bad = np.zeros(tables.shape[0], dtype=bool)
    for r in query.violate:
        bad |= ~preserving_mask(tables, r, 1)
    hits = np.flatnonzero(ok & bad)
    query.examined += tables.shape[0]
    if hits.size == 0:
        return None
    return Operation(Domain(k), 1, tables[hits[0]].astype(np.int64))


def _search_dfs(query: OpQuery, k: int, n: int) -> Operation | None:
    width = k ** n
    keep = [_Constraints(r, n) for r in query.preserve]
    viol = [_Constraints(r, n) for r in query.violate]
    table = np.zeros(width, dtype=np.int64)
    choices: list[np.ndarray] = [None] * width  # type: ignore[list-item]
    cursor = [0] * width
    # broken[p]: some violate-constraint fully inside positions 0..p fails
    broken = [False] * width
    pos = 0

    def options(p: int) -> np.ndarray:
        allowed = np.ones(k, dtype=bool)
        for c in keep:
            allowed &= c.allowed_values(table, p, k)
            if not allowed.any():
                break
        return np.flatnonzero(allowed)

    def breaks(p: int) -> bool:
        return any(c.fails_at(table, p) for c in viol)

    choices[0] = options(0)
    while pos >= 0:
        if cursor[pos] >= len(choices[pos]):
            pos -= 1
            if pos >= 0:
                cursor[pos] += 1
            continue
        table[pos] = choices[pos][cursor[pos]]
        query.examined += 1
        if query.examined > query.budget:
            raise SearchExhausted(n, query.examined)
        broken[pos] = (pos > 0 and broken[pos - 1]) or breaks(pos)
        if pos == width - 1:
            if broken[pos]:
                return Operation(Domain(k), n, table.copy())
            cursor[pos] += 1
            continue
        pos += 1
        choices[pos] = options(pos)
        cursor[pos] = 0
    return None


def find_separator(query: OpQuery) -> Operation | None:
    """First operation, by (arity, lexicographic table), satisfying the query.

    ``None`` means the bounded search space was exhausted without a hit; it is
    not a proof that no separator exists at higher arity.  Raises
    SearchExhausted when the node budget runs out inside an arity.
    """
    rels = list(query.preserve) + list(query.violate)
    k = rels[0].k
    for n in range(1, query.max_arity + 1):
        if n == 1 and k ** k <= 100_000:
            hit = _search_unary_vectorised(query, k)
        else:
            hit = _search_dfs(query, k, n)
        if hit is not None:
            return hit
    return None


# ---------------------------------------------------------------------------
# pattern operations


@dataclass(frozen=True, eq=False)
class PatternOperation:
    """q-ary operation sending N listed columns to given values and every
    other input to one default element.

    Stored sparsely so that wide gadgets (q in the dozens) stay usable.
    """

    k: int
    arity: int
    columns: np.ndarray  # (N, q)
    values: np.ndarray   # (N,)
    default: int

    def __post_init__(self):
        cols = np.asarray(self.columns, dtype=np.int64)
        vals = np.asarray(self.values, dtype=np.int64)
        if cols.ndim != 2 or cols.shape[1] != self.arity or cols.shape[0] != vals.shape[0]:
            raise RelationError("pattern columns/values have inconsistent shapes")
        if len({tuple(c) for c in cols.tolist()}) != cols.shape[0]:
            raise RelationError("pattern columns are not pairwise distinct")
        for arr in (cols, vals):
            if arr.size and (arr.min() < 0 or arr.max() >= self.k):
                raise RelationError(f"pattern entries outside E_{self.k}")
        if not 0 <= self.default < self.k:
            raise RelationError(f"default {self.default} outside E_{self.k}")
        cols.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "_lookup", {tuple(c): int(v) for c, v in zip(cols.tolist(), vals)})

    def __call__(self, *args: int) -> int:
        if len(args) != self.arity:
            raise RelationError(f"expected {self.arity} arguments, got {len(args)}")
        return self._lookup.get(tuple(int(a) for a in args), self.default)

    def to_operation(self, limit: int = 1 << 22) -> Operation:
        if self.k ** self.arity > limit:
            raise BudgetExceeded(f"table of size {self.k}^{self.arity} is too large")
        table = np.full(self.k ** self.arity, self.default, dtype=np.int64)
        table[self.columns @ place_values(self.k, self.arity)] = self.values
        return Operation(Domain(self.k), self.arity, table)

    def __repr__(self) -> str:
        return (f"PatternOperation(k={self.k}, arity={self.arity}, "
                f"special={self.columns.shape[0]}, default={self.default})")


def default_is_central(rel: Relation, c: int) -> bool:
    from .relcore import is_totally_symmetric
    if rel.arity == 1:
        return c in rel
    block = rel.bits.reshape(rel.k, -1)
    return bool(block[c].all()) and is_totally_symmetric(rel)


def pattern_preserves(f: PatternOperation, rel: Relation) -> bool:
    """Exact preservation test for a pattern operation.

    When the default is central in a totally symmetric rel, any argument
    matrix with a non-special column maps into rel, so only selections made
    entirely of special columns matter: N^h of them.  Otherwise fall back to
    the full table when it is small enough.
    """
    if f.k != rel.k:
        raise RelationError("domain mismatch")
    if not default_is_central(rel, f.default):
        return preserves(f.to_operation(), rel)
    n, h = f.columns.shape[0], rel.arity
    pv = place_values(rel.k, h)
    combos = all_tuples_idx(n, h)
    rows = f.columns[combos]  # (c, h, q)
    row_ok = rel.bits[np.einsum("chq,h->cq", rows, pv)].all(axis=1)
    active = combos[row_ok]
    return bool(rel.bits[f.values[active] @ pv].all())


def all_tuples_idx(n: int, h: int) -> np.ndarray:
    return np.indices((n,) * h).reshape(h, -1).T.astype(np.int64)


def holds(f, rel: Relation) -> bool:
    """preserves() for either a table operation or a pattern operation."""
    if isinstance(f, PatternOperation):
        return pattern_preserves(f, rel)
    return preserves(f, rel)
