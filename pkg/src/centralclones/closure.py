"""Clone generation restricted to arities <= n.

The n-ary part of the clone generated by F is the set of n-variable term
operations, and every such term is a generator applied to n-ary terms.  So
for generators of arity <= n the fixpoint below is the exact n-ary part of
<F>; what a bounded computation cannot see is the effect of generators of
higher arity, which is why saturation reports are labelled as evidence only.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .polycheck import BudgetExceeded, all_tables, preserving_mask, projection
from .relcore import Domain, Operation, Relation, RelationError

CAVEAT = ("consistency evidence only: the closure is computed from polymorphisms of "
          "arity <= max_arity, so compositions through higher-arity polymorphisms are "
          "not represented; a negative answer does not refute maximality")

DEFAULT_CLOSURE_BUDGET = 10 ** 9
_BLOCK = 1 << 22
_BITMAP = 1 << 26
# watermarks advance this many members at a time so new members feed back early
_STEP = 256
_SAMPLE = 1 << 15
_TARGETED = 1 << 10


def _check_size(k: int, n: int) -> None:
    if n < 1:
        raise RelationError("arity must be >= 1")
    if k ** n * math.log2(k) > 62:
        raise BudgetExceeded(f"{n}-ary operations on E_{k} cannot be indexed")


def _codes(tables: np.ndarray, k: int) -> np.ndarray:
    w = k ** np.arange(tables.shape[1] - 1, -1, -1, dtype=np.int64)
    return tables.astype(np.int64) @ w


class _Level:
    """Members of one arity plus the generator watermarks."""

    def __init__(self, k: int, n: int):
        self.k, self.n = k, n
        self.size = k ** n
        self.total = k ** self.size
        self.tables = np.zeros((0, self.size), dtype=np.int8)
        self.bitmap = np.zeros(self.total, dtype=bool) if self.total <= _BITMAP else None
        self.seen: set[int] = set()
        self.count = 0
        self.probed = 0
        self.marks: list[int] = []

    def add(self, rows: np.ndarray) -> int:
        if not rows.size:
            return 0
        codes, first = np.unique(_codes(rows, self.k), return_index=True)
        if self.bitmap is not None:
            keep = ~self.bitmap[codes]
            self.bitmap[codes[keep]] = True
        else:
            keep = np.array([c not in self.seen for c in codes.tolist()], dtype=bool)
            self.seen.update(codes[keep].tolist())
        fresh = np.sort(first[keep])
        if fresh.size:
            self.tables = np.vstack([self.tables, rows[fresh].astype(np.int8)])
            self.count += int(fresh.size)
        return int(fresh.size)

    def has(self, table: np.ndarray) -> bool:
        code = int(_codes(np.asarray(table)[None, :], self.k)[0])
        if self.bitmap is not None:
            return bool(self.bitmap[code])
        return code in self.seen

    @property
    def full(self) -> bool:
        return self.count == self.total


def _compose_block(gen: np.ndarray, k: int, args: list[np.ndarray]) -> np.ndarray:
    idx = np.zeros(args[-1].shape, dtype=np.int64)
    for a in args:
        idx = idx * k + a
    return gen[idx]


class _Closer:
    """Incremental fixpoint over all arities 1..max_arity.

    For every level, generator j has already been applied to every argument
    tuple drawn from tables[:marks[j]]; marks advance in steps of _STEP.
    """

    def __init__(self, k: int, max_arity: int, budget: int):
        self.k, self.max_arity, self.budget = k, max_arity, budget
        self.used = 0
        self.gens: list[Operation] = []
        self.levels = {}
        self.ceiling: dict[int, int] = {}
        self.rng = np.random.default_rng(0)
        for n in range(1, max_arity + 1):
            _check_size(k, n)
            lv = _Level(k, n)
            lv.add(np.stack([projection(k, n, i).table for i in range(1, n + 1)]))
            self.levels[n] = lv

    def add_members(self, n: int, tables: np.ndarray, processed: bool) -> None:
        """Insert members; with ``processed`` the caller vouches that the
        current generators already map tuples of them into the set."""
        lv = self.levels[n]
        lv.add(np.asarray(tables))
        if processed:
            lv.marks = [len(lv.tables)] * len(self.gens)

    def add_generator(self, g: Operation) -> None:
        if g.k != self.k:
            raise RelationError("generators live on different domains")
        if g.arity > self.max_arity:
            raise RelationError(f"generator of arity {g.arity} exceeds max_arity {self.max_arity}")
        self.gens.append(g)
        for lv in self.levels.values():
            lv.marks.append(0)

    def _done(self, lv: _Level) -> bool:
        return lv.full or lv.count == self.ceiling.get(lv.n, -1)

    def run(self) -> bool:
        for n in sorted(self.levels):
            if not self._run_level(self.levels[n]):
                return False
        return True

    def _finish(self, level: _Level) -> bool:
        level.marks = [len(level.tables)] * len(self.gens)
        return True

    def _run_level(self, level: _Level) -> bool:
        k = self.k
        if self._done(level):
            return self._finish(level)
        while True:
            progressed = False
            for j, g in enumerate(self.gens):
                lo = level.marks[j]
                hi = min(len(level.tables), lo + _STEP)
                if lo == hi:
                    continue
                progressed = True
                a = g.arity
                T = level.tables.astype(np.int64)
                # tuples in T[:hi]^a not in T[:lo]^a, split by the first new position
                for p in range(a):
                    ranges = [(0, lo)] * p + [(lo, hi)] + [(0, hi)] * (a - p - 1)
                    if any(r1 <= r0 for r0, r1 in ranges):
                        continue
                    count = math.prod(r1 - r0 for r0, r1 in ranges)
                    if self.used + count > self.budget:
                        return False
                    self.used += count
                    if a == 1:
                        level.add(g.table[T[lo:hi]])
                        continue
                    last = ranges[-1]
                    outer = [range(r0, r1) for r0, r1 in ranges[:-2]]
                    for head in itertools.product(*outer):
                        base = [T[i][None, None, :] for i in head]
                        r0, r1 = ranges[-2]
                        width = last[1] - last[0]
                        step = max(1, _BLOCK // max(1, width * level.size))
                        for s in range(r0, r1, step):
                            left = T[s:min(s + step, r1)][:, None, :]
                            right = T[last[0]:last[1]][None, :, :]
                            left, right = np.broadcast_arrays(left, right)
                            out = _compose_block(g.table, k, base + [left, right])
                            level.add(out.reshape(-1, level.size))
                            if self._done(level):
                                return self._finish(level)
                level.marks[j] = hi
                if len(level.tables) != level.probed:
                    level.probed = len(level.tables)
                    if (_shortcut(level, self.rng) or _targeted(level, self.gens)
                            or self._done(level)):
                        return self._finish(level)
            if not progressed:
                return True

    def result(self, finished: bool) -> "BoundedClone":
        members = {}
        for n, lv in self.levels.items():
            order = np.argsort(_codes(lv.tables, self.k), kind="stable")
            members[n] = lv.tables[order]
        return BoundedClone(self.k, self.max_arity, members, list(self.gens), finished, self.used)


def _shortcut(level: _Level, rng) -> bool:
    """Compose random members with random members (sound, since members are
    term operations); only speeds up discovery.  True once everything is in."""
    n, k = level.n, level.k
    while len(level.tables) >= 2 and not level.full:
        T = level.tables.astype(np.int64)
        pick = rng.integers(len(T), size=(_SAMPLE, n + 1))
        idx = np.zeros((_SAMPLE, level.size), dtype=np.int64)
        for i in range(1, n + 1):
            idx = idx * k + T[pick[:, i]]
        if not level.add(np.take_along_axis(T[pick[:, 0]], idx, axis=1)):
            break
    return level.full


def _targeted(level: _Level, gens: list[Operation]) -> bool:
    """Exact test for the few remaining operations when the level is nearly
    complete.  X = g(t1, t2) needs t2 with g(t1[x], t2[x]) = X[x] at every
    point x; if more such t2 exist than there are non-members, one of them is
    a member, so X belongs.  Small candidate sets are checked one by one."""
    if level.bitmap is None or level.total - level.count > _TARGETED:
        return level.full
    k, size = level.k, level.size
    T = level.tables.astype(np.int64)
    digits = k ** np.arange(size - 1, -1, -1, dtype=np.int64)
    changed = True
    while changed and not level.full:
        changed = False
        missing = np.flatnonzero(~level.bitmap)
        gap = len(missing)
        for code in missing.tolist():
            X = (code // digits) % k
            for g in gens:
                if g.arity == 1:
                    ok = g.table[np.arange(k)][None, :] == X[:, None]  # (size, k)
                    rows = ok[None]
                elif g.arity == 2:
                    G = g.table.reshape(k, k)
                    rows = G[T] == X[None, :, None]  # (|T|, size, k)
                else:
                    continue
                counts = rows.sum(axis=2)
                live = counts.min(axis=1) > 0
                if not live.any():
                    continue
                logs = np.log(np.where(live[:, None], counts, 1)).sum(axis=1)
                if (live & (logs > np.log(gap) + 1e-9)).any():
                    found = True
                else:
                    found = False
                    for r in np.flatnonzero(live)[:256]:
                        choices = [np.flatnonzero(rows[r, x]).tolist() for x in range(size)]
                        for cand in itertools.product(*choices):
                            if level.bitmap[int(np.dot(cand, digits))]:
                                found = True
                                break
                        if found:
                            break
                if found:
                    level.add(X[None, :])
                    changed = True
                    break
    return level.full


@dataclass
class BoundedClone:
    k: int
    max_arity: int
    members: dict[int, np.ndarray]
    generators: list[Operation] = field(default_factory=list)
    fixpoint: bool = True
    compositions: int = 0

    def count(self, n: int) -> int:
        return int(self.members[n].shape[0])

    def operations(self, n: int) -> list[Operation]:
        return [Operation(Domain(self.k), n, t) for t in self.members[n]]

    def codes(self, n: int) -> set[int]:
        return set(_codes(self.members[n], self.k).tolist())

    def __contains__(self, f: Operation) -> bool:
        if f.k != self.k or f.arity not in self.members:
            return False
        return int(_codes(f.table[None, :], self.k)[0]) in self.codes(f.arity)

    def issubset(self, other: "BoundedClone") -> bool:
        return all(self.codes(n) <= other.codes(n) for n in self.members)

    def stats(self) -> dict:
        return {"k": self.k, "max_arity": self.max_arity, "fixpoint": self.fixpoint,
                "compositions": self.compositions,
                "counts": {str(n): self.count(n) for n in sorted(self.members)}}


def bounded_closure(gens, max_arity: int, budget: int = DEFAULT_CLOSURE_BUDGET,
                    k: int | None = None) -> BoundedClone:
    """Least set of operations of arity <= max_arity containing the
    projections and closed under applying generators.  When the budget (a
    count of argument tuples tried) runs out the result is marked
    ``fixpoint=False``."""
    gens = list(gens)
    if k is None:
        if not gens:
            raise RelationError("domain size needed when there are no generators")
        k = gens[0].k
    for g in gens:
        if g.k != k:
            raise RelationError("generators live on different domains")
        if g.arity > max_arity:
            raise RelationError(f"generator of arity {g.arity} exceeds max_arity {max_arity}")
    closer = _Closer(k, max_arity, budget)
    for g in gens:
        closer.add_generator(g)
    return closer.result(closer.run())


def bounded_pol(rels, max_arity: int) -> BoundedClone:
    """Every operation of arity <= max_arity preserving all relations."""
    rels = list(rels)
    if not rels:
        raise RelationError("need at least one relation")
    k = rels[0].k
    members = {}
    for n in range(1, max_arity + 1):
        _check_size(k, n)
        tables = all_tables(k, n)
        mask = np.ones(tables.shape[0], dtype=bool)
        for r in rels:
            if r.k != k:
                raise RelationError("relations live on different domains")
            mask &= preserving_mask(tables, r, n)
        members[n] = tables[mask].astype(np.int8)
    return BoundedClone(k, max_arity, members, [], True, 0)


@dataclass
class SaturationRow:
    gap_member: Operation
    reaches_top: bool
    counts: dict


@dataclass
class SaturationReport:
    max_arity: int
    base_counts: dict
    top_counts: dict
    rows: list[SaturationRow]
    caveat: str = CAVEAT

    @property
    def all_saturate(self) -> bool:
        return all(r.reaches_top for r in self.rows)

    def to_json(self) -> dict:
        return {"max_arity": self.max_arity, "base_counts": self.base_counts,
                "top_counts": self.top_counts, "caveat": self.caveat,
                "all_saturate": self.all_saturate,
                "rows": [{"g": r.gap_member.table.tolist(), "arity": r.gap_member.arity,
                          "reaches_top": r.reaches_top, "counts": r.counts} for r in self.rows]}


def _generating_subset(clone: BoundedClone, budget: int) -> list[Operation]:
    """Greedy generating set: walk members in code order, keep those not yet generated."""
    closer = _Closer(clone.k, clone.max_arity, budget)
    for n in sorted(clone.members):
        for f in clone.operations(n):
            lv = closer.levels[n]
            if lv.has(f.table):
                continue
            closer.add_generator(f)
            if not closer.run():
                raise BudgetExceeded("closure budget exhausted while reducing generators")
    return closer.gens


def saturation_probe(rho: Relation, sigma: Relation, max_arity: int = 1,
                     budget: int = DEFAULT_CLOSURE_BUDGET) -> SaturationReport:
    """For each gap operation (arity <= min(2, max_arity)) preserving rho but
    not sigma, test whether adding it to the bounded Pol{rho, sigma} reaches
    the bounded Pol rho.  Evidence only, see CAVEAT."""
    base = bounded_pol([rho, sigma], max_arity)
    top = bounded_pol([rho], max_arity)
    seeds = _generating_subset(base, budget)
    rows = []
    for n in range(1, min(2, max_arity) + 1):
        base_codes = base.codes(n)
        for f in top.operations(n):
            if int(_codes(f.table[None, :], f.k)[0]) in base_codes:
                continue
            closer = _Closer(rho.k, max_arity, budget)
            for g in seeds:
                closer.add_generator(g)
            for m in sorted(base.members):
                closer.add_members(m, base.members[m], processed=True)
            closer.ceiling = {m: top.count(m) for m in top.members}
            closer.add_generator(f)
            clone = closer.result(closer.run())
            rows.append(SaturationRow(f, clone.fixpoint and top.issubset(clone),
                                      clone.stats()["counts"]))
    return SaturationReport(max_arity, base.stats()["counts"], top.stats()["counts"], rows)
