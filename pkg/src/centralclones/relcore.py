"""Relations and operations on a finite domain E_k = {0, ..., k-1}.

Tuples are encoded by their row-major rank, first coordinate most
significant: ``rank(a_1, ..., a_h) = sum(a_i * k**(h - i))``.  Certificates
serialize ranks, so this encoding must never change.

A relation is a boolean membership vector of length ``k**h`` indexed by rank;
an operation is a value table of length ``k**n`` indexed the same way.
"""

from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)


class RelationError(ValueError):
    """Malformed relation or operation, or mismatched domain/arity."""


class ParseError(RelationError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class CentralityError(RelationError):
    """A relation failed one of the centrality conditions.

    ``reason`` is one of ``NotReflexive``, ``NotSymmetric``, ``EmptyCenter``,
    ``ImproperCenter``; ``witness`` is the first offending tuple or element.
    """

    def __init__(self, reason: str, witness, message: str):
        self.reason = reason
        self.witness = witness
        super().__init__(f"{reason}: {message}")


@lru_cache(maxsize=None)
def all_tuples(k: int, h: int) -> np.ndarray:
    """All of E_k^h as a ``(k**h, h)`` array in rank order (read-only)."""
    if h == 0:
        out = np.zeros((1, 0), dtype=np.int64)
    else:
        grids = np.indices((k,) * h).reshape(h, -1).T
        out = np.ascontiguousarray(grids, dtype=np.int64)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def place_values(k: int, h: int) -> np.ndarray:
    out = k ** np.arange(h - 1, -1, -1, dtype=np.int64)
    out.setflags(write=False)
    return out


def rank(t: Sequence[int], k: int) -> int:
    r = 0
    for a in t:
        r = r * k + int(a)
    return r


def decode(r: int, k: int, h: int) -> tuple[int, ...]:
    out = []
    for _ in range(h):
        r, a = divmod(r, k)
        out.append(a)
    return tuple(reversed(out))


def ranks_of(rows: np.ndarray, k: int) -> np.ndarray:
    """Vectorised rank of each row of an integer array (last axis = tuple)."""
    return rows @ place_values(k, rows.shape[-1])


@dataclass(frozen=True)
class Domain:
    k: int

    def __post_init__(self):
        if not isinstance(self.k, (int, np.integer)) or self.k < 2:
            raise RelationError(f"domain size must be an integer >= 2, got {self.k!r}")

    @property
    def elements(self) -> range:
        return range(self.k)

    def tuples(self, h: int) -> np.ndarray:
        return all_tuples(self.k, h)


def _as_domain(k) -> Domain:
    return k if isinstance(k, Domain) else Domain(int(k))


@dataclass(frozen=True, eq=False)
class Relation:
    """An h-ary relation on E_k stored as a membership bitset over tuple ranks."""

    domain: Domain
    arity: int
    bits: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.arity < 1:
            raise RelationError(f"arity must be >= 1, got {self.arity}")
        bits = np.asarray(self.bits, dtype=bool)
        if bits.shape != (self.domain.k ** self.arity,):
            raise RelationError(
                f"bitset length {bits.shape} does not match k^h = {self.domain.k ** self.arity}"
            )
        if bits.flags.writeable:
            bits = bits.copy()
            bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    # construction -----------------------------------------------------------
    @classmethod
    def from_tuples(cls, k, arity: int, tuples: Iterable[Sequence[int]]) -> "Relation":
        dom = _as_domain(k)
        bits = np.zeros(dom.k ** arity, dtype=bool)
        for t in tuples:
            t = tuple(int(a) for a in t)
            if len(t) != arity:
                raise RelationError(f"tuple {t} has length {len(t)}, expected {arity}")
            if any(a < 0 or a >= dom.k for a in t):
                raise RelationError(f"entry out of range in {t} for k={dom.k}")
            bits[rank(t, dom.k)] = True
        return cls(dom, arity, bits)

    @classmethod
    def from_predicate(cls, k, arity: int, pred) -> "Relation":
        dom = _as_domain(k)
        bits = np.fromiter((bool(pred(tuple(t))) for t in dom.tuples(arity).tolist()),
                           dtype=bool, count=dom.k ** arity)
        return cls(dom, arity, bits)

    @classmethod
    def full(cls, k, arity: int) -> "Relation":
        dom = _as_domain(k)
        return cls(dom, arity, np.ones(dom.k ** arity, dtype=bool))

    @classmethod
    def empty(cls, k, arity: int) -> "Relation":
        dom = _as_domain(k)
        return cls(dom, arity, np.zeros(dom.k ** arity, dtype=bool))

    @classmethod
    def unary(cls, k, members: Iterable[int]) -> "Relation":
        return cls.from_tuples(k, 1, [(a,) for a in members])

    # views ------------------------------------------------------------------
    @property
    def k(self) -> int:
        return self.domain.k

    @property
    def ranks(self) -> np.ndarray:
        return np.flatnonzero(self.bits)

    @property
    def member_array(self) -> np.ndarray:
        """Members as a ``(|rel|, h)`` array in rank order."""
        return self.domain.tuples(self.arity)[self.bits]

    def tuples(self) -> list[tuple[int, ...]]:
        return [tuple(t) for t in self.member_array.tolist()]

    def elements(self) -> frozenset[int]:
        """Member set of a unary relation."""
        if self.arity != 1:
            raise RelationError("elements() is only defined for unary relations")
        return frozenset(int(r) for r in self.ranks)

    def __contains__(self, t) -> bool:
        if isinstance(t, (int, np.integer)):
            t = (int(t),)
        t = tuple(t)
        if len(t) != self.arity or any(a < 0 or a >= self.k for a in t):
            return False
        return bool(self.bits[rank(t, self.k)])

    def __len__(self) -> int:
        return int(self.bits.sum())

    def __iter__(self):
        return iter(self.tuples())

    def __eq__(self, other) -> bool:
        if not isinstance(other, Relation):
            return NotImplemented
        return (self.k == other.k and self.arity == other.arity
                and bool(np.array_equal(self.bits, other.bits)))

    def __hash__(self) -> int:
        return hash((self.k, self.arity, self.bits.tobytes()))

    def __repr__(self) -> str:
        shown = self.tuples()
        body = ", ".join("".join(map(str, t)) for t in shown[:12])
        if len(shown) > 12:
            body += ", ..."
        return f"Relation(k={self.k}, arity={self.arity}, |R|={len(shown)}: {body})"

    def is_full(self) -> bool:
        return bool(self.bits.all())

    def is_empty(self) -> bool:
        return not self.bits.any()

    def _check_compatible(self, other: "Relation") -> None:
        if self.k != other.k:
            raise RelationError(f"domain mismatch: k={self.k} vs k={other.k}")
        if self.arity != other.arity:
            raise RelationError(f"arity mismatch: {self.arity} vs {other.arity}")

    def __and__(self, other: "Relation") -> "Relation":
        return intersect(self, other)

    def __or__(self, other: "Relation") -> "Relation":
        self._check_compatible(other)
        return Relation(self.domain, self.arity, self.bits | other.bits)

    def __sub__(self, other: "Relation") -> "Relation":
        self._check_compatible(other)
        return Relation(self.domain, self.arity, self.bits & ~other.bits)

    def issubset(self, other: "Relation") -> bool:
        self._check_compatible(other)
        return not bool((self.bits & ~other.bits).any())


@dataclass(frozen=True, eq=False)
class Operation:
    """An n-ary operation on E_k given by its value table in rank order."""

    domain: Domain
    arity: int
    table: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.arity < 1:
            raise RelationError(f"operation arity must be >= 1, got {self.arity}")
        table = np.asarray(self.table, dtype=np.int64)
        if table.shape != (self.domain.k ** self.arity,):
            raise RelationError(
                f"table length {table.shape} does not match k^n = {self.domain.k ** self.arity}"
            )
        if table.size and (table.min() < 0 or table.max() >= self.domain.k):
            raise RelationError(f"table entries must lie in [0, {self.domain.k})")
        if table.flags.writeable:
            table = table.copy()
            table.setflags(write=False)
        object.__setattr__(self, "table", table)

    @classmethod
    def from_table(cls, k, table: Sequence[int]) -> "Operation":
        dom = _as_domain(k)
        n = len(table)
        arity = 0
        while dom.k ** arity < n:
            arity += 1
        if dom.k ** arity != n:
            raise RelationError(f"table length {n} is not a power of k={dom.k}")
        return cls(dom, arity, np.asarray(table, dtype=np.int64))

    @classmethod
    def from_function(cls, k, arity: int, fn) -> "Operation":
        dom = _as_domain(k)
        table = [fn(*t) for t in dom.tuples(arity).tolist()]
        return cls(dom, arity, np.asarray(table, dtype=np.int64))

    @property
    def k(self) -> int:
        return self.domain.k

    def __call__(self, *args: int) -> int:
        if len(args) != self.arity:
            raise RelationError(f"expected {self.arity} arguments, got {len(args)}")
        return int(self.table[rank(args, self.k)])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Operation):
            return NotImplemented
        return (self.k == other.k and self.arity == other.arity
                and bool(np.array_equal(self.table, other.table)))

    def __hash__(self) -> int:
        return hash((self.k, self.arity, self.table.tobytes()))

    def __repr__(self) -> str:
        return f"Operation(k={self.k}, arity={self.arity}, table={self.table.tolist()})"

    def key(self) -> tuple[int, ...]:
        return tuple(self.table.tolist())


# ---------------------------------------------------------------------------
# diagonal, totality, centers


def diagonal(k, h: int) -> Relation:
    """iota_k^h: all h-tuples with at least one repeated coordinate."""
    dom = _as_domain(k)
    if h < 2:
        raise RelationError(f"the diagonal relation needs arity >= 2, got {h}")
    t = dom.tuples(h)
    s = np.sort(t, axis=1)
    return Relation(dom, h, (s[:, 1:] == s[:, :-1]).any(axis=1))


def is_totally_reflexive(rel: Relation) -> bool:
    if rel.arity == 1:
        return True
    return diagonal(rel.domain, rel.arity).issubset(rel)


def _first_nonreflexive(rel: Relation):
    if rel.arity == 1:
        return None
    missing = diagonal(rel.domain, rel.arity).bits & ~rel.bits
    idx = np.flatnonzero(missing)
    return decode(int(idx[0]), rel.k, rel.arity) if idx.size else None


def _permuted_ranks(k: int, h: int, perm: Sequence[int]) -> np.ndarray:
    return ranks_of(all_tuples(k, h)[:, list(perm)], k)


def _first_nonsymmetric(rel: Relation):
    if rel.arity == 1:
        return None
    # adjacent transpositions generate S_h
    for i in range(rel.arity - 1):
        perm = list(range(rel.arity))
        perm[i], perm[i + 1] = perm[i + 1], perm[i]
        image = rel.bits[_permuted_ranks(rel.k, rel.arity, perm)]
        bad = np.flatnonzero(rel.bits & ~image)
        if bad.size:
            return decode(int(bad[0]), rel.k, rel.arity)
    return None


def is_totally_symmetric(rel: Relation) -> bool:
    return _first_nonsymmetric(rel) is None


def center(rel: Relation) -> frozenset[int]:
    """Elements a with (a, a_2, ..., a_h) in rel for every completion."""
    if rel.arity == 1:
        return rel.elements()
    block = rel.bits.reshape(rel.k, -1)
    return frozenset(int(a) for a in np.flatnonzero(block.all(axis=1)))


@dataclass(frozen=True, eq=False)
class CentralRelation:
    """A relation validated as central, with its center cached."""

    rel: Relation
    center: frozenset[int]
    _chains: list = field(default_factory=list, repr=False, compare=False)

    @property
    def arity(self) -> int:
        return self.rel.arity

    @property
    def k(self) -> int:
        return self.rel.k

    @property
    def domain(self) -> Domain:
        return self.rel.domain

    @property
    def maximal_chains(self) -> list[frozenset[int]]:
        if not self._chains:
            self._chains.extend(maximal_chains(self))
        return list(self._chains)

    def __eq__(self, other) -> bool:
        if isinstance(other, CentralRelation):
            return self.rel == other.rel
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.rel)

    def __repr__(self) -> str:
        return f"CentralRelation({self.rel!r}, center={sorted(self.center)})"


def validate_central(rel: Relation) -> CentralRelation:
    if isinstance(rel, CentralRelation):
        return rel
    bad = _first_nonreflexive(rel)
    if bad is not None:
        raise CentralityError("NotReflexive", bad, f"diagonal tuple {bad} is missing")
    bad = _first_nonsymmetric(rel)
    if bad is not None:
        raise CentralityError("NotSymmetric", bad,
                              f"{bad} is a member but a coordinate permutation of it is not")
    c = center(rel)
    if not c:
        if rel.arity == 1:
            raise CentralityError("EmptyCenter", None, "unary relation is empty")
        # first element together with a completion that leaves rel
        a = 0
        row = np.flatnonzero(~rel.bits.reshape(rel.k, -1)[a])
        tail = decode(int(row[0]), rel.k, rel.arity - 1)
        raise CentralityError("EmptyCenter", a,
                              f"no central element; e.g. {(a,) + tail} is not a member")
    if len(c) == rel.k:
        raise CentralityError("ImproperCenter", 0, "center is all of E_k (relation is full)")
    return CentralRelation(rel, c)


# ---------------------------------------------------------------------------
# chains


def is_chain(rel: Relation, block: Iterable[int]) -> bool:
    """B^h subset of rel, checked on rainbow tuples (rel totally reflexive/symmetric)."""
    block = sorted(set(block))
    if len(block) < rel.arity:
        return True
    return all(t in rel for t in itertools.combinations(block, rel.arity))


def maximal_chains(central: CentralRelation) -> list[frozenset[int]]:
    """All inclusion-maximal B with B^h contained in the relation.

    Backtracking in the style of Bron-Kerbosch over the h-uniform hypergraph
    whose edges are the rainbow member h-sets: a candidate v may join B when
    every h-subset of B + {v} containing v is an edge.
    """
    rel = central.rel
    h, k = rel.arity, rel.k
    if h == 1:
        return [frozenset(rel.elements())]
    found: list[frozenset[int]] = []

    def compatible(block: list[int], v: int) -> bool:
        if len(block) < h - 1:
            return True
        for sub in itertools.combinations(block, h - 1):
            if tuple(sorted(sub + (v,))) not in rel:
                return False
        return True

    # Being a chain is hereditary, so candidates + excluded always hold
    # exactly the elements that could still extend the current block.
    def expand(block: list[int], candidates: list[int], excluded: list[int]):
        if not candidates and not excluded:
            found.append(frozenset(block))
            return
        candidates = list(candidates)
        excluded = list(excluded)
        while candidates:
            v = candidates.pop(0)
            nb = block + [v]
            expand(nb,
                   [w for w in candidates if compatible(nb, w)],
                   [w for w in excluded if compatible(nb, w)])
            excluded.append(v)

    expand([], list(range(k)), [])
    return sorted(set(found), key=lambda b: (-len(b), sorted(b)))


# ---------------------------------------------------------------------------
# set algebra


class Comparison(Enum):
    EQUAL = "Equal"
    LEFT_STRICT = "LeftStrict"  # left is a proper subset of right
    RIGHT_STRICT = "RightStrict"  # right is a proper subset of left
    INCOMPARABLE = "Incomparable"


def intersect(a: Relation, b: Relation) -> Relation:
    a._check_compatible(b)
    return Relation(a.domain, a.arity, a.bits & b.bits)


def compare(a: Relation, b: Relation) -> Comparison:
    a._check_compatible(b)
    a_in_b = a.issubset(b)
    b_in_a = b.issubset(a)
    if a_in_b and b_in_a:
        return Comparison.EQUAL
    if a_in_b:
        return Comparison.LEFT_STRICT
    if b_in_a:
        return Comparison.RIGHT_STRICT
    return Comparison.INCOMPARABLE


# ---------------------------------------------------------------------------
# text / JSON formats


def write_relation(rel: Relation) -> str:
    lines = [f"k={rel.k}", f"arity={rel.arity}"]
    lines += [" ".join(map(str, t)) for t in rel.tuples()]
    return "\n".join(lines)


def relation_to_json(rel: Relation) -> dict:
    return {"k": rel.k, "arity": rel.arity, "tuples": [list(t) for t in rel.tuples()]}


def relation_from_json(obj: dict) -> Relation:
    try:
        k, h, tuples = int(obj["k"]), int(obj["arity"]), obj["tuples"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad relation JSON: {exc}") from exc
    if k < 2 or h < 1:
        raise ParseError(f"bad header k={k} arity={h}")
    for t in tuples:
        if len(t) != h:
            raise ParseError(f"tuple {t} has length {len(t)}, expected arity {h}")
        if any(int(a) < 0 or int(a) >= k for a in t):
            raise ParseError(f"entry out of range in {t}")
    return Relation.from_tuples(k, h, tuples)


def _header(line: str, key: str, lineno: int) -> int:
    name, sep, value = line.partition("=")
    if not sep or name.strip() != key:
        raise ParseError(f"expected '{key}=<int>' header, got {line!r}", lineno)
    try:
        return int(value.strip())
    except ValueError:
        raise ParseError(f"header {key} is not an integer: {value.strip()!r}", lineno) from None


def read_relation(text: str) -> Relation:
    """Parse the line format (or its JSON alternative) into a Relation."""
    if text.lstrip().startswith("{"):
        try:
            return relation_from_json(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno) from exc
    k = h = None
    tuples: list[tuple[int, ...]] = []
    seen: set[tuple[int, ...]] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if k is None:
            k = _header(line, "k", lineno)
            if k < 2:
                raise ParseError(f"k must be >= 2, got {k}", lineno)
            continue
        if h is None:
            h = _header(line, "arity", lineno)
            if h < 1:
                raise ParseError(f"arity must be >= 1, got {h}", lineno)
            continue
        try:
            t = tuple(int(x) for x in line.split())
        except ValueError:
            raise ParseError(f"non-integer entry in {line!r}", lineno) from None
        if len(t) != h:
            raise ParseError(f"tuple has {len(t)} entries, expected {h}", lineno)
        if any(a < 0 or a >= k for a in t):
            raise ParseError(f"entry out of range for k={k}: {line!r}", lineno)
        if t in seen:
            log.debug("duplicate tuple %s on line %d ignored", t, lineno)
            continue
        seen.add(t)
        tuples.append(t)
    if k is None or h is None:
        raise ParseError("missing k=/arity= header")
    return Relation.from_tuples(k, h, tuples)


def write_operation(op: Operation) -> str:
    return f"k={op.k} arity={op.arity} table={' '.join(map(str, op.table.tolist()))}"


def read_operation(text: str) -> Operation:
    fields = {}
    body = text.strip()
    if "table=" not in body:
        raise ParseError("operation text needs k=, arity= and table= fields")
    head, _, table = body.partition("table=")
    for part in head.split():
        name, sep, value = part.partition("=")
        if not sep:
            raise ParseError(f"bad field {part!r}")
        fields[name] = value
    try:
        k = int(fields["k"])
        n = int(fields["arity"])
        values = [int(x) for x in table.split()]
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad operation text: {exc}") from exc
    if k < 2 or n < 1:
        raise ParseError(f"bad header k={k} arity={n}")
    if len(values) != k ** n:
        raise ParseError(f"table has {len(values)} values, expected {k ** n}")
    if any(v < 0 or v >= k for v in values):
        raise ParseError("table entry out of range")
    return Operation(Domain(k), n, np.asarray(values, dtype=np.int64))
