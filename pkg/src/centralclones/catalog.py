"""Enumeration of totally reflexive, totally symmetric relations on small domains."""

from __future__ import annotations

import hashlib
import itertools

import numpy as np

from .relcore import (CentralityError, CentralRelation, Domain, Relation, RelationError,
                      all_tuples, diagonal, validate_central, write_relation)


def _rainbow_sets(k: int, h: int) -> list[frozenset[int]]:
    return [frozenset(c) for c in itertools.combinations(range(k), h)]


def symmetric_reflexive(k: int, arity: int) -> list[Relation]:
    """All totally reflexive, totally symmetric relations, in canonical order.

    For arity 1 these are all subsets of E_k.  For arity >= 2 each such
    relation is the diagonal part plus the orbits of a family of h-subsets;
    the family is read off the bits of a counter, so order is deterministic.
    """
    dom = Domain(k)
    if arity < 1:
        raise RelationError("arity must be >= 1")
    if arity == 1:
        return [Relation.unary(dom, [a for a in range(k) if mask >> a & 1])
                for mask in range(1 << k)]
    if arity > k:
        return [diagonal(dom, arity)]
    base = diagonal(dom, arity).bits
    tuples = all_tuples(k, arity)
    support = [frozenset(row) for row in tuples.tolist()]
    blocks = _rainbow_sets(k, arity)
    where = [np.array([s == b for s in support]) for b in blocks]
    out = []
    for mask in range(1 << len(blocks)):
        bits = base.copy()
        for i, w in enumerate(where):
            if mask >> i & 1:
                bits |= w
        out.append(Relation(dom, arity, bits))
    return out


def central_relations(k: int, arity: int) -> list[CentralRelation]:
    out = []
    for rel in symmetric_reflexive(k, arity):
        try:
            out.append(validate_central(rel))
        except CentralityError:
            pass
    return out


def permute(rel: Relation, perm) -> Relation:
    """Image of rel under the element permutation a -> perm[a]."""
    perm = np.asarray(perm, dtype=np.int64)
    members = perm[rel.member_array]
    return Relation.from_tuples(rel.k, rel.arity, members.tolist())


def canonical_key(rel: Relation) -> bytes:
    return rel.bits.tobytes()


def dedup_isomorphic(rels):
    """Keep one representative per S_k orbit: the member whose bitset is
    lexicographically least within its orbit."""
    seen = set()
    out = []
    for r in rels:
        plain = r.rel if isinstance(r, CentralRelation) else r
        orbit = [canonical_key(permute(plain, p)) for p in itertools.permutations(range(plain.k))]
        rep = min(orbit)
        if rep in seen:
            continue
        seen.add(rep)
        if canonical_key(plain) == rep:
            out.append(r)
        else:
            # the least member of the orbit is the representative
            best = min((permute(plain, p) for p in itertools.permutations(range(plain.k))),
                       key=canonical_key)
            out.append(validate_central(best) if isinstance(r, CentralRelation) else best)
    return out


def enumerate_relations(k: int, arity: int, central: bool = False, dedup_iso: bool = False):
    if not (2 <= k <= 4 and 1 <= arity <= 3):
        raise RelationError("enumeration supports 2 <= k <= 4 and 1 <= arity <= 3")
    rels = central_relations(k, arity) if central else symmetric_reflexive(k, arity)
    if dedup_iso:
        rels = dedup_isomorphic(rels)
    return rels


def relation_id(rel) -> str:
    """sha256 of the canonical text serialization."""
    plain = rel.rel if isinstance(rel, CentralRelation) else rel
    return hashlib.sha256(write_relation(plain).encode()).hexdigest()
