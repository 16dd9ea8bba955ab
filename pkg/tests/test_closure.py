import numpy as np
import pytest

from centralclones.closure import (CAVEAT, bounded_closure, bounded_pol, saturation_probe)
from centralclones.polycheck import constant, projection
from centralclones.relcore import Operation, Relation, RelationError
from conftest import star, unary
from oracles import naive_closure, unary_pol


def tables(clone, n):
    return {tuple(int(x) for x in t) for t in clone.members[n]}


def test_projections_only():
    c = bounded_closure([], 2, k=3)
    assert c.stats()["counts"] == {"1": 1, "2": 2}
    assert tables(c, 2) == {tuple(projection(3, 2, i).table.tolist()) for i in (1, 2)}


def test_constant_generator():
    c = bounded_closure([constant(3, 0)], 1)
    assert tables(c, 1) == {(0, 1, 2), (0, 0, 0)}


@pytest.mark.parametrize("seed", range(6))
def test_matches_naive_closure_boolean(seed):
    rng = np.random.default_rng(seed)
    gens = [Operation.from_table(2, rng.integers(0, 2, 4).tolist()) for _ in range(2)]
    c = bounded_closure(gens, 2)
    naive = naive_closure(2, [(2, tuple(g.table.tolist())) for g in gens], 2)
    assert tables(c, 2) == naive
    naive1 = naive_closure(2, [(2, tuple(g.table.tolist())) for g in gens], 1)
    assert tables(c, 1) == naive1


@pytest.mark.parametrize("seed", range(6))
def test_matches_naive_closure_unary_e3(seed):
    rng = np.random.default_rng(100 + seed)
    gens = [Operation.from_table(3, rng.integers(0, 3, 3).tolist()) for _ in range(2)]
    c = bounded_closure(gens, 2)
    for n in (1, 2):
        assert tables(c, n) == naive_closure(3, [(1, tuple(g.table.tolist())) for g in gens], n)


def test_monotone_in_generators():
    a = [Operation.from_table(3, [2, 2, 0, 2, 1, 1, 1, 0, 2])]
    b = a + [Operation.from_table(3, [1, 2, 0])]
    assert bounded_closure(a, 2).issubset(bounded_closure(b, 2))


def test_budget_marks_partial_result():
    rng = np.random.default_rng(0)
    gens = [Operation.from_table(3, rng.integers(0, 3, 9).tolist()) for _ in range(3)]
    c = bounded_closure(gens, 2, budget=10)
    assert not c.fixpoint


def test_generator_arity_checked():
    with pytest.raises(RelationError):
        bounded_closure([Operation.from_table(3, [0] * 9)], 1)
    with pytest.raises(RelationError):
        bounded_closure([], 2)


def test_bounded_pol():
    assert bounded_pol([Relation.full(3, 2)], 1).count(1) == 27
    rho, sigma = star(3, 0), unary(3, 0)
    got = tables(bounded_pol([rho, sigma], 1), 1)
    assert got == unary_pol(3, [rho, sigma])
    assert len(got) == 9


def test_bounded_pol_contains_closure_of_its_members():
    pol = bounded_pol([star(3, 0)], 2)
    rng = np.random.default_rng(2)
    picks = rng.choice(pol.count(2), 3, replace=False)
    gens = [pol.operations(2)[i] for i in picks]
    assert bounded_closure(gens, 2).issubset(pol)


@pytest.mark.parametrize("els, expected", [
    ((0,), (6, 8)), ((1,), (1, 12)), ((0, 1), (1, 7)), ((2,), (1, 12)), ((0, 2), (1, 7)),
    ((1, 2), (4, 11)),
])
def test_unary_saturation_matches_monoid_oracle(els, expected):
    rho, sigma = star(3, 0), unary(3, *els)
    rep = saturation_probe(rho, sigma, 1)
    assert (sum(r.reaches_top for r in rep.rows), len(rep.rows)) == expected
    assert rep.caveat == CAVEAT
    # oracle: the monoid generated by Pol{rho,sigma} plus g, against Pol rho
    base = unary_pol(3, [rho, sigma])
    top = unary_pol(3, [rho])
    for r in rep.rows:
        g = tuple(r.gap_member.table.tolist())
        monoid = set(base) | {g}
        while True:
            new = {tuple(a[b[x]] for x in range(3)) for a in monoid for b in monoid} - monoid
            if not new:
                break
            monoid |= new
        assert (monoid == top) == r.reaches_top


def test_vacuous_probe():
    rho = star(3, 0)
    rep = saturation_probe(rho, rho, 1)
    assert rep.rows == [] and rep.all_saturate
    assert rep.to_json()["all_saturate"] is True
