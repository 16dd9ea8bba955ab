import itertools

import pytest

from centralclones import derived as dv
from centralclones.catalog import central_relations
from centralclones.relcore import Relation, RelationError, diagonal, validate_central
from conftest import contains, star, sym_pair, unary
from oracles import slow_derived, tuples_of

V = validate_central
E = lambda k, h: set(itertools.product(range(k), repeat=h))  # noqa: E731


def elements(d):
    return {t[0] for t in tuples_of(d.relation)}


def test_tau():
    assert elements(dv.tau(V(star(3, 0)), V(unary(3, 1)))) == {0, 1}
    assert elements(dv.tau(V(star(3, 0)), V(unary(3, 0)))) == {0, 1, 2}
    rho = V(sym_pair(3, 0, 1) | star(3, 0))
    assert elements(dv.tau(rho, V(unary(3, 2)))) == {0, 2}


def test_tau_on_a_non_central_diagonal_extension():
    rho = sym_pair(3, 0, 1)
    assert elements(dv.tau(rho, unary(3, 2))) == {2}


def test_gamma_binary():
    rho = V(star(3, 0))
    assert dv.gamma_binary(rho, V(unary(3, 1, 2))).relation == star(3, 0)
    assert tuples_of(dv.gamma_binary(rho, V(unary(3, 1))).relation) == {(0, 0), (0, 1), (1, 0), (1, 1)}
    assert dv.gamma_binary(rho, V(unary(3, 0))).relation.is_full()


def test_gamma_t():
    rho = V(star(3, 0))
    for sigma in central_relations(3, 1):
        assert dv.gamma_t(rho, sigma, 2).relation == dv.gamma_binary(rho, sigma).relation
    g3 = dv.gamma_t(rho, V(unary(3, 1, 2)), 3).relation
    assert (0, 1, 2) not in g3
    assert all((a, a, a) in g3 for a in (1, 2))


def test_rho_l():
    assert dv.rho_l(star(3, 0), 2).relation == star(3, 0)
    rho_ii = Relation.full(4, 2) - Relation.from_tuples(4, 2, [(2, 3), (3, 2)])
    r3 = dv.rho_l(rho_ii, 3).relation
    assert all(set(t) <= {0, 1, 2} or set(t) <= {0, 1, 3} for t in r3.tuples())
    assert all((a,) * 3 in r3 for a in range(4))


def test_alpha_n():
    t4 = V(contains(4, 0))
    assert dv.alpha_n(t4, V(unary(4, 0)), 2).relation.is_full()
    a2 = tuples_of(dv.alpha_n(t4, V(unary(4, 1)), 2).relation)
    assert a2 == E(4, 2) - {(2, 3), (3, 2)}


def test_beta_chain_single_block():
    t4 = V(contains(4, 0))
    b = tuples_of(dv.beta_chain(t4, V(unary(4, 1)), 1).relation)
    assert b == {x for x in E(4, 3) if (1,) + x[1:] in tuples_of(t4.rel)}
    assert not any(x[1:] == (2, 3) for x in b)


def test_alpha1_of():
    assert dv.alpha1_of(Relation.full(4, 2)).relation.is_full()
    gamma = sym_pair(3, 0, 1)
    assert gamma.issubset(dv.alpha1_of(gamma).relation)
    assert (0, 1) in dv.alpha1_of(diagonal(3, 2)).relation
    assert (0, 1) not in dv.alpha1_of(diagonal(3, 2), "all").relation


def test_beta_t_contains_constants():
    rho, sigma = V(star(4, 0)), V(star(4, 1))
    g = dv.rho_cap_sigma(rho, sigma)
    b = dv.beta_t(rho, g, 2).relation
    assert all((a, a) in b for a in range(4))


def test_lambda_pad():
    lam = dv.lambda_pad(star(4, 0), 3).relation
    assert (1, 0, 3) in lam
    assert (1, 2, 3) not in lam
    assert all((a, a, x) in lam for a in range(4) for x in range(4))


def test_gamma_prime_and_type_v_witness():
    rho, t4 = V(star(4, 0)), V(contains(4, 0))
    gp = dv.gamma_prime(rho, t4).relation
    lam = dv.lambda_pad(rho, 3).relation
    assert (1, 1, 3) in gp
    assert gp == lam and lam.issubset(t4.rel)
    assert (1, 2, 2) in t4.rel and (1, 2, 2) not in lam


def test_theta_up_and_down_with_shared_center():
    assert dv.theta_up(V(star(4, 0)), V(contains(4, 0)), 2).relation.is_full()
    assert dv.theta_down(V(contains(4, 0)), V(star(4, 0)), 2).relation.is_full()


def test_theta_down_contains_sigma_for_all_e4_pairs():
    for rho in central_relations(4, 3):
        for sigma in central_relations(4, 2):
            assert sigma.rel.issubset(dv.theta_down(rho, sigma, 2).relation)


def test_theta_up_contains_rho_for_all_e4_pairs():
    for rho in central_relations(4, 2):
        for sigma in central_relations(4, 3):
            assert rho.rel.issubset(dv.theta_up(rho, sigma, 2).relation)


def test_gamma_s_inside_sigma_and_gamma_prime_h_full():
    for rho in central_relations(4, 2):
        for sigma in central_relations(4, 3):
            assert dv.gamma_s_rel(rho, sigma).relation.issubset(sigma.rel)
    assert dv.gamma_prime_h(V(contains(4, 0)), V(star(4, 0))).relation.is_full()


def test_running_instance_gamma_prime_chain_regression():
    rho, sigma = V(contains(4, 0)), V(star(4, 1))
    d = dv.gamma_prime_chain(rho, sigma, 1).relation
    assert tuples_of(d) == slow_derived(dv.gamma_prime_chain(rho, sigma, 1).spec.to_json(),
                                        rho.rel, sigma.rel)
    # only a rainbow block {2, 3} lacks a witness v
    missing = E(4, 3) - tuples_of(d)
    assert missing == {(a,) + b for a in range(4) for b in ((2, 3), (3, 2))}


def test_preconditions():
    with pytest.raises(RelationError):
        dv.tau(star(3, 0), star(3, 1))
    with pytest.raises(RelationError):
        dv.alpha_n(contains(4, 0), unary(4, 1), 1)
    with pytest.raises(RelationError):
        dv.lambda_pad(star(4, 0), 2)


def test_evaluate_replays_every_candidate_on_e3():
    from centralclones.certify import delta_candidates
    from centralclones.survey import pairs
    for rho, sigma in pairs(3):
        for d, _ in delta_candidates(rho, sigma):
            assert dv.evaluate(d.spec, rho, sigma) == d.relation
            spec = dv.DerivedSpec.from_json(d.spec.to_json())
            assert spec == d.spec


def test_index_mode_override():
    t4, s1 = V(contains(4, 0)), V(unary(4, 1))
    strict = dv.alpha_n(t4, s1, 3, index_mode="strict")
    loose = dv.alpha_n(t4, s1, 3, index_mode="repeats")
    for d in (strict, loose):
        assert tuples_of(d.relation) == slow_derived(d.spec.to_json(), t4.rel, s1.rel)
    assert loose.relation.issubset(strict.relation)
