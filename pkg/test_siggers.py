#!/usr/bin/env python3
"""
The Siggers-pair structure Γ′ and the betweenness rounding.
"""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csplift.errors import CapacityError, PreconditionError
from csplift.lifted import lift_language
from csplift.operations import (FiniteOperation, boolean, componentwise_preserves, constant,
                                find_siggers_pair_admitted, is_siggers_pair, siggers_pair_tables)
from csplift.siggers import (betweenness_example, build_gamma_prime, check_homtoG, constant_pair_embedding,
                             find_hom_to_gamma_prime, gamma_double_prime_membership, gamma_prime_membership,
                             h_coloring_loop_check, hom_from_siggers_pair, lazy_hom_to_gamma_prime,
                             siggers_pair_from_hom)
from csplift.solver import find_homomorphism, is_homomorphism
from csplift.structures import Homomorphism, Relation
from csplift.templates import betweenness_input, btw_alpha_template, btw_template, complete_graph

BTW = btw_template().relation("btw")


def const_pair(d, a):
    return constant(d, 1, a), constant(d, 4, a)


def test_gamma_prime_domain_is_the_pair_census(gamma_prime_btw):
    assert gamma_prime_btw.materialized
    assert gamma_prime_btw.domain_size == len(siggers_pair_tables(2)[0])
    g, s = gamma_prime_btw.element(7)
    assert is_siggers_pair(g, s)
    assert gamma_prime_btw.index_of(g, s) == 7


def test_larger_domains_stay_symbolic():
    gamma_prime = build_gamma_prime(complete_graph(3))
    assert not gamma_prime.materialized
    assert gamma_prime.structure is None
    with pytest.raises(CapacityError):
        gamma_prime.domain_size


def test_pair_membership_follows_both_clauses():
    assert gamma_prime_membership(BTW, [const_pair(2, 0)] * 3)
    assert not gamma_prime_membership(BTW, [const_pair(2, 0), const_pair(2, 1), const_pair(2, 0)])
    identity = FiniteOperation("g", 2, 1, (0, 1))
    majority = FiniteOperation.from_function("s", 2, 4, lambda x, y, z, t: boolean("majority")(y, z, t))
    # the g's preserve btw, the s's do not
    assert not gamma_prime_membership(BTW, [(identity, majority)] * 3)


def pair_at(index):
    g_tables, s_tables = siggers_pair_tables(2)
    index %= len(g_tables)
    return (FiniteOperation("g", 2, 1, tuple(g_tables[index].tolist())),
            FiniteOperation("s", 2, 4, tuple(s_tables[index].tolist())))


@settings(max_examples=60, deadline=None)
@given(st.permutations(range(3)),
       st.lists(st.one_of(st.integers(min_value=0), st.sampled_from([-1, -2])), min_size=3, max_size=3))
def test_pair_membership_commutes_with_coordinate_permutations(perm, picks):
    # negative picks select the constant pairs
    pairs = [const_pair(2, -1 - p) if p < 0 else pair_at(p) for p in picks]
    permuted = Relation("btw_perm", 3, [tuple(row[i] for i in perm) for row in BTW])
    assert gamma_prime_membership(BTW, pairs) == gamma_prime_membership(permuted, [pairs[i] for i in perm])


def test_constant_pairs_embed_the_template(gamma_prime_btw):
    embedding = constant_pair_embedding(btw_template(), gamma_prime_btw)
    assert embedding.is_valid()
    h = embedding.homomorphism()
    assert is_homomorphism(h)
    assert len(set(h.mapping)) == 2


def test_constant_pairs_embed_a_symbolic_template():
    assert constant_pair_embedding(complete_graph(3)).is_valid()


def test_search_into_gamma_prime(gamma_prime_btw):
    structure = betweenness_input(2, [0], [1], [(0, 0, 1)])
    pair_map = find_hom_to_gamma_prime(structure, btw_template(), gamma_prime_btw)
    assert pair_map is not None
    assert pair_map.is_valid()
    assert is_homomorphism(pair_map.homomorphism())
    g, s = siggers_pair_from_hom(structure, btw_template(), pair_map.pairs)
    assert g.domain_size == 4
    assert is_siggers_pair(g, s)
    lifted = lift_language(btw_template(), structure)
    assert all(componentwise_preserves([op] * rel.arity, rel)
               for rel in lifted.structure.relations for op in (g, s))


def test_restricting_a_lifted_pair(gamma_prime_btw):
    structure = betweenness_input(1, [0], [], [])
    lifted = lift_language(btw_template(), structure)
    pair = find_siggers_pair_admitted(lifted.structure)
    assert pair is not None
    pair_map = hom_from_siggers_pair(structure, btw_template(), pair, gamma_prime_btw)
    assert pair_map.is_valid()


def test_restriction_rejects_pairs_over_the_wrong_domain(gamma_prime_btw):
    structure = betweenness_input(2, [0], [1], [])
    with pytest.raises(PreconditionError):
        hom_from_siggers_pair(structure, btw_template(), const_pair(2, 0), gamma_prime_btw)


@pytest.mark.parametrize("structure", [
    betweenness_input(2, [0], [1], [(0, 0, 1)], "pinned"),
    betweenness_input(1, [0], [0], [], "clash"),
    betweenness_input(2, [], [], [(0, 1, 0)], "free"),
])
def test_both_sides_of_the_correspondence_agree(structure, gamma_prime_btw):
    report = check_homtoG(structure, btw_template(), gamma_prime_btw)
    assert report.agree
    assert report.lazy_decided
    assert report.restriction_valid is not False
    assert report.glued_valid is not False


def test_correspondence_is_limited_to_small_domains():
    with pytest.raises(CapacityError):
        check_homtoG(betweenness_input(1, [], [], []), btw_alpha_template())


def test_correspondence_searches_gamma_prime_through_its_lazy_relations(gamma_prime_btw, monkeypatch):
    calls = []
    original = gamma_prime_btw.batch_filter

    def counting(*args):
        calls.append(args)
        return original(*args)

    monkeypatch.setattr(gamma_prime_btw, "batch_filter", counting)
    structure = betweenness_input(3, [], [], [(0, 1, 2)], "one-triple")
    report = check_homtoG(structure, btw_template(), gamma_prime_btw)
    assert calls
    assert report.agree and report.verdict
    assert report.lazy_decided
    assert report.gamma_prime_hom.target is gamma_prime_btw.structure
    assert is_homomorphism(report.gamma_prime_hom)
    assert report.gamma_prime_map.is_valid()
    assert report.glued_valid


def test_lazy_search_agrees_with_the_decomposed_search(gamma_prime_btw):
    structure = betweenness_input(2, [0], [1], [(0, 0, 1)], "pinned")
    h, decided = lazy_hom_to_gamma_prime(structure, gamma_prime_btw)
    assert decided
    assert is_homomorphism(h)
    assert find_hom_to_gamma_prime(structure, btw_template(), gamma_prime_btw) is not None


def test_node_budget_leaves_the_decision_to_the_decomposed_search(gamma_prime_btw):
    structure = betweenness_input(2, [0], [1], [(0, 0, 1)], "pinned")
    report = check_homtoG(structure, btw_template(), gamma_prime_btw, max_nodes=0)
    assert not report.lazy_decided
    assert report.gamma_prime_hom is None
    assert report.agree
    assert report.gamma_prime_map is report.oracle_map is not None


def test_lazy_search_needs_an_enumerated_gamma_prime():
    with pytest.raises(CapacityError):
        lazy_hom_to_gamma_prime(betweenness_input(1, [], [], []), build_gamma_prime(btw_template(), materialize=False))


def test_double_prime_membership(gamma_prime_btw):
    universe = list(constant_pair_embedding(btw_template(), gamma_prime_btw).homomorphism().mapping)
    index = btw_template().relation_index("btw")
    assert gamma_double_prime_membership(gamma_prime_btw, index, universe, [const_pair(2, 0)] * 3)
    identity = FiniteOperation("g", 2, 1, (0, 1))
    majority = FiniteOperation.from_function("s", 2, 4, lambda x, y, z, t: boolean("majority")(y, z, t))
    assert not gamma_double_prime_membership(gamma_prime_btw, index, universe, [(identity, majority)] * 3)


def test_h_coloring_loops():
    assert h_coloring_loop_check(complete_graph(2)) == {
        "constant_loop": False, "has_loop": True, "admits_siggers_pair": True}


def test_betweenness_rounding():
    structure = betweenness_input(4, [0], [3], [(0, 1, 3), (1, 2, 3)])
    g = find_homomorphism(structure, btw_alpha_template())
    h = betweenness_example(structure, g)
    assert h is not None
    assert is_homomorphism(h)
    assert h.mapping[0] == 0 and h.mapping[3] == 1


def test_betweenness_rounding_with_clashing_constants():
    structure = betweenness_input(3, [0], [0], [(0, 1, 2)])
    g = find_homomorphism(structure, btw_alpha_template())
    assert g is not None and g(0) == 2
    assert betweenness_example(structure, g) is None
    assert find_homomorphism(structure, btw_template()) is None


def test_betweenness_rounding_needs_a_homomorphism():
    structure = betweenness_input(3, [0], [], [(0, 1, 2)])
    bogus = Homomorphism(structure, btw_alpha_template(), (1, 1, 1))
    with pytest.raises(PreconditionError):
        betweenness_example(structure, bogus)
