#!/usr/bin/env python3
"""
STP/MJN multimorphisms, the element set D′_c and the structure Γ′_c.
"""

import itertools

import pytest

from csplift.conservative import (ConservativeElement, all_pair_sets, bipartite_example_check,
                                  count_conservative_elements, enumerate_all_conservative_elements,
                                  enumerate_conservative_elements, find_kz_multimorphisms, gamma_prime_c_membership,
                                  graph_of, two_coloring_template, unordered_pairs, validate_stp_mjn)
from csplift.errors import CapacityError, StructuralError
from csplift.solver import hom_equivalent
from csplift.structures import Relation, RelationalStructure
from csplift.templates import complete_graph, cycle, path
from csplift.valued import CostFunction, ValuedTemplate, independent_set_template, is_multimorphism

FULL_M = frozenset({frozenset({0, 1})})


def _identity_mjn(d):
    rows = list(itertools.product(range(d), repeat=3))
    return tuple(r[0] for r in rows), tuple(r[1] for r in rows), tuple(r[2] for r in rows)


def graph_input(graph: RelationalStructure) -> RelationalStructure:
    """A graph in the independent-set signature, without unary constraints."""
    return RelationalStructure(graph.name, graph.domain_size,
                               (graph.relations[0], Relation("reward", 1, ()), Relation("penalty", 1, ())))


def test_element_counts_for_two_values():
    # one pair in M: two commutative STP choices, three arrangements per two-valued triple
    assert count_conservative_elements(2, FULL_M) == 2 * 3 ** 6
    # empty M: four STP choices, MJN forced
    assert count_conservative_elements(2, frozenset()) == 4
    assert sum(1 for _ in enumerate_all_conservative_elements(2)) == 1462


def test_pair_sets_largest_first():
    assert all_pair_sets(2) == [FULL_M, frozenset()]
    sets = all_pair_sets(3)
    assert len(sets) == 8
    assert sets[0] == frozenset(unordered_pairs(3))
    assert sets[-1] == frozenset()


def test_enumerated_elements_are_well_formed():
    for element in enumerate_all_conservative_elements(2):
        assert validate_stp_mjn(element) == []


def test_validation_reports_broken_tables():
    broken = ConservativeElement(2, frozenset(), (0, 0, 0, 0), (0, 0, 0, 0), *_identity_mjn(2))
    problems = validate_stp_mjn(broken)
    assert any("not conservative at (1,1)" in p for p in problems)


def test_commutativity_is_required_on_m():
    # join = first projection is conservative but not commutative on {0,1}
    element = ConservativeElement(2, FULL_M, (0, 0, 1, 1), (0, 1, 0, 1), *_identity_mjn(2))
    assert any("not commutative" in p for p in validate_stp_mjn(element))


def test_enumeration_rejects_bad_pairs_and_limits():
    with pytest.raises(StructuralError):
        list(enumerate_conservative_elements(2, [frozenset({0, 2})]))
    with pytest.raises(CapacityError):
        list(enumerate_conservative_elements(2, FULL_M, limit=100))


def test_independent_set_has_no_stp_mjn_certificate():
    assert find_kz_multimorphisms(independent_set_template()) is None


def test_submodular_template_certificate():
    cut = CostFunction("cut", 2, 2, {(0, 0): 0, (0, 1): 1, (1, 0): 1, (1, 1): 0})
    element = find_kz_multimorphisms(ValuedTemplate("cut", 2, (cut,)))
    assert element is not None
    assert element.M == FULL_M
    assert element.join == (0, 0, 0, 1)
    assert element.meet == (0, 1, 1, 1)
    assert validate_stp_mjn(element) == []
    assert is_multimorphism(element.stp_weighting, cut)
    assert is_multimorphism(element.mjn_weighting, cut)


def test_unary_costs_accept_every_element():
    reward = independent_set_template().functions[1]
    for element in itertools.islice(enumerate_all_conservative_elements(2), 0, None, 50):
        assert gamma_prime_c_membership(reward, [element])


def test_repeated_element_membership_is_the_multimorphism_test():
    edge = independent_set_template().functions[0]
    for element in itertools.islice(enumerate_all_conservative_elements(2), 0, None, 7):
        expected = is_multimorphism(element.stp_weighting, edge) and is_multimorphism(element.mjn_weighting, edge)
        assert gamma_prime_c_membership(edge, [element, element]) == expected


def test_membership_checks_arity():
    edge = independent_set_template().functions[0]
    element = next(enumerate_all_conservative_elements(2))
    with pytest.raises(StructuralError):
        gamma_prime_c_membership(edge, [element])


def test_two_coloring_template_shape():
    target = two_coloring_template((2, 1, 1))
    assert target.arities == (2, 1, 1)
    assert target.relations[0].tuples == ((0, 1), (1, 0))
    assert len(target.relations[1]) == 2


def test_graph_of():
    graph = graph_of(cycle(4))
    assert graph.number_of_nodes() == 4
    assert graph.number_of_edges() == 4


@pytest.mark.slow
def test_gamma_prime_c_has_every_element(gamma_prime_c):
    assert gamma_prime_c.domain_size == 1462
    assert gamma_prime_c.structure.is_materialized
    assert len(gamma_prime_c.structure.relations[1]) == 1462


@pytest.mark.slow
@pytest.mark.parametrize("graph, bipartite", [
    (cycle(4), True),
    (path(4), True),
    (complete_graph(2), True),
    (cycle(3), False),
    (cycle(5), False),
])
def test_gamma_prime_c_decides_bipartiteness(gamma_prime_c, graph, bipartite):
    verdict = bipartite_example_check(graph_input(graph), gamma_prime_c)
    assert verdict.bipartite is bipartite
    assert verdict.agree


@pytest.mark.slow
def test_gamma_prime_c_is_equivalent_to_two_coloring(gamma_prime_c):
    target = two_coloring_template(independent_set_template().arities)
    assert hom_equivalent(gamma_prime_c.structure, target)
