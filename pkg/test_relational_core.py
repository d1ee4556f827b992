#!/usr/bin/env python3
"""
Structures, the homomorphism search and the homomorphism preorder.
"""

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csplift.errors import CapacityError, StructuralError, UnsupportedError
from csplift.solver import (brute_force_homomorphism, count_homomorphisms, find_homomorphism, hom_equivalent,
                            is_homomorphism, iter_homomorphisms, up_membership, upper_than)
from csplift.structures import (Homomorphism, LazyRelation, Relation, RelationalStructure, decode_index,
                                disjoint_union, encode_tuple, power_structure, validate_structure)
from csplift.templates import complete_graph, cycle, leq_template, path


def lazy_clique(n: int) -> RelationalStructure:
    rel = LazyRelation("edge", 2, predicate=lambda row: row[0] != row[1], candidates=n)
    return RelationalStructure(f"lazyK{n}", n, (rel,))


@st.composite
def structure_pairs(draw):
    """A source and a target over one signature, small enough for the exhaustive oracle."""
    arities = draw(st.lists(st.integers(1, 3), min_size=1, max_size=2))
    n_source = draw(st.integers(1, 5))
    n_target = draw(st.integers(1, 3))

    def relations(size, max_rows):
        rels = []
        for i, m in enumerate(arities):
            row = st.tuples(*[st.integers(0, size - 1)] * m)
            rels.append(Relation(f"r{i}", m, draw(st.lists(row, max_size=max_rows))))
        return tuple(rels)

    source = RelationalStructure("R", n_source, relations(n_source, 6))
    target = RelationalStructure("T", n_target, relations(n_target, 12))
    return source, target


def test_relation_normalizes_tuples():
    rel = Relation("r", 2, [(1, 0), (0, 1), (1, 0)])
    assert rel.tuples == ((0, 1), (1, 0))
    assert (1, 0) in rel
    assert len(rel) == 2


def test_validate_reports_out_of_range_and_arity():
    structure = RelationalStructure("bad", 3, (Relation("r", 2, [(0, 5), (1, 2, 0)]),))
    problems = validate_structure(structure)
    assert len(problems) == 2
    assert any("out of range" in p for p in problems)
    assert any("does not match arity" in p for p in problems)
    assert validate_structure(cycle(4)) == []


def test_tuple_encoding_is_lexicographic():
    assert encode_tuple((1, 0, 1), 2) == 5
    assert decode_index(5, 2, 3) == (1, 0, 1)
    ranks = [encode_tuple(t, 3) for t in itertools.product(range(3), repeat=2)]
    assert ranks == list(range(9))


def test_is_homomorphism_on_cycles():
    assert is_homomorphism(Homomorphism(cycle(4), complete_graph(2), (0, 1, 0, 1)))
    assert not is_homomorphism(Homomorphism(cycle(4), complete_graph(2), (0, 0, 1, 1)))


def test_is_homomorphism_rejects_signature_mismatch():
    with pytest.raises(StructuralError):
        is_homomorphism(Homomorphism(complete_graph(2), leq_template(), (0, 1)))


def test_odd_cycle_is_not_two_colourable():
    assert find_homomorphism(cycle(3), complete_graph(2)) is None
    assert find_homomorphism(cycle(5), complete_graph(2)) is None
    h = find_homomorphism(cycle(5), complete_graph(3))
    assert h is not None and is_homomorphism(h)


def test_first_solution_is_lexicographically_least():
    h = find_homomorphism(cycle(4), complete_graph(2))
    assert h.mapping == (0, 1, 0, 1)


def test_count_homomorphisms():
    assert count_homomorphisms(complete_graph(2), complete_graph(2)) == 2
    assert count_homomorphisms(path(3), complete_graph(2)) == 2
    # proper 3-colourings of C4
    assert count_homomorphisms(cycle(4), complete_graph(3)) == 18


def test_unary_constraints_narrow_domains():
    leq = leq_template()
    source = RelationalStructure("R", 2, (
        Relation("leq", 2, [(0, 1)]),
        Relation("zero", 1, []),
        Relation("one", 1, [(0,)]),
    ))
    h = find_homomorphism(source, leq)
    assert h.mapping == (1, 1)


def test_search_over_lazy_target():
    h = find_homomorphism(cycle(5), lazy_clique(3))
    assert h is not None
    assert all(h(a) != h(b) for a, b in cycle(5).relations[0])
    assert find_homomorphism(complete_graph(3), lazy_clique(2)) is None


def test_lazy_source_is_unsupported():
    with pytest.raises(UnsupportedError):
        find_homomorphism(lazy_clique(2), complete_graph(2))


def test_node_limit_raises_capacity_error():
    with pytest.raises(CapacityError):
        find_homomorphism(complete_graph(6), complete_graph(5), max_nodes=10)


def test_iter_homomorphisms_enumerates_all():
    maps = [h.mapping for h in iter_homomorphisms(path(2), complete_graph(3))]
    assert maps == [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]


def test_brute_force_limit():
    with pytest.raises(CapacityError):
        brute_force_homomorphism(cycle(5), complete_graph(3), limit=100)


@settings(max_examples=150, deadline=None)
@given(structure_pairs())
def test_search_agrees_with_exhaustive_oracle(pair):
    source, target = pair
    found = find_homomorphism(source, target)
    oracle = brute_force_homomorphism(source, target)
    assert (found is None) == (oracle is None)
    if found is not None:
        assert is_homomorphism(found)
        # both enumerate in lexicographic order
        assert found.mapping == oracle.mapping


def test_preorder_laws():
    c5, k3, k4 = cycle(5), complete_graph(3), complete_graph(4)
    assert upper_than(c5, c5)
    assert upper_than(c5, k3) and upper_than(k3, k4) and upper_than(c5, k4)
    assert not upper_than(k4, k3)
    assert hom_equivalent(cycle(4), complete_graph(2))
    assert not hom_equivalent(cycle(5), complete_graph(3))


def test_up_membership():
    assert up_membership(cycle(3), [complete_graph(2), complete_graph(3)])
    assert not up_membership(cycle(3), [complete_graph(2)])
    assert not up_membership(cycle(3), [])


def test_power_structure():
    square = power_structure(complete_graph(2), 2)
    assert square.domain_size == 4
    # (0,1)x(1,0) and friends: four edge pairs
    assert len(square.relations[0]) == 4
    assert (encode_tuple((0, 0), 2), encode_tuple((1, 1), 2)) in square.relations[0]
    with pytest.raises(CapacityError):
        power_structure(complete_graph(3), 3, max_domain=10)


def test_disjoint_union_offsets_blocks():
    union = disjoint_union([complete_graph(2), complete_graph(3)])
    assert union.domain_size == 5
    assert len(union.relations[0]) == 8
    assert (2, 3) in union.relations[0]
    assert (1, 2) not in union.relations[0]


def test_substructure_reindexes():
    sub = cycle(4).substructure([0, 1, 2])
    assert sub.domain_size == 3
    assert sub.relations[0].tuples == ((0, 1), (1, 0), (1, 2), (2, 1))


def test_lazy_relation_materialize():
    rel = LazyRelation("lt", 2, predicate=lambda row: row[0] < row[1], candidates=3)
    assert rel.materialize().tuples == ((0, 1), (0, 2), (1, 2))
    with pytest.raises(CapacityError):
        rel.materialize(limit=5)
    with pytest.raises(UnsupportedError):
        len(rel)


def test_payload_lists_every_tuple():
    structure = RelationalStructure("s", 3, (Relation("e", 2, [(1, 2), (0, 1)]),
                                             LazyRelation("lt", 2, predicate=lambda row: row[0] < row[1], candidates=3)))
    assert structure.payload() == {
        "name": "s", "domain": 3,
        "relations": [{"name": "e", "arity": 2, "tuples": [[0, 1], [1, 2]]},
                      {"name": "lt", "arity": 2, "tuples": "lazy"}]}
