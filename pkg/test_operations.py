#!/usr/bin/env python3
"""
Operation tables, polymorphisms, Siggers pairs and the Boolean tractability oracle.
"""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csplift.errors import CapacityError, StructuralError
from csplift.operations import (AssertedOracle, BooleanSchaeferOracle, FiniteOperation, OperationSystem, boolean,
                                clone_closure_upto, constant, enumerate_siggers_pairs, find_siggers_pair_admitted,
                                is_polymorphism, is_siggers_pair, preserves_relation, projection,
                                schaefer_witnesses, siggers_pair_tables, unary_polymorphisms)
from csplift.templates import btw_template, complete_graph, cycle, leq_template

IDENTITY = FiniteOperation("g", 2, 1, (0, 1))


def majority_of(*positions):
    maj = boolean("majority")
    return FiniteOperation.from_function("s", 2, 4, lambda *xs: maj(*(xs[p] for p in positions)))


def test_table_is_row_major():
    op = FiniteOperation.from_function("sub", 3, 2, lambda x, y: (x - y) % 3)
    assert op(2, 0) == 2
    assert op.table[2 * 3 + 0] == 2
    assert list(op.rows())[5] == ((1, 2), 2)


def test_table_shape_is_checked():
    with pytest.raises(StructuralError):
        FiniteOperation("short", 2, 2, (0, 1, 1))
    with pytest.raises(StructuralError):
        FiniteOperation("range", 2, 1, (0, 2))


def test_equality_ignores_names():
    assert boolean("min") == FiniteOperation("other", 2, 2, (0, 0, 0, 1))
    assert projection(2, 2, 0).table == (0, 0, 1, 1)
    assert constant(3, 2, 1).image() == frozenset({1})


def test_polymorphisms_of_leq():
    leq = leq_template()
    assert is_polymorphism(boolean("min"), leq)
    assert is_polymorphism(boolean("majority"), leq)
    assert not is_polymorphism(boolean("negation"), leq)
    assert not is_polymorphism(boolean("xor"), leq)


def test_polymorphism_domain_mismatch():
    with pytest.raises(StructuralError):
        is_polymorphism(boolean("min"), complete_graph(3))


def test_minority_preserves_two_colouring_edge():
    assert preserves_relation(boolean("minority"), complete_graph(2).relations[0])
    assert not preserves_relation(boolean("min"), complete_graph(2).relations[0])


def test_majority_of_last_three_is_siggers():
    assert is_siggers_pair(IDENTITY, majority_of(1, 2, 3))


def test_majority_of_first_three_is_not_siggers():
    # s(0,1,0,1) = maj(0,1,0) = 0 but s(1,0,1,1) = maj(1,0,1) = 1
    assert not is_siggers_pair(IDENTITY, majority_of(0, 1, 2))


def test_constant_g_only_needs_idempotence_on_its_image():
    g = FiniteOperation("g", 2, 1, (1, 1))
    s = FiniteOperation("s", 2, 4, (0,) * 15 + (1,))
    assert is_siggers_pair(g, s)
    assert not is_siggers_pair(g, FiniteOperation("s", 2, 4, (0,) * 16))


def test_siggers_pair_arity_is_checked():
    with pytest.raises(StructuralError):
        is_siggers_pair(boolean("min"), majority_of(1, 2, 3))


def test_boolean_siggers_census():
    g_tables, s_tables = siggers_pair_tables(2)
    assert len(g_tables) == len(s_tables)
    constant_g = sum(1 for row in g_tables if row[0] == row[1])
    # s is free away from the one idempotent row
    assert constant_g == 2 * 2 ** 15
    first_g, first_s = next(enumerate_siggers_pairs(2))
    assert first_g.table == (0, 0)
    assert first_s.table == (0,) * 16
    assert is_siggers_pair(first_g, first_s)


def test_census_is_refused_for_three_elements():
    with pytest.raises(CapacityError):
        siggers_pair_tables(3)


def test_unary_polymorphisms_of_k2():
    assert [g.table for g in unary_polymorphisms(complete_graph(2))] == [(0, 1), (1, 0)]


def test_k2_admits_a_siggers_pair():
    pair = find_siggers_pair_admitted(complete_graph(2))
    assert pair is not None
    g, s = pair
    assert is_siggers_pair(g, s)
    assert is_polymorphism(g, complete_graph(2)) and is_polymorphism(s, complete_graph(2))


def test_btw_admits_no_siggers_pair():
    # with both constants only the identity is unary, and no 4-ary idempotent polymorphism is Siggers
    assert [g.table for g in unary_polymorphisms(btw_template())] == [(0, 1)]
    assert find_siggers_pair_admitted(btw_template()) is None


def test_c4_admits_a_siggers_pair():
    assert find_siggers_pair_admitted(cycle(4)) is not None


@pytest.mark.slow
def test_k3_admits_no_siggers_pair():
    assert find_siggers_pair_admitted(complete_graph(3)) is None


def test_clone_closure_of_min():
    closure = clone_closure_upto([boolean("min")], 2)
    assert [op.arity for op in closure] == [1, 2, 2, 2]
    assert boolean("min") in closure
    assert boolean("max") not in closure


boolean_ops = st.one_of(
    st.tuples(st.integers(0, 1), st.integers(0, 1)).map(lambda t: FiniteOperation("u", 2, 1, t)),
    st.tuples(*[st.integers(0, 1)] * 4).map(lambda t: FiniteOperation("b", 2, 2, t)))
generators = st.lists(boolean_ops, max_size=3)


def closed(ops):
    return set(clone_closure_upto(ops, 2, domain_size=2))


@settings(max_examples=40, deadline=None)
@given(generators, generators)
def test_clone_closure_is_monotone(first, second):
    assert set(first) <= closed(first)
    assert closed(first) <= closed(first + second)


@settings(max_examples=40, deadline=None)
@given(generators)
def test_clone_closure_is_idempotent(ops):
    closure = clone_closure_upto(ops, 2, domain_size=2)
    assert closed(closure) == set(closure)


def test_clone_closure_arity_bound():
    with pytest.raises(StructuralError):
        clone_closure_upto([boolean("min")], 4)


def test_schaefer_witnesses():
    assert "min" in schaefer_witnesses([boolean("min")])
    assert schaefer_witnesses([boolean("majority")]) == ["majority"]
    assert schaefer_witnesses([boolean("negation")]) == []
    # nand generates every Boolean operation
    assert set(schaefer_witnesses([boolean("nand")])) == {"constant0", "constant1", "min", "max", "majority",
                                                          "minority"}


def test_boolean_oracle():
    oracle = BooleanSchaeferOracle()
    assert oracle.verdict([boolean("min")]) is True
    assert oracle.verdict([]) is False
    assert oracle.verdict([boolean("nand")]) is True
    assert oracle.verdict([FiniteOperation.from_function("m3", 3, 2, min)]) is None


def test_asserted_oracle():
    oracle = AssertedOracle()
    ops = [FiniteOperation.from_function("m3", 3, 2, min)]
    assert oracle.verdict(ops) is None
    oracle.assert_tractable(ops)
    assert oracle.verdict(ops) is True


def test_operation_system_shape():
    system = OperationSystem((2,), ((boolean("min"), boolean("max")),))
    assert system.domain_size == 2
    with pytest.raises(StructuralError):
        OperationSystem((2,), ((boolean("min"),),))
    with pytest.raises(StructuralError):
        OperationSystem((1,), ((boolean("min"),),))
