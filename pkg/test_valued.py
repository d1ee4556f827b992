#!/usr/bin/env python3
"""
Exact costs over Q ∪ {∞}, cost functions, VCSP instances and multimorphisms.
"""

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from csplift.errors import CostOverflowError, PreconditionError, StructuralError
from csplift.operations import FiniteOperation, boolean
from csplift.valued import (INF, CostFunction, ValuedTemplate, VcspInstance, add_costs, as_cost, brute_solve_vcsp,
                            common_denominator, cost_le, evaluate_instance, format_cost, independent_set_template,
                            is_multimorphism, scale_cost)

costs = st.one_of(st.fractions(min_value=-100, max_value=100, max_denominator=50), st.just(INF))
finite = st.fractions(min_value=-100, max_value=100, max_denominator=50)

STP = [(boolean("min"), Fraction(1, 2)), (boolean("max"), Fraction(1, 2))]


def test_parse_costs():
    assert as_cost("3/4") == Fraction(3, 4)
    assert as_cost(" -2 ") == Fraction(-2)
    assert as_cost("inf") == INF
    assert as_cost(INF) == INF
    with pytest.raises(ValueError):
        as_cost(0.5)
    with pytest.raises(CostOverflowError):
        as_cost(2 ** 63)


def test_format_costs():
    assert format_cost(Fraction(-3, 4)) == "-3/4"
    assert format_cost(Fraction(6, 3)) == "2"
    assert format_cost(INF) == "inf"


@given(costs, costs)
def test_addition_commutes(a, b):
    assert add_costs(a, b) == add_costs(b, a)


@given(costs)
def test_infinity_absorbs(a):
    assert add_costs(a, INF) == INF
    assert cost_le(a, INF)


@given(finite, finite, finite)
def test_order_is_compatible_with_addition(a, b, c):
    if cost_le(a, b):
        assert cost_le(add_costs(a, c), add_costs(b, c))
    assert cost_le(a, b) or cost_le(b, a)


@given(finite)
def test_scaling(a):
    assert scale_cost(Fraction(2), a) == add_costs(a, a)
    assert scale_cost(Fraction(1, 2), INF) == INF


def test_infinity_is_not_below_finite_costs():
    assert not cost_le(INF, Fraction(10 ** 6))
    assert cost_le(INF, INF)


def test_cost_function_defaults_to_infinity():
    f = CostFunction("f", 2, 2, {(0, 0): "1/2", (1, 1): "1/3", (0, 1): "inf"})
    assert f.evaluate((1, 0)) == INF
    assert f((0, 1)) == INF
    assert f.finite_domain() == [(0, 0), (1, 1)]
    assert f.denominator() == 6
    values, infinite = f.scaled_table(6)
    assert values.tolist() == [3, 0, 0, 2]
    assert infinite.tolist() == [False, True, True, False]


def test_cost_function_checks_rows():
    with pytest.raises(StructuralError):
        CostFunction("f", 2, 2, {(0,): 1})
    with pytest.raises(StructuralError):
        CostFunction("f", 2, 1, {(2,): 1})


def test_common_denominator():
    f = CostFunction("f", 2, 1, {(0,): Fraction(1, 4)})
    g = CostFunction("g", 2, 1, {(0,): Fraction(1, 6)})
    assert common_denominator([f, g]) == 12


def test_template_domains_must_agree():
    with pytest.raises(StructuralError):
        ValuedTemplate("mixed", 2, (CostFunction("f", 3, 1, {}),))


def test_independent_set_template_shape():
    template = independent_set_template()
    assert template.arities == (2, 1, 1)
    support = template.crisp_support()
    assert support.relations[0].tuples == ((0, 0), (0, 1), (1, 0))


def test_instance_evaluation_and_brute_force():
    template = independent_set_template()
    edge, reward, _ = template.functions
    # path 0 - 1 - 2, every vertex rewarded
    constraints = [((0, 1), edge, 1), ((1, 2), edge, 1)] + [((v,), reward, 1) for v in range(3)]
    instance = VcspInstance(3, 2, constraints)
    assert evaluate_instance(instance, (1, 0, 1)) == Fraction(-2)
    assert evaluate_instance(instance, (1, 1, 0)) == INF
    assert brute_solve_vcsp(instance) == ((1, 0, 1), Fraction(-2))
    with pytest.raises(StructuralError):
        evaluate_instance(instance, (0, 0))


def test_weights_scale_terms():
    reward = independent_set_template().functions[1]
    instance = VcspInstance(1, 2, [((0,), reward, Fraction(5, 2))])
    assert evaluate_instance(instance, (1,)) == Fraction(-5, 2)


def test_weights_must_be_positive():
    reward = independent_set_template().functions[1]
    with pytest.raises(StructuralError):
        VcspInstance(1, 2, [((0,), reward, 0)])


def test_submodular_function_has_min_max_multimorphism():
    cut = CostFunction("cut", 2, 2, {(0, 0): 0, (0, 1): 1, (1, 0): 1, (1, 1): 0})
    assert is_multimorphism(STP, cut)


def test_supermodular_function_lacks_min_max_multimorphism():
    anti = CostFunction("anti", 2, 2, {(0, 0): 1, (0, 1): 0, (1, 0): 0, (1, 1): 1})
    assert not is_multimorphism(STP, anti)


def test_hard_edge_blocks_min_max():
    edge = independent_set_template().functions[0]
    assert not is_multimorphism(STP, edge)


def test_unary_functions_accept_any_conservative_pair():
    reward = independent_set_template().functions[1]
    swap = [(boolean("max"), Fraction(1, 2)), (boolean("min"), Fraction(1, 2))]
    assert is_multimorphism(swap, reward)


def test_distribution_is_checked():
    f = independent_set_template().functions[1]
    with pytest.raises(PreconditionError):
        is_multimorphism([(boolean("min"), Fraction(1, 2))], f)
    with pytest.raises(PreconditionError):
        is_multimorphism([(boolean("min"), Fraction(1, 2)), (FiniteOperation("u", 2, 1, (0, 1)), Fraction(1, 2))], f)
    with pytest.raises(PreconditionError):
        is_multimorphism([], f)
