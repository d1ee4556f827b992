"""
Exact costs, cost functions and VCSP instances.

Costs are `fractions.Fraction` values or the float infinity `INF`; mixing the
two in Python arithmetic already gives ∞ + q = ∞ and q < ∞. Every produced
value is range checked against signed 64-bit numerators and denominators.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import CapacityError, CostOverflowError, PreconditionError, StructuralError
from .operations import FiniteOperation
from .structures import Relation, RelationalStructure

logger = logging.getLogger(__name__)

INF = math.inf
INT64_MAX = (1 << 63) - 1

CostValue = Union[Fraction, float]


def _checked(value: Fraction) -> Fraction:
    if abs(value.numerator) > INT64_MAX or value.denominator > INT64_MAX:
        raise CostOverflowError(f"cost {value} does not fit 64-bit numerator/denominator")
    return value


def as_cost(value) -> CostValue:
    """Parse an int, Fraction, 'p/q' string or 'inf' into a cost."""
    if isinstance(value, str):
        text = value.strip().lower()
        if text in ("inf", "+inf", "infinity", "∞"):
            return INF
        return _checked(Fraction(text))
    if isinstance(value, float):
        if math.isinf(value) and value > 0:
            return INF
        raise ValueError(f"costs are exact rationals or +inf, got float {value}")
    return _checked(Fraction(value))


def is_infinite(value: CostValue) -> bool:
    return isinstance(value, float) and math.isinf(value)


def add_costs(*values: CostValue) -> CostValue:
    total = Fraction(0)
    for value in values:
        if is_infinite(value):
            return INF
        total = _checked(total + value)
    return total


def scale_cost(weight: Fraction, value: CostValue) -> CostValue:
    if is_infinite(value):
        return INF
    return _checked(Fraction(weight) * value)


def cost_le(left: CostValue, right: CostValue) -> bool:
    """Order on Q ∪ {∞}; ∞ <= ∞ holds."""
    if is_infinite(right):
        return True
    if is_infinite(left):
        return False
    return left <= right


def format_cost(value: CostValue) -> str:
    if is_infinite(value):
        return "inf"
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class CostFunction:
    """Sparse cost table; tuples not listed cost ∞."""

    name: str
    domain_size: int
    arity: int
    entries: Mapping[Tuple[int, ...], CostValue] = field(default_factory=dict)

    def __post_init__(self):
        normalized: Dict[Tuple[int, ...], CostValue] = {}
        for row, value in dict(self.entries).items():
            row = tuple(int(x) for x in row)
            if len(row) != self.arity:
                raise StructuralError(f"cost {self.name}: tuple {row} does not match arity {self.arity}")
            if any(not 0 <= x < self.domain_size for x in row):
                raise StructuralError(f"cost {self.name}: tuple {row} out of range for domain {self.domain_size}")
            normalized[row] = as_cost(value)
        object.__setattr__(self, 'entries', dict(sorted(normalized.items())))

    def __hash__(self):
        return hash((self.name, self.domain_size, self.arity, tuple(self.entries.items())))

    def evaluate(self, row: Sequence[int]) -> CostValue:
        return self.entries.get(tuple(row), INF)

    __call__ = evaluate

    def finite_domain(self) -> List[Tuple[int, ...]]:
        """dom f, in lexicographic order."""
        return [row for row, value in self.entries.items() if not is_infinite(value)]

    @property
    def dom(self) -> List[Tuple[int, ...]]:
        return self.finite_domain()

    def denominator(self) -> int:
        out = 1
        for value in self.entries.values():
            if not is_infinite(value):
                out = math.lcm(out, value.denominator)
        return out

    def scaled_table(self, denominator: int, limit: int = 1 << 60) -> Tuple[np.ndarray, np.ndarray]:
        """Full table over D^arity as (int64 values * denominator, ∞ mask)."""
        size = self.domain_size ** self.arity
        values = np.zeros(size, dtype=np.int64)
        infinite = np.ones(size, dtype=bool)
        for row, value in self.entries.items():
            if is_infinite(value):
                continue
            scaled = value * denominator
            if scaled.denominator != 1:
                raise StructuralError(f"denominator {denominator} does not clear cost {value} of {self.name}")
            if abs(scaled.numerator) > limit:
                raise CostOverflowError(f"scaled cost {scaled} of {self.name} exceeds {limit}")
            index = 0
            for x in row:
                index = index * self.domain_size + x
            values[index] = scaled.numerator
            infinite[index] = False
        return values, infinite

    def to_relation_rows(self) -> List[Tuple[int, ...]]:
        return self.finite_domain()


def common_denominator(functions: Iterable[CostFunction]) -> int:
    out = 1
    for f in functions:
        out = math.lcm(out, f.denominator())
    return out


@dataclass(frozen=True)
class ValuedTemplate:
    name: str
    domain_size: int
    functions: Tuple[CostFunction, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'functions', tuple(self.functions))
        for f in self.functions:
            if f.domain_size != self.domain_size:
                raise StructuralError(f"cost {f.name} has domain {f.domain_size}, template has {self.domain_size}")

    @property
    def arities(self) -> Tuple[int, ...]:
        return tuple(f.arity for f in self.functions)

    def crisp_support(self) -> RelationalStructure:
        """The crisp structure of finite-cost tuples (dom f_i per function)."""
        return RelationalStructure(f"{self.name}_dom", self.domain_size,
                                   tuple(Relation(f.name, f.arity, f.finite_domain()) for f in self.functions))


@dataclass(frozen=True)
class VcspInstance:
    variables: int
    domain_size: int
    constraints: Tuple[Tuple[Tuple[int, ...], CostFunction, Fraction], ...] = ()

    def __post_init__(self):
        normalized = []
        for scope, f, weight in self.constraints:
            scope = tuple(scope)
            weight = _checked(Fraction(weight))
            if weight <= 0:
                raise StructuralError(f"weight {weight} on {f.name}{scope} must be positive")
            if len(scope) != f.arity:
                raise StructuralError(f"scope {scope} does not match arity {f.arity} of {f.name}")
            if any(not 0 <= v < self.variables for v in scope):
                raise StructuralError(f"scope {scope} refers to unknown variables")
            normalized.append((scope, f, weight))
        object.__setattr__(self, 'constraints', tuple(normalized))


def evaluate_instance(instance: VcspInstance, assignment: Sequence[int]) -> CostValue:
    """f_I(h) = Σ w(v,f) f(h(v)) with ∞ absorbing."""
    if len(assignment) != instance.variables:
        raise StructuralError(f"assignment covers {len(assignment)} of {instance.variables} variables")
    total: CostValue = Fraction(0)
    for scope, f, weight in instance.constraints:
        total = add_costs(total, scale_cost(weight, f.evaluate(tuple(assignment[v] for v in scope))))
        if is_infinite(total):
            return INF
    return total


def brute_solve_vcsp(instance: VcspInstance, limit: int = 10 ** 6) -> Tuple[Tuple[int, ...], CostValue]:
    """Lexicographically least minimizer by exhaustive enumeration."""
    total = instance.domain_size ** instance.variables
    if total > limit:
        raise CapacityError(f"brute force VCSP would enumerate {total} assignments (limit {limit})")
    best: Optional[Tuple[int, ...]] = None
    best_cost: CostValue = INF
    for assignment in itertools.product(range(instance.domain_size), repeat=instance.variables):
        value = evaluate_instance(instance, assignment)
        if best is None or (not cost_le(best_cost, value)):
            best, best_cost = assignment, value
    if best is None:
        best = ()
    return best, best_cost


def hybrid_instance_from(structure: RelationalStructure, template: ValuedTemplate,
                         weights: Optional[Union[Mapping, Callable]] = None) -> VcspInstance:
    """T = {(v, f_i) : v ∈ r_i}; weights keyed by (i, v) or a callable, default 1."""
    if structure.arities != template.arities:
        raise StructuralError(
            f"signature mismatch: input arities {list(structure.arities)}, template {list(template.arities)}")
    constraints = []
    for index, (rel, f) in enumerate(zip(structure.relations, template.functions)):
        for scope in rel:
            if weights is None:
                weight = 1
            elif callable(weights):
                weight = weights(index, scope)
            else:
                weight = weights.get((index, tuple(scope)), 1)
            constraints.append((scope, f, weight))
    return VcspInstance(structure.domain_size, template.domain_size, tuple(constraints))


def _check_distribution(omega: Sequence[Tuple[FiniteOperation, Fraction]]) -> int:
    if not omega:
        raise PreconditionError("a multimorphism needs at least one operation")
    arities = {op.arity for op, _ in omega}
    if len(arities) != 1:
        raise PreconditionError(f"multimorphism operations have mixed arities {sorted(arities)}")
    probabilities = [Fraction(p) for _, p in omega]
    if any(p <= 0 for p in probabilities):
        raise PreconditionError("multimorphism probabilities must be positive")
    if sum(probabilities) != 1:
        raise PreconditionError(f"multimorphism probabilities sum to {sum(probabilities)}, not 1")
    return arities.pop()


def is_multimorphism(omega: Sequence[Tuple[FiniteOperation, Fraction]], f: CostFunction) -> bool:
    """Σ ω(g) f(g(x̄)) <= (1/m) Σ f(x^i) for all x^1..x^m ∈ dom f, compared after multiplying by m."""
    m = _check_distribution(omega)
    rows = f.finite_domain()
    for choice in itertools.product(rows, repeat=m):
        rhs = add_costs(*(f.evaluate(x) for x in choice))
        lhs: CostValue = Fraction(0)
        for op, p in omega:
            image = tuple(op(*column) for column in zip(*choice)) if f.arity else ()
            lhs = add_costs(lhs, scale_cost(Fraction(p) * m, f.evaluate(image)))
            if is_infinite(lhs):
                return False
        if not cost_le(lhs, rhs):
            return False
    return True


def independent_set_template() -> ValuedTemplate:
    """({0,1}, f, u_0, u_1) with f(1,1) = ∞ and two unary vertex weights."""
    edge = CostFunction("edge", 2, 2, {(0, 0): 0, (0, 1): 0, (1, 0): 0, (1, 1): INF})
    reward = CostFunction("reward", 2, 1, {(0,): 0, (1,): -1})
    penalty = CostFunction("penalty", 2, 1, {(0,): 1, (1,): 0})
    return ValuedTemplate("independent_set", 2, (edge, reward, penalty))
