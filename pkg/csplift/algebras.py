"""
Algebras over one domain, the structure Γ^𝔅, outside and inside
polymorphisms, and the reduction of CSP(Γ) through Γ^𝔅.

Algebras are compared extensionally: two algebras are the same element of 𝔅
when their operation tables coincide.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .config import get_settings
from .errors import CapacityError, PreconditionError, StructuralError, TheoremViolation
from .lifted import (MultiSortedInstance, MultiSortedRelation, lift_language, lifted_multisorted_relations,
                     multisorted_polymorphism_check, solve_multisorted)
from .operations import (BooleanSchaeferOracle, FiniteOperation, OperationSystem, TractabilityOracle,
                         componentwise_preserves, constant, is_polymorphism, is_siggers_pair, projection)
from .solver import find_homomorphism, is_homomorphism
from .structures import Homomorphism, LazyRelation, Relation, RelationalStructure, encode_tuple

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AlgebraSignature:
    arities: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, 'arities', tuple(self.arities))
        if not self.arities:
            raise StructuralError("a signature needs at least one symbol")
        if any(n < 0 for n in self.arities):
            raise StructuralError(f"negative arity in signature {self.arities}")

    def __len__(self) -> int:
        return len(self.arities)


@dataclass(frozen=True)
class Algebra:
    name: str = field(compare=False)
    signature: AlgebraSignature
    domain_size: int
    operations: Tuple[FiniteOperation, ...]

    def __post_init__(self):
        object.__setattr__(self, 'operations', tuple(self.operations))
        if len(self.operations) != len(self.signature.arities):
            raise StructuralError(f"algebra {self.name}: {len(self.operations)} operations "
                                  f"for {len(self.signature.arities)} symbols")
        for n, op in zip(self.signature.arities, self.operations):
            if op.arity != n:
                raise StructuralError(f"algebra {self.name}: operation {op.name} has arity {op.arity}, expected {n}")
            if op.domain_size != self.domain_size:
                raise StructuralError(f"algebra {self.name}: operation {op.name} is over another domain")

    @property
    def fingerprint(self) -> bytes:
        return b"|".join(op.fingerprint for op in self.operations)

    def renamed(self, name: str) -> "Algebra":
        return Algebra(name, self.signature, self.domain_size, self.operations)


class AlgebraSet:
    """An ordered finite set 𝔅 of algebras sharing signature and domain."""

    def __init__(self, signature: AlgebraSignature, domain_size: int, algebras: Iterable[Algebra] = (),
                 verdicts: Optional[Dict[bytes, Optional[bool]]] = None):
        self.signature = signature
        self.domain_size = domain_size
        self.algebras: List[Algebra] = []
        self._index: Dict[bytes, int] = {}
        self.verdicts = dict(verdicts or {})
        for algebra in algebras:
            self.add(algebra)

    def add(self, algebra: Algebra) -> int:
        if algebra.signature != self.signature or algebra.domain_size != self.domain_size:
            raise StructuralError(f"algebra {algebra.name} does not match the set's signature and domain")
        key = algebra.fingerprint
        if key in self._index:
            raise StructuralError(f"algebra {algebra.name} duplicates {self.algebras[self._index[key]].name}")
        self._index[key] = len(self.algebras)
        self.algebras.append(algebra)
        return self._index[key]

    def index(self, algebra: Algebra) -> Optional[int]:
        return self._index.get(algebra.fingerprint)

    def __contains__(self, algebra: Algebra) -> bool:
        return algebra.fingerprint in self._index

    def __len__(self) -> int:
        return len(self.algebras)

    def __iter__(self):
        return iter(self.algebras)

    def __getitem__(self, index: int) -> Algebra:
        return self.algebras[index]

    def without(self, index: int) -> "AlgebraSet":
        return AlgebraSet(self.signature, self.domain_size,
                          (a for i, a in enumerate(self.algebras) if i != index))


# -- building sets of algebras -----------------------------------------------------

def constant_algebra(value: int, signature: AlgebraSignature, domain_size: int) -> Algebra:
    if not 0 <= value < domain_size:
        raise StructuralError(f"constant {value} outside domain {domain_size}")
    ops = tuple(constant(domain_size, n, value) for n in signature.arities)
    return Algebra(f"const{value}", signature, domain_size, ops)


def is_extending(algebras: AlgebraSet) -> bool:
    return all(constant_algebra(a, algebras.signature, algebras.domain_size) in algebras
               for a in range(algebras.domain_size))


def all_algebras(signature: AlgebraSignature, domain_size: int, limit: Optional[int] = None) -> AlgebraSet:
    """Every algebra of the signature, in lexicographic order of the concatenated tables."""
    limit = limit if limit is not None else get_settings().max_tuples
    total = 1
    for n in signature.arities:
        total *= domain_size ** (domain_size ** n)
    if total > limit:
        raise CapacityError(f"{total} algebras of signature {signature.arities} exceed limit {limit}")
    per_symbol = [list(itertools.product(range(domain_size), repeat=domain_size ** n)) for n in signature.arities]
    result = AlgebraSet(signature, domain_size)
    for index, tables in enumerate(itertools.product(*per_symbol)):
        ops = tuple(FiniteOperation(f"o{i}", domain_size, n, t)
                    for i, (n, t) in enumerate(zip(signature.arities, tables)))
        result.add(Algebra(f"A{index}", signature, domain_size, ops))
    return result


Identity = Tuple[int, Tuple[int, ...], int, Tuple[int, ...]]


def satisfies_identity(algebra: Algebra, identity: Identity) -> bool:
    """t(x_i...) = r(x_j...) for every assignment of the variables."""
    left_symbol, left_vars, right_symbol, right_vars = identity
    t = algebra.operations[left_symbol]
    r = algebra.operations[right_symbol]
    if len(left_vars) != t.arity or len(right_vars) != r.arity:
        raise StructuralError(f"identity {identity} does not match the signature")
    count = max(left_vars + right_vars, default=-1) + 1
    for values in itertools.product(range(algebra.domain_size), repeat=count):
        if t(*(values[v] for v in left_vars)) != r(*(values[v] for v in right_vars)):
            return False
    return True


def identity_defined_set(signature: AlgebraSignature, domain_size: int,
                         identities: Sequence[Identity]) -> AlgebraSet:
    """All algebras satisfying every given identity."""
    everything = all_algebras(signature, domain_size)
    return AlgebraSet(signature, domain_size,
                      (a for a in everything if all(satisfies_identity(a, e) for e in identities)))


def tractable_boolean_algebras(signature: AlgebraSignature,
                               oracle: Optional[TractabilityOracle] = None) -> AlgebraSet:
    """Every Boolean algebra of the signature the oracle calls tractable."""
    oracle = oracle or BooleanSchaeferOracle()
    everything = all_algebras(signature, 2)
    chosen = AlgebraSet(signature, 2)
    for algebra in everything:
        verdict = oracle.verdict(algebra.operations)
        if verdict:
            chosen.add(algebra)
            chosen.verdicts[algebra.fingerprint] = True
    return chosen


# -- Γ^𝔅 ----------------------------------------------------------------------------

def rho_B_membership(rel: Relation, algebras: Sequence[Algebra]) -> bool:
    """(o_i^{A_1}, ..., o_i^{A_m}) component-wise preserves ρ for every symbol i."""
    if len(algebras) != rel.arity:
        raise StructuralError(f"{len(algebras)} algebras for relation {rel.name} of arity {rel.arity}")
    if not algebras:
        return True
    for i in range(len(algebras[0].operations)):
        if not componentwise_preserves([a.operations[i] for a in algebras], rel):
            return False
    return True


def build_gamma_B(template: RelationalStructure, algebras: AlgebraSet,
                  limit: Optional[int] = None) -> RelationalStructure:
    """Γ^𝔅 over the indices of 𝔅; relations too large to tabulate stay lazy."""
    if template.domain_size != algebras.domain_size:
        raise StructuralError(f"{template.name} is over {template.domain_size} elements, 𝔅 over {algebras.domain_size}")
    limit = limit if limit is not None else get_settings().max_tuples
    n = len(algebras)
    members = algebras.algebras
    rels = []
    for rel in template.relations:
        if n ** rel.arity <= limit:
            rows = [combo for combo in itertools.product(range(n), repeat=rel.arity)
                    if rho_B_membership(rel, [members[i] for i in combo])]
            rels.append(Relation(rel.name, rel.arity, rows))
        else:
            logger.warning("Γ^𝔅 relation %s needs %d tests, keeping it lazy", rel.name, n ** rel.arity)
            rels.append(LazyRelation(rel.name, rel.arity,
                                     predicate=lambda row, r=rel: rho_B_membership(r, [members[i] for i in row]),
                                     candidates=n))
    return RelationalStructure(f"{template.name}^B", n, tuple(rels))


def extending_embedding(template: RelationalStructure, algebras: AlgebraSet,
                        gamma_b: Optional[RelationalStructure] = None) -> Homomorphism:
    """a ↦ a^σ."""
    if not is_extending(algebras):
        raise PreconditionError("𝔅 is not extending: some constant algebra is missing")
    gamma_b = gamma_b if gamma_b is not None else build_gamma_B(template, algebras)
    mapping = [algebras.index(constant_algebra(a, algebras.signature, algebras.domain_size))
               for a in range(template.domain_size)]
    return Homomorphism(template, gamma_b, mapping)


@dataclass(frozen=True)
class TractabilityVerdict:
    tractable: bool
    evidence: Tuple[Tuple[str, Optional[bool]], ...]

    @property
    def label(self) -> str:
        return "tractable" if self.tractable else "unknown"


def is_tractable_set(algebras: AlgebraSet, oracle: Optional[TractabilityOracle] = None) -> TractabilityVerdict:
    """Tractable when every member is; anything else is reported as unknown."""
    oracle = oracle or BooleanSchaeferOracle()
    evidence = []
    for algebra in algebras:
        verdict = oracle.verdict(algebra.operations)
        evidence.append((algebra.name, verdict))
        algebras.verdicts[algebra.fingerprint] = verdict
    return TractabilityVerdict(all(v is True for _, v in evidence), tuple(evidence))


def product_algebra(algebras: AlgebraSet, limit: int = 10 ** 4) -> Algebra:
    """The direct product over 𝔅, on D^|𝔅| in lexicographic encoding."""
    d = algebras.domain_size
    m = len(algebras)
    size = d ** m
    if size > limit:
        raise CapacityError(f"product domain {d}^{m} = {size} exceeds {limit}")
    digits = np.asarray(list(itertools.product(range(d), repeat=m)), dtype=np.int64).reshape(size, m)
    weights = d ** np.arange(m - 1, -1, -1, dtype=np.int64)
    ops = []
    for i, n in enumerate(algebras.signature.arities):
        rows = size ** n
        if rows > get_settings().max_tuples:
            raise CapacityError(f"product operation {i} needs {rows} rows")
        args = np.asarray(list(itertools.product(range(size), repeat=n)), dtype=np.int64).reshape(rows, n)
        out = np.zeros(rows, dtype=np.int64)
        arg_weights = d ** np.arange(n - 1, -1, -1, dtype=np.int64)
        for j, algebra in enumerate(algebras):
            component = digits[args][:, :, j]
            out += algebra.operations[i].array[component @ arg_weights] * weights[j]
        ops.append(FiniteOperation(f"o{i}", size, n, tuple(out.tolist())))
    return Algebra("product", algebras.signature, size, tuple(ops))


# -- outside and inside polymorphisms ---------------------------------------------

def outside_apply(f: FiniteOperation, algebras: Sequence[Algebra]) -> Algebra:
    """o_i^A(x̄) = f(o_i^{A_1}(x̄), ..., o_i^{A_n}(x̄)) for every symbol i."""
    if len(algebras) != f.arity:
        raise StructuralError(f"{f.name} takes {f.arity} algebras, got {len(algebras)}")
    if not algebras:
        raise StructuralError("outside application needs at least one algebra to fix the signature")
    first = algebras[0]
    d = f.domain_size
    weights = d ** np.arange(f.arity - 1, -1, -1, dtype=np.int64)
    ops = []
    for i in range(len(first.operations)):
        stacked = np.stack([a.operations[i].array for a in algebras])   # (n, rows)
        table = f.array[weights @ stacked]
        ops.append(FiniteOperation(first.operations[i].name, d, first.operations[i].arity, tuple(table.tolist())))
    return Algebra(f"{f.name}({','.join(a.name for a in algebras)})", first.signature, d, tuple(ops))


def outside_preserves(f: FiniteOperation, algebras: AlgebraSet) -> bool:
    for combo in itertools.product(algebras.algebras, repeat=f.arity):
        if outside_apply(f, combo) not in algebras:
            return False
    return True


def outside_lift_on(algebras: AlgebraSet, f: FiniteOperation) -> FiniteOperation:
    """f^𝔄 restricted to 𝔅 as an operation on the indices of 𝔅."""
    n = len(algebras)
    table = []
    for combo in itertools.product(algebras.algebras, repeat=f.arity):
        index = algebras.index(outside_apply(f, combo))
        if index is None:
            raise PreconditionError(f"{f.name}^𝔄 leaves 𝔅")
        table.append(index)
    return FiniteOperation(f"{f.name}^A", n, f.arity, table)


def inside_apply(system: OperationSystem, algebra: Algebra) -> Algebra:
    """o_i^B(x̄) = o_i^A(f^i_1(x̄), ..., f^i_{n_i}(x̄))."""
    if system.arities != algebra.signature.arities:
        raise StructuralError(f"system arities {system.arities} do not match signature {algebra.signature.arities}")
    d = algebra.domain_size
    ops = []
    for op, slot_ops in zip(algebra.operations, system.operations):
        n = op.arity
        if n == 0:
            ops.append(op)
            continue
        weights = d ** np.arange(n - 1, -1, -1, dtype=np.int64)
        index = weights @ np.stack([g.array for g in slot_ops])
        ops.append(FiniteOperation(op.name, d, n, tuple(op.array[index].tolist())))
    return Algebra(f"a({algebra.name})", algebra.signature, d, tuple(ops))


def inside_preserves(system: OperationSystem, algebras: AlgebraSet) -> bool:
    return all(inside_apply(system, a) in algebras for a in algebras)


def inside_lift_on(algebras: AlgebraSet, system: OperationSystem) -> FiniteOperation:
    table = []
    for algebra in algebras:
        index = algebras.index(inside_apply(system, algebra))
        if index is None:
            raise PreconditionError("the inside operation leaves 𝔅")
        table.append(index)
    return FiniteOperation("a_f", len(algebras), 1, table)


def close_algebras(seeds: Iterable[Algebra], outside_ops: Sequence[FiniteOperation] = (),
                   inside_systems: Sequence[OperationSystem] = (), limit: int = 64) -> Optional[AlgebraSet]:
    """Smallest set containing the seeds closed under the given lifts, or None past `limit` members."""
    seeds = list(seeds)
    if not seeds:
        raise StructuralError("closure needs at least one seed algebra")
    result = AlgebraSet(seeds[0].signature, seeds[0].domain_size)
    for seed in seeds:
        if seed not in result:
            result.add(seed)
    changed = True
    while changed:
        changed = False
        for f in outside_ops:
            for combo in itertools.product(list(result.algebras), repeat=f.arity):
                produced = outside_apply(f, combo)
                if produced not in result:
                    result.add(produced.renamed(f"B{len(result)}"))
                    changed = True
                    if len(result) > limit:
                        return None
        for system in inside_systems:
            for algebra in list(result.algebras):
                produced = inside_apply(system, algebra)
                if produced not in result:
                    result.add(produced.renamed(f"B{len(result)}"))
                    changed = True
                    if len(result) > limit:
                        return None
    return result


# -- theorem checks -------------------------------------------------------------

@dataclass(frozen=True)
class CheckOutcome:
    status: str                       # "pass", "skipped" or "violation"
    reason: str = ""
    payload: Dict = field(default_factory=dict, compare=False)

    @property
    def ok(self) -> bool:
        return self.status != "violation"

    @classmethod
    def passed(cls) -> "CheckOutcome":
        return cls("pass")

    @classmethod
    def skipped(cls, reason: str) -> "CheckOutcome":
        return cls("skipped", reason)

    @classmethod
    def violation(cls, reason: str, payload: Dict) -> "CheckOutcome":
        logger.error("THEOREM VIOLATION: %s", reason)
        return cls("violation", reason, payload)


def _algebra_payload(algebras: Iterable[Algebra]) -> List[Dict]:
    return [{"name": a.name, "tables": [list(op.table) for op in a.operations]} for a in algebras]


def verify_lifted_polymorphism(kind: str, template: RelationalStructure, algebras: AlgebraSet,
                               operation: Union[FiniteOperation, OperationSystem]) -> CheckOutcome:
    """Outside f^𝔄 or inside a_f̄ is a polymorphism of Γ^𝔅 whenever its preconditions hold."""
    if kind == "outside":
        if not is_polymorphism(operation, template):
            return CheckOutcome.skipped(f"{operation.name} is not a polymorphism of {template.name}")
        if not outside_preserves(operation, algebras):
            return CheckOutcome.skipped(f"{operation.name}^𝔄 does not preserve 𝔅")
        lifted = outside_lift_on(algebras, operation)
        tables = {"f": list(operation.table)}
    elif kind == "inside":
        for ops in operation.operations:
            for op in ops:
                if not is_polymorphism(op, template):
                    return CheckOutcome.skipped(f"{op.name} is not a polymorphism of {template.name}")
        if not inside_preserves(operation, algebras):
            return CheckOutcome.skipped("a_f does not preserve 𝔅")
        lifted = inside_lift_on(algebras, operation)
        tables = {"system": [[list(op.table) for op in ops] for ops in operation.operations]}
    else:
        raise StructuralError(f"unknown lifted polymorphism kind {kind!r}")
    gamma_b = build_gamma_B(template, algebras)
    for rel in gamma_b.relations:
        if rel.is_lazy:
            return CheckOutcome.skipped(f"Γ^𝔅 relation {rel.name} is too large to check")
        if not componentwise_preserves([lifted] * rel.arity, rel):
            return CheckOutcome.violation(
                f"{kind} polymorphism does not preserve {rel.name}^𝔅",
                {"template": template.payload(), "algebras": _algebra_payload(algebras), **tables})
    return CheckOutcome.passed()


def _same_table(left: FiniteOperation, right_fn, arity: int, d: int) -> bool:
    return all(left(*xs) == right_fn(*xs) for xs in itertools.product(range(d), repeat=arity))


def term_transport_check(case: str, algebras: Sequence[Algebra], f: FiniteOperation,
                         g: Optional[FiniteOperation] = None,
                         parts: Sequence[FiniteOperation] = (),
                         permutation: Sequence[int] = (), index: int = 0) -> CheckOutcome:
    """
    Check that a functional identity between base operations also holds
    between their outside lifts, for every tuple of the given algebras.
    """
    d = f.domain_size
    algebras = list(algebras)
    if case == "identification":
        if g is None or g.arity != f.arity - 1 or not _same_table(g, lambda *xs: f(*xs, xs[-1]), g.arity, d):
            raise PreconditionError("g(x_1..x_{n-1}) = f(x_1..x_{n-1}, x_{n-1}) does not hold")
        pairs = ((g, combo, f, combo + (combo[-1],)) for combo in itertools.product(algebras, repeat=g.arity))
    elif case == "fictitious":
        if g is None or g.arity != f.arity - 1 or not _same_table(f, lambda *xs: g(*xs[:-1]), f.arity, d):
            raise PreconditionError("f(x_1..x_n) = g(x_1..x_{n-1}) does not hold")
        pairs = ((f, combo, g, combo[:-1]) for combo in itertools.product(algebras, repeat=f.arity))
    elif case == "permutation":
        pi = tuple(permutation) or tuple(range(f.arity))
        if sorted(pi) != list(range(f.arity)):
            raise PreconditionError(f"{pi} is not a permutation of {f.arity} arguments")
        if g is None or g.arity != f.arity or not _same_table(g, lambda *xs: f(*(xs[p] for p in pi)), f.arity, d):
            raise PreconditionError("g(x) = f(x_π) does not hold")
        pairs = ((g, combo, f, tuple(combo[p] for p in pi)) for combo in itertools.product(algebras, repeat=f.arity))
    elif case == "projection":
        if not _same_table(f, lambda *xs: xs[index], f.arity, d):
            raise PreconditionError(f"{f.name} is not the projection on argument {index}")
        for combo in itertools.product(algebras, repeat=f.arity):
            if outside_apply(f, combo) != combo[index]:
                return CheckOutcome.violation(f"projection lift differs on {[a.name for a in combo]}",
                                              {"f": list(f.table), "algebras": _algebra_payload(combo)})
        return CheckOutcome.passed()
    elif case == "superposition":
        parts = list(parts)
        if g is None or len(parts) != f.arity or any(p.arity != g.arity for p in parts):
            raise PreconditionError("superposition needs g and n parts of g's arity")
        if not _same_table(g, lambda *xs: f(*(p(*xs) for p in parts)), g.arity, d):
            raise PreconditionError("g = f(g_1, ..., g_n) does not hold")
        for combo in itertools.product(algebras, repeat=g.arity):
            left = outside_apply(g, combo)
            right = outside_apply(f, [outside_apply(p, combo) for p in parts])
            if left != right:
                return CheckOutcome.violation(
                    "superposition does not transport",
                    {"f": list(f.table), "g": list(g.table), "parts": [list(p.table) for p in parts],
                     "algebras": _algebra_payload(combo)})
        return CheckOutcome.passed()
    else:
        raise StructuralError(f"unknown transport case {case!r}")
    for left_op, left_args, right_op, right_args in pairs:
        if outside_apply(left_op, left_args) != outside_apply(right_op, right_args):
            return CheckOutcome.violation(
                f"{case} does not transport",
                {"f": list(f.table), "g": list(g.table), "algebras": _algebra_payload(left_args)})
    return CheckOutcome.passed()


def _idempotent_power(g: FiniteOperation) -> FiniteOperation:
    """The power g^k with g^k ∘ g^k = g^k."""
    d = g.domain_size
    power = g
    while True:
        squared = tuple(power(power(x)) for x in range(d))
        if squared == power.table:
            return power
        power = FiniteOperation(g.name, d, 1, tuple(g(power(x)) for x in range(d)))


@dataclass(frozen=True)
class SiggersTransport:
    g: Optional[FiniteOperation]
    s: Optional[FiniteOperation]
    reason: str = ""


def siggers_transport(template: RelationalStructure, pair: Tuple[FiniteOperation, FiniteOperation],
                      algebras: AlgebraSet) -> SiggersTransport:
    """
    (g^𝔄, s^𝔄) as a Siggers pair of Γ^𝔅.

    g^𝔄 itself is returned whenever s^𝔄 is closed, Siggers and idempotent on
    its image. Otherwise g is replaced by its idempotent power, a retraction
    onto g(D); when that power has a smaller image than g the result carries
    a reason and no pair. On two elements the only non-idempotent unary map
    is the swap, whose power is the identity, so g(D) is always kept there.
    """
    g, s = pair
    if not (is_siggers_pair(g, s) and is_polymorphism(g, template) and is_polymorphism(s, template)):
        raise PreconditionError(f"({g.name}, {s.name}) is not a Siggers pair admitted by {template.name}")
    if not outside_preserves(s, algebras):
        return SiggersTransport(None, None, f"{s.name}^𝔄 does not preserve 𝔅")
    if not outside_preserves(g, algebras):
        return SiggersTransport(None, None, f"{g.name}^𝔄 does not preserve 𝔅")
    s_lift = outside_lift_on(algebras, s)
    g_lift = outside_lift_on(algebras, g)
    if not is_siggers_pair(g_lift, s_lift):
        retraction = _idempotent_power(g)
        if retraction.image() != g.image() or not is_siggers_pair(retraction, s):
            return SiggersTransport(None, None, "idempotent power of g changes its image")
        if not outside_preserves(retraction, algebras):
            return SiggersTransport(None, None, f"idempotent power of {g.name} does not preserve 𝔅")
        g_lift = outside_lift_on(algebras, retraction)
    gamma_b = build_gamma_B(template, algebras)
    limit = get_settings().max_tuples
    payload = {"template": template.payload(), "g": list(g.table), "s": list(s.table),
               "algebras": _algebra_payload(algebras)}
    if not is_siggers_pair(g_lift, s_lift):
        raise TheoremViolation("transported pair is not a Siggers pair on 𝔅", payload)
    for rel in gamma_b.relations:
        if rel.is_lazy or len(rel) ** 4 > limit:
            return SiggersTransport(g_lift, s_lift, f"relation {rel.name}^𝔅 too large to confirm preservation")
        if not (componentwise_preserves([g_lift] * rel.arity, rel) and componentwise_preserves([s_lift] * rel.arity, rel)):
            raise TheoremViolation(f"transported pair does not preserve {rel.name}^𝔅", payload)
    return SiggersTransport(g_lift, s_lift)


def lifted_in_minv_check(template: RelationalStructure, algebras: AlgebraSet) -> CheckOutcome:
    """Every relation of Γ_{Γ^𝔅}, read multi-sorted, is invariant under each {o_h^{A^c}}."""
    gamma_b = build_gamma_B(template, algebras)
    if not gamma_b.is_materialized:
        return CheckOutcome.skipped("Γ^𝔅 has lazy relations")
    lifted = lift_language(template, gamma_b)
    for rel in lifted_multisorted_relations(lifted):
        for h in range(len(algebras.signature)):
            interpretations = {i: a.operations[h] for i, a in enumerate(algebras)}
            if not multisorted_polymorphism_check(interpretations, rel):
                return CheckOutcome.violation(
                    f"{rel.name} is not invariant under symbol {h}",
                    {"template": template.payload(), "algebras": _algebra_payload(algebras)})
    return CheckOutcome.passed()


# -- the reduction -----------------------------------------------------------------

@dataclass(frozen=True)
class PipelineResult:
    member: bool
    step: int
    tractability: TractabilityVerdict
    gamma_b_map: Optional[Homomorphism] = None
    instance: Optional[MultiSortedInstance] = None
    assignment: Optional[Tuple[int, ...]] = None
    certificates: Tuple[str, ...] = ()


def reduction_pipeline(template: RelationalStructure, algebras: AlgebraSet, structure: RelationalStructure,
                       oracle: Optional[TractabilityOracle] = None, cross_check: bool = True) -> PipelineResult:
    """Decide R ∈ Up(Γ) through CSP(Γ^𝔅) and a multi-sorted instance over Γ_{Γ^𝔅}."""
    if not is_extending(algebras):
        raise PreconditionError("the reduction needs an extending set of algebras")
    structure.require_compatible(template)
    tractability = is_tractable_set(algebras, oracle)
    trail = [f"tractability: {tractability.label}"]
    gamma_b = build_gamma_B(template, algebras)
    h = find_homomorphism(structure, gamma_b)
    if h is None:
        trail.append(f"step 1: {structure.name} does not map to {gamma_b.name}")
        result = PipelineResult(False, 1, tractability, certificates=tuple(trail))
    else:
        trail.append(f"step 1: domain function {list(h.mapping)}")
        constraints = []
        relations: Dict[Tuple[int, Tuple[int, ...]], MultiSortedRelation] = {}
        for i, (rel_r, rel_t) in enumerate(zip(structure.relations, template.relations)):
            for scope in rel_r:
                sorts = h.image(scope)
                rel = relations.get((i, sorts))
                if rel is None:
                    rel = MultiSortedRelation(f"f_{i + 1}@{','.join(str(a) for a in sorts)}", sorts, rel_t.tuples)
                    relations[(i, sorts)] = rel
                constraints.append((scope, rel))
        instance = MultiSortedInstance(structure.domain_size, h.mapping, tuple(constraints))
        trail.append(f"step 2: {len(constraints)} multi-sorted constraints")
        assignment = solve_multisorted(instance, [template.domain_size] * len(algebras))
        if assignment is None:
            trail.append("step 3: multi-sorted instance refuted")
        else:
            trail.append(f"step 3: assignment {list(assignment)}")
            if not is_homomorphism(Homomorphism(structure, template, assignment)):
                raise TheoremViolation("multi-sorted solution is not a homomorphism into Γ",
                                       {"input": structure.payload(), "template": template.payload(),
                                        "algebras": _algebra_payload(algebras), "assignment": assignment})
        result = PipelineResult(assignment is not None, 3, tractability, h, instance, assignment, tuple(trail))
    if cross_check:
        direct = find_homomorphism(structure, template) is not None
        if direct != result.member:
            raise TheoremViolation("reduction verdict differs from direct search",
                                   {"input": structure.payload(), "template": template.payload(),
                                    "algebras": _algebra_payload(algebras), "pipeline": result.member, "direct": direct})
    return result


# -- identity exploration -------------------------------------------------------

def _identity_checks() -> Dict[str, Tuple[int, callable]]:
    return {
        "idempotent": (0, lambda op, d: all(op(*([x] * op.arity)) == x for x in range(d))),
        "commutative": (2, lambda op, d: all(op(x, y) == op(y, x) for x in range(d) for y in range(d))),
        "majority": (3, lambda op, d: all(op(x, x, y) == op(x, y, x) == op(y, x, x) == x
                                          for x in range(d) for y in range(d))),
        "minority": (3, lambda op, d: all(op(x, x, y) == op(x, y, x) == op(y, x, x) == y
                                          for x in range(d) for y in range(d))),
        "weak-nu": (3, lambda op, d: all(op(x, x, y) == op(x, y, x) == op(y, x, x)
                                         for x in range(d) for y in range(d))),
        "cyclic": (3, lambda op, d: all(op(x, y, z) == op(y, z, x)
                                        for x in range(d) for y in range(d) for z in range(d))),
    }


def observed_identities(op: FiniteOperation) -> List[str]:
    found = []
    for name, (arity, check) in _identity_checks().items():
        if arity and op.arity != arity:
            continue
        if op.arity and check(op, op.domain_size):
            found.append(name)
    return found


@dataclass(frozen=True)
class IdentityReport:
    outside: Dict[str, List[str]]
    inside: Dict[str, List[str]]


def identity_report(template: RelationalStructure, algebras: AlgebraSet, max_arity: int = 3) -> IdentityReport:
    """Identities seen among outside (arity <= max_arity) and inside lifts; exploration only."""
    d = template.domain_size
    if d != 2:
        raise CapacityError("identity exploration runs on Boolean domains only")
    outside: Dict[str, List[str]] = {}
    for n in range(1, max_arity + 1):
        for table in itertools.product(range(d), repeat=d ** n):
            f = FiniteOperation(f"f{n}_{encode_tuple(table, d)}", d, n, table)
            if is_polymorphism(f, template) and outside_preserves(f, algebras):
                lifted = outside_lift_on(algebras, f)
                outside[f.name] = observed_identities(lifted)
    inside: Dict[str, List[str]] = {}
    slot_choices = []
    for n in algebras.signature.arities:
        candidates = [FiniteOperation(f"p{encode_tuple(t, d)}", d, n, t)
                      for t in itertools.product(range(d), repeat=d ** n)]
        polys = [c for c in candidates if is_polymorphism(c, template)]
        slot_choices.append(list(itertools.product(polys, repeat=n)))
    for index, choice in enumerate(itertools.product(*slot_choices)):
        system = OperationSystem(algebras.signature.arities, choice)
        if inside_preserves(system, algebras):
            lifted = inside_lift_on(algebras, system)
            inside[f"a{index}"] = observed_identities(lifted)
    return IdentityReport(outside, inside)
