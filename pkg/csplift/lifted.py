"""
Lifted languages Γ_R and multi-sorted CSP.

Γ_R lives over V × D with (v, a) encoded as v*|D| + a. Each tuple v of r_i
yields a relation f_i@v pinning the base relation ρ_i to the blocks of v, and
each v ∈ V yields the unary block relation Dom@v.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from .errors import StructuralError
from .operations import FiniteOperation
from .solver import find_homomorphism
from .structures import Homomorphism, Relation, RelationalStructure
from .valued import CostFunction, ValuedTemplate, VcspInstance

logger = logging.getLogger(__name__)


def lifted_element(v: int, a: int, base: int) -> int:
    return v * base + a


def split_element(x: int, base: int) -> Tuple[int, int]:
    return divmod(x, base)


def scope_label(scope: Sequence[int]) -> str:
    return ",".join(str(v) for v in scope)


@dataclass(frozen=True)
class LiftedRelationKey:
    """Where a lifted relation comes from: base relation index and input scope."""

    kind: str                 # "f" or "dom"
    index: int                # base relation index, -1 for Dom@v
    scope: Tuple[int, ...]

    @property
    def name(self) -> str:
        if self.kind == "dom":
            return f"Dom@{self.scope[0]}"
        return f"f_{self.index + 1}@{scope_label(self.scope)}"


@dataclass(frozen=True)
class LiftedLanguage:
    base_template: Union[RelationalStructure, ValuedTemplate]
    base_input: RelationalStructure
    keys: Tuple[LiftedRelationKey, ...]
    structure: RelationalStructure
    cost_functions: Tuple[CostFunction, ...] = ()
    valued: bool = False

    @property
    def base_size(self) -> int:
        return self.base_template.domain_size

    def encode(self, v: int, a: int) -> int:
        return lifted_element(v, a, self.base_size)

    def decode(self, x: int) -> Tuple[int, int]:
        return split_element(x, self.base_size)

    def block(self, v: int) -> range:
        start = v * self.base_size
        return range(start, start + self.base_size)


def _base_arities(template) -> Tuple[int, ...]:
    if isinstance(template, ValuedTemplate):
        return tuple(f.arity for f in template.functions)
    return template.arities


def lift_language(template: Union[RelationalStructure, ValuedTemplate],
                  structure: RelationalStructure) -> LiftedLanguage:
    """Build Γ_R: one f_i@v per tuple v ∈ r_i, one Dom@v per v ∈ V."""
    if _base_arities(template) != structure.arities:
        raise StructuralError(
            f"signature mismatch: template arities {list(_base_arities(template))}, "
            f"input arities {list(structure.arities)}")
    base = template.domain_size
    keys: List[LiftedRelationKey] = []
    relations: List[Relation] = []
    costs: List[CostFunction] = []
    valued = isinstance(template, ValuedTemplate)
    for index, rel in enumerate(structure.relations):
        for scope in rel:
            key = LiftedRelationKey("f", index, tuple(scope))
            keys.append(key)
            if valued:
                base_fn = template.functions[index]
                entries = {}
                for row, value in base_fn.entries.items():
                    entries[tuple(lifted_element(v, a, base) for v, a in zip(scope, row))] = value
                costs.append(CostFunction(key.name, structure.domain_size * base, len(scope), entries))
                rows = [tuple(lifted_element(v, a, base) for v, a in zip(scope, row)) for row in base_fn.finite_domain()]
            else:
                rows = [tuple(lifted_element(v, a, base) for v, a in zip(scope, row)) for row in template.relations[index]]
            relations.append(Relation(key.name, len(scope), rows))
    for v in range(structure.domain_size):
        key = LiftedRelationKey("dom", -1, (v,))
        keys.append(key)
        relations.append(Relation(key.name, 1, ((lifted_element(v, a, base),) for a in range(base))))
        if valued:
            costs.append(CostFunction(key.name, structure.domain_size * base, 1,
                                      {(lifted_element(v, a, base),): 0 for a in range(base)}))
    lifted = RelationalStructure(f"{template.name}_{structure.name}", structure.domain_size * base, tuple(relations))
    logger.debug("lifted %s over %s: %d relations, domain %d", template.name, structure.name,
                 len(relations), lifted.domain_size)
    return LiftedLanguage(template, structure, tuple(keys), lifted, tuple(costs), valued)


def canonical_instance(structure: RelationalStructure, lifted: Optional[LiftedLanguage] = None,
                       template=None) -> RelationalStructure:
    """R' over V with the singleton scope {v} in every lifted relation named by v."""
    if lifted is None:
        if template is None:
            raise StructuralError("canonical_instance needs the lifted language or its template")
        lifted = lift_language(template, structure)
    relations = []
    for key in lifted.keys:
        relations.append(Relation(key.name, len(key.scope), (key.scope,)))
    return RelationalStructure(f"{structure.name}'", structure.domain_size, tuple(relations))


def lift_valued_language(template: ValuedTemplate, structure: RelationalStructure) -> LiftedLanguage:
    """Cost lift: f_i@v costs f_i(y) on d(v, y) and ∞ off the blocks of v."""
    if not isinstance(template, ValuedTemplate):
        raise StructuralError(f"{template.name} is not a valued template")
    return lift_language(template, structure)


def canonical_vcsp(structure: RelationalStructure, lifted: LiftedLanguage) -> VcspInstance:
    """Valued canonical instance: one unit-weight cost term per lifted cost function."""
    if not lifted.valued:
        raise StructuralError("canonical_vcsp needs a valued lift")
    constraints = [(key.scope, f, 1) for key, f in zip(lifted.keys, lifted.cost_functions)]
    return VcspInstance(structure.domain_size, lifted.structure.domain_size, tuple(constraints))


def lifted_to_base(h: Homomorphism, lifted: LiftedLanguage) -> Tuple[int, ...]:
    """Read a canonical-instance solution back as a map V -> D."""
    return tuple(lifted.decode(x)[1] for x in h.mapping)


# -- multi-sorted CSP ---------------------------------------------------------------

@dataclass(frozen=True)
class MultiSortedRelation:
    name: str
    signature: Tuple[int, ...]
    tuples: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, 'signature', tuple(self.signature))
        object.__setattr__(self, 'tuples', tuple(sorted({tuple(t) for t in self.tuples})))

    @property
    def arity(self) -> int:
        return len(self.signature)


@dataclass(frozen=True)
class MultiSortedInstance:
    variables: int
    delta: Tuple[int, ...]
    constraints: Tuple[Tuple[Tuple[int, ...], MultiSortedRelation], ...]

    def __post_init__(self):
        object.__setattr__(self, 'delta', tuple(self.delta))
        object.__setattr__(self, 'constraints', tuple((tuple(s), r) for s, r in self.constraints))
        if len(self.delta) != self.variables:
            raise StructuralError(f"domain function covers {len(self.delta)} of {self.variables} variables")
        for scope, rel in self.constraints:
            expected = tuple(self.delta[v] for v in scope)
            if rel.signature != expected:
                raise StructuralError(
                    f"constraint on {scope} uses {rel.name} with signature {rel.signature}, "
                    f"variables have sorts {expected}")


@dataclass(frozen=True)
class SortConflict:
    variable: int
    sorts: Tuple[int, ...]

    def describe(self) -> str:
        return f"variable {self.variable} is required to take values in domains {list(self.sorts)}"


@dataclass(frozen=True)
class MultiSortedInterpretation:
    instance: MultiSortedInstance
    delta: Tuple[int, ...]
    projected: RelationalStructure
    certificate: Homomorphism
    unsorted: Tuple[int, ...] = ()


class _UnionFind:
    def __init__(self, size: int):
        self.parent = list(range(size))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def interpret_as_multisorted(instance: RelationalStructure,
                             lifted: LiftedLanguage) -> Union[MultiSortedInterpretation, SortConflict]:
    """Recast an instance of CSP(Γ_R) as an MCSP instance, or report a sort conflict."""
    instance.require_compatible(lifted.structure)
    n_vars = instance.domain_size
    n_sorts = lifted.base_input.domain_size
    uf = _UnionFind(n_vars + n_sorts)
    for key, rel in zip(lifted.keys, instance.relations):
        for row in rel:
            for w, v in zip(row, key.scope):
                uf.union(w, n_vars + v)
    sorts_of_root: Dict[int, List[int]] = {}
    for v in range(n_sorts):
        sorts_of_root.setdefault(uf.find(n_vars + v), []).append(v)
    delta = []
    unsorted = []
    for w in range(n_vars):
        sorts = sorts_of_root.get(uf.find(w), [])
        if len(sorts) > 1:
            return SortConflict(w, tuple(sorts))
        if not sorts:
            unsorted.append(w)
            delta.append(0)
        else:
            delta.append(sorts[0])
    if unsorted and n_sorts == 0:
        return SortConflict(unsorted[0], ())

    template = lifted.base_template
    base_relations = _base_relation_tuples(template)
    constraints = []
    projected_rows: List[List[Tuple[int, ...]]] = [[] for _ in lifted.base_input.relations]
    for key, rel in zip(lifted.keys, instance.relations):
        if key.kind == "dom":
            sort = key.scope[0]
            ms = MultiSortedRelation(key.name, (sort,), ((a,) for a in range(template.domain_size)))
            constraints.extend((row, ms) for row in rel)
            continue
        ms = MultiSortedRelation(key.name, key.scope, base_relations[key.index])
        for row in rel:
            constraints.append((row, ms))
            projected_rows[key.index].append(row)
    mcsp = MultiSortedInstance(n_vars, tuple(delta), tuple(constraints))
    projected = RelationalStructure(
        f"{instance.name}_p", n_vars,
        tuple(Relation(r.name, r.arity, rows) for r, rows in zip(lifted.base_input.relations, projected_rows)))
    certificate = Homomorphism(projected, lifted.base_input, tuple(delta))
    return MultiSortedInterpretation(mcsp, tuple(delta), projected, certificate, tuple(unsorted))


def _base_relation_tuples(template) -> List[Tuple[Tuple[int, ...], ...]]:
    if isinstance(template, ValuedTemplate):
        return [tuple(f.finite_domain()) for f in template.functions]
    return [rel.tuples for rel in template.relations]


def solve_multisorted(instance: MultiSortedInstance, domains: Sequence[int]) -> Optional[Tuple[int, ...]]:
    """Exact backtracking over per-sort domains; values are indices within each sort."""
    if any(s >= len(domains) or s < 0 for s in instance.delta):
        raise StructuralError("domain function refers to an unknown sort")
    offsets = list(itertools.accumulate([0] + list(domains[:-1])))
    total = sum(domains)
    relation_ids: Dict[int, int] = {}
    rel_objects: List[MultiSortedRelation] = []
    scopes: List[List[Tuple[int, ...]]] = []
    for scope, rel in instance.constraints:
        for value_row in rel.tuples:
            for sort, a in zip(rel.signature, value_row):
                if not 0 <= a < domains[sort]:
                    raise StructuralError(f"relation {rel.name} has value {a} outside sort {sort}")
        slot = relation_ids.get(id(rel))
        if slot is None:
            slot = len(rel_objects)
            relation_ids[id(rel)] = slot
            rel_objects.append(rel)
            scopes.append([])
        scopes[slot].append(scope)
    src, tgt = [], []
    for slot, rel in enumerate(rel_objects):
        rows = [tuple(offsets[s] + a for s, a in zip(rel.signature, row)) for row in rel.tuples]
        tgt.append(Relation(f"c{slot}", rel.arity, rows))
        src.append(Relation(f"c{slot}", rel.arity, scopes[slot]))
    for sort, size in enumerate(domains):
        tgt.append(Relation(f"sort{sort}", 1, ((offsets[sort] + a,) for a in range(size))))
        src.append(Relation(f"sort{sort}", 1, ((w,) for w in range(instance.variables) if instance.delta[w] == sort)))
    source = RelationalStructure("mcsp", instance.variables, tuple(src))
    target = RelationalStructure("sorts", total, tuple(tgt))
    h = find_homomorphism(source, target)
    if h is None:
        return None
    return tuple(x - offsets[instance.delta[w]] for w, x in enumerate(h.mapping))


def multisorted_polymorphism_check(interpretations: Mapping[int, FiniteOperation],
                                   relation: MultiSortedRelation) -> bool:
    """The multi-sorted operation {t^D} applied coordinate-wise keeps every n tuples inside ρ."""
    ops = [interpretations[s] for s in relation.signature]
    if not ops:
        return True
    n = ops[0].arity
    if any(op.arity != n for op in interpretations.values()):
        raise StructuralError("multi-sorted operation interpretations must share one arity")
    members = set(relation.tuples)
    if not members:
        return True
    for choice in itertools.product(relation.tuples, repeat=n):
        out = tuple(op(*(row[j] for row in choice)) for j, op in enumerate(ops))
        if out not in members:
            return False
    return True


def lifted_multisorted_relations(lifted: LiftedLanguage) -> List[MultiSortedRelation]:
    """Each f_i@v of Γ_R read as a multi-sorted relation with signature v."""
    base = _base_relation_tuples(lifted.base_template)
    out = []
    for key in lifted.keys:
        if key.kind == "f":
            out.append(MultiSortedRelation(key.name, key.scope, base[key.index]))
    return out
