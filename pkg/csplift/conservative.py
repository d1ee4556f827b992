"""
Conservative valued templates: STP/MJN multimorphisms and the structure Γ′_c.

Γ′_c has one element per triple (M, (⊔,⊓), (Mj_1,Mj_2,Mn_3)) and one crisp
relation f′ per cost function f. Membership compares exact costs as int64
after scaling every table by a common denominator.
"""

import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Dict, FrozenSet, Iterator, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from .config import get_settings
from .errors import CapacityError, StructuralError
from .operations import FiniteOperation
from .solver import find_homomorphism
from .structures import LazyRelation, Relation, RelationalStructure
from .valued import CostFunction, ValuedTemplate, is_multimorphism

logger = logging.getLogger(__name__)

PairSet = FrozenSet[FrozenSet[int]]


def unordered_pairs(domain_size: int) -> List[FrozenSet[int]]:
    return [frozenset(p) for p in itertools.combinations(range(domain_size), 2)]


@dataclass(frozen=True)
class ConservativeElement:
    domain_size: int
    M: PairSet
    join: Tuple[int, ...]
    meet: Tuple[int, ...]
    mj1: Tuple[int, ...]
    mj2: Tuple[int, ...]
    mn3: Tuple[int, ...]

    @cached_property
    def operations(self) -> Dict[str, FiniteOperation]:
        d = self.domain_size
        return {
            "join": FiniteOperation("join", d, 2, self.join),
            "meet": FiniteOperation("meet", d, 2, self.meet),
            "mj1": FiniteOperation("mj1", d, 3, self.mj1),
            "mj2": FiniteOperation("mj2", d, 3, self.mj2),
            "mn3": FiniteOperation("mn3", d, 3, self.mn3),
        }

    @property
    def stp_weighting(self):
        ops = self.operations
        return [(ops["join"], Fraction(1, 2)), (ops["meet"], Fraction(1, 2))]

    @property
    def mjn_weighting(self):
        ops = self.operations
        return [(ops["mj1"], Fraction(1, 3)), (ops["mj2"], Fraction(1, 3)), (ops["mn3"], Fraction(1, 3))]

    def describe(self) -> str:
        pairs = sorted(tuple(sorted(p)) for p in self.M)
        return f"M={pairs} join={self.join} meet={self.meet}"


def validate_stp_mjn(element: ConservativeElement) -> List[str]:
    """Every violated STP/MJN clause, empty when the element is well formed."""
    d = element.domain_size
    ops = element.operations
    join, meet = ops["join"], ops["meet"]
    mj1, mj2, mn3 = ops["mj1"], ops["mj2"], ops["mn3"]
    problems = []
    for x, y in itertools.product(range(d), repeat=2):
        if {join(x, y), meet(x, y)} != {x, y}:
            problems.append(f"join/meet not conservative at ({x},{y})")
    for pair in element.M:
        a, b = sorted(pair)
        if join(a, b) != join(b, a) or meet(a, b) != meet(b, a):
            problems.append(f"join/meet not commutative on M pair {{{a},{b}}}")
    complement = set(unordered_pairs(d)) - set(element.M)
    for args in itertools.product(range(d), repeat=3):
        out = (mj1(*args), mj2(*args), mn3(*args))
        if sorted(out) != sorted(args):
            problems.append(f"(mj1,mj2,mn3){args} = {out} is not a rearrangement of the arguments")
            continue
        values = frozenset(args)
        if len(values) == 2 and values in complement:
            majority = max(values, key=args.count)
            minority = min(values, key=args.count)
            if out != (majority, majority, minority):
                problems.append(f"(mj1,mj2,mn3){args} = {out}, expected majority/majority/minority")
    return problems


def _stp_choices(d: int, M: PairSet) -> List[List[Tuple[Tuple[int, int], int]]]:
    """Per off-diagonal slot, the allowed (ordered pair, join value) assignments."""
    slots = []
    for pair in unordered_pairs(d):
        a, b = sorted(pair)
        if pair in M:
            slots.append([[((a, b), a), ((b, a), a)], [((a, b), b), ((b, a), b)]])
        else:
            slots.append([[((a, b), ja), ((b, a), jb)] for ja in (a, b) for jb in (a, b)])
    return slots


def _mjn_choices(d: int, M: PairSet) -> List[Tuple[Tuple[int, ...], List[Tuple[int, int, int]]]]:
    complement = set(unordered_pairs(d)) - set(M)
    choices = []
    for args in itertools.product(range(d), repeat=3):
        values = frozenset(args)
        if len(values) == 2 and values in complement:
            majority = max(values, key=args.count)
            minority = min(values, key=args.count)
            options = [(majority, majority, minority)]
        else:
            rest = sorted(set(itertools.permutations(args)) - {args})
            options = [args] + rest
        choices.append((args, options))
    return choices


def count_conservative_elements(domain_size: int, M: PairSet) -> int:
    stp = 1
    for slot in _stp_choices(domain_size, M):
        stp *= len(slot)
    mjn = 1
    for _, options in _mjn_choices(domain_size, M):
        mjn *= len(options)
    return stp * mjn


def _stp_tables(d: int, M: PairSet) -> Iterator[Tuple[Tuple[int, ...], Tuple[int, ...]]]:
    slots = _stp_choices(d, M)
    for picks in itertools.product(*slots):
        join = [0] * (d * d)
        meet = [0] * (d * d)
        for x in range(d):
            join[x * d + x] = meet[x * d + x] = x
        for assignment in picks:
            for (x, y), j in assignment:
                join[x * d + y] = j
                meet[x * d + y] = y if j == x else x
        yield tuple(join), tuple(meet)


def _mjn_tables(d: int, M: PairSet) -> Iterator[Tuple[Tuple[int, ...], Tuple[int, ...], Tuple[int, ...]]]:
    choices = _mjn_choices(d, M)
    for picks in itertools.product(*(options for _, options in choices)):
        yield (tuple(p[0] for p in picks), tuple(p[1] for p in picks), tuple(p[2] for p in picks))


def enumerate_conservative_elements(domain_size: int, M: PairSet,
                                    limit: Optional[int] = None) -> Iterator[ConservativeElement]:
    """All (M, STP, MJN) triples for one M: STP tables outer, MJN tables inner."""
    M = frozenset(frozenset(p) for p in M)
    if any(len(p) != 2 or not all(0 <= a < domain_size for a in p) for p in M):
        raise StructuralError(f"M must hold unordered pairs of distinct elements of range({domain_size})")
    limit = limit if limit is not None else get_settings().max_tuples
    total = count_conservative_elements(domain_size, M)
    if total > limit:
        raise CapacityError(f"{total} conservative elements for |D|={domain_size} exceed limit {limit}")
    for join, meet in _stp_tables(domain_size, M):
        for mj1, mj2, mn3 in _mjn_tables(domain_size, M):
            yield ConservativeElement(domain_size, M, join, meet, mj1, mj2, mn3)


def all_pair_sets(domain_size: int) -> List[PairSet]:
    """Every M, largest first (descending bitmask over the unordered pairs)."""
    pairs = unordered_pairs(domain_size)
    sets = []
    for mask in range((1 << len(pairs)) - 1, -1, -1):
        sets.append(frozenset(p for i, p in enumerate(pairs) if mask >> i & 1))
    return sets


def enumerate_all_conservative_elements(domain_size: int, limit: Optional[int] = None) -> Iterator[ConservativeElement]:
    """D′_c: the union over every M."""
    limit = limit if limit is not None else get_settings().max_tuples
    total = sum(count_conservative_elements(domain_size, M) for M in all_pair_sets(domain_size))
    if total > limit:
        raise CapacityError(f"|D′_c| = {total} for |D|={domain_size} exceeds limit {limit}")
    for M in all_pair_sets(domain_size):
        yield from enumerate_conservative_elements(domain_size, M, limit)


def find_kz_multimorphisms(template: ValuedTemplate) -> Optional[ConservativeElement]:
    """First (M, STP, MJN) whose two weightings are multimorphisms of every cost function."""
    d = template.domain_size
    limit = get_settings().max_tuples
    for M in all_pair_sets(d):
        if count_conservative_elements(d, M) > limit:
            raise CapacityError(f"STP/MJN search for |D|={d} would scan more than {limit} elements")
        for join, meet in _stp_tables(d, M):
            probe = ConservativeElement(d, M, join, meet, *_identity_mjn(d))
            if not all(is_multimorphism(probe.stp_weighting, f) for f in template.functions):
                continue
            for mj1, mj2, mn3 in _mjn_tables(d, M):
                element = ConservativeElement(d, M, join, meet, mj1, mj2, mn3)
                if all(is_multimorphism(element.mjn_weighting, f) for f in template.functions):
                    logger.info("STP/MJN witness for %s: %s", template.name, element.describe())
                    return element
    logger.info("no STP/MJN certificate for %s", template.name)
    return None


def _identity_mjn(d: int):
    rows = list(itertools.product(range(d), repeat=3))
    return (tuple(r[0] for r in rows), tuple(r[1] for r in rows), tuple(r[2] for r in rows))


# -- Γ′_c -----------------------------------------------------------------------

class _ElementTables:
    """Operation tables of all elements stacked as numpy arrays."""

    def __init__(self, elements: Sequence[ConservativeElement]):
        self.join = np.asarray([e.join for e in elements], dtype=np.int64)
        self.meet = np.asarray([e.meet for e in elements], dtype=np.int64)
        self.mj1 = np.asarray([e.mj1 for e in elements], dtype=np.int64)
        self.mj2 = np.asarray([e.mj2 for e in elements], dtype=np.int64)
        self.mn3 = np.asarray([e.mn3 for e in elements], dtype=np.int64)


class _CostCheck:
    """Vectorised component-wise STP and MJN inequalities for one cost function."""

    def __init__(self, f: CostFunction):
        d, p = f.domain_size, f.arity
        self.f = f
        self.values, self.infinite = f.scaled_table(f.denominator())
        digits = np.asarray(list(itertools.product(range(d), repeat=p)), dtype=np.int64).reshape(d ** p, p)
        weights = d ** np.arange(p - 1, -1, -1, dtype=np.int64)
        self.weights = weights
        xi, yi = np.divmod(np.arange(d ** (2 * p), dtype=np.int64), d ** p)
        # pair arguments per coordinate: index into a d*d table
        self.pair_args = digits[xi] * d + digits[yi]                          # (C2, p)
        self.pair_rhs = self.values[xi] + self.values[yi]
        self.pair_rhs_inf = self.infinite[xi] | self.infinite[yi]
        xt, rest = np.divmod(np.arange(d ** (3 * p), dtype=np.int64), d ** (2 * p))
        yt, zt = np.divmod(rest, d ** p)
        self.triple_args = digits[xt] * d * d + digits[yt] * d + digits[zt]   # (C3, p)
        self.triple_rhs = self.values[xt] + self.values[yt] + self.values[zt]
        self.triple_rhs_inf = self.infinite[xt] | self.infinite[yt] | self.infinite[zt]

    def _codes(self, tables: np.ndarray, prefix: Sequence[int], last: np.ndarray, args: np.ndarray) -> np.ndarray:
        """Output codes for prefix elements fixed and candidates `last` in the final coordinate."""
        p = self.f.arity
        head = np.zeros(args.shape[0], dtype=np.int64)
        for j, e in enumerate(prefix):
            head += tables[e][args[:, j]] * self.weights[j]
        tail = tables[last][:, args[:, p - 1]] * self.weights[p - 1]         # (K, C)
        return head[None, :] + tail

    def _holds(self, lhs_codes: Sequence[np.ndarray], rhs: np.ndarray, rhs_inf: np.ndarray) -> np.ndarray:
        lhs = sum(self.values[c] for c in lhs_codes)
        lhs_inf = np.zeros_like(lhs, dtype=bool)
        for c in lhs_codes:
            lhs_inf |= self.infinite[c]
        ok = rhs_inf[None, :] | (~lhs_inf & (lhs <= rhs[None, :]))
        return ok.all(axis=1)

    def member_mask(self, tables: _ElementTables, prefix: Sequence[int], last: np.ndarray) -> np.ndarray:
        if self.f.arity == 0:
            return np.ones(len(last), dtype=bool)
        stp = self._holds([self._codes(tables.join, prefix, last, self.pair_args),
                           self._codes(tables.meet, prefix, last, self.pair_args)],
                          self.pair_rhs, self.pair_rhs_inf)
        mjn = self._holds([self._codes(tables.mj1, prefix, last, self.triple_args),
                           self._codes(tables.mj2, prefix, last, self.triple_args),
                           self._codes(tables.mn3, prefix, last, self.triple_args)],
                          self.triple_rhs, self.triple_rhs_inf)
        return stp & mjn


def gamma_prime_c_membership(f: CostFunction, elements: Sequence[ConservativeElement]) -> bool:
    """Component-wise STP and MJN inequalities of f over all x, y, z ∈ D^p."""
    if len(elements) != f.arity:
        raise StructuralError(f"{len(elements)} elements for cost {f.name} of arity {f.arity}")
    if f.arity == 0:
        return True
    tables = _ElementTables(elements)
    check = _CostCheck(f)
    return bool(check.member_mask(tables, list(range(f.arity - 1)), np.asarray([f.arity - 1]))[0])


@dataclass(eq=False)
class ConservativeStructure:
    template: ValuedTemplate
    elements: Tuple[ConservativeElement, ...]
    structure: RelationalStructure

    @property
    def domain_size(self) -> int:
        return len(self.elements)


def build_gamma_prime_c(template: ValuedTemplate, materialize: Optional[bool] = None,
                        limit: Optional[int] = None) -> ConservativeStructure:
    """Γ′_c; relations are tabulated when every |D′_c|^p fits the tuple limit, lazy otherwise."""
    limit = limit if limit is not None else get_settings().max_tuples
    elements = tuple(enumerate_all_conservative_elements(template.domain_size))
    n = len(elements)
    tables = _ElementTables(elements)
    checks = [_CostCheck(f) for f in template.functions]
    if materialize is None:
        materialize = all(n ** f.arity <= limit for f in template.functions)
    all_last = np.arange(n, dtype=np.int64)
    relations = []
    for f, check in zip(template.functions, checks):
        name = f"{f.name}'"
        if materialize:
            if n ** f.arity > limit:
                raise CapacityError(f"tabulating {name} needs {n ** f.arity} candidate tuples (limit {limit})")
            rows = []
            if f.arity == 0:
                rows.append(())
            else:
                for prefix in itertools.product(range(n), repeat=f.arity - 1):
                    mask = check.member_mask(tables, prefix, all_last)
                    rows.extend(prefix + (int(k),) for k in np.flatnonzero(mask))
            relations.append(Relation(name, f.arity, rows))
            logger.info("Γ′_c relation %s: %d tuples over %d elements", name, len(rows), n)
        else:
            relations.append(LazyRelation(
                name, f.arity,
                predicate=lambda row, c=check: bool(c.member_mask(tables, row[:-1], np.asarray(row[-1:]))[0]),
                candidates=n,
                batch_filter=lambda pos, fixed, cands, c=check, m=f.arity: _lazy_filter(c, tables, m, pos, fixed, cands)))
    structure = RelationalStructure(f"{template.name}'c", n, tuple(relations))
    return ConservativeStructure(template, elements, structure)


def _lazy_filter(check: _CostCheck, tables: _ElementTables, arity: int, pos: int,
                 fixed: Dict[int, int], candidates: Sequence[int]) -> List[int]:
    cand = np.asarray(list(candidates), dtype=np.int64)
    if pos != arity - 1:
        return [c for c in cand.tolist()
                if check.member_mask(tables, [fixed.get(j, c) for j in range(arity - 1)],
                                     np.asarray([fixed.get(arity - 1, c)]))[0]]
    prefix = [fixed[j] for j in range(arity - 1)]
    return cand[check.member_mask(tables, prefix, cand)].tolist()


def graph_of(structure: RelationalStructure, relation: int = 0) -> nx.Graph:
    graph = nx.Graph()
    graph.add_nodes_from(range(structure.domain_size))
    graph.add_edges_from(structure.relations[relation].tuples)
    return graph


@dataclass(frozen=True)
class BipartiteVerdict:
    maps_to_gamma_prime_c: bool
    bipartite: bool

    @property
    def agree(self) -> bool:
        return self.maps_to_gamma_prime_c == self.bipartite


def bipartite_example_check(structure: RelationalStructure, gamma_prime_c: ConservativeStructure) -> BipartiteVerdict:
    """R -> Γ′_c against a direct bipartiteness test of R's edge relation."""
    structure.require_compatible(gamma_prime_c.structure)
    maps = find_homomorphism(structure, gamma_prime_c.structure) is not None
    bipartite = nx.is_bipartite(graph_of(structure))
    verdict = BipartiteVerdict(maps, bipartite)
    if not verdict.agree:
        logger.error("bipartite check disagrees on %s: Γ′_c=%s bipartite=%s", structure.name, maps, bipartite)
    return verdict


def two_coloring_template(arities: Sequence[int]) -> RelationalStructure:
    """({0,1}, ≠, full, full, ...) for a signature whose first symbol is binary."""
    rels = [Relation("neq", 2, ((0, 1), (1, 0)))]
    for i, m in enumerate(arities[1:], start=1):
        rels.append(Relation(f"full{i}", m, itertools.product(range(2), repeat=m)))
    return RelationalStructure("two_coloring", 2, tuple(rels))
