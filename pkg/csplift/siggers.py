"""
The Siggers-pair structure Γ′.

An element of Γ′ is a Siggers pair (g, s) on D. A tuple of pairs lies in ρ′
when the g's and, separately, the s's preserve ρ component-wise. For |D| <= 2
the pairs are enumerated into numpy tables and indexed in lexicographic
(g, s) order; for larger domains Γ′ is symbolic and only pair membership is
available.
"""

import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import CapacityError, PreconditionError, StructuralError, TheoremViolation
from .lifted import LiftedLanguage, lift_language, split_element, lifted_element
from .operations import (FiniteOperation, componentwise_preserves, constant, find_siggers_pair_admitted,
                         is_siggers_pair, siggers_pair_tables)
from .solver import find_homomorphism, is_homomorphism, iter_homomorphisms
from .structures import (Homomorphism, LazyRelation, Relation, RelationalStructure, encode_tuple)
from .templates import ALPHA, btw_template

logger = logging.getLogger(__name__)

Pair = Tuple[FiniteOperation, FiniteOperation]


def gamma_prime_membership(rel: Relation, pairs: Sequence[Pair]) -> bool:
    """((g_1,s_1),...,(g_m,s_m)) ∈ ρ′: the g's and the s's each preserve ρ component-wise."""
    if len(pairs) != rel.arity:
        raise StructuralError(f"{len(pairs)} pairs for relation {rel.name} of arity {rel.arity}")
    gs = [g for g, _ in pairs]
    ss = [s for _, s in pairs]
    return componentwise_preserves(gs, rel) and componentwise_preserves(ss, rel)


@dataclass(eq=False)
class SiggersStructure:
    """Γ′ over a base template; `structure` is None when the domain is symbolic."""

    base: RelationalStructure
    g_tables: Optional[np.ndarray] = None
    s_tables: Optional[np.ndarray] = None
    _requirements: Dict = field(default_factory=dict, repr=False)

    @property
    def materialized(self) -> bool:
        return self.g_tables is not None

    @property
    def domain_size(self) -> int:
        if not self.materialized:
            raise CapacityError(f"Γ′ of {self.base.name} has a symbolic domain")
        return len(self.g_tables)

    @cached_property
    def _keys(self) -> np.ndarray:
        d = self.base.domain_size
        g_weights = d ** np.arange(d - 1, -1, -1, dtype=np.int64)
        s_weights = d ** np.arange(d ** 4 - 1, -1, -1, dtype=np.int64)
        g_codes = self.g_tables.astype(np.int64) @ g_weights
        s_codes = self.s_tables.astype(np.int64) @ s_weights
        return g_codes * (d ** (d ** 4)) + s_codes

    def element(self, index: int) -> Pair:
        d = self.base.domain_size
        return (FiniteOperation(f"g{index}", d, 1, tuple(self.g_tables[index].tolist())),
                FiniteOperation(f"s{index}", d, 4, tuple(self.s_tables[index].tolist())))

    def index_of(self, g: FiniteOperation, s: FiniteOperation) -> int:
        d = self.base.domain_size
        key = encode_tuple(g.table, d) * (d ** (d ** 4)) + encode_tuple(s.table, d)
        pos = int(np.searchsorted(self._keys, key))
        if pos >= len(self._keys) or int(self._keys[pos]) != key:
            raise StructuralError(f"({g.name}, {s.name}) is not a Siggers pair on {d} elements")
        return pos

    def pair_membership(self, rel_index: int, pairs: Sequence[Pair]) -> bool:
        return gamma_prime_membership(self.base.relations[rel_index], pairs)

    def membership(self, rel_index: int, elements: Sequence[int]) -> bool:
        return self.pair_membership(rel_index, [self.element(e) for e in elements])

    # -- vectorised forward checking --------------------------------------------

    def _requirements_for(self, rel_index: int, pos: int, fixed: Tuple[Tuple[int, int], ...]):
        """Allowed values of the free pair's g (per argument) and s (per argument code)."""
        key = (rel_index, pos, fixed)
        hit = self._requirements.get(key)
        if hit is not None:
            return hit
        rel = self.base.relations[rel_index]
        d = self.base.domain_size
        members = rel.members
        fixed_pairs = {p: self.element(e) for p, e in fixed}

        def allowed(out: Dict[int, int]) -> frozenset:
            row = [0] * rel.arity
            for p, value in out.items():
                row[p] = value
            found = set()
            for v in range(d):
                row[pos] = v
                if tuple(row) in members:
                    found.add(v)
            return frozenset(found)

        g_req: Dict[int, frozenset] = {}
        for x in rel.tuples:
            out = {p: pair[0](x[p]) for p, pair in fixed_pairs.items()}
            allowed_here = allowed(out)
            g_req[x[pos]] = g_req.get(x[pos], frozenset(range(d))) & allowed_here
        s_req: Dict[int, frozenset] = {}
        for choice in itertools.product(rel.tuples, repeat=4):
            out = {p: pair[1](*(row[p] for row in choice)) for p, pair in fixed_pairs.items()}
            code = encode_tuple(tuple(row[pos] for row in choice), d)
            s_req[code] = s_req.get(code, frozenset(range(d))) & allowed(out)
        hit = (g_req, s_req)
        self._requirements[key] = hit
        return hit

    def batch_filter(self, rel_index: int, pos: int, fixed: Dict[int, int], candidates: Sequence[int]) -> List[int]:
        rel = self.base.relations[rel_index]
        cand = np.asarray(list(candidates), dtype=np.int64)
        if not len(rel) or not len(cand):
            return cand.tolist()
        g_req, s_req = self._requirements_for(rel_index, pos, tuple(sorted(fixed.items())))
        g_rows = self.g_tables[cand]
        s_rows = self.s_tables[cand]
        ok = np.ones(len(cand), dtype=bool)
        for arg, allowed in g_req.items():
            ok &= np.isin(g_rows[:, arg], list(allowed))
        for code, allowed in s_req.items():
            ok &= np.isin(s_rows[:, code], list(allowed))
        return cand[ok].tolist()

    @cached_property
    def structure(self) -> Optional[RelationalStructure]:
        if not self.materialized:
            return None
        rels = []
        for index, rel in enumerate(self.base.relations):
            rels.append(LazyRelation(
                f"{rel.name}'", rel.arity,
                predicate=lambda elems, i=index: self.membership(i, elems),
                candidates=self.domain_size,
                batch_filter=lambda pos, fixed, cands, i=index: self.batch_filter(i, pos, fixed, cands)))
        return RelationalStructure(f"{self.base.name}'", self.domain_size, tuple(rels))


def build_gamma_prime(template: RelationalStructure, materialize: Optional[bool] = None) -> SiggersStructure:
    """Γ′ with an enumerated domain for |D| <= 2, symbolic otherwise."""
    d = template.domain_size
    if materialize is None:
        materialize = d <= 2
    if not materialize:
        return SiggersStructure(template)
    g_tables, s_tables = siggers_pair_tables(d)
    logger.info("Γ′ of %s: %d Siggers pairs", template.name, len(g_tables))
    return SiggersStructure(template, g_tables, s_tables)


@dataclass(frozen=True)
class PairMap:
    """A map from source elements to Siggers pairs on the base domain."""

    source: RelationalStructure
    gamma_prime: SiggersStructure
    pairs: Tuple[Pair, ...]

    def is_valid(self) -> bool:
        """Every source tuple maps into the matching ρ′."""
        self.source.require_compatible(self.gamma_prime.base)
        for index, rel in enumerate(self.source.relations):
            for row in rel:
                if not self.gamma_prime.pair_membership(index, [self.pairs[v] for v in row]):
                    return False
        return True

    def homomorphism(self) -> Homomorphism:
        gp = self.gamma_prime
        if not gp.materialized:
            raise CapacityError("Γ′ indices exist only for a materialized domain")
        mapping = tuple(gp.index_of(g, s) for g, s in self.pairs)
        return Homomorphism(self.source, gp.structure, mapping)


def constant_pair_embedding(template: RelationalStructure,
                            gamma_prime: Optional[SiggersStructure] = None) -> PairMap:
    """a ↦ (const_a, const_a)."""
    gp = gamma_prime if gamma_prime is not None else build_gamma_prime(template)
    d = template.domain_size
    pairs = tuple((constant(d, 1, a), constant(d, 4, a)) for a in range(d))
    return PairMap(template, gp, pairs)


def _unary_maps(d: int) -> List[FiniteOperation]:
    return [FiniteOperation(f"u{i}", d, 1, row) for i, row in enumerate(itertools.product(range(d), repeat=d))]


def _g_structure(template: RelationalStructure, maps: Sequence[FiniteOperation]) -> RelationalStructure:
    """Clause (a) as a structure over unary maps."""
    rels = []
    for rel in template.relations:
        rows = [combo for combo in itertools.product(range(len(maps)), repeat=rel.arity)
                if componentwise_preserves([maps[i] for i in combo], rel)]
        rels.append(Relation(rel.name, rel.arity, rows))
    return RelationalStructure(f"{template.name}'g", len(maps), tuple(rels))


def _s_indicator(structure: RelationalStructure, template: RelationalStructure,
                 images: Sequence[frozenset]) -> Tuple[RelationalStructure, RelationalStructure]:
    """Clause (b) plus the Siggers conditions as a CSP over the entries of every s_v."""
    d = template.domain_size
    width = d ** 4
    src: List[Relation] = []
    tgt: List[Relation] = []
    for rel_r, rel_t in zip(structure.relations, template.relations):
        rows = []
        for scope in rel_r:
            for choice in itertools.product(rel_t.tuples, repeat=4):
                rows.append(tuple(v * width + encode_tuple(tuple(row[j] for row in choice), d)
                                  for j, v in enumerate(scope)))
        src.append(Relation(rel_t.name, rel_t.arity, rows))
        tgt.append(rel_t)
    for mask in range(1, 1 << d):
        subset = frozenset(a for a in range(d) if mask >> a & 1)
        rows = []
        for v, image in enumerate(images):
            if image == subset:
                rows.extend((v * width + encode_tuple(args, d),) for args in itertools.product(sorted(image), repeat=4))
        src.append(Relation(f"within{mask}", 1, rows))
        tgt.append(Relation(f"within{mask}", 1, ((a,) for a in subset)))
    eq_rows = []
    for v, image in enumerate(images):
        for x, y, z in itertools.product(sorted(image), repeat=3):
            eq_rows.append((v * width + encode_tuple((x, y, x, z), d), v * width + encode_tuple((y, x, z, y), d)))
    src.append(Relation("siggers", 2, eq_rows))
    tgt.append(Relation("siggers", 2, ((a, a) for a in range(d))))
    for a in range(d):
        src.append(Relation(f"idempotent{a}", 1,
                            ((v * width + encode_tuple((a,) * 4, d),) for v, image in enumerate(images) if a in image)))
        tgt.append(Relation(f"idempotent{a}", 1, ((a,),)))
    return (RelationalStructure(f"{structure.name}'s", structure.domain_size * width, tuple(src)),
            RelationalStructure(f"{template.name}'s", d, tuple(tgt)))


def find_hom_to_gamma_prime(structure: RelationalStructure, template: RelationalStructure,
                            gamma_prime: Optional[SiggersStructure] = None) -> Optional[PairMap]:
    """
    Search R -> Γ′ directly from the definition of ρ′.

    The g-clause only involves the g's and the s-clause only the s's, so the
    search enumerates g-assignments over unary maps and, per distinct pattern
    of images, solves the s-entries as a CSP over D.
    """
    structure.require_compatible(template)
    gp = gamma_prime if gamma_prime is not None else build_gamma_prime(template)
    d = template.domain_size
    maps = _unary_maps(d)
    g_side = _g_structure(template, maps)
    tried: Dict[Tuple[frozenset, ...], Optional[Tuple[int, ...]]] = {}
    for g_hom in iter_homomorphisms(structure, g_side):
        images = tuple(maps[i].image() for i in g_hom.mapping)
        if images not in tried:
            source, target = _s_indicator(structure, template, images)
            h = find_homomorphism(source, target)
            tried[images] = None if h is None else h.mapping
        entries = tried[images]
        if entries is None:
            continue
        width = d ** 4
        pairs = []
        for v, i in enumerate(g_hom.mapping):
            s = FiniteOperation(f"s@{v}", d, 4, entries[v * width:(v + 1) * width])
            pairs.append((maps[i].renamed(f"g@{v}"), s))
        logger.debug("R -> Γ′ found after %d image patterns", len(tried))
        return PairMap(structure, gp, tuple(pairs))
    logger.debug("R -> Γ′ refuted over %d image patterns", len(tried))
    return None


def _require_lifted_pair(lifted: LiftedLanguage, g: FiniteOperation, s: FiniteOperation) -> None:
    size = lifted.structure.domain_size
    if g.domain_size != size or s.domain_size != size:
        raise PreconditionError(f"pair is over {g.domain_size} elements, Γ_R has {size}")
    if not is_siggers_pair(g, s):
        raise PreconditionError(f"({g.name}, {s.name}) is not a Siggers pair on D_R")
    for rel in lifted.structure.relations:
        for op in (g, s):
            if not componentwise_preserves([op] * rel.arity, rel):
                raise PreconditionError(f"{op.name} does not preserve lifted relation {rel.name}")


def hom_from_siggers_pair(structure: RelationalStructure, template: RelationalStructure,
                          pair: Pair, gamma_prime: Optional[SiggersStructure] = None) -> PairMap:
    """v ↦ (g, s) restricted to the block D_v and read back over D."""
    lifted = lift_language(template, structure)
    g, s = pair
    _require_lifted_pair(lifted, g, s)
    d = template.domain_size
    pairs = []
    for v in range(structure.domain_size):
        g_v = tuple(split_element(g(lifted_element(v, a, d)), d)[1] for a in range(d))
        s_v = tuple(split_element(s(*(lifted_element(v, a, d) for a in args)), d)[1]
                    for args in itertools.product(range(d), repeat=4))
        pairs.append((FiniteOperation(f"g@{v}", d, 1, g_v), FiniteOperation(f"s@{v}", d, 4, s_v)))
    gp = gamma_prime if gamma_prime is not None else build_gamma_prime(template)
    result = PairMap(structure, gp, tuple(pairs))
    if not result.is_valid():
        raise TheoremViolation("restriction of a Siggers pair of Γ_R is not a homomorphism into Γ′",
                               {"g": list(g.table), "s": list(s.table), "input": structure.payload(),
                                "template": template.payload()})
    return result


def siggers_pair_from_hom(structure: RelationalStructure, template: RelationalStructure,
                          pairs: Sequence[Pair]) -> Pair:
    """Glue the per-variable pairs blockwise; cross-block s entries take the least element of g(D_R)."""
    d = template.domain_size
    n = structure.domain_size
    size = n * d
    if len(pairs) != n:
        raise StructuralError(f"{len(pairs)} pairs for {n} input elements")
    g_table = [0] * size
    for v, (g_v, _) in enumerate(pairs):
        for a in range(d):
            g_table[lifted_element(v, a, d)] = lifted_element(v, g_v(a), d)
    fill = min(g_table) if g_table else 0
    s_table = []
    for args in itertools.product(range(size), repeat=4):
        blocks = {x // d for x in args} if d else set()
        if len(blocks) == 1:
            v = blocks.pop()
            s_v = pairs[v][1]
            s_table.append(lifted_element(v, s_v(*(x % d for x in args)), d))
        else:
            s_table.append(fill)
    g = FiniteOperation("g_o", size, 1, g_table)
    s = FiniteOperation("s_o", size, 4, s_table)
    return g, s


# Refuting R -> Γ′ through the lazy relations branches over every Siggers
# pair of a variable, so that side of the comparison runs on a node budget.
LAZY_SEARCH_NODES = 5_000


def lazy_hom_to_gamma_prime(structure: RelationalStructure, gamma_prime: SiggersStructure,
                            max_nodes: Optional[int] = None) -> Tuple[Optional[Homomorphism], bool]:
    """
    Search R -> Γ′ through the lazy, memoized ρ′ relations.

    Returns the witness (or None) and whether the search finished inside
    `max_nodes`; an unfinished search returns (None, False).
    """
    if not gamma_prime.materialized:
        raise CapacityError("the search into Γ′ needs an enumerated Γ′ domain")
    budget = max_nodes if max_nodes is not None else LAZY_SEARCH_NODES
    try:
        return find_homomorphism(structure, gamma_prime.structure, max_nodes=budget), True
    except CapacityError:
        logger.info("search %s -> Γ′ stopped after %d nodes", structure.name, budget)
        return None, False


@dataclass(frozen=True)
class HomtoGReport:
    agree: bool
    indicator_pair: Optional[Pair]
    gamma_prime_map: Optional[PairMap]
    gamma_prime_hom: Optional[Homomorphism]
    lazy_decided: bool
    oracle_map: Optional[PairMap]
    restriction_valid: Optional[bool] = None
    glued_valid: Optional[bool] = None

    @property
    def verdict(self) -> bool:
        return self.indicator_pair is not None


def _pair_map_of(h: Homomorphism, gamma_prime: SiggersStructure) -> PairMap:
    return PairMap(h.source, gamma_prime, tuple(gamma_prime.element(e) for e in h.mapping))


def check_homtoG(structure: RelationalStructure, template: RelationalStructure,
                 gamma_prime: Optional[SiggersStructure] = None,
                 max_nodes: Optional[int] = None) -> HomtoGReport:
    """
    Compare the Γ_R indicator search with the search R -> Γ′.

    The Γ′ side is the lazy search through ρ′ membership; the decomposed
    search over g-maps and s-entries runs alongside as an oracle and decides
    alone when the lazy search runs out of nodes.
    """
    if template.domain_size > 2:
        raise CapacityError("both sides of the Γ′ correspondence are only run for |D| <= 2")
    gp = gamma_prime if gamma_prime is not None else build_gamma_prime(template)
    lifted = lift_language(template, structure)
    pair = find_siggers_pair_admitted(lifted.structure)
    lazy_hom, decided = lazy_hom_to_gamma_prime(structure, gp, max_nodes)
    oracle = find_hom_to_gamma_prime(structure, template, gp)
    pair_map = _pair_map_of(lazy_hom, gp) if lazy_hom is not None else oracle
    restriction_valid = None
    glued_valid = None
    if pair is not None:
        restriction_valid = hom_from_siggers_pair(structure, template, pair, gp).is_valid()
    if pair_map is not None:
        g, s = siggers_pair_from_hom(structure, template, pair_map.pairs)
        glued_valid = pair_map.is_valid() and is_siggers_pair(g, s) and all(
            componentwise_preserves([op] * rel.arity, rel)
            for rel in lifted.structure.relations for op in (g, s))
    sides = {pair is not None, oracle is not None}
    if decided:
        sides.add(lazy_hom is not None)
    report = HomtoGReport(len(sides) == 1, pair, pair_map, lazy_hom, decided, oracle, restriction_valid, glued_valid)
    if not report.agree:
        logger.error("Γ′ correspondence disagrees on %s: indicator=%s, Γ′ search=%s, decomposed=%s",
                     structure.name, pair is not None, lazy_hom is not None if decided else "undecided",
                     oracle is not None)
    return report


def gamma_double_prime_membership(gamma_prime: SiggersStructure, rel_index: int,
                                  universe: Sequence[int], pairs: Sequence[Pair]) -> bool:
    """
    Membership in ρ′′ for pairs of operations on a finite set of Γ′ elements.

    `pairs` are Siggers pairs on range(len(universe)); ρ′ is tabulated on the
    universe only, never on the whole of Γ′.
    """
    if not gamma_prime.materialized:
        raise CapacityError("Γ′′ membership needs an enumerated Γ′ domain")
    rel = gamma_prime.base.relations[rel_index]
    rows = [combo for combo in itertools.product(range(len(universe)), repeat=rel.arity)
            if gamma_prime.membership(rel_index, [universe[i] for i in combo])]
    for g, s in pairs:
        if g.domain_size != len(universe) or not is_siggers_pair(g, s):
            raise PreconditionError(f"({g.name}, {s.name}) is not a Siggers pair on the universe")
    return gamma_prime_membership(Relation(f"{rel.name}'", rel.arity, rows), pairs)


def h_coloring_loop_check(graph: RelationalStructure) -> Dict[str, bool]:
    """Loops of the Γ′ edge relation: never at constant pairs; anywhere iff H admits a Siggers pair."""
    if len(graph.relations) != 1 or graph.relations[0].arity != 2:
        raise StructuralError(f"{graph.name} is not a graph")
    edge = graph.relations[0]
    d = graph.domain_size
    constant_loop = any(gamma_prime_membership(edge, [(constant(d, 1, a), constant(d, 4, a))] * 2)
                        for a in range(d))
    pair = find_siggers_pair_admitted(graph)
    has_loop = pair is not None and gamma_prime_membership(edge, [pair, pair])
    return {"constant_loop": constant_loop, "has_loop": has_loop, "admits_siggers_pair": pair is not None}


def betweenness_example(structure: RelationalStructure, g: Homomorphism) -> Optional[Homomorphism]:
    """Turn a solution into Γ_α into one into Γ_btw, or None when Ω_0 and Ω_1 meet."""
    if not is_homomorphism(g):
        raise PreconditionError(f"the given map is not a homomorphism {structure.name} -> {g.target.name}")
    omega0 = {row[0] for row in structure.relations[0]}
    omega1 = {row[0] for row in structure.relations[1]}
    if omega0 & omega1:
        return None
    mapping = []
    for x in range(structure.domain_size):
        value = g(x)
        if value != ALPHA:
            mapping.append(value)
        elif x in omega0:
            mapping.append(0)
        elif x in omega1:
            mapping.append(1)
        else:
            mapping.append(0)
    h = Homomorphism(structure, btw_template(), mapping)
    if not is_homomorphism(h):
        raise TheoremViolation("betweenness rounding produced an invalid assignment",
                               {"input": structure.payload(), "g": list(g.mapping), "h": mapping})
    return h
