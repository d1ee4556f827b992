"""
Exact homomorphism search and the homomorphism preorder.

The search is an iterative backtracking over source elements in index order,
trying target values smallest first. Domains are bitmasks undone from a
trail. Materialized target relations of arity <= 3 are kept arc consistent;
higher arities, lazy relations and scopes with repeated variables are
forward checked through membership.
"""

import itertools
import logging
from collections import deque
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from .config import get_settings
from .errors import CapacityError, StructuralError, UnsupportedError
from .structures import Homomorphism, RelationalStructure, bits_of

logger = logging.getLogger(__name__)

_AC = 'ac'
_CHECK = 'check'


class _Constraint:
    __slots__ = ('relation', 'scope', 'mode', 'variables')

    def __init__(self, relation, scope: Tuple[int, ...]):
        self.relation = relation
        self.scope = scope
        self.variables = tuple(sorted(set(scope)))
        distinct = len(self.variables) == len(scope)
        if not relation.is_lazy and relation.arity <= 3 and distinct:
            self.mode = _AC
        else:
            self.mode = _CHECK


class HomomorphismSearch:
    """One search from `source` into `target`; holds all mutable state."""

    def __init__(self, source: RelationalStructure, target: RelationalStructure,
                 max_nodes: Optional[int] = None, initial_domains: Optional[Sequence[int]] = None):
        source.require_compatible(target)
        if not source.is_materialized:
            raise UnsupportedError(f"source structure {source.name} has lazy relations")
        self.source = source
        self.target = target
        self.max_nodes = max_nodes if max_nodes is not None else get_settings().max_nodes
        self.nodes = 0
        full = (1 << target.domain_size) - 1
        if initial_domains is None:
            self.domains = [full] * source.domain_size
        else:
            self.domains = [d & full for d in initial_domains]
        self.trail: List[Tuple[int, int]] = []
        self.constraints: List[_Constraint] = []
        self.watch: List[List[int]] = [[] for _ in range(source.domain_size)]
        for rel_s, rel_t in zip(source.relations, target.relations):
            for row in rel_s:
                cid = len(self.constraints)
                self.constraints.append(_Constraint(rel_t, row))
                for var in set(row):
                    self.watch[var].append(cid)

    # -- domain bookkeeping -------------------------------------------------

    def _set(self, var: int, mask: int) -> None:
        self.trail.append((var, self.domains[var]))
        self.domains[var] = mask

    def _undo(self, mark: int) -> None:
        trail = self.trail
        domains = self.domains
        while len(trail) > mark:
            var, old = trail.pop()
            domains[var] = old

    # -- propagation --------------------------------------------------------

    def _revise(self, con: _Constraint) -> Optional[List[int]]:
        """Filter the domains of one constraint; None on wipe-out."""
        if con.mode == _AC:
            return self._revise_ac(con)
        return self._revise_check(con)

    def _revise_ac(self, con: _Constraint) -> Optional[List[int]]:
        rel = con.relation
        scope = con.scope
        doms = self.domains
        if rel.arity == 1:
            var = scope[0]
            new = doms[var] & rel.unary_mask
            if new == 0:
                return None
            if new != doms[var]:
                self._set(var, new)
                return [var]
            return []
        if rel.arity == 2:
            x, y = scope
            supports = rel.supports
            dx, dy = doms[x], doms[y]
            nx = 0
            for a in bits_of(dx):
                if supports.get((0, a), 0) & dy:
                    nx |= 1 << a
            if nx == 0:
                return None
            ny = 0
            for b in bits_of(dy):
                if supports.get((1, b), 0) & nx:
                    ny |= 1 << b
            if ny == 0:
                return None
            changed = []
            if nx != dx:
                self._set(x, nx)
                changed.append(x)
            if ny != dy:
                self._set(y, ny)
                changed.append(y)
            return changed
        # arity 3 (or 0): scan the tuples
        current = [doms[v] for v in scope]
        found = [0] * len(scope)
        for row in rel.tuples:
            ok = True
            for pos, value in enumerate(row):
                if not (current[pos] >> value) & 1:
                    ok = False
                    break
            if ok:
                for pos, value in enumerate(row):
                    found[pos] |= 1 << value
        if rel.arity == 0:
            return [] if rel.tuples else None
        changed = []
        for var, old, new in zip(scope, current, found):
            if new == 0:
                return None
            if new != old:
                self._set(var, new)
                changed.append(var)
        return changed

    def _revise_check(self, con: _Constraint) -> Optional[List[int]]:
        doms = self.domains
        free = [v for v in con.variables if doms[v] & (doms[v] - 1)]
        if len(free) > 1:
            return []
        fixed: Dict[int, int] = {}
        positions: List[int] = []
        for pos, var in enumerate(con.scope):
            if free and var == free[0]:
                positions.append(pos)
            else:
                fixed[pos] = doms[var].bit_length() - 1
        if not free:
            row = tuple(fixed[pos] for pos in range(len(con.scope)))
            return [] if con.relation.contains(row) else None
        var = free[0]
        kept = con.relation.filter_candidates(positions, fixed, bits_of(doms[var]))
        if not kept:
            return None
        new = 0
        for value in kept:
            new |= 1 << value
        if new != doms[var]:
            self._set(var, new)
            return [var]
        return []

    def _propagate(self, cids: Sequence[int]) -> bool:
        queue = deque(cids)
        queued = set(cids)
        while queue:
            cid = queue.popleft()
            queued.discard(cid)
            changed = self._revise(self.constraints[cid])
            if changed is None:
                return False
            for var in changed:
                for other in self.watch[var]:
                    if other != cid and other not in queued:
                        queued.add(other)
                        queue.append(other)
        return True

    # -- search -------------------------------------------------------------

    def _next_var(self) -> Optional[int]:
        for var, dom in enumerate(self.domains):
            if dom & (dom - 1):
                return var
        return None

    def _solution(self) -> Tuple[int, ...]:
        return tuple(d.bit_length() - 1 for d in self.domains)

    def solutions(self) -> Iterator[Tuple[int, ...]]:
        if any(d == 0 for d in self.domains):
            return
        if not self._propagate(range(len(self.constraints))):
            return
        var = self._next_var()
        if var is None:
            yield self._solution()
            return
        frames = [[var, self.domains[var], len(self.trail)]]
        while frames:
            frame = frames[-1]
            var, remaining, mark = frame
            self._undo(mark)
            if not remaining:
                frames.pop()
                continue
            low = remaining & -remaining
            frame[1] = remaining ^ low
            self.nodes += 1
            if self.nodes > self.max_nodes:
                raise CapacityError(
                    f"search {self.source.name} -> {self.target.name} exceeded {self.max_nodes} nodes "
                    f"(raise CSPLIFT_MAX_NODES to continue)")
            self._set(var, low)
            if not self._propagate(self.watch[var]):
                continue
            nxt = self._next_var()
            if nxt is None:
                yield self._solution()
                continue
            frames.append([nxt, self.domains[nxt], len(self.trail)])
        logger.debug("search %s -> %s finished after %d nodes", self.source.name, self.target.name, self.nodes)


def is_homomorphism(h: Homomorphism) -> bool:
    """True iff every source tuple maps into the matching target relation."""
    h.source.require_compatible(h.target)
    if len(h.mapping) != h.source.domain_size:
        raise StructuralError(f"map covers {len(h.mapping)} of {h.source.domain_size} source elements")
    if any(not 0 <= v < h.target.domain_size for v in h.mapping):
        return False
    for rel_s, rel_t in zip(h.source.relations, h.target.relations):
        for row in rel_s:
            if not rel_t.contains(h.image(row)):
                return False
    return True


def iter_homomorphisms(source: RelationalStructure, target: RelationalStructure,
                       max_nodes: Optional[int] = None,
                       initial_domains: Optional[Sequence[int]] = None) -> Iterator[Homomorphism]:
    search = HomomorphismSearch(source, target, max_nodes=max_nodes, initial_domains=initial_domains)
    for mapping in search.solutions():
        yield Homomorphism(source, target, mapping)


def find_homomorphism(source: RelationalStructure, target: RelationalStructure,
                      max_nodes: Optional[int] = None,
                      initial_domains: Optional[Sequence[int]] = None) -> Optional[Homomorphism]:
    """First homomorphism in (min variable, min value) order, or None."""
    for h in iter_homomorphisms(source, target, max_nodes=max_nodes, initial_domains=initial_domains):
        return h
    return None


def count_homomorphisms(source: RelationalStructure, target: RelationalStructure,
                        max_nodes: Optional[int] = None) -> int:
    return sum(1 for _ in iter_homomorphisms(source, target, max_nodes=max_nodes))


def brute_force_homomorphism(source: RelationalStructure, target: RelationalStructure,
                             limit: int = 10 ** 6) -> Optional[Homomorphism]:
    """Exhaustive oracle over all |T|^|R| maps, lexicographic order."""
    source.require_compatible(target)
    total = target.domain_size ** source.domain_size
    if total > limit:
        raise CapacityError(f"brute force would enumerate {total} maps (limit {limit})")
    for mapping in itertools.product(range(target.domain_size), repeat=source.domain_size):
        ok = True
        for rel_s, rel_t in zip(source.relations, target.relations):
            for row in rel_s:
                if not rel_t.contains(tuple(mapping[x] for x in row)):
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return Homomorphism(source, target, mapping)
    return None


def upper_than(upper: RelationalStructure, lower: RelationalStructure) -> bool:
    """upper ≻ lower: a homomorphism upper -> lower exists."""
    return find_homomorphism(upper, lower) is not None


def hom_equivalent(first: RelationalStructure, second: RelationalStructure) -> bool:
    return upper_than(first, second) and upper_than(second, first)


def up_membership(structure: RelationalStructure, family: Sequence[RelationalStructure]) -> bool:
    """Membership in Up(family): maps into at least one member."""
    for member in family:
        structure.require_compatible(member)
    return any(upper_than(structure, member) for member in family)
