"""
Finite relational structures.

Domain elements are dense integers 0..n-1. A structure carries an ordered
sequence of relations; the arity sequence is its signature. Relations are
either materialized tuple sets or lazy membership predicates over a declared
candidate domain.
"""

import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from .config import get_settings
from .errors import CapacityError, StructuralError, UnsupportedError

logger = logging.getLogger(__name__)

Tuple_ = Tuple[int, ...]


def encode_tuple(values: Sequence[int], base: int) -> int:
    """Rank of a tuple in lexicographic order over range(base)."""
    index = 0
    for value in values:
        index = index * base + value
    return index


def decode_index(index: int, base: int, length: int) -> Tuple_:
    values = [0] * length
    for pos in range(length - 1, -1, -1):
        index, values[pos] = divmod(index, base)
    return tuple(values)


def bits_of(mask: int) -> List[int]:
    """Indices of set bits, ascending."""
    if mask < 1 << 64:
        out = []
        while mask:
            low = mask & -mask
            out.append(low.bit_length() - 1)
            mask ^= low
        return out
    digits = bin(mask)[:1:-1]
    return [i for i, ch in enumerate(digits) if ch == '1']


def mask_of(values: Iterable[int]) -> int:
    mask = 0
    for value in values:
        mask |= 1 << value
    return mask


@dataclass(frozen=True)
class Relation:
    name: str
    arity: int
    tuples: Tuple[Tuple_, ...] = ()

    is_lazy = False

    def __post_init__(self):
        normalized = tuple(sorted({tuple(int(x) for x in t) for t in self.tuples}))
        object.__setattr__(self, 'tuples', normalized)

    @cached_property
    def members(self) -> frozenset:
        return frozenset(self.tuples)

    def __contains__(self, item) -> bool:
        return tuple(item) in self.members

    def contains(self, item: Sequence[int]) -> bool:
        return tuple(item) in self.members

    def __len__(self) -> int:
        return len(self.tuples)

    def __iter__(self) -> Iterator[Tuple_]:
        return iter(self.tuples)

    @cached_property
    def supports(self) -> Dict[Tuple[int, int], int]:
        """For binary relations: (position, value) -> bitmask of partner values."""
        if self.arity != 2:
            raise StructuralError(f"supports are only indexed for binary relations, {self.name} has arity {self.arity}")
        table: Dict[Tuple[int, int], int] = {}
        for a, b in self.tuples:
            table[(0, a)] = table.get((0, a), 0) | (1 << b)
            table[(1, b)] = table.get((1, b), 0) | (1 << a)
        return table

    @cached_property
    def unary_mask(self) -> int:
        return mask_of(t[0] for t in self.tuples if len(t) == 1)

    def filter_candidates(self, positions: Sequence[int], fixed: Dict[int, int],
                          candidates: Sequence[int]) -> List[int]:
        """Candidates c such that placing c at every free position completes a member."""
        kept = []
        row = [0] * self.arity
        for pos, value in fixed.items():
            row[pos] = value
        for c in candidates:
            for pos in positions:
                row[pos] = c
            if tuple(row) in self.members:
                kept.append(c)
        return kept

    def renamed(self, name: str) -> "Relation":
        return Relation(name, self.arity, self.tuples)


@dataclass(frozen=True, eq=False)
class LazyRelation:
    """A relation known only through a pure membership predicate."""

    name: str
    arity: int
    predicate: Callable[[Tuple_], bool]
    candidates: int
    batch_filter: Optional[Callable[[int, Dict[int, int], Sequence[int]], List[int]]] = None
    _cache: Dict[Tuple_, bool] = field(default_factory=dict, repr=False)

    is_lazy = True

    def contains(self, item: Sequence[int]) -> bool:
        key = tuple(item)
        hit = self._cache.get(key)
        if hit is None:
            hit = bool(self.predicate(key))
            self._cache[key] = hit
        return hit

    def __contains__(self, item) -> bool:
        return self.contains(item)

    def __iter__(self):
        raise UnsupportedError(f"lazy relation {self.name} cannot be enumerated")

    def __len__(self):
        raise UnsupportedError(f"lazy relation {self.name} has no materialized size")

    def filter_candidates(self, positions: Sequence[int], fixed: Dict[int, int],
                          candidates: Sequence[int]) -> List[int]:
        if self.batch_filter is not None and len(positions) == 1:
            return self.batch_filter(positions[0], fixed, candidates)
        kept = []
        row = [0] * self.arity
        for pos, value in fixed.items():
            row[pos] = value
        for c in candidates:
            for pos in positions:
                row[pos] = c
            if self.contains(row):
                kept.append(c)
        return kept

    def materialize(self, limit: Optional[int] = None) -> Relation:
        """Tabulate by testing every candidate tuple."""
        limit = limit if limit is not None else get_settings().max_tuples
        total = self.candidates ** self.arity
        if total > limit:
            raise CapacityError(f"materializing {self.name} needs {total} membership tests (limit {limit})")
        rows = [t for t in itertools.product(range(self.candidates), repeat=self.arity) if self.contains(t)]
        return Relation(self.name, self.arity, rows)


@dataclass(frozen=True)
class RelationalStructure:
    name: str
    domain_size: int
    relations: Tuple = ()

    def __post_init__(self):
        object.__setattr__(self, 'relations', tuple(self.relations))

    @property
    def arities(self) -> Tuple[int, ...]:
        return tuple(r.arity for r in self.relations)

    def signature_compatible(self, other: "RelationalStructure") -> bool:
        return self.arities == other.arities

    def require_compatible(self, other: "RelationalStructure") -> None:
        if not self.signature_compatible(other):
            raise StructuralError(
                f"signature mismatch: {self.name} has arities {list(self.arities)}, "
                f"{other.name} has {list(other.arities)}")

    @property
    def is_materialized(self) -> bool:
        return not any(r.is_lazy for r in self.relations)

    def relation(self, name: str):
        for rel in self.relations:
            if rel.name == name:
                return rel
        raise KeyError(name)

    def relation_index(self, name: str) -> int:
        for index, rel in enumerate(self.relations):
            if rel.name == name:
                return index
        raise KeyError(name)

    def payload(self) -> Dict[str, object]:
        """JSON-ready copy for violation reports; lazy relations appear as "lazy"."""
        return {"name": self.name, "domain": self.domain_size,
                "relations": [{"name": r.name, "arity": r.arity,
                               "tuples": "lazy" if r.is_lazy else [list(t) for t in r.tuples]}
                              for r in self.relations]}

    def materialized(self) -> "RelationalStructure":
        rels = [r.materialize() if r.is_lazy else r for r in self.relations]
        return RelationalStructure(self.name, self.domain_size, tuple(rels))

    def with_relations(self, relations: Sequence, name: Optional[str] = None) -> "RelationalStructure":
        return RelationalStructure(name or self.name, self.domain_size, tuple(relations))

    def substructure(self, elements: Sequence[int], name: Optional[str] = None) -> "RelationalStructure":
        """Induced substructure on `elements`, re-indexed in the given order."""
        position = {e: i for i, e in enumerate(elements)}
        rels = []
        for rel in self.relations:
            rows = [tuple(position[x] for x in t) for t in rel if all(x in position for x in t)]
            rels.append(Relation(rel.name, rel.arity, rows))
        return RelationalStructure(name or f"{self.name}|sub", len(elements), tuple(rels))


@dataclass(frozen=True)
class Homomorphism:
    source: RelationalStructure
    target: RelationalStructure
    mapping: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, 'mapping', tuple(int(x) for x in self.mapping))

    def __call__(self, element: int) -> int:
        return self.mapping[element]

    def image(self, row: Sequence[int]) -> Tuple_:
        return tuple(self.mapping[x] for x in row)


def validate_structure(structure: RelationalStructure) -> List[str]:
    """List every out-of-range entry and arity mismatch; empty means valid."""
    violations = []
    for rel in structure.relations:
        if rel.is_lazy:
            continue
        for index, row in enumerate(rel.tuples):
            if len(row) != rel.arity:
                violations.append(
                    f"relation {rel.name} tuple {index}: length {len(row)} does not match arity {rel.arity}")
            for entry in row:
                if not 0 <= entry < structure.domain_size:
                    violations.append(f"relation {rel.name} tuple {index}: entry {entry} out of range")
    return violations


def power_structure(structure: RelationalStructure, n: int,
                    max_domain: Optional[int] = None) -> RelationalStructure:
    """n-th categorical power; elements are n-tuples ranked lexicographically."""
    if n < 1:
        raise StructuralError(f"power exponent must be >= 1, got {n}")
    max_domain = max_domain if max_domain is not None else get_settings().max_domain
    size = structure.domain_size ** n
    if size > max_domain:
        raise CapacityError(f"power domain {structure.domain_size}^{n} = {size} exceeds limit {max_domain}")
    base = structure.domain_size
    rels = []
    for rel in structure.relations:
        if rel.is_lazy:
            raise UnsupportedError(f"cannot take powers of lazy relation {rel.name}")
        rows = []
        for choice in itertools.product(rel.tuples, repeat=n):
            rows.append(tuple(encode_tuple(column, base) for column in zip(*choice)))
        rels.append(Relation(rel.name, rel.arity, rows))
    logger.debug("power %s^%d: domain %d", structure.name, n, size)
    return RelationalStructure(f"{structure.name}^{n}", size, tuple(rels))


def disjoint_union(structures: Sequence[RelationalStructure], name: str = "union") -> RelationalStructure:
    """Disjoint union with offset re-indexing, blocks in input order."""
    if not structures:
        return RelationalStructure(name, 0, ())
    first = structures[0]
    for other in structures[1:]:
        first.require_compatible(other)
    offset = 0
    merged: List[List[Tuple_]] = [[] for _ in first.relations]
    for part in structures:
        for index, rel in enumerate(part.relations):
            merged[index].extend(tuple(x + offset for x in t) for t in rel)
        offset += part.domain_size
    rels = tuple(Relation(r.name, r.arity, rows) for r, rows in zip(first.relations, merged))
    return RelationalStructure(name, offset, rels)
