"""
Finite operations, polymorphism checks and the Siggers machinery.

Operation tables are stored in lexicographic row-major argument order and
evaluated in bulk with numpy.
"""

import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Protocol, Sequence, Tuple

import numpy as np

from .config import get_settings
from .errors import CapacityError, StructuralError, UnsupportedError
from .structures import (Relation, RelationalStructure, decode_index, encode_tuple, power_structure)
from .solver import find_homomorphism, iter_homomorphisms

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FiniteOperation:
    name: str = field(compare=False)
    domain_size: int
    arity: int
    table: Tuple[int, ...]

    def __post_init__(self):
        table = tuple(int(v) for v in self.table)
        object.__setattr__(self, 'table', table)
        if len(table) != self.domain_size ** self.arity:
            raise StructuralError(
                f"operation {self.name}: table has {len(table)} rows, expected {self.domain_size}^{self.arity}")
        if any(not 0 <= v < self.domain_size for v in table):
            raise StructuralError(f"operation {self.name}: value out of range")

    @classmethod
    def from_function(cls, name: str, domain_size: int, arity: int,
                      fn: Callable[..., int]) -> "FiniteOperation":
        rows = itertools.product(range(domain_size), repeat=arity)
        return cls(name, domain_size, arity, tuple(fn(*row) for row in rows))

    def __call__(self, *args: int) -> int:
        return self.table[encode_tuple(args, self.domain_size)]

    @cached_property
    def array(self) -> np.ndarray:
        return np.asarray(self.table, dtype=np.int64)

    @property
    def fingerprint(self) -> bytes:
        return bytes([self.domain_size, self.arity]) + bytes(self.table)

    def image(self) -> frozenset:
        return frozenset(self.table)

    def rows(self) -> Iterator[Tuple[Tuple[int, ...], int]]:
        for index, value in enumerate(self.table):
            yield decode_index(index, self.domain_size, self.arity), value

    def renamed(self, name: str) -> "FiniteOperation":
        return FiniteOperation(name, self.domain_size, self.arity, self.table)


@dataclass(frozen=True)
class OperationSystem:
    """A system f̄ = {f^i_j}: for symbol i, n_i operations of arity n_i."""

    arities: Tuple[int, ...]
    operations: Tuple[Tuple[FiniteOperation, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, 'arities', tuple(self.arities))
        object.__setattr__(self, 'operations', tuple(tuple(ops) for ops in self.operations))
        if len(self.operations) != len(self.arities):
            raise StructuralError("operation system needs one slot list per signature symbol")
        domains = set()
        for n, ops in zip(self.arities, self.operations):
            if len(ops) != n:
                raise StructuralError(f"symbol of arity {n} needs {n} operations, got {len(ops)}")
            for op in ops:
                if op.arity != n:
                    raise StructuralError(f"operation {op.name} has arity {op.arity}, expected {n}")
                domains.add(op.domain_size)
        if len(domains) > 1:
            raise StructuralError("operation system mixes domains")

    @property
    def domain_size(self) -> Optional[int]:
        for ops in self.operations:
            for op in ops:
                return op.domain_size
        return None


def projection(domain_size: int, arity: int, index: int) -> FiniteOperation:
    return FiniteOperation.from_function(f"p{index + 1}_{arity}", domain_size, arity, lambda *xs: xs[index])


def constant(domain_size: int, arity: int, value: int) -> FiniteOperation:
    return FiniteOperation(f"const{value}_{arity}", domain_size, arity, (value,) * domain_size ** arity)


def boolean(name: str) -> FiniteOperation:
    """Named Boolean operations used throughout the tests and audits."""
    library = {
        'min': (2, lambda x, y: x & y),
        'max': (2, lambda x, y: x | y),
        'nand': (2, lambda x, y: 1 - (x & y)),
        'xor': (2, lambda x, y: x ^ y),
        'negation': (1, lambda x: 1 - x),
        'identity': (1, lambda x: x),
        'majority': (3, lambda x, y, z: (x & y) | (y & z) | (x & z)),
        'minority': (3, lambda x, y, z: x ^ y ^ z),
    }
    if name not in library:
        raise KeyError(name)
    arity, fn = library[name]
    return FiniteOperation.from_function(name, 2, arity, fn)


# -- preservation ---------------------------------------------------------------

def _relation_codes(rel: Relation, base: int) -> np.ndarray:
    if not len(rel):
        return np.zeros(0, dtype=np.int64)
    rows = np.asarray(rel.tuples, dtype=np.int64)
    weights = base ** np.arange(rel.arity - 1, -1, -1, dtype=np.int64)
    return np.sort(rows @ weights)


def _choice_chunks(count: int, n: int, chunk: int = 1 << 16) -> Iterator[np.ndarray]:
    """All n-tuples over range(count) in lexicographic order, in chunks."""
    total = count ** n
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
        cols = np.empty((len(idx), n), dtype=np.int64)
        for pos in range(n - 1, -1, -1):
            idx, cols[:, pos] = np.divmod(idx, count)
        yield cols


def componentwise_preserves(ops: Sequence[FiniteOperation], rel: Relation) -> bool:
    """(ops_1, ..., ops_m) applied column by column to any n tuples of rel stays in rel."""
    if rel.is_lazy:
        raise UnsupportedError(f"lazy relation {rel.name} cannot be enumerated for a preservation check")
    if len(ops) != rel.arity:
        raise StructuralError(f"{len(ops)} operations for relation {rel.name} of arity {rel.arity}")
    if not ops:
        return True
    n = ops[0].arity
    d = ops[0].domain_size
    if any(op.arity != n or op.domain_size != d for op in ops):
        raise StructuralError("component-wise operations must share arity and domain")
    if not len(rel):
        return True
    rows = np.asarray(rel.tuples, dtype=np.int64)
    codes = _relation_codes(rel, d)
    arg_weights = d ** np.arange(n - 1, -1, -1, dtype=np.int64)
    out_weights = d ** np.arange(rel.arity - 1, -1, -1, dtype=np.int64)
    tables = [op.array for op in ops]
    if n == 0:
        out = np.array([[t[0] for t in tables]], dtype=np.int64)
        return bool(np.isin(out @ out_weights, codes).all())
    for choice in _choice_chunks(len(rel), n):
        picked = rows[choice]                       # (C, n, m)
        out = np.empty((len(choice), rel.arity), dtype=np.int64)
        for col, table in enumerate(tables):
            out[:, col] = table[picked[:, :, col] @ arg_weights]
        if not np.isin(out @ out_weights, codes).all():
            return False
    return True


def preserves_relation(op: FiniteOperation, rel: Relation) -> bool:
    """op is a polymorphism of rel."""
    return componentwise_preserves([op] * rel.arity, rel)


def is_polymorphism(op: FiniteOperation, structure: RelationalStructure) -> bool:
    if op.domain_size != structure.domain_size:
        raise StructuralError(f"operation {op.name} is over {op.domain_size} elements, "
                              f"{structure.name} over {structure.domain_size}")
    return all(preserves_relation(op, rel) for rel in structure.relations)


# -- Siggers pairs --------------------------------------------------------------

def is_siggers_pair(g: FiniteOperation, s: FiniteOperation) -> bool:
    """s is closed, Siggers and idempotent on g(D)."""
    if g.arity != 1 or s.arity != 4 or g.domain_size != s.domain_size:
        raise StructuralError("a Siggers pair is a unary and a 4-ary operation on one domain")
    image = sorted(g.image())
    allowed = set(image)
    for row in itertools.product(image, repeat=4):
        if s(*row) not in allowed:
            return False
    for x in image:
        if s(x, x, x, x) != x:
            return False
        for y in image:
            for z in image:
                if s(x, y, x, z) != s(y, x, z, y):
                    return False
    return True


@lru_cache(maxsize=4)
def siggers_pair_tables(domain_size: int) -> Tuple[np.ndarray, np.ndarray]:
    """All Siggers pairs as (G, S) table arrays in lexicographic (g, s) order."""
    if domain_size >= 3:
        raise CapacityError(
            f"full Siggers pair enumeration is limited to domains of size <= 2 (got {domain_size}); "
            f"use find_siggers_pair_admitted for a targeted search")
    d = domain_size
    width = d ** 4
    count = d ** width
    ks = np.arange(count, dtype=np.int64)
    s_tables = np.empty((count, width), dtype=np.int8)
    for pos in range(width - 1, -1, -1):
        ks, s_tables[:, pos] = np.divmod(ks, d)
    g_parts, s_parts = [], []
    for g_row in itertools.product(range(d), repeat=d):
        image = sorted(set(g_row))
        ok = np.ones(count, dtype=bool)
        for args in itertools.product(image, repeat=4):
            col = s_tables[:, encode_tuple(args, d)]
            ok &= np.isin(col, image)
        for x in image:
            ok &= s_tables[:, encode_tuple((x,) * 4, d)] == x
            for y in image:
                for z in image:
                    left = encode_tuple((x, y, x, z), d)
                    right = encode_tuple((y, x, z, y), d)
                    ok &= s_tables[:, left] == s_tables[:, right]
        chosen = s_tables[ok]
        g_parts.append(np.tile(np.asarray(g_row, dtype=np.int8), (len(chosen), 1)))
        s_parts.append(chosen)
        logger.info("g=%s admits %d Siggers tables", g_row, len(chosen))
    return np.concatenate(g_parts), np.concatenate(s_parts)


def enumerate_siggers_pairs(domain_size: int) -> Iterator[Tuple[FiniteOperation, FiniteOperation]]:
    """Every Siggers pair on range(domain_size), lexicographic in (g, s)."""
    g_tables, s_tables = siggers_pair_tables(domain_size)
    for index, (g_row, s_row) in enumerate(zip(g_tables, s_tables)):
        yield (FiniteOperation(f"g{index}", domain_size, 1, tuple(g_row.tolist())),
               FiniteOperation(f"s{index}", domain_size, 4, tuple(s_row.tolist())))


def unary_polymorphisms(structure: RelationalStructure) -> List[FiniteOperation]:
    """All unary polymorphisms (endomorphisms) in lexicographic table order."""
    d = structure.domain_size
    found = []
    if d ** d <= 4096:
        for row in itertools.product(range(d), repeat=d):
            op = FiniteOperation(f"g{len(found)}", d, 1, row)
            if all(preserves_relation(op, rel) for rel in structure.relations):
                found.append(op)
        return found
    for h in iter_homomorphisms(structure, structure):
        found.append(FiniteOperation(f"g{len(found)}", d, 1, h.mapping))
    return found


def siggers_indicator(structure: RelationalStructure, image: Sequence[int]) -> Tuple[RelationalStructure, RelationalStructure]:
    """Indicator problem whose solutions are the 4-ary polymorphisms that are Siggers on `image`."""
    d = structure.domain_size
    image = sorted(image)
    power = power_structure(structure, 4)
    src = list(power.relations)
    tgt = list(structure.relations)
    src.append(Relation("closure", 1, ((encode_tuple(args, d),) for args in itertools.product(image, repeat=4))))
    tgt.append(Relation("closure", 1, ((a,) for a in image)))
    identities = [(encode_tuple((x, y, x, z), d), encode_tuple((y, x, z, y), d))
                  for x in image for y in image for z in image]
    src.append(Relation("siggers", 2, identities))
    tgt.append(Relation("siggers", 2, ((a, a) for a in range(d))))
    for a in image:
        src.append(Relation(f"idempotent{a}", 1, ((encode_tuple((a,) * 4, d),),)))
        tgt.append(Relation(f"idempotent{a}", 1, ((a,),)))
    return (RelationalStructure(f"{structure.name}^4+siggers", power.domain_size, tuple(src)),
            RelationalStructure(f"{structure.name}+siggers", d, tuple(tgt)))


def find_siggers_pair_admitted(structure: RelationalStructure) -> Optional[Tuple[FiniteOperation, FiniteOperation]]:
    """First Siggers pair (g, s) of polymorphisms of `structure`, or None."""
    d = structure.domain_size
    tried = set()
    for g in unary_polymorphisms(structure):
        image = g.image()
        if image in tried:
            continue
        tried.add(image)
        source, target = siggers_indicator(structure, image)
        h = find_homomorphism(source, target)
        if h is not None:
            logger.info("%s admits a Siggers pair with image %s", structure.name, sorted(image))
            return g.renamed("g"), FiniteOperation("s", d, 4, h.mapping)
    logger.info("%s admits no Siggers pair (%d images tried)", structure.name, len(tried))
    return None


# -- clones and the Boolean tractability oracle ---------------------------------

def clone_closure_upto(ops: Iterable[FiniteOperation], max_arity: int,
                       domain_size: Optional[int] = None) -> List[FiniteOperation]:
    """Term operations of arity <= max_arity generated by ops, sorted by (arity, table)."""
    ops = list(ops)
    if not 1 <= max_arity <= 3:
        raise StructuralError(f"max_arity must be in 1..3, got {max_arity}")
    domains = {op.domain_size for op in ops}
    if domain_size is not None:
        domains.add(domain_size)
    if len(domains) != 1:
        raise StructuralError("clone closure needs exactly one shared domain")
    d = domains.pop()
    limit = get_settings().max_tuples
    result: List[FiniteOperation] = []
    for k in range(0, max_arity + 1):
        width = d ** k
        if k == 0:
            terms = set()
        else:
            terms = {projection(d, k, i).table for i in range(k)}
        for op in ops:
            if op.arity == 0:
                terms.add((op.table[0],) * width)
        if not terms and not any(op.arity == 0 for op in ops):
            continue
        frontier = set(terms)
        while frontier:
            current = np.asarray(sorted(terms), dtype=np.int64)
            fresh = set()
            for op in ops:
                if op.arity == 0:
                    continue
                weights = d ** np.arange(op.arity - 1, -1, -1, dtype=np.int64)
                for choice in _choice_chunks(len(current), op.arity):
                    stacked = current[choice]               # (C, n, width)
                    index = np.einsum('cnw,n->cw', stacked, weights)
                    produced = op.array[index]
                    for row in map(tuple, produced.tolist()):
                        if row not in terms:
                            fresh.add(row)
            terms |= fresh
            frontier = fresh
            if len(terms) > limit:
                raise CapacityError(f"clone closure at arity {k} exceeds {limit} operations")
        for table in sorted(terms):
            result.append(FiniteOperation(f"t{k}_{len(result)}", d, k, table))
    return result


SCHAEFER_WITNESSES = {
    'constant0': FiniteOperation('constant0', 2, 1, (0, 0)),
    'constant1': FiniteOperation('constant1', 2, 1, (1, 1)),
    'min': boolean('min'),
    'max': boolean('max'),
    'majority': boolean('majority'),
    'minority': boolean('minority'),
}


def schaefer_witnesses(ops: Iterable[FiniteOperation]) -> List[str]:
    """Names of the Schaefer witnesses present in the arity-3 clone of ops."""
    ops = list(ops)
    for op in ops:
        if op.domain_size != 2:
            raise UnsupportedError("the built-in tractability oracle only decides Boolean domains")
    closure = set(clone_closure_upto(ops, 3, domain_size=2))
    return [name for name, op in SCHAEFER_WITNESSES.items() if op in closure]


def boolean_algebra_tractable(ops: Iterable[FiniteOperation]) -> bool:
    return bool(schaefer_witnesses(ops))


class TractabilityOracle(Protocol):
    name: str

    def verdict(self, ops: Sequence[FiniteOperation]) -> Optional[bool]:
        """True when tractable, False when known not to be, None when undecided."""


class BooleanSchaeferOracle:
    name = "boolean-schaefer"

    def verdict(self, ops: Sequence[FiniteOperation]) -> Optional[bool]:
        if any(op.domain_size != 2 for op in ops):
            return None
        if any(op.arity == 0 for op in ops):
            return None
        return boolean_algebra_tractable(ops)


@dataclass
class AssertedOracle:
    """Accepts exactly the operation sets whose fingerprints the user asserted."""

    asserted: set = field(default_factory=set)
    name: str = "user-asserted"

    @staticmethod
    def key(ops: Sequence[FiniteOperation]) -> Tuple[bytes, ...]:
        return tuple(op.fingerprint for op in ops)

    def assert_tractable(self, ops: Sequence[FiniteOperation]) -> None:
        self.asserted.add(self.key(ops))

    def verdict(self, ops: Sequence[FiniteOperation]) -> Optional[bool]:
        return True if self.key(ops) in self.asserted else None
