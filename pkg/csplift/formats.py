"""
Line-oriented text formats for structures, operations, algebras, costs and maps.

Every block opens with a keyword line and closes with `end`; `#` starts a
comment and blank lines are ignored. A file may hold any number of blocks.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

from .algebras import Algebra, AlgebraSet, AlgebraSignature
from .errors import CostOverflowError, ParseError, StructuralError
from .lifted import LiftedLanguage
from .operations import FiniteOperation
from .structures import Homomorphism, Relation, RelationalStructure, decode_index, validate_structure
from .valued import CostFunction, ValuedTemplate, as_cost, format_cost

logger = logging.getLogger(__name__)

ENCODING_COMMENT = "# encoding d(v,a)=v*|D|+a"


class _LineReader:
    """Numbered, comment-stripped token lines of one file."""

    def __init__(self, text: str, path: Optional[str] = None):
        self.path = path
        self.lines: List[Tuple[int, List[str]]] = []
        for number, raw in enumerate(text.splitlines(), start=1):
            tokens = raw.split('#', 1)[0].split()
            if tokens:
                self.lines.append((number, tokens))
        self.position = 0

    def fail(self, message: str, line: Optional[int] = None) -> ParseError:
        if line is None:
            line = self.lines[self.position - 1][0] if 0 < self.position <= len(self.lines) else None
        return ParseError(message, self.path, line)

    def at_end(self) -> bool:
        return self.position >= len(self.lines)

    def peek(self) -> Tuple[int, List[str]]:
        if self.at_end():
            raise self.fail("unexpected end of file", self.lines[-1][0] if self.lines else None)
        return self.lines[self.position]

    def next(self) -> Tuple[int, List[str]]:
        item = self.peek()
        self.position += 1
        return item

    def expect(self, keyword: str, count: int) -> List[str]:
        """Next line must be `keyword` followed by exactly `count` arguments."""
        number, tokens = self.next()
        if tokens[0] != keyword:
            raise self.fail(f"expected '{keyword}', got '{tokens[0]}'", number)
        if len(tokens) != count + 1:
            raise self.fail(f"'{keyword}' takes {count} argument(s), got {len(tokens) - 1}", number)
        return tokens[1:]

    def integers(self, tokens: Sequence[str], number: int) -> List[int]:
        try:
            return [int(t) for t in tokens]
        except ValueError:
            raise self.fail(f"non-integer field in {' '.join(tokens)!r}", number) from None

    def positive(self, token: str, number: int, what: str, allow_zero: bool = False) -> int:
        value = self.integers([token], number)[0]
        if value < 0 or (value == 0 and not allow_zero):
            raise self.fail(f"{what} must be {'non-negative' if allow_zero else 'positive'}, got {value}", number)
        return value


# -- parsing ------------------------------------------------------------------------

def _read_structure(reader: _LineReader) -> RelationalStructure:
    (name,) = reader.expect("structure", 1)
    number, tokens = reader.next()
    if tokens[0] != "domain" or len(tokens) != 2:
        raise reader.fail("expected 'domain <n>'", number)
    size = reader.positive(tokens[1], number, "domain size", allow_zero=True)
    relations: List[Relation] = []
    seen = set()
    while True:
        number, tokens = reader.next()
        if tokens[0] == "end":
            break
        if tokens[0] != "relation" or len(tokens) != 3:
            raise reader.fail(f"expected 'relation <name> <arity>' or 'end', got {' '.join(tokens)!r}", number)
        rel_name = tokens[1]
        if rel_name in seen:
            raise reader.fail(f"duplicate relation name {rel_name!r}", number)
        seen.add(rel_name)
        arity = reader.positive(tokens[2], number, "arity", allow_zero=True)
        rows = []
        while not reader.at_end() and reader.peek()[1][0] not in ("relation", "end"):
            row_number, row = reader.next()
            values = [] if row == ["()"] else reader.integers(row, row_number)
            if len(values) != arity:
                raise reader.fail(f"tuple of length {len(values)} in relation {rel_name} of arity {arity}", row_number)
            for value in values:
                if not 0 <= value < size:
                    raise reader.fail(f"entry {value} out of range for domain {size}", row_number)
            rows.append(tuple(values))
        relations.append(Relation(rel_name, arity, rows))
    return RelationalStructure(name, size, tuple(relations))


def _read_operation_rows(reader: _LineReader, name: str, size: int, arity: int,
                         stop: Tuple[str, ...]) -> FiniteOperation:
    table: Dict[int, int] = {}
    while not reader.at_end() and reader.peek()[1][0] not in stop:
        number, row = reader.next()
        values = reader.integers(row, number)
        if len(values) != arity + 1:
            raise reader.fail(f"operation {name} rows need {arity} arguments and a value", number)
        if any(not 0 <= v < size for v in values):
            raise reader.fail(f"value out of range for domain {size}", number)
        index = 0
        for a in values[:-1]:
            index = index * size + a
        if index in table:
            raise reader.fail(f"duplicate row {tuple(values[:-1])} in operation {name}", number)
        table[index] = values[-1]
    total = size ** arity
    if len(table) != total:
        missing = next(i for i in range(total) if i not in table)
        raise reader.fail(f"operation {name} is missing row {decode_index(missing, size, arity)} "
                          f"({len(table)} of {total} rows given)")
    return FiniteOperation(name, size, arity, tuple(table[i] for i in range(total)))


def _read_operation(reader: _LineReader) -> FiniteOperation:
    number, tokens = reader.peek()
    name, size_token, arity_token = reader.expect("operation", 3)
    size = reader.positive(size_token, number, "domain size")
    arity = reader.positive(arity_token, number, "arity", allow_zero=True)
    op = _read_operation_rows(reader, name, size, arity, ("end",))
    reader.expect("end", 0)
    return op


def _read_algebra(reader: _LineReader) -> Algebra:
    (name,) = reader.expect("algebra", 1)
    number, tokens = reader.next()
    if tokens[0] != "signature" or len(tokens) < 2:
        raise reader.fail("expected 'signature <n_1> ... <n_k>'", number)
    arities = [reader.positive(t, number, "arity", allow_zero=True) for t in tokens[1:]]
    number, tokens = reader.next()
    if tokens[0] != "domain" or len(tokens) != 2:
        raise reader.fail("expected 'domain <n>'", number)
    size = reader.positive(tokens[1], number, "domain size")
    ops: Dict[int, FiniteOperation] = {}
    while True:
        number, tokens = reader.next()
        if tokens[0] == "end":
            break
        if tokens[0] != "op" or len(tokens) != 2:
            raise reader.fail(f"expected 'op <i>' or 'end', got {' '.join(tokens)!r}", number)
        symbol = reader.positive(tokens[1], number, "symbol index", allow_zero=True)
        if symbol >= len(arities):
            raise reader.fail(f"symbol {symbol} outside signature of {len(arities)} symbols", number)
        if symbol in ops:
            raise reader.fail(f"duplicate op {symbol}", number)
        ops[symbol] = _read_operation_rows(reader, f"o{symbol}", size, arities[symbol], ("op", "end"))
    if len(ops) != len(arities):
        missing = next(i for i in range(len(arities)) if i not in ops)
        raise reader.fail(f"algebra {name} has no table for op {missing}")
    return Algebra(name, AlgebraSignature(tuple(arities)), size, tuple(ops[i] for i in range(len(arities))))


def _read_cost(reader: _LineReader) -> CostFunction:
    number, _ = reader.peek()
    name, size_token, arity_token = reader.expect("cost", 3)
    size = reader.positive(size_token, number, "domain size")
    arity = reader.positive(arity_token, number, "arity", allow_zero=True)
    entries = {}
    while True:
        number, tokens = reader.next()
        if tokens[0] == "end":
            break
        if len(tokens) != arity + 1:
            raise reader.fail(f"cost {name} rows need {arity} arguments and a cost", number)
        row = tuple(reader.integers(tokens[:-1], number))
        if any(not 0 <= v < size for v in row):
            raise reader.fail(f"value out of range for domain {size}", number)
        if row in entries:
            raise reader.fail(f"duplicate row {row} in cost {name}", number)
        try:
            entries[row] = as_cost(tokens[-1])
        except (ValueError, ZeroDivisionError, CostOverflowError) as exc:
            raise reader.fail(f"bad cost {tokens[-1]!r}: {exc}", number) from None
    return CostFunction(name, size, arity, entries)


_READERS = {
    "structure": _read_structure,
    "operation": _read_operation,
    "algebra": _read_algebra,
    "cost": _read_cost,
}


def parse_text(text: str, path: Optional[str] = None) -> List[object]:
    """Every block of the text, in file order."""
    reader = _LineReader(text, path)
    objects = []
    while not reader.at_end():
        number, tokens = reader.peek()
        read = _READERS.get(tokens[0])
        if read is None:
            raise reader.fail(f"unknown block keyword {tokens[0]!r}", number)
        objects.append(read(reader))
    return objects


@dataclass
class ParsedFiles:
    structures: Dict[str, RelationalStructure] = field(default_factory=dict)
    operations: Dict[str, FiniteOperation] = field(default_factory=dict)
    algebras: Dict[str, Algebra] = field(default_factory=dict)
    costs: Dict[str, CostFunction] = field(default_factory=dict)


def parse_files(paths: Iterable[Union[str, Path]]) -> ParsedFiles:
    """Parse and group by kind; names must be unique per kind across all files."""
    parsed = ParsedFiles()
    for path in paths:
        path = Path(path)
        for obj in parse_text(path.read_text(encoding="utf-8"), str(path)):
            if isinstance(obj, RelationalStructure):
                bucket = parsed.structures
            elif isinstance(obj, FiniteOperation):
                bucket = parsed.operations
            elif isinstance(obj, Algebra):
                bucket = parsed.algebras
            else:
                bucket = parsed.costs
            if obj.name in bucket:
                raise ParseError(f"duplicate name {obj.name!r}", str(path))
            bucket[obj.name] = obj
        logger.info("parsed %s", path)
    return parsed


def _only(objects: List[object], kind: type, path: str, what: str) -> List:
    chosen = [o for o in objects if isinstance(o, kind)]
    if not chosen:
        raise ParseError(f"no {what} block found", path)
    return chosen


def load_structure(path: Union[str, Path]) -> RelationalStructure:
    """The first structure of the file, validated."""
    path = str(path)
    structure = _only(parse_text(Path(path).read_text(encoding="utf-8"), path), RelationalStructure, path, "structure")[0]
    problems = validate_structure(structure)
    if problems:
        raise ParseError(problems[0], path)
    return structure


def load_algebra_set(path: Union[str, Path]) -> AlgebraSet:
    path = str(path)
    algebras = _only(parse_text(Path(path).read_text(encoding="utf-8"), path), Algebra, path, "algebra")
    try:
        return AlgebraSet(algebras[0].signature, algebras[0].domain_size, algebras)
    except StructuralError as exc:
        raise ParseError(str(exc), path) from None


def load_valued_template(path: Union[str, Path]) -> ValuedTemplate:
    """The cost blocks of one file, in order, as a valued template named after the file."""
    path = Path(path)
    costs = _only(parse_text(path.read_text(encoding="utf-8"), str(path)), CostFunction, str(path), "cost")
    sizes = {f.domain_size for f in costs}
    if len(sizes) != 1:
        raise ParseError(f"cost functions over different domains {sorted(sizes)}", str(path))
    return ValuedTemplate(path.stem, sizes.pop(), tuple(costs))


def parse_map(text: str, path: Optional[str] = None) -> Tuple[int, ...]:
    """`map <src> <dst>` lines; every source element from 0 up must be mapped once."""
    reader = _LineReader(text, path)
    mapping: Dict[int, int] = {}
    while not reader.at_end():
        number, tokens = reader.next()
        if tokens[0] != "map" or len(tokens) != 3:
            raise reader.fail("expected 'map <src> <dst>'", number)
        src, dst = reader.integers(tokens[1:], number)
        if src in mapping:
            raise reader.fail(f"element {src} mapped twice", number)
        mapping[src] = dst
    if sorted(mapping) != list(range(len(mapping))):
        raise ParseError("map does not cover a contiguous range of source elements", path)
    return tuple(mapping[i] for i in range(len(mapping)))


# -- serialization -------------------------------------------------------------------

def _rows(rows: Iterable[Sequence[int]]) -> List[str]:
    # the empty tuple of a nullary relation is written "()"
    return [" ".join(str(x) for x in row) if row else "()" for row in rows]


def serialize_structure(structure: RelationalStructure, comments: Sequence[str] = ()) -> str:
    lines = list(comments)
    lines += [f"structure {structure.name}", f"domain {structure.domain_size}"]
    for rel in structure.relations:
        if rel.is_lazy:
            raise StructuralError(f"lazy relation {rel.name} cannot be serialized; materialize it first")
        lines.append(f"relation {rel.name} {rel.arity}")
        lines += _rows(rel.tuples)
    lines.append("end")
    return "\n".join(lines) + "\n"


def serialize_lifted(lifted: LiftedLanguage) -> str:
    return serialize_structure(lifted.structure, (ENCODING_COMMENT, f"# |D|={lifted.base_size}"))


def _operation_rows(op: FiniteOperation) -> List[str]:
    return [" ".join([str(x) for x in args] + [str(value)]) for args, value in op.rows()]


def serialize_operation(op: FiniteOperation) -> str:
    lines = [f"operation {op.name} {op.domain_size} {op.arity}"] + _operation_rows(op) + ["end"]
    return "\n".join(lines) + "\n"


def serialize_algebra(algebra: Algebra) -> str:
    lines = [f"algebra {algebra.name}",
             "signature " + " ".join(str(n) for n in algebra.signature.arities),
             f"domain {algebra.domain_size}"]
    for i, op in enumerate(algebra.operations):
        lines.append(f"op {i}")
        lines += _operation_rows(op)
    lines.append("end")
    return "\n".join(lines) + "\n"


def serialize_algebra_set(algebras: AlgebraSet) -> str:
    return "".join(serialize_algebra(a) for a in algebras)


def serialize_cost(f: CostFunction) -> str:
    lines = [f"cost {f.name} {f.domain_size} {f.arity}"]
    lines += [" ".join([str(x) for x in row] + [format_cost(value)]) for row, value in f.entries.items()]
    lines.append("end")
    return "\n".join(lines) + "\n"


def serialize_map(mapping: Union[Homomorphism, Sequence[int]]) -> str:
    values = mapping.mapping if isinstance(mapping, Homomorphism) else mapping
    return "".join(f"map {src} {dst}\n" for src, dst in enumerate(values))


def iter_blocks(objects: Iterable[object]) -> Iterator[str]:
    """Serialize any mix of parsed objects."""
    for obj in objects:
        if isinstance(obj, RelationalStructure):
            yield serialize_structure(obj)
        elif isinstance(obj, FiniteOperation):
            yield serialize_operation(obj)
        elif isinstance(obj, Algebra):
            yield serialize_algebra(obj)
        elif isinstance(obj, CostFunction):
            yield serialize_cost(obj)
        else:
            raise StructuralError(f"no text format for {type(obj).__name__}")
