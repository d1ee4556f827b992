"""Named templates used across the corpus, tests and the `examples` subcommand."""

import itertools
from typing import Iterable, Sequence, Tuple

from .structures import Relation, RelationalStructure

ALPHA = 2

BTW = tuple(t for t in itertools.product((0, 1), repeat=3) if t not in ((0, 1, 0), (1, 0, 1)))
BTW_ALPHA_EXTRA = ((1, 1, ALPHA), (ALPHA, 1, 1), (0, 0, ALPHA), (ALPHA, 0, 0), (0, ALPHA, 1), (1, ALPHA, 0))


def graph_structure(name: str, n: int, edges: Iterable[Tuple[int, int]], symmetric: bool = True,
                    relation: str = "edge") -> RelationalStructure:
    rows = set()
    for a, b in edges:
        rows.add((a, b))
        if symmetric:
            rows.add((b, a))
    return RelationalStructure(name, n, (Relation(relation, 2, rows),))


def complete_graph(n: int) -> RelationalStructure:
    return graph_structure(f"K{n}", n, ((a, b) for a in range(n) for b in range(n) if a != b))


def cycle(n: int) -> RelationalStructure:
    return graph_structure(f"C{n}", n, ((i, (i + 1) % n) for i in range(n)))


def path(n: int) -> RelationalStructure:
    return graph_structure(f"P{n}", n, ((i, i + 1) for i in range(n - 1)))


def leq_template(with_constants: bool = True) -> RelationalStructure:
    """({0,1}, <=) optionally with the singletons {0} and {1}."""
    rels = [Relation("leq", 2, ((0, 0), (0, 1), (1, 1)))]
    if with_constants:
        rels += [Relation("zero", 1, ((0,),)), Relation("one", 1, ((1,),))]
    return RelationalStructure("leq", 2, tuple(rels))


def btw_template() -> RelationalStructure:
    """Binary betweenness ({0,1}, {0}, {1}, btw)."""
    return RelationalStructure("btw", 2, (
        Relation("zero", 1, ((0,),)),
        Relation("one", 1, ((1,),)),
        Relation("btw", 3, BTW),
    ))


def btw_alpha_template() -> RelationalStructure:
    """({0,1,α}, {0,α}, {1,α}, btw_α) with α encoded as 2."""
    return RelationalStructure("btw_alpha", 3, (
        Relation("zero", 1, ((0,), (ALPHA,))),
        Relation("one", 1, ((1,), (ALPHA,))),
        Relation("btw", 3, BTW + BTW_ALPHA_EXTRA),
    ))


def betweenness_input(n: int, omega0: Iterable[int], omega1: Iterable[int],
                      triples: Iterable[Tuple[int, int, int]], name: str = "R") -> RelationalStructure:
    """An input (V, Ω_0, Ω_1, Ω) in the betweenness signature."""
    return RelationalStructure(name, n, (
        Relation("zero", 1, ((v,) for v in omega0)),
        Relation("one", 1, ((v,) for v in omega1)),
        Relation("btw", 3, triples),
    ))


def constants_template(domain_size: int, arities: Sequence[int], name: str = "constant") -> RelationalStructure:
    """Every relation holds exactly the all-equal tuples."""
    rels = tuple(Relation(f"r{i}", m, ((a,) * m for a in range(domain_size))) for i, m in enumerate(arities))
    return RelationalStructure(name, domain_size, rels)


def full_template(domain_size: int, arities: Sequence[int], name: str = "full") -> RelationalStructure:
    rels = tuple(Relation(f"r{i}", m, itertools.product(range(domain_size), repeat=m))
                 for i, m in enumerate(arities))
    return RelationalStructure(name, domain_size, rels)


def h_coloring_template(h: RelationalStructure) -> RelationalStructure:
    """CSP(H) for a graph H, as a single-relation template."""
    return RelationalStructure(f"{h.name}-coloring", h.domain_size, (h.relations[0].renamed("edge"),))


def corpus_templates() -> Tuple[RelationalStructure, ...]:
    """The fixed template corpus used by the embedding audits."""
    return (
        complete_graph(2),
        complete_graph(3),
        cycle(4),
        cycle(5),
        leq_template(),
        leq_template(with_constants=False),
        btw_template(),
        btw_alpha_template(),
        constants_template(2, (2, 3)),
        full_template(2, (1, 2)),
        RelationalStructure("empty", 2, (Relation("r0", 2, ()),)),
        RelationalStructure("singleton", 1, (Relation("r0", 2, ((0, 0),)),)),
    )
