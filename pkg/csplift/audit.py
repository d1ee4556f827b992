"""
Seeded randomized audits of the constructions and theorems.

Each audit yields `AuditRecord` rows. A case seed is drawn from the audit's own
generator, so any single case can be replayed with `replay(audit, seed)`.
"""

import itertools
import json
import logging
import time
from dataclasses import asdict, dataclass
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from .algebras import (Algebra, AlgebraSet, AlgebraSignature, CheckOutcome, close_algebras, constant_algebra,
                       extending_embedding, lifted_in_minv_check, reduction_pipeline, term_transport_check,
                       tractable_boolean_algebras, verify_lifted_polymorphism)
from .conservative import bipartite_example_check, build_gamma_prime_c, two_coloring_template
from .errors import CapacityError, CspLiftError, PreconditionError, TheoremViolation
from .operations import (BooleanSchaeferOracle, FiniteOperation, OperationSystem, boolean,
                         find_siggers_pair_admitted, is_polymorphism, projection, siggers_pair_tables)
from .siggers import betweenness_example, build_gamma_prime, check_homtoG, constant_pair_embedding
from .solver import brute_force_homomorphism, find_homomorphism, hom_equivalent, is_homomorphism, iter_homomorphisms
from .structures import Relation, RelationalStructure
from .templates import (betweenness_input, btw_alpha_template, btw_template, complete_graph, corpus_templates,
                        leq_template)
from .valued import independent_set_template

logger = logging.getLogger(__name__)

SIGMA_B2 = AlgebraSignature((2,))


@dataclass
class AuditRecord:
    audit: str
    case: int
    seed: int
    outcome: str
    elapsed_ms: float
    detail: str = ""

    @property
    def violation(self) -> bool:
        return self.outcome == "violation"


# -- random objects ---------------------------------------------------------------

def random_operation(rng: np.random.Generator, domain_size: int, arity: int, name: str = "f") -> FiniteOperation:
    table = rng.integers(0, domain_size, size=domain_size ** arity)
    return FiniteOperation(name, domain_size, arity, tuple(int(v) for v in table))


def random_algebra(rng: np.random.Generator, signature: AlgebraSignature, domain_size: int,
                   name: str = "A") -> Algebra:
    ops = tuple(random_operation(rng, domain_size, n, f"o{i}") for i, n in enumerate(signature.arities))
    return Algebra(name, signature, domain_size, ops)


def random_structure(rng: np.random.Generator, name: str, domain_size: int, arities: Sequence[int],
                     density: float) -> RelationalStructure:
    rels = []
    for i, m in enumerate(arities):
        rows = [row for row in itertools.product(range(domain_size), repeat=m) if rng.random() < density]
        rels.append(Relation(f"r{i}", m, rows))
    return RelationalStructure(name, domain_size, tuple(rels))


def random_sparse_structure(rng: np.random.Generator, name: str, domain_size: int,
                            arities: Sequence[int], max_tuples: int) -> RelationalStructure:
    rels = []
    for i, m in enumerate(arities):
        count = int(rng.integers(0, max_tuples + 1))
        rows = [tuple(int(x) for x in rng.integers(0, domain_size, size=m)) for _ in range(count)]
        rels.append(Relation(f"r{i}", m, rows))
    return RelationalStructure(name, domain_size, tuple(rels))


def random_betweenness_input(rng: np.random.Generator, max_vertices: int, max_triples: int = 3,
                             name: str = "R") -> RelationalStructure:
    n = int(rng.integers(1, max_vertices + 1))
    omega0 = [v for v in range(n) if rng.random() < 0.25]
    omega1 = [v for v in range(n) if rng.random() < 0.25]
    count = int(rng.integers(0, max_triples + 1))
    triples = [tuple(int(x) for x in rng.integers(0, n, size=3)) for _ in range(count)]
    return betweenness_input(n, omega0, omega1, triples, name)


def _polymorphisms(template: RelationalStructure, arity: int) -> List[FiniteOperation]:
    d = template.domain_size
    found = []
    for table in itertools.product(range(d), repeat=d ** arity):
        op = FiniteOperation(f"f{len(found)}", d, arity, table)
        if is_polymorphism(op, template):
            found.append(op)
    return found


def _payload(**items) -> str:
    return json.dumps(items, sort_keys=True, default=lambda o: getattr(o, "table", str(o)))


# -- the auditor -------------------------------------------------------------------

class TheoremAuditor:
    """Runs named audits; `cases` overrides the per-audit default case count."""

    DEFAULT_CASES = {
        "homomorphism-oracle": 200,
        "homtoG": 20,
        "embeddings": 0,
        "siggers-census": 1,
        "transport": 100,
        "polextend": 100,
        "inside": 100,
        "minv-lemma": 10,
        "reduction": 30,
        "betweenness": 50,
        "bipartite": 0,
        "k3-no-siggers": 1,
        "oracle-sanity": 1,
        "two-coloring": 1,
    }
    SLOW = ("homtoG", "bipartite", "k3-no-siggers", "two-coloring")

    def __init__(self, seed: int = 0, cases: Optional[int] = None):
        self.seed = seed
        self.cases = cases
        self.results: List[AuditRecord] = []
        self._cache: Dict[str, object] = {}
        self.audits: Dict[str, Callable[[np.random.Generator, int], Tuple[str, str]]] = {
            "homomorphism-oracle": self.case_homomorphism_oracle,
            "homtoG": self.case_homtoG,
            "embeddings": self.case_embeddings,
            "siggers-census": self.case_siggers_census,
            "transport": self.case_transport,
            "polextend": self.case_polextend,
            "inside": self.case_inside,
            "minv-lemma": self.case_minv_lemma,
            "reduction": self.case_reduction,
            "betweenness": self.case_betweenness,
            "bipartite": self.case_bipartite,
            "k3-no-siggers": self.case_k3,
            "oracle-sanity": self.case_oracle_sanity,
            "two-coloring": self.case_two_coloring,
        }

    # -- driver ------------------------------------------------------------------

    def case_count(self, name: str) -> int:
        if name == "embeddings":
            return len(corpus_templates())
        if name == "bipartite":
            return len(self._connected_graphs())
        if self.cases is not None and self.DEFAULT_CASES[name] > 1:
            return self.cases
        return self.DEFAULT_CASES[name]

    def case_seeds(self, name: str) -> List[int]:
        index = list(self.audits).index(name)
        rng = np.random.default_rng([self.seed, index])
        return [int(s) for s in rng.integers(0, 2 ** 63 - 1, size=self.case_count(name))]

    def replay(self, name: str, case: int, seed: int) -> AuditRecord:
        """Run one case with an explicit seed."""
        rng = np.random.default_rng(seed)
        start = time.perf_counter()
        try:
            outcome, detail = self.audits[name](rng, case)
        except TheoremViolation as exc:
            outcome, detail = "violation", _payload(statement=exc.statement, **exc.payload)
        except (CapacityError, PreconditionError) as exc:
            outcome, detail = "skipped", str(exc)
        elapsed = (time.perf_counter() - start) * 1000
        if outcome == "violation":
            logger.error("THEOREM VIOLATION in %s case %d (seed %d): %s", name, case, seed, detail)
        record = AuditRecord(name, case, seed, outcome, round(elapsed, 3), detail)
        self.results.append(record)
        return record

    def run(self, names: Optional[Sequence[str]] = None, include_slow: bool = True) -> List[AuditRecord]:
        names = list(names) if names else [n for n in self.audits if include_slow or n not in self.SLOW]
        unknown = [n for n in names if n not in self.audits]
        if unknown:
            raise CspLiftError(f"unknown audit(s): {', '.join(unknown)}")
        records = []
        for name in names:
            logger.info("audit %s: %d case(s)", name, self.case_count(name))
            for case, seed in enumerate(self.case_seeds(name)):
                records.append(self.replay(name, case, seed))
        return records

    @staticmethod
    def _from_outcome(outcome: CheckOutcome) -> Tuple[str, str]:
        if outcome.status == "violation":
            return "violation", _payload(statement=outcome.reason, **outcome.payload)
        return outcome.status, outcome.reason

    # -- shared fixtures ---------------------------------------------------------

    def _gamma_prime_btw(self):
        if "gamma_prime_btw" not in self._cache:
            self._cache["gamma_prime_btw"] = build_gamma_prime(btw_template())
        return self._cache["gamma_prime_btw"]

    def _gamma_prime_c(self):
        if "gamma_prime_c" not in self._cache:
            self._cache["gamma_prime_c"] = build_gamma_prime_c(independent_set_template(), materialize=True)
        return self._cache["gamma_prime_c"]

    def _connected_graphs(self) -> List[nx.Graph]:
        if "graphs" not in self._cache:
            self._cache["graphs"] = [g for g in nx.graph_atlas_g()
                                     if 0 < g.number_of_nodes() <= 5 and nx.is_connected(g)]
        return self._cache["graphs"]

    def _tractable_set(self) -> AlgebraSet:
        if "comoblom" not in self._cache:
            self._cache["comoblom"] = tractable_boolean_algebras(SIGMA_B2)
        return self._cache["comoblom"]

    def _audit_templates(self) -> List[Tuple[RelationalStructure, List[FiniteOperation], List[FiniteOperation]]]:
        """Boolean templates with their unary-to-binary and binary polymorphisms."""
        if "audit_templates" not in self._cache:
            templates = [leq_template(), btw_template(), leq_template(with_constants=False), complete_graph(2)]
            self._cache["audit_templates"] = [(t, _polymorphisms(t, 1) + _polymorphisms(t, 2), _polymorphisms(t, 2))
                                              for t in templates]
        return self._cache["audit_templates"]

    # -- individual audits -------------------------------------------------------

    def case_homomorphism_oracle(self, rng: np.random.Generator, case: int) -> Tuple[str, str]:
        k = int(rng.integers(1, 3))
        arities = [int(a) for a in rng.integers(1, 4, size=k)]
        n_t = int(rng.integers(1, 5))
        n_r = int(rng.integers(1, 7))
        while n_t ** n_r > 10 ** 5:
            n_r -= 1
        target = random_structure(rng, "T", n_t, arities, float(rng.uniform(0.3, 0.8)))
        source = random_sparse_structure(rng, "R", n_r, arities, 2 * n_r)
        found = find_homomorphism(source, target)
        oracle = brute_force_homomorphism(source, target)
        if (found is None) != (oracle is None) or (found is not None and not is_homomorphism(found)):
            raise TheoremViolation("search disagrees with exhaustive enumeration",
                                   {"source": source.payload(),
                                    "target": target.payload(),
                                    "search": found.mapping if found else None})
        return "pass", f"|R|={n_r} |T|={n_t} exists={found is not None}"

    def case_homtoG(self, rng: np.random.Generator, case: int) -> Tuple[str, str]:
        structure = random_betweenness_input(rng, 4)
        report = check_homtoG(structure, btw_template(), self._gamma_prime_btw())
        if not report.agree or report.restriction_valid is False or report.glued_valid is False:
            raise TheoremViolation("Γ_R indicator and Γ′ search disagree",
                                   {"input": structure.payload(),
                                    "indicator": report.indicator_pair is not None,
                                    "gamma_prime": (report.gamma_prime_hom is not None
                                                    if report.lazy_decided else "undecided"),
                                    "decomposed": report.oracle_map is not None,
                                    "restriction_valid": report.restriction_valid,
                                    "glued_valid": report.glued_valid})
        side = "lazy" if report.lazy_decided else "decomposed"
        return "pass", f"|V|={structure.domain_size} verdict={report.verdict} Γ′ side={side}"

    def case_embeddings(self, rng: np.random.Generator, case: int) -> Tuple[str, str]:
        template = corpus_templates()[case]
        pair_map = constant_pair_embedding(template)
        if not pair_map.is_valid():
            raise TheoremViolation(f"constant pairs do not embed {template.name} into Γ′", {"template": template.name})
        d = template.domain_size
        seeds = [constant_algebra(a, SIGMA_B2, d) for a in range(d)]
        seeds += [random_algebra(rng, SIGMA_B2, d, f"A{i}") for i in range(2)]
        algebras = AlgebraSet(SIGMA_B2, d)
        for algebra in seeds:
            if algebra not in algebras:
                algebras.add(algebra)
        h = extending_embedding(template, algebras)
        if not is_homomorphism(h):
            raise TheoremViolation(f"a -> a^σ does not embed {template.name} into Γ^𝔅",
                                   {"template": template.name, "mapping": h.mapping})
        return "pass", template.name

    def case_siggers_census(self, rng: np.random.Generator, case: int) -> Tuple[str, str]:
        g_tables, _ = siggers_pair_tables(2)
        codes = np.arange(1 << 16, dtype=np.int64)

        def bit(args) -> np.ndarray:
            position = (args[0] << 3) | (args[1] << 2) | (args[2] << 1) | args[3]
            return (codes >> (15 - position)) & 1

        expected = 0
        constant_count = 0
        for g_row in itertools.product(range(2), repeat=2):
            image = sorted(set(g_row))
            ok = np.ones(len(codes), dtype=bool)
            for x in image:
                ok &= bit((x, x, x, x)) == x
                for y in image:
                    for z in image:
                        ok &= bit((x, y, x, z)) == bit((y, x, z, y))
            for args in itertools.product(image, repeat=4):
                ok &= np.isin(bit(args), image)
            expected += int(ok.sum())
            if len(image) == 1:
                constant_count += int(ok.sum())
        observed_constant = int(sum(1 for row in g_tables if row[0] == row[1]))
        if len(g_tables) != expected or observed_constant != constant_count or constant_count != 2 * 2 ** 15:
            raise TheoremViolation("Siggers census mismatch",
                                   {"enumerated": len(g_tables), "filtered": expected,
                                    "constant_enumerated": observed_constant, "constant_filtered": constant_count})
        return "pass", f"{expected} pairs, {constant_count} with constant g"

    def case_transport(self, rng: np.random.Generator, case: int) -> Tuple[str, str]:
        kinds = ("identification", "fictitious", "permutation", "projection", "superposition")
        kind = kinds[case % len(kinds)]
        algebras = [random_algebra(rng, SIGMA_B2, 2, f"A{i}") for i in range(3)]
        n = int(rng.integers(2, 4))
        if kind == "identification":
            f = random_operation(rng, 2, n)
            g = FiniteOperation.from_function("g", 2, n - 1, lambda *xs: f(*xs, xs[-1]))
            outcome = term_transport_check(kind, algebras, f, g)
        elif kind == "fictitious":
            g = random_operation(rng, 2, n - 1, "g")
            f = FiniteOperation.from_function("f", 2, n, lambda *xs: g(*xs[:-1]))
            outcome = term_transport_check(kind, algebras, f, g)
        elif kind == "permutation":
            f = random_operation(rng, 2, n)
            pi = tuple(int(p) for p in rng.permutation(n))
            g = FiniteOperation.from_function("g", 2, n, lambda *xs: f(*(xs[p] for p in pi)))
            outcome = term_transport_check(kind, algebras, f, g, permutation=pi)
        elif kind == "projection":
            index = int(rng.integers(0, n))
            outcome = term_transport_check(kind, algebras, projection(2, n, index), index=index)
        else:
            n = int(rng.integers(1, 3))
            m = int(rng.integers(1, 3))
            f = random_operation(rng, 2, n)
            parts = [random_operation(rng, 2, m, f"g{j}") for j in range(n)]
            g = FiniteOperation.from_function("g", 2, m, lambda *xs: f(*(p(*xs) for p in parts)))
            outcome = term_transport_check(kind, algebras, f, g, parts=parts)
        status, detail = self._from_outcome(outcome)
        return status, detail or kind

    def _closed_set(self, rng: np.random.Generator, outside=(), inside=()) -> Optional[AlgebraSet]:
        seeds = [constant_algebra(a, SIGMA_B2, 2) for a in range(2)]
        seeds += [random_algebra(rng, SIGMA_B2, 2, f"A{i}") for i in range(int(rng.integers(1, 3)))]
        return close_algebras(seeds, outside, inside, limit=8)

    def case_polextend(self, rng: np.random.Generator, case: int) -> Tuple[str, str]:
        for _ in range(50):
            template, polys, _ = self._audit_templates()[int(rng.integers(0, len(self._audit_templates())))]
            f = polys[int(rng.integers(0, len(polys)))]
            algebras = self._closed_set(rng, outside=[f])
            if algebras is None:
                continue
            status, detail = self._from_outcome(verify_lifted_polymorphism("outside", template, algebras, f))
            if status != "skipped":
                return status, detail or f"{template.name} |𝔅|={len(algebras)} arity={f.arity}"
        return "skipped", "no precondition-passing case found"

    def case_inside(self, rng: np.random.Generator, case: int) -> Tuple[str, str]:
        for _ in range(50):
            template, _, binary = self._audit_templates()[int(rng.integers(0, len(self._audit_templates())))]
            picks = [binary[int(i)] for i in rng.integers(0, len(binary), size=2)]
            system = OperationSystem((2,), (tuple(picks),))
            algebras = self._closed_set(rng, inside=[system])
            if algebras is None:
                continue
            status, detail = self._from_outcome(verify_lifted_polymorphism("inside", template, algebras, system))
            if status != "skipped":
                return status, detail or f"{template.name} |𝔅|={len(algebras)}"
        return "skipped", "no precondition-passing case found"

    def case_minv_lemma(self, rng: np.random.Generator, case: int) -> Tuple[str, str]:
        template, _, _ = self._audit_templates()[int(rng.integers(0, len(self._audit_templates())))]
        algebras = self._closed_set(rng)
        status, detail = self._from_outcome(lifted_in_minv_check(template, algebras))
        return status, detail or f"{template.name} |𝔅|={len(algebras)}"

    def case_reduction(self, rng: np.random.Generator, case: int) -> Tuple[str, str]:
        structure = random_betweenness_input(rng, 4)
        result = reduction_pipeline(btw_template(), self._tractable_set(), structure)
        direct = brute_force_homomorphism(structure, btw_template()) is not None
        if result.member != direct:
            raise TheoremViolation("pipeline disagrees with exhaustive CSP(Γ)",
                                   {"input": structure.payload(),
                                    "pipeline": result.member, "direct": direct})
        return "pass", f"|V|={structure.domain_size} member={result.member} step={result.step}"

    def case_betweenness(self, rng: np.random.Generator, case: int) -> Tuple[str, str]:
        structure = random_betweenness_input(rng, 5, max_triples=4)
        direct = brute_force_homomorphism(structure, btw_template()) is not None
        solutions = list(itertools.islice(iter_homomorphisms(structure, btw_alpha_template()), 64))
        if not solutions:
            if direct:
                raise TheoremViolation("input solvable over btw but not over btw_α",
                                       {"input": structure.payload()})
            return "pass", "no Γ_α solution"
        g = solutions[int(rng.integers(0, len(solutions)))]
        h = betweenness_example(structure, g)
        if (h is not None) != direct:
            raise TheoremViolation("betweenness rounding disagrees with exhaustive search",
                                   {"input": structure.payload(),
                                    "g": g.mapping, "rounded": h is not None, "direct": direct})
        return "pass", f"|V|={structure.domain_size} solvable={direct}"

    def case_bipartite(self, rng: np.random.Generator, case: int) -> Tuple[str, str]:
        graph = self._connected_graphs()[case]
        structure = RelationalStructure(f"G{case}", graph.number_of_nodes(), (
            Relation("edge", 2, [(a, b) for a, b in graph.edges()] + [(b, a) for a, b in graph.edges()]),
            Relation("reward", 1, ()),
            Relation("penalty", 1, ()),
        ))
        verdict = bipartite_example_check(structure, self._gamma_prime_c())
        if not verdict.agree:
            raise TheoremViolation("Γ′_c verdict differs from bipartiteness",
                                   {"edges": sorted(graph.edges()), "maps": verdict.maps_to_gamma_prime_c,
                                    "bipartite": verdict.bipartite})
        return "pass", f"n={graph.number_of_nodes()} bipartite={verdict.bipartite}"

    def case_k3(self, rng: np.random.Generator, case: int) -> Tuple[str, str]:
        pair = find_siggers_pair_admitted(complete_graph(3))
        if pair is not None:
            raise TheoremViolation("K3 admits a Siggers pair", {"g": pair[0].table, "s": pair[1].table})
        return "pass", "K3 admits no Siggers pair"

    def case_oracle_sanity(self, rng: np.random.Generator, case: int) -> Tuple[str, str]:
        oracle = BooleanSchaeferOracle()
        verdicts = {"min": oracle.verdict([boolean("min")]), "empty": oracle.verdict([]),
                    "nand": oracle.verdict([boolean("nand")])}
        if verdicts != {"min": True, "empty": False, "nand": True}:
            raise TheoremViolation("Boolean oracle sanity failed", verdicts)
        return "pass", _payload(**verdicts)

    def case_two_coloring(self, rng: np.random.Generator, case: int) -> Tuple[str, str]:
        gamma_prime_c = self._gamma_prime_c()
        target = two_coloring_template(gamma_prime_c.template.arities)
        if not hom_equivalent(gamma_prime_c.structure, target):
            raise TheoremViolation("Γ′_c of the independent-set template is not equivalent to 2-colouring",
                                   {"elements": len(gamma_prime_c.elements)})
        return "pass", f"|D′_c|={gamma_prime_c.structure.domain_size}"


def run_audits(seed: int = 0, cases: Optional[int] = None, names: Optional[Sequence[str]] = None,
               include_slow: bool = True) -> List[AuditRecord]:
    return TheoremAuditor(seed, cases).run(names, include_slow)


def records_as_dicts(records: Sequence[AuditRecord]) -> Iterator[Dict]:
    for record in records:
        yield asdict(record)
