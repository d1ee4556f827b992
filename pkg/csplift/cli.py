#!/usr/bin/env python3
"""
Command-line entry point.

Exit codes: 0 when the subcommand completed, 1 when a theorem violation was
found, 2 on usage, parse or capacity errors.
"""

import argparse
import logging
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Optional, Sequence

import numpy as np

from .algebras import build_gamma_B, extending_embedding, is_extending, reduction_pipeline
from .audit import TheoremAuditor
from .config import get_settings, set_settings
from .conservative import bipartite_example_check, build_gamma_prime_c, find_kz_multimorphisms
from .errors import CspLiftError, TheoremViolation
from .formats import (load_algebra_set, load_structure, load_valued_template, parse_text, serialize_lifted,
                      serialize_map)
from .lifted import lift_language
from .report import Report, audit_report, emit_report, save_audit_csv
from .siggers import betweenness_example, build_gamma_prime, check_homtoG, constant_pair_embedding
from .solver import brute_force_homomorphism, find_homomorphism
from .structures import Relation, RelationalStructure
from .templates import betweenness_input, btw_alpha_template, btw_template, cycle
from .valued import CostFunction, independent_set_template

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2


@dataclass
class RunConfig:
    subcommand: str
    inputs: Dict[str, str] = field(default_factory=dict)
    output: Optional[str] = None
    seed: int = 0
    max_nodes: int = 5_000_000
    max_domain: int = 10 ** 6
    format: str = "text"

    def echo(self) -> Dict:
        return {k: v for k, v in asdict(self).items() if v not in (None, {})}


class Console:
    """Progress lines on stdout, only for the text format."""

    def __init__(self, enabled: bool):
        self.enabled = enabled

    def say(self, message: str) -> None:
        if self.enabled:
            print(message, flush=True)


# -- subcommands -------------------------------------------------------------------

def _is_cost_file(path: str) -> bool:
    objects = parse_text(Path(path).read_text(encoding="utf-8"), path)
    return any(isinstance(o, CostFunction) for o in objects)


def cmd_solve(args, config: RunConfig, console: Console) -> Report:
    structure = load_structure(args.input)
    template = load_structure(args.template)
    console.say(f"🔍 Searching {structure.name} -> {template.name}...")
    h = find_homomorphism(structure, template, max_nodes=config.max_nodes)
    report = Report("solve", config.echo())
    record = {"input": structure.name, "template": template.name, "exists": h is not None}
    if h is not None:
        record["map"] = list(h.mapping)
    report.add(**record)
    if args.output and h is not None:
        Path(args.output).write_text(serialize_map(h), encoding="utf-8")
        console.say(f"✓ Witness written to {args.output}")
    return report


def cmd_lift(args, config: RunConfig, console: Console) -> Report:
    structure = load_structure(args.input)
    template = load_valued_template(args.template) if _is_cost_file(args.template) else load_structure(args.template)
    lifted = lift_language(template, structure)
    report = Report("lift", config.echo())
    report.add(template=template.name, input=structure.name, domain=lifted.structure.domain_size,
               relations=len(lifted.keys), tuples=sum(len(r) for r in lifted.structure.relations))
    if args.output:
        Path(args.output).write_text(serialize_lifted(lifted), encoding="utf-8")
        console.say(f"✓ Lifted language written to {args.output}")
    return report


def cmd_gamma_prime(args, config: RunConfig, console: Console) -> Report:
    template = load_structure(args.template)
    gamma_prime = build_gamma_prime(template)
    report = Report("gamma-prime", config.echo())
    if gamma_prime.materialized:
        console.say(f"📊 Γ′ of {template.name}: {gamma_prime.domain_size} Siggers pairs")
        report.add(template=template.name, domain=gamma_prime.domain_size)
        rng = np.random.default_rng(config.seed)
        for index, rel in enumerate(template.relations):
            picks = rng.integers(0, gamma_prime.domain_size, size=(args.samples, rel.arity))
            hits = sum(gamma_prime.membership(index, [int(e) for e in row]) for row in picks)
            report.add(relation=f"{rel.name}'", samples=args.samples, members=int(hits))
    else:
        console.say(f"⚠️ Γ′ of {template.name} has a symbolic domain; only pair membership is available")
        report.add(template=template.name, domain="symbolic")
    embedding = constant_pair_embedding(template, gamma_prime)
    if not embedding.is_valid():
        report.violation("constant pairs do not embed the template into Γ′", template=template.name)
    if args.embedding:
        Path(args.embedding).write_text(serialize_map(embedding.homomorphism()), encoding="utf-8")
        console.say(f"✓ Constant-pair embedding written to {args.embedding}")
    if args.input:
        structure = load_structure(args.input)
        homtog = check_homtoG(structure, template, gamma_prime)
        report.add(input=structure.name, admits_siggers_pair=homtog.verdict, agree=homtog.agree,
                   lazy_search_decided=homtog.lazy_decided)
        if not homtog.agree:
            report.violation("Γ_R indicator and Γ′ search disagree", input=structure.name)
    return report


def cmd_gamma_b(args, config: RunConfig, console: Console) -> Report:
    template = load_structure(args.template)
    algebras = load_algebra_set(args.algebras)
    gamma_b = build_gamma_B(template, algebras)
    report = Report("gamma-b", config.echo())
    sizes = {rel.name: (len(rel) if not rel.is_lazy else "lazy") for rel in gamma_b.relations}
    report.add(template=template.name, algebras=len(algebras), extending=is_extending(algebras), relations=sizes)
    if is_extending(algebras):
        report.add(embedding="a -> a^σ", map=list(extending_embedding(template, algebras, gamma_b).mapping))
    else:
        console.say("⚠️ 𝔅 is not extending: no embedding Γ -> Γ^𝔅")
    return report


def cmd_reduce(args, config: RunConfig, console: Console) -> Report:
    template = load_structure(args.template)
    algebras = load_algebra_set(args.algebras)
    structure = load_structure(args.input)
    console.say(f"🚀 Reducing {structure.name} through Γ^𝔅 ({len(algebras)} algebras)...")
    result = reduction_pipeline(template, algebras, structure)
    report = Report("reduce", config.echo())
    record = {"input": structure.name, "member": result.member, "step": result.step,
              "tractability": result.tractability.label}
    if result.assignment is not None:
        record["map"] = list(result.assignment)
    report.add(**record)
    if args.certificates:
        Path(args.certificates).write_text("\n".join(result.certificates) + "\n", encoding="utf-8")
        console.say(f"✓ Certificates written to {args.certificates}")
    return report


def cmd_conservative(args, config: RunConfig, console: Console) -> Report:
    template = load_valued_template(args.template)
    report = Report("conservative", config.echo())
    if args.find_multimorphisms:
        element = find_kz_multimorphisms(template)
        if element is None:
            report.add(template=template.name, certificate="no STP/MJN certificate")
        else:
            report.add(template=template.name, certificate=element.describe())
    if args.gamma_prime_c or args.check_bipartite:
        gamma_prime_c = build_gamma_prime_c(template)
        report.add(template=template.name, elements=gamma_prime_c.domain_size)
        if args.check_bipartite:
            structure = load_structure(args.check_bipartite)
            verdict = bipartite_example_check(structure, gamma_prime_c)
            report.add(input=structure.name, maps_to_gamma_prime_c=verdict.maps_to_gamma_prime_c,
                       bipartite=verdict.bipartite, agree=verdict.agree)
            if not verdict.agree:
                report.violation("Γ′_c verdict differs from bipartiteness", input=structure.name)
    return report


def cmd_audit(args, config: RunConfig, console: Console) -> Report:
    auditor = TheoremAuditor(config.seed, args.cases)
    console.say(f"🚀 Running audits with seed {config.seed}...")
    records = auditor.run(args.only, include_slow=not args.skip_slow)
    if args.csv:
        save_audit_csv(records, args.csv)
        console.say(f"✓ Audit rows saved to {args.csv}")
    return audit_report(records, config.echo())


def _graph_input(name: str, graph: RelationalStructure) -> RelationalStructure:
    return RelationalStructure(name, graph.domain_size,
                               (graph.relations[0], Relation("reward", 1, ()), Relation("penalty", 1, ())))


def cmd_examples(args, config: RunConfig, console: Console) -> Report:
    report = Report("examples", config.echo())
    console.say("📊 Binary betweenness fixtures...")
    fixtures = [
        betweenness_input(4, [0], [3], [(0, 1, 3), (1, 2, 3)], "btw-solvable"),
        betweenness_input(3, [0], [0], [(0, 1, 2)], "btw-clash"),
        betweenness_input(3, [0, 2], [1], [(0, 1, 2)], "btw-unsolvable"),
    ]
    for structure in fixtures:
        g = find_homomorphism(structure, btw_alpha_template())
        h = betweenness_example(structure, g) if g is not None else None
        direct = brute_force_homomorphism(structure, btw_template()) is not None
        agree = (h is not None) == direct
        report.add(fixture=structure.name, solvable=direct, agree=agree, **({"map": list(h.mapping)} if h else {}))
        if not agree:
            report.violation("betweenness rounding disagrees with exhaustive search", fixture=structure.name)
    console.say("📊 Bipartite fixtures against Γ′_c (this builds Γ′_c once)...")
    gamma_prime_c = build_gamma_prime_c(independent_set_template())
    for graph in (cycle(4), cycle(3), cycle(5)):
        verdict = bipartite_example_check(_graph_input(graph.name, graph), gamma_prime_c)
        report.add(fixture=graph.name, bipartite=verdict.bipartite, agree=verdict.agree)
        if not verdict.agree:
            report.violation("Γ′_c verdict differs from bipartiteness", fixture=graph.name)
    return report


COMMANDS = {
    "solve": cmd_solve,
    "lift": cmd_lift,
    "gamma-prime": cmd_gamma_prime,
    "gamma-b": cmd_gamma_b,
    "reduce": cmd_reduce,
    "conservative": cmd_conservative,
    "audit": cmd_audit,
    "examples": cmd_examples,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="csplift", description="Lifted constraint languages workbench")
    parser.add_argument('--max-nodes', type=int, default=None,
                        help='Search node cap (default: CSPLIFT_MAX_NODES or 5000000)')
    parser.add_argument('--max-domain', type=int, default=None,
                        help='Power and product domain cap (default: CSPLIFT_MAX_DOMAIN or 1000000)')
    parser.add_argument('--seed', type=int, default=None, help='Seed for randomized work (default: 0)')
    parser.add_argument('--format', choices=['text', 'json-lines'], default='text', help='Report format')
    parser.add_argument('--log-level', default=None, help='Logging level (default: WARNING)')
    sub = parser.add_subparsers(dest='subcommand', required=True)

    p = sub.add_parser('solve', help='Find a homomorphism input -> template')
    p.add_argument('--input', required=True)
    p.add_argument('--template', required=True)
    p.add_argument('--output', help='Write the witness as map lines')

    p = sub.add_parser('lift', help='Write the lifted language Γ_R')
    p.add_argument('--template', required=True)
    p.add_argument('--input', required=True)
    p.add_argument('--output')

    p = sub.add_parser('gamma-prime', help='Γ′ statistics and the constant-pair embedding')
    p.add_argument('--template', required=True)
    p.add_argument('--samples', type=int, default=200)
    p.add_argument('--embedding', help='Write the constant-pair embedding as map lines')
    p.add_argument('--input', help='Also compare both sides of the Siggers-pair correspondence on this input')

    p = sub.add_parser('gamma-b', help='Relation sizes of Γ^𝔅 and the extending embedding')
    p.add_argument('--template', required=True)
    p.add_argument('--algebras', required=True)

    p = sub.add_parser('reduce', help='Decide CSP(Γ) through Γ^𝔅 and a multi-sorted instance')
    p.add_argument('--template', required=True)
    p.add_argument('--algebras', required=True)
    p.add_argument('--input', required=True)
    p.add_argument('--certificates')

    p = sub.add_parser('conservative', help='STP/MJN search and Γ′_c')
    p.add_argument('--template', required=True)
    p.add_argument('--find-multimorphisms', action='store_true')
    p.add_argument('--gamma-prime-c', action='store_true')
    p.add_argument('--check-bipartite', metavar='INPUT')

    p = sub.add_parser('audit', help='Run the seeded theorem audits')
    p.add_argument('--cases', type=int, default=None, help='Cases per randomized audit')
    p.add_argument('--only', nargs='+', help='Audit names to run')
    p.add_argument('--skip-slow', action='store_true')
    p.add_argument('--csv', help='Write one row per audit case')

    sub.add_parser('examples', help='Run the betweenness and bipartite fixtures')
    return parser


def _inputs(args) -> Dict[str, str]:
    keys = ('input', 'template', 'algebras', 'check_bipartite', 'csv', 'certificates', 'embedding')
    return {k: getattr(args, k) for k in keys if getattr(args, k, None)}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = get_settings().override(max_nodes=args.max_nodes, max_domain=args.max_domain, seed=args.seed,
                                           log_level=args.log_level.upper() if args.log_level else None)
    except ValueError as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_USAGE
    if settings.seed < 0:
        print("❌ seed must be non-negative", file=sys.stderr)
        return EXIT_USAGE
    set_settings(settings)
    logging.basicConfig(level=getattr(logging, settings.log_level, logging.WARNING),
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s', stream=sys.stderr)
    config = RunConfig(args.subcommand, _inputs(args), getattr(args, 'output', None), settings.seed,
                       settings.max_nodes, settings.max_domain, args.format)
    console = Console(args.format == "text")
    try:
        report = COMMANDS[args.subcommand](args, config, console)
    except TheoremViolation as e:
        report = Report(args.subcommand, config.echo())
        report.violation(e.statement, **e.payload)
    except (CspLiftError, OSError) as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_USAGE
    sys.stdout.buffer.write(emit_report(report, args.format))
    sys.stdout.flush()
    return EXIT_OK if report.ok else EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
