#!/usr/bin/env python3
"""
End-to-end runs of the csplift command line.
"""

import json

import pytest

from csplift.algebras import AlgebraSignature, tractable_boolean_algebras
from csplift.cli import main
from csplift.formats import parse_map, parse_text, serialize_algebra_set, serialize_structure
from csplift.report import strip_timings
from csplift.solver import is_homomorphism
from csplift.structures import Homomorphism
from csplift.templates import betweenness_input, btw_template, complete_graph, cycle


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def results(out):
    return [line for line in map(json.loads, out.splitlines()) if line["type"] == "result"]


def test_solve_without_a_solution(tmp_path, capsys):
    source = write(tmp_path, "c3.txt", serialize_structure(cycle(3)))
    target = write(tmp_path, "k2.txt", serialize_structure(complete_graph(2)))
    assert main(["--format", "json-lines", "solve", "--input", source, "--template", target]) == 0
    (record,) = results(capsys.readouterr().out)
    assert record["exists"] is False
    assert "map" not in record


def test_solve_writes_the_witness(tmp_path, capsys):
    source = write(tmp_path, "c4.txt", serialize_structure(cycle(4)))
    target = write(tmp_path, "k2.txt", serialize_structure(complete_graph(2)))
    witness = tmp_path / "witness.txt"
    assert main(["solve", "--input", source, "--template", target, "--output", str(witness)]) == 0
    out = capsys.readouterr().out
    assert "✓ no theorem violations" in out
    mapping = parse_map(witness.read_text(encoding="utf-8"))
    assert is_homomorphism(Homomorphism(cycle(4), complete_graph(2), mapping))


def test_parse_errors_exit_with_usage_code(tmp_path, capsys):
    broken = write(tmp_path, "broken.txt", "structure s\ndomain 2\nrelation e 2\n0 5\nend\n")
    target = write(tmp_path, "k2.txt", serialize_structure(complete_graph(2)))
    assert main(["solve", "--input", broken, "--template", target]) == 2
    err = capsys.readouterr().err
    assert err.startswith("❌")
    assert "broken.txt:4:" in err


def test_missing_file_exits_with_usage_code(tmp_path, capsys):
    assert main(["solve", "--input", str(tmp_path / "nope.txt"), "--template", str(tmp_path / "nope.txt")]) == 2


def test_bad_limits_are_rejected(capsys):
    assert main(["--max-nodes", "0", "audit", "--only", "oracle-sanity"]) == 2
    assert main(["--seed", "-1", "audit", "--only", "oracle-sanity"]) == 2


def test_lift_writes_the_lifted_language(tmp_path, capsys):
    template = write(tmp_path, "btw.txt", serialize_structure(btw_template()))
    structure = write(tmp_path, "r.txt", serialize_structure(betweenness_input(3, [0], [2], [(0, 1, 2)], "r")))
    output = tmp_path / "lifted.txt"
    assert main(["--format", "json-lines", "lift", "--template", template, "--input", structure,
                 "--output", str(output)]) == 0
    (record,) = results(capsys.readouterr().out)
    assert record["domain"] == 6
    assert record["relations"] == 6
    (lifted,) = parse_text(output.read_text(encoding="utf-8"))
    assert lifted.domain_size == 6


def test_reduce_through_gamma_b(tmp_path, capsys):
    template = write(tmp_path, "btw.txt", serialize_structure(btw_template()))
    algebras = write(tmp_path, "comoblom.txt", serialize_algebra_set(tractable_boolean_algebras(AlgebraSignature((2,)))))
    structure = write(tmp_path, "r.txt",
                      serialize_structure(betweenness_input(4, [0], [3], [(0, 1, 3), (1, 2, 3)], "r")))
    certificates = tmp_path / "certificates.txt"
    assert main(["--format", "json-lines", "reduce", "--template", template, "--algebras", algebras,
                 "--input", structure, "--certificates", str(certificates)]) == 0
    (record,) = results(capsys.readouterr().out)
    assert record["member"] is True
    assert record["tractability"] == "tractable"
    assert certificates.read_text(encoding="utf-8").startswith("tractability: tractable")


def test_gamma_b_reports_the_embedding(tmp_path, capsys):
    template = write(tmp_path, "btw.txt", serialize_structure(btw_template()))
    algebras = write(tmp_path, "comoblom.txt", serialize_algebra_set(tractable_boolean_algebras(AlgebraSignature((2,)))))
    assert main(["--format", "json-lines", "gamma-b", "--template", template, "--algebras", algebras]) == 0
    sizes, embedding = results(capsys.readouterr().out)
    assert sizes["algebras"] == 12
    assert sizes["extending"] is True
    assert len(embedding["map"]) == 2


def test_audit_subcommand(tmp_path, capsys):
    csv_path = tmp_path / "audit.csv"
    assert main(["--format", "json-lines", "audit", "--only", "oracle-sanity", "--csv", str(csv_path)]) == 0
    (record,) = results(capsys.readouterr().out)
    assert record["audit"] == "oracle-sanity"
    assert record["pass"] == 1
    assert csv_path.read_text().count("\n") == 2


def test_unknown_audit_exits_with_usage_code(capsys):
    assert main(["audit", "--only", "nonsense"]) == 2


def test_json_lines_are_deterministic_for_a_seed(capsys):
    argv = ["--seed", "5", "--format", "json-lines", "audit", "--only", "homomorphism-oracle", "--cases", "3"]
    assert main(argv) == 0
    first = capsys.readouterr().out.encode("utf-8")
    assert main(argv) == 0
    second = capsys.readouterr().out.encode("utf-8")
    assert strip_timings(first) == strip_timings(second)


def test_subcommand_is_required():
    with pytest.raises(SystemExit):
        main([])
