#!/usr/bin/env python3
"""
Seeded audits, their CSV rows and the report formats.
"""

import json

import pytest

from csplift.audit import AuditRecord, TheoremAuditor, records_as_dicts, run_audits
from csplift.errors import CspLiftError
from csplift.report import Report, audit_report, emit_report, save_audit_csv, strip_timings, summarise_audit


def test_case_seeds_are_reproducible():
    first = TheoremAuditor(seed=7, cases=5).case_seeds("homomorphism-oracle")
    again = TheoremAuditor(seed=7, cases=5).case_seeds("homomorphism-oracle")
    assert first == again
    assert len(first) == 5
    assert first != TheoremAuditor(seed=8, cases=5).case_seeds("homomorphism-oracle")
    assert first != TheoremAuditor(seed=7, cases=5).case_seeds("betweenness")


def test_case_override_leaves_single_case_audits_alone():
    auditor = TheoremAuditor(seed=0, cases=3)
    assert auditor.case_count("transport") == 3
    assert auditor.case_count("oracle-sanity") == 1


def test_oracle_sanity_passes():
    (record,) = run_audits(names=["oracle-sanity"])
    assert record.outcome == "pass"
    assert not record.violation


def test_randomized_audits_find_no_violations():
    records = run_audits(seed=3, cases=3, names=["homomorphism-oracle", "betweenness"])
    assert len(records) == 6
    assert all(r.outcome in ("pass", "skipped") for r in records)


def test_replay_reproduces_a_case():
    auditor = TheoremAuditor(seed=1, cases=2)
    record = auditor.run(["homomorphism-oracle"])[1]
    replayed = auditor.replay("homomorphism-oracle", record.case, record.seed)
    assert (replayed.outcome, replayed.detail) == (record.outcome, record.detail)


def test_unknown_audit_name():
    with pytest.raises(CspLiftError, match="unknown audit"):
        run_audits(names=["nonsense"])


def _records():
    return [
        AuditRecord("transport", 0, 11, "pass", 1.5, ""),
        AuditRecord("transport", 1, 12, "skipped", 2.5, "not admitted"),
        AuditRecord("reduction", 0, 13, "violation", 4.0, "{}"),
    ]


def test_summary_counts_outcomes():
    summary = summarise_audit(_records()).set_index("audit")
    assert summary.loc["transport", "cases"] == 2
    assert summary.loc["transport", "pass"] == 1
    assert summary.loc["transport", "skipped"] == 1
    assert summary.loc["reduction", "violation"] == 1
    assert summary.loc["transport", "mean_ms"] == 2.0
    assert summary.loc["reduction", "max_ms"] == 4.0


def test_empty_summary_keeps_its_columns():
    assert list(summarise_audit([]).columns) == ['audit', 'cases', 'pass', 'skipped', 'violation', 'mean_ms',
                                                 'max_ms']


def test_csv_rows_feed_the_summary(tmp_path):
    path = tmp_path / "audit.csv"
    save_audit_csv(_records(), path)
    assert path.read_text().splitlines()[0] == "audit,case,seed,outcome,elapsed_ms,detail"
    summary = summarise_audit(path).set_index("audit")
    assert summary.loc["transport", "cases"] == 2


def test_audit_report_lists_violations():
    report = audit_report(_records(), {"seed": 0})
    assert not report.ok
    assert report.violations[0]["statement"] == "reduction case 0"
    assert report.violations[0]["case_seed"] == 13


def test_records_as_dicts():
    (row,) = list(records_as_dicts(_records()[:1]))
    assert row == {"audit": "transport", "case": 0, "seed": 11, "outcome": "pass", "elapsed_ms": 1.5, "detail": ""}


def test_json_lines_report():
    report = Report("solve", {"seed": 0})
    report.add(input="c3", exists=False)
    lines = [json.loads(line) for line in emit_report(report, "json-lines").decode().splitlines()]
    assert lines[0] == {"type": "config", "subcommand": "solve", "config": {"seed": 0}}
    assert lines[1] == {"type": "result", "input": "c3", "exists": False}
    assert len(lines) == 2


def test_text_report():
    report = Report("solve", {"seed": 0})
    report.add(map=[1, 0])
    text = emit_report(report).decode()
    assert "  map 0 1\n  map 1 0" in text
    assert text.rstrip().endswith("✓ no theorem violations")
    report.violation("something broke", input="x")
    assert "❌ 1 THEOREM VIOLATION(S)" in emit_report(report).decode()


def test_unknown_report_format():
    with pytest.raises(ValueError):
        emit_report(Report("solve", {}), "yaml")


def test_strip_timings():
    report = audit_report(_records()[:1], {"seed": 0})
    stripped = strip_timings(emit_report(report, "json-lines")).decode()
    assert "mean_ms" not in stripped
    assert "max_ms" not in stripped
    assert '"cases": 1' in stripped
