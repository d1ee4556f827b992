"""Reports for every subcommand: json-lines for machines, a text summary for people."""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Union

import pandas as pd

from .audit import AuditRecord

AUDIT_FIELDS = ['audit', 'case', 'seed', 'outcome', 'elapsed_ms', 'detail']
TIMING_KEYS = ('elapsed_ms', 'mean_ms', 'max_ms')


@dataclass
class Report:
    subcommand: str
    config: Dict[str, Any]
    records: List[Dict[str, Any]] = field(default_factory=list)
    violations: List[Dict[str, Any]] = field(default_factory=list)

    def add(self, **record) -> None:
        self.records.append(record)

    def violation(self, statement: str, **payload) -> None:
        self.violations.append({"statement": statement, "seed": self.config.get("seed"), **payload})

    @property
    def ok(self) -> bool:
        return not self.violations


def _json_line(kind: str, body: Dict[str, Any]) -> str:
    return json.dumps({"type": kind, **body}, sort_keys=True, ensure_ascii=False, default=str)


def _text_value(key: str, value: Any) -> List[str]:
    if key == "map" and isinstance(value, (list, tuple)):
        return [f"  map {src} {dst}" for src, dst in enumerate(value)]
    if isinstance(value, float):
        return [f"  {key}: {value:.2f}"]
    return [f"  {key}: {value}"]


def emit_report(report: Report, fmt: str = "text") -> bytes:
    """json-lines: config line, one line per record, one per violation. text: summary."""
    if fmt == "json-lines":
        lines = [_json_line("config", {"subcommand": report.subcommand, "config": report.config})]
        lines += [_json_line("result", record) for record in report.records]
        lines += [_json_line("violation", v) for v in report.violations]
        return ("\n".join(lines) + "\n").encode("utf-8")
    if fmt != "text":
        raise ValueError(f"unknown report format {fmt!r}")
    lines = ["=" * 60, f"csplift {report.subcommand}", "=" * 60]
    lines += [f"{key}: {value}" for key, value in sorted(report.config.items())]
    for index, record in enumerate(report.records, start=1):
        lines.append(f"\n📊 Result {index}")
        for key, value in record.items():
            lines += _text_value(key, value)
    if report.violations:
        lines.append(f"\n❌ {len(report.violations)} THEOREM VIOLATION(S)")
        for v in report.violations:
            lines.append(f"  {json.dumps(v, sort_keys=True, default=str)}")
    else:
        lines.append("\n✓ no theorem violations")
    return ("\n".join(lines) + "\n").encode("utf-8")


def strip_timings(payload: bytes) -> bytes:
    """json-lines output with timing fields removed, for determinism comparisons."""
    out = []
    for line in payload.decode("utf-8").splitlines():
        obj = json.loads(line)
        for key in TIMING_KEYS:
            obj.pop(key, None)
        out.append(json.dumps(obj, sort_keys=True, ensure_ascii=False))
    return ("\n".join(out) + "\n").encode("utf-8")


def save_audit_csv(records: Sequence[AuditRecord], filename: Union[str, Path]) -> None:
    with open(filename, 'w', newline='') as csvfile:
        writer = csv.DictWriter(csvfile, fieldnames=AUDIT_FIELDS)
        writer.writeheader()
        for record in records:
            writer.writerow({
                'audit': record.audit,
                'case': record.case,
                'seed': record.seed,
                'outcome': record.outcome,
                'elapsed_ms': record.elapsed_ms,
                'detail': record.detail,
            })


def summarise_audit(source: Union[str, Path, Iterable[AuditRecord], pd.DataFrame]) -> pd.DataFrame:
    """Per-audit case counts by outcome and timing statistics."""
    if isinstance(source, pd.DataFrame):
        df = source
    elif isinstance(source, (str, Path)):
        df = pd.read_csv(source)
    else:
        df = pd.DataFrame([vars(r) for r in source], columns=AUDIT_FIELDS)
    if df.empty:
        return pd.DataFrame(columns=['audit', 'cases', 'pass', 'skipped', 'violation', 'mean_ms', 'max_ms'])
    counts = df.pivot_table(index='audit', columns='outcome', values='case', aggfunc='count', fill_value=0)
    for outcome in ('pass', 'skipped', 'violation'):
        if outcome not in counts.columns:
            counts[outcome] = 0
    timing = df.groupby('audit')['elapsed_ms'].agg(['count', 'mean', 'max'])
    summary = pd.DataFrame({
        'cases': timing['count'],
        'pass': counts['pass'],
        'skipped': counts['skipped'],
        'violation': counts['violation'],
        'mean_ms': timing['mean'].round(2),
        'max_ms': timing['max'].round(2),
    }).rename_axis('audit').reset_index()
    return summary.astype({'cases': int, 'pass': int, 'skipped': int, 'violation': int})


def audit_report(records: Sequence[AuditRecord], config: Dict[str, Any]) -> Report:
    report = Report("audit", config)
    summary = summarise_audit(records)
    for row in summary.to_dict(orient="records"):
        report.add(**row)
    for record in records:
        if record.violation:
            report.violation(f"{record.audit} case {record.case}", case_seed=record.seed, detail=record.detail)
    return report
