#!/usr/bin/env python3
"""
Plot theorem audit results.

This script reads the CSV written by `csplift audit --csv` and creates
plots of case outcomes and timings per audit, plus a text report.
"""

import pandas as pd
import matplotlib
matplotlib.use('Agg')  # Use non-interactive backend
import matplotlib.pyplot as plt
import seaborn as sns
import numpy as np
from datetime import datetime
import argparse
import sys

OUTCOMES = ['pass', 'skipped', 'violation']
OUTCOME_COLORS = {'pass': 'green', 'skipped': 'orange', 'violation': 'red'}


def load_audit_data(csv_file: str) -> pd.DataFrame:
    """Load audit rows from CSV file."""
    try:
        df = pd.read_csv(csv_file)
    except FileNotFoundError:
        print(f"Error: File {csv_file} not found.")
        print("Run 'python3 -m csplift audit --csv <file>' first to generate audit data.")
        sys.exit(1)
    except Exception as e:
        print(f"Error loading data: {e}")
        sys.exit(1)
    df['detail'] = df['detail'].fillna('')
    return df


def outcome_counts(df: pd.DataFrame) -> pd.DataFrame:
    counts = df.pivot_table(index='audit', columns='outcome', values='case', aggfunc='count', fill_value=0)
    return counts.reindex(columns=OUTCOMES, fill_value=0)


def plot_outcomes(df: pd.DataFrame, output_dir: str = "."):
    """Stacked case outcomes per audit."""
    counts = outcome_counts(df)

    fig, ax = plt.subplots(figsize=(14, 7))
    counts.plot(kind='barh', stacked=True, ax=ax, color=[OUTCOME_COLORS[o] for o in OUTCOMES])
    ax.set_xlabel('Cases')
    ax.set_ylabel('Audit')
    ax.set_title('Audit Outcomes', fontsize=14, fontweight='bold')
    ax.grid(True, alpha=0.3, axis='x')

    plt.tight_layout()
    plt.savefig(f'{output_dir}/audit_outcomes.png', dpi=300, bbox_inches='tight')
    plt.close()
    print(f"✓ Outcome plot saved to {output_dir}/audit_outcomes.png")


def plot_timings(df: pd.DataFrame, output_dir: str = "."):
    """Per-case timing distribution and cumulative time per audit."""
    fig, axes = plt.subplots(1, 2, figsize=(18, 7))
    fig.suptitle('Audit Timings', fontsize=16, fontweight='bold')

    order = df.groupby('audit')['elapsed_ms'].median().sort_values().index
    sns.boxplot(data=df, y='audit', x='elapsed_ms', order=order, ax=axes[0], color='lightblue')
    axes[0].set_xscale('log')
    axes[0].set_xlabel('Case Time (ms, log scale)')
    axes[0].set_ylabel('Audit')
    axes[0].set_title('Per-Case Time')
    axes[0].grid(True, alpha=0.3)

    totals = df.groupby('audit')['elapsed_ms'].sum().reindex(order) / 1000
    axes[1].barh(totals.index, totals.values, color='steelblue')
    axes[1].set_xlabel('Total Time (s)')
    axes[1].set_title('Total Time per Audit')
    axes[1].grid(True, alpha=0.3, axis='x')

    plt.tight_layout()
    plt.savefig(f'{output_dir}/audit_timings.png', dpi=300, bbox_inches='tight')
    plt.close()
    print(f"✓ Timing plot saved to {output_dir}/audit_timings.png")


def plot_outcome_heatmap(df: pd.DataFrame, output_dir: str = "."):
    """Share of each outcome per audit."""
    counts = outcome_counts(df)
    shares = counts.div(counts.sum(axis=1), axis=0) * 100

    plt.figure(figsize=(8, max(4, len(shares) * 0.5)))
    sns.heatmap(shares, annot=True, fmt='.0f', cmap='RdYlGn_r', vmin=0, vmax=100,
                cbar_kws={'label': 'Share of Cases (%)'})
    plt.title('Outcome Share per Audit', fontsize=14, fontweight='bold')
    plt.xlabel('Outcome')
    plt.ylabel('Audit')

    plt.tight_layout()
    plt.savefig(f'{output_dir}/audit_heatmap.png', dpi=300, bbox_inches='tight')
    plt.close()
    print(f"✓ Outcome heatmap saved to {output_dir}/audit_heatmap.png")


def generate_audit_report(df: pd.DataFrame, output_dir: str = "."):
    """Write a text summary of the audit run."""
    counts = outcome_counts(df)
    timing = df.groupby('audit')['elapsed_ms'].agg(['mean', 'max'])

    report = []
    report.append("THEOREM AUDIT REPORT")
    report.append("=" * 60)
    report.append(f"Generated: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")
    report.append(f"Total cases: {len(df)}")
    report.append(f"Audits: {df['audit'].nunique()}")
    report.append("")

    report.append("OUTCOMES PER AUDIT")
    report.append("-" * 40)
    report.append(f"{'Audit':<22} {'Pass':<6} {'Skipped':<8} {'Violation':<10} {'Mean ms':<10} {'Max ms':<10}")
    report.append("-" * 70)
    for audit, row in counts.iterrows():
        report.append(f"{audit:<22} {int(row['pass']):<6} {int(row['skipped']):<8} {int(row['violation']):<10} "
                      f"{timing.loc[audit, 'mean']:<10.2f} {timing.loc[audit, 'max']:<10.2f}")
    report.append("")

    skipped = df[df['outcome'] == 'skipped']
    if len(skipped) > 0:
        report.append("SKIP REASONS")
        report.append("-" * 40)
        for reason, count in skipped['detail'].value_counts().head(10).items():
            report.append(f"{count:>5}  {reason}")
        report.append("")

    violations = df[df['outcome'] == 'violation']
    report.append("VIOLATIONS")
    report.append("-" * 40)
    if len(violations) == 0:
        report.append("✓ none")
    else:
        for _, row in violations.iterrows():
            report.append(f"❌ {row['audit']} case {row['case']} (seed {row['seed']})")
            report.append(f"   {row['detail']}")
        report.append("")
        report.append("Replay a case with its seed to reproduce it.")

    slowest = df.nlargest(5, 'elapsed_ms')
    report.append("")
    report.append("SLOWEST CASES")
    report.append("-" * 40)
    for _, row in slowest.iterrows():
        report.append(f"{row['audit']:<22} case {int(row['case']):<5} {row['elapsed_ms']:.1f} ms")
    report.append(f"P95 case time: {np.percentile(df['elapsed_ms'], 95):.2f} ms")

    with open(f'{output_dir}/audit_report.txt', 'w') as f:
        f.write('\n'.join(report))

    print(f"✓ Audit report saved to {output_dir}/audit_report.txt")
    print('\n'.join(report))


def main():
    parser = argparse.ArgumentParser(description='Plot theorem audit results')
    parser.add_argument('csv_file', default='audit_results.csv', nargs='?',
                        help='CSV file written by csplift audit --csv')
    parser.add_argument('--output-dir', default='.',
                        help='Directory to save plots (default: current directory)')

    args = parser.parse_args()

    df = load_audit_data(args.csv_file)
    print(f"Loaded {len(df)} audit cases from {args.csv_file}")
    if len(df) == 0:
        print("No audit cases to plot.")
        return

    print("Generating outcome plot...")
    plot_outcomes(df, args.output_dir)

    print("Generating timing plots...")
    plot_timings(df, args.output_dir)

    print("Generating outcome heatmap...")
    plot_outcome_heatmap(df, args.output_dir)

    print("Generating audit report...")
    generate_audit_report(df, args.output_dir)

    print(f"\nAll audit plots and reports saved to {args.output_dir}/")


if __name__ == "__main__":
    main()
