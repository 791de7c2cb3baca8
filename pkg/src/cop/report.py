"""Report rendering: JSON reports gain a CSV twin and matplotlib figures."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .bench import BenchmarkReport


def _sibling(path: Path, suffix: str) -> Path:
    return path.with_name(path.stem + suffix)


def write_benchmark_report(report: BenchmarkReport, out_path: str | Path, figures: bool = True) -> list[Path]:
    """JSON report plus a per-example CSV and a summary figure."""
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    report.save(out_path)
    written = [out_path]

    csv_path = _sibling(out_path, ".csv")
    with open(csv_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(
            handle,
            fieldnames=["id", "predicted", "gold", "correct", "calls", "prompt_tokens", "total_tokens", "failed"],
        )
        writer.writeheader()
        for row in report.per_example:
            writer.writerow(row)
    written.append(csv_path)

    if figures:
        fig, (left, right) = plt.subplots(1, 2, figsize=(9, 3.5))
        left.bar(["accuracy"], [report.accuracy], color="#4c72b0")
        left.set_ylim(0, 1.05)
        left.set_title(f"{report.method} on {report.dataset}")
        left.bar_label(left.containers[0], fmt="%.3f")
        right.bar(
            ["calls", "prompt tok", "total tok"],
            [report.avg_calls, report.avg_prompt_tokens, report.avg_total_tokens],
            color=["#dd8452", "#55a868", "#c44e52"],
        )
        right.set_yscale("symlog")
        right.set_title("average cost per example")
        fig.tight_layout()
        figure_path = _sibling(out_path, "_summary.png")
        fig.savefig(figure_path, dpi=150)
        plt.close(fig)
        written.append(figure_path)
    return written


def write_perception_report(metrics: dict, out_path: str | Path, figures: bool = True) -> list[Path]:
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    payload = {k: v for k, v in metrics.items() if k != "per_example_tau"}
    out_path.write_text(json.dumps(payload, indent=2), encoding="utf-8")
    written = [out_path]

    taus = metrics.get("per_example_tau") or []
    csv_path = _sibling(out_path, ".csv")
    with open(csv_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["tau"])
        for value in taus:
            writer.writerow([value])
    written.append(csv_path)

    if figures and taus:
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.hist(taus, bins=20, range=(-1, 1), color="#4c72b0")
        removal = metrics.get("removal_rate")
        mean_tau = metrics.get("mean_tau")
        title = "reconstruction order vs reference"
        if removal is not None and mean_tau is not None:
            title += f"\nremoval={removal:.3f}  mean tau={mean_tau:.3f}"
        ax.set_title(title)
        ax.set_xlabel("Kendall tau")
        fig.tight_layout()
        figure_path = _sibling(out_path, "_tau.png")
        fig.savefig(figure_path, dpi=150)
        plt.close(fig)
        written.append(figure_path)
    return written


def write_flow_report(payload: dict, out_path: str | Path, figures: bool = True) -> list[Path]:
    """Flow metrics JSON plus per-group CSV and a grouped bar chart with CIs."""
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(payload, indent=2), encoding="utf-8")
    written = [out_path]

    groups = payload.get("groups") or {}
    if groups:
        csv_path = _sibling(out_path, ".csv")
        with open(csv_path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(["metric", "group", "mean", "std", "ci_low", "ci_high", "p_value", "n"])
            for metric, by_group in groups.items():
                for group, stats in by_group.items():
                    writer.writerow(
                        [metric, group, stats["mean"], stats["std"], stats["ci_low"],
                         stats["ci_high"], stats["p_value"], stats["n"]]
                    )
        written.append(csv_path)

    if figures and groups:
        metric_names = list(groups)
        fig, axes = plt.subplots(1, len(metric_names), figsize=(3.2 * len(metric_names), 3.4))
        if len(metric_names) == 1:
            axes = [axes]
        for ax, metric in zip(axes, metric_names):
            by_group = groups[metric]
            names = list(by_group)
            means = [by_group[g]["mean"] for g in names]
            errors = [
                (by_group[g]["mean"] - by_group[g]["ci_low"], by_group[g]["ci_high"] - by_group[g]["mean"])
                for g in names
            ]
            yerr = [[e[0] for e in errors], [e[1] for e in errors]]
            ax.bar(names, means, yerr=yerr, capsize=4, color=["#4c72b0", "#dd8452", "#55a868"][: len(names)])
            ax.set_title(metric)
            ax.tick_params(axis="x", rotation=20)
        fig.tight_layout()
        figure_path = _sibling(out_path, "_groups.png")
        fig.savefig(figure_path, dpi=150)
        plt.close(fig)
        written.append(figure_path)
    return written
