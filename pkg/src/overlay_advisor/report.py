"""Predicted-versus-actual reports: text tables, CSV plot data and figures."""

from __future__ import annotations

import csv
import io
import json
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .advisor import ModelBundle, Recommendation
from .capacity import Verdict
from .dataset import Metrics, Record, compute_metrics

REPORT_FORMAT_VERSION = 1
RESOURCE_LABELS = {
    "luts": "logic cells (LUTs)",
    "ffs": "registers (FFs)",
    "mem_bits": "distributed memory (bits)",
    "max_fanout": "fanout",
}


@dataclass(frozen=True)
class RunManifest:
    command: str
    inputs: dict[str, str] = field(default_factory=dict)
    seed: int | None = None
    overrides: dict[str, Any] = field(default_factory=dict)
    format_version: int = REPORT_FORMAT_VERSION

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def comment_line(self) -> str:
        return "# manifest: " + json.dumps(self.to_dict(), sort_keys=True) + "\n"


@dataclass(frozen=True)
class ComparisonRow:
    num_ste: int
    fanout_limit: int
    actual: float
    predicted: float

    @property
    def error(self) -> float:
        return self.predicted - self.actual

    @property
    def percent_error(self) -> float | None:
        if self.actual == 0:
            return None
        return 100.0 * self.error / abs(self.actual)


@dataclass(frozen=True)
class TargetComparison:
    target: str
    rows: tuple[ComparisonRow, ...]
    metrics: Metrics


def compare(bundle: ModelBundle, records: Sequence[Record]) -> list[TargetComparison]:
    """One comparison per modelled target, in the fixed target order."""
    X = np.array([r.features() for r in records], dtype=float).reshape(len(records), -1)
    out = []
    for target in bundle.targets:
        predicted = bundle.forests[target].predict_batch(X)
        actual = [r.target(target) for r in records]
        rows = tuple(
            ComparisonRow(r.num_ste, r.fanout_limit, float(a), float(p))
            for r, a, p in zip(records, actual, predicted)
        )
        out.append(TargetComparison(target, rows, compute_metrics(predicted.tolist(), actual)))
    return out


def _fmt_pct(v: float | None) -> str:
    return "n/a" if v is None else f"{v:+.2f}%"


def render_text(manifest: RunManifest, comparisons: Sequence[TargetComparison]) -> str:
    lines = [manifest.comment_line().rstrip("\n"), ""]
    for c in comparisons:
        lines.append(f"== {c.target}: predicted vs actual {RESOURCE_LABELS[c.target]} ==")
        lines.append(f"{'num_ste':>8} {'fanout':>6} {'actual':>14} {'predicted':>16} "
                     f"{'error':>14} {'error%':>9}")
        for r in c.rows:
            lines.append(f"{r.num_ste:>8} {r.fanout_limit:>6} {r.actual:>14.0f} "
                         f"{r.predicted:>16.2f} {r.error:>+14.2f} {_fmt_pct(r.percent_error):>9}")
        m = c.metrics
        mape = "n/a" if m.mape is None else f"{m.mape:.3f}%"
        lines.append(f"n={m.n}  MAE={m.mae:.3f}  RMSE={m.rmse:.3f}  MAPE={mape}"
                     + (f"  (MAPE excludes {m.mape_excluded} zero-actual rows)" if m.mape_excluded else ""))
        lines.append("")
    return "\n".join(lines)


def render_csv(manifest: RunManifest, comparisons: Sequence[TargetComparison]) -> str:
    buf = io.StringIO()
    buf.write(manifest.comment_line())
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["target", "num_ste", "fanout_limit", "actual", "predicted", "error", "percent_error"])
    for c in comparisons:
        for r in c.rows:
            pe = "" if r.percent_error is None else repr(r.percent_error)
            w.writerow([c.target, r.num_ste, r.fanout_limit, repr(r.actual), repr(r.predicted),
                        repr(r.error), pe])
    return buf.getvalue()


def render_figures(comparisons: Sequence[TargetComparison], outdir: str | Path) -> list[Path]:
    """One grouped-bar chart per target plus an all-target comparison chart."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []
    for c in comparisons:
        rows = sorted(c.rows, key=lambda r: (r.num_ste, r.fanout_limit))
        labels = [f"{r.num_ste}/{r.fanout_limit}" for r in rows]
        x = np.arange(len(rows))
        fig, ax = plt.subplots(figsize=(max(6.0, 0.35 * len(x)), 4.0))
        ax.bar(x - 0.2, [r.actual for r in rows], width=0.4, label="actual")
        ax.bar(x + 0.2, [r.predicted for r in rows], width=0.4, label="predicted")
        ax.set_xticks(x, labels, rotation=60, ha="right", fontsize=7)
        ax.set_xlabel("overlay (STE+ count / fanout limit)")
        ax.set_ylabel(RESOURCE_LABELS[c.target])
        ax.set_title(f"Predicted vs actual {RESOURCE_LABELS[c.target]}")
        ax.legend()
        fig.tight_layout()
        path = outdir / f"{c.target}.png"
        fig.savefig(path, dpi=120, metadata={"Software": None})
        plt.close(fig)
        paths.append(path)

    if comparisons:
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        names = [c.target for c in comparisons]
        actual = [sum(r.actual for r in c.rows) for c in comparisons]
        predicted = [sum(r.predicted for r in c.rows) for c in comparisons]
        ratio = [p / a if a else 0.0 for p, a in zip(predicted, actual)]
        x = np.arange(len(names))
        ax.bar(x - 0.2, [1.0] * len(names), width=0.4, label="actual")
        ax.bar(x + 0.2, ratio, width=0.4, label="predicted")
        ax.set_xticks(x, names)
        ax.set_ylabel("total relative to actual")
        ax.set_title("Predicted vs actual resources")
        ax.legend()
        fig.tight_layout()
        path = outdir / "comparison.png"
        fig.savefig(path, dpi=120, metadata={"Software": None})
        plt.close(fig)
        paths.append(path)
    return paths


def verdict_text(verdict: Verdict) -> str:
    lines = [f"fits: {'yes' if verdict.fits else 'no'} "
             f"(ceiling {verdict.ceiling_percent:g}%, limiting resource {verdict.limiting_resource})"]
    for name, u in verdict.usage.items():
        lines.append(f"  {name:<14} {u.required:>12} / {u.available:<12} {u.utilization_percent:8.2f}%")
    return "\n".join(lines)


def recommendation_to_dict(manifest: RunManifest, rec: Recommendation) -> dict[str, Any]:
    return {
        "manifest": manifest.to_dict(),
        "best": rec.best,
        "entries": [
            {
                "config": asdict(e.config),
                "predicted": asdict(e.predicted),
                "verdict": e.verdict.to_dict(),
                "extrapolation_warning": e.extrapolation_warning,
            }
            for e in rec.entries
        ],
    }


def recommendation_text(manifest: RunManifest, rec: Recommendation) -> str:
    lines = [manifest.comment_line().rstrip("\n"), ""]
    lines.append(f"{'num_ste':>8} {'fanout':>6} {'luts':>10} {'ffs':>10} {'mem_bits':>12} "
                 f"{'limiting':>14} {'util%':>8}  fits")
    for i, e in enumerate(rec.entries):
        v = e.verdict
        util = v.usage[v.limiting_resource].utilization_percent
        flags = ("yes" if v.fits else "no") + ("  [extrapolated]" if e.extrapolation_warning else "")
        if i == rec.best:
            flags += "  <= best"
        lines.append(f"{e.config.num_ste:>8} {e.config.fanout_limit:>6} {e.predicted.luts:>10} "
                     f"{e.predicted.ffs:>10} {e.predicted.mem_bits:>12} {v.limiting_resource:>14} "
                     f"{util:>8.2f}  {flags}")
    lines.append("")
    if rec.best is None:
        lines.append("no candidate configuration fits the device")
    else:
        b = rec.entries[rec.best].config
        lines.append(f"recommended: num_ste={b.num_ste} fanout_limit={b.fanout_limit} "
                     f"bus_width={b.bus_width}")
    if any(e.extrapolation_warning for e in rec.entries):
        lines.append("warning: some candidates lie outside the training range; tree ensembles "
                     "cannot predict beyond the largest training value, so those rows are "
                     "likely underestimates")
    return "\n".join(lines) + "\n"
