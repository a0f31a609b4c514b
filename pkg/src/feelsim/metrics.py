"""CSV and text writers for simulation traces."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Sequence

from .orchestrator import RoundRecord, RunComparison

METRICS_HEADER = (
    "round", "worker_id", "iota", "e_cmp_J", "e_up_J", "t_up_s",
    "f_cmp_hz", "p_up_w", "cum_energy_J", "test_acc", "test_loss",
)
SWEEP_HEADER = (
    "run", "threshold", "cum_energy_J", "final_test_acc", "final_test_loss",
    "mean_retained_per_round", "energy_reduction_pct", "acc_delta",
)
CURVES_HEADER = ("run", "threshold", "round", "energy_J", "cum_energy_J", "test_acc", "test_loss", "retained")


def fmt(x: float) -> str:
    """Nine significant digits; NaN becomes an empty cell."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return f"{x:.9g}"


def metrics_rows(trace: Sequence[RoundRecord]):
    """One row per participating worker plus one AGG row per round."""
    worker_cum: dict[int, float] = {}
    for rec in trace:
        for w in rec.workers:
            worker_cum[w.worker_id] = worker_cum.get(w.worker_id, 0.0) + w.energy
            yield (
                rec.round, w.worker_id, w.iota, fmt(w.e_cmp), fmt(w.e_up), fmt(w.t_up),
                fmt(w.f_cmp), fmt(w.p_up), fmt(worker_cum[w.worker_id]), "", "",
            )
        yield (
            rec.round, "AGG", sum(w.iota for w in rec.workers),
            fmt(sum(w.e_cmp for w in rec.workers)), fmt(sum(w.e_up for w in rec.workers)),
            "", "", "", fmt(rec.cumulative_energy), fmt(rec.test_accuracy), fmt(rec.test_loss),
        )


def _write(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_metrics_csv(trace: Sequence[RoundRecord], path) -> None:
    _write(Path(path), METRICS_HEADER, metrics_rows(trace))


def summary_text(trace: Sequence[RoundRecord]) -> str:
    last = trace[-1]
    return (
        f"rounds={len(trace)} final_test_acc={fmt(last.test_accuracy)} "
        f"final_test_loss={fmt(last.test_loss)} cum_energy_J={fmt(last.cumulative_energy)}"
    )


def mean_retained(trace: Sequence[RoundRecord]) -> float:
    return sum(r.retained for r in trace) / len(trace)


def sweep_row(name: str, threshold, trace: Sequence[RoundRecord], cmp: RunComparison):
    last = trace[-1]
    return (
        name, "" if threshold is None else fmt(threshold), fmt(last.cumulative_energy),
        fmt(last.test_accuracy), fmt(last.test_loss), fmt(mean_retained(trace)),
        fmt(cmp.energy_reduction_pct), fmt(cmp.accuracy_delta),
    )


def curve_rows(name: str, threshold, trace: Sequence[RoundRecord]):
    th = "" if threshold is None else fmt(threshold)
    for r in trace:
        yield (name, th, r.round, fmt(r.energy), fmt(r.cumulative_energy),
               fmt(r.test_accuracy), fmt(r.test_loss), r.retained)


def write_sweep(runs, out_dir) -> None:
    """``runs``: list of (name, threshold or None, trace, RunComparison)."""
    out_dir = Path(out_dir)
    _write(out_dir / "sweep.csv", SWEEP_HEADER, [sweep_row(n, t, tr, c) for n, t, tr, c in runs])
    _write(out_dir / "sweep_curves.csv", CURVES_HEADER,
           [row for n, t, tr, _ in runs for row in curve_rows(n, t, tr)])
