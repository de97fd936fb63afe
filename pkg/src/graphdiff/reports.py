"""Solver state and run reports, with JSON/CSV serialization."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field

import numpy as np

__all__ = ["SolverState", "SolveReport", "LocalReport", "report_to_json", "write_csv_report"]


@dataclass
class SolverState:
    """Estimate, incrementally maintained residual, and counters."""

    x: np.ndarray
    r: np.ndarray
    sweeps: int = 0
    ops: int = 0
    frontier_trace: list | None = None  # per-sweep S_t snapshots when recorded


@dataclass
class SolveReport:
    """Outcome of one solver run.

    total_ops follows the active-volume cost model: every update at node u is
    billed d_u arc touches, one full pass of a global method is billed
    vol(V) = 2m.
    """

    method: str
    problem: str
    converged: bool
    sweeps: int
    total_ops: int
    eps: float
    residual_l1_trace: list[float] = field(default_factory=list)
    wall_seconds: float = 0.0
    notes: dict = field(default_factory=dict)

    def to_dict(self, timing: bool = True) -> dict:
        d = asdict(self)
        if not timing:
            d.pop("wall_seconds")
        return d


@dataclass
class LocalReport(SolveReport):
    """Adds the local diffusion instrumentation.

    gamma_bar averages the per-sweep active residual fraction, vol_bar the
    per-sweep active volume; bound_checks carries the evaluated runtime-bound
    arms when filled in by the metrics layer.
    """

    gamma_log: list[float] = field(default_factory=list)
    vol_log: list[int] = field(default_factory=list)
    min_residual: float = 0.0
    support_size: int = 0  # |supp(r)| at exit, drives the log-bound constant
    guarantees_disabled: bool = False  # omega > 1 or signed residuals
    bound_checks: dict = field(default_factory=dict)

    @property
    def gamma_bar(self) -> float:
        return float(np.mean(self.gamma_log)) if self.gamma_log else 0.0

    @property
    def vol_bar(self) -> float:
        return float(np.mean(self.vol_log)) if self.vol_log else 0.0

    def to_dict(self, timing: bool = True) -> dict:
        d = super().to_dict(timing=timing)
        d["gamma_bar"] = self.gamma_bar
        d["vol_bar"] = self.vol_bar
        return d


def report_to_json(report: SolveReport, timing: bool = True) -> str:
    return json.dumps(report.to_dict(timing=timing), sort_keys=True)


def write_csv_report(reports: list[SolveReport], path, timing: bool = True) -> None:
    """Flat CSV with one row per report; list fields are JSON-encoded cells."""
    rows = [r.to_dict(timing=timing) for r in reports]
    cols = sorted({k for row in rows for k in row})
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=cols)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v
                             for k, v in row.items()})
