"""Comparison tables: RAM count, efficiency, throughput loss and verification per packing."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .model import baseline, delta_fps, efficiency
from .solution_io import SolutionSet
from .workload import WorkloadSpec

COLUMNS = ("workload", "engine", "h_b", "n_ram", "efficiency_pct", "delta_fps_pct", "verified")


@dataclass(frozen=True)
class ReportRow:
    workload: str
    engine: str
    h_b: Optional[int]
    n_ram: int
    efficiency: Fraction
    delta_fps: Optional[Fraction] = None
    verified: Optional[bool] = None

    def cells(self) -> list[str]:
        return [
            self.workload,
            self.engine,
            "" if self.h_b is None else str(self.h_b),
            str(self.n_ram),
            f"{float(self.efficiency) * 100:.1f}",
            "" if self.delta_fps is None else f"{float(self.delta_fps) * 100:.1f}",
            "" if self.verified is None else ("true" if self.verified else "false"),
        ]


def baseline_row(spec: WorkloadSpec) -> ReportRow:
    n, e = baseline(spec.buffers(), spec.ram)
    return ReportRow(spec.name, "direct", None, n, e)


def solution_rows(
    sol: SolutionSet,
    verified: Optional[bool] = None,
    dfps: Optional[Fraction] = None,
) -> list[ReportRow]:
    """One row per island when there are several, then the total row."""
    rows = []
    if len(sol.islands) > 1:
        for s in sol.islands:
            rows.append(ReportRow(f"{sol.workload}[{s.island}]", sol.engine, sol.h_b, s.n_ram,
                                  efficiency(s.total_bits, s.n_ram, sol.ram)))
    rows.append(ReportRow(sol.workload, sol.engine, sol.h_b, sol.n_ram, sol.efficiency, dfps, verified))
    return rows


def throughput_loss(f_c, f_m, f_base) -> Optional[Fraction]:
    if f_base is None:
        return None
    return delta_fps(f_c, f_m, f_base)


def render(rows: Sequence[ReportRow], fmt: str = "text") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in rows:
            w.writerow(r.cells())
        return buf.getvalue()
    if fmt == "json":
        out = []
        for r in rows:
            out.append({
                "workload": r.workload, "engine": r.engine, "h_b": r.h_b, "n_ram": r.n_ram,
                "efficiency": str(r.efficiency), "efficiency_pct": round(float(r.efficiency) * 100, 2),
                "delta_fps_pct": None if r.delta_fps is None else round(float(r.delta_fps) * 100, 2),
                "verified": r.verified,
            })
        return json.dumps(out, indent=1) + "\n"
    table = [list(COLUMNS)] + [r.cells() for r in rows]
    widths = [max(len(row[i]) for row in table) for i in range(len(COLUMNS))]
    lines = ["  ".join(c.ljust(w) if i < 2 else c.rjust(w) for i, (c, w) in enumerate(zip(row, widths))).rstrip()
             for row in table]
    return "\n".join(lines) + "\n"
