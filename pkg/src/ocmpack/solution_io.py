"""Solution files: packed bins of every island plus the context needed to verify them.

Every derived number (RAM count, efficiency) is recomputed when the file is
written and checked when it is read, so a file can never carry stale figures.
Serialization is canonical: load followed by dump reproduces the file byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from .model import ClockPlan, RamSpec, WeightBuffer, efficiency
from .packer.slices import Slice
from .packer.solution import Bin, PackingSolution, Placement
from .streamer import build_streamer, emit_schedule
from .workload import SchemaError

FORMAT = "ocmpack-solution/1"


@dataclass
class SolutionSet:
    """All island solutions of one workload packing."""

    workload: str
    engine: str
    h_b: int
    seed: int
    clock: ClockPlan
    ram: RamSpec
    buffers: list[WeightBuffer]
    islands: list[PackingSolution]
    schedules: bool = False
    adaptive: bool = True

    @property
    def n_ram(self) -> int:
        return sum(s.n_ram for s in self.islands)

    @property
    def total_bits(self) -> int:
        return sum(s.total_bits for s in self.islands)

    @property
    def efficiency(self) -> Fraction:
        return efficiency(self.total_bits, self.n_ram, self.ram)


def _frac(x: Fraction) -> str:
    return str(Fraction(x))


def _bin_doc(b: Bin) -> dict:
    return {
        "ram_index": b.ram_index,
        "aspect": list(b.aspect),
        "placements": [
            {
                "buffer": p.slice.buffer, "part": p.slice.part, "index": p.slice.index,
                "depth_words": p.slice.depth_words, "width_bits": p.slice.width_bits,
                "row0": p.slice.row0, "bit0": p.slice.bit0,
                "row": p.row, "bit": p.bit, "port": p.port,
            }
            for p in b.placements
        ],
    }


def to_doc(sol: SolutionSet) -> dict:
    doc = {
        "format": FORMAT,
        "workload": sol.workload,
        "engine": sol.engine,
        "h_b": sol.h_b,
        "seed": sol.seed,
        "clock": {"f_compute_mhz": _frac(sol.clock.f_compute_mhz), "f_memory_mhz": _frac(sol.clock.f_memory_mhz)},
        "ram": {
            "capacity_bits": sol.ram.capacity_bits,
            "aspects": [list(a) for a in sol.ram.aspect_ratios],
            "ports": sol.ram.num_ports,
            "f_max_mhz": _frac(sol.ram.f_max_mhz),
        },
        "n_ram": sol.n_ram,
        "total_bits": sol.total_bits,
        "efficiency": _frac(sol.efficiency),
        "buffers": [
            {"layer": b.layer, "depth_words": b.depth_words, "width_bits": b.width_bits,
             "island": b.island, "packable": b.packable}
            for b in sol.buffers
        ],
        "islands": [],
    }
    for s in sol.islands:
        entry = {
            "island": s.island,
            "n_ram": s.n_ram,
            "total_bits": s.total_bits,
            "efficiency": _frac(s.efficiency),
            "excluded": list(s.excluded),
            "bins": [_bin_doc(b) for b in s.bins],
        }
        if sol.schedules:
            entry["schedules"] = [_schedule_doc(b, sol) for b in s.bins]
        doc["islands"].append(entry)
    if sol.schedules:
        doc["adaptive"] = sol.adaptive
    return doc


def _schedule_doc(b: Bin, sol: SolutionSet) -> dict:
    cfg = build_streamer(b, sol.clock, sol.adaptive, sol.ram.num_ports)
    sched = emit_schedule(cfg)
    return {
        "ram_index": b.ram_index,
        "feasible": cfg.feasible,
        "period_mem_cycles": sched.period_mem_cycles,
        "grants": [list(g) for g in sched.grants],
    }


def dumps(sol: SolutionSet) -> str:
    return json.dumps(to_doc(sol), indent=1) + "\n"


def _need(d, key, path):
    if not isinstance(d, dict) or key not in d:
        raise SchemaError(f"{path}.{key}" if path else key, "missing field")
    return d[key]


def from_doc(doc: dict) -> SolutionSet:
    if _need(doc, "format", "") != FORMAT:
        raise SchemaError("format", f"expected {FORMAT!r}")
    try:
        c = _need(doc, "clock", "")
        clock = ClockPlan(Fraction(_need(c, "f_compute_mhz", "clock")), Fraction(_need(c, "f_memory_mhz", "clock")))
        r = _need(doc, "ram", "")
        ram = RamSpec(
            _need(r, "capacity_bits", "ram"),
            tuple(tuple(a) for a in _need(r, "aspects", "ram")),
            _need(r, "ports", "ram"),
            Fraction(_need(r, "f_max_mhz", "ram")),
        )
        buffers = [
            WeightBuffer(_need(b, "layer", f"buffers[{i}]"), _need(b, "depth_words", f"buffers[{i}]"),
                         _need(b, "width_bits", f"buffers[{i}]"), _need(b, "island", f"buffers[{i}]"),
                         _need(b, "packable", f"buffers[{i}]"))
            for i, b in enumerate(_need(doc, "buffers", ""))
        ]
    except (TypeError, ValueError) as e:
        if isinstance(e, SchemaError):
            raise
        raise SchemaError("", f"malformed solution header: {e}") from None
    engine, h_b, seed = _need(doc, "engine", ""), _need(doc, "h_b", ""), _need(doc, "seed", "")
    islands = []
    for i, entry in enumerate(_need(doc, "islands", "")):
        p = f"islands[{i}]"
        bins = []
        for j, bd in enumerate(_need(entry, "bins", p)):
            bp = f"{p}.bins[{j}]"
            try:
                placements = tuple(
                    Placement(
                        Slice(q["buffer"], q["part"], q["index"], q["depth_words"], q["width_bits"], q["row0"], q["bit0"]),
                        q["row"], q["bit"], q["port"],
                    )
                    for q in _need(bd, "placements", bp)
                )
                bins.append(Bin(_need(bd, "ram_index", bp), tuple(_need(bd, "aspect", bp)), placements))
            except (KeyError, TypeError, ValueError) as e:
                raise SchemaError(bp, f"malformed bin: {e}") from None
        sol = PackingSolution(bins, ram, _need(entry, "island", p), seed, engine, h_b, list(_need(entry, "excluded", p)))
        if (_need(entry, "n_ram", p), _need(entry, "efficiency", p)) != (sol.n_ram, _frac(sol.efficiency)):
            raise SchemaError(p, "stored RAM count or efficiency disagrees with the bins")
        islands.append(sol)
    out = SolutionSet(
        workload=_need(doc, "workload", ""), engine=engine, h_b=h_b, seed=seed, clock=clock, ram=ram,
        buffers=buffers, islands=islands, schedules=any("schedules" in e for e in doc["islands"]),
        adaptive=doc.get("adaptive", True),
    )
    if (doc.get("n_ram"), doc.get("efficiency")) != (out.n_ram, _frac(out.efficiency)):
        raise SchemaError("efficiency", "stored totals disagree with the bins")
    return out


def loads(text: str) -> SolutionSet:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError("", f"invalid JSON: {e}") from None
    if not isinstance(doc, dict):
        raise SchemaError("", "solution must be a JSON object")
    return from_doc(doc)


def check(sol: SolutionSet) -> list[str]:
    """Structural problems across all islands, including buffer coverage."""
    problems = []
    for s in sol.islands:
        mine = [b for b in sol.buffers if b.island == s.island]
        problems.extend(f"island {s.island}: {p}" for p in s.check(mine))
    covered = {s.island for s in sol.islands}
    for b in sol.buffers:
        if b.island not in covered:
            problems.append(f"buffer {b.layer} belongs to island {b.island} which has no solution")
    return problems

