"""Readback streamers for packed RAMs: round-robin port multiplexing and odd/even splits.

A bin holding N_b read streams is read through its ports by a memory clock R_F
times faster than the compute clock. Each port walks its slot table round-robin,
one slot per memory cycle, so a slot receives R_F / len(table) reads per compute
cycle. With an odd N_b and a fractional R_F, one slice is split by address
parity and its halves are read from different ports, then merged back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Optional, Sequence

from .model import ClockPlan, as_fraction
from .packer.slices import EVEN, ODD, WHOLE, Slice, split_odd_even
from .packer.solution import PORT_NAMES, Bin, PackingError, PackingSolution, Placement, assign_ports


def stream_name(s: Slice) -> str:
    return s.buffer if s.part == WHOLE else f"{s.buffer}#{s.index}"


@dataclass(frozen=True)
class Slot:
    stream: str
    half: Optional[str]  # ODD, EVEN or None
    depth_words: int

    @property
    def demand(self) -> Fraction:
        # words per compute cycle the merged consumer pulls from this slot
        return Fraction(1, 2) if self.half else Fraction(1)

    @property
    def stride(self) -> int:
        return 2 if self.half else 1


@dataclass(frozen=True)
class MergePlan:
    odd: str
    even: str
    output: str
    depth_words: int  # parent rows, odd + even


@dataclass(frozen=True)
class StreamerConfig:
    bin: Bin
    ratio: Fraction
    slots: tuple[tuple[Slot, ...], ...]  # one round-robin table per port
    merge_plan: Optional[MergePlan]
    adaptive: bool
    feasible: bool = True
    shortfall: Fraction = Fraction(0)
    sustained: dict = field(default_factory=dict, compare=False)

    @property
    def streams(self) -> list[str]:
        seen = {}
        for table in self.slots:
            for slot in table:
                seen.setdefault(slot.stream, None)
        return list(seen)

    @property
    def height(self) -> int:
        return len(self.streams)

    @property
    def ports(self) -> str:
        return PORT_NAMES[: len(self.slots)]


class Grant(NamedTuple):
    mem_cycle: int
    port: str
    stream: str
    address_stride: int


@dataclass(frozen=True)
class ReadSchedule:
    period_mem_cycles: int
    grants: tuple[Grant, ...]


def needs_split(n_streams: int, ratio, num_ports: int = 2) -> bool:
    """Odd stream count, fractional ratio and too few whole slots per port."""
    ratio = as_fraction(ratio)
    return (
        num_ports == 2
        and n_streams % 2 == 1
        and ratio.denominator != 1
        and ratio < math.ceil(n_streams / 2)
    )


def split_bin(b: Bin, num_ports: int = 2) -> Bin:
    """Split the deepest whole slice of ``b`` into odd/even halves on different ports.

    The halves occupy the parent's rectangle: even rows first, odd rows below.
    """
    if b.is_split():
        return b
    cands = [p for p in b.placements if p.slice.depth_words >= 2]
    if not cands:
        raise PackingError(f"bin {b.ram_index}: no slice deep enough to split")
    victim = min(cands, key=lambda p: (-p.slice.depth_words, p.slice.label))
    odd, even = split_odd_even(victim.slice)
    placed = []
    for p in b.placements:
        if p is victim:
            placed.append((even, p.row, p.bit))
            placed.append((odd, p.row + even.depth_words, p.bit))
        else:
            placed.append((p.slice, p.row, p.bit))
    placed.sort(key=lambda t: (t[1], t[2], t[0].label))
    ports = assign_ports([s for s, _, _ in placed], num_ports)
    return Bin(b.ram_index, b.aspect, tuple(Placement(s, r, c, port) for (s, r, c), port in zip(placed, ports)))


def apply_splits(solution: PackingSolution, clock: ClockPlan) -> PackingSolution:
    """Materialize the odd/even splits a clock plan requires in every bin."""
    ports = solution.ram.num_ports
    bins = [split_bin(b, ports) if needs_split(b.height, clock.ratio, ports) else b for b in solution.bins]
    return PackingSolution(bins, solution.ram, solution.island, solution.seed, solution.engine, solution.h_b,
                           list(solution.excluded))


def _water_fill(demands: Sequence[Fraction], capacity: Fraction) -> list[Fraction]:
    # max-min fair share: what a work-conserving round-robin converges to
    out = [Fraction(0)] * len(demands)
    order = sorted(range(len(demands)), key=lambda i: demands[i])
    left, n = capacity, len(demands)
    for k, i in enumerate(order):
        share = left / (n - k)
        out[i] = min(demands[i], share)
        left -= out[i]
    return out


def _sustained(slots, ratio: Fraction, adaptive: bool) -> dict[str, Fraction]:
    per_slot = {}
    for table in slots:
        if not table:
            continue
        if adaptive:
            rates = _water_fill([s.demand for s in table], ratio)
        else:
            rates = [min(s.demand, ratio / len(table)) for s in table]
        for s, r in zip(table, rates):
            per_slot[(s.stream, s.half)] = r
    out: dict[str, Fraction] = {}
    for (stream, half), r in per_slot.items():
        if half is None:
            out[stream] = r
        else:
            # the merge alternates halves, so the slower half sets the pace
            out[stream] = min(out.get(stream, 2 * r), 2 * r)
    return out


def build_streamer(b: Bin, clock: ClockPlan, adaptive: bool = True, num_ports: int = 2) -> StreamerConfig:
    ratio = clock.ratio
    if ratio < 1:
        raise PackingError(f"R_F={ratio} is below 1")
    if not b.is_split() and needs_split(b.height, ratio, num_ports):
        if any(p.slice.depth_words >= 2 for p in b.placements):
            b = split_bin(b, num_ports)
    tables: list[list[Slot]] = [[] for _ in range(num_ports)]
    merge = None
    halves = {}
    for p in b.placements:
        s = p.slice
        port = PORT_NAMES.index(p.port)
        if port >= num_ports:
            raise PackingError(f"bin {b.ram_index}: port {p.port} beyond {num_ports} ports")
        half = s.part if s.part in (ODD, EVEN) else None
        tables[port].append(Slot(stream_name(s), half, s.depth_words))
        if half:
            halves[half] = s
    if halves:
        if len(halves) != 2:
            raise PackingError(f"bin {b.ram_index}: lone odd/even half")
        odd, even = halves[ODD], halves[EVEN]
        merge = MergePlan(odd.label, even.label, stream_name(odd), odd.depth_words + even.depth_words)
    sizes = [len(t) for t in tables]
    if max(sizes) - min(sizes) > 1:
        raise PackingError(f"bin {b.ram_index}: unbalanced slot tables {sizes}")
    slots = tuple(tuple(t) for t in tables)
    rates = _sustained(slots, ratio, adaptive)
    worst = min(rates.values(), default=Fraction(1))
    return StreamerConfig(
        bin=b, ratio=ratio, slots=slots, merge_plan=merge, adaptive=adaptive,
        feasible=worst >= 1, shortfall=max(Fraction(0), 1 - worst), sustained=rates,
    )


def nominal_rates(config: StreamerConfig) -> dict[str, Fraction]:
    """Words per compute cycle each stream is offered by the static round-robin."""
    out: dict[str, Fraction] = {}
    for table in config.slots:
        for slot in table:
            out[slot.stream] = out.get(slot.stream, Fraction(0)) + config.ratio / len(table)
    return out


def emit_schedule(config: StreamerConfig) -> ReadSchedule:
    sizes = [len(t) for t in config.slots if t]
    period = math.lcm(*sizes) if sizes else 1
    grants = []
    for cycle in range(period):
        for port, table in zip(config.ports, config.slots):
            if table:
                slot = table[cycle % len(table)]
                grants.append(Grant(cycle, port, slot.stream, slot.stride))
    return ReadSchedule(period, tuple(grants))
