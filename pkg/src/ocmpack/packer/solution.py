"""Packed RAM bins, packing solutions and their structural checks."""

from __future__ import annotations

from bisect import bisect_left
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from ..model import RamSpec, WeightBuffer, efficiency
from .placement import place
from .slices import EVEN, ODD, Slice

PORT_NAMES = "ABCDEFGH"


class PackingError(ValueError):
    pass


@dataclass(frozen=True)
class Placement:
    slice: Slice
    row: int
    bit: int
    port: str = "A"


@dataclass(frozen=True)
class Bin:
    ram_index: int
    aspect: tuple[int, int]
    placements: tuple[Placement, ...]

    @property
    def slices(self) -> list[Slice]:
        return [p.slice for p in self.placements]

    @property
    def streams(self) -> list[tuple[str, int]]:
        seen = {}
        for p in self.placements:
            seen.setdefault(p.slice.stream, None)
        return list(seen)

    @property
    def height(self) -> int:
        """Number of independent read streams (odd/even halves count once)."""
        return len(self.streams)

    @property
    def parents(self) -> set[str]:
        return {p.slice.buffer for p in self.placements}

    @property
    def bits(self) -> int:
        return sum(p.slice.bits for p in self.placements)

    def is_split(self) -> bool:
        return any(p.slice.part in (ODD, EVEN) for p in self.placements)


def check_bin(b: Bin, h_b: Optional[int] = None, num_ports: int = 2) -> list[str]:
    """Return a list of invariant violations (empty when the bin is valid)."""
    problems = []
    W, D = b.aspect
    rects = []
    for p in b.placements:
        w, d = p.slice.width_bits, p.slice.depth_words
        if p.row < 0 or p.bit < 0 or p.row + d > D or p.bit + w > W:
            problems.append(f"bin {b.ram_index}: {p.slice.label} outside {W}x{D}")
        if p.port not in PORT_NAMES[:num_ports]:
            problems.append(f"bin {b.ram_index}: {p.slice.label} on unknown port {p.port}")
        rects.append((p.row, p.bit, w, d, p.slice.label))
    for i in range(len(rects)):
        r0, b0, w0, d0, l0 = rects[i]
        for r1, b1, w1, d1, l1 in rects[i + 1:]:
            if r0 < r1 + d1 and r1 < r0 + d0 and b0 < b1 + w1 and b1 < b0 + w0:
                problems.append(f"bin {b.ram_index}: {l0} overlaps {l1}")
    if h_b is not None and b.height > h_b:
        problems.append(f"bin {b.ram_index}: height {b.height} exceeds {h_b}")
    halves = defaultdict(dict)
    for p in b.placements:
        if p.slice.part in (ODD, EVEN):
            halves[p.slice.stream][p.slice.part] = p.port
    for stream, ports in halves.items():
        if len(ports) == 2 and ports[ODD] == ports[EVEN]:
            problems.append(f"bin {b.ram_index}: odd/even halves of {stream} share port {ports[ODD]}")
        if len(ports) == 1:
            problems.append(f"bin {b.ram_index}: lone split half of {stream}")
    return problems


@dataclass
class PackingSolution:
    bins: list[Bin]
    ram: RamSpec
    island: str = "0"
    seed: int = 0
    engine: str = "greedy"
    h_b: int = 2
    excluded: list[str] = field(default_factory=list)

    @property
    def n_ram(self) -> int:
        return len(self.bins)

    @property
    def total_bits(self) -> int:
        return sum(b.bits for b in self.bins)

    @property
    def efficiency(self) -> Fraction:
        return efficiency(self.total_bits, self.n_ram, self.ram)

    @property
    def max_height(self) -> int:
        return max((b.height for b in self.bins), default=0)

    def check(self, buffers: Optional[Sequence[WeightBuffer]] = None) -> list[str]:
        problems = []
        for i, b in enumerate(self.bins):
            if b.ram_index != i:
                problems.append(f"bin at position {i} has ram_index {b.ram_index}")
            if b.aspect not in self.ram.aspect_ratios:
                problems.append(f"bin {i}: aspect {b.aspect} not offered by the RAM")
            problems.extend(check_bin(b, self.h_b, self.ram.num_ports))
        if buffers is not None:
            problems.extend(check_coverage(buffers, (s for b in self.bins for s in b.slices)))
        return problems


def check_coverage(buffers: Iterable[WeightBuffer], slices: Iterable[Slice]) -> list[str]:
    """Every buffer word/bit must be covered exactly once by the slices."""
    by_buffer = defaultdict(list)
    for s in slices:
        by_buffer[s.buffer].append(s)
    problems = []
    names = set()
    for buf in buffers:
        names.add(buf.layer)
        parts = by_buffer.get(buf.layer, [])
        if not parts:
            problems.append(f"buffer {buf.layer} not placed")
            continue
        # merge odd/even halves back into their origin rectangle
        rects, halves = [], defaultdict(list)
        for s in parts:
            if s.part in (ODD, EVEN):
                halves[(s.index, s.row0, s.bit0, s.width_bits)].append(s)
            else:
                rects.append((s.row0, s.bit0, s.width_bits, s.depth_words))
        for (idx, row0, bit0, w), pair in halves.items():
            kinds = sorted(p.part for p in pair)
            n_even = sum(p.depth_words for p in pair if p.part == EVEN)
            n_odd = sum(p.depth_words for p in pair if p.part == ODD)
            if kinds != [EVEN, ODD] or not 0 <= n_even - n_odd <= 1:
                problems.append(f"buffer {buf.layer}: broken odd/even pair at tile {idx}")
                continue
            rects.append((row0, bit0, w, n_even + n_odd))
        problems.extend(_grid_cover(buf, rects))
    for name in by_buffer:
        if name not in names:
            problems.append(f"slice of unknown buffer {name}")
    return problems


def _grid_cover(buf: WeightBuffer, rects) -> list[str]:
    W, D = buf.width_bits, buf.depth_words
    for r, b, w, d in rects:
        if r < 0 or b < 0 or r + d > D or b + w > W:
            return [f"buffer {buf.layer}: slice outside {W}x{D}"]
    if sum(w * d for _, _, w, d in rects) != W * D:
        return [f"buffer {buf.layer}: slice bits do not add up to {W * D}"]
    rows = sorted({0, D} | {r for r, _, _, _ in rects} | {r + d for r, _, _, d in rects})
    bits = sorted({0, W} | {b for _, b, _, _ in rects} | {b + w for _, b, w, _ in rects})
    seen = set()
    for r, b, w, d in rects:
        for i in range(bisect_left(rows, r), bisect_left(rows, r + d)):
            for j in range(bisect_left(bits, b), bisect_left(bits, b + w)):
                if (i, j) in seen:
                    return [f"buffer {buf.layer}: overlapping slices"]
                seen.add((i, j))
    return []


def assign_ports(slices: Sequence[Slice], num_ports: int) -> list[str]:
    """Balanced port per slice, streams taken in order and filled port by port.

    Odd/even halves go to the first two ports; the remaining streams are dealt
    out so that slot counts per port differ by at most one.
    """
    streams: list[tuple[str, int]] = []
    for s in slices:
        if s.part not in (ODD, EVEN) and s.stream not in streams:
            streams.append(s.stream)
    load = [0] * num_ports
    port_of: dict = {}
    for s in slices:
        if s.part == ODD:
            port_of[(s.stream, ODD)] = 0
            load[0] += 1
        elif s.part == EVEN:
            port_of[(s.stream, EVEN)] = 1 % num_ports
            load[1 % num_ports] += 1
    total = sum(load) + len(streams)
    target = [total // num_ports + (1 if p < total % num_ports else 0) for p in range(num_ports)]
    p = 0
    for st in streams:
        while p < num_ports - 1 and load[p] >= target[p]:
            p += 1
        port_of[(st, None)] = p
        load[p] += 1
    out = []
    for s in slices:
        key = (s.stream, s.part) if s.part in (ODD, EVEN) else (s.stream, None)
        out.append(PORT_NAMES[port_of[key]])
    return out


def make_bin(ram_index: int, slices: Sequence[Slice], ram: RamSpec) -> Bin:
    """Place a group of slices into one RAM and assign ports."""
    found = place([s.shape for s in slices], ram.aspect_ratios)
    if found is None:
        raise PackingError("slices do not fit one RAM: " + ", ".join(s.label for s in slices))
    aspect, positions = found
    # slot order follows storage order: by row, then bit
    order = sorted(range(len(slices)), key=lambda i: (positions[i], slices[i].label))
    ordered = [slices[i] for i in order]
    ports = assign_ports(ordered, ram.num_ports)
    placements = tuple(
        Placement(s, positions[i][0], positions[i][1], port) for s, i, port in zip(ordered, order, ports)
    )
    return Bin(ram_index, aspect, placements)


def solution_from_groups(
    groups: Sequence[Sequence[Slice]],
    ram: RamSpec,
    *,
    island: str = "0",
    seed: int = 0,
    engine: str = "greedy",
    h_b: int = 2,
    excluded: Sequence[str] = (),
) -> PackingSolution:
    """Canonical solution: bins ordered by their sorted slice labels."""
    keyed = []
    for g in groups:
        g = sorted(g, key=_slice_order)
        keyed.append((tuple(_slice_order(s) for s in g), g))
    keyed.sort(key=lambda kg: kg[0])
    bins = [make_bin(i, g, ram) for i, (_, g) in enumerate(keyed)]
    return PackingSolution(bins, ram, island, seed, engine, h_b, list(excluded))


def _slice_order(s: Slice):
    return (s.buffer, s.index, s.part)
