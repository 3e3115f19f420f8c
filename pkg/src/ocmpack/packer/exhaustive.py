"""Provably minimal packing by set-partition search; an oracle for small instances."""

from __future__ import annotations

from typing import Sequence

from ..model import RamSpec
from .greedy import check_sliceable, greedy_groups
from .placement import fits_sorted, shape_key
from .slices import Slice
from .solution import PackingError, PackingSolution, solution_from_groups

MAX_SLICES = 10


def exhaustive_groups(slices: Sequence[Slice], ram: RamSpec, h_b: int) -> list[list[Slice]]:
    if len(slices) > MAX_SLICES:
        raise PackingError(f"exhaustive packing is limited to {MAX_SLICES} slices, got {len(slices)}")
    if h_b < 1:
        raise PackingError("bin height must be at least 1")
    check_sliceable(slices, ram)
    items = sorted(slices, key=lambda s: (-s.bits, s.buffer, s.index, s.part))
    aspects = ram.aspect_ratios
    best = [list(g) for g in greedy_groups(items, ram, h_b)]
    groups: list[list[Slice]] = []

    def fits(g):
        return fits_sorted(shape_key(s.shape for s in g), aspects) is not None

    def search(k):
        nonlocal best
        if len(groups) >= len(best):
            return
        if k == len(items):
            best = [list(g) for g in groups]
            return
        s = items[k]
        for g in groups:
            if len(g) < h_b:
                g.append(s)
                if fits(g):
                    search(k + 1)
                g.pop()
        groups.append([s])
        search(k + 1)
        groups.pop()

    search(0)
    return best


def pack_exhaustive(slices: Sequence[Slice], ram: RamSpec, h_b: int, *, island: str = "0") -> PackingSolution:
    groups = exhaustive_groups(slices, ram, h_b)
    return solution_from_groups(groups, ram, island=island, engine="exhaustive", h_b=h_b)
