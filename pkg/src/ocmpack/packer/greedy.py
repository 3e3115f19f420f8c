"""First-fit-decreasing packing of residual slices; the deterministic baseline engine."""

from __future__ import annotations

from typing import Sequence

from ..model import RamSpec
from .placement import fits_sorted, shape_key
from .slices import Slice
from .solution import PackingError, PackingSolution, solution_from_groups


def check_sliceable(slices: Sequence[Slice], ram: RamSpec) -> None:
    aspects = ram.aspect_ratios
    for s in slices:
        if fits_sorted((s.shape,), aspects) is None:
            raise PackingError(f"slice {s.label} ({s.width_bits}x{s.depth_words}) exceeds every RAM aspect; tile it first")


def _area_order(s: Slice):
    return (-s.bits, -s.width_bits, -s.depth_words, s.buffer, s.index, s.part)


def greedy_groups(slices: Sequence[Slice], ram: RamSpec, h_b: int) -> list[list[Slice]]:
    if h_b < 1:
        raise PackingError("bin height must be at least 1")
    check_sliceable(slices, ram)
    cap = ram.capacity_bits
    aspects = ram.aspect_ratios
    groups: list[list[Slice]] = []
    shapes: list[tuple] = []  # sorted shape key per group
    free: list[int] = []
    open_ids: list[int] = []
    min_bits = min((s.bits for s in slices), default=0)
    for s in sorted(slices, key=_area_order):
        target = None
        for g in open_ids:
            if free[g] < s.bits:
                continue
            key = shape_key(shapes[g] + (s.shape,))
            if fits_sorted(key, aspects) is not None:
                target = g
                break
        if target is None:
            target = len(groups)
            groups.append([])
            shapes.append(())
            free.append(cap)
            open_ids.append(target)
        groups[target].append(s)
        shapes[target] = shape_key(shapes[target] + (s.shape,))
        free[target] -= s.bits
        if len(groups[target]) >= h_b or free[target] < min_bits:
            open_ids.remove(target)
    return groups


def pack_greedy(slices: Sequence[Slice], ram: RamSpec, h_b: int, *, island: str = "0") -> PackingSolution:
    groups = greedy_groups(slices, ram, h_b)
    return solution_from_groups(groups, ram, island=island, engine="greedy", h_b=h_b)
