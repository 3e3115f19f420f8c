"""Whole-buffer-set packing: tiling, excluded layers and per-island scoping."""

from __future__ import annotations

from typing import Optional, Sequence

from ..model import RamSpec, WeightBuffer
from .exhaustive import exhaustive_groups
from .ga import GaParams, ga_groups
from .greedy import greedy_groups
from .slices import tile_buffer
from .solution import PackingError, PackingSolution, solution_from_groups

ENGINES = ("greedy", "ga", "exhaustive")


def pack_buffers(
    buffers: Sequence[WeightBuffer],
    ram: RamSpec,
    params: GaParams,
    *,
    engine: str = "ga",
    island: str = "0",
) -> PackingSolution:
    """Pack one island's buffers.

    Full tiles and every slice of a non-packable buffer get a RAM of their own;
    only residual slices of packable buffers are handed to the engine.
    """
    if engine not in ENGINES:
        raise PackingError(f"unknown engine {engine!r}; choose one of {', '.join(ENGINES)}")
    alone, residual, excluded = [], [], []
    for buf in buffers:
        full, rest = tile_buffer(buf, ram)
        alone.extend([s] for s in full)
        if buf.packable:
            residual.extend(rest)
        else:
            excluded.append(buf.layer)
            alone.extend([s] for s in rest)
    if engine == "greedy":
        groups = greedy_groups(residual, ram, params.h_b)
    elif engine == "ga":
        groups = ga_groups(residual, ram, params)
    else:
        groups = exhaustive_groups(residual, ram, params.h_b)
    return solution_from_groups(
        alone + groups, ram, island=island, seed=params.seed if engine == "ga" else 0,
        engine=engine, h_b=params.h_b, excluded=excluded,
    )


def pack_islands(
    buffers: Sequence[WeightBuffer],
    ram: RamSpec,
    params: GaParams,
    *,
    engine: str = "ga",
    islands: Optional[Sequence[str]] = None,
) -> list[PackingSolution]:
    """One solution per island; buffers are only co-located within their island.

    Islands are packed one after another with the same seed so the result does
    not depend on scheduling.
    """
    if islands is None:
        islands = sorted({b.island for b in buffers})
    known = set(islands)
    for b in buffers:
        if b.island not in known:
            raise PackingError(f"buffer {b.layer!r} names unknown island {b.island!r}")
    return [
        pack_buffers([b for b in buffers if b.island == isl], ram, params, engine=engine, island=isl)
        for isl in islands
    ]
