"""Packing of weight-buffer slices into physical RAM bins."""

from .exhaustive import MAX_SLICES, pack_exhaustive
from .ga import CNV_PARAMS, RN50_PARAMS, GaParams, pack_ga
from .greedy import pack_greedy
from .islands import ENGINES, pack_buffers, pack_islands
from .slices import EVEN, ODD, TILE, WHOLE, Slice, split_odd_even, tile_buffer
from .solution import Bin, PackingError, PackingSolution, Placement, check_bin, make_bin

__all__ = [
    "Bin", "CNV_PARAMS", "ENGINES", "EVEN", "GaParams", "MAX_SLICES", "ODD", "PackingError",
    "PackingSolution", "Placement", "RN50_PARAMS", "Slice", "TILE", "WHOLE", "check_bin",
    "make_bin", "pack_buffers", "pack_exhaustive", "pack_ga", "pack_greedy", "pack_islands",
    "split_odd_even", "tile_buffer",
]
