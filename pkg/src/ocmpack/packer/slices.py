"""Buffer slices and the tiling that reduces buffers to RAM-sized pieces."""

from __future__ import annotations

from dataclasses import dataclass

from ..model import RamSpec, WeightBuffer, direct_ram_count

WHOLE, TILE, ODD, EVEN = "whole", "tile", "odd", "even"
PARTS = (WHOLE, TILE, ODD, EVEN)


@dataclass(frozen=True, order=True)
class Slice:
    """A rectangle of a parent buffer.

    ``row0``/``bit0`` locate the slice inside the parent's word/bit grid. Odd and
    even halves keep the origin slice's coordinates and index; the odd half holds
    the origin rows ``row0+1, row0+3, ...`` and the even half ``row0, row0+2, ...``.
    """

    buffer: str
    part: str
    index: int
    depth_words: int
    width_bits: int
    row0: int = 0
    bit0: int = 0

    def __post_init__(self):
        if self.part not in PARTS:
            raise ValueError(f"unknown slice part {self.part!r}")
        if self.depth_words < 1 or self.width_bits < 1:
            raise ValueError(f"empty slice {self.label}")

    @property
    def bits(self) -> int:
        return self.depth_words * self.width_bits

    @property
    def shape(self) -> tuple[int, int]:
        return (self.width_bits, self.depth_words)

    @property
    def stream(self) -> tuple[str, int]:
        # odd/even halves of one slice form a single read stream
        return (self.buffer, self.index)

    @property
    def label(self) -> str:
        if self.part == WHOLE:
            return self.buffer
        if self.part == TILE:
            return f"{self.buffer}#{self.index}"
        return f"{self.buffer}#{self.index}.{self.part}"


def best_aspect(buffer: WeightBuffer, ram: RamSpec) -> tuple[int, int]:
    """Aspect used for tiling: the direct-mapping optimum, least leftover area on ties."""
    n_best = direct_ram_count(buffer, ram)

    def leftover(aspect):
        w, d = aspect
        return buffer.total_param_bits - (buffer.width_bits // w) * (buffer.depth_words // d) * w * d

    candidates = [
        a for a in ram.aspect_ratios
        if -(-buffer.width_bits // a[0]) * -(-buffer.depth_words // a[1]) == n_best
    ]
    return min(candidates, key=lambda a: (leftover(a), -a[0]))


def tile_buffer(buffer: WeightBuffer, ram: RamSpec) -> tuple[list[Slice], list[Slice]]:
    """Split a buffer into full-RAM tiles and sub-RAM residual slices.

    Full tiles are ``w x d`` blocks of the chosen aspect. The residual is the
    bottom strip (one slice per full column) plus the right strip (one slice per
    row band), each of which fits inside a single RAM.
    """
    w, d = best_aspect(buffer, ram)
    W, D = buffer.width_bits, buffer.depth_words
    if W <= ram.max_width and D <= ram.max_depth and any(
        W <= aw and D <= ad for aw, ad in ram.aspect_ratios
    ):
        s = Slice(buffer.layer, WHOLE, 0, D, W)
        if (W, D) in ram.aspect_ratios:
            return [s], []
        return [], [s]

    n_cols, rem_w = divmod(W, w)
    n_bands, rem_d = divmod(D, d)
    full, residual = [], []
    index = 0

    def add(target, rows, bits, row0, bit0):
        nonlocal index
        target.append(Slice(buffer.layer, TILE, index, rows, bits, row0, bit0))
        index += 1

    for c in range(n_cols):
        for b in range(n_bands):
            add(full, d, w, b * d, c * w)
        if rem_d:
            add(residual, rem_d, w, n_bands * d, c * w)
    if rem_w:
        for b in range(n_bands):
            add(residual, d, rem_w, b * d, n_cols * w)
        if rem_d:
            add(residual, rem_d, rem_w, n_bands * d, n_cols * w)
    return full, residual


def split_odd_even(s: Slice) -> tuple[Slice, Slice]:
    """Split a slice by address parity into (odd, even) halves."""
    if s.part in (ODD, EVEN):
        raise ValueError(f"{s.label} is already split")
    if s.depth_words < 2:
        raise ValueError(f"{s.label} is too shallow to split")
    n_even = (s.depth_words + 1) // 2
    odd = Slice(s.buffer, ODD, s.index, s.depth_words - n_even, s.width_bits, s.row0, s.bit0)
    even = Slice(s.buffer, EVEN, s.index, n_even, s.width_bits, s.row0, s.bit0)
    return odd, even


def parent_rows(s: Slice) -> range:
    """Parent-buffer word addresses held by the slice, in storage order."""
    if s.part == ODD:
        return range(s.row0 + 1, s.row0 + 2 * s.depth_words, 2)
    if s.part == EVEN:
        return range(s.row0, s.row0 + 2 * s.depth_words - 1, 2)
    return range(s.row0, s.row0 + s.depth_words)
