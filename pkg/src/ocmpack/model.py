"""Accelerator and RAM data model: weight-buffer shapes, mapping efficiency, analytic bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence


class ModelError(ValueError):
    """Rejected model input (bad folding, bad RAM description...)."""


def as_fraction(value) -> Fraction:
    # Fraction(float) keeps binary noise, so go through str for floats.
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(str(value))
    return Fraction(value)


@dataclass(frozen=True)
class LayerSpec:
    name: str
    kernel_k: int
    c_in: int
    c_out: int
    weight_bits: int
    pe: int
    simd: int
    island: str = "0"
    packable: bool = True

    def __post_init__(self):
        for attr in ("kernel_k", "c_in", "c_out", "weight_bits", "pe", "simd"):
            v = getattr(self, attr)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ModelError(f"layer {self.name!r}: {attr} must be a positive integer, got {v!r}")
        if self.c_out % self.pe:
            raise ModelError(f"layer {self.name!r}: pe={self.pe} does not divide c_out={self.c_out}")
        if (self.kernel_k ** 2 * self.c_in) % self.simd:
            raise ModelError(
                f"layer {self.name!r}: simd={self.simd} does not divide K^2*c_in={self.kernel_k ** 2 * self.c_in}"
            )

    @property
    def n_params(self) -> int:
        return self.kernel_k ** 2 * self.c_in * self.c_out


@dataclass(frozen=True)
class WeightBuffer:
    layer: str
    depth_words: int
    width_bits: int
    island: str = "0"
    packable: bool = True

    def __post_init__(self):
        if self.depth_words < 1 or self.width_bits < 1:
            raise ModelError(f"buffer {self.layer!r}: empty shape {self.width_bits}x{self.depth_words}")

    @property
    def total_param_bits(self) -> int:
        return self.depth_words * self.width_bits


@dataclass(frozen=True)
class RamSpec:
    """One physical RAM primitive.

    ``aspect_ratios`` holds ``(width_bits, depth_words)`` pairs; the default is the
    18b x 1024 shape of a Xilinx BRAM18 used for all baseline accounting.
    """

    capacity_bits: int = 18432
    aspect_ratios: tuple[tuple[int, int], ...] = ((18, 1024),)
    num_ports: int = 2
    f_max_mhz: Fraction = Fraction(600)

    def __post_init__(self):
        aspects = tuple((int(w), int(d)) for w, d in self.aspect_ratios)
        object.__setattr__(self, "aspect_ratios", aspects)
        object.__setattr__(self, "f_max_mhz", as_fraction(self.f_max_mhz))
        if not aspects:
            raise ModelError("RAM needs at least one aspect ratio")
        for w, d in aspects:
            # narrow modes lose the parity bits, so only require w*d <= capacity
            if w < 1 or d < 1 or w * d > self.capacity_bits:
                raise ModelError(f"aspect {w}x{d} exceeds capacity {self.capacity_bits}")
        if self.num_ports < 1:
            raise ModelError("RAM needs at least one port")
        if self.f_max_mhz <= 0:
            raise ModelError("f_max_mhz must be positive")

    @property
    def max_width(self) -> int:
        return max(w for w, _ in self.aspect_ratios)

    @property
    def max_depth(self) -> int:
        return max(d for _, d in self.aspect_ratios)


BRAM18 = RamSpec()
# opt-in richer shape set of a 7-series / UltraScale BRAM18
BRAM18_ALL_ASPECTS = RamSpec(
    aspect_ratios=((36, 512), (18, 1024), (9, 2048), (4, 4096), (2, 8192), (1, 16384)),
)


@dataclass(frozen=True)
class ClockPlan:
    f_compute_mhz: Fraction
    f_memory_mhz: Fraction

    def __post_init__(self):
        object.__setattr__(self, "f_compute_mhz", as_fraction(self.f_compute_mhz))
        object.__setattr__(self, "f_memory_mhz", as_fraction(self.f_memory_mhz))
        if self.f_compute_mhz <= 0 or self.f_memory_mhz <= 0:
            raise ModelError("clock frequencies must be positive")
        if self.ratio < 1:
            raise ModelError(f"memory clock slower than compute clock (R_F={self.ratio})")

    @property
    def ratio(self) -> Fraction:
        return self.f_memory_mhz / self.f_compute_mhz

    @classmethod
    def from_ratio(cls, ratio, f_compute_mhz=100) -> "ClockPlan":
        f_c = as_fraction(f_compute_mhz)
        return cls(f_c, f_c * as_fraction(ratio))


def derive_buffer(layer: LayerSpec) -> WeightBuffer:
    fold = layer.pe * layer.simd
    return WeightBuffer(
        layer=layer.name,
        depth_words=layer.n_params // fold,
        width_bits=fold * layer.weight_bits,
        island=layer.island,
        packable=layer.packable,
    )


def derive_buffers(layers: Iterable[LayerSpec]) -> list[WeightBuffer]:
    return [derive_buffer(layer) for layer in layers]


def direct_ram_count(buffer: WeightBuffer, ram: RamSpec) -> int:
    """RAMs used when the buffer is mapped on its own, best aspect ratio."""
    return min(
        -(-buffer.width_bits // w) * -(-buffer.depth_words // d) for w, d in ram.aspect_ratios
    )


def efficiency(total_param_bits: int, n_ram: int, ram: RamSpec) -> Fraction:
    if total_param_bits < 0 or n_ram < 0:
        raise ModelError("negative bit or RAM count")
    if n_ram == 0:
        if total_param_bits:
            raise ModelError(f"{total_param_bits} bits cannot be stored in zero RAMs")
        return Fraction(0)
    return Fraction(total_param_bits, n_ram * ram.capacity_bits)


def baseline(buffers: Sequence[WeightBuffer], ram: RamSpec) -> tuple[int, Fraction]:
    """Direct-mapping RAM count and efficiency of a whole buffer set."""
    n_ram = sum(direct_ram_count(b, ram) for b in buffers)
    bits = sum(b.total_param_bits for b in buffers)
    return n_ram, efficiency(bits, n_ram, ram)


def kernel_efficiency_bound(kernel_k: int) -> Fraction:
    if kernel_k < 1:
        raise ModelError("kernel size must be positive")
    k2 = kernel_k * kernel_k
    return Fraction(k2, 1 << (k2 - 1).bit_length())


def max_bin_height(clock: ClockPlan, ram: RamSpec) -> int:
    return math.floor(ram.num_ports * clock.ratio)


def delta_fps(f_c, f_m, f_base) -> Fraction:
    f_c, f_m, f_base = as_fraction(f_c), as_fraction(f_m), as_fraction(f_base)
    if min(f_c, f_m, f_base) <= 0:
        raise ModelError("frequencies must be positive")
    return 1 - min(f_c, f_m / 2) / f_base
