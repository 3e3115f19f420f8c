"""Workload specs: network folding, RAM primitive, clock plan and floorplan islands, from JSON."""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any, Union

from .model import ClockPlan, LayerSpec, ModelError, RamSpec, WeightBuffer, derive_buffers


class SchemaError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


@dataclass(frozen=True)
class WorkloadSpec:
    name: str
    layers: tuple[LayerSpec, ...]
    ram: RamSpec
    clock: ClockPlan
    islands: tuple[str, ...]
    provenance: str = ""

    def __post_init__(self):
        known = set(self.islands)
        for i, layer in enumerate(self.layers):
            if layer.island not in known:
                raise SchemaError(f"layers[{i}].island", f"{layer.island!r} is not one of {list(self.islands)}")

    def buffers(self) -> list[WeightBuffer]:
        return derive_buffers(self.layers)

    def single_island(self) -> "WorkloadSpec":
        """The same workload with the floorplan dropped: every layer in island "0"."""
        layers = tuple(
            LayerSpec(l.name, l.kernel_k, l.c_in, l.c_out, l.weight_bits, l.pe, l.simd, "0", l.packable)
            for l in self.layers
        )
        return WorkloadSpec(self.name, layers, self.ram, self.clock, ("0",), self.provenance)


def _get(obj: dict, key: str, path: str, kind, required=True, default=None):
    if key not in obj:
        if required:
            raise SchemaError(f"{path}.{key}" if path else key, "missing field")
        return default
    v = obj[key]
    where = f"{path}.{key}" if path else key
    if kind is int and (not isinstance(v, int) or isinstance(v, bool)):
        raise SchemaError(where, f"expected an integer, got {v!r}")
    if kind is str and not isinstance(v, str):
        raise SchemaError(where, f"expected a string, got {v!r}")
    if kind is bool and not isinstance(v, bool):
        raise SchemaError(where, f"expected true/false, got {v!r}")
    if kind is list and not isinstance(v, list):
        raise SchemaError(where, f"expected a list, got {type(v).__name__}")
    if kind is dict and not isinstance(v, dict):
        raise SchemaError(where, f"expected an object, got {type(v).__name__}")
    if kind is Fraction:
        if isinstance(v, bool) or not isinstance(v, (int, float, str)):
            raise SchemaError(where, f"expected a number, got {v!r}")
        try:
            v = Fraction(str(v))
        except (ValueError, ZeroDivisionError):
            raise SchemaError(where, f"not a rational number: {v!r}") from None
    return v


def parse_workload(doc: Any) -> WorkloadSpec:
    if not isinstance(doc, dict):
        raise SchemaError("", "workload must be a JSON object")
    name = _get(doc, "name", "", str)
    r = _get(doc, "ram", "", dict)
    aspects = _get(r, "aspects", "ram", list)
    for i, a in enumerate(aspects):
        if not (isinstance(a, list) and len(a) == 2 and all(isinstance(x, int) and not isinstance(x, bool) for x in a)):
            raise SchemaError(f"ram.aspects[{i}]", f"expected [width_bits, depth_words], got {a!r}")
    try:
        ram = RamSpec(
            capacity_bits=_get(r, "capacity_bits", "ram", int),
            aspect_ratios=tuple(tuple(a) for a in aspects),
            num_ports=_get(r, "ports", "ram", int),
            f_max_mhz=_get(r, "f_max_mhz", "ram", Fraction),
        )
    except ModelError as e:
        raise SchemaError("ram", str(e)) from None
    c = _get(doc, "clock", "", dict)
    try:
        clock = ClockPlan(_get(c, "f_compute_mhz", "clock", Fraction), _get(c, "f_memory_mhz", "clock", Fraction))
    except ModelError as e:
        raise SchemaError("clock", str(e)) from None
    islands = _get(doc, "islands", "", list)
    for i, isl in enumerate(islands):
        if not isinstance(isl, str):
            raise SchemaError(f"islands[{i}]", f"expected a string, got {isl!r}")
    if len(set(islands)) != len(islands):
        raise SchemaError("islands", "duplicate island label")
    layers = []
    names = set()
    for i, l in enumerate(_get(doc, "layers", "", list)):
        p = f"layers[{i}]"
        if not isinstance(l, dict):
            raise SchemaError(p, "expected an object")
        try:
            layer = LayerSpec(
                name=_get(l, "name", p, str),
                kernel_k=_get(l, "k", p, int),
                c_in=_get(l, "c_in", p, int),
                c_out=_get(l, "c_out", p, int),
                weight_bits=_get(l, "w_bits", p, int),
                pe=_get(l, "pe", p, int),
                simd=_get(l, "simd", p, int),
                island=_get(l, "island", p, str, required=False, default=islands[0] if islands else "0"),
                packable=_get(l, "packable", p, bool, required=False, default=True),
            )
        except ModelError as e:
            raise SchemaError(p, str(e)) from None
        if layer.name in names:
            raise SchemaError(f"{p}.name", f"duplicate layer name {layer.name!r}")
        names.add(layer.name)
        layers.append(layer)
    provenance = doc.get("provenance", "")
    return WorkloadSpec(name, tuple(layers), ram, clock, tuple(islands), provenance)


def shipped_names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("ocmpack").joinpath("data").iterdir() if p.name.endswith(".json"))


def load_workload(source: Union[str, Path]) -> WorkloadSpec:
    """Load a workload from a path, or by name from the shipped set (e.g. ``cnv-w1a1``)."""
    path = Path(source)
    if path.exists():
        text = path.read_text()
    else:
        stem = path.name[:-5] if path.name.endswith(".json") else path.name
        if stem not in shipped_names():
            raise SchemaError("", f"no such workload file or shipped workload: {source}")
        text = resources.files("ocmpack").joinpath("data", stem + ".json").read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError("", f"invalid JSON: {e}") from None
    return parse_workload(doc)
