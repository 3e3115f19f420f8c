"""Cycle-level simulation of a packed RAM feeding compute through clock-crossing FIFOs.

Both clocks are derived from one integer tick: with R_F = a/b in lowest terms,
the compute clock ticks every ``a`` ticks and the memory clock every ``b``, so
fractional ratios stay exact. At a tick where both clocks have an edge, the
memory edge is processed first.
"""

from __future__ import annotations

import csv
from collections import Counter, deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, TextIO

from .model import ClockPlan, as_fraction
from .packer.slices import EVEN, ODD
from .packer.solution import PackingSolution
from .streamer import StreamerConfig, build_streamer


class SimError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    clock: ClockPlan
    fifo_depth: int = 32
    warmup_compute_cycles: int = 200
    measure_compute_cycles: int = 1000
    consumer_rate: Fraction = Fraction(1)
    sync_latency_mem_cycles: int = 2
    record_words: int = 0  # keep the first N delivered addresses per stream

    def __post_init__(self):
        object.__setattr__(self, "consumer_rate", as_fraction(self.consumer_rate))
        if self.fifo_depth < 2:
            raise SimError("fifo_depth must be at least 2")
        if self.measure_compute_cycles < 1:
            raise SimError("measurement window must be at least one compute cycle")
        if self.warmup_compute_cycles < 0 or self.sync_latency_mem_cycles < 0:
            raise SimError("warmup and latency must be non-negative")
        if not 0 < self.consumer_rate <= 1:
            raise SimError(f"consumer_rate {self.consumer_rate} outside (0, 1]")


@dataclass
class SimReport:
    per_stream_rate: dict[str, Fraction]
    fifo_peak: dict[str, int]
    port_busy_fraction: dict[str, Fraction]
    violations: Counter = field(default_factory=Counter)
    delivered: dict[str, list[int]] = field(default_factory=dict)

    @property
    def n_violations(self) -> int:
        return sum(self.violations.values())

    def min_rate(self) -> Fraction:
        return min(self.per_stream_rate.values(), default=Fraction(1))


class _Queue:
    """Read stream of one slot: address generator plus its CDC FIFO."""

    def __init__(self, key, depth_words, stride, offset):
        self.key = key
        self.depth_words = depth_words
        self.stride = stride
        self.offset = offset  # parent address of local row 0
        self.next_addr = 0
        self.fifo: deque = deque()
        self.granted = 0
        self.popped = 0
        self.peak = 0

    def full(self, depth):
        # entries still crossing the synchronizer hold a FIFO slot already
        return len(self.fifo) >= depth

    def grant(self, ready_tick):
        addr = self.offset + self.next_addr * self.stride
        self.fifo.append((ready_tick, addr))
        self.next_addr = (self.next_addr + 1) % self.depth_words
        self.granted += 1
        self.peak = max(self.peak, len(self.fifo))

    def ready(self, tick):
        return bool(self.fifo) and self.fifo[0][0] <= tick


def simulate(config: StreamerConfig, sim: SimConfig, trace: Optional[TextIO] = None) -> SimReport:
    """Run warmup plus measurement window and report per-stream throughput."""
    ratio = config.ratio
    if sim.clock.ratio != ratio:
        raise SimError(f"streamer built for R_F={ratio}, simulation clock has R_F={sim.clock.ratio}")
    c_period, m_period = ratio.numerator, ratio.denominator
    latency = sim.sync_latency_mem_cycles * m_period
    writer = csv.writer(trace) if trace is not None else None
    if writer:
        writer.writerow(["tick", "domain", "port", "stream", "event"])

    queues = {}
    tables = []
    for table in config.slots:
        row = []
        for slot in table:
            key = (slot.stream, slot.half)
            if key not in queues:
                stride = slot.stride
                offset = 1 if slot.half == ODD else 0
                queues[key] = _Queue(key, slot.depth_words, stride, offset)
            row.append(queues[key])
        tables.append(row)
    # consumers: one per stream; a split stream pulls even/odd halves alternately
    consumers = {}
    for stream in config.streams:
        if (stream, None) in queues:
            consumers[stream] = [queues[(stream, None)]]
        else:
            consumers[stream] = [queues[(stream, EVEN)], queues[(stream, ODD)]]
    parent_depth = {
        s: (config.merge_plan.depth_words if len(qs) == 2 else qs[0].depth_words) for s, qs in consumers.items()
    }
    expect = {s: 0 for s in consumers}
    credit = {s: Fraction(0) for s in consumers}
    consumed = Counter()
    delivered = {s: [] for s in consumers}
    violations = Counter()
    pointer = [0] * len(tables)
    busy = Counter()

    warm = sim.warmup_compute_cycles
    end = warm + sim.measure_compute_cycles
    end_tick = end * c_period
    tick = 0
    while tick < end_tick:
        measuring = tick >= warm * c_period
        if tick % m_period == 0:
            issued = 0
            for p, row in enumerate(tables):
                if not row:
                    continue
                slot = pointer[p]
                pointer[p] = (slot + 1) % len(row)
                chosen = None
                if not row[slot].full(sim.fifo_depth):
                    chosen = row[slot]
                elif config.adaptive:
                    for k in range(1, len(row)):
                        q = row[(slot + k) % len(row)]
                        if not q.full(sim.fifo_depth):
                            chosen = q
                            break
                port = config.ports[p]
                if chosen is None:
                    if writer:
                        writer.writerow([tick, "mem", port, row[slot].key[0], "stall"])
                    continue
                chosen.grant(tick + latency)
                issued += 1
                if measuring:
                    busy[port] += 1
                if len(chosen.fifo) > sim.fifo_depth:
                    violations["fifo_overflow"] += 1
                if writer:
                    event = "grant" if chosen is row[slot] else "grant_reassigned"
                    writer.writerow([tick, "mem", port, _label(chosen.key), event])
            if issued > len(tables):
                violations["port_conservation"] += 1
        if tick % c_period == 0:
            for stream, qs in consumers.items():
                credit[stream] = min(Fraction(1), credit[stream] + sim.consumer_rate)
                if credit[stream] < 1:
                    continue
                addr_expected = expect[stream]
                q = qs[addr_expected % 2] if len(qs) == 2 else qs[0]
                if not q.ready(tick):
                    if writer:
                        writer.writerow([tick, "compute", "", stream, "starve"])
                    continue
                _, addr = q.fifo.popleft()
                q.popped += 1
                credit[stream] -= 1
                if addr != addr_expected:
                    violations["order"] += 1
                expect[stream] = (addr_expected + 1) % parent_depth[stream]
                if len(delivered[stream]) < sim.record_words:
                    delivered[stream].append(addr)
                if measuring:
                    consumed[stream] += 1
                if writer:
                    writer.writerow([tick, "compute", "", stream, f"pop {addr}"])
        if tick % m_period == 0:
            for q in queues.values():
                # words granted = words consumed + words resident (in flight or queued)
                if q.granted != q.popped + len(q.fifo):
                    violations["word_conservation"] += 1
        tick = min((tick // c_period + 1) * c_period, (tick // m_period + 1) * m_period)

    window = sim.measure_compute_cycles
    n_mem = _mem_cycles_in(warm * c_period, end_tick, m_period)
    return SimReport(
        per_stream_rate={s: Fraction(consumed[s], window) for s in consumers},
        fifo_peak={s: max(q.peak for q in qs) for s, qs in consumers.items()},
        port_busy_fraction={
            port: Fraction(busy[port], n_mem) for port, row in zip(config.ports, tables) if row
        },
        violations=violations,
        delivered={s: v for s, v in delivered.items() if sim.record_words},
    )


def _label(key) -> str:
    stream, half = key
    return f"{stream}.{half}" if half else stream


def _mem_cycles_in(start: int, stop: int, m_period: int) -> int:
    return (stop - 1) // m_period - (start - 1) // m_period


@dataclass
class BinVerdict:
    ram_index: int
    feasible: bool
    passed: bool
    report: SimReport


@dataclass
class Verification:
    passed: bool
    bins: list[BinVerdict]

    def failures(self) -> list[BinVerdict]:
        return [v for v in self.bins if not v.passed]


def _signature(config: StreamerConfig, sim: SimConfig):
    # recorded addresses wrap at the slot depth, so depths matter only when recording
    slot = (lambda s: (s.half, s.depth_words)) if sim.record_words else (lambda s: s.half)
    return (config.adaptive, tuple(tuple(slot(s) for s in t) for t in config.slots))


def _relabel(report: SimReport, src: StreamerConfig, dst: StreamerConfig) -> SimReport:
    names = dict(zip(src.streams, dst.streams))
    return SimReport(
        per_stream_rate={names[k]: v for k, v in report.per_stream_rate.items()},
        fifo_peak={names[k]: v for k, v in report.fifo_peak.items()},
        port_busy_fraction=dict(report.port_busy_fraction),
        violations=Counter(report.violations),
        delivered={names[k]: v for k, v in report.delivered.items()},
    )


def verify_solution(
    solution: PackingSolution, clock: ClockPlan, sim: SimConfig, adaptive: bool = True
) -> Verification:
    """Simulate every bin; pass iff each stream keeps up with its consumer.

    Rates do not depend on addresses, so bins with the same slot structure share
    one simulation.
    """
    cache: dict = {}
    verdicts = []
    for b in solution.bins:
        config = build_streamer(b, clock, adaptive, solution.ram.num_ports)
        key = _signature(config, sim)
        if key not in cache:
            cache[key] = (config, simulate(config, sim))
        src, report = cache[key]
        if src is not config:
            report = _relabel(report, src, config)
        ok = report.n_violations == 0 and report.min_rate() >= sim.consumer_rate
        verdicts.append(BinVerdict(b.ram_index, config.feasible, ok, report))
    return Verification(all(v.passed for v in verdicts), verdicts)
