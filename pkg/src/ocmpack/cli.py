"""Command line front end: derive buffers, pack them, verify throughput, tabulate results."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from . import report as rpt
from . import solution_io
from .galsim import SimConfig, SimError, simulate, verify_solution
from .model import ClockPlan, ModelError, direct_ram_count, efficiency, max_bin_height
from .packer import CNV_PARAMS, ENGINES, RN50_PARAMS, PackingError, pack_islands
from .streamer import apply_splits, build_streamer
from .workload import SchemaError, load_workload

EXIT_OK = 0
EXIT_SCHEMA = 3
EXIT_INFEASIBLE = 4
EXIT_VERIFY = 5

PRESETS = {"cnv": CNV_PARAMS, "rn50": RN50_PARAMS}


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _rational(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return value


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _clock(base: ClockPlan, rf: Optional[Fraction]) -> ClockPlan:
    if rf is None:
        return base
    try:
        return ClockPlan.from_ratio(rf, base.f_compute_mhz)
    except ModelError as e:
        raise CliError(EXIT_INFEASIBLE, str(e)) from None


def cmd_derive(args) -> int:
    spec = load_workload(args.spec)
    rows = []
    for layer, buf in zip(spec.layers, spec.buffers()):
        n = direct_ram_count(buf, spec.ram)
        rows.append({
            "layer": layer.name, "k": layer.kernel_k, "c_in": layer.c_in, "c_out": layer.c_out,
            "pe": layer.pe, "simd": layer.simd, "width_bits": buf.width_bits, "depth_words": buf.depth_words,
            "bits": buf.total_param_bits, "n_ram": n,
            "efficiency": efficiency(buf.total_param_bits, n, spec.ram),
            "island": layer.island, "packable": layer.packable,
        })
    n_total = sum(r["n_ram"] for r in rows)
    bits = sum(r["bits"] for r in rows)
    e_total = efficiency(bits, n_total, spec.ram)
    if args.format == "json":
        doc = {
            "workload": spec.name,
            "buffers": [dict(r, efficiency=str(r["efficiency"])) for r in rows],
            "n_ram": n_total, "total_bits": bits, "efficiency": str(e_total),
        }
        _emit(json.dumps(doc, indent=1) + "\n", args.out)
        return EXIT_OK
    cols = ["layer", "k", "c_in", "c_out", "pe", "simd", "width_bits", "depth_words", "bits", "n_ram",
            "efficiency", "island", "packable"]
    cells = [[r["layer"], *(str(r[c]) for c in cols[1:10]), f"{float(r['efficiency']) * 100:.1f}",
              r["island"], "yes" if r["packable"] else "no"] for r in rows]
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        w.writerows(cells)
        _emit(buf.getvalue(), args.out)
        return EXIT_OK
    table = [cols] + cells
    widths = [max(len(row[i]) for row in table) for i in range(len(cols))]
    lines = ["  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(row, widths)))
             for row in table]
    lines.append(f"{spec.name}: {len(rows)} buffers, {bits} bits, {n_total} RAMs, "
                 f"baseline efficiency {float(e_total) * 100:.1f}%")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_pack(args) -> int:
    spec = load_workload(args.spec)
    clock = _clock(spec.clock, args.rf)
    if clock.f_memory_mhz > spec.ram.f_max_mhz:
        raise CliError(EXIT_INFEASIBLE, f"memory clock {clock.f_memory_mhz} MHz exceeds the RAM's "
                                        f"f_max of {spec.ram.f_max_mhz} MHz")
    h_max = max_bin_height(clock, spec.ram)
    h_b = args.height if args.height is not None else h_max
    if h_b > h_max:
        raise CliError(
            EXIT_INFEASIBLE,
            f"bin height h_b={h_b} needs R_F >= {Fraction(h_b, spec.ram.num_ports)}; "
            f"R_F={clock.ratio} allows at most h_b={h_max}",
        )
    preset = args.preset if args.preset != "auto" else ("rn50" if spec.name.lower().startswith("rn50") else "cnv")
    params = PRESETS[preset].with_(h_b=h_b, seed=args.seed)
    if args.generations is not None:
        params = params.with_(generations=args.generations)
    if args.single_island:
        spec = spec.single_island()
    buffers = spec.buffers()
    solutions = pack_islands(buffers, spec.ram, params, engine=args.engine, islands=spec.islands)
    solutions = [apply_splits(s, clock) for s in solutions]
    sol = solution_io.SolutionSet(
        workload=spec.name, engine=args.engine, h_b=h_b, seed=args.seed if args.engine == "ga" else 0,
        clock=clock, ram=spec.ram, buffers=buffers, islands=solutions,
        schedules=args.schedules, adaptive=args.adaptive,
    )
    problems = solution_io.check(sol)
    if problems:
        raise CliError(EXIT_INFEASIBLE, "packing failed its own checks:\n  " + "\n  ".join(problems[:20]))
    bad = [
        (s.island, b.ram_index) for s in sol.islands for b in s.bins
        if not build_streamer(b, clock, args.adaptive, spec.ram.num_ports).feasible
    ]
    text = solution_io.dumps(sol)
    if args.out:
        Path(args.out).write_text(text)
    if args.format == "json" and not args.out:
        sys.stdout.write(text)
    else:
        rows = rpt.solution_rows(sol)
        print(rpt.render(rows, args.format if args.format != "json" else "text"), end="")
    if bad:
        print(f"{len(bad)} bins cannot sustain full rate at R_F={clock.ratio}, first: island {bad[0][0]} "
              f"bin {bad[0][1]}", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def _load_solution(path: str) -> solution_io.SolutionSet:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise SchemaError("", f"cannot read {path}: {e.strerror}") from None
    sol = solution_io.loads(text)
    problems = solution_io.check(sol)
    if problems:
        raise SchemaError("", f"{path} is not a valid solution: {problems[0]}")
    return sol


def _sim_config(clock: ClockPlan, args) -> SimConfig:
    try:
        return SimConfig(clock, fifo_depth=args.fifo_depth, warmup_compute_cycles=args.warmup,
                         measure_compute_cycles=args.cycles)
    except SimError as e:
        raise CliError(2, str(e)) from None


def _verify(sol, clock, sim, adaptive):
    return [(s.island, verify_solution(s, clock, sim, adaptive)) for s in sol.islands]


def cmd_verify(args) -> int:
    sol = _load_solution(args.solution)
    clock = _clock(sol.clock, args.rf)
    sim = _sim_config(clock, args)
    results = _verify(sol, clock, sim, args.adaptive)
    if args.trace:
        isl = sol.islands[0] if sol.islands else None
        if isl is not None and isl.bins:
            b = isl.bins[min(args.trace_bin, len(isl.bins) - 1)]
            with open(args.trace, "w", newline="") as fh:
                simulate(build_streamer(b, clock, args.adaptive, sol.ram.num_ports), sim, trace=fh)
    passed = all(v.passed for _, v in results)
    if args.format == "json":
        doc = {
            "workload": sol.workload, "rf": str(clock.ratio), "adaptive": args.adaptive, "passed": passed,
            "bins": [
                {"island": isl, "ram_index": bv.ram_index, "passed": bv.passed, "feasible": bv.feasible,
                 "rates": {k: str(r) for k, r in bv.report.per_stream_rate.items()},
                 "violations": bv.report.n_violations}
                for isl, v in results for bv in v.bins
            ],
        }
        _emit(json.dumps(doc, indent=1) + "\n", args.out)
    else:
        lines = []
        for isl, v in results:
            for bv in v.bins:
                if args.failures_only and bv.passed:
                    continue
                rates = " ".join(f"{k}={r}" for k, r in bv.report.per_stream_rate.items())
                lines.append(f"{isl}\t{bv.ram_index}\t{'PASS' if bv.passed else 'FAIL'}\t{rates}")
        n_bins = sum(len(v.bins) for _, v in results)
        n_fail = sum(len(v.failures()) for _, v in results)
        lines.append(f"{sol.workload}: {n_bins - n_fail}/{n_bins} bins sustain the consumer rate at "
                     f"R_F={clock.ratio} ({'adaptive' if args.adaptive else 'static'} arbitration): "
                     f"{'PASS' if passed else 'FAIL'}")
        _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if passed else EXIT_VERIFY


def cmd_report(args) -> int:
    rows = []
    for path in args.inputs:
        try:
            text = Path(path).read_text()
        except OSError:
            text = None
        if text is not None and '"format": "ocmpack-solution/' in text:
            sol = _load_solution(path)
            clock = _clock(sol.clock, args.rf)
            verified = None
            if args.verify:
                verified = all(v.passed for _, v in _verify(sol, clock, _sim_config(clock, args), True))
            f_c = args.f_compute if args.f_compute is not None else clock.f_compute_mhz
            f_m = args.f_memory if args.f_memory is not None else clock.f_memory_mhz
            dfps = rpt.throughput_loss(f_c, f_m, args.f_base)
            rows.extend(rpt.solution_rows(sol, verified, dfps))
        else:
            rows.append(rpt.baseline_row(load_workload(path)))
    _emit(rpt.render(rows, args.format), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ocmpack", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("derive", help="list weight buffers and their direct RAM mapping")
    d.add_argument("spec", help="workload JSON file or shipped workload name")
    d.add_argument("--format", choices=("text", "csv", "json"), default="text")
    d.add_argument("--out")
    d.set_defaults(func=cmd_derive)

    k = sub.add_parser("pack", help="pack buffers into RAMs and write a solution file")
    k.add_argument("spec")
    k.add_argument("--engine", choices=ENGINES, default="ga")
    k.add_argument("--height", type=int, help="bin height h_b (default: largest the clock plan allows)")
    k.add_argument("--rf", type=_rational, help="memory/compute clock ratio, overrides the workload clock")
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--generations", type=int)
    k.add_argument("--preset", choices=("auto", *PRESETS), default="auto", help="GA hyperparameter row")
    k.add_argument("--single-island", action="store_true", help="ignore the floorplan islands")
    k.add_argument("--adaptive", action=argparse.BooleanOptionalAction, default=True)
    k.add_argument("--schedules", action="store_true", help="embed per-bin read schedules")
    k.add_argument("--out", help="solution file to write")
    k.add_argument("--format", choices=("text", "csv", "json"), default="text")
    k.set_defaults(func=cmd_pack)

    v = sub.add_parser("verify", help="simulate every packed RAM and check readback throughput")
    v.add_argument("solution")
    v.add_argument("--rf", type=_rational)
    v.add_argument("--adaptive", action=argparse.BooleanOptionalAction, default=True)
    v.add_argument("--cycles", type=int, default=1000, help="measured compute cycles per simulation")
    v.add_argument("--warmup", type=int, default=200)
    v.add_argument("--fifo-depth", type=int, default=32)
    v.add_argument("--trace", help="write a per-cycle CSV trace of one bin")
    v.add_argument("--trace-bin", type=int, default=0)
    v.add_argument("--failures-only", action="store_true")
    v.add_argument("--out")
    v.add_argument("--format", choices=("text", "json"), default="text")
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("report", help="tabulate solutions (and workload baselines)")
    r.add_argument("inputs", nargs="+", help="solution files; workload specs give a direct-mapping row")
    r.add_argument("--rf", type=_rational)
    r.add_argument("--verify", action=argparse.BooleanOptionalAction, default=True)
    r.add_argument("--cycles", type=int, default=1000)
    r.add_argument("--warmup", type=int, default=200)
    r.add_argument("--fifo-depth", type=int, default=32)
    r.add_argument("--f-compute", type=_rational)
    r.add_argument("--f-memory", type=_rational)
    r.add_argument("--f-base", type=_rational, help="reference compute clock for the throughput loss")
    r.add_argument("--out")
    r.add_argument("--format", choices=("text", "csv", "json"), default="text")
    r.set_defaults(func=cmd_report)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as e:
        print(f"ocmpack: schema error: {e}", file=sys.stderr)
        return EXIT_SCHEMA
    except CliError as e:
        print(f"ocmpack: {e}", file=sys.stderr)
        return e.code
    except PackingError as e:
        print(f"ocmpack: infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
