import csv
import io
import json
from fractions import Fraction

import pytest

from ocmpack import cli, solution_io
from ocmpack.model import baseline
from ocmpack.workload import SchemaError, load_workload, parse_workload, shipped_names

SHIPPED = ["cnv-w1a1", "cnv-w2a2", "rn50-w1a2", "rn50-w2a2"]


def tiny_doc(**over):
    doc = {
        "name": "tiny",
        "ram": {"capacity_bits": 18432, "aspects": [[18, 1024]], "ports": 2, "f_max_mhz": 400},
        "clock": {"f_compute_mhz": 100, "f_memory_mhz": 200},
        "islands": ["a", "b"],
        "layers": [
            {"name": "l0", "k": 3, "c_in": 16, "c_out": 16, "w_bits": 1, "pe": 4, "simd": 4, "island": "a"},
            {"name": "l1", "k": 3, "c_in": 16, "c_out": 32, "w_bits": 2, "pe": 8, "simd": 8, "island": "b"},
            {"name": "l2", "k": 1, "c_in": 32, "c_out": 10, "w_bits": 1, "pe": 2, "simd": 8, "island": "b"},
            {"name": "l3", "k": 1, "c_in": 64, "c_out": 64, "w_bits": 1, "pe": 4, "simd": 4, "island": "a"},
        ],
    }
    doc.update(over)
    return doc


@pytest.fixture
def tiny(tmp_path):
    p = tmp_path / "tiny.json"
    p.write_text(json.dumps(tiny_doc()))
    return str(p)


def test_shipped_workloads_load():
    assert shipped_names() == SHIPPED
    for name in SHIPPED:
        spec = load_workload(name)
        assert spec.layers and spec.provenance
        assert all(l.island in spec.islands for l in spec.layers)
    assert load_workload("rn50-w1a2").islands == ("slr0", "slr1", "slr2", "slr3")


@pytest.mark.parametrize("mutate,path", [
    (lambda d: d["layers"][0].update(pe=3), "layers[0]"),
    (lambda d: d["layers"][1].pop("simd"), "layers[1].simd"),
    (lambda d: d["layers"][2].update(k="3"), "layers[2].k"),
    (lambda d: d["layers"][0].update(island="z"), "layers[0].island"),
    (lambda d: d["ram"].update(aspects=[[18]]), "ram.aspects[0]"),
    (lambda d: d["clock"].update(f_memory_mhz=50), "clock"),
    (lambda d: d.pop("name"), "name"),
    (lambda d: d["layers"].append(dict(d["layers"][0])), "layers[4].name"),
])
def test_schema_errors_name_the_field(mutate, path):
    doc = tiny_doc()
    mutate(doc)
    with pytest.raises(SchemaError) as e:
        parse_workload(doc)
    assert e.value.path == path and path in str(e.value)


def test_single_island_relabels_everything():
    spec = parse_workload(tiny_doc()).single_island()
    assert spec.islands == ("0",) and {b.island for b in spec.buffers()} == {"0"}


def test_derive_outputs(tiny, tmp_path, capsys):
    assert cli.main(["derive", tiny]) == 0
    out = capsys.readouterr().out
    assert "l0" in out and "baseline efficiency" in out
    assert cli.main(["derive", tiny, "--format", "json", "--out", str(tmp_path / "d.json")]) == 0
    doc = json.loads((tmp_path / "d.json").read_text())
    spec = load_workload(tiny)
    n, e = baseline(spec.buffers(), spec.ram)
    assert doc["n_ram"] == n and Fraction(doc["efficiency"]) == e
    assert cli.main(["derive", tiny, "--format", "csv"]) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0][0] == "layer" and len(rows) == 5


def test_derive_empty_layer_list(tmp_path, capsys):
    p = tmp_path / "empty.json"
    p.write_text(json.dumps(tiny_doc(layers=[])))
    assert cli.main(["derive", str(p)]) == 0
    assert "0 RAMs" in capsys.readouterr().out


def test_exit_codes(tiny, tmp_path, capsys):
    sol = str(tmp_path / "s.json")
    assert cli.main(["pack", tiny, "--out", sol, "--generations", "20"]) == 0
    # unknown flag is a usage error
    with pytest.raises(SystemExit) as e:
        cli.main(["pack", tiny, "--bogus"])
    assert e.value.code == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["derive", str(bad)]) == 3
    assert cli.main(["verify", str(bad)]) == 3
    assert cli.main(["derive", "no-such-workload"]) == 3
    # bin height beyond what the clock ratio allows
    assert cli.main(["pack", tiny, "--height", "4", "--rf", "3/2"]) == 4
    assert "h_b=4" in capsys.readouterr().err
    assert cli.main(["pack", tiny, "--rf", "1/2"]) == 4
    assert cli.main(["pack", tiny, "--rf", "5"]) == 4  # memory clock above f_max
    assert cli.main(["verify", sol]) == 0


def test_verify_fails_when_clock_drops(tmp_path, capsys):
    layer = {"k": 1, "c_in": 16, "c_out": 16, "w_bits": 1, "pe": 1, "simd": 1}
    doc = tiny_doc(islands=["0"], layers=[dict(layer, name=f"q{i}") for i in range(4)])
    spec, sol = tmp_path / "quad.json", tmp_path / "s.json"
    spec.write_text(json.dumps(doc))
    assert cli.main(["pack", str(spec), "--out", str(sol)]) == 0
    assert solution_io.loads(sol.read_text()).n_ram == 1
    assert cli.main(["verify", str(sol), "--rf", "3/2", "--cycles", "300"]) == 5
    assert "0/1 bins" in capsys.readouterr().out
    assert cli.main(["verify", str(sol), "--rf", "3/2", "--cycles", "0"]) == 2


def test_solution_round_trip_and_determinism(tiny, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert cli.main(["pack", tiny, "--out", str(p), "--seed", "4", "--generations", "30", "--schedules",
                         "--format", "csv"]) == 0
    assert a.read_bytes() == b.read_bytes()
    text = a.read_text()
    sol = solution_io.loads(text)
    assert solution_io.dumps(sol) == text
    assert solution_io.check(sol) == []
    doc = json.loads(text)
    assert doc["format"] == "ocmpack-solution/1"
    assert Fraction(doc["efficiency"]) == sol.efficiency


def test_stale_totals_rejected(tiny, tmp_path):
    p = tmp_path / "s.json"
    cli.main(["pack", tiny, "--out", str(p), "--engine", "greedy"])
    doc = json.loads(p.read_text())
    doc["n_ram"] += 1
    p.write_text(json.dumps(doc))
    with pytest.raises(SchemaError):
        solution_io.loads(p.read_text())
    assert cli.main(["verify", str(p)]) == 3


def test_report_rows_and_island_totals(tiny, tmp_path, capsys):
    sol = tmp_path / "s.json"
    cli.main(["pack", tiny, "--out", str(sol), "--generations", "20"])
    capsys.readouterr()
    assert cli.main(["report", tiny, str(sol), "--format", "csv", "--f-base", "100", "--cycles", "200"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert list(rows[0]) == ["workload", "engine", "h_b", "n_ram", "efficiency_pct", "delta_fps_pct", "verified"]
    assert [r["workload"] for r in rows] == ["tiny", "tiny[a]", "tiny[b]", "tiny"]
    assert rows[0]["engine"] == "direct" and rows[0]["h_b"] == ""
    assert int(rows[1]["n_ram"]) + int(rows[2]["n_ram"]) == int(rows[3]["n_ram"])
    assert rows[3]["verified"] == "true" and rows[3]["delta_fps_pct"] == "0.0"
    assert int(rows[3]["n_ram"]) <= int(rows[0]["n_ram"])
    assert cli.main(["report", str(sol), "--no-verify", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc[-1]["verified"] is None


def test_pack_engines_agree_on_coverage(tiny, tmp_path):
    assert cli.main(["pack", tiny, "--engine", "exhaustive", "--single-island"]) == 4
    for engine in ("greedy", "ga"):
        p = tmp_path / f"{engine}.json"
        assert cli.main(["pack", tiny, "--engine", engine, "--single-island", "--out", str(p)]) == 0
        sol = solution_io.loads(p.read_text())
        assert [s.island for s in sol.islands] == ["0"]
        assert sol.total_bits == sum(b.total_param_bits for b in sol.buffers)
