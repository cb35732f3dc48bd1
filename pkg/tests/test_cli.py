import csv
import io
import itertools
import json
import math
from pathlib import Path

import numpy as np
import pytest

from entengine import builder as b
from entengine import cli

RECIPES = Path(__file__).resolve().parents[1] / "recipes"


def write_json(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def run(argv, capsys):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


# ---------------------------------------------------------------- feasibility


def test_feasibility_exit_codes(capsys, tmp_path):
    code, out, _ = run(["feasibility", RECIPES / "targets" / "ghz3_flipped.json"], capsys)
    assert code == cli.EXIT_OK
    report = json.loads(out)
    assert report["feasible"] and report["hot"] == 0 and report["r"] == [2, 0, 0]
    code, out, _ = run(["feasibility", RECIPES / "targets" / "ghz3_standard.json"], capsys)
    assert code == cli.EXIT_INFEASIBLE and not json.loads(out)["feasible"]
    empty = write_json(tmp_path / "empty.json", {"terms": []})
    assert run(["feasibility", empty], capsys)[0] == cli.EXIT_INPUT
    garbage = tmp_path / "bad.json"
    garbage.write_text("{not json")
    assert run(["feasibility", garbage], capsys)[0] == cli.EXIT_INPUT


@pytest.mark.parametrize("name", ["w3.json", "dicke4_2.json", "cluster4.json"])
def test_feasibility_recipe_targets(capsys, name):
    assert run(["feasibility", RECIPES / "targets" / name], capsys)[0] == cli.EXIT_OK


# ---------------------------------------------------------------- steady


def parse_summary(line):
    return {k: float(v) for k, v in (w.split("=") for w in line.split())}


def test_steady_recipe(capsys, tmp_path):
    code, out, _ = run(["steady", "--config", RECIPES / "steady_ghz3.json", "--out", tmp_path], capsys)
    assert code == cli.EXIT_OK
    vals = parse_summary(out.splitlines()[0])
    assert 0 < vals["p_suc"] < 1 and vals["fidelity"] > 0.99
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["residual"] <= 1e-9 and summary["gme_witness"]
    meta = json.loads((tmp_path / "summary.meta.json").read_text())
    assert {"timestamp", "model", "jump_config", "tolerances", "versions"} <= set(meta)
    assert json.loads((tmp_path / "steady_state.json").read_text())["dim"] == 27


def test_steady_uncoupled_matches_thermal_product(capsys, tmp_path):
    cfg = {"machine": {"family": "ghz", "N": 3}, "couplings": {"g": 0.0},
           "temperatures": {"T_h": 4.0, "T_c": 0.7}}
    code, out, _ = run(["steady", "--config", write_json(tmp_path / "c.json", cfg)], capsys)
    assert code == cli.EXIT_OK
    vals = parse_summary(out)
    # oracle: project the product of single-qutrit Gibbs states by hand
    spec = b.ghz_machine(3)
    states = [b.thermal_state(d1, d2, t) for d1, d2, t in
              zip(spec.energies.delta1, spec.energies.delta2, (4.0, 0.7, 0.7))]
    pops = [np.diag(s).real for s in states]
    # the filter drops level r_k on site k; qubit bit 0/1 maps to the surviving levels in order
    levels = [[m for m in range(3) if m != r] for r in spec.r]
    weight = {bits: np.prod([pops[k][levels[k][bit]] for k, bit in enumerate(bits)])
              for bits in itertools.product((0, 1), repeat=3)}
    p_suc = sum(weight.values())
    # the product state is diagonal, so only the target's populations contribute
    fid = sum(abs(c) ** 2 * weight[tuple(int(ch) for ch in bits)] for bits, c in zip(spec.target.support, spec.target.amplitudes)) / p_suc
    assert math.isclose(vals["p_suc"], p_suc, rel_tol=1e-9)
    assert math.isclose(vals["fidelity"], fid, rel_tol=1e-9)


def test_steady_lindblad_model_flag(capsys):
    code, out, _ = run(["steady", "--model", "lindblad", "--config", RECIPES / "steady_ghz3.json"], capsys)
    assert code == cli.EXIT_OK and parse_summary(out)["fidelity"] > 0.5


def test_steady_capacity_and_input_errors(capsys, tmp_path):
    big = write_json(tmp_path / "big.json", {"machine": {"family": "ghz", "N": 6}})
    assert run(["steady", "--config", big], capsys)[0] == cli.EXIT_CAPACITY
    neg = write_json(tmp_path / "neg.json", {"temperatures": {"T_h": -1}})
    assert run(["steady", "--config", neg], capsys)[0] == cli.EXIT_INPUT
    unknown = write_json(tmp_path / "unk.json", {"colour": "blue"})
    assert run(["steady", "--config", unknown], capsys)[0] == cli.EXIT_INPUT
    badrate = write_json(tmp_path / "rate.json", {"couplings": {"gamma_h": 0}})
    assert run(["steady", "--config", badrate], capsys)[0] == cli.EXIT_INPUT
    assert run(["steady", "--config", tmp_path / "missing.json"], capsys)[0] == cli.EXIT_INPUT


def test_steady_degeneracy_exit(capsys, tmp_path):
    cfg = write_json(tmp_path / "deg.json", {"tolerances": {"degeneracy": 1.0}})
    code, _, err = run(["steady", "--config", cfg], capsys)
    assert code == cli.EXIT_DEGENERATE and "error" in err


# ---------------------------------------------------------------- sweeps


def small_sweep(tmp_path, **extra):
    doc = {"sweep": {"resolution": 5, "refine": False}}
    doc.update(extra)
    return write_json(tmp_path / "sweep.json", doc)


def test_pareto_csv_is_byte_identical(capsys, tmp_path):
    cfg = small_sweep(tmp_path)
    outs = []
    for k in range(2):
        out_dir = tmp_path / f"run{k}"
        assert run(["pareto", "ghz", 2, "--config", cfg, "--out", out_dir], capsys)[0] == cli.EXIT_OK
        outs.append((out_dir / "pareto_ghz2.csv").read_bytes())
        assert (out_dir / "pareto_ghz2.meta.json").exists()
    assert outs[0] == outs[1]
    rows = list(csv.DictReader(io.StringIO(outs[0].decode())))
    assert rows and list(rows[0])[:8] == ["machine", "N", "l", "gamma_h", "gamma_c", "g", "p_suc", "fidelity"]
    p = [float(r["p_suc"]) for r in rows]
    f = [float(r["fidelity"]) for r in rows]
    assert p == sorted(p) and f == sorted(f, reverse=True)


def test_pareto_to_stdout_and_errors(capsys, tmp_path):
    cfg = small_sweep(tmp_path)
    code, out, _ = run(["pareto", "dicke", 3, 1, "--config", cfg], capsys)
    assert code == cli.EXIT_OK and out.startswith("machine,N,l,")
    assert run(["pareto", "ghz", 6, "--config", cfg], capsys)[0] == cli.EXIT_CAPACITY
    assert run(["pareto", "octahedron", 3, "--config", cfg], capsys)[0] == cli.EXIT_INPUT
    assert run(["pareto", "--threads", 0, "--config", cfg], capsys)[0] == cli.EXIT_INPUT


def test_bell_cluster_rows(capsys, tmp_path):
    code, out, _ = run(["bell", "cluster", "--config", small_sweep(tmp_path)], capsys)
    assert code == cli.EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows and list(rows[0]) == ["machine", "p_suc", "F", "bell_name", "value", "lhv_bound"]
    assert all(r["lhv_bound"] == "2" and r["bell_name"] == "cluster" for r in rows)


def test_bell_mermin_rows(capsys, tmp_path):
    code, out, _ = run(["bell", "ghz", 3, "--config", small_sweep(tmp_path)], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == cli.EXIT_OK and all(r["lhv_bound"] == "1" for r in rows)
    assert run(["bell", "dicke", 3, 1, "--config", small_sweep(tmp_path)], capsys)[0] == cli.EXIT_INPUT


def test_tempsweep_grid(capsys, tmp_path):
    cfg = write_json(tmp_path / "t.json", {"sweep": {"T_h": [0.5, "inf"], "T_c": [0.0, 0.2]}})
    code, out, _ = run(["tempsweep", "--config", cfg], capsys)
    assert code == cli.EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [(r["T_h"], r["T_c"]) for r in rows] == [("0.5", "0"), ("0.5", "0.2"), ("inf", "0"), ("inf", "0.2")]
    assert all(r["model"] == "reset" for r in rows)


# ---------------------------------------------------------------- misc


def test_maxpsuc(capsys):
    code, out, _ = run(["maxpsuc", 4], capsys)
    assert code == cli.EXIT_OK and out.strip() == "0.111111111111"
    assert run(["maxpsuc", 1], capsys)[0] == cli.EXIT_INPUT


def test_print_config(capsys):
    code, out, err = run(["--print-config"], capsys)
    assert code == cli.EXIT_OK
    doc = json.loads(out)
    assert set(doc) == set(cli.DEFAULT_CONFIG)
    assert "machine.family" in err


def test_no_command_is_input_error(capsys):
    assert run([], capsys)[0] == cli.EXIT_INPUT


@pytest.mark.parametrize("recipe", sorted(p.name for p in RECIPES.glob("*.json")))
def test_recipes_load(recipe):
    cfg = cli.load_config(str(RECIPES / recipe))
    spec = cli.machine_from_config(cfg)
    assert spec.n <= 5
