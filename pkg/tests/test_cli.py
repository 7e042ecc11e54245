import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from qnormal.cli import main, parse_config
from qnormal.cli.instances import ALGORITHM, RandomSpec, random_instance, random_state
from qnormal.cli.runner import trace_csv
from qnormal.errors import ParseError, SpecInfeasible, ValidationError

MATRIX = [[[1, 0.5], [1, -1]], [0, "2-0.5j"]]


def write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return str(path)


def run_cli(args, capsys):
    code = main(args)
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_complex_forms():
    cfg = parse_config(json.dumps({"hamiltonian": {"matrix": MATRIX}, "initial_state": [1, "0+2j"]}),
                       {"mode": "evolve"})
    assert cfg.matrix[0, 0] == 1 + 0.5j and cfg.matrix[1, 1] == 2 - 0.5j
    assert np.array_equal(cfg.initial_state, [1, 2j])


def test_parse_error_reports_line():
    with pytest.raises(ParseError) as exc:
        parse_config('{\n  "mode": "evolve",\n  oops\n}')
    assert exc.value.line == 3


def test_unknown_keys_rejected():
    with pytest.raises(ParseError, match="colour"):
        parse_config(json.dumps({"mode": "evolve", "colour": 1}))
    with pytest.raises(ParseError) as exc:
        parse_config(json.dumps({"mode": "evolve", "times": {"dtt": 1}}))
    assert exc.value.field == "times"


@pytest.mark.parametrize("doc,field", [
    ({"times": {"dt": -1}}, "times.dt"),
    ({"times": {"stride": 0}}, "times.stride"),
    ({"hbar": 0}, "hbar"),
    ({"tolerances": {"tol_eig": "x"}}, "tolerances.tol_eig"),
    ({"initial_state": [1, 2, 3]}, "initial_state"),
    ({"hamiltonian": {"matrix": [[1, 2]]}}, "hamiltonian.matrix"),
    ({"times": {"t1": 5, "t": 2}}, "times.t"),
])
def test_validation_names_field(doc, field):
    base = {"mode": "evolve", "hamiltonian": {"matrix": MATRIX}}
    base.update(doc)
    with pytest.raises(ValidationError) as exc:
        parse_config(json.dumps(base))
    assert exc.value.field == field


def test_overrides_win():
    cfg = parse_config(json.dumps({"mode": "evolve", "seed": 3, "hamiltonian": {"random": {"dim": 3}}}),
                       {"mode": "decompose", "seed": 9, "hbar": 2.0, "format": "csv"})
    assert (cfg.mode, cfg.seed, cfg.hbar, cfg.format) == ("decompose", 9, 2.0, "csv")
    assert cfg.random.seed == 9


def test_random_instance_is_reproducible():
    spec = RandomSpec(dim=5, seed=42)
    a, b = random_instance(spec), random_instance(spec)
    assert np.array_equal(a.h, b.h) and a.kappa <= 1e4
    lam = a.eigenvalues
    gaps = np.abs(lam[:, None] - lam[None, :]) + np.eye(5) * 10
    assert gaps.min() >= 0.1
    assert np.array_equal(random_state(4, 7), random_state(4, 7))
    assert not np.array_equal(random_state(4, 7), random_state(4, 7, stream=2))
    assert ALGORITHM == "planted-spectrum/v1"


@pytest.mark.parametrize("spec", [
    RandomSpec(dim=3, re_range=(0, 0.01), im_range=(0, 0.01), min_separation=1.0),
    RandomSpec(dim=500, min_separation=0.5),
])
def test_infeasible_specs(spec):
    with pytest.raises(SpecInfeasible):
        random_instance(spec)


def test_decompose_report(tmp_path, capsys):
    cfg = write(tmp_path, {"hamiltonian": {"matrix": MATRIX}})
    code, out, _ = run_cli(["decompose", "--config", cfg], capsys)
    report = json.loads(out)
    assert code == 0 and report["passed"]
    lam = [complex(*z) for z in report["eigenvalues"]]
    assert np.allclose(lam, [1 + 0.5j, 2 - 0.5j])


def test_evolve_writes_csv(tmp_path, capsys):
    cfg = write(tmp_path, {"hamiltonian": {"matrix": MATRIX}, "initial_state": [1, 0.2],
                           "times": {"t_span": 1, "dt": 0.01, "stride": 10}})
    out_dir = tmp_path / "out"
    code, _, _ = run_cli(["evolve", "--config", cfg, "--out", str(out_dir), "--format", "csv"], capsys)
    assert code == 0
    rows = list(csv.reader((out_dir / "trace.csv").open()))
    assert rows[0][:3] == ["t", "re_psi_1", "im_psi_1"]
    assert len(rows) == 12
    assert b"\r\n" not in (out_dir / "trace.csv").read_bytes()


def test_trace_csv_round_trips_floats():
    rows = [(0.1, np.array([1 / 3 + 0.1j]), 1.0, None, None)]
    line = trace_csv(rows).splitlines()[1].split(",")
    assert float(line[0]) == 0.1 and float(line[1]) == 1 / 3 and float(line[2]) == 0.1
    assert line[4:] == ["", "", ""]


def test_exit_code_for_bad_input(tmp_path, capsys):
    cfg = write(tmp_path, '{"mode": ')
    code, _, err = run_cli(["evolve", "--config", cfg], capsys)
    assert code == 2 and "line 1" in err
    code, _, _ = run_cli(["evolve", "--config", str(tmp_path / "missing.json")], capsys)
    assert code == 2


def test_exit_code_for_numerical_failure(tmp_path, capsys):
    cfg = write(tmp_path, {"hamiltonian": {"matrix": [[1, 1], [0, 1]]}})
    code, _, err = run_cli(["decompose", "--config", cfg], capsys)
    assert code == 3 and "NonDiagonalizable" in err


def test_strict_exit_code(tmp_path, capsys):
    doc = {"hamiltonian": {"lattice": {"n_sites": 16, "packet": {"center": 6, "width": 1.0, "k0": 1.5}}},
           "times": {"t_span": 2, "dt": 0.2, "stride": 1}}
    cfg = write(tmp_path, doc)
    assert run_cli(["lattice", "--config", cfg], capsys)[0] == 0
    assert run_cli(["lattice", "--config", cfg, "--strict"], capsys)[0] == 1


def test_reruns_are_byte_identical(tmp_path, capsys):
    cfg = write(tmp_path, {"hamiltonian": {"random": {"dim": 4}}, "seed": 5,
                           "times": {"t_span": 3, "dt": 0.01, "stride": 20, "t_values": [2, 3]}})
    out = tmp_path / "out"
    snapshots = []
    for _ in range(2):
        code, stdout, _ = run_cli(["historian", "--config", cfg, "--out", str(out)], capsys)
        assert code == 0
        snapshots.append((stdout, {p.name: p.read_bytes() for p in sorted(out.iterdir())}))
    assert snapshots[0] == snapshots[1]


def test_module_entry_point(tmp_path):
    cfg = write(tmp_path, {"hamiltonian": {"matrix": MATRIX}})
    proc = subprocess.run([sys.executable, "-m", "qnormal", "decompose", "--config", cfg],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and json.loads(proc.stdout)["config"]["mode"] == "decompose"


def test_decompose_hand_example(tmp_path, capsys):
    cfg = write(tmp_path, {"hamiltonian": {"matrix": [[1, 1], [0, 2]]}})
    code, out, _ = run_cli(["decompose", "--config", cfg], capsys)
    report = json.loads(out)
    assert code == 0
    assert np.allclose([complex(*z) for z in report["eigenvalues"]], [1, 2])
    q = np.array([[complex(*z) for z in row] for row in report["q"]])
    assert np.allclose(q, [[1, -1], [-1, 3]], atol=1e-12)
    checks = {c["name"]: c for c in report["checks"]}
    assert checks["q_normality_residual"]["value"] < 1e-12
    assert all("tolerance" in c for c in report["checks"])


def test_defaults_for_minimal_config():
    cfg = parse_config(json.dumps({"mode": "decompose", "hamiltonian": {"matrix": [[1, 0], [0, 2]]}}))
    assert cfg.hbar == 1.0 and cfg.times.dt == 1e-3 and cfg.tolerances.kappa_max == 1e8
    assert cfg.format == "json" and cfg.path is None and not cfg.strict


def test_suppress_and_historian_reports(tmp_path, capsys):
    doc = {"hamiltonian": {"matrix": MATRIX}, "initial_state": [1, 0.2],
           "times": {"t_span": 15, "dt": 0.1, "stride": 1, "t1": 2, "t": 2}}
    cfg = write(tmp_path, doc)
    code, out, _ = run_cli(["suppress", "--config", cfg], capsys)
    assert code == 0 and abs(json.loads(out)["fitted_rate"] + 1.0) < 0.05
    code, out, _ = run_cli(["historian", "--config", cfg], capsys)
    assert code == 0 and json.loads(out)["historian"][0]["fidelity"] == pytest.approx(1.0, abs=1e-12)


def test_planted_round_trip():
    from qnormal import eig

    inst = random_instance(RandomSpec(dim=4, seed=1, re_range=(0, 1), im_range=(0, 1)))
    lam = eig(inst.h).eigenvalues
    assert max(min(abs(z - w) for w in inst.eigenvalues) for z in lam) < 1e-8
