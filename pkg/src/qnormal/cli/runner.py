"""Mode drivers and output writers."""

from concurrent.futures import ThreadPoolExecutor
import csv
import io
import json
import logging
import math
import os
from pathlib import Path

import numpy as np

from .. import dynamics as dyn
from .. import lattice as lat
from .. import suppression as sup
from .._jit import backend_name
from ..linalg import EigOptions, eig, expm, norm
from ..qmetric import (
    biorthogonality_error,
    build_q,
    identity_metric,
    q_hermiticity_residual,
    q_normality_residual,
    q_split,
    split_crosscheck,
)
from .config import encode_complex, encode_matrix
from .instances import ALGORITHM, PRNG, RandomSpec, random_instance, random_state

log = logging.getLogger(__name__)


class RunReport(dict):
    """Plain dict with a ``checks`` list and the paths of written files."""

    @property
    def passed(self):
        return all(c["passed"] for c in self.get("checks", []))


def _check(name, value, tolerance, relation="<"):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        ok = False
    elif relation == "<":
        ok = value < tolerance
    elif relation == ">":
        ok = value > tolerance
    else:
        raise ValueError(relation)
    return {"name": name, "value": value, "tolerance": tolerance, "relation": relation, "passed": bool(ok)}


def _eig_opts(cfg):
    return EigOptions(tol_eig=cfg.tolerances.tol_eig, kappa_max=cfg.tolerances.kappa_max)


def _hamiltonian(cfg):
    if cfg.matrix is not None:
        return np.array(cfg.matrix), {"source": "matrix"}
    if cfg.random is not None:
        inst = random_instance(cfg.random)
        return inst.h, {"source": "random", "algorithm": ALGORITHM, "prng": PRNG,
                        "seed": cfg.random.seed, "planted_eigenvalues": [encode_complex(z) for z in inst.eigenvalues],
                        "planted_kappa": inst.kappa}
    spec = _lattice_config(cfg)
    return lat.build_lattice_hamiltonian(spec), {"source": "lattice"}


def _lattice_config(cfg):
    s = cfg.lattice
    return lat.LatticeConfig(n_sites=s.n_sites, spacing=s.spacing, mass=s.mass,
                             v_real=np.array(s.v_real), v_imag=np.array(s.v_imag),
                             hbar=cfg.hbar, boundary=s.boundary)


def _initial_state(cfg, dim):
    if cfg.initial_state is not None:
        return np.array(cfg.initial_state)
    return random_state(dim, cfg.seed)


def _spectrum(d, a):
    return {
        "eigenvalues": [encode_complex(z) for z in d.eigenvalues],
        "kappa": d.kappa,
        "B": a.b,
        "gap": None if a.covers_all else a.gap,
        "eps_a": a.eps_a,
        "dominant_indices": list(a.indices),
        "dominant_size": len(a.indices),
    }


def run_decompose(cfg, report):
    h, source = _hamiltonian(cfg)
    report["hamiltonian"] = source
    d = eig(h, _eig_opts(cfg))
    qm = build_q(d)
    a = sup.dominant_subset(d.eigenvalues, cfg.tolerances.eps_a)
    split = q_split(d, qm)
    h_eff = sup.build_h_eff(d, a)
    report.update(_spectrum(d, a))
    report["diagnostics"] = list(d.diagnostics)
    report["q"] = encode_matrix(qm.q)
    report["h_qh"] = encode_matrix(split.h_qh)
    report["h_qa"] = encode_matrix(split.h_qa)
    report["h_eff"] = encode_matrix(h_eff)
    report["checks"] += [
        _check("reconstruction_residual", d.residual, cfg.tolerances.tol_eig),
        _check("biorthogonality", biorthogonality_error(d, qm), 1e-8),
        _check("q_normality_residual", q_normality_residual(h, qm), 1e-8),
        _check("split_crosscheck", split_crosscheck(h, qm, split), 1e-10),
        _check("h_eff_q_hermiticity", q_hermiticity_residual(h_eff, qm) if norm(h_eff) > 0 else 0.0, 1e-9),
    ]
    report["identity_metric_normality"] = q_normality_residual(h, identity_metric(d.dim))
    return None


def _trace_rows(trace):
    rows = []
    for k, t in enumerate(trace.times):
        dist = None if trace.distances is None else float(trace.distances[k])
        expv = None if trace.expectations is None else complex(trace.expectations[k])
        rows.append((float(t), trace.states[k], float(trace.norms[k]), dist, expv))
    return rows


def run_evolve(cfg, report):
    h, source = _hamiltonian(cfg)
    report["hamiltonian"] = source
    d = eig(h, _eig_opts(cfg))
    qm = build_q(d)
    split = q_split(d, qm)
    a = sup.dominant_subset(d.eigenvalues, cfg.tolerances.eps_a)
    report.update(_spectrum(d, a))
    start = dyn.normalize(qm, _initial_state(cfg, d.dim))
    trace = dyn.integrate_modified_schrodinger(
        split, qm, start, cfg.times.t_span, cfg.times.dt, cfg.hbar,
        stride=cfg.times.stride, observable=cfg.observable, reference=d)
    report["samples"] = len(trace)
    report["checks"] += [
        _check("max_distance_to_exact", float(trace.distances.max()), 1e-6),
        _check("q_norm_drift", float(np.abs(trace.norms - 1.0).max()), 1e-6),
    ]
    return _trace_rows(trace)


def _time_grid(cfg):
    step = cfg.times.dt * cfg.times.stride
    n = int(math.floor(cfg.times.t_span / step + 1e-9))
    return step * np.arange(n + 1)


def run_suppress(cfg, report):
    h, source = _hamiltonian(cfg)
    report["hamiltonian"] = source
    d = eig(h, _eig_opts(cfg))
    qm = build_q(d)
    a = sup.dominant_subset(d.eigenvalues, cfg.tolerances.eps_a)
    report.update(_spectrum(d, a))
    psi0 = _initial_state(cfg, d.dim)
    trace = sup.convergence_trace(d, qm, a, psi0, _time_grid(cfg), cfg.hbar)
    h_mat = np.asarray(d.h)
    trace.expectations = np.array([dyn.expectation(qm, s, h_mat) for s in trace.states])
    report["fitted_rate"] = trace.rate
    if a.covers_all:
        report["expected_rate"] = None
        report["checks"].append(_check("max_distance", float(trace.distances.max()), 1e-12))
    else:
        expected = -a.gap / cfg.hbar
        report["expected_rate"] = expected
        rel = None if trace.rate is None else abs(trace.rate - expected) / abs(expected)
        report["checks"].append(_check("rate_relative_error", rel, 0.05))
    return _trace_rows(trace)


def run_historian(cfg, report):
    h, source = _hamiltonian(cfg)
    report["hamiltonian"] = source
    d = eig(h, _eig_opts(cfg))
    qm = build_q(d)
    a = sup.dominant_subset(d.eigenvalues, cfg.tolerances.eps_a)
    report.update(_spectrum(d, a))
    psi0 = _initial_state(cfg, d.dim)
    ts = list(cfg.times.t_values) or [cfg.times.t]
    reports, violations = sup.historian_sweep(d, qm, a, psi0, cfg.times.t1, ts, cfg.hbar)
    report["t1"] = cfg.times.t1
    report["historian"] = [
        {"t": r.t, "fidelity": r.fidelity, "q_distance": r.q_distance,
         "dominant_weight": r.dominant_weight}
        for r in reports
    ]
    report["subspace_fraction"] = reports[0].subspace_fraction
    report["monotonicity_violations"] = [list(v) for v in violations]
    h_mat = np.asarray(d.h)
    rows = []
    for r in reports:
        psi = r.psi_historian.amplitudes
        rows.append((r.t, psi, 1.0, r.q_distance, dyn.expectation(qm, psi, h_mat)))
    return rows


def run_lattice(cfg, report):
    spec = cfg.lattice
    lc = _lattice_config(cfg)
    length = lc.spacing * lc.n_sites
    center = spec.packet_center if spec.packet_center is not None else 0.5 * (length - lc.spacing)
    width = spec.packet_width if spec.packet_width is not None else length / 16.0
    psi0 = cfg.initial_state if cfg.initial_state is not None else \
        lat.gaussian_packet(lc, center, width, spec.packet_k0)
    dt = cfg.times.dt
    n_samples = int(math.floor(cfg.times.t_span / dt + 1e-9)) + 1
    if not np.any(lc.v_imag):
        h = lat.build_lattice_hamiltonian(lc)
        psi0 = np.asarray(psi0) / np.linalg.norm(psi0)
        trace = lat.propagate_trace(expm(-1j * h * dt / lc.hbar), psi0, dt, n_samples)
        report["regime"] = "hermitian"
        report["checks"] += [
            _check("continuity_residual", lat.continuity_residual(trace, None, lc), 1e-5),
            _check("total_mass_rate", lat.total_mass_rate(trace, None, lc), 1e-8),
        ]
        qm = None
        h_obs = h
    else:
        res = lat.run_pipeline(lc, psi0, dt, n_samples, _eig_opts(cfg))
        trace = res.trace
        report["regime"] = "non-hermitian pipeline"
        report.update(_spectrum(res.decomposition, res.subset))
        report["h_eff_off_tridiagonal_fraction"] = res.locality
        report["checks"].append(_check("mass_drift", res.mass_drift, 1e-8))
        qm = res.metric
        h_obs = res.h_eff
    trace.expectations = np.array([dyn.q_inner(qm, s, h_obs @ s) for s in trace.states])
    keep = np.arange(0, len(trace), cfg.times.stride)
    rows = _trace_rows(trace)
    return [rows[k] for k in keep]


def _sweep_one(args):
    index, seed, sweep, opts = args
    rng = np.random.Generator(np.random.PCG64(seed))
    dim = int(rng.integers(sweep.dim_min, sweep.dim_max + 1))
    inst = random_instance(RandomSpec(dim=dim, seed=seed, re_range=sweep.re_range,
                                      im_range=sweep.im_range, min_separation=sweep.min_separation))
    d = eig(inst.h, opts)
    qm = build_q(d)
    split = q_split(d, qm)
    a = sup.dominant_subset(d.eigenvalues)
    h_eff = sup.build_h_eff(d, a)
    return {
        "index": index,
        "seed": seed,
        "dim": dim,
        "kappa": d.kappa,
        "biorthogonality": biorthogonality_error(d, qm),
        "q_normality": q_normality_residual(inst.h, qm),
        "identity_normality": q_normality_residual(inst.h, identity_metric(dim)),
        "split_crosscheck": split_crosscheck(inst.h, qm, split),
        "h_eff_q_hermiticity": q_hermiticity_residual(h_eff, qm),
    }


def sweep_threads():
    raw = os.environ.get("QNORMAL_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_sweep(cfg, report):
    sw = cfg.sweep
    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(cfg.seed).spawn(sw.count)]
    jobs = [(i, s, sw, _eig_opts(cfg)) for i, s in enumerate(seeds)]
    with ThreadPoolExecutor(max_workers=sweep_threads()) as pool:
        rows = list(pool.map(_sweep_one, jobs))
    report["seeding"] = "numpy.random.SeedSequence(seed).spawn(count), first uint32 word per child"
    report["algorithm"] = ALGORITHM
    report["prng"] = PRNG
    report["instances"] = len(rows)
    worst = {k: max(r[k] for r in rows) for k in
             ("biorthogonality", "q_normality", "split_crosscheck", "h_eff_q_hermiticity")}
    frac = sum(r["identity_normality"] > 1e-3 for r in rows) / len(rows)
    report["worst"] = worst
    report["identity_normality_fraction_above_1e-3"] = frac
    report["checks"] += [
        _check("biorthogonality", worst["biorthogonality"], 1e-8),
        _check("q_normality_residual", worst["q_normality"], 1e-8),
        _check("split_crosscheck", worst["split_crosscheck"], 1e-10),
        _check("h_eff_q_hermiticity", worst["h_eff_q_hermiticity"], 1e-9),
    ]
    return rows


DRIVERS = {
    "decompose": run_decompose,
    "evolve": run_evolve,
    "suppress": run_suppress,
    "historian": run_historian,
    "lattice": run_lattice,
    "sweep": run_sweep,
}


def run(cfg):
    """Run one scenario.  Returns ``(report, rows)``; nothing is written."""
    report = RunReport(config=cfg.echo(), backend=backend_name(), checks=[])
    rows = DRIVERS[cfg.mode](cfg, report)
    report["passed"] = report.passed
    return report, rows


def _num(x):
    if x is None:
        return ""
    return repr(float(x))


def trace_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    dim = len(rows[0][1]) if rows else 0
    header = ["t"]
    for i in range(1, dim + 1):
        header += [f"re_psi_{i}", f"im_psi_{i}"]
    header += ["q_norm", "distance", "expectation_re", "expectation_im"]
    w.writerow(header)
    for t, psi, qn, dist, expv in rows:
        line = [_num(t)]
        for z in psi:
            line += [_num(z.real), _num(z.imag)]
        line += [_num(qn), _num(dist)]
        line += ["", ""] if expv is None else [_num(expv.real), _num(expv.imag)]
        w.writerow(line)
    return buf.getvalue()


def trace_json(rows):
    data = [{"t": t, "psi": [encode_complex(z) for z in psi], "q_norm": qn, "distance": dist,
             "expectation": None if expv is None else encode_complex(expv)}
            for t, psi, qn, dist, expv in rows]
    return json.dumps(data, indent=1) + "\n"


def table_csv(rows):
    buf = io.StringIO()
    keys = list(rows[0])
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(keys)
    for r in rows:
        w.writerow([v if isinstance(v, int) else _num(v) for v in (r[k] for k in keys)])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return encode_complex(obj)
    return obj


def report_json(report):
    return json.dumps(_jsonable(dict(report)), indent=2) + "\n"


def write_outputs(cfg, report, rows):
    """Write ``report.json`` and the trace (or sweep table) under ``cfg.path``."""
    out = Path(cfg.path)
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    if rows:
        if cfg.mode == "sweep":
            name = "sweep." + cfg.format
            text = table_csv(rows) if cfg.format == "csv" else json.dumps(_jsonable(rows), indent=1) + "\n"
        else:
            name = "trace." + cfg.format
            text = trace_csv(rows) if cfg.format == "csv" else trace_json(rows)
        (out / name).write_text(text, encoding="utf-8", newline="\n")
        files["trace"] = name
    report["files"] = files
    (out / "report.json").write_text(report_json(report), encoding="utf-8", newline="\n")
    return files
