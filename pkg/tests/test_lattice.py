import numpy as np
import pytest

from qnormal import eig
from qnormal.errors import DimensionMismatch, GridTooCoarse, ValidationError
from qnormal.lattice import (
    LatticeConfig,
    build_lattice_hamiltonian,
    continuity_residual,
    current,
    density,
    density_current,
    dirichlet_spectrum,
    gaussian_packet,
    mass_drift,
    off_tridiagonal_fraction,
    plane_wave,
    propagate_trace,
    run_pipeline,
    total_mass_rate,
)
from qnormal.linalg import expm
from qnormal.qmetric import build_q, identity_metric


def free_trace(cfg, psi0, dt, n):
    step = expm(-1j * build_lattice_hamiltonian(cfg) * dt / cfg.hbar)
    return propagate_trace(step, psi0, dt, n)


def test_config_validation():
    with pytest.raises(ValidationError, match="n_sites"):
        LatticeConfig(n_sites=2)
    with pytest.raises(ValidationError, match="spacing"):
        LatticeConfig(n_sites=8, spacing=0.0)
    with pytest.raises(ValidationError, match="boundary"):
        LatticeConfig(n_sites=8, boundary="open")
    with pytest.raises(ValidationError, match="v_imag"):
        LatticeConfig(n_sites=8, v_imag=np.zeros(3))
    cfg = LatticeConfig(n_sites=4, v_real=1.5)
    assert np.array_equal(cfg.v_real, np.full(4, 1.5))


def test_hamiltonian_structure():
    cfg = LatticeConfig(n_sites=5, spacing=0.5, mass=2.0, v_imag=np.linspace(0, 1, 5))
    h = build_lattice_hamiltonian(cfg)
    t = 1 / (2 * 2.0 * 0.25)
    assert h[0, 1] == -t and h[1, 0] == -t and h[0, 4] == 0
    assert np.allclose(np.diag(h), 2 * t + 1j * np.linspace(0, 1, 5))
    per = build_lattice_hamiltonian(LatticeConfig(n_sites=5, boundary="periodic"))
    assert per[0, 4] == per[4, 0] == -0.5


def test_dirichlet_spectrum_closed_form():
    cfg = LatticeConfig(n_sites=12, spacing=0.3, mass=0.7)
    d = eig(build_lattice_hamiltonian(cfg))
    assert np.allclose(np.sort(d.eigenvalues.real), dirichlet_spectrum(cfg), atol=1e-12)
    assert np.abs(d.eigenvalues.imag).max() < 1e-12


def test_density_examples():
    assert np.allclose(density(identity_metric(2), [0, 1]), [0, 1])
    d = eig(np.array([[1.0, 1.0], [0.0, 2.0]]))
    qm = build_q(d)
    psi = np.array([0.3, 1.0j])
    assert density(qm, psi).sum() == pytest.approx(np.vdot(psi, qm.q @ psi).real)
    with pytest.raises(DimensionMismatch):
        density(qm, [1, 0, 0])


def test_plane_wave_current():
    n, a, m, hbar = 16, 0.5, 1.3, 0.8
    cfg = LatticeConfig(n_sites=n, spacing=a, mass=m, hbar=hbar, boundary="periodic")
    k = 2 * np.pi * 3 / (n * a)
    psi = plane_wave(cfg, k)
    j, imag = current(psi, psi, cfg, return_imag=True)
    assert np.allclose(j, hbar * np.sin(k * a) / (m * a), atol=1e-13)
    assert imag < 1e-14


def test_dirichlet_walls_carry_no_current():
    cfg = LatticeConfig(n_sites=8)
    dc = density_current(None, gaussian_packet(cfg, 3.5, 1.0, 0.7), cfg)
    assert dc.current[0] == 0 and dc.current[-1] == 0
    assert dc.current.shape == (9,)


def test_real_packet_has_no_current():
    cfg = LatticeConfig(n_sites=10)
    assert np.allclose(current(gaussian_packet(cfg, 4.5, 1.5), gaussian_packet(cfg, 4.5, 1.5), cfg), 0)


def test_gaussian_packet_is_normalized():
    cfg = LatticeConfig(n_sites=32, spacing=0.25)
    assert np.linalg.norm(gaussian_packet(cfg, 4.0, 0.5, 2.0)) == pytest.approx(1.0)


def test_free_evolution_obeys_continuity():
    cfg = LatticeConfig(n_sites=32, spacing=0.5)
    tr = free_trace(cfg, gaussian_packet(cfg, 8.0, 2.0, 0.5), 1e-3, 200)
    assert continuity_residual(tr, None, cfg) < 1e-5
    assert total_mass_rate(tr, None, cfg) < 1e-10


def test_periodic_continuity_includes_edges():
    cfg = LatticeConfig(n_sites=24, boundary="periodic")
    tr = free_trace(cfg, gaussian_packet(cfg, 2.0, 2.0, 0.4), 1e-3, 100)
    assert continuity_residual(tr, None, cfg) < 1e-5


def test_continuity_needs_three_samples():
    cfg = LatticeConfig(n_sites=8)
    with pytest.raises(GridTooCoarse):
        continuity_residual(free_trace(cfg, gaussian_packet(cfg, 4, 1), 0.1, 2), None, cfg)


def test_non_hermitian_pipeline_conserves_q_mass():
    n = 24
    cfg = LatticeConfig(n_sites=n, v_imag=0.2 * np.exp(-((np.arange(n) - 12.0) ** 2) / 8))
    res = run_pipeline(cfg, gaussian_packet(cfg, 8.0, 2.0, 0.5), 0.01, 100)
    assert res.mass_drift < 1e-8
    assert res.subset.indices and not res.subset.covers_all
    assert 0 <= res.locality <= 1
    assert mass_drift(res.trace, res.metric) == res.mass_drift


def test_off_tridiagonal_fraction():
    assert off_tridiagonal_fraction(np.eye(4)) == 0.0
    m = np.zeros((4, 4))
    m[0, 3] = 1.0
    assert off_tridiagonal_fraction(m) == 1.0
    assert off_tridiagonal_fraction(m, periodic=True) == 0.0


def test_small_lattice_examples():
    cfg = LatticeConfig(n_sites=3, spacing=0.5, mass=2.0, hbar=1.5)
    h = build_lattice_hamiltonian(cfg)
    t = 1.5 ** 2 / (2 * 2.0 * 0.25)
    assert np.allclose(h, [[2 * t, -t, 0], [-t, 2 * t, -t], [0, -t, 2 * t]])
    assert np.allclose(np.diag(h), 1.5 ** 2 / (2.0 * 0.25))
    herm = build_lattice_hamiltonian(LatticeConfig(n_sites=6, v_real=np.arange(6.0)))
    assert np.array_equal(herm, herm.conj().T)


def test_two_site_density_toy():
    d = eig(np.array([[1.0, 1.0], [0.0, 2.0]]))
    qm = build_q(d)
    assert np.allclose(density(qm, np.array([1.0, 1.0]) / np.sqrt(2)), [0.0, 1.0], atol=1e-14)


def test_density_sums_to_one_for_unit_states():
    from qnormal.dynamics import normalize

    n = 10
    cfg = LatticeConfig(n_sites=n, v_imag=np.linspace(-0.2, 0.3, n))
    qm = build_q(eig(build_lattice_hamiltonian(cfg)))
    psi = normalize(qm, gaussian_packet(cfg, 4.0, 1.5, 0.4))
    assert density(qm, psi).sum() == pytest.approx(1.0, abs=1e-12)


def test_ground_state_is_current_free_and_stationary():
    cfg = LatticeConfig(n_sites=20)
    d = eig(build_lattice_hamiltonian(cfg))
    k = int(np.argmin(d.eigenvalues.real))
    ground = d.vector(k)
    assert np.abs(current(ground, ground, cfg)).max() < 1e-14
    tr = free_trace(cfg, ground, 0.05, 40)
    assert continuity_residual(tr, None, cfg) < 1e-10
