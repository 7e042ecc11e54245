"""One-dimensional lattice Hamiltonians, Q-weighted density and current.

Sites sit at ``x_j = j * spacing``.  Currents live on links: entry ``k`` of
a current array is the flux across the link between sites ``k - 1`` and
``k``, so an ``n``-site lattice has ``n + 1`` entries.  Dirichlet walls carry
zero flux; with periodic boundaries the first and last entries are the same
wrap-around link.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .dynamics import EvolutionTrace, normalize
from .errors import DimensionMismatch, GridTooCoarse, ValidationError
from .linalg import EigOptions, eig, norm
from .qmetric import build_q, q_inner
from .suppression import build_h_eff, dominant_subset, h_eff_propagator

DIRICHLET = "dirichlet"
PERIODIC = "periodic"


@dataclass
class LatticeConfig:
    n_sites: int
    spacing: float = 1.0
    mass: float = 1.0
    v_real: np.ndarray = field(default=0.0)
    v_imag: np.ndarray = field(default=0.0)
    hbar: float = 1.0
    boundary: str = DIRICHLET

    def __post_init__(self):
        if int(self.n_sites) != self.n_sites or self.n_sites < 3:
            raise ValidationError("lattice.n_sites", "must be an integer >= 3")
        self.n_sites = int(self.n_sites)
        if not self.spacing > 0:
            raise ValidationError("lattice.spacing", "must be positive")
        if not self.mass > 0:
            raise ValidationError("lattice.mass", "must be positive")
        if not self.hbar > 0:
            raise ValidationError("hbar", "must be positive")
        self.boundary = str(self.boundary).lower()
        if self.boundary not in (DIRICHLET, PERIODIC):
            raise ValidationError("lattice.boundary", "must be 'dirichlet' or 'periodic'")
        self.v_real = self._potential(self.v_real, "lattice.v_real")
        self.v_imag = self._potential(self.v_imag, "lattice.v_imag")

    def _potential(self, v, name):
        arr = np.asarray(v, dtype=float)
        if arr.ndim == 0:
            arr = np.full(self.n_sites, float(arr))
        if arr.shape != (self.n_sites,):
            raise ValidationError(name, f"needs {self.n_sites} values, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValidationError(name, "must be finite")
        return arr

    @property
    def hopping(self):
        """``hbar^2 / (2 m a^2)``."""
        return self.hbar ** 2 / (2.0 * self.mass * self.spacing ** 2)

    @property
    def positions(self):
        return self.spacing * np.arange(self.n_sites)


@dataclass(frozen=True, eq=False)
class DensityCurrent:
    rho: np.ndarray
    current: np.ndarray
    current_imag: float = 0.0


def build_lattice_hamiltonian(cfg):
    n = cfg.n_sites
    t = cfg.hopping
    h = np.zeros((n, n), dtype=np.complex128)
    h[np.arange(n), np.arange(n)] = 2.0 * t + cfg.v_real + 1j * cfg.v_imag
    h[np.arange(n - 1), np.arange(1, n)] = -t
    h[np.arange(1, n), np.arange(n - 1)] = -t
    if cfg.boundary == PERIODIC:
        h[0, n - 1] = -t
        h[n - 1, 0] = -t
    return h


def dirichlet_spectrum(cfg):
    """Closed-form eigenvalues of the free Dirichlet lattice, ascending."""
    k = np.arange(1, cfg.n_sites + 1)
    return 4.0 * cfg.hopping * np.sin(k * np.pi / (2 * (cfg.n_sites + 1))) ** 2


def gaussian_packet(cfg, center, width, k0=0.0):
    """Unit-norm Gaussian ``exp(-(x - center)^2 / (4 width^2) + i k0 x)``."""
    x = cfg.positions
    psi = np.exp(-((x - center) ** 2) / (4.0 * width ** 2) + 1j * k0 * x)
    return psi / np.linalg.norm(psi)


def plane_wave(cfg, k):
    return np.exp(1j * k * cfg.positions)


def density(qm, psi_n):
    """Per-site ``conj((Q psi)_j) psi_j``, real part.

    Sums to the squared Q-norm for any hermitian ``Q``; individual sites can
    carry an imaginary part when ``Q`` is not diagonal, which cancels in the
    sum and is dropped here.
    """
    psi = np.asarray(psi_n.amplitudes if hasattr(psi_n, "amplitudes") else psi_n,
                     dtype=np.complex128)
    if qm is not None and qm.dim != psi.shape[0]:
        raise DimensionMismatch("metric and state dimensions differ")
    qpsi = psi if qm is None else qm.q @ psi
    return (np.conj(qpsi) * psi).real


def _link_current(psi, psi_q, cfg, left, right):
    a = cfg.spacing
    dq = (np.conj(psi_q[right]) - np.conj(psi_q[left])) / a
    avg = 0.5 * (psi[left] + psi[right])
    avg_q = 0.5 * np.conj(psi_q[left] + psi_q[right])
    dpsi = (psi[right] - psi[left]) / a
    return (1j * cfg.hbar / (2.0 * cfg.mass)) * (dq * avg - avg_q * dpsi)


def current(psi, psi_q, cfg, return_imag=False):
    """Link-centred discretization of the probability current.

    ``psi_q`` is ``Q @ psi`` (pass ``psi`` itself for the standard metric).
    Returns the real part; with ``return_imag`` also the largest discarded
    imaginary part.
    """
    psi = np.asarray(psi, dtype=np.complex128)
    psi_q = np.asarray(psi_q, dtype=np.complex128)
    n = cfg.n_sites
    if psi.shape != (n,) or psi_q.shape != (n,):
        raise DimensionMismatch(f"states must have {n} sites")
    j = np.zeros(n + 1, dtype=np.complex128)
    left = np.arange(n - 1)
    j[1:n] = _link_current(psi, psi_q, cfg, left, left + 1)
    if cfg.boundary == PERIODIC:
        wrap = _link_current(psi, psi_q, cfg, np.array([n - 1]), np.array([0]))[0]
        j[0] = wrap
        j[n] = wrap
    imag = float(np.abs(j.imag).max())
    return (j.real, imag) if return_imag else j.real


def density_current(qm, psi, cfg):
    psi = np.asarray(getattr(psi, "amplitudes", psi), dtype=np.complex128)
    psi_q = psi if qm is None else qm.q @ psi
    j, imag = current(psi, psi_q, cfg, return_imag=True)
    return DensityCurrent(rho=density(qm, psi), current=j, current_imag=imag)


def propagate_trace(step, psi0, dt, n_samples, qm=None):
    """Apply the one-step propagator ``step`` repeatedly, recording each state."""
    psi = np.asarray(psi0, dtype=np.complex128)
    states = [psi]
    for _ in range(n_samples - 1):
        psi = step @ psi
        states.append(psi)
    states = np.array(states)
    norms = np.array([math.sqrt(max(q_inner(qm, s, s).real, 0.0)) for s in states])
    return EvolutionTrace(times=dt * np.arange(n_samples), states=states, norms=norms)


def _check_grid(trace):
    if len(trace) < 3:
        raise GridTooCoarse("continuity check needs at least 3 time samples")
    dts = np.diff(trace.times)
    if not np.allclose(dts, dts[0], rtol=1e-9, atol=0.0):
        raise ValueError("continuity check needs a uniform time grid")
    return float(dts[0])


def continuity_residual(trace, qm, cfg):
    """Largest local continuity violation over interior sites and times.

    ``|d rho / dt + (j_{k+1/2} - j_{k-1/2}) / a|`` with a central time
    difference, divided by the largest density in the trace (so the result
    is a rate, in inverse time units).  Dirichlet edge sites are excluded.
    """
    dt = _check_grid(trace)
    rho = np.array([density(qm, s) for s in trace.states])
    div = []
    for s in trace.states[1:-1]:
        psi_q = s if qm is None else qm.q @ s
        j = current(s, psi_q, cfg)
        div.append((j[1:] - j[:-1]) / cfg.spacing)
    drho = (rho[2:] - rho[:-2]) / (2.0 * dt)
    resid = np.abs(drho + np.array(div))
    if cfg.boundary == DIRICHLET:
        resid = resid[:, 1:-1]
    scale = float(rho.max())
    return float(resid.max() / scale) if scale > 0 else float(resid.max())


def total_mass_rate(trace, qm, cfg):
    """``max_t |d/dt sum_j rho_j a|`` by central differences."""
    dt = _check_grid(trace)
    mass = np.array([density(qm, s).sum() * cfg.spacing for s in trace.states])
    return float(np.abs((mass[2:] - mass[:-2]) / (2.0 * dt)).max())


def mass_drift(trace, qm):
    """``max_t |sum rho(t) - sum rho(0)|``."""
    mass = np.array([density(qm, s).sum() for s in trace.states])
    return float(np.abs(mass - mass[0]).max())


def off_tridiagonal_fraction(m, periodic=False):
    """Share of ``||m||`` outside the nearest-neighbour band (a locality gauge)."""
    m = np.asarray(m)
    n = m.shape[0]
    i, j = np.indices((n, n))
    band = np.abs(i - j) <= 1
    if periodic:
        band |= np.abs(i - j) == n - 1
    total = norm(m)
    return norm(np.where(band, 0.0, m)) / total if total > 0 else 0.0


@dataclass(frozen=True, eq=False)
class PipelineResult:
    decomposition: object
    metric: object
    subset: object
    h_eff: np.ndarray
    trace: EvolutionTrace
    mass_drift: float
    locality: float


def run_pipeline(cfg, psi0, dt, n_samples, opts=None):
    """Non-hermitian lattice through eig, metric, dominant subset and ``H_eff``.

    The normalized ``psi0`` is evolved with ``exp(-i H_eff dt / hbar)`` and
    the drift of the Q-weighted total density is reported.
    """
    h = build_lattice_hamiltonian(cfg)
    d = eig(h, opts or EigOptions())
    qm = build_q(d)
    a = dominant_subset(d.eigenvalues)
    h_eff = build_h_eff(d, a)
    start = normalize(qm, psi0).amplitudes
    trace = propagate_trace(h_eff_propagator(d, a, dt, cfg.hbar), start, dt, n_samples, qm)
    return PipelineResult(
        decomposition=d,
        metric=qm,
        subset=a,
        h_eff=h_eff,
        trace=trace,
        mass_drift=mass_drift(trace, qm),
        locality=off_tridiagonal_fraction(h_eff, cfg.boundary == PERIODIC),
    )
