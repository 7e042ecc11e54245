"""Late-time suppression of the anti-Q-hermitian part of ``H``.

Modes whose eigenvalues have the largest imaginary part grow fastest; after
normalization only they survive, and they evolve under the Q-hermitian
``H_eff = p diag(Re lambda_i for i in A, else 0) p^-1``.
"""

from dataclasses import dataclass
import math

import numpy as np

from .dynamics import (
    EvolutionTrace,
    _amplitudes,
    evolve_normalized,
    normalize,
    q_distance,
)
from .errors import DimensionMismatch, ProjectionZero
from .qmetric import ZERO_NORM, as_state, q_inner, q_norm

FIT_FLOOR = 1e-13


@dataclass(frozen=True)
class DominantSubset:
    indices: tuple
    b: float
    gap: float
    eps_a: float

    @property
    def covers_all(self):
        return math.isinf(self.gap)

    def mask(self, dim):
        m = np.zeros(dim, dtype=bool)
        m[list(self.indices)] = True
        return m


@dataclass(frozen=True, eq=False)
class HistorianReport:
    psi_true: object
    psi_historian: object
    fidelity: float
    q_distance: float
    t1: float
    t: float
    dominant_weight: float = 1.0
    subspace_fraction: float = 1.0


def default_eps_a(eigenvalues):
    im = np.asarray(eigenvalues).imag
    return 1e-9 * max(1.0, float(im.max() - im.min()))


def dominant_subset(eigenvalues, eps_a=None):
    """Indices whose imaginary part lies within ``eps_a`` of the maximum ``B``.

    ``gap`` is ``B`` minus the largest imaginary part outside the subset, or
    ``inf`` when the subset is everything.
    """
    lam = np.asarray(eigenvalues, dtype=np.complex128)
    if lam.size == 0:
        raise ValueError("empty spectrum")
    if eps_a is None:
        eps_a = default_eps_a(lam)
    if eps_a <= 0:
        raise ValueError("eps_a must be positive")
    im = lam.imag
    b = float(im.max())
    inside = im >= b - eps_a
    rest = im[~inside]
    gap = math.inf if rest.size == 0 else b - float(rest.max())
    return DominantSubset(indices=tuple(int(i) for i in np.flatnonzero(inside)),
                          b=b, gap=gap, eps_a=float(eps_a))


def _check(d, a):
    if a.indices and max(a.indices) >= d.dim:
        raise DimensionMismatch("dominant subset does not belong to this decomposition")


def build_h_eff(d, a):
    _check(d, a)
    diag = np.where(a.mask(d.dim), d.eigenvalues.real, 0.0)
    return d.p @ (diag[:, None] * d.p_inv)


def h_eff_propagator(d, a, dt, hbar=1.0):
    """``exp(-i H_eff dt / hbar)`` in spectral form."""
    diag = np.where(a.mask(d.dim), d.eigenvalues.real, 0.0)
    return d.p @ (np.exp(-1j * diag * dt / hbar)[:, None] * d.p_inv)


def project_tilde(d, a, psi, strict=False):
    """Keep only the eigen-components of ``psi`` with index in ``a``.

    A result with Q-norm below 1e-14 (in the metric of ``d``) means ``psi``
    has no dominant component; with ``strict`` that raises
    :class:`ProjectionZero`, otherwise the (near-)zero vector is returned.
    """
    _check(d, a)
    psi = as_state(_amplitudes(psi), d.dim)
    coeffs = d.p_inv @ psi
    coeffs[~a.mask(d.dim)] = 0.0
    if strict and np.linalg.norm(coeffs) < ZERO_NORM:
        raise ProjectionZero("state has no component in the dominant subspace")
    return d.p @ coeffs


def fit_decay_rate(times, distances, floor=FIT_FLOOR):
    """Least-squares slope of ``log d(t)`` over the last half of the grid.

    Samples at or below ``floor`` are dropped.  Returns ``None`` if fewer than
    two usable samples remain.
    """
    t = np.asarray(times, dtype=float)
    dist = np.asarray(distances, dtype=float)
    tail = slice(len(t) // 2, None)
    t, dist = t[tail], dist[tail]
    keep = dist > floor
    if keep.sum() < 2:
        return None
    slope, _ = np.polyfit(t[keep], np.log(dist[keep]), 1)
    return float(slope)


def convergence_trace(d, qm, a, psi0, times, hbar=1.0):
    """Q-distance between the normalized exact state and the ``H_eff`` flow.

    The reference is the normalized projection of ``psi0`` on the dominant
    modes, propagated by ``H_eff``.  ``trace.rate`` holds the fitted
    exponential rate of the distance, expected to approach ``-gap / hbar``.
    """
    times = np.asarray(times, dtype=float)
    tilde0 = project_tilde(d, a, psi0, strict=True)
    states, norms, dists = [], [], []
    for t in times:
        exact = evolve_normalized(d, qm, psi0, t, hbar)
        eff = normalize(qm, h_eff_propagator(d, a, t, hbar) @ tilde0)
        states.append(exact.amplitudes)
        norms.append(q_norm(qm, exact.amplitudes))
        dists.append(q_distance(qm, exact, eff))
    trace = EvolutionTrace(times=times, states=np.array(states), norms=np.array(norms),
                           distances=np.array(dists))
    if not a.covers_all:
        trace.rate = fit_decay_rate(times, trace.distances)
    return trace


def historian_experiment(d, qm, a, psi0, t1, t, hbar=1.0):
    """Compare the true state at ``t1`` with a back-extrapolation from ``t``.

    The historian evolves the normalized late state backwards with ``H_eff``
    instead of ``H``.  ``q_distance`` is phase-insensitive,
    ``sqrt(2 (1 - sqrt(fidelity)))``, so it vanishes exactly when the
    fidelity is one.
    """
    if not 0.0 <= t1 <= t:
        raise ValueError("need 0 <= t1 <= t")
    true = evolve_normalized(d, qm, psi0, t1, hbar)
    late = evolve_normalized(d, qm, psi0, t, hbar)
    hist = normalize(qm, h_eff_propagator(d, a, t1 - t, hbar) @ late.amplitudes)
    fid = min(abs(q_inner(qm, true.amplitudes, hist.amplitudes)) ** 2, 1.0)
    dist = math.sqrt(max(2.0 * (1.0 - math.sqrt(fid)), 0.0))
    coeffs = d.p_inv @ hist.amplitudes
    weights = np.abs(coeffs) ** 2
    return HistorianReport(
        psi_true=true,
        psi_historian=hist,
        fidelity=float(fid),
        q_distance=dist,
        t1=float(t1),
        t=float(t),
        dominant_weight=float(weights[a.mask(d.dim)].sum() / weights.sum()),
        subspace_fraction=len(a.indices) / d.dim,
    )


def historian_sweep(d, qm, a, psi0, t1, ts, hbar=1.0, tol=1e-12):
    """Reports for each late time in ``ts`` plus the monotonicity violations.

    A violation is a pair of consecutive times where the fidelity rises by
    more than ``tol``; they are reported, not raised.
    """
    reports = [historian_experiment(d, qm, a, psi0, t1, t, hbar) for t in ts]
    violations = [
        (r0.t, r1.t) for r0, r1 in zip(reports, reports[1:])
        if r1.fidelity > r0.fidelity + tol
    ]
    return reports, violations
