"""Time evolution under a non-hermitian ``H``.

The time origin is always 0; every function takes the elapsed time.  States
are plain complex vectors, except :class:`NormalizedState`, which remembers
the metric it is normalized under.
"""

from dataclasses import dataclass
import logging
import math

import numpy as np

from .errors import DimensionMismatch, StepSizeTooLarge, ZeroVector
from .linalg import as_matrix, norm
from .linalg import kernels as K
from .qmetric import ZERO_NORM, as_state, q_inner

log = logging.getLogger(__name__)

NORM_TOL = 1e-6
NORM_ABORT = 1e-3


@dataclass(frozen=True, eq=False)
class NormalizedState:
    amplitudes: np.ndarray
    metric: object = None

    @property
    def dim(self):
        return self.amplitudes.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amplitudes, dtype=dtype)


@dataclass(eq=False)
class EvolutionTrace:
    times: np.ndarray
    states: np.ndarray
    norms: np.ndarray
    expectations: np.ndarray | None = None
    distances: np.ndarray | None = None
    rate: float | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=np.complex128)
        self.norms = np.asarray(self.norms, dtype=float)
        n = self.times.shape[0]
        for name in ("states", "norms", "expectations", "distances"):
            value = getattr(self, name)
            if value is not None and len(value) != n:
                raise DimensionMismatch(f"trace field {name} has length {len(value)}, expected {n}")
        if n > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("trace times must be strictly increasing")

    def __len__(self):
        return self.times.shape[0]


def _amplitudes(psi):
    if isinstance(psi, NormalizedState):
        return psi.amplitudes
    return as_state(psi)


def evolve_exact(d, psi0, dt_total, hbar=1.0, shift=0.0):
    """Spectral propagation ``p exp(-i D t / hbar) p^-1 psi0``.

    ``shift`` removes a common growth factor ``exp(shift * t / hbar)``; it
    leaves the direction unchanged and keeps long runs from overflowing.
    """
    if hbar <= 0:
        raise ValueError("hbar must be positive")
    psi0 = as_state(_amplitudes(psi0), d.dim)
    phases = np.exp((-1j * d.eigenvalues - shift) * (dt_total / hbar))
    return d.p @ (phases * (d.p_inv @ psi0))


def normalize(qm, psi):
    """Rescale ``psi`` by a positive factor to unit Q-norm."""
    psi = _amplitudes(psi)
    n2 = q_inner(qm, psi, psi).real
    if not n2 > ZERO_NORM ** 2:
        raise ZeroVector(f"Q-norm {math.sqrt(max(n2, 0.0)):.3e} is below {ZERO_NORM:.0e}")
    out = psi / math.sqrt(n2)
    out.flags.writeable = False
    return NormalizedState(amplitudes=out, metric=qm)


def evolve_normalized(d, qm, psi0, dt_total, hbar=1.0):
    """Unit-Q-norm state along the exact flow, computed without overflow."""
    shift = float(d.eigenvalues.imag.max())
    return normalize(qm, evolve_exact(d, psi0, dt_total, hbar, shift=shift))


def expectation(qm, psi_n, o):
    """``<psi|Q O|psi>`` for a normalized state."""
    psi = _amplitudes(psi_n)
    o = as_matrix(o, "o")
    if o.shape[0] != psi.shape[0]:
        raise DimensionMismatch("operator and state dimensions differ")
    return q_inner(qm, psi, o @ psi)


def q_distance(qm, a, b):
    diff = _amplitudes(a) - _amplitudes(b)
    return math.sqrt(max(q_inner(qm, diff, diff).real, 0.0))


def propagator(d, dt, hbar=1.0):
    """``exp(-i H dt / hbar)`` from the decomposition."""
    return d.p @ (np.exp(-1j * d.eigenvalues * dt / hbar)[:, None] * d.p_inv)


def adjoint_propagator(d, dt, hbar=1.0):
    """``exp(+i H^{dag_Q} dt / hbar)``; ``H^{dag_Q}`` has the conjugate spectrum."""
    return d.p @ (np.exp(1j * np.conj(d.eigenvalues) * dt / hbar)[:, None] * d.p_inv)


def heisenberg_operator(d, qm, o, dt, psi0, hbar=1.0):
    """Heisenberg-picture operator carrying the norm ratio of the reference state.

    ``(N(0) / N(dt)) exp(i H^{dag_Q} dt / hbar) O exp(-i H dt / hbar)`` with
    ``N(t) = <psi(t)|Q|psi(t)>``.
    """
    o = as_matrix(o, "o")
    psi0 = _amplitudes(psi0)
    psit = evolve_exact(d, psi0, dt, hbar)
    n0 = q_inner(qm, psi0, psi0).real
    nt = q_inner(qm, psit, psit).real
    if not nt > ZERO_NORM ** 2:
        raise ZeroVector("evolved reference state has vanishing Q-norm")
    return (n0 / nt) * adjoint_propagator(d, dt, hbar) @ o @ propagator(d, dt, hbar)


def anti_hermitian_mean(qm, split, psi):
    """``<psi|Q h_qa|psi> / <psi|Q|psi>``; purely imaginary up to rounding."""
    psi = _amplitudes(psi)
    return q_inner(qm, psi, split.h_qa @ psi) / q_inner(qm, psi, psi).real


def modified_heisenberg_rhs(o_qh, split, mean_qa):
    """``[O, h_qh] + {O, h_qa - mean_qa}``, i.e. ``i hbar dO/dt``."""
    shifted = split.h_qa - mean_qa * np.eye(o_qh.shape[0])
    return (o_qh @ split.h_qh - split.h_qh @ o_qh) + (o_qh @ shifted + shifted @ o_qh)


def heisenberg_residual(d, qm, split, o, psi0, t, hbar=1.0, h_fd=1e-5):
    """Central-difference residual of the modified Heisenberg equation at ``t``.

    Relative to ``||H|| * ||O_QH(t)||``.
    """
    plus = heisenberg_operator(d, qm, o, t + h_fd, psi0, hbar)
    minus = heisenberg_operator(d, qm, o, t - h_fd, psi0, hbar)
    mid = heisenberg_operator(d, qm, o, t, psi0, hbar)
    lhs = 1j * hbar * (plus - minus) / (2.0 * h_fd)
    mean_qa = anti_hermitian_mean(qm, split, evolve_exact(d, psi0, t, hbar))
    rhs = modified_heisenberg_rhs(mid, split, mean_qa)
    scale = max(norm(np.asarray(d.h)) * norm(mid), 1e-300)
    return norm(lhs - rhs) / scale


def _normalized_batch(d, q, psi0, times, hbar):
    """Rows of unit-Q-norm exact states, one per entry of ``times``."""
    shift = float(d.eigenvalues.imag.max())
    phases = np.exp(np.outer(times / hbar, -1j * d.eigenvalues - shift))
    states = (phases * (d.p_inv @ psi0)[None, :]) @ d.p.T
    n2 = np.einsum("ti,ij,tj->t", states.conj(), q, states).real
    if not np.all(n2 > ZERO_NORM ** 2):
        raise ZeroVector("exact reference state has vanishing Q-norm")
    return states / np.sqrt(n2)[:, None]


def integrate_modified_schrodinger(split, qm, psi_n0, t_span, dt, hbar=1.0, stride=1,
                                   observable=None, reference=None):
    """RK4 integration of the norm-compensated Schrodinger equation.

    The step is shrunk so that an integer number of steps covers
    ``t_span``.  If ``reference`` (a decomposition of the same ``H``) is
    given, each recorded state's Q-distance to the normalized exact
    evolution goes into ``trace.distances``.  Expectations are of
    ``observable`` (default ``H``).

    Raises
    ------
    StepSizeTooLarge
        A recorded Q-norm drifted more than 1e-3 from one.
    """
    if dt <= 0 or t_span <= 0:
        raise ValueError("dt and t_span must be positive")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    psi0 = np.ascontiguousarray(_amplitudes(psi_n0), dtype=np.complex128)
    dim = psi0.shape[0]
    q = np.eye(dim, dtype=np.complex128) if qm is None else np.ascontiguousarray(qm.q)
    hqh = np.ascontiguousarray(split.h_qh)
    hqa = np.ascontiguousarray(split.h_qa)
    if hqh.shape != (dim, dim) or q.shape != (dim, dim):
        raise DimensionMismatch("split, metric and state dimensions differ")

    n_steps = max(1, int(math.ceil(t_span / dt - 1e-9)))
    step = t_span / n_steps
    states = K.rk4_modified_schrodinger(hqh, hqa, q, psi0, step, n_steps, stride, float(hbar))
    times = np.arange(states.shape[0]) * (stride * step)

    norms = np.sqrt(np.abs(np.einsum("ti,ij,tj->t", states.conj(), q, states).real))
    drift = float(np.max(np.abs(norms - 1.0))) if norms.size else 0.0
    if not drift <= NORM_ABORT:
        raise StepSizeTooLarge(f"Q-norm drift {drift:.3e} exceeds {NORM_ABORT:.0e}; reduce dt")
    if drift > NORM_TOL:
        log.warning("Q-norm drift %.3e exceeds %.0e", drift, NORM_TOL)

    obs = hqh + hqa if observable is None else as_matrix(observable, "observable")
    expectations = np.einsum("ti,ij,jk,tk->t", states.conj(), q, obs, states)

    distances = None
    if reference is not None:
        exact = _normalized_batch(reference, q, psi0, times, hbar)
        diff = states - exact
        distances = np.sqrt(np.abs(np.einsum("ti,ij,tj->t", diff.conj(), q, diff).real))
    return EvolutionTrace(times=times, states=states, norms=norms,
                          expectations=expectations, distances=distances)
