"""The metric ``Q = (P^H)^-1 P^-1`` and everything measured with it.

``Q`` makes the (generally non-orthogonal) eigenvectors of ``H``
orthonormal, turns ``H`` into a normal operator with respect to
``<phi|Q|psi>``, and splits ``H`` into Q-hermitian and anti-Q-hermitian
parts.  Passing ``None`` wherever a metric is expected selects the ordinary
inner product.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, ZeroVector
from .linalg import as_matrix, norm

ZERO_NORM = 1e-14


@dataclass(frozen=True, eq=False)
class QMetric:
    q: np.ndarray
    q_inv: np.ndarray
    source_kappa: float = 1.0

    @property
    def dim(self):
        return self.q.shape[0]

    @property
    def inverse_residual(self):
        return norm(self.q @ self.q_inv - np.eye(self.dim))

    @property
    def hermiticity_residual(self):
        return norm(self.q - self.q.conj().T) / max(norm(self.q), 1e-300)


@dataclass(frozen=True, eq=False)
class QSplit:
    """``h = h_qh + h_qa`` with ``h_qh`` Q-hermitian and ``h_qa`` anti-Q-hermitian."""

    h_qh: np.ndarray
    h_qa: np.ndarray


def _readonly(a):
    a = np.array(a, dtype=np.complex128)
    a.flags.writeable = False
    return a


def _hermitize(a):
    return 0.5 * (a + a.conj().T)


def identity_metric(dim):
    eye = np.eye(dim, dtype=np.complex128)
    return QMetric(q=_readonly(eye), q_inv=_readonly(eye), source_kappa=1.0)


def build_q(d):
    """Metric of a spectral decomposition.

    Both ``q`` and its inverse ``p @ p^H`` come from products of the stored
    factors, so no further inversion is needed.
    """
    q = _hermitize(d.p_inv.conj().T @ d.p_inv)
    q_inv = _hermitize(d.p @ d.p.conj().T)
    return QMetric(q=_readonly(q), q_inv=_readonly(q_inv), source_kappa=float(d.kappa))


def _metric_matrix(qm, dim):
    if qm is None:
        return None
    if qm.dim != dim:
        raise DimensionMismatch(f"metric has dim {qm.dim}, operand has dim {dim}")
    return qm.q


def as_state(psi, dim=None):
    v = np.asarray(psi, dtype=np.complex128)
    if v.ndim != 1:
        raise DimensionMismatch(f"state must be 1-D, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise DimensionMismatch(f"state has dim {v.shape[0]}, expected {dim}")
    return v


def q_inner(qm, phi, psi):
    """``<phi|Q|psi>``, antilinear in ``phi``."""
    phi = as_state(phi)
    psi = as_state(psi, phi.shape[0])
    q = _metric_matrix(qm, phi.shape[0])
    if q is None:
        return complex(np.vdot(phi, psi))
    return complex(np.vdot(phi, q @ psi))


def q_norm(qm, psi):
    return float(np.sqrt(max(q_inner(qm, psi, psi).real, 0.0)))


def q_adjoint(qm, a):
    """Adjoint with respect to the metric: ``Q^-1 a^H Q``."""
    a = as_matrix(a)
    if qm is None:
        return a.conj().T.copy()
    _metric_matrix(qm, a.shape[0])
    return qm.q_inv @ a.conj().T @ qm.q


def q_split(d, qm=None):
    """Split ``H`` into ``p Re(D) p^-1`` and the remainder ``i p Im(D) p^-1``.

    ``qm`` is accepted for interface symmetry with the other metric
    operations; the split itself only needs the decomposition.
    """
    if qm is not None:
        _metric_matrix(qm, d.dim)
    h_qh = d.p @ (d.eigenvalues.real[:, None] * d.p_inv)
    h_qa = np.asarray(d.h) - h_qh
    return QSplit(h_qh=_readonly(h_qh), h_qa=_readonly(h_qa))


def split_crosscheck(h, qm, split):
    """Largest deviation of ``split`` from ``(H +- H^{dag_Q}) / 2``, relative to ``||H||``."""
    h = as_matrix(h)
    adj = q_adjoint(qm, h)
    scale = max(norm(h), 1e-300)
    return max(norm(split.h_qh - 0.5 * (h + adj)), norm(split.h_qa - 0.5 * (h - adj))) / scale


def q_normality_residual(h, qm):
    """``||[H, H^{dag_Q}]|| / ||H||^2``; zero for a Q-normal ``H``."""
    h = as_matrix(h)
    hn = norm(h)
    if hn == 0.0:
        return 0.0
    adj = q_adjoint(qm, h)
    return norm(h @ adj - adj @ h) / hn ** 2


def q_hermiticity_residual(a, qm):
    a = as_matrix(a)
    return norm(a - q_adjoint(qm, a)) / max(norm(a), 1e-300)


def is_q_hermitian(a, qm, tol=1e-9):
    return q_hermiticity_residual(a, qm) <= tol


def is_anti_q_hermitian(a, qm, tol=1e-9):
    a = as_matrix(a)
    return norm(a + q_adjoint(qm, a)) <= tol * max(norm(a), 1e-300)


def biorthogonality_error(d, qm):
    """``max_ij |<lambda_i|Q|lambda_j> - delta_ij|``."""
    gram = d.p.conj().T @ qm.q @ d.p
    return float(np.abs(gram - np.eye(d.dim)).max())


def dual_rows(d, qm):
    """Rows ``<lambda_i|Q``; for the metric of ``d`` these equal ``p_inv``."""
    return d.p.conj().T @ qm.q


def transition_probability(qm, f, psi):
    """``|<f|psi>|^2`` with both states first normalized under ``qm``.

    ``qm=None`` is the standard inner product, under which distinct
    eigenstates of a non-normal ``H`` still overlap.
    """
    f = as_state(f)
    psi = as_state(psi, f.shape[0])
    nf = q_norm(qm, f)
    npsi = q_norm(qm, psi)
    if nf < ZERO_NORM or npsi < ZERO_NORM:
        raise ZeroVector("transition probability needs nonzero states")
    amp = q_inner(qm, f, psi) / (nf * npsi)
    return float(min(abs(amp) ** 2, 1.0))
