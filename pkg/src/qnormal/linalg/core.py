"""Matrix-level linear algebra built on the kernels.

Matrices are plain ``complex128`` numpy arrays.  ``as_matrix`` is the single
entry check (square, 2-D, finite); every public function here calls it.
"""

from dataclasses import dataclass, field
import logging

import numpy as np

from ..errors import InvalidMatrix, NonConvergence, NonDiagonalizable, Singular
from . import kernels as K

log = logging.getLogger(__name__)


def as_matrix(m, name="matrix"):
    a = np.asarray(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise InvalidMatrix(f"{name} must be a non-empty square 2-D array, got shape {a.shape}")
    a = np.ascontiguousarray(a, dtype=np.complex128)
    if not np.all(np.isfinite(a)):
        raise InvalidMatrix(f"{name} has non-finite entries")
    return a


def norm(a):
    """Frobenius norm; the default matrix norm throughout the package."""
    return float(np.linalg.norm(a))


def _frozen(a):
    a = np.array(a, dtype=np.complex128, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class EigOptions:
    tol_eig: float = 1e-10
    kappa_max: float = 1e8
    max_iter: int | None = None  # None -> 30 * dim
    # eigenvalues closer than this (relative to ||H||) are flagged
    degeneracy_tol: float = 1e-8

    def sweep_cap(self, dim):
        return self.max_iter if self.max_iter is not None else 30 * dim


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """``h = p @ diag(eigenvalues) @ p_inv`` with conditioning diagnostics.

    Columns of ``p`` have unit 2-norm, with their largest entry real and
    positive.  Eigenvalues are ordered by descending imaginary part, then
    ascending real part.
    """

    h: np.ndarray
    eigenvalues: np.ndarray
    p: np.ndarray
    p_inv: np.ndarray
    kappa: float
    residual: float = 0.0
    inverse_residual: float = 0.0
    sweeps: int = 0
    diagnostics: tuple = field(default_factory=tuple)

    @property
    def dim(self):
        return self.eigenvalues.shape[0]

    def vector(self, i):
        return self.p[:, i].copy()

    def coefficients(self, psi):
        """Expansion coefficients of ``psi`` in the eigenbasis."""
        return self.p_inv @ np.asarray(psi, dtype=np.complex128)

    def rescaled(self, c):
        """Same eigenproblem with columns of ``p`` multiplied by ``c``.

        Bypasses the normalization convention; used to probe invariance of
        derived quantities under eigenvector rescaling.
        """
        c = np.asarray(c, dtype=np.complex128)
        return SpectralDecomposition(
            h=self.h,
            eigenvalues=self.eigenvalues,
            p=_frozen(self.p * c[None, :]),
            p_inv=_frozen(self.p_inv / c[:, None]),
            kappa=_kappa(self.p * c[None, :], self.p_inv / c[:, None]),
            residual=self.residual,
            inverse_residual=self.inverse_residual,
            sweeps=self.sweeps,
            diagnostics=self.diagnostics,
        )


def _kappa(p, p_inv):
    return float(np.linalg.norm(p, 2) * np.linalg.norm(p_inv, 2))


def _fix_columns(v):
    """Unit 2-norm columns, largest entry real positive.

    Near-ties for the largest entry go to the lowest index so rounding noise
    cannot flip the choice.
    """
    v = v / np.linalg.norm(v, axis=0)[None, :]
    mags = np.abs(v)
    for k in range(v.shape[1]):
        top = mags[:, k].max()
        j = int(np.flatnonzero(mags[:, k] >= top * (1.0 - 1e-8))[0])
        v[:, k] *= np.conj(v[j, k]) / mags[j, k]
        v[j, k] = abs(v[j, k])
    return v


def sort_order(eigenvalues, tie_tol=0.0):
    """Descending imaginary part, ascending real part, original index.

    Imaginary parts chained within ``tie_tol`` of each other count as equal.
    """
    lam = np.asarray(eigenvalues)
    idx = np.arange(lam.size)
    by_im = sorted(idx, key=lambda i: (-lam[i].imag, i))
    group = np.empty(lam.size, dtype=int)
    g = 0
    for pos, i in enumerate(by_im):
        if pos and lam[by_im[pos - 1]].imag - lam[i].imag > tie_tol:
            g += 1
        group[i] = g
    return sorted(idx, key=lambda i: (group[i], lam[i].real, i))


def eig(h, opts=None):
    """Eigendecomposition of a general complex matrix.

    Balancing, Householder reduction to Hessenberg form, Wilkinson-shifted
    complex QR to Schur form, and back substitution for the eigenvectors.

    Raises
    ------
    NonConvergence
        QR sweep cap reached.
    NonDiagonalizable
        Condition number of the eigenvector matrix exceeds ``kappa_max``.
    """
    h = as_matrix(h, "h")
    opts = opts or EigOptions()
    n = h.shape[0]
    hnorm = norm(h)

    b, scale = K.balance(h)
    hess, u = K.hessenberg(b)
    sweeps = K.schur_qr(hess, u, opts.sweep_cap(n))
    if sweeps < 0:
        raise NonConvergence(f"QR iteration did not converge within {opts.sweep_cap(n)} sweeps")
    x = K.triu_eigvecs(hess)
    vecs = scale[:, None] * (u @ x)
    lam = np.diag(hess).copy()
    if not np.all(np.isfinite(vecs)):
        raise NonDiagonalizable("eigenvector back substitution overflowed")
    vecs = _fix_columns(vecs)

    order = sort_order(lam, opts.tol_eig * hnorm)
    lam = lam[order]
    vecs = np.ascontiguousarray(vecs[:, order])

    try:
        p_inv = inverse(vecs)
    except Singular as exc:
        raise NonDiagonalizable("eigenvector matrix is singular") from exc
    kappa = _kappa(vecs, p_inv)
    if not np.isfinite(kappa) or kappa > opts.kappa_max:
        raise NonDiagonalizable(f"kappa(P) = {kappa:.3e} exceeds kappa_max = {opts.kappa_max:.1e}")

    scale_h = hnorm if hnorm > 0 else 1.0
    residual = norm(h @ vecs - vecs * lam[None, :]) / scale_h
    inv_res = norm(vecs @ p_inv - np.eye(n))
    notes = []
    if residual > opts.tol_eig:
        raise NonConvergence(f"reconstruction residual {residual:.3e} exceeds tol_eig {opts.tol_eig:.1e}")
    if inv_res > opts.tol_eig * max(1.0, kappa):
        notes.append(f"p @ p_inv deviates from identity by {inv_res:.3e}")
    gaps = np.abs(lam[:, None] - lam[None, :]) + np.diag(np.full(n, np.inf))
    if n > 1 and gaps.min() < opts.degeneracy_tol * scale_h:
        msg = "near-degenerate eigenvalues; metric depends on the eigenvector convention"
        notes.append(msg)
        log.warning(msg)

    return SpectralDecomposition(
        h=_frozen(h),
        eigenvalues=_frozen(lam),
        p=_frozen(vecs),
        p_inv=_frozen(p_inv),
        kappa=kappa,
        residual=residual,
        inverse_residual=inv_res,
        sweeps=int(sweeps),
        diagnostics=tuple(notes),
    )


def lu(m):
    m = as_matrix(m)
    factors, perm, ok = K.lu_factor(m)
    if not ok:
        raise Singular("matrix is singular to working precision")
    return factors, perm


def solve(a, b):
    """Solve ``a @ x = b``; ``b`` may be a vector or a matrix."""
    factors, perm = lu(a)
    b = np.asarray(b, dtype=np.complex128)
    vec = b.ndim == 1
    rhs = np.ascontiguousarray(b.reshape(b.shape[0], -1))
    x = K.lu_solve(factors, perm, rhs)
    return x[:, 0] if vec else x


def inverse(m):
    m = as_matrix(m)
    return solve(m, np.eye(m.shape[0], dtype=np.complex128))


# Higham (2005) scaling-and-squaring constants
_THETA = {3: 1.495585217958292e-2, 5: 2.539398330063230e-1, 7: 9.504178996162932e-1,
          9: 2.097847961257068e0, 13: 5.371920351148152e0}
_PADE = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0),
    13: (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
         1187353796428800.0, 129060195264000.0, 10559470521600.0, 670442572800.0,
         33522128640.0, 1323241920.0, 40840800.0, 960960.0, 16380.0, 182.0, 1.0),
}


def _pade_uv(a, m):
    n = a.shape[0]
    c = _PADE[m]
    ident = np.eye(n, dtype=np.complex128)
    a2 = a @ a
    if m == 13:
        a4 = a2 @ a2
        a6 = a2 @ a4
        u = a @ (a6 @ (c[13] * a6 + c[11] * a4 + c[9] * a2)
                 + c[7] * a6 + c[5] * a4 + c[3] * a2 + c[1] * ident)
        v = a6 @ (c[12] * a6 + c[10] * a4 + c[8] * a2) + c[6] * a6 + c[4] * a4 + c[2] * a2 + c[0] * ident
        return u, v
    powers = [ident, a2]
    while len(powers) < (m + 1) // 2:
        powers.append(powers[-1] @ a2)
    u = sum(c[2 * j + 1] * powers[j] for j in range((m + 1) // 2))
    v = sum(c[2 * j] * powers[j] for j in range((m + 1) // 2))
    return a @ u, v


def expm(m):
    """Matrix exponential by scaling and squaring with a diagonal Pade approximant."""
    a = as_matrix(m)
    a_norm = float(np.abs(a).sum(axis=0).max())
    for order in (3, 5, 7, 9):
        if a_norm <= _THETA[order]:
            u, v = _pade_uv(a, order)
            return solve(v - u, v + u)
    s = 0
    if a_norm > _THETA[13]:
        s = max(0, int(np.ceil(np.log2(a_norm / _THETA[13]))))
    u, v = _pade_uv(a / 2.0 ** s, 13)
    r = solve(v - u, v + u)
    for _ in range(s):
        r = r @ r
    return r


def spectral_exp(d, s):
    """``p @ diag(exp(s * eigenvalues)) @ p_inv``."""
    return d.p @ (np.exp(s * d.eigenvalues)[:, None] * d.p_inv)
