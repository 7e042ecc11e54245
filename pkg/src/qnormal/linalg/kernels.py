"""Dense complex kernels: balancing, Hessenberg reduction, shifted QR, LU.

Every kernel goes through :func:`qnormal._jit.njit`, so the same source runs
compiled under numba or as plain numpy.  Inputs are expected to be
C-contiguous ``complex128`` arrays; callers in :mod:`qnormal.linalg.core`
take care of that.
"""

import numpy as np

from .._jit import njit

EPS = 2.220446049250313e-16
SAFE_MIN = 2.2250738585072014e-308
# columns of the triangular eigenvector solve are rescaled past this size
BIG = 1.0e150


@njit
def cabs1(z):
    return abs(z.real) + abs(z.imag)


@njit
def balance(a):
    """Diagonal similarity scaling by powers of two (Parlett-Reinsch).

    Returns ``(b, scale)`` with ``b = diag(scale)^-1 @ a @ diag(scale)``.
    """
    n = a.shape[0]
    b = a.copy()
    scale = np.ones(n)
    radix = 2.0
    sqrdx = radix * radix
    done = False
    while not done:
        done = True
        for i in range(n):
            c = np.sum(np.abs(b[:, i].real) + np.abs(b[:, i].imag)) - cabs1(b[i, i])
            r = np.sum(np.abs(b[i, :].real) + np.abs(b[i, :].imag)) - cabs1(b[i, i])
            if c == 0.0 or r == 0.0:
                continue
            g = r / radix
            f = 1.0
            s = c + r
            while c < g:
                f *= radix
                c *= sqrdx
            g = r * radix
            while c > g:
                f /= radix
                c /= sqrdx
            if (c + r) / f < 0.95 * s:
                done = False
                scale[i] *= f
                b[i, :] *= 1.0 / f
                b[:, i] *= f
    return b, scale


@njit
def hessenberg(a):
    """Householder reduction ``a = u @ h @ u^H`` with ``h`` upper Hessenberg."""
    n = a.shape[0]
    h = a.copy()
    u = np.eye(n, dtype=np.complex128)
    for k in range(n - 2):
        x = h[k + 1:, k].copy()
        alpha = np.sqrt(np.sum(x.real ** 2 + x.imag ** 2))
        if alpha == 0.0:
            continue
        x0 = x[0]
        ax0 = abs(x0)
        if ax0 == 0.0:
            phase = 1.0 + 0.0j
        else:
            phase = x0 / ax0
        v = x
        v[0] = x0 + phase * alpha
        tau = 2.0 / np.sum(v.real ** 2 + v.imag ** 2)
        vc = np.conj(v)

        block = np.ascontiguousarray(h[k + 1:, k:])
        w = (vc @ block) * tau
        h[k + 1:, k:] = block - np.outer(v, w)

        block = np.ascontiguousarray(h[:, k + 1:])
        w = (block @ v) * tau
        h[:, k + 1:] = block - np.outer(w, vc)

        block = np.ascontiguousarray(u[:, k + 1:])
        w = (block @ v) * tau
        u[:, k + 1:] = block - np.outer(w, vc)

        h[k + 1, k] = -phase * alpha
        for i in range(k + 2, n):
            h[i, k] = 0.0
    return h, u


@njit
def givens(f, g):
    """Rotation ``[[c, s], [-conj(s), c]]`` mapping ``(f, g)`` to ``(r, 0)``."""
    af = abs(f)
    ag = abs(g)
    if ag == 0.0:
        return 1.0, 0.0j
    if af == 0.0:
        return 0.0, np.conj(g) / ag
    r = np.hypot(af, ag)
    return af / r, (f / af) * np.conj(g) / r


@njit
def wilkinson_shift(a, b, c, d):
    """Eigenvalue of ``[[a, b], [c, d]]`` closest to ``d``."""
    half = 0.5 * (a - d)
    disc = np.sqrt(half * half + b * c)
    mid = 0.5 * (a + d)
    m1 = mid + disc
    m2 = mid - disc
    if abs(m1 - d) <= abs(m2 - d):
        return m1
    return m2


@njit
def schur_qr(h, z, max_iter):
    """Shifted complex QR iteration on an upper Hessenberg matrix.

    ``h`` is reduced in place to upper triangular Schur form ``t`` and the
    rotations are accumulated into ``z`` (``z_in @ h_in @ z_in^H`` is
    preserved as ``z @ t @ z^H``).  Returns the total number of QR sweeps,
    or ``-1`` when ``max_iter`` sweeps did not suffice.
    """
    n = h.shape[0]
    hnorm = 0.0
    for i in range(n):
        for j in range(n):
            hnorm = max(hnorm, cabs1(h[i, j]))
    if hnorm == 0.0:
        return 0
    cs = np.zeros(n)
    sn = np.zeros(n, dtype=np.complex128)
    total = 0
    its = 0
    hi = n - 1
    while hi > 0:
        lo = hi
        while lo > 0:
            s = cabs1(h[lo - 1, lo - 1]) + cabs1(h[lo, lo])
            if s == 0.0:
                s = hnorm
            if cabs1(h[lo, lo - 1]) <= EPS * s or cabs1(h[lo, lo - 1]) < SAFE_MIN:
                h[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            hi -= 1
            its = 0
            continue
        if total >= max_iter:
            return -1
        total += 1
        its += 1

        if its % 10 == 0:
            mu = h[hi, hi] + 0.75 * abs(h[hi, hi - 1].real)
        else:
            mu = wilkinson_shift(h[hi - 1, hi - 1], h[hi - 1, hi], h[hi, hi - 1], h[hi, hi])

        for k in range(lo, hi + 1):
            h[k, k] -= mu
        for k in range(lo, hi):
            c, s = givens(h[k, k], h[k + 1, k])
            cs[k] = c
            sn[k] = s
            r0 = h[k, k:].copy()
            r1 = h[k + 1, k:].copy()
            h[k, k:] = c * r0 + s * r1
            h[k + 1, k:] = -np.conj(s) * r0 + c * r1
            h[k + 1, k] = 0.0
        for k in range(lo, hi):
            c = cs[k]
            s = sn[k]
            top = k + 2
            col0 = h[:top, k].copy()
            col1 = h[:top, k + 1].copy()
            h[:top, k] = c * col0 + np.conj(s) * col1
            h[:top, k + 1] = -s * col0 + c * col1
            col0 = z[:, k].copy()
            col1 = z[:, k + 1].copy()
            z[:, k] = c * col0 + np.conj(s) * col1
            z[:, k + 1] = -s * col0 + c * col1
        for k in range(lo, hi + 1):
            h[k, k] += mu
    for i in range(n):
        for j in range(i):
            h[i, j] = 0.0
    return total


@njit
def triu_eigvecs(t):
    """Eigenvectors of an upper triangular matrix by back substitution.

    Column ``k`` solves ``(t - t[k, k]) x = 0`` with ``x[k] = 1`` and zeros
    below.  Vanishing pivots are replaced by ``eps * ||t||`` so defective
    input gives huge, nearly parallel columns rather than a division by zero.
    """
    n = t.shape[0]
    x = np.zeros((n, n), dtype=np.complex128)
    tnorm = 0.0
    for i in range(n):
        for j in range(i, n):
            tnorm = max(tnorm, cabs1(t[i, j]))
    small = max(EPS * tnorm, SAFE_MIN)
    for k in range(n):
        x[k, k] = 1.0
        lam = t[k, k]
        for i in range(k - 1, -1, -1):
            acc = np.sum(t[i, i + 1:k + 1] * x[i + 1:k + 1, k])
            d = t[i, i] - lam
            if abs(d) < small:
                d = small
            x[i, k] = -acc / d
            big = abs(x[i, k])
            if big > BIG:
                x[:k + 1, k] /= big
    return x


@njit
def lu_factor(a):
    """LU with partial pivoting.  Returns ``(lu, perm, ok)``."""
    n = a.shape[0]
    lu = a.copy()
    perm = np.arange(n)
    amax = 0.0
    for i in range(n):
        for j in range(n):
            amax = max(amax, abs(lu[i, j]))
    thresh = n * EPS * amax
    if amax == 0.0:
        return lu, perm, False
    for k in range(n):
        p = k + np.argmax(np.abs(lu[k:, k]))
        if abs(lu[p, k]) <= thresh:
            return lu, perm, False
        if p != k:
            row = lu[k, :].copy()
            lu[k, :] = lu[p, :]
            lu[p, :] = row
            tmp = perm[k]
            perm[k] = perm[p]
            perm[p] = tmp
        lu[k + 1:, k] /= lu[k, k]
        if k + 1 < n:
            lu[k + 1:, k + 1:] -= np.outer(lu[k + 1:, k], lu[k, k + 1:])
    return lu, perm, True


@njit
def lu_solve(lu, perm, b):
    """Solve ``a @ x = b`` for a matrix right-hand side from :func:`lu_factor`."""
    n = lu.shape[0]
    x = np.empty_like(b)
    for i in range(n):
        x[i, :] = b[perm[i], :]
    for i in range(1, n):
        x[i, :] -= lu[i, :i] @ np.ascontiguousarray(x[:i, :])
    for i in range(n - 1, -1, -1):
        if i + 1 < n:
            x[i, :] -= lu[i, i + 1:] @ np.ascontiguousarray(x[i + 1:, :])
        x[i, :] /= lu[i, i]
    return x


@njit
def rk4_modified_schrodinger(hqh, hqa, q, psi0, dt, n_steps, stride, hbar):
    """Fixed-step RK4 for the norm-compensated flow

        i hbar dpsi/dt = hqh psi + (hqa - <hqa>_Q) psi,

    where ``<hqa>_Q = <psi|Q hqa|psi> / <psi|Q|psi>``.  States are recorded
    every ``stride`` steps, the initial one included.
    """
    n_rec = n_steps // stride + 1
    out = np.empty((n_rec, psi0.shape[0]), dtype=np.complex128)
    psi = psi0.copy()
    out[0, :] = psi
    gen = hqh + hqa
    scale = -1.0j / hbar
    rec = 1
    for step in range(1, n_steps + 1):
        k1 = _mod_rhs(gen, hqa, q, psi, scale)
        k2 = _mod_rhs(gen, hqa, q, psi + 0.5 * dt * k1, scale)
        k3 = _mod_rhs(gen, hqa, q, psi + 0.5 * dt * k2, scale)
        k4 = _mod_rhs(gen, hqa, q, psi + dt * k3, scale)
        psi = psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if step % stride == 0:
            out[rec, :] = psi
            rec += 1
    return out


@njit
def _mod_rhs(gen, hqa, q, psi, scale):
    qpsi = q @ psi
    norm2 = np.vdot(psi, qpsi).real
    mean = np.vdot(qpsi, hqa @ psi) / norm2
    return scale * (gen @ psi - mean * psi)
