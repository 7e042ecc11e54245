"""Seeded random diagonalizable Hamiltonians with a planted spectrum.

Algorithm ``planted-spectrum/v1`` on ``numpy.random.PCG64(seed)``:

1. Eigenvalues are drawn one at a time, uniformly in the rectangle
   ``re_range x im_range``; a draw closer than ``min_separation`` to an
   accepted one is redrawn (at most 1000 times, then the whole spectrum is
   restarted; 50 restarts, then ``SpecInfeasible``).
2. ``P`` has i.i.d. entries ``(N(0,1) + i N(0,1)) / sqrt(2)`` and is redrawn
   while ``kappa_2(P) > kappa_cap``.
3. ``H = P diag(lambda) P^-1``.
"""

from dataclasses import dataclass
import math

import numpy as np

from ..errors import SpecInfeasible, ValidationError
from ..linalg import inverse

ALGORITHM = "planted-spectrum/v1"
PRNG = "numpy.random.PCG64"


@dataclass(frozen=True)
class RandomSpec:
    dim: int = 4
    seed: int = 0
    re_range: tuple = (-1.0, 1.0)
    im_range: tuple = (-1.0, 1.0)
    min_separation: float = 0.1
    kappa_cap: float = 1e4

    def validate(self, prefix="hamiltonian.random"):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValidationError(f"{prefix}.dim", "must be a positive integer")
        for name in ("re_range", "im_range"):
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
                raise ValidationError(f"{prefix}.{name}", "must be a finite [lo, hi] with lo <= hi")
        if self.min_separation < 0:
            raise ValidationError(f"{prefix}.min_separation", "must be non-negative")
        if not self.kappa_cap > 1:
            raise ValidationError(f"{prefix}.kappa_cap", "must exceed 1")
        return self


@dataclass(frozen=True, eq=False)
class RandomInstance:
    h: np.ndarray
    eigenvalues: np.ndarray
    p: np.ndarray
    kappa: float
    spec: RandomSpec


def _check_feasible(spec):
    if spec.dim < 2 or spec.min_separation == 0:
        return
    w = spec.re_range[1] - spec.re_range[0]
    h = spec.im_range[1] - spec.im_range[0]
    sep = spec.min_separation
    if sep > math.hypot(w, h):
        raise SpecInfeasible(f"separation {sep} exceeds the rectangle diameter {math.hypot(w, h):.3g}")
    # disks of radius sep/2 around each point must fit in the enlarged rectangle
    if spec.dim * math.pi * (sep / 2) ** 2 > (w + sep) * (h + sep):
        raise SpecInfeasible(f"cannot pack {spec.dim} eigenvalues {sep} apart in the rectangle")


def _draw_spectrum(rng, spec):
    lo_re, hi_re = spec.re_range
    lo_im, hi_im = spec.im_range
    for _ in range(50):
        lam = []
        for _ in range(spec.dim):
            for _ in range(1000):
                z = complex(rng.uniform(lo_re, hi_re), rng.uniform(lo_im, hi_im))
                if all(abs(z - w) >= spec.min_separation for w in lam):
                    lam.append(z)
                    break
            else:
                break
        if len(lam) == spec.dim:
            return np.array(lam)
    raise SpecInfeasible(f"could not place {spec.dim} eigenvalues {spec.min_separation} apart")


def random_instance(spec):
    spec.validate()
    _check_feasible(spec)
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    lam = _draw_spectrum(rng, spec)
    n = spec.dim
    for _ in range(100):
        p = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2.0)
        kappa = float(np.linalg.cond(p, 2))
        if kappa <= spec.kappa_cap:
            break
    else:
        raise SpecInfeasible(f"no eigenvector matrix with kappa <= {spec.kappa_cap:g} in 100 draws")
    h = (p * lam[None, :]) @ inverse(p)
    return RandomInstance(h=h, eigenvalues=lam, p=p, kappa=kappa, spec=spec)


def generate_random_hamiltonian(spec):
    return random_instance(spec).h


def random_state(dim, seed, stream=1):
    """Deterministic complex Gaussian vector; ``stream`` separates uses of one seed."""
    rng = np.random.Generator(np.random.PCG64([seed, stream]))
    return rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
