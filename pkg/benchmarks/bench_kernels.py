"""Compiled kernels against their pure-numpy fallbacks.

    python3 benchmarks/bench_kernels.py --dims 8 16 32 --repeat 3

Each kernel runs once untimed (so numba compilation and caching are not
counted), then the best of ``--repeat`` runs is reported.
"""

import argparse
import time

import numpy as np

from qnormal import _jit
from qnormal.linalg import kernels as K


def best_of(fn, repeat):
    fn()
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def eig_pipeline(balance, hessenberg, schur_qr, triu_eigvecs, a):
    b, _ = balance(a.copy())
    h, u = hessenberg(b)
    schur_qr(h, u, 30 * a.shape[0])
    return triu_eigvecs(h)


def cases(dim, rk4_steps):
    rng = np.random.default_rng(dim)
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rhs = np.eye(dim, dtype=np.complex128)
    hqh = a + a.conj().T
    hqa = 0.05j * (a @ a.conj().T) / dim
    q = np.eye(dim, dtype=np.complex128)
    psi = np.ones(dim, dtype=np.complex128) / np.sqrt(dim)

    def pick(name, compiled):
        k = getattr(K, name)
        return k if compiled else k.py_func

    def make(compiled):
        return {
            "eig": lambda: eig_pipeline(pick("balance", compiled), pick("hessenberg", compiled),
                                        pick("schur_qr", compiled), pick("triu_eigvecs", compiled), a),
            "lu+inverse": lambda: pick("lu_solve", compiled)(*pick("lu_factor", compiled)(a.copy())[:2], rhs),
            f"rk4 x{rk4_steps}": lambda: pick("rk4_modified_schrodinger", compiled)(
                hqh, hqa, q, psi, 1e-3, rk4_steps, rk4_steps, 1.0),
        }

    return make(True), make(False)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dims", type=int, nargs="+", default=[8, 16, 32])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--rk4-steps", type=int, default=2000)
    args = parser.parse_args(argv)

    if not _jit.USE_NUMBA:
        print("numba disabled (QNORMAL_DISABLE_NUMBA set); both columns run the numpy path")
    print(f"{'kernel':<14}{'dim':>5}{'numba [ms]':>13}{'numpy [ms]':>13}{'speedup':>10}")
    for dim in args.dims:
        compiled, plain = cases(dim, args.rk4_steps)
        for name in compiled:
            t_c = best_of(compiled[name], args.repeat)
            t_p = best_of(plain[name], args.repeat)
            print(f"{name:<14}{dim:>5}{1e3 * t_c:>13.3f}{1e3 * t_p:>13.3f}{t_p / t_c:>10.1f}")


if __name__ == "__main__":
    main()
