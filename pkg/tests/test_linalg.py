import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from qnormal import EigOptions, NonConvergence, NonDiagonalizable, eig, expm, inverse
from qnormal.errors import InvalidMatrix, Singular
from qnormal.linalg import as_matrix, lu, norm, solve, sort_order, spectral_exp

from oracles import complex_gaussian, cubic_roots, instance, match_spectra, quadratic_roots, taylor_expm


def test_eig_upper_triangular_example(upper2):
    d = eig(upper2)
    assert np.allclose(d.eigenvalues, [1, 2], atol=1e-14)
    s = 1 / np.sqrt(2)
    assert np.allclose(d.p, [[1, s], [0, s]], atol=1e-14)
    assert np.allclose(d.p_inv, [[1, -1], [0, np.sqrt(2)]], atol=1e-13)


def test_eig_sorted_by_growth_then_frequency(complex2):
    d = eig(complex2)
    assert np.allclose(d.eigenvalues, [1 + 0.5j, 2 - 0.5j], atol=1e-13)


def test_sort_order_rules():
    lam = np.array([2 + 0j, 1 + 1j, 0 + 0j, 3 + 1j, 1 + 1j])
    assert sort_order(lam) == [1, 4, 3, 2, 0]
    # imaginary parts within the tie tolerance are ordered by real part
    assert sort_order(np.array([5 + 1e-12j, 1 + 0j]), tie_tol=1e-10) == [1, 0]


def test_eigenvector_phase_convention():
    d = eig(instance(4, 5).h)
    for i in range(d.dim):
        v = d.vector(i)
        k = int(np.argmax(np.abs(v)))
        assert abs(np.linalg.norm(v) - 1) < 1e-13
        assert abs(v[k].imag) < 1e-14 and v[k].real > 0


@pytest.mark.parametrize("seed", range(5))
def test_eig_matches_quadratic_formula(seed):
    m = complex_gaussian(np.random.default_rng(seed), 2, 2)
    assert match_spectra(eig(m).eigenvalues, quadratic_roots(m)) < 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_eig_matches_cardano(seed):
    m = complex_gaussian(np.random.default_rng(100 + seed), 3, 3)
    assert match_spectra(eig(m).eigenvalues, cubic_roots(m)) < 1e-10


@pytest.mark.parametrize("dim", [4, 9, 24])
def test_eig_recovers_planted_spectrum(dim):
    inst = instance(dim, dim)
    d = eig(inst.h)
    assert match_spectra(d.eigenvalues, inst.eigenvalues) < 1e-9
    assert d.residual < 1e-12
    assert norm(d.p @ d.p_inv - np.eye(dim)) < 1e-10
    assert d.kappa == pytest.approx(np.linalg.cond(d.p), rel=1e-10)


def test_eig_hermitian_input_gives_unitary_p():
    a = complex_gaussian(np.random.default_rng(1), 6, 6)
    d = eig(a + a.conj().T)
    assert np.abs(d.eigenvalues.imag).max() < 1e-12
    assert np.allclose(d.p.conj().T @ d.p, np.eye(6), atol=1e-12)


def test_eig_diagonal_and_scalar():
    d = eig(np.diag([3.0, 1.0 + 2j, -1.0]))
    assert np.allclose(d.eigenvalues, [1 + 2j, -1, 3])
    assert np.allclose(np.abs(d.p), np.eye(3)[:, [1, 2, 0]])
    d1 = eig([[2.5 - 1j]])
    assert d1.eigenvalues[0] == 2.5 - 1j and d1.kappa == pytest.approx(1.0)


def test_eig_rejects_jordan_block():
    with pytest.raises(NonDiagonalizable):
        eig([[1.0, 1.0], [0.0, 1.0]])


def test_eig_kappa_cap():
    h = np.array([[1.0, 1e6], [0.0, 1.0 + 1e-3]])
    with pytest.raises(NonDiagonalizable):
        eig(h, EigOptions(kappa_max=1e4))
    assert eig(h, EigOptions(kappa_max=1e12)).kappa > 1e4


def test_eig_sweep_cap_reports_nonconvergence():
    a = complex_gaussian(np.random.default_rng(0), 6, 6)
    with pytest.raises(NonConvergence):
        eig(a, EigOptions(max_iter=1))


def test_eig_flags_near_degeneracy():
    d = eig(np.diag([1.0, 1.0 + 1e-10, 2.0]))
    assert any("degenerate" in note for note in d.diagnostics)


def test_eig_is_deterministic():
    h = instance(9, 7).h
    a, b = eig(h), eig(h)
    assert np.array_equal(a.p, b.p) and np.array_equal(a.eigenvalues, b.eigenvalues)


def test_decomposition_is_read_only(upper2):
    d = eig(upper2)
    with pytest.raises(ValueError):
        d.p[0, 0] = 3.0


def test_rescaled_decomposition(complex2):
    d = eig(complex2)
    c = np.array([2.0 - 1j, 0.5j])
    r = d.rescaled(c)
    assert np.allclose(r.p, d.p * c[None, :])
    assert np.allclose(r.p @ np.diag(r.eigenvalues) @ r.p_inv, complex2)


@pytest.mark.parametrize("bad", [np.zeros((2, 3)), np.array([[np.nan, 0], [0, 1]]), np.zeros((0, 0)), [1, 2]])
def test_as_matrix_rejects(bad):
    with pytest.raises(InvalidMatrix):
        as_matrix(bad)


def test_inverse_example(upper2):
    assert np.allclose(inverse(upper2), [[1, -0.5], [0, 0.5]], atol=1e-15)


def test_lu_reconstructs():
    a = complex_gaussian(np.random.default_rng(4), 5, 5)
    f, perm = lu(a)
    l = np.tril(f, -1) + np.eye(5)
    assert np.allclose(l @ np.triu(f), a[perm], atol=1e-13)


def test_solve_vector_and_matrix():
    rng = np.random.default_rng(8)
    a = complex_gaussian(rng, 6, 6)
    b = complex_gaussian(rng, 6)
    assert np.allclose(a @ solve(a, b), b)
    bm = complex_gaussian(rng, 6, 3)
    assert np.allclose(solve(a, bm), np.linalg.solve(a, bm))


def test_singular_matrix_raises():
    with pytest.raises(Singular):
        inverse([[1.0, 2.0], [2.0, 4.0]])


@pytest.mark.parametrize("scale", [1e-3, 0.2, 1.0, 3.0, 40.0])
def test_expm_matches_scipy(scale):
    a = scale * complex_gaussian(np.random.default_rng(int(scale * 10)), 5, 5)
    ref = scipy.linalg.expm(a)
    assert norm(expm(a) - ref) / norm(ref) < 1e-12


def test_expm_matches_taylor_series():
    a = complex_gaussian(np.random.default_rng(21), 4, 4)
    ref = taylor_expm(a)
    assert norm(expm(a) - ref) / norm(ref) < 1e-12


def test_spectral_exp_example(complex2):
    d = eig(complex2)
    ref = d.p @ np.diag([np.exp(0.5 - 1j), np.exp(-0.5 - 2j)]) @ d.p_inv
    assert np.allclose(spectral_exp(d, -1j), ref, atol=1e-13)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), dim=st.integers(2, 6), s=st.floats(-2, 2))
def test_spectral_exp_agrees_with_pade(seed, dim, s):
    d = eig(instance(seed, dim).h)
    ref = expm(s * np.asarray(d.h))
    assert norm(spectral_exp(d, s) - ref) <= 1e-9 * max(1.0, norm(ref))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), dim=st.integers(1, 6))
def test_expm_inverse_pair(seed, dim):
    a = complex_gaussian(np.random.default_rng(seed), dim, dim)
    assert norm(expm(a) @ expm(-a) - np.eye(dim)) < 1e-10


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), dim=st.integers(2, 10))
def test_eig_reconstruction_property(seed, dim):
    inst = instance(seed, dim)
    d = eig(inst.h)
    rebuilt = d.p @ (d.eigenvalues[:, None] * d.p_inv)
    assert norm(rebuilt - inst.h) <= 1e-8 * norm(inst.h)
    assert norm(np.asarray(d.h) @ d.p - d.p * d.eigenvalues[None, :]) <= 1e-10 * norm(inst.h)


def test_small_examples():
    d = eig(np.eye(2))
    assert np.array_equal(d.eigenvalues, [1, 1]) and np.array_equal(d.p, np.eye(2))
    with pytest.raises(NonDiagonalizable):
        eig([[0.0, 1.0], [0.0, 0.0]])
    assert np.array_equal(inverse(np.eye(3)), np.eye(3))
    with pytest.raises(Singular):
        inverse([[1.0, 1.0], [1.0, 1.0]])
    assert np.array_equal(expm(np.zeros((3, 3))), np.eye(3))
    assert np.allclose(expm(np.diag([0.5, -2 + 1j])), np.diag(np.exp([0.5, -2 + 1j])), rtol=1e-14)


def test_spectral_exp_small_examples(complex2):
    d = eig(complex2)
    assert np.allclose(spectral_exp(d, 0.0), np.eye(2), atol=1e-14)
    assert np.allclose(spectral_exp(d, -1j), expm(-1j * complex2), atol=1e-13)
    m = eig(instance(44, 4).h)
    assert np.allclose(spectral_exp(m, 1.0), expm(np.asarray(m.h)), rtol=0, atol=1e-9 * norm(expm(np.asarray(m.h))))
