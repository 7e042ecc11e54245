import numpy as np
import pytest


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {key}: {detail}")


@pytest.fixture
def record():
    """Store a one-line verdict for the acceptance summary."""
    def _record(key, ok, detail):
        ACCEPTANCE[key] = (bool(ok), detail)
        print(f"[{'PASS' if ok else 'FAIL'}] {key}: {detail}")
    return _record


@pytest.fixture
def upper2():
    """``[[1, 1], [0, 2]]``: real spectrum, non-normal."""
    return np.array([[1.0, 1.0], [0.0, 2.0]], dtype=np.complex128)


@pytest.fixture
def complex2():
    """Same eigenvectors as ``upper2`` with eigenvalues ``1 + 0.5i`` and ``2 - 0.5i``."""
    p = np.array([[1.0, 1.0 / np.sqrt(2)], [0.0, 1.0 / np.sqrt(2)]], dtype=np.complex128)
    lam = np.array([1 + 0.5j, 2 - 0.5j])
    return p @ np.diag(lam) @ np.linalg.inv(p)

