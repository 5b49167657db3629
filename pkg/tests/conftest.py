import numpy as np
import pytest

from qmle.representation import RepTuple

# one line per acceptance criterion, printed at the end of the run
CRITERIA: dict[int, str] = {}


def record_criterion(number: int, title: str, passed: bool, detail: str = "") -> None:
    line = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {title}"
    if detail:
        line += f": {detail}"
    CRITERIA[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[k])


def golden_4x7_tuple(rng=None) -> RepTuple:
    """Two 4 x 7 matrices with the block zero pattern of the 4 x 7 example:
    row 1 on columns 1-2, row 2 on columns 3-4, rows 3-4 on columns 5-7."""
    rng = np.random.default_rng(rng)
    Y = np.zeros((2, 4, 7))
    Y[:, 0, 0:2] = rng.standard_normal((2, 2))
    Y[:, 1, 2:4] = rng.standard_normal((2, 2))
    Y[:, 2:4, 4:7] = rng.standard_normal((2, 2, 3))
    return RepTuple(Y, "real")


def random_sl(n: int, rng, dtype=float) -> np.ndarray:
    """Random determinant-one matrix with singular values in [1/2, 2].

    The bounded condition number keeps the transformed samples at the same
    rounding floor as the originals.
    """

    def orth():
        g = rng.standard_normal((n, n))
        if dtype is complex:
            g = g + 1j * rng.standard_normal((n, n))
        return np.linalg.qr(g)[0]

    g = orth() @ np.diag(rng.uniform(0.5, 2.0, n)) @ orth()
    det = np.linalg.det(g)
    if np.isrealobj(g):
        if det < 0:
            g[0] *= -1
        return g / abs(det) ** (1.0 / n)
    return g / det ** (1.0 / n)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
