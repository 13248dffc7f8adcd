import re

import numpy as np
import pytest

from zeroradius import StateSpaceSystem, StructuredPattern, affine_pattern

_acceptance_results = []


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    m = re.match(r"test_a(\d+)_(\w+)", name)
    if not m:
        return
    label = f"A{int(m.group(1))}"
    if "extended" in m.group(2):
        label += " (extended)"
    elif label == "A5":
        label += " (fast)"
    desc = m.group(2).replace("_", " ")
    _acceptance_results.append((label, desc, report.outcome.upper()))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria:")
    for label, desc, outcome in _acceptance_results:
        terminalreporter.write_line(f"  {label:14s} {desc:40s} {outcome}")


@pytest.fixture
def bench_system():
    """Three-state, two-output, one-input benchmark system (no invariant
    zeros; outputs already outnumber inputs)."""
    A = np.array([[0.74, -0.12, -0.38],
                  [-0.69, 1.62, -0.21],
                  [-2.08, 0.63, 0.14]])
    B = np.array([[1.06], [0.71], [0.61]])
    C = np.array([[-1.23, 1.02, -0.66],
                  [-0.26, 2.51, 1.13]])
    D = np.array([[1.33], [-2.89]])
    return StateSpaceSystem(A, B, C, D)


@pytest.fixture
def bench_system_flipped(bench_system):
    """The same plant as the user originally wrote it (one output, two
    inputs), before orientation normalization."""
    s = bench_system
    return StateSpaceSystem(s.A.T, s.C.T, s.B.T, s.D.T)


@pytest.fixture
def fourcell_pattern(bench_system):
    shape = (bench_system.n + bench_system.m, bench_system.n + bench_system.p)
    return StructuredPattern.from_indices([0, 2], [0, 2], shape)


@pytest.fixture
def twocell_pattern(bench_system):
    shape = (bench_system.n + bench_system.m, bench_system.n + bench_system.p)
    return StructuredPattern.from_indices([0], [0, 2], shape)


@pytest.fixture
def threecell_pattern(bench_system):
    shape = (bench_system.n + bench_system.m, bench_system.n + bench_system.p)
    return affine_pattern([(0, 0), (0, 2), (2, 0)], shape)


#: The benchmark point where the four-cell radius is documented.
BENCH_S = 0.8297 + 0.5583j
BENCH_NORM = 0.2086
BENCH_DELTA_R = np.array([[-0.0341, -0.2048], [0.0682, -0.0307]])

#: Two-cell regime: the only feasible points and the radius there.
TWOCELL_S = 0.8108 + 0.5367j
TWOCELL_NORM = 0.2097


def random_system(rng, zero_free=None):
    """Random small system with full-column-rank [B; D] (no input that is
    silent in every channel, which would fake a zero at every s)."""
    while True:
        n = int(rng.integers(1, 4))
        p = int(rng.integers(1, 3))
        m = int(rng.integers(p, 4))
        A = rng.standard_normal((n, n))
        B = rng.standard_normal((n, p))
        C = rng.standard_normal((m, n))
        D = rng.standard_normal((m, p))
        if rng.random() < 0.3:
            D[:] = 0.0
        if np.linalg.matrix_rank(np.vstack([B, D])) < p:
            continue
        sys = StateSpaceSystem(A, B, C, D)
        if zero_free is None:
            return sys
        from zeroradius import ENTIRE_COMPLEX_PLANE, invariant_zeros
        z = invariant_zeros(sys)
        has = z is ENTIRE_COMPLEX_PLANE or len(z) > 0
        if has != zero_free:
            return sys
