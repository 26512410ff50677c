import numpy as np
import pytest

from pdrwave.beampattern import RadarConfig, quadratic_matrix
from pdrwave.solver import QuadraticCost


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_cost(rng, L, gamma=0.0, q_scale=1.0):
    B = crandn(rng, L, L)
    return QuadraticCost(B.conj().T @ B, q_scale * crandn(rng, L), float(rng.uniform(0, 5)), gamma)


def unit(rng, L):
    return np.exp(1j * rng.uniform(0, 2 * np.pi, L))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def ref_cfg():
    return RadarConfig()


@pytest.fixture(scope="session")
def ref_P(ref_cfg):
    return quadratic_matrix(ref_cfg)


_ACCEPTANCE = []


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion; printed in the terminal summary."""

    def record(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  criterion {label}: {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
