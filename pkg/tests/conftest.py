import numpy as np
import pytest


def matrix_with_spectrum(sigma, n, m, rng):
    """n x m matrix with the given singular values and random singular vectors."""
    r = len(sigma)
    U, _ = np.linalg.qr(rng.standard_normal((n, r)))
    V, _ = np.linalg.qr(rng.standard_normal((m, r)))
    return (U * np.asarray(sigma)) @ V.T


def distinct_spectrum(r, rng, low=0.2, high=1.0, gap=0.05):
    while True:
        s = np.sort(rng.uniform(low, high, r))[::-1]
        if r == 1 or np.min(-np.diff(s)) > gap:
            return s


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def exact_gate_instance():
    """4 x 2 data with singular values (1, 1/sqrt 2) on coordinate axes.

    With t0 = pi/8 and b = 6 the eigenvalue registers hold 4, 2 (data) and
    2, 2 (density) exactly, and every state-prep angle is dyadic, so phase
    estimation and loading are exact and the uncompute is clean.
    """
    import math

    from qaop.circuit.config import IterationConfig

    X = np.zeros((4, 2))
    X[0, 0], X[1, 1] = 1.0, 1 / math.sqrt(2)
    cfg = IterationConfig(lambda2=0.25, b=6, d=6, p=12, t0=math.pi / 8, mode="gate")
    return X, cfg


@pytest.fixture(scope="session")
def gate_run():
    from qaop.circuit.iteration import run_iteration
    from qaop.spectral import init_spectral

    X, cfg = exact_gate_instance()
    model = init_spectral(X, 2, cfg.lambda2)
    return model, cfg, run_iteration(model, cfg)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
