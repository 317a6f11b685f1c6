import math

import numpy as np
import pytest

from rocarc.data import GaussianSpec, gen_gaussian_pair

ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, name: str, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {name} -- {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)


def atan_truth(x):
    """arctan(p+/p-) for p+ = N(1, 1), p- = N(-1, 1): the ratio is exp(2x)."""
    return np.arctan(np.exp(2.0 * np.asarray(x, dtype=float)))


def binormal(n_pos, n_neg, seed, shift=1.0):
    return gen_gaussian_pair(GaussianSpec((shift,)), GaussianSpec((-shift,)), n_pos, n_neg, seed)


def null_pair(n, seed, dim=1):
    g = GaussianSpec(tuple([0.0] * dim))
    return gen_gaussian_pair(g, g, n, n, seed)


def normal_cdf(x):
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
