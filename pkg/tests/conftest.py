import numpy as np
import pytest

from hybridseg import phantom

ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(line)


@pytest.fixture
def record_criterion():
    def record(number, name, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] #{number} {name}: {detail}"
        ACCEPTANCE_RESULTS.append(line)
        print(line)
        return passed
    return record


@pytest.fixture(scope="session")
def noisy_sphere():
    spec = phantom.sphere_spec(dims=64, noise_sigma=0.1, rng_seed=7)
    volume, truth = phantom.generate(spec)
    return spec, volume, truth


@pytest.fixture(scope="session")
def bent_tube():
    spec = phantom.bent_tube_spec(dims=64, noise_sigma=0.1, rng_seed=11)
    volume, truth = phantom.generate(spec)
    return spec, volume, truth


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def ball(shape, center, radius):
    grid = np.indices(shape, dtype=np.float64)
    return sum((g - c) ** 2 for g, c in zip(grid, center)) <= radius * radius


def box(shape, lo, hi):
    m = np.zeros(shape, dtype=bool)
    m[lo[0]:hi[0], lo[1]:hi[1], lo[2]:hi[2]] = True
    return m
