import numpy as np
import pytest

from nearplay.game import Game, PotentialFunction

ACCEPTANCE = {}


def random_game(rng, n, k, scale=1.0):
    return Game(rng.uniform(-scale, scale, (n,) + (k,) * n))


def random_profile(rng, n, k):
    return rng.dirichlet(np.ones(k), size=n)


def random_potential_game(rng, n, k):
    """Exact potential game: u_i = phi + (term independent of a_i)."""
    phi = rng.uniform(-1, 1, (k,) * n)
    u = np.empty((n,) + (k,) * n)
    for i in range(n):
        other = rng.uniform(-1, 1, (k,) * n).mean(axis=i, keepdims=True)
        u[i] = phi + np.broadcast_to(other, (k,) * n)
    return Game(u), PotentialFunction(phi)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def record(criterion, passed, detail=""):
    ACCEPTANCE[criterion] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key}: {'PASS' if passed else 'FAIL'}  {detail}")
