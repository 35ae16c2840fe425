import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

from csag.problems import (  # noqa: E402
    gen_gaussian_rewards,
    make_lasso,
    make_policy_eval,
    make_portfolio,
    make_toy_quadratic,
    random_lasso,
    random_mdp,
)

settings.register_profile("ci", max_examples=50, deadline=None)
settings.load_profile("ci")


def suite_problems():
    """The four problem kinds at gradient-check sizes."""
    return {
        "portfolio": make_portfolio(gen_gaussian_rewards(50, 10, 20.0, seed=1)),
        "lasso": make_lasso(random_lasso(50, 10, lam=0.1, eps=1e-4, seed=2)),
        "policy": make_policy_eval(random_mdp(10, 5, gamma=0.9, seed=3), anchor_state=0),
        "toy": make_toy_quadratic(4, 4, 3, 3, mu=0.5, seed=4),
    }


@pytest.fixture(scope="session")
def suite():
    return suite_problems()


@pytest.fixture
def toy():
    return make_toy_quadratic(4, 4, 3, 3, mu=0.5, seed=4)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one pass/fail line per acceptance criterion."""

    def _report(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
