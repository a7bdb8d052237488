import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from spotvol.estimator import PricePath  # noqa: E402
from spotvol.simulate import HestonConfig, path_rng, simulate_heston  # noqa: E402


@pytest.fixture(scope="session")
def heston_small():
    """One 5-day, 5-minute Heston path (n = 390)."""
    return simulate_heston(HestonConfig.scenario(5, 12), path_rng(11, 0))


@pytest.fixture(scope="session")
def heston_1min():
    return simulate_heston(HestonConfig.scenario(21, 60), path_rng(11, 1))


def random_path(n, seed, T=1.0):
    rng = np.random.default_rng(seed)
    vol = 0.2 * np.exp(0.3 * np.cumsum(rng.standard_normal(n)) / np.sqrt(n))
    x = np.concatenate([[0.0], np.cumsum(vol * np.sqrt(T / n) * rng.standard_normal(n))])
    return PricePath(T, x)


ACCEPTANCE_LINES = {}


def record(criterion: int, passed: bool, detail: str = "") -> None:
    """Collect a criterion's outcome; sub-checks of one criterion are ANDed."""
    prev = ACCEPTANCE_LINES.get(criterion)
    ok = passed and (prev is None or prev[0])
    details = [d for d in ((prev[1] if prev else ""), detail) if d]
    ACCEPTANCE_LINES[criterion] = (ok, "; ".join(details))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for c in sorted(ACCEPTANCE_LINES):
        ok, detail = ACCEPTANCE_LINES[c]
        terminalreporter.write_line(f"criterion {c:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
