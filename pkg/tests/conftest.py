import sys

import numpy as np
import pytest

from swarmlab.measures import Grid1D
from swarmlab.potentials import PotentialSpec


@pytest.fixture(params=["c0", "c2"])
def spec(request):
    return PotentialSpec(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def grid():
    return Grid1D()


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion, if the suite ran."""
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(results, key=lambda k: (isinstance(k, str), str(k).zfill(3))):
        checks = results[key]
        ok = all(c[0] for c in checks)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {key}: "
                                    + " | ".join(d for _, d in checks))
