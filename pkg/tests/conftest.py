import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from gausspid.pid import TripletSpec, b_bounds  # noqa: E402

settings.register_profile("default", deadline=None, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=1000,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

MODELS = Path(__file__).resolve().parents[1] / "src" / "gausspid" / "models"

corr = st.floats(-0.95, 0.95, allow_nan=False)


@st.composite
def triplets(draw, margin=1e-3):
    """Valid (a, b, c) with b kept ``margin`` inside its admissible interval."""
    a, c = draw(corr), draw(corr)
    lo, hi = b_bounds(a, c)
    lo, hi = max(lo + margin, -0.95), min(hi - margin, 0.95)
    b = draw(st.floats(lo, hi, allow_nan=False))
    return TripletSpec(a, b, c)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def models_dir():
    return MODELS


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
