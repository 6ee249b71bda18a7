import math
import os

import pytest
from hypothesis import HealthCheck, settings

from hml.moments import spectral_data

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=400)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def k24():
    return spectral_data(24, 40)


@pytest.fixture(scope="session")
def k120_small():
    return spectral_data(120, 64)


@pytest.fixture
def report(capsys):
    """Print one PASS/FAIL line per acceptance criterion, bypassing capture."""

    def emit(name, ok, detail=""):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} {name} {detail}".rstrip())
        return ok

    return emit
