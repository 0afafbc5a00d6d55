import os

import numpy as np
import pytest
from hypothesis import settings

from gsemod.archive import Archive
from gsemod.bitcore import BitString

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def bs(text: str) -> BitString:
    return BitString.from_str(text)


@pytest.fixture
def example_pop():
    """n = 3, hot = 3, cold = 1, D = 10."""
    return Archive.from_strings(["000", "001", "011", "111"])


@pytest.fixture
def np_rng():
    return np.random.default_rng(12345)
