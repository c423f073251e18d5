import os
from datetime import timedelta

import hypothesis
import pytest

hypothesis.settings.register_profile("dev", max_examples=50, deadline=None)
hypothesis.settings.register_profile("long", max_examples=500, deadline=None)
hypothesis.settings.register_profile(
    "ci", max_examples=200, deadline=timedelta(seconds=30)
)

hypothesis.settings.load_profile(os.getenv(u"HYPOTHESIS_PROFILE", "dev"))


def pytest_collection_modifyitems(config, items):
    if os.getenv("ADAPTIVE_HTUCKER_SLOW"):
        return
    skip = pytest.mark.skip(reason="set ADAPTIVE_HTUCKER_SLOW to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)
