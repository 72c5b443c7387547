"""Shared test configuration.

Hypothesis runs derandomized so the suite is reproducible run to run;
example counts are kept moderate because the properties under test are
pure numerics with no flaky inputs to hunt for.
"""

from hypothesis import HealthCheck, settings

import icpseq

# Class names starting with "Test" are data containers, not test classes.
icpseq.TestConfig.__test__ = False
icpseq.TestOutcome.__test__ = False


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance: full-protocol statistical acceptance criteria (slow)"
    )

settings.register_profile(
    "ci",
    derandomize=True,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
    deadline=None,
)
settings.load_profile("ci")
