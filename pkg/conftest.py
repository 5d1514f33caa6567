"""Configuration for pytest."""

import pytest


@pytest.fixture(autouse=True)
def _add_standard_imports(doctest_namespace):
    """Add pyqubofolio namespace for doctest."""
    import numpy as np

    import pyqubofolio as qf

    doctest_namespace["qf"] = qf
    doctest_namespace["np"] = np
