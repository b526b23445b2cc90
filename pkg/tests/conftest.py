import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("repo", deadline=None, derandomize=True, max_examples=60)
settings.load_profile("repo")


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def ks_critical(n, m=None, alpha=0.01):
    """Asymptotic Kolmogorov-Smirnov critical value (one or two samples)."""
    c = np.sqrt(-0.5 * np.log(alpha / 2.0))
    eff = n if m is None else n * m / (n + m)
    return c / np.sqrt(eff)
