import numpy as np
import pytest

from softsense.heads import HeadLabels
from softsense.nn import make_rng


@pytest.fixture
def rng():
    return make_rng(1234)


def random_labels(rng, n, n_heads, missing_rate=0.3) -> HeadLabels:
    """Random ternary labels with every sample observed at least once."""
    codes = rng.integers(0, 2, size=(n, n_heads)).astype(np.int8)
    mask = rng.uniform(size=(n, n_heads)) < missing_rate
    codes[mask] = -1
    for i in range(n):
        if (codes[i] < 0).all():
            codes[i, rng.integers(0, n_heads)] = rng.integers(0, 2)
    return HeadLabels(codes)
