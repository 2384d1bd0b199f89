import numpy as np
import pytest

from hidim import CorrMatrix


def random_corr(rng: np.random.Generator, m: int) -> CorrMatrix:
    """A random valid correlation matrix from a full-rank Gram factor."""
    a = rng.standard_normal((m, m + 3))
    cov = a @ a.T
    d = np.sqrt(np.diag(cov))
    return CorrMatrix(cov / np.outer(d, d))


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(0)
