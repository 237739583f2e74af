import numpy as np
import pytest

from mspec import GroupShape, sieve


@pytest.fixture(scope="session")
def mobius_64():
    return sieve("mobius", 64).values.astype(np.float64)


def naive_coefficient(values, a, shape):
    """O(X) direct evaluation of one coefficient from the definition."""
    from mspec.group import char_values

    return np.mean(np.asarray(values, dtype=np.complex128)
                   * np.conj(char_values(a, shape)))


def brute_force_factor(n):
    """Trial-division factorization, independent of the sieve code."""
    factors = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            factors[d] = factors.get(d, 0) + 1
            n //= d
        d += 1
    if n > 1:
        factors[n] = factors.get(n, 0) + 1
    return factors
