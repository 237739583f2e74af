import math
import os

import numpy as np
import pytest
from fractions import Fraction

from mspec import sieve, nu_p_weight, dump_table, load_table
from mspec.arith import memory_cap, primes_up_to, is_prime
from mspec.errors import ArgumentError, ResourceError

from conftest import brute_force_factor


def test_mobius_small_values():
    t = sieve("mobius", 8)
    assert list(t.values[1:8]) == [1, -1, -1, 0, -1, 1, -1]
    assert t.values[0] == 0


def test_liouville_twelve():
    t = sieve("liouville", 13)
    assert t.values[12] == -1  # Omega(12) = 3


def test_mertens_values():
    t = sieve("mobius", 1001)
    assert t.values[1:11].sum() == -1
    assert t.values[1:101].sum() == 1
    assert t.values[1:1001].sum() == 2


def test_against_trial_division():
    limit = 10**4
    mob = sieve("mobius", limit + 1).values
    lio = sieve("liouville", limit + 1).values
    for n in range(1, limit + 1):
        factors = brute_force_factor(n)
        omega = sum(factors.values())
        squarefree = all(e == 1 for e in factors.values())
        assert lio[n] == (-1) ** omega
        if squarefree:
            assert mob[n] == (-1) ** omega
            assert mob[n] == lio[n]
        else:
            assert mob[n] == 0


def test_von_mangoldt_identity():
    t = sieve("von_mangoldt", 1000)
    assert t.values[0] == 0 and t.values[1] == 0
    for n in range(2, 1000):
        factors = brute_force_factor(n)
        if len(factors) == 1:
            (p, k), = factors.items()
            assert t.pp_prime[n] == p and t.pp_exp[n] == k
            assert abs(t.values[n] - math.log(p)) < 1e-12
        else:
            assert t.values[n] == 0 and t.pp_prime[n] == 0


def test_von_mangoldt_mass():
    X = 10**6
    t = sieve("von_mangoldt", X)
    assert abs(t.values.sum() / X - 1.0) < 0.1


def test_square_indicator():
    t = sieve("square_indicator", 50)
    squares = {n for n in range(1, 50) if int(math.isqrt(n)) ** 2 == n}
    assert set(np.flatnonzero(t.values)) == squares


def test_segmented_matches_monolithic():
    limit = 1 << 20
    for kind in ("mobius", "liouville", "von_mangoldt"):
        seg = sieve(kind, limit, segment_size=1 << 16)
        mono = sieve(kind, limit, segment_size=limit)
        assert np.array_equal(seg.values, mono.values)


def test_sieve_errors():
    with pytest.raises(ArgumentError):
        sieve("totient", 10)
    with pytest.raises(ArgumentError):
        sieve("mobius", 0)
    with pytest.raises(ResourceError, match="cap"):
        sieve("mobius", 100, mem_cap=10)


def test_memory_cap_env(monkeypatch):
    monkeypatch.setenv("MSPC_MEM_CAP", "123")
    assert memory_cap() == 123
    with pytest.raises(ResourceError):
        sieve("mobius", 200)


def test_nu_p_weight():
    assert nu_p_weight(7, 3) == Fraction(3, 2)
    assert nu_p_weight(9, 3) == 0
    assert nu_p_weight(0, 5) == 0
    with pytest.raises(ArgumentError):
        nu_p_weight(7, 4)


def test_primality_helpers():
    ps = primes_up_to(100)
    assert ps[0] == 2 and ps[-1] == 97 and len(ps) == 25
    for n in range(200):
        assert is_prime(n) == (n in set(map(int, primes_up_to(200))))


def test_dump_load_roundtrip(tmp_path):
    for kind in ("mobius", "von_mangoldt"):
        t = sieve(kind, 500)
        path = str(tmp_path / f"{kind}.bin")
        dump_table(t, path)
        back = load_table(path)
        assert back.kind == kind and back.limit == 500
        assert np.allclose(back.values, t.values)
    with pytest.raises(ArgumentError, match="magic"):
        bad = str(tmp_path / "bad.bin")
        with open(bad, "wb") as fh:
            fh.write(b"NOPE" + b"\x00" * 16)
        load_table(bad)
