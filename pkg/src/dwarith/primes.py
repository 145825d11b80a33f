"""Probable-prime testing, NTT-friendly prime table and roots of unity."""

from __future__ import annotations

import random

MR_ROUNDS = 64
MR_SEED = 0x5EED

# Probable primes with 2**17 | q - 1, so every transform size up to 2**17 has a root.
# Keys are bit lengths.
NTT_PRIMES = {
    60: 1054136163626647553,
    100: 855267360615771641765978963969,
    120: 1102947802620174326214790568962818049,
    123: 9671267662124145251093305812534558721,
    124: 19323778724923476330452165673978167297,
}

_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47)


class RootOfUnityError(ValueError):
    pass


def is_probable_prime(n: int, rounds: int = MR_ROUNDS, seed: int = MR_SEED) -> bool:
    """Miller-Rabin with ``rounds`` bases drawn from a seeded generator."""
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    rng = random.Random(seed)
    for _ in range(rounds):
        a = rng.randrange(2, n - 1)
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def prime_factors(n: int) -> list:
    """Distinct prime factors of a small positive integer by trial division."""
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def find_root_of_unity(q: int, n: int, max_candidates: int = 10_000) -> int:
    """Primitive ``n``-th root of unity modulo the prime ``q``.

    Scans candidates ``g = 2, 3, ...`` and returns the first ``g**((q-1)/n)``
    whose order is exactly ``n``.  ``q`` may also be a :class:`Modulus`.
    """
    q = int(getattr(q, "q", q))
    if n < 1:
        raise RootOfUnityError(f"transform size must be positive, got {n}")
    if not is_probable_prime(q):
        raise RootOfUnityError(f"{q} is not prime")
    if (q - 1) % n:
        raise RootOfUnityError(f"{n} does not divide q - 1 = {q - 1}")
    e = (q - 1) // n
    factors = prime_factors(n)
    for g in range(2, min(q, 2 + max_candidates)):
        w = pow(g, e, q)
        if all(pow(w, n // p, q) != 1 for p in factors):
            return w
    if n == 1:
        return 1
    raise RootOfUnityError(f"no primitive {n}-th root found in {max_candidates} candidates")


def generate_ntt_prime(bits: int, two_adicity: int = 17, seed: int = 17) -> int:
    """Random ``bits``-bit probable prime with ``2**two_adicity | q - 1``."""
    rng = random.Random(seed)
    step = 1 << two_adicity
    while True:
        k = rng.getrandbits(bits - two_adicity) | (1 << (bits - two_adicity - 1))
        q = k * step + 1
        if q.bit_length() == bits and is_probable_prime(q):
            return q
