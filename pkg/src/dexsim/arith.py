"""Natural/integer arithmetic with explicit partiality.

Contract code must only use the partial (``*_opt``) operations: an absent
result is how an entrypoint signals failure.  The total truncated/defaulting
variants mirror the arithmetic prelude of the on-chain target language and
exist for differential testing only; contracts never call them.

All values are Python ints, so everything is arbitrary precision.
"""

from __future__ import annotations


def sub_opt(n: int, m: int) -> int | None:
    """n - m on naturals, absent when the result would be negative."""
    if n < m:
        return None
    return n - m


def div_opt(n: int, m: int) -> int | None:
    """Floor division, absent on zero divisor."""
    if m == 0:
        return None
    return n // m


def ceildiv_opt(n: int, m: int) -> int | None:
    """Ceiling division, absent on zero divisor."""
    if m == 0:
        return None
    return -(-n // m)


def mod_opt(n: int, m: int) -> int | None:
    """Euclidean remainder, absent on zero divisor."""
    if m == 0:
        return None
    return n % m


def sub_trunc(n: int, m: int) -> int:
    """Truncated subtraction: 0 when m exceeds n (prelude semantics)."""
    if n < m:
        return 0
    return n - m


def mod_total(n: int, m: int) -> int:
    """Remainder defaulting to 0 on zero divisor (prelude semantics)."""
    if m == 0:
        return 0
    return n % m


def int_add_nat(n: int, q: int) -> int | None:
    """Apply a signed quantity to a natural; absent when it would go negative."""
    r = n + q
    if r < 0:
        return None
    return r


def amount_to_nat(a: int) -> int:
    """Mutez are naturals in this model; the embedding is the identity."""
    return a
