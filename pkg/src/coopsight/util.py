"""Shared helpers: angle wrapping, integer apportionment, stable hashing."""

from __future__ import annotations

import hashlib
import math
from typing import Sequence

TWO_PI = 2.0 * math.pi


class CoopsightError(Exception):
    """Base class for toolkit errors surfaced to the CLI."""


def wrap_angle(a: float) -> float:
    """Wrap an angle to [-pi, pi)."""
    return (a + math.pi) % TWO_PI - math.pi


def largest_remainder(total: int, fractions: Sequence[float]) -> list[int]:
    """Apportion `total` into integer counts proportional to `fractions`.

    Largest-remainder method; ties broken by position. Counts sum to
    `total` exactly, so round sizes hit the requested mix with no drift.
    """
    if total < 0:
        raise ValueError(f"total must be >= 0, got {total}")
    quotas = [total * f for f in fractions]
    counts = [math.floor(q) for q in quotas]
    leftover = total - sum(counts)
    by_remainder = sorted(
        range(len(fractions)), key=lambda i: (-(quotas[i] - counts[i]), i)
    )
    for i in by_remainder[:leftover]:
        counts[i] += 1
    return counts


def stable_u64(text: str) -> int:
    """First 8 bytes of sha256(text) as an unsigned int.

    Used wherever a deterministic, input-order-independent ordering or
    sub-seed is needed (python's hash() is salted per process).
    """
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")
