"""Deterministic seeded randomness.

All stochastic operations in the package draw from counter-based 64-bit
streams.  Value ``i`` of the stream with key ``key`` is

    mix64((key + (i + 1) * GOLDEN) mod 2**64)

where ``mix64`` is two xorshift-multiply rounds plus a final xorshift
(the splitmix64 output function).  Streams are stateless: any slice can
be regenerated directly, and the pure-Python and numpy paths produce
bit-identical values.  Sub-streams are derived from a user seed plus a
label path, so independent experiment components never share draws.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MULT1 = 0xBF58476D1CE4E5B9
_MULT2 = 0x94D049BB133111EB

# 2**-53, so (v >> 11) * _UNIT is an exactly representable float in [0, 1)
_UNIT = 1.0 / (1 << 53)


def mix64(z: int) -> int:
    """Scramble a 64-bit integer (splitmix64 finalizer)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MULT1) & MASK64
    z = ((z ^ (z >> 27)) * _MULT2) & MASK64
    return z ^ (z >> 31)


def derive_key(seed: int, *tokens) -> int:
    """Derive a stream key from a seed and a label path.

    Tokens may be ints or strings; the fold is order-sensitive, so
    ``derive_key(s, "a", 0) != derive_key(s, 0, "a")``.
    """
    z = mix64(seed & MASK64)
    for tok in tokens:
        if isinstance(tok, str):
            data = tok.encode("utf-8")
            z = mix64(z ^ mix64(len(data) | 0x5139077B5A6E3C21))
            for off in range(0, len(data), 8):
                chunk = int.from_bytes(data[off : off + 8], "little")
                z = mix64(z ^ chunk)
        else:
            z = mix64(z ^ mix64(int(tok) & MASK64))
    return z


def u64(key: int, index: int) -> int:
    """Stream value ``index`` as a Python int in [0, 2**64)."""
    return mix64((key + (index + 1) * GOLDEN) & MASK64)


def uniform(key: int, index: int) -> float:
    """Stream value ``index`` as a float in [0, 1)."""
    return (u64(key, index) >> 11) * _UNIT


def u64_array(key: int, start: int, count: int) -> np.ndarray:
    """Vectorized stream slice ``[start, start+count)`` as uint64."""
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    z = np.uint64(key) + idx * np.uint64(GOLDEN)  # wraps mod 2**64
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MULT1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MULT2)
    return z ^ (z >> np.uint64(31))


def uniform_array(key: int, start: int, count: int) -> np.ndarray:
    """Vectorized stream slice as float64 values in [0, 1)."""
    return (u64_array(key, start, count) >> np.uint64(11)).astype(np.float64) * _UNIT


def integer_below(key: int, index: int, n: int) -> int:
    """Stream value ``index`` mapped to [0, n) by floor(uniform * n).

    Uses the 53-bit uniform value; bias is negligible for n well below
    2**53 and the mapping is identical in scalar and vector code paths.
    """
    return min(int(uniform(key, index) * n), n - 1)
