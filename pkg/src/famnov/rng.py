"""Deterministic, counter-based random number generation.

The generator is splitmix64: draw ``i`` (0-based) of a stream seeded with
``s`` is ``mix64((s + (i + 1) * GOLDEN) mod 2**64)`` where ``mix64`` is the
standard avalanching finalizer.  Because each output depends only on the seed
and the draw index, draws can be produced one at a time or in vectorized
blocks and the stream is identical either way.

Derived quantities are fixed so that streams are reproducible from the seed
alone:

* uniform double in [0, 1): ``(raw >> 11) * 2.0**-53``
* standard normal deviate: consumes exactly two raw draws ``a, b`` and
  returns ``sqrt(-2 ln u1) * cos(2 pi u2)`` with
  ``u1 = ((a >> 11) + 1) * 2.0**-53`` (never zero) and
  ``u2 = (b >> 11) * 2.0**-53``.  The sine branch of the Box-Muller pair is
  discarded, so n deviates always advance the counter by exactly 2n
  regardless of how the request is batched.
* integer below ``bound``: ``raw % bound`` (one draw; the modulo bias is
  below 2**-53 for every bound used in this package).
* child streams: ``derive_seed(seed, k) = mix64((seed + (k + 1) * GOLDEN)
  mod 2**64)`` gives independent seeds for parallel components.

The raw and uniform streams are exact integer/dyadic arithmetic and therefore
bit-identical on every platform; normal deviates additionally go through the
platform's log and cos, so they are reproducible to within the local libm's
rounding (bit-identical across runs on one platform).
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["Rng", "derive_seed"]

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB
_U53 = 2.0**-53


def _mix64(z: int) -> int:
    z &= _MASK
    z ^= z >> 30
    z = (z * _MIX_A) & _MASK
    z ^= z >> 27
    z = (z * _MIX_B) & _MASK
    z ^= z >> 31
    return z


def derive_seed(seed: int, stream: int) -> int:
    """Deterministically derive the seed of child stream ``stream``."""
    if stream < 0:
        raise ValueError(f"stream index must be >= 0, got {stream}")
    return _mix64((int(seed) + (stream + 1) * _GOLDEN) & _MASK)


class Rng:
    """Seeded splitmix64 stream.

    Single-owner mutable state: the only state is the number of raw draws
    consumed so far.  Callers that need parallel randomness derive child
    seeds via :func:`derive_seed` instead of sharing one instance.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK
        self._index = 0

    def raw(self, n: int) -> np.ndarray:
        """Next ``n`` raw 64-bit draws as a uint64 array."""
        if n < 0:
            raise ValueError(f"draw count must be >= 0, got {n}")
        idx = np.arange(self._index + 1, self._index + n + 1, dtype=np.uint64)
        self._index += n
        with np.errstate(over="ignore"):
            z = np.uint64(self.seed) + idx * np.uint64(_GOLDEN)
            z ^= z >> np.uint64(30)
            z *= np.uint64(_MIX_A)
            z ^= z >> np.uint64(27)
            z *= np.uint64(_MIX_B)
            z ^= z >> np.uint64(31)
        return z

    def next_u64(self) -> int:
        return int(self.raw(1)[0])

    def uniform(self) -> float:
        """One double in [0, 1)."""
        return (self.next_u64() >> 11) * _U53

    def uniforms(self, n: int) -> np.ndarray:
        """``n`` doubles in [0, 1)."""
        return (self.raw(n) >> np.uint64(11)).astype(np.float64) * _U53

    def normal(self) -> float:
        """One standard normal deviate (consumes two raw draws)."""
        a, b = (int(v) for v in self.raw(2))
        u1 = ((a >> 11) + 1) * _U53
        u2 = (b >> 11) * _U53
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def normals(self, n: int) -> np.ndarray:
        """``n`` standard normal deviates (consumes 2n raw draws)."""
        pairs = self.raw(2 * n).reshape(n, 2) >> np.uint64(11)
        u1 = (pairs[:, 0].astype(np.float64) + 1.0) * _U53
        u2 = pairs[:, 1].astype(np.float64) * _U53
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)

    def integer_below(self, bound: int) -> int:
        """One integer in [0, bound)."""
        if bound <= 0:
            raise ValueError(f"bound must be positive, got {bound}")
        return self.next_u64() % bound

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates permutation of range(n), one draw per swap."""
        perm = np.arange(n)
        for i in range(n - 1, 0, -1):
            j = self.integer_below(i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        return perm

    def spawn(self, stream: int) -> "Rng":
        """Independent child generator for the given stream index."""
        return Rng(derive_seed(self.seed, stream))
