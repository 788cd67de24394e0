"""Key hashing primitives.

Every key is first condensed into a 128-bit master hash (a murmur3-style
mix over the raw bytes, keyed by a 64-bit global seed). All later stages
work on the master hash only:

  * the high word drives partition selection and, after a remix with a
    distinct salt, the normalized bucket hash x in (0, 1]
  * the low word drives the seeded per-bucket position hash

All functions here are pure and deterministic. The bulk variants in
``_kernels`` produce bit-identical results and are cross-checked in the
test suite.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from . import _kernels

MASK64 = (1 << 64) - 1

# Salt remixing the high word into the bucket hash, so that partition and
# bucket choices are decorrelated even though both derive from ``hi``.
BUCKET_SALT = 0xC2B2AE3D27D4EB4F
# Salt folded into the seed counter before it meets the low word.
POSITION_SALT = 0x9E3779B97F4A7C15

GlobalSeed = int


class MasterHash(NamedTuple):
    """128-bit key fingerprint: ``hi`` selects partition/bucket, ``lo`` feeds the position hash."""

    hi: int
    lo: int


def mix64(z: int) -> int:
    """64-bit finalizer (splitmix64 style); full avalanche on one word."""
    z &= MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & MASK64
    z ^= z >> 31
    return z


def master_hash(key: bytes, seed: GlobalSeed) -> MasterHash:
    """Hash an arbitrary byte string to a 128-bit master hash.

    murmur3-x64-128 over the key bytes, keyed by ``seed``. Accepts any
    finite byte sequence, including empty.
    """
    if isinstance(key, str):
        key = key.encode("utf-8")
    hi, lo = _murmur3_128(key, seed & MASK64)
    return MasterHash(hi, lo)


def master_hash_many(buf: np.ndarray, offsets: np.ndarray, seed: GlobalSeed):
    """Bulk master hash over concatenated keys.

    ``buf`` is one uint8 array holding all keys back to back and
    ``offsets[i]:offsets[i+1]`` delimits key i. Returns (hi, lo) uint64
    arrays. Bit-identical to calling :func:`master_hash` per key.
    """
    n = len(offsets) - 1
    his = np.empty(n, dtype=np.uint64)
    los = np.empty(n, dtype=np.uint64)
    _kernels.murmur3_many(buf, offsets, np.uint64(seed & MASK64), his, los)
    return his, los


def mix64_many(z: np.ndarray) -> np.ndarray:
    """Vectorized :func:`mix64` over a uint64 array."""
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= np.uint64(0xBF58476D1CE4E5B9)
    z ^= z >> np.uint64(27)
    z *= np.uint64(0x94D049BB133111EB)
    z ^= z >> np.uint64(31)
    return z


def normalized_hash_many(his: np.ndarray) -> np.ndarray:
    """Vectorized normalized bucket hash for an array of high words."""
    xb = mix64_many(his ^ np.uint64(BUCKET_SALT))
    return (xb.astype(np.float64) + 1.0) * 2.0**-64


def to_unit(bits: int) -> float:
    """Map a 64-bit word to the half-open unit interval (0, 1].

    Computed as (bits + 1) / 2^64 with float64 rounding; 0 maps to 2^-64
    and 2^64 - 1 maps to exactly 1.0.
    """
    return (float(bits & MASK64) + 1.0) * 2.0**-64


def bucket_bits(h: MasterHash) -> int:
    """The remixed high word reserved for bucket selection."""
    return mix64(h.hi ^ BUCKET_SALT)


def normalized_hash(h: MasterHash) -> float:
    """Normalized bucket hash x in (0, 1] of a master hash."""
    return to_unit(bucket_bits(h))


def partition_index(h: MasterHash, num_partitions: int) -> int:
    """Partition of a master hash: fixed-point reduction of ``hi``."""
    return ((h.hi & MASK64) * num_partitions) >> 64


def position_hash(h: MasterHash, s: int, m: int) -> int:
    """Seeded position of a key inside a partition of size ``m``.

    The seed counter ``s`` is finalized together with a salt, xored into
    the low word, remixed, and reduced to [0, m) by fixed-point
    multiplication (no modulo bias).
    """
    if m < 1:
        raise ValueError("partition size must be >= 1")
    z = mix64(h.lo ^ mix64(s ^ POSITION_SALT))
    return (z * m) >> 64


def _rotl64(x: int, r: int) -> int:
    return ((x << r) | (x >> (64 - r))) & MASK64


def _fmix64(z: int) -> int:
    z ^= z >> 33
    z = (z * 0xFF51AFD7ED558CCD) & MASK64
    z ^= z >> 33
    z = (z * 0xC4CEB9FE1A85EC53) & MASK64
    z ^= z >> 33
    return z


def _murmur3_128(key: bytes, seed: int) -> tuple[int, int]:
    """murmur3-x64-128; reference implementation mirrored by the numba kernel."""
    c1 = 0x87C37B91114253D5
    c2 = 0x4CF5AD432745937F
    length = len(key)
    h1 = seed
    h2 = seed

    nblocks = length // 16
    for b in range(nblocks):
        k1 = int.from_bytes(key[b * 16 : b * 16 + 8], "little")
        k2 = int.from_bytes(key[b * 16 + 8 : b * 16 + 16], "little")

        k1 = (k1 * c1) & MASK64
        k1 = _rotl64(k1, 31)
        k1 = (k1 * c2) & MASK64
        h1 ^= k1
        h1 = _rotl64(h1, 27)
        h1 = (h1 + h2) & MASK64
        h1 = (h1 * 5 + 0x52DCE729) & MASK64

        k2 = (k2 * c2) & MASK64
        k2 = _rotl64(k2, 33)
        k2 = (k2 * c1) & MASK64
        h2 ^= k2
        h2 = _rotl64(h2, 31)
        h2 = (h2 + h1) & MASK64
        h2 = (h2 * 5 + 0x38495AB5) & MASK64

    tail = key[nblocks * 16 :]
    k1 = 0
    k2 = 0
    if len(tail) > 8:
        k2 = int.from_bytes(tail[8:], "little")
        k1 = int.from_bytes(tail[:8], "little")
    elif tail:
        k1 = int.from_bytes(tail, "little")
    if k2:
        k2 = (k2 * c2) & MASK64
        k2 = _rotl64(k2, 33)
        k2 = (k2 * c1) & MASK64
        h2 ^= k2
    if k1:
        k1 = (k1 * c1) & MASK64
        k1 = _rotl64(k1, 31)
        k1 = (k1 * c2) & MASK64
        h1 ^= k1

    h1 ^= length
    h2 ^= length
    h1 = (h1 + h2) & MASK64
    h2 = (h2 + h1) & MASK64
    h1 = _fmix64(h1)
    h2 = _fmix64(h2)
    h1 = (h1 + h2) & MASK64
    h2 = (h2 + h1) & MASK64
    return h1, h2
