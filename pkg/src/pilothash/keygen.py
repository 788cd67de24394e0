"""Deterministic benchmark key corpora.

Keys are random printable-ASCII strings (bytes 33..126, so corpora can be
stored one key per line) with lengths uniform in [10, 50]. A corpus is a
single flat byte buffer plus offsets, which is what the bulk hashing
kernel wants; Python-level access still hands out ordinary bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .hashing import master_hash_many

MIN_LEN = 10
MAX_LEN = 50
CHAR_LO = 33
CHAR_HI = 126
_DEDUP_SEED = 0x5EEDC0DE


@dataclass(frozen=True)
class KeyCorpus:
    buf: np.ndarray  # uint8, all keys concatenated
    offsets: np.ndarray  # int64, len(keys) + 1

    def __len__(self) -> int:
        return len(self.offsets) - 1

    def __getitem__(self, i: int) -> bytes:
        return self.buf[self.offsets[i] : self.offsets[i + 1]].tobytes()

    def __iter__(self) -> Iterator[bytes]:
        return (self[i] for i in range(len(self)))

    @classmethod
    def from_keys(cls, keys: Iterable[bytes | str]) -> "KeyCorpus":
        blobs = [k.encode("utf-8") if isinstance(k, str) else bytes(k) for k in keys]
        offsets = np.zeros(len(blobs) + 1, dtype=np.int64)
        np.cumsum([len(b) for b in blobs], out=offsets[1:])
        buf = np.frombuffer(b"".join(blobs), dtype=np.uint8).copy()
        return cls(buf, offsets)

    def save(self, path) -> None:
        with open(path, "wb") as f:
            for key in self:
                f.write(key)
                f.write(b"\n")

    @classmethod
    def load(cls, path) -> "KeyCorpus":
        with open(path, "rb") as f:
            lines = f.read().splitlines()
        return cls.from_keys(lines)


def as_corpus(keys) -> KeyCorpus:
    if isinstance(keys, KeyCorpus):
        return keys
    return KeyCorpus.from_keys(keys)


def _fingerprints(buf: np.ndarray, offsets: np.ndarray):
    return master_hash_many(buf, offsets, _DEDUP_SEED)


def _duplicate_indices(buf: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Indices of keys whose 128-bit fingerprint repeats an earlier one."""
    his, los = _fingerprints(buf, offsets)
    order = np.lexsort((los, his))
    same = (his[order][1:] == his[order][:-1]) & (los[order][1:] == los[order][:-1])
    return np.sort(order[1:][same])


def gen_keys(n: int, prng_seed: int) -> KeyCorpus:
    """n distinct random keys; deterministic in (n, prng_seed)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(prng_seed)
    lengths = rng.integers(MIN_LEN, MAX_LEN + 1, size=n, dtype=np.int64)
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    buf = rng.integers(CHAR_LO, CHAR_HI + 1, size=int(offsets[-1]), dtype=np.uint8)

    # collisions are ~never at this scale, but the contract says distinct
    while True:
        dups = _duplicate_indices(buf, offsets)
        if len(dups) == 0:
            break
        pieces = []
        at = 0
        new_lengths = lengths.copy()
        for i in dups:
            new_lengths[i] = rng.integers(MIN_LEN, MAX_LEN + 1)
        new_offsets = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(new_lengths, out=new_offsets[1:])
        for i in range(n):
            if at < len(dups) and dups[at] == i:
                pieces.append(
                    rng.integers(CHAR_LO, CHAR_HI + 1, size=int(new_lengths[i]), dtype=np.uint8)
                )
                at += 1
            else:
                pieces.append(buf[offsets[i] : offsets[i + 1]])
        buf = np.concatenate(pieces)
        offsets = new_offsets
        lengths = new_lengths
    return KeyCorpus(buf, offsets)
