"""Integer sequence encoders for the per-bucket seeds.

Two building blocks:

  Compact      every value in the same fixed width (the bit length of the
               largest value), LSB-first within each field
  Golomb-Rice  low b bits compact, high part unary (zeros terminated by a
               one), with a sampled select-1 index for constant-time reads

On top of them, two layouts over the (partition x bucket) seed matrix:

  InterleavedSeeds  one encoder per bucket index, each holding that
                    bucket's seed from every partition; the first t
                    encoders are Compact, the rest Rice
  MonoSeeds         a single encoder over all seeds in partition order

Bit streams are little-endian: bit i of a stream lives in byte i >> 3 at
in-byte position i & 7.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

FULL64 = 0xFFFFFFFFFFFFFFFF
SELECT_SAMPLE = 1024

KIND_COMPACT = 0
KIND_RICE = 1


def _pack_fields(values: np.ndarray, width: int) -> np.ndarray:
    """Pack fixed-width fields into uint64 words, LSB-first per field."""
    count = len(values)
    nbits = count * width
    nwords = (nbits + 63) >> 6
    words = np.zeros(nwords + 1, dtype=np.uint64)
    if width == 0 or count == 0:
        return words[:nwords]
    v = values.astype(np.uint64)
    pos = np.arange(count, dtype=np.uint64) * np.uint64(width)
    wi = (pos >> np.uint64(6)).astype(np.int64)
    off = pos & np.uint64(63)
    np.bitwise_or.at(words, wi, v << off)
    # bits spilling into the next word; (v >> 1) >> (63 - off) avoids a shift by 64
    np.bitwise_or.at(words, wi + 1, (v >> np.uint64(1)) >> (np.uint64(63) - off))
    return words[:nwords]


def _unpack_fields(words: np.ndarray, width: int, count: int) -> np.ndarray:
    if width == 0 or count == 0:
        return np.zeros(count, dtype=np.uint64)
    padded = np.concatenate([words, np.zeros(1, dtype=np.uint64)])
    pos = np.arange(count, dtype=np.uint64) * np.uint64(width)
    wi = (pos >> np.uint64(6)).astype(np.int64)
    off = pos & np.uint64(63)
    lo = padded[wi] >> off
    hi = (padded[wi + 1] << np.uint64(1)) << (np.uint64(63) - off)
    mask = np.uint64(FULL64 if width == 64 else (1 << width) - 1)
    return (lo | hi) & mask


def _bits_to_bytes(words: np.ndarray, nbits: int) -> bytes:
    nbytes = (nbits + 7) // 8
    return words.tobytes()[:nbytes]


def _bytes_to_words(data: bytes, nbits: int) -> np.ndarray:
    nwords = (nbits + 63) >> 6
    buf = data.ljust(nwords * 8, b"\x00")
    return np.frombuffer(buf, dtype="<u8").astype(np.uint64)


@dataclass
class CompactVector:
    width: int
    count: int
    words: np.ndarray

    @classmethod
    def encode(cls, values: np.ndarray) -> "CompactVector":
        values = np.asarray(values, dtype=np.uint64)
        width = int(values.max()).bit_length() if len(values) else 0
        return cls(width, len(values), _pack_fields(values, width))

    def get(self, i: int) -> int:
        if not 0 <= i < self.count:
            raise IndexError("compact index out of range")
        if self.width == 0:
            return 0
        pos = i * self.width
        wi, off = pos >> 6, pos & 63
        v = int(self.words[wi]) >> off
        if off + self.width > 64:
            v |= int(self.words[wi + 1]) << (64 - off)
        return v & ((1 << self.width) - 1)

    def decode_all(self) -> np.ndarray:
        return _unpack_fields(self.words, self.width, self.count)

    @property
    def payload_bits(self) -> int:
        return self.count * self.width


class Select:
    """Sampled select-1 over a little-endian bit stream.

    Stores the position of every SELECT_SAMPLE-th set bit; a query jumps
    to the nearest sample and scans words from there.
    """

    def __init__(self, words: np.ndarray, nbits: int, samples: np.ndarray):
        self.words = words
        self.nbits = nbits
        self.samples = samples

    @classmethod
    def from_ones(cls, words: np.ndarray, nbits: int, ones: np.ndarray) -> "Select":
        return cls(words, nbits, ones[::SELECT_SAMPLE].astype(np.int64))

    @classmethod
    def build(cls, words: np.ndarray, nbits: int) -> "Select":
        return cls.from_ones(words, nbits, scan_ones(words, nbits))

    def select1(self, k: int) -> int:
        """Position of the (k+1)-th set bit (k is 0-based)."""
        if k < 0 or (k >> 10) >= len(self.samples):
            raise IndexError("select rank out of range")
        spos = int(self.samples[k >> 10])
        need = k - ((k >> 10) << 10) + 1
        w = spos >> 6
        word = int(self.words[w]) & (FULL64 << (spos & 63))
        while True:
            c = word.bit_count()
            if c >= need:
                for _ in range(need - 1):
                    word &= word - 1
                return (w << 6) + ((word & -word).bit_length() - 1)
            need -= c
            w += 1
            word = int(self.words[w])

    def next_one(self, pos: int) -> int:
        """Position of the first set bit at index >= pos."""
        w = pos >> 6
        word = int(self.words[w]) & (FULL64 << (pos & 63))
        while word == 0:
            w += 1
            word = int(self.words[w])
        return (w << 6) + ((word & -word).bit_length() - 1)


def scan_ones(words: np.ndarray, nbits: int) -> np.ndarray:
    """Positions of all set bits, via a vectorized unpack."""
    if nbits == 0:
        return np.zeros(0, dtype=np.int64)
    bits = np.unpackbits(words.view(np.uint8), bitorder="little")[:nbits]
    return np.flatnonzero(bits).astype(np.int64)


def rice_parameter(values: np.ndarray) -> int:
    """The b in [0, 64] minimizing the exact Rice-coded size; ties go low.

    Encoded size at parameter b is count*(b+1) + sum(v >> b).
    """
    values = np.asarray(values, dtype=np.uint64)
    count = len(values)
    if count == 0:
        return 0
    best_b, best_cost = 0, None
    top = int(values.max()).bit_length()
    for b in range(min(64, top + 1) + 1):
        shifted = values >> np.uint64(min(b, 63))
        if b > 63:
            shifted = shifted >> np.uint64(b - 63)
        cost = count * (b + 1) + int(shifted.sum(dtype=np.uint64))
        if best_cost is None or cost < best_cost:
            best_b, best_cost = b, cost
    return best_b


@dataclass
class RiceVector:
    b: int
    count: int
    lows: CompactVector
    highs: np.ndarray  # uint64 words of the unary stream
    highs_nbits: int
    select: Select

    @classmethod
    def encode(cls, values: np.ndarray, b: int | None = None) -> "RiceVector":
        values = np.asarray(values, dtype=np.uint64)
        if b is None:
            b = rice_parameter(values)
        if not 0 <= b <= 64:
            raise ValueError("rice parameter must be in [0, 64]")
        count = len(values)
        if b == 0:
            low_vals = np.zeros(count, dtype=np.uint64)
            high = values.copy()
        elif b == 64:
            low_vals = values.copy()
            high = np.zeros(count, dtype=np.uint64)
        else:
            low_vals = values & np.uint64((1 << b) - 1)
            high = values >> np.uint64(b)
        lows = CompactVector(b, count, _pack_fields(low_vals, b))
        ones = (np.cumsum(high.astype(np.int64) + 1) - 1) if count else np.zeros(0, np.int64)
        nbits = int(ones[-1]) + 1 if count else 0
        words = np.zeros(((nbits + 63) >> 6) + 1, dtype=np.uint64)
        np.bitwise_or.at(
            words,
            (ones >> 6).astype(np.int64),
            np.uint64(1) << (ones.astype(np.uint64) & np.uint64(63)),
        )
        words = words[: (nbits + 63) >> 6]
        return cls(b, count, lows, words, nbits, Select.from_ones(words, nbits, ones))

    def get(self, i: int) -> int:
        if not 0 <= i < self.count:
            raise IndexError("rice index out of range")
        prev = self.select.select1(i - 1) if i > 0 else -1
        pos = self.select.next_one(prev + 1)
        high = pos - prev - 1
        return (high << self.b) | self.lows.get(i)

    def decode_all(self) -> np.ndarray:
        ones = scan_ones(self.highs, self.highs_nbits)
        high = np.diff(np.concatenate([[-1], ones])) - 1
        return (high.astype(np.uint64) << np.uint64(self.b)) | self.lows.decode_all()

    @property
    def payload_bits(self) -> int:
        return self.lows.payload_bits + self.highs_nbits


Encoder = CompactVector | RiceVector


def _encoder_block(enc: Encoder) -> bytes:
    if isinstance(enc, CompactVector):
        head = struct.pack("<BBQ", KIND_COMPACT, enc.width, enc.count)
        return head + _bits_to_bytes(enc.words, enc.payload_bits)
    head = struct.pack("<BBQ", KIND_RICE, enc.b, enc.count)
    samples = enc.select.samples
    body = struct.pack("<QI", enc.highs_nbits, len(samples))
    body += samples.astype("<i8").tobytes()
    body += _bits_to_bytes(enc.lows.words, enc.lows.payload_bits)
    body += _bits_to_bytes(enc.highs, enc.highs_nbits)
    return head + body


def _parse_encoder(data: bytes, at: int) -> tuple[Encoder, int]:
    kind, param, count = struct.unpack_from("<BBQ", data, at)
    at += 10
    if kind == KIND_COMPACT:
        nbytes = (count * param + 7) // 8
        words = _bytes_to_words(data[at : at + nbytes], count * param)
        return CompactVector(param, count, words), at + nbytes
    if kind != KIND_RICE:
        raise ValueError(f"unknown encoder kind {kind}")
    highs_nbits, nsamples = struct.unpack_from("<QI", data, at)
    at += 12
    samples = np.frombuffer(data[at : at + 8 * nsamples], dtype="<i8").astype(np.int64)
    at += 8 * nsamples
    low_bytes = (count * param + 7) // 8
    lows = CompactVector(param, count, _bytes_to_words(data[at : at + low_bytes], count * param))
    at += low_bytes
    high_bytes = (highs_nbits + 7) // 8
    highs = _bytes_to_words(data[at : at + high_bytes], highs_nbits)
    at += high_bytes
    return (
        RiceVector(param, count, lows, highs, highs_nbits, Select(highs, highs_nbits, samples)),
        at,
    )


@dataclass
class InterleavedSeeds:
    """Encoder i stores the seed of bucket i+1 from every partition."""

    encoders: list
    num_partitions: int
    compact_prefix: int

    @classmethod
    def build(cls, seed_matrix: np.ndarray, compact_prefix: int) -> "InterleavedSeeds":
        nparts, bcount = seed_matrix.shape
        t = min(compact_prefix, bcount)
        encs: list[Encoder] = []
        for i in range(bcount):
            col = np.ascontiguousarray(seed_matrix[:, i])
            encs.append(CompactVector.encode(col) if i < t else RiceVector.encode(col))
        return cls(encs, nparts, t)

    @property
    def bucket_count(self) -> int:
        return len(self.encoders)

    def seed_at(self, j: int, i: int) -> int:
        """Seed of bucket i (1-based) in partition j (0-based)."""
        return self.encoders[i - 1].get(j)

    def decode_matrix(self) -> np.ndarray:
        cols = [enc.decode_all() for enc in self.encoders]
        return np.stack(cols, axis=1) if cols else np.zeros((self.num_partitions, 0), np.uint64)


@dataclass
class MonoSeeds:
    """A single encoder over all seeds in partition-major order."""

    encoder: Encoder
    num_partitions: int
    bucket_count: int

    @classmethod
    def build(cls, seed_matrix: np.ndarray, rice: bool) -> "MonoSeeds":
        nparts, bcount = seed_matrix.shape
        flat = np.ascontiguousarray(seed_matrix.reshape(-1))
        enc = RiceVector.encode(flat) if rice else CompactVector.encode(flat)
        return cls(enc, nparts, bcount)

    @property
    def encoders(self) -> list:
        return [self.encoder]

    @property
    def compact_prefix(self) -> int:
        return self.bucket_count if isinstance(self.encoder, CompactVector) else 0

    def seed_at(self, j: int, i: int) -> int:
        return self.encoder.get(j * self.bucket_count + (i - 1))

    def decode_matrix(self) -> np.ndarray:
        return self.encoder.decode_all().reshape(self.num_partitions, self.bucket_count)


SeedStore = InterleavedSeeds | MonoSeeds


def interleave(partition_seeds: list[np.ndarray], compact_prefix: int) -> InterleavedSeeds:
    """Interleave per-partition seed arrays (all of the same length B)."""
    matrix = np.stack([np.asarray(s, dtype=np.uint64) for s in partition_seeds])
    return InterleavedSeeds.build(matrix, compact_prefix)


def serialize_seeds(store: SeedStore) -> bytes:
    blocks = b"".join(_encoder_block(enc) for enc in store.encoders)
    return struct.pack("<I", len(store.encoders)) + blocks


def deserialize_seeds(data: bytes, at: int, num_partitions: int, bcount: int):
    (num_enc,) = struct.unpack_from("<I", data, at)
    at += 4
    encs = []
    for _ in range(num_enc):
        enc, at = _parse_encoder(data, at)
        encs.append(enc)
    if num_enc == 1 and bcount > 1:
        if encs[0].count != num_partitions * bcount:
            raise ValueError("mono encoder count does not match layout")
        store: SeedStore = MonoSeeds(encs[0], num_partitions, bcount)
    else:
        if num_enc != bcount or any(e.count != num_partitions for e in encs):
            raise ValueError("interleaved encoder shape does not match layout")
        t = 0
        while t < num_enc and isinstance(encs[t], CompactVector):
            t += 1
        store = InterleavedSeeds(encs, num_partitions, t)
    return store, at


def total_bits(store: SeedStore) -> int:
    """Exact serialized size of the seed section in bits, metadata included."""
    return 8 * len(serialize_seeds(store))
