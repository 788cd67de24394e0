"""Splitting keys into partitions and the offset structure that glues
per-partition hash functions into one global one.

Partition offsets are the prefix sums of the actual partition sizes;
only their differences to the expected offsets round(j*n/num_partitions)
are kept, in a fixed-width signed array, so a query can reconstruct any
offset in constant time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .hashing import MASK64, MasterHash


class DegenerateConfig(ValueError):
    pass


@dataclass(frozen=True)
class PartitionLayout:
    n: int
    num_partitions: int
    deltas: np.ndarray  # int64, length num_partitions + 1; first and last are 0

    def offset(self, j: int) -> int:
        return offset(self, j)

    def size(self, j: int) -> int:
        return offset(self, j + 1) - offset(self, j)

    @property
    def delta_width(self) -> int:
        return delta_width(self.deltas)


@dataclass(frozen=True)
class PartitionedKeys:
    """Master hashes grouped by partition, sorted by (hi, lo) within each."""

    his: np.ndarray
    los: np.ndarray
    key_offsets: np.ndarray  # int64, length num_partitions + 1

    @property
    def num_partitions(self) -> int:
        return len(self.key_offsets) - 1

    def partition(self, j: int):
        a, b = self.key_offsets[j], self.key_offsets[j + 1]
        return self.his[a:b], self.los[a:b]

    def partition_hashes(self, j: int) -> list[MasterHash]:
        his, los = self.partition(j)
        return [MasterHash(int(h), int(l)) for h, l in zip(his, los)]


def num_partitions_for(n: int, partition_size: float) -> int:
    if partition_size < 1:
        raise ValueError("partition size must be >= 1")
    return max(1, round(n / partition_size))


def expected_offset(j: int, n: int, nparts: int) -> int:
    """round-half-up of j*n/nparts, in exact integer arithmetic."""
    return (2 * j * n + nparts) // (2 * nparts)


def partition_index_many(his: np.ndarray, nparts: int) -> np.ndarray:
    """Vectorized fixed-point reduction floor(hi * nparts / 2^64)."""
    npu = np.uint64(nparts)
    h1 = his >> np.uint64(32)
    h0 = his & np.uint64(0xFFFFFFFF)
    return ((h1 * npu + ((h0 * npu) >> np.uint64(32))) >> np.uint64(32)).astype(np.int64)


def partition_arrays(his: np.ndarray, los: np.ndarray, partition_size: float):
    """Bulk partitioning of master-hash arrays.

    Returns (PartitionedKeys, PartitionLayout). Keys are sorted by
    (partition, hi, lo) so downstream construction is independent of
    input order.
    """
    n = len(his)
    if n == 0:
        raise ValueError("cannot partition an empty key set")
    nparts = num_partitions_for(n, partition_size)
    js = partition_index_many(his, nparts)
    order = np.lexsort((los, his, js))
    his_s = his[order]
    los_s = los[order]
    sizes = np.bincount(js, minlength=nparts)
    if nparts > n and np.any(sizes == 0):
        raise DegenerateConfig(
            f"{nparts} partitions for {n} keys leaves empty partitions"
        )
    key_off = np.zeros(nparts + 1, dtype=np.int64)
    np.cumsum(sizes, out=key_off[1:])
    expected = np.array(
        [expected_offset(j, n, nparts) for j in range(nparts + 1)], dtype=np.int64
    )
    deltas = key_off - expected
    deltas.setflags(write=False)
    layout = PartitionLayout(n=n, num_partitions=nparts, deltas=deltas)
    return PartitionedKeys(his_s, los_s, key_off), layout


def partition(hashes: Sequence[MasterHash], partition_size: float):
    """Partition a sequence of master hashes (see partition_arrays)."""
    his = np.array([h.hi & MASK64 for h in hashes], dtype=np.uint64)
    los = np.array([h.lo & MASK64 for h in hashes], dtype=np.uint64)
    return partition_arrays(his, los, partition_size)


def offset(layout: PartitionLayout, j: int) -> int:
    if not 0 <= j <= layout.num_partitions:
        raise IndexError(f"partition index {j} out of range")
    return expected_offset(j, layout.n, layout.num_partitions) + int(layout.deltas[j])


def delta_width(deltas: np.ndarray) -> int:
    """Bits per stored delta: bit length of max |delta| plus a sign bit."""
    peak = int(np.max(np.abs(deltas))) if len(deltas) else 0
    return peak.bit_length() + 1


def pack_deltas(deltas: np.ndarray) -> tuple[int, bytes]:
    """Fixed-width two's-complement-style packing (bias 2^(w-1))."""
    w = delta_width(deltas)
    bias = 1 << (w - 1)
    out = 0
    for i, d in enumerate(deltas):
        v = int(d) + bias
        if not 0 <= v < (1 << w):
            raise ValueError("delta out of range for computed width")
        out |= v << (i * w)
    nbytes = (len(deltas) * w + 7) // 8
    return w, out.to_bytes(nbytes, "little")


def unpack_deltas(width: int, data: bytes, count: int) -> np.ndarray:
    bias = 1 << (width - 1)
    big = int.from_bytes(data, "little")
    mask = (1 << width) - 1
    vals = np.empty(count, dtype=np.int64)
    for i in range(count):
        vals[i] = ((big >> (i * width)) & mask) - bias
    return vals
