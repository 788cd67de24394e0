"""Per-partition construction: bucket the keys, order the buckets, and
brute-force one seed per bucket.

A seed p packs two numbers, p = s*m + d: a hash-seed counter s and an
additive displacement d in [0, m). The search walks p in increasing
order (d sweeps innermost) and therefore always returns the smallest
working seed. Candidate positions for consecutive d differ by a simple
increment, so only a change of s re-hashes the bucket.

Everything here is the plain-Python reference path, used directly for
small inputs and as the oracle for the numba kernel in ``_kernels``
(which full-scale builds go through).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .assignment import (
    AssignmentSpec,
    AssignmentTable,
    bucket_count,
    bucket_for_hash,
    default_epsilon,
)
from .hashing import MASK64, MasterHash, mix64, normalized_hash, position_hash

DEFAULT_SEED_CAP = 1 << 40


class SeedExhausted(RuntimeError):
    """No seed below the cap places the bucket; input may contain duplicates."""


class InvalidConfig(ValueError):
    pass


@dataclass(frozen=True)
class BuildConfig:
    lambda_: float = 8.0
    partition_size: float = 2500.0
    assignment: AssignmentSpec | None = None  # None: beta_eps with default epsilon
    seed_cap: int = DEFAULT_SEED_CAP
    global_seed: int = 0
    encoder: str = "ic-r"  # ic-r | ic-c | mixed:<t> | mono-r | mono-c
    tie_break: str = "asc-expected"  # secondary bucket order among equal sizes
    threads: int = 1

    def __post_init__(self):
        if self.lambda_ <= 0:
            raise InvalidConfig("lambda must be > 0")
        if self.partition_size < 1:
            raise InvalidConfig("partition size must be >= 1")
        if self.seed_cap < self.partition_size:
            raise InvalidConfig("seed cap must allow one full displacement sweep")
        if self.tie_break not in ("asc-expected", "desc-expected"):
            raise InvalidConfig("tie_break must be asc-expected or desc-expected")
        if self.threads < 1:
            raise InvalidConfig("threads must be >= 1")
        parse_encoder(self.encoder)

    def resolved_assignment(self) -> AssignmentSpec:
        if self.assignment is not None:
            return self.assignment
        return AssignmentSpec(
            "beta_eps", default_epsilon(self.lambda_, self.partition_size)
        )

    @property
    def bucket_count(self) -> int:
        return bucket_count(self.partition_size, self.lambda_)


def parse_encoder(name: str) -> tuple[str, int | None]:
    """Split an encoder preset into (family, compact-prefix)."""
    if name in ("ic-r", "ic-c", "mono-r", "mono-c"):
        return name, None
    if name.startswith("mixed:"):
        t = int(name.split(":", 1)[1])
        if t < 0:
            raise InvalidConfig("mixed:<t> needs t >= 0")
        return "mixed", t
    raise InvalidConfig(f"unknown encoder preset {name!r}")


@dataclass
class Bucket:
    index: int  # 1-based bucket index
    keys: list[MasterHash] = field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.keys)


@dataclass
class PartitionSeeds:
    seeds: np.ndarray  # uint64, one per bucket index (empty buckets hold 0)
    trial_count: int
    per_bucket_trials: np.ndarray | None = None


def assign_buckets(
    partition: list[MasterHash], table: AssignmentTable, bcount: int
) -> list[Bucket]:
    """Distribute a partition's keys into their buckets (1-based)."""
    buckets = [Bucket(i + 1) for i in range(bcount)]
    for h in partition:
        b = bucket_for_hash(table, normalized_hash(h), bcount)
        buckets[b - 1].keys.append(h)
    return buckets


def order_buckets(buckets: list[Bucket], tie_break: str = "asc-expected") -> list[Bucket]:
    """Processing order: size descending; ties by expected size.

    Expected size shrinks with bucket index, so "asc-expected" puts the
    larger index first among equal actual sizes.
    """
    nonempty = [b for b in buckets if b.size > 0]
    if tie_break == "asc-expected":
        return sorted(nonempty, key=lambda b: (-b.size, -b.index))
    return sorted(nonempty, key=lambda b: (-b.size, b.index))


def _base_positions(keys: list[MasterHash], s: int, m: int) -> list[int]:
    g = mix64(s ^ _kernels.POSITION_SALT.item())
    return [((mix64(h.lo ^ g) * m) >> 64) for h in keys]


def search_bucket(
    bucket: Bucket, m: int, occupied: np.ndarray, seed_cap: int = DEFAULT_SEED_CAP
) -> int:
    """Smallest p = s*m + d placing all keys on free, distinct slots.

    Marks the chosen slots in ``occupied`` (a bool array of length m).
    Raises SeedExhausted when no p <= seed_cap works.
    """
    p, _ = _search_bucket_counted(bucket.keys, m, occupied, seed_cap)
    return p


def _search_bucket_counted(keys, m, occupied, seed_cap):
    k = len(keys)
    if k == 0:
        raise ValueError("bucket is empty")
    if int(np.count_nonzero(occupied)) + k > m:
        raise ValueError("not enough free slots for bucket")
    los = sorted(h.lo for h in keys)
    if any(a == b for a, b in zip(los, los[1:])):
        # identical low words collide at every (s, d); bail out right away
        raise SeedExhausted("duplicate keys or pathological input")
    trials = 0
    s = 0
    while True:
        pbase = s * m
        if pbase > seed_cap:
            raise SeedExhausted("seed cap hit")
        base = _base_positions(keys, s, m)
        if len(set(base)) != k:
            trials += k
            s += 1
            continue
        dmax = min(m - 1, seed_cap - pbase)
        for d in range(dmax + 1):
            trials += k
            slots = [(b + d) % m for b in base]
            if not any(occupied[slot] for slot in slots):
                for slot in slots:
                    occupied[slot] = True
                return pbase + d, trials
        s += 1


def search_singleton_fast(
    key: MasterHash, m: int, occupied: np.ndarray
) -> int:
    """Direct seed for a single key: first free slot at or after its base.

    Equivalent to the generic search (p = d, s = 0) but without the
    displacement sweep; this is what keeps the coupon-collector tail of
    size-1 buckets cheap. Marks the slot.
    """
    base = position_hash(key, 0, m)
    free = np.flatnonzero(~occupied)
    if len(free) == 0:
        raise ValueError("no free slot for singleton")
    at = np.searchsorted(free, base)
    slot = int(free[at]) if at < len(free) else int(free[0])
    occupied[slot] = True
    return (slot - base) % m


def build_partition(
    partition: list[MasterHash], config: BuildConfig, table: AssignmentTable
) -> PartitionSeeds:
    """Reference construction of one partition (bucket, order, search)."""
    m = len(partition)
    if m < 1:
        raise ValueError("partition must hold at least one key")
    bcount = config.bucket_count
    buckets = assign_buckets(partition, table, bcount)
    occupied = np.zeros(m, dtype=bool)
    seeds = np.zeros(bcount, dtype=np.uint64)
    per_bucket = np.zeros(bcount, dtype=np.int64)
    total = 0
    for b in order_buckets(buckets, config.tie_break):
        if b.size == 1:
            p = search_singleton_fast(b.keys[0], m, occupied)
            trials = p + 1  # d occupancy probes, same count as the generic sweep
        else:
            p, trials = _search_bucket_counted(b.keys, m, occupied, config.seed_cap)
        seeds[b.index - 1] = p
        per_bucket[b.index - 1] = trials
        total += trials
    return PartitionSeeds(seeds=seeds, trial_count=total, per_bucket_trials=per_bucket)


def build_all_partitions(
    his: np.ndarray,
    los: np.ndarray,
    key_offsets: np.ndarray,
    table: AssignmentTable,
    config: BuildConfig,
):
    """Kernel-backed construction of every partition.

    Returns (seed matrix [nparts, B] uint64, per-bucket trials [nparts, B]).
    Raises SeedExhausted if any partition cannot be placed.
    """
    nparts = len(key_offsets) - 1
    bcount = config.bucket_count
    seeds = np.zeros(nparts * bcount, dtype=np.uint64)
    trials = np.zeros(nparts * bcount, dtype=np.int64)
    status = np.zeros(nparts, dtype=np.uint8)
    tie_desc = config.tie_break == "asc-expected"
    entries = np.ascontiguousarray(table.entries)

    def run(lo_part: int, hi_part: int):
        _kernels.build_partition_range(
            his,
            los,
            key_offsets,
            lo_part,
            hi_part,
            entries,
            bcount,
            config.seed_cap,
            tie_desc,
            seeds,
            trials,
            status,
        )

    if config.threads == 1 or nparts == 1:
        run(0, nparts)
    else:
        nchunks = min(config.threads, nparts)
        bounds = np.linspace(0, nparts, nchunks + 1).astype(np.int64)
        with ThreadPoolExecutor(max_workers=nchunks) as pool:
            futures = [
                pool.submit(run, int(bounds[c]), int(bounds[c + 1]))
                for c in range(nchunks)
            ]
            for f in futures:
                f.result()

    if np.any(status != 0):
        bad = int(np.flatnonzero(status)[0])
        reason = "unseparable duplicate hashes" if status[bad] == 1 else "seed cap hit"
        raise SeedExhausted(f"partition {bad}: {reason}")
    return seeds.reshape(nparts, bcount), trials.reshape(nparts, bcount)
