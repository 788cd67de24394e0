"""The queryable minimal perfect hash function.

Composition of the other modules: master hashing, partition layout,
tabulated bucket assignment, and the encoded seed store. Querying a key:

    h  = master_hash(key)
    j  = partition of h.hi          m = offset(j+1) - offset(j)
    i  = bucket of normalized hash  p = seed_at(j, i)
    out = offset(j) + (position_hash(h, p // m, m) + p) mod m

Construction keys map bijectively onto [0, n); any other key still lands
in [0, n) but carries no guarantee beyond that.

The on-disk format is little-endian and versioned; see README for the
exact field list. The assignment table is stored as its defining spec
(kind + epsilon) and re-tabulated on load.
"""

from __future__ import annotations

import hashlib
import struct
import time
from dataclasses import dataclass

import numpy as np

from . import _kernels, encoders
from .assignment import (
    KIND_CODES,
    KINDS,
    AssignmentSpec,
    AssignmentTable,
    bucket_for_hash,
    tabulate,
)
from .builder import (
    BuildConfig,
    InvalidConfig,
    SeedExhausted,
    build_all_partitions,
    parse_encoder,
)
from .hashing import (
    master_hash,
    master_hash_many,
    normalized_hash,
    partition_index,
    position_hash,
)
from .keygen import KeyCorpus, as_corpus
from .partitioning import PartitionLayout, pack_deltas, partition_arrays, unpack_deltas

MAGIC = b"PHOB"
VERSION = 1
HEADER_BYTES = 16  # magic + version + n; excluded from bits/key

MAX_ATTEMPTS = 4  # initial build plus three reseeded retries


class DuplicateKeys(ValueError):
    pass


class FormatError(ValueError):
    pass


@dataclass
class BuildStats:
    attempts: int
    trials_total: int
    trials_per_key: float
    build_seconds: float


class Mphf:
    def __init__(
        self,
        global_seed: int,
        layout: PartitionLayout,
        table: AssignmentTable,
        bcount: int,
        seeds: encoders.SeedStore,
        lambda_: float,
        partition_size: float,
        stats: BuildStats | None = None,
    ):
        self.global_seed = global_seed
        self.layout = layout
        self.table = table
        self.bcount = bcount
        self.seeds = seeds
        self.lambda_ = lambda_
        self.partition_size = partition_size
        self.stats = stats
        self._matrix: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.layout.n

    @property
    def encoder_name(self) -> str:
        if isinstance(self.seeds, encoders.MonoSeeds):
            return "mono-c" if self.seeds.compact_prefix else "mono-r"
        t = self.seeds.compact_prefix
        if t == 0:
            return "ic-r"
        if t >= self.bcount:
            return "ic-c"
        return f"mixed:{t}"

    def _seed_matrix(self) -> np.ndarray:
        if self._matrix is None:
            self._matrix = np.ascontiguousarray(self.seeds.decode_matrix().reshape(-1))
        return self._matrix

    def query(self, key: bytes) -> int:
        h = master_hash(key, self.global_seed)
        j = partition_index(h, self.layout.num_partitions)
        off = self.layout.offset(j)
        m = self.layout.offset(j + 1) - off
        if m <= 0:
            return off if off < self.n else self.n - 1
        i = bucket_for_hash(self.table, normalized_hash(h), self.bcount)
        p = self.seeds.seed_at(j, i)
        return off + (position_hash(h, p // m, m) + p) % m

    def query_many(self, keys) -> np.ndarray:
        corpus = as_corpus(keys)
        his, los = master_hash_many(corpus.buf, corpus.offsets, self.global_seed)
        out = np.empty(len(corpus), dtype=np.int64)
        _kernels.query_many_kernel(
            his,
            los,
            self.n,
            self.layout.num_partitions,
            self.layout.deltas,
            np.ascontiguousarray(self.table.entries),
            self.bcount,
            self._seed_matrix(),
            out,
        )
        return out

    def is_bijection_on(self, keys) -> bool:
        out = self.query_many(keys)
        if len(out) != self.n:
            return False
        return bool(np.array_equal(np.sort(out), np.arange(self.n)))

    def bits_per_key(self) -> float:
        return (len(self.serialize()) - HEADER_BYTES) * 8 / self.n

    def serialize(self) -> bytes:
        spec = self.table.spec
        parts = [
            MAGIC,
            struct.pack("<I", VERSION),
            struct.pack("<Q", self.n),
            struct.pack("<Q", self.layout.num_partitions),
            struct.pack("<d", self.lambda_),
            struct.pack("<d", self.partition_size),
            struct.pack("<B", KIND_CODES[spec.kind]),
            struct.pack("<d", spec.epsilon),
            struct.pack("<Q", self.global_seed & 0xFFFFFFFFFFFFFFFF),
        ]
        width, packed = pack_deltas(self.layout.deltas)
        parts.append(struct.pack("<B", width))
        parts.append(packed)
        parts.append(struct.pack("<I", self.bcount))
        parts.append(encoders.serialize_seeds(self.seeds))
        body = b"".join(parts)
        return body + struct.pack("<Q", _checksum(body))

    def save(self, path) -> None:
        with open(path, "wb") as f:
            f.write(self.serialize())

    @classmethod
    def deserialize(cls, data: bytes) -> "Mphf":
        if len(data) < HEADER_BYTES + 8:
            raise FormatError("input shorter than any valid structure")
        if data[:4] != MAGIC:
            raise FormatError("bad magic")
        (version,) = struct.unpack_from("<I", data, 4)
        if version != VERSION:
            raise FormatError(f"unsupported version {version}")
        (stored_sum,) = struct.unpack_from("<Q", data, len(data) - 8)
        if _checksum(data[:-8]) != stored_sum:
            raise FormatError("checksum mismatch")
        try:
            (n,) = struct.unpack_from("<Q", data, 8)
            at = 16
            (nparts,) = struct.unpack_from("<Q", data, at)
            at += 8
            lambda_, psize = struct.unpack_from("<dd", data, at)
            at += 16
            (kind_code,) = struct.unpack_from("<B", data, at)
            at += 1
            (epsilon,) = struct.unpack_from("<d", data, at)
            at += 8
            (global_seed,) = struct.unpack_from("<Q", data, at)
            at += 8
            (width,) = struct.unpack_from("<B", data, at)
            at += 1
            nbytes = ((nparts + 1) * width + 7) // 8
            deltas = unpack_deltas(width, data[at : at + nbytes], nparts + 1)
            at += nbytes
            (bcount,) = struct.unpack_from("<I", data, at)
            at += 4
            if kind_code >= len(KINDS):
                raise FormatError("unknown assignment kind")
            seeds, at = encoders.deserialize_seeds(data, at, nparts, bcount)
            if at != len(data) - 8:
                raise FormatError("trailing bytes after seed section")
        except (struct.error, ValueError, IndexError) as exc:
            raise FormatError(f"malformed structure: {exc}") from exc
        deltas.setflags(write=False)
        layout = PartitionLayout(n=n, num_partitions=nparts, deltas=deltas)
        table = tabulate(AssignmentSpec(KINDS[kind_code], epsilon))
        return cls(global_seed, layout, table, bcount, seeds, lambda_, psize)

    @classmethod
    def load(cls, path) -> "Mphf":
        with open(path, "rb") as f:
            return cls.deserialize(f.read())


def _checksum(payload: bytes) -> int:
    digest = hashlib.blake2b(payload, digest_size=8).digest()
    return int.from_bytes(digest, "little")


def build(keys, config: BuildConfig | None = None) -> Mphf:
    """Construct an Mphf over distinct keys.

    Retries with a bumped global seed on seed exhaustion (which is how
    duplicate keys surface) before giving up with DuplicateKeys.
    """
    config = config or BuildConfig()
    corpus = as_corpus(keys)
    if len(corpus) < 1:
        raise InvalidConfig("need at least one key")
    spec = config.resolved_assignment()
    table = tabulate(spec)
    family, t = parse_encoder(config.encoder)
    t0 = time.perf_counter()
    last_error: Exception | None = None
    for attempt in range(MAX_ATTEMPTS):
        seed = config.global_seed + attempt
        his, los = master_hash_many(corpus.buf, corpus.offsets, seed)
        keyset, layout = partition_arrays(his, los, config.partition_size)
        try:
            seed_matrix, trials = build_all_partitions(
                keyset.his, keyset.los, keyset.key_offsets, table, config
            )
        except SeedExhausted as exc:
            last_error = exc
            continue
        if family == "ic-r":
            store: encoders.SeedStore = encoders.InterleavedSeeds.build(seed_matrix, 0)
        elif family == "ic-c":
            store = encoders.InterleavedSeeds.build(seed_matrix, config.bucket_count)
        elif family == "mixed":
            store = encoders.InterleavedSeeds.build(seed_matrix, t)
        else:
            store = encoders.MonoSeeds.build(seed_matrix, rice=family == "mono-r")
        total = int(trials.sum())
        stats = BuildStats(
            attempts=attempt + 1,
            trials_total=total,
            trials_per_key=total / len(corpus),
            build_seconds=time.perf_counter() - t0,
        )
        return Mphf(
            seed,
            layout,
            table,
            config.bucket_count,
            store,
            config.lambda_,
            config.partition_size,
            stats,
        )
    raise DuplicateKeys(
        f"construction failed after {MAX_ATTEMPTS} seeds ({last_error}); "
        "input most likely contains duplicate keys"
    )


def query(f: Mphf, key: bytes) -> int:
    return f.query(key)


def serialize(f: Mphf) -> bytes:
    return f.serialize()


def deserialize(data: bytes) -> Mphf:
    return Mphf.deserialize(data)


def bits_per_key(f: Mphf) -> float:
    return f.bits_per_key()
