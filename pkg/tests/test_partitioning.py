import numpy as np
import pytest

from pilothash.hashing import MasterHash, master_hash_many
from pilothash.keygen import gen_keys
from pilothash.partitioning import (
    PartitionLayout,
    expected_offset,
    num_partitions_for,
    offset,
    pack_deltas,
    partition,
    partition_arrays,
    partition_index_many,
    unpack_deltas,
)


def _hashes(n, seed=0):
    corpus = gen_keys(n, seed)
    return master_hash_many(corpus.buf, corpus.offsets, 42)


def test_offsets_from_hand_computed_deltas():
    # actual sizes [2510, 2480, 2505, 2505] against expectation every 2500
    deltas = np.array([0, 10, -10, -5, 0], dtype=np.int64)
    lay = PartitionLayout(n=10000, num_partitions=4, deltas=deltas)
    assert [offset(lay, j) for j in range(5)] == [0, 2510, 4990, 7495, 10000]
    assert lay.size(1) == 2480
    with pytest.raises(IndexError):
        offset(lay, 5)


def test_offset_endpoints():
    his, los = _hashes(10_000)
    _, lay = partition_arrays(his, los, 2500.0)
    assert offset(lay, 0) == 0
    assert offset(lay, lay.num_partitions) == 10_000


def test_partition_counts_and_roundtrip():
    his, los = _hashes(10_000)
    keys, lay = partition_arrays(his, los, 2500.0)
    assert lay.num_partitions == 4
    sizes = [lay.size(j) for j in range(4)]
    assert sum(sizes) == 10_000
    # layout sizes agree with the actual grouped key counts
    assert sizes == list(np.diff(keys.key_offsets))
    # every key landed in the partition its hi word selects
    js = partition_index_many(keys.his, 4)
    for j in range(4):
        a, b = keys.key_offsets[j], keys.key_offsets[j + 1]
        assert np.all(js[a:b] == j)


def test_delta_scale():
    his, los = _hashes(100_000, seed=2)
    _, lay = partition_arrays(his, los, 2500.0)
    assert int(np.abs(lay.deltas).max()) <= 5 * int(2500**0.5)


def test_single_key():
    his, los = _hashes(1)
    keys, lay = partition_arrays(his, los, 2500.0)
    assert lay.num_partitions == 1
    assert list(lay.deltas) == [0, 0]
    assert offset(lay, 1) == 1


def test_determinism_and_input_order_independence():
    his, los = _hashes(5000, seed=3)
    k1, l1 = partition_arrays(his, los, 500.0)
    perm = np.random.default_rng(0).permutation(len(his))
    k2, l2 = partition_arrays(his[perm], los[perm], 500.0)
    assert np.array_equal(k1.his, k2.his)
    assert np.array_equal(k1.los, k2.los)
    assert np.array_equal(l1.deltas, l2.deltas)


def test_partition_accepts_masterhash_sequence():
    his, los = _hashes(200, seed=4)
    hashes = [MasterHash(int(h), int(l)) for h, l in zip(his, los)]
    keys, lay = partition(hashes, 50.0)
    k2, l2 = partition_arrays(his, los, 50.0)
    assert np.array_equal(keys.his, k2.his)
    assert np.array_equal(lay.deltas, l2.deltas)
    got = keys.partition_hashes(0)
    assert all(isinstance(h, MasterHash) for h in got)
    assert len(got) == lay.size(0)


def test_num_partitions_rounding():
    assert num_partitions_for(10_000, 2500.0) == 4
    assert num_partitions_for(1, 2500.0) == 1
    assert num_partitions_for(3750, 2500.0) == 2


def test_expected_offset_round_half_up():
    # 2.5 rounds up to 3 under round-half-up
    assert expected_offset(1, 5, 2) == 3
    assert expected_offset(0, 5, 2) == 0
    assert expected_offset(2, 5, 2) == 5


def test_pack_unpack_deltas_roundtrip():
    rng = np.random.default_rng(9)
    for _ in range(50):
        deltas = rng.integers(-200, 201, size=rng.integers(1, 40)).astype(np.int64)
        width, data = pack_deltas(deltas)
        back = unpack_deltas(width, data, len(deltas))
        assert np.array_equal(back, deltas)
    width, data = pack_deltas(np.zeros(5, dtype=np.int64))
    assert width == 1
    assert np.array_equal(unpack_deltas(width, data, 5), np.zeros(5))


def test_empty_input_rejected():
    with pytest.raises(ValueError):
        partition_arrays(np.zeros(0, np.uint64), np.zeros(0, np.uint64), 10.0)
