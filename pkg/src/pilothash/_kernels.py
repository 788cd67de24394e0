"""numba kernels for the hot paths: bulk hashing, seed search, bulk query.

Pure-Python references for everything in here live in ``hashing`` and
``builder``; the test suite asserts bit-identical results. Keep the two
sides in lockstep when touching either.

All kernels release the GIL so the builder can run partition ranges on
plain Python threads.
"""

import math

import numpy as np
from numba import njit

U0 = np.uint64(0)
U1 = np.uint64(1)
MASK32 = np.uint64(0xFFFFFFFF)
FULL64 = np.uint64(0xFFFFFFFFFFFFFFFF)

S30 = np.uint64(30)
S27 = np.uint64(27)
S31 = np.uint64(31)
S32 = np.uint64(32)
S33 = np.uint64(33)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)

BUCKET_SALT = np.uint64(0xC2B2AE3D27D4EB4F)
POSITION_SALT = np.uint64(0x9E3779B97F4A7C15)

MM_C1 = np.uint64(0x87C37B91114253D5)
MM_C2 = np.uint64(0x4CF5AD432745937F)
MM_F1 = np.uint64(0xFF51AFD7ED558CCD)
MM_F2 = np.uint64(0xC4CEB9FE1A85EC53)

TWO_NEG_64 = 2.0**-64


@njit(cache=True, nogil=True, inline="always")
def _mix64(z):
    z ^= z >> S30
    z = z * MIX1
    z ^= z >> S27
    z = z * MIX2
    z ^= z >> S31
    return z


@njit(cache=True, nogil=True, inline="always")
def _mulhi_small(z, m):
    # high 64 bits of z * m for m < 2^32; exact fixed-point reduction
    z1 = z >> S32
    z0 = z & MASK32
    return np.int64((z1 * m + ((z0 * m) >> S32)) >> S32)


@njit(cache=True, nogil=True, inline="always")
def _rotl(x, r):
    return (x << np.uint64(r)) | (x >> np.uint64(64 - r))


@njit(cache=True, nogil=True, inline="always")
def _fmix64(z):
    z ^= z >> S33
    z = z * MM_F1
    z ^= z >> S33
    z = z * MM_F2
    z ^= z >> S33
    return z


@njit(cache=True, nogil=True, inline="always")
def _load64(buf, off):
    v = U0
    for b in range(8):
        v |= np.uint64(buf[off + b]) << np.uint64(8 * b)
    return v


@njit(cache=True, nogil=True, inline="always")
def _load_partial(buf, off, nbytes):
    v = U0
    for b in range(nbytes):
        v |= np.uint64(buf[off + b]) << np.uint64(8 * b)
    return v


@njit(cache=True, nogil=True)
def murmur3_many(buf, offsets, seed, out_hi, out_lo):
    """murmur3-x64-128 over concatenated keys; fills out_hi/out_lo per key."""
    n = offsets.shape[0] - 1
    for i in range(n):
        start = offsets[i]
        end = offsets[i + 1]
        length = end - start
        h1 = seed
        h2 = seed
        nblocks = length // 16
        for blk in range(nblocks):
            o = start + blk * 16
            k1 = _load64(buf, o)
            k2 = _load64(buf, o + 8)
            k1 = k1 * MM_C1
            k1 = _rotl(k1, 31)
            k1 = k1 * MM_C2
            h1 ^= k1
            h1 = _rotl(h1, 27)
            h1 = h1 + h2
            h1 = h1 * np.uint64(5) + np.uint64(0x52DCE729)
            k2 = k2 * MM_C2
            k2 = _rotl(k2, 33)
            k2 = k2 * MM_C1
            h2 ^= k2
            h2 = _rotl(h2, 31)
            h2 = h2 + h1
            h2 = h2 * np.uint64(5) + np.uint64(0x38495AB5)
        to = start + nblocks * 16
        rem = length - nblocks * 16
        k1 = U0
        k2 = U0
        if rem > 8:
            k1 = _load64(buf, to)
            k2 = _load_partial(buf, to + 8, rem - 8)
        elif rem > 0:
            k1 = _load_partial(buf, to, rem)
        if k2 != U0:
            k2 = k2 * MM_C2
            k2 = _rotl(k2, 33)
            k2 = k2 * MM_C1
            h2 ^= k2
        if k1 != U0:
            k1 = k1 * MM_C1
            k1 = _rotl(k1, 31)
            k1 = k1 * MM_C2
            h1 ^= k1
        h1 ^= np.uint64(length)
        h2 ^= np.uint64(length)
        h1 = h1 + h2
        h2 = h2 + h1
        h1 = _fmix64(h1)
        h2 = _fmix64(h2)
        h1 = h1 + h2
        h2 = h2 + h1
        out_hi[i] = h1
        out_lo[i] = h2


@njit(cache=True, nogil=True, inline="always")
def _eval_table(entries, x):
    t = x * 2048.0
    k = int(t)
    if k >= 2048:
        return entries[2048]
    return entries[k] + (t - k) * (entries[k + 1] - entries[k])


@njit(cache=True, nogil=True, inline="always")
def _bucket_of(entries, hi, bcount):
    xb = _mix64(hi ^ BUCKET_SALT)
    x = (np.float64(xb) + 1.0) * TWO_NEG_64
    b = int(math.ceil(_eval_table(entries, x) * bcount))
    if b < 1:
        b = 1
    elif b > bcount:
        b = bcount
    return b


@njit(cache=True, nogil=True, inline="always")
def _occ_get(occ, slot):
    return (occ[slot >> 6] >> np.uint64(slot & 63)) & U1


@njit(cache=True, nogil=True, inline="always")
def _occ_set(occ, slot):
    occ[slot >> 6] |= U1 << np.uint64(slot & 63)


@njit(cache=True, nogil=True, inline="always")
def _ctz(x):
    n = 0
    if x & np.uint64(0xFFFFFFFF) == U0:
        n += 32
        x >>= S32
    if x & np.uint64(0xFFFF) == U0:
        n += 16
        x >>= np.uint64(16)
    if x & np.uint64(0xFF) == U0:
        n += 8
        x >>= np.uint64(8)
    if x & np.uint64(0xF) == U0:
        n += 4
        x >>= np.uint64(4)
    if x & np.uint64(0x3) == U0:
        n += 2
        x >>= np.uint64(2)
    if x & U1 == U0:
        n += 1
    return n


@njit(cache=True, nogil=True)
def _scan_free(occ, nwords, start):
    # first clear bit at index >= start, wrapping; caller guarantees one exists
    w = start >> 6
    bit = start & 63
    word = ~occ[w]
    if bit > 0:
        word &= FULL64 << np.uint64(bit)
    for _ in range(nwords + 1):
        if word != U0:
            return (w << 6) + _ctz(word)
        w += 1
        if w == nwords:
            w = 0
        word = ~occ[w]
    return -1


@njit(cache=True, nogil=True)
def build_partition_range(
    his,
    los,
    key_off,
    p_lo,
    p_hi,
    entries,
    bcount,
    seed_cap,
    tie_desc,
    seeds_out,
    trials_out,
    status_out,
):
    """Bucket, order, and seed-search every partition in [p_lo, p_hi).

    Keys must arrive grouped by partition and sorted within each
    partition. Seeds land in seeds_out[j*bcount + (b-1)]; trial counts
    (one unit per key per tested (s, d) candidate) in trials_out.
    status_out[j]: 0 ok, 1 unseparable duplicate low words, 2 seed cap hit.
    """
    for j in range(p_lo, p_hi):
        kb = key_off[j]
        ke = key_off[j + 1]
        m = ke - kb
        status_out[j] = 0
        if m == 0:
            continue
        out0 = j * bcount

        # bucket index per key, then group keys by bucket (stable)
        counts = np.zeros(bcount + 2, np.int64)
        bidx = np.empty(m, np.int32)
        for t in range(m):
            b = _bucket_of(entries, his[kb + t], bcount)
            bidx[t] = b
            counts[b + 1] += 1
        for b in range(1, bcount + 2):
            counts[b] += counts[b - 1]
        glos = np.empty(m, np.uint64)
        sizes = np.zeros(bcount + 1, np.int64)
        for t in range(m):
            b = bidx[t]
            glos[counts[b] + sizes[b]] = los[kb + t]
            sizes[b] += 1

        # processing order: size descending, tie-break on bucket index
        nb = 0
        for b in range(1, bcount + 1):
            if sizes[b] > 0:
                nb += 1
        sort_keys = np.empty(nb, np.int64)
        sort_bs = np.empty(nb, np.int32)
        q = 0
        for b in range(1, bcount + 1):
            if sizes[b] > 0:
                tie = b if tie_desc else (bcount - b)
                sort_keys[q] = -(sizes[b] * (bcount + 1) + tie)
                sort_bs[q] = b
                q += 1
        order = np.argsort(sort_keys)

        nwords = (m + 63) >> 6
        occ = np.zeros(nwords, np.uint64)
        if m & 63:
            occ[nwords - 1] = FULL64 << np.uint64(m & 63)
        mark = np.zeros(m, np.int64)
        epoch = 0
        basepos = np.empty(m, np.int64)
        m_u = np.uint64(m)
        g0 = _mix64(POSITION_SALT)

        failed = False
        for oi in range(nb):
            b = sort_bs[order[oi]]
            k = sizes[b]
            st = counts[b]
            trials = 0
            if k == 1:
                bp = _mulhi_small(_mix64(glos[st] ^ g0), m_u)
                slot = _scan_free(occ, nwords, bp)
                d = slot - bp
                if d < 0:
                    d += m
                trials = d + 1
                _occ_set(occ, slot)
                seeds_out[out0 + b - 1] = np.uint64(d)
                trials_out[out0 + b - 1] = trials
                continue

            tmp = np.sort(glos[st : st + k].copy())
            for i in range(1, k):
                if tmp[i] == tmp[i - 1]:
                    status_out[j] = 1
                    failed = True
                    break
            if failed:
                break

            s = 0
            found = False
            while not found:
                pbase = s * m
                if pbase > seed_cap:
                    status_out[j] = 2
                    failed = True
                    break
                g = _mix64(np.uint64(s) ^ POSITION_SALT)
                epoch += 1
                selfcoll = False
                for i in range(k):
                    bp = _mulhi_small(_mix64(glos[st + i] ^ g), m_u)
                    if mark[bp] == epoch:
                        selfcoll = True
                        break
                    mark[bp] = epoch
                    basepos[i] = bp
                if selfcoll:
                    trials += k
                    s += 1
                    continue
                dmax = seed_cap - pbase
                if dmax > m - 1:
                    dmax = m - 1
                d = 0
                while d <= dmax:
                    trials += k
                    ok = True
                    for i in range(k):
                        slot = basepos[i] + d
                        if slot >= m:
                            slot -= m
                        if _occ_get(occ, slot) != U0:
                            ok = False
                            break
                    if ok:
                        for i in range(k):
                            slot = basepos[i] + d
                            if slot >= m:
                                slot -= m
                            _occ_set(occ, slot)
                        seeds_out[out0 + b - 1] = np.uint64(pbase + d)
                        trials_out[out0 + b - 1] = trials
                        found = True
                        break
                    d += 1
                if not found:
                    s += 1
            if failed:
                break


@njit(cache=True, nogil=True, inline="always")
def _expected_offset(j, n, nparts):
    return (2 * j * n + nparts) // (2 * nparts)


@njit(cache=True, nogil=True)
def query_many_kernel(his, los, n, nparts, deltas, entries, bcount, seed_mat, out):
    nparts_u = np.uint64(nparts)
    for i in range(his.shape[0]):
        hi = his[i]
        j = _mulhi_small(hi, nparts_u)
        offj = _expected_offset(j, n, nparts) + deltas[j]
        offj1 = _expected_offset(j + 1, n, nparts) + deltas[j + 1]
        m = offj1 - offj
        if m <= 0:
            out[i] = offj if offj < n else n - 1
            continue
        b = _bucket_of(entries, hi, bcount)
        p = seed_mat[j * bcount + b - 1]
        m_u = np.uint64(m)
        s = p // m_u
        g = _mix64(s ^ POSITION_SALT)
        pos = (np.uint64(_mulhi_small(_mix64(los[i] ^ g), m_u)) + p) % m_u
        out[i] = offj + np.int64(pos)
