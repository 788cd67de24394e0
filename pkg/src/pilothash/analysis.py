"""Executable cost-model oracles for the construction process.

The seed search is a sequence of absorbing-chain experiments: placing a
bucket of size s at load factor a succeeds per candidate with roughly
(1-a)^s, which brackets the expected work between (1-a)^-s and
s*(1-a')^-s. This module evaluates those bounds, the harmonic
coupon-collector term for size-1 buckets, the exact expected-step count
of a success-run chain (and a Monte-Carlo estimator for it), expected
bucket sizes induced by an assignment table, and an Elias-delta size
diagnostic for seed sequences. `measure_work` runs instrumented builds
to compare assignment functions empirically.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .assignment import AssignmentSpec, AssignmentTable, inverse, tabulate
from .builder import BuildConfig, build_all_partitions
from .hashing import master_hash_many
from .keygen import as_corpus
from .partitioning import partition_arrays

_UNDERFLOW = 1e-300


@dataclass(frozen=True)
class CostQuery:
    size: int  # bucket size s
    alpha: float  # load factor when the bucket is placed
    table_size: int  # n

    def __post_init__(self):
        if self.size < 1 or self.table_size < 1:
            raise ValueError("size and table_size must be positive")
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError("alpha must be in [0, 1)")
        if self.alpha + (self.size - 1) / self.table_size >= 1.0:
            raise ValueError("bucket cannot fit at this load factor")


def cost_bounds(q: CostQuery) -> tuple[float, float]:
    """Bounds on the expected hash evaluations to place a bucket:
    (1-a)^-s <= cost <= s * (1-a')^-s with a' = a + (s-1)/n."""
    alpha_last = q.alpha + (q.size - 1) / q.table_size
    lower = (1.0 - q.alpha) ** -q.size
    upper = q.size * (1.0 - alpha_last) ** -q.size
    return lower, upper


def coupon_work(k: int, n: int) -> float:
    """Work to place k size-1 buckets last: n * H_k."""
    if not 0 <= k <= n:
        raise ValueError("need 0 <= k <= n")
    return n * sum(1.0 / i for i in range(1, k + 1))


@dataclass(frozen=True)
class ChainSpec:
    probs: tuple

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "probs", probs)
        if len(probs) == 0 or any(not 0.0 < p < 1.0 for p in probs):
            raise ValueError("probs must be non-empty with every p in (0, 1)")


def chain_work(spec: ChainSpec) -> float:
    """Expected steps to run through success probabilities p_1..p_k,
    restarting from scratch on any failure: sum_i 1/(p_i * ... * p_k)."""
    probs = spec.probs
    running = 1.0
    total = 0.0
    for p in reversed(probs):
        running *= p
        if running < _UNDERFLOW:
            return _chain_work_log(probs)
        total += 1.0 / running
    return total


def _chain_work_log(probs) -> float:
    logs = np.cumsum([math.log(p) for p in reversed(probs)])
    peak = -logs[-1]
    acc = sum(math.exp(-lg - peak) for lg in logs)
    if acc <= 0:
        return math.inf
    total_log = peak + math.log(acc)
    return math.exp(total_log) if total_log < 709.0 else math.inf


def chain_simulate(spec: ChainSpec, runs: int, prng_seed: int) -> tuple[float, float]:
    """Monte-Carlo estimate of chain_work; returns (mean, standard error)."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    probs = np.array(spec.probs)
    k = len(probs)
    rng = np.random.default_rng(prng_seed)
    state = np.zeros(runs, dtype=np.int64)
    steps = np.zeros(runs, dtype=np.int64)
    active = np.arange(runs)
    while len(active):
        u = rng.random(len(active))
        cur = state[active]
        nxt = np.where(u < probs[cur], cur + 1, 0)
        state[active] = nxt
        steps[active] += 1
        active = active[nxt < k]
    mean = float(steps.mean())
    se = float(steps.std(ddof=1) / math.sqrt(runs)) if runs > 1 else 0.0
    return mean, se


def lemma17_check(probs, i: int) -> bool:
    """Splitting off the i smallest-index probabilities should cost more
    than splitting off the i largest: checks the strict inequality
    w(p_1..p_{k-i}) + w(p_{k-i+1}..p_k) < w(p_1..p_i) + w(p_{i+1}..p_k)."""
    probs = tuple(float(p) for p in probs)
    k = len(probs)
    if any(not 0.0 < p < 1.0 for p in probs) or any(
        a <= b for a, b in zip(probs, probs[1:])
    ):
        raise ValueError("probs must be strictly decreasing within (0, 1)")
    if not 1 <= i < k / 2:
        raise ValueError("need 1 <= i < k/2")
    w = lambda ps: chain_work(ChainSpec(ps))
    lhs = w(probs[: k - i]) + w(probs[k - i :])
    rhs = w(probs[:i]) + w(probs[i:])
    return lhs < rhs


def expected_bucket_sizes(table: AssignmentTable, n: int, bcount: int) -> np.ndarray:
    """Expected size of each bucket: n * (inv(i/B) - inv((i-1)/B))."""
    xs = np.array([inverse(table, i / bcount) for i in range(bcount + 1)])
    return n * np.diff(xs)


def elias_delta_bits(seeds) -> int:
    """Total Elias-delta code length of seeds + 1 (so zero is encodable).

    Per value x: ceil(log2 x) + 2 ceil(log2(ceil(log2 x) + 1)) + 1 bits.
    """
    v = np.asarray(seeds, dtype=np.uint64)
    if len(v) and int(v.max()) >= (1 << 53):
        return sum(_delta_bits_one(int(s) + 1) for s in v)
    c = np.frexp(v.astype(np.float64))[1]  # bit length of v = ceil(log2(v + 1))
    cc = np.frexp(c.astype(np.float64))[1]
    return int((c.astype(np.int64) + 2 * cc + 1).sum())


def _delta_bits_one(x: int) -> int:
    c = (x - 1).bit_length()
    return c + 2 * c.bit_length() + 1


@dataclass
class WorkReport:
    assignment: str
    lambda_: float
    partition_size: float
    n: int
    per_bucket_trials: np.ndarray  # summed over partitions, by bucket index
    per_partition_trials: np.ndarray
    total_trials: int
    trials_per_key: float
    size_histogram: dict
    bits_per_key: float
    wall_seconds: float

    def csv_row(self) -> str:
        return (
            f"{self.assignment},{self.lambda_},{self.partition_size},"
            f"{self.trials_per_key:.3f},{self.bits_per_key:.4f},{self.wall_seconds:.3f}"
        )


CSV_HEADER = "assignment,lambda,partition_size,trials_per_key,bits_per_key,wall_seconds"


def measure_work(keys, variants, config: BuildConfig | None = None) -> list[WorkReport]:
    """Instrumented builds over assignment-function variants.

    Hashing and partitioning are shared across variants; each variant
    runs the full bucket distribution and seed search and reports trial
    counts plus the space of the resulting structure.
    """
    from . import mphf as mphf_mod

    from . import encoders
    from .builder import parse_encoder
    from .mphf import Mphf

    config = config or BuildConfig()
    corpus = as_corpus(keys)
    his, los = master_hash_many(corpus.buf, corpus.offsets, config.global_seed)
    keyset, layout = partition_arrays(his, los, config.partition_size)
    family, t = parse_encoder(config.encoder)
    reports = []
    for spec in variants:
        if not isinstance(spec, AssignmentSpec):
            spec = AssignmentSpec(str(spec))
        table = tabulate(spec)
        t0 = time.perf_counter()
        seed_matrix, trials = build_all_partitions(
            keyset.his, keyset.los, keyset.key_offsets, table, config
        )
        wall = time.perf_counter() - t0
        if family == "ic-c":
            store: encoders.SeedStore = encoders.InterleavedSeeds.build(
                seed_matrix, config.bucket_count
            )
        elif family == "mixed":
            store = encoders.InterleavedSeeds.build(seed_matrix, t)
        elif family.startswith("mono"):
            store = encoders.MonoSeeds.build(seed_matrix, rice=family == "mono-r")
        else:
            store = encoders.InterleavedSeeds.build(seed_matrix, 0)
        built = Mphf(
            config.global_seed,
            layout,
            table,
            config.bucket_count,
            store,
            config.lambda_,
            config.partition_size,
        )
        sizes = _bucket_size_histogram(keyset, table, config.bucket_count)
        total = int(trials.sum())
        reports.append(
            WorkReport(
                assignment=spec.kind,
                lambda_=config.lambda_,
                partition_size=config.partition_size,
                n=len(corpus),
                per_bucket_trials=trials.sum(axis=0),
                per_partition_trials=trials.sum(axis=1),
                total_trials=total,
                trials_per_key=total / len(corpus),
                size_histogram=sizes,
                bits_per_key=built.bits_per_key(),
                wall_seconds=wall,
            )
        )
    return reports


def _bucket_size_histogram(keyset, table: AssignmentTable, bcount: int) -> dict:
    from .assignment import bucket_many
    from .hashing import normalized_hash_many

    hist: dict[int, int] = {}
    for j in range(keyset.num_partitions):
        his, _ = keyset.partition(j)
        bs = bucket_many(table, normalized_hash_many(his), bcount)
        for s in np.bincount(bs, minlength=bcount + 1)[1:]:
            if s > 0:
                hist[int(s)] = hist.get(int(s), 0) + 1
    return hist


def work_csv(reports: list[WorkReport]) -> str:
    return "\n".join([CSV_HEADER] + [r.csv_row() for r in reports]) + "\n"
