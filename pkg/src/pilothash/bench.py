"""Timed build and query runs. Correctness is always checked before any
number is reported: a timing of a broken structure is worthless.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .builder import BuildConfig
from .keygen import KeyCorpus, as_corpus
from .mphf import Mphf, build


@dataclass
class BuildReport:
    n: int
    bits_per_key: float
    construction_ns_per_key: float
    trials_per_key: float
    num_partitions: int
    bucket_count: int
    attempts: int
    verified: bool


@dataclass
class QueryReport:
    n: int
    ns_per_query: float
    verified: bool


def run_build(corpus: KeyCorpus, config: BuildConfig) -> tuple[Mphf, BuildReport]:
    t0 = time.perf_counter_ns()
    f = build(corpus, config)
    elapsed = time.perf_counter_ns() - t0
    verified = f.is_bijection_on(corpus)
    report = BuildReport(
        n=f.n,
        bits_per_key=f.bits_per_key(),
        construction_ns_per_key=elapsed / f.n,
        trials_per_key=f.stats.trials_per_key if f.stats else float("nan"),
        num_partitions=f.layout.num_partitions,
        bucket_count=f.bcount,
        attempts=f.stats.attempts if f.stats else 1,
        verified=verified,
    )
    return f, report


def run_query_bench(f: Mphf, keys, prng_seed: int = 0) -> QueryReport:
    """Query every key once in an order shuffled by the given seed.

    One timed pass of single-key lookups, no warm-up subtraction; the
    bijection over the key set is verified (via the bulk path) first.
    """
    corpus = as_corpus(keys)
    verified = f.is_bijection_on(corpus)
    if not verified:
        return QueryReport(n=len(corpus), ns_per_query=float("nan"), verified=False)
    order = np.random.default_rng(prng_seed).permutation(len(corpus))
    shuffled = [corpus[int(i)] for i in order]
    t0 = time.perf_counter_ns()
    acc = 0
    for key in shuffled:
        acc ^= f.query(key)
    elapsed = time.perf_counter_ns() - t0
    if acc == -1:  # keep the loop from being optimized away, and use the result
        raise AssertionError("unreachable")
    return QueryReport(n=len(corpus), ns_per_query=elapsed / len(corpus), verified=True)
