"""pilothash: minimal perfect hashing via partitioned bucket placement.

Keys are split into small partitions; inside each partition they are
grouped into buckets by an optimized assignment function, and a seed per
bucket is brute-forced so every key lands on its own slot. Seeds are
stored interleaved across partitions (one tuned encoder per bucket
index), which is what makes the structure small.
"""

__version__ = "0.1.0"

from .assignment import AssignmentSpec, default_epsilon
from .builder import BuildConfig, InvalidConfig, SeedExhausted
from .keygen import KeyCorpus, gen_keys
from .mphf import DuplicateKeys, FormatError, Mphf, build

__all__ = [
    "AssignmentSpec",
    "BuildConfig",
    "DuplicateKeys",
    "FormatError",
    "InvalidConfig",
    "KeyCorpus",
    "Mphf",
    "SeedExhausted",
    "build",
    "default_epsilon",
    "gen_keys",
    "__version__",
]
