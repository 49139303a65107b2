"""Likelihood-ratio-test optimality benchmarks for binary time-series classification."""

import warnings

# numba falls back to its own threading layer when the system TBB is too old
warnings.filterwarnings("ignore", message="The TBB threading layer requires TBB")

__version__ = "0.1.0"
