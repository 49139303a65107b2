"""Train ROCKET on repeated splits and compare it with the LRT benchmarks.

The LRT needs no training and is the uniformly most powerful test, so it is
an upper reference for the trained classifier. Pass a smaller kernel count
for a quicker look.
"""
import sys

from lrtbench.bench import describe, resolve_case, run_case

kernels = int(sys.argv[1]) if len(sys.argv) > 1 else 1000
for case in ("a", "d"):
    report = run_case(resolve_case(case, 1), runs=3, seed=0, n_kernels=kernels)
    print(describe(report))
    print()
