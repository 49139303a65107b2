"""Vary the observation window, the noise scale and the training budget."""
from dataclasses import replace

from lrtbench.bench import resolve_case, sweep

base = replace(resolve_case("a", 1), n_paths=1000)

print("longer windows help every classifier:")
for value, rep in sweep("time-length", [1.0, 2.0, 4.0], base, runs=1, classifiers=["lrt-numerical"]):
    print(f"  t_L={value:<4} LRT AUC={rep.median('auc', 'lrt-numerical'):.4f}")

print("less noise separates the classes:")
for value, rep in sweep("noise", [2.0, 1.0, 0.5], base, runs=1, classifiers=["lrt-hidden-truth"]):
    print(f"  sigma={value:<4} LRT AUC={rep.median('auc', 'lrt-hidden-truth'):.4f}")

print("training size only matters to the trained model (LRT rows do not move):")
for value, rep in sweep("training-size", [50, 200, 800], base, runs=2, n_kernels=300, test_size=400,
                        classifiers=["lrt-numerical", "rocket"]):
    print(f"  train={int(value):<4} LRT={rep.median('auc', 'lrt-numerical'):.4f} "
          f"rocket={rep.median('auc', 'rocket'):.4f}")
