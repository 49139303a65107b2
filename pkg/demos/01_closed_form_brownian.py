"""How well can anyone separate two Brownian motions with different drifts?

For constant drifts the log-likelihood ratio is Gaussian under both classes,
so the best achievable error rates, accuracy and AUC have closed forms. This
script prints them and then checks them against a simulated dataset.
"""
from lrtbench.analytic import bm_auc, bm_optimal_accuracy, bm_rate_curve
from lrtbench.bench import resolve_case
from lrtbench.lrt import lrt_scores
from lrtbench.metrics import summarize
from lrtbench.simulate import generate_dataset

for t_span, setting in ((1.0, 1), (2.0, 2), (4.0, 3), (8.0, 4)):
    st = resolve_case("a", setting)
    pair = st.pair()
    acc, _ = bm_optimal_accuracy(pair, t_span)
    ds = generate_dataset(pair, st.sim_config(seed=0))
    emp = summarize(lrt_scores(ds, mode="exact-bm"))
    print(f"t_L={t_span:>3}: optimal ACC*={acc:.4f} AUC={bm_auc(pair, t_span):.4f} | "
          f"simulated ACC*={emp.acc_star:.4f} AUC={emp.auc:.4f}")

print("\nFNR/TNR along the posterior threshold k (t_L = 1):")
for k, a0, a1 in bm_rate_curve(resolve_case("a", 1).pair(), 1.0, levels=[0.1, 0.3, 0.5, 0.7, 0.9]):
    print(f"  k={k:.1f}  FNR={a0:.4f}  TNR={a1:.4f}")
