"""How many test paths does an error-rate estimate need?

Bootstrap the empirical false-negative rate at the Bayes threshold and
compare its spread with the CLT standard deviation and the Hoeffding tail.
"""
from lrtbench.analytic import bm_rates
from lrtbench.bench import resolve_case
from lrtbench.lrt import lrt_scores, threshold_from_level
from lrtbench.metrics import bootstrap_rates, sampling_error
from lrtbench.simulate import generate_dataset

st = resolve_case("a", 1)
ds = generate_dataset(st.pair(), st.sim_config(seed=0))
scores = lrt_scores(ds, mode="exact-bm")
alpha = bm_rates(st.pair(), 1.0, 0.5).alpha0
for m in (50, 200, 500):
    boot = bootstrap_rates(scores, threshold_from_level(0.5), m, 300, seed=m)[:, 0]
    est = sampling_error(alpha, m, epsilon=0.1)
    print(f"m={m:<4} bootstrap std={boot.std(ddof=1):.4f} CLT={est.clt_std:.4f} "
          f"P(|err|>0.1) observed={(abs(boot - alpha) > 0.1).mean():.3f} Hoeffding<={min(est.hoeffding, 1):.3f}")
