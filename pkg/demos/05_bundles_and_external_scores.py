"""Export a dataset, score it somewhere else, and merge the scores back.

Any outside classifier can join a report as long as its scores file names the
dataset digest and keeps the original path indices and labels.
"""
import tempfile
from pathlib import Path

from lrtbench.bench import resolve_case, run_case
from lrtbench.io import emit_report, export_dataset, import_dataset, import_external_scores, write_scores
from lrtbench.lrt import lrt_scores
from lrtbench.simulate import generate_dataset

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    st = resolve_case("c", 1)
    ds = generate_dataset(st.pair(), st.sim_config(seed=3))
    files = export_dataset(ds, tmp / "data")
    print("bundle files:", ", ".join(sorted(p.name for p in files.values())))

    # stand-in for an external tool: it only reads the bundle
    outside = import_dataset(tmp / "data")
    write_scores(lrt_scores(outside, mode="exact-ou"), tmp / "mine.csv", "exact-ou-outside")

    report = run_case(st, runs=2, seed=3, classifiers=["lrt-numerical"], dataset=ds)
    import_external_scores(report, tmp / "mine.csv")
    emit_report(report, tmp / "report")
    print("classifiers in the report:", ", ".join(report.classifiers))
    print((tmp / "report" / "summary.csv").read_text())
