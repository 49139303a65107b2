"""Command-line entry point: ``lrtbench <command> ...``.

Every command writes only inside its ``--out`` directory.  Failures print a
single line ``error: <ExceptionType>: <message>`` to stderr and exit with
status 1.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, analytic, bench
from .io import (FLOAT, BundleError, emit_report, ensure_writable, export_dataset, import_dataset,
                 import_external_scores, load_report, parse_model_value,
                 write_manifest, write_scores)
from .lrt import lrt_scores
from .metrics import roc_curve, summarize
from .models import pair_manifest
from .simulate import generate_dataset

log = logging.getLogger("lrtbench")

_SIM_FIELDS = {
    "sim.dt": ("dt", float), "sim.n_obs": ("n_obs", int), "sim.t_final": ("t_final", float),
    "sim.delta": ("delta", float), "sim.n_paths": ("n_paths", int),
    "split.train_fraction": ("train_fraction", float),
}
_LRT_MODES = {"hidden": "lrt-hidden-truth", "numerical": "lrt-numerical", "exact": "lrt-exact"}


class UsageError(ValueError):
    pass


def _read_pairs(args) -> list[tuple[str, str]]:
    pairs = []
    if getattr(args, "config", None):
        for line in Path(args.config).read_text().splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                pairs.append(_split_kv(line))
    pairs += [_split_kv(kv) for kv in getattr(args, "override", None) or ()]
    return pairs


def _split_kv(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise UsageError(f"override {text!r} is not of the form key=value")
    k, v = text.split("=", 1)
    return k.strip(), v.strip()


def apply_overrides(setting: bench.CaseSetting, pairs) -> bench.CaseSetting:
    """Apply dotted ``model.*``, ``sim.*`` and ``split.*`` overrides."""
    model = {}
    fields = {}
    for key, text in pairs:
        if key.startswith("model."):
            name = key[len("model."):]
            model[name] = parse_model_value(name, text)
        elif key in _SIM_FIELDS:
            attr, kind = _SIM_FIELDS[key]
            try:
                fields[attr] = kind(text)
            except ValueError as exc:
                raise UsageError(f"bad value {text!r} for {key}") from exc
        else:
            raise UsageError(f"unknown override key {key!r}")
    if model:
        setting = setting.with_overrides(**model)
    if fields:
        setting = replace(setting, **fields)
    if "t_final" not in fields and ("dt" in fields or "n_obs" in fields):
        setting = replace(setting, t_final=setting.n_obs * setting.dt)
    pair = setting.pair()  # validates model keys against the family schema
    setting.sim_config(0)
    return replace(setting, d=pair.dim)


def setting_from_dataset(ds, train_fraction: float = 0.75) -> bench.CaseSetting:
    m = ds.manifest
    if ds.pair is None:
        raise BundleError("bundle manifest carries no model description")
    ov = {k[len("model."):]: parse_model_value(k[len("model."):], v) for k, v in pair_manifest(ds.pair).items()
          if k != "model.family" and not (k == "model.d" and ds.pair.family in ("interacting-particles",
                                                                                 "linear-nonlinear"))}
    return bench.CaseSetting(
        m.get("case", "imported"), 0, ds.pair.family, ds.dim, len(ds.times) - 1,
        float(ds.times[-1] - ds.times[0]), float(m.get("sim.dt", ds.times[1] - ds.times[0])),
        float(m.get("sim.delta", 0.01)), len(ds), train_fraction, tuple(sorted(ov.items())),
    )


def _classifiers(text: str) -> list[str]:
    names = [c.strip() for c in text.split(",") if c.strip()]
    return [_LRT_MODES.get(c, c) for c in names]


def cmd_generate(args) -> None:
    st = apply_overrides(bench.resolve_case(args.case, args.setting), _read_pairs(args))
    if args.paths is not None:
        st = replace(st, n_paths=args.paths)
    ds = generate_dataset(st.pair(), st.sim_config(args.seed), keep_fine=args.keep_fine, workers=args.workers)
    ds.manifest.update({f"setting.{k}": v for k, v in st.manifest().items()})
    ds.manifest["case"] = st.label
    files = export_dataset(ds, ensure_writable(args.out), args.layout)
    print(f"wrote {len(ds)} paths ({st.label}) to {args.out}; digest {ds.digest}")
    log.info("files: %s", ", ".join(p.name for p in files.values()))


def cmd_lrt(args) -> None:
    ds = import_dataset(args.data)
    name = _LRT_MODES[args.mode]
    mode = bench.lrt_mode(name, ds.pair.family if ds.pair else "")
    if mode == "hidden-truth" and ds.fine is None:
        raise BundleError("hidden-truth mode needs fine paths; regenerate the bundle with --keep-fine")
    s = lrt_scores(ds, mode=mode)
    out = ensure_writable(args.out)
    write_scores(s, out / f"scores_{name}.csv", name)
    summ = summarize(s)
    roc = roc_curve(s)
    np.savetxt(out / f"roc_{name}.csv", np.column_stack([roc.fpr, roc.tpr, roc.thresholds]), delimiter=",",
               header="fpr,tpr,threshold", comments="", fmt=FLOAT)
    write_manifest(out / "manifest.txt", {
        "schema_version": "1", "tool_version": __version__, "classifier": name, "mode": mode,
        "dataset.digest": ds.digest, **{f"metric.{k}": repr(float(getattr(summ, k)))
                                        for k in ("auc", "acc_star", "k_star", "alpha0", "alpha1")},
    })
    print(f"{name}: AUC {summ.auc:.4f}, ACC* {summ.acc_star:.4f}")


def cmd_rocket(args) -> None:
    ds = import_dataset(args.data)
    st = setting_from_dataset(ds, args.train_fraction)
    rep = bench.run_case(st, args.runs, args.seed, ["rocket"], args.kernels, dataset=ds,
                         workers=args.workers, keep_models=True)
    out = ensure_writable(args.out)
    emit_report(rep, out)
    rep.runs[0].model.save(out / "rocket_run0.npz")
    print(bench.describe(rep))


def cmd_bench(args) -> None:
    st = apply_overrides(bench.resolve_case(args.case, args.setting), _read_pairs(args))
    if args.paths is not None:
        st = replace(st, n_paths=args.paths)
    rep = bench.run_case(st, args.runs, args.seed, _classifiers(args.classifiers), args.kernels,
                         regenerate=args.regenerate, workers=args.workers)
    emit_report(rep, ensure_writable(args.out), with_scores=not args.no_scores)
    print(bench.describe(rep))


def cmd_sweep(args) -> None:
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad sweep values {args.values!r}") from exc
    if args.kind == "training-size":
        values = [int(v) if v == int(v) else v for v in values]
    base = None
    if args.case:
        base = bench.resolve_case(args.case, args.setting)
    pairs = _read_pairs(args)
    if pairs:
        base = apply_overrides(base or replace(bench.resolve_case("d", 2), case="ips12", setting=0), pairs)
    classifiers = _classifiers(args.classifiers)
    reports = bench.sweep(args.kind, values, base, args.runs, args.seed, classifiers, args.kernels,
                          args.test_size, args.workers)
    out = ensure_writable(args.out)
    rows = []
    for v, rep in reports:
        emit_report(rep, out / f"{args.kind}_{v:g}", with_scores=False)
        for c in rep.classifiers:
            rows.append(f"{v:g},{c},{FLOAT % rep.median('auc', c)},{FLOAT % rep.median('acc_star', c)}")
    (out / "sweep.csv").write_text("value,classifier,auc_median,acc_star_median\n" + "\n".join(rows) + "\n")
    write_manifest(out / "manifest.txt", {"schema_version": "1", "tool_version": __version__,
                                          "sweep.kind": args.kind, "sweep.values": args.values,
                                          "runs": str(args.runs), "seed": str(args.seed)})
    print("\n".join(rows))


def cmd_report(args) -> None:
    rep = load_report(args.input)
    if args.scores:
        if not args.data:
            raise UsageError("--scores needs --data to check labels against")
        ds = import_dataset(args.data)
        if rep.manifest.get("dataset.digest") != ds.digest:
            raise BundleError("report and dataset bundle disagree on the dataset digest")
        rep.labels = ds.labels
        for f in args.scores:
            import_external_scores(rep, f)
    emit_report(rep, ensure_writable(args.out), with_scores=False)
    print(bench.describe(rep))


def cmd_analytic(args) -> None:
    out = ensure_writable(args.out)
    pairs = _read_pairs(args)
    if args.family == "bm":
        st = apply_overrides(bench.resolve_case("a", 1), pairs)
        pair, t_span = st.pair(), st.t_final
        cf = analytic.bm_closed_form(pair, t_span)
        curve = analytic.bm_rate_curve(pair, t_span)
        np.savetxt(out / "bm_rates.csv", curve, delimiter=",", header="k,alpha0,alpha1", comments="", fmt=FLOAT)
        acc, k_star = analytic.bm_optimal_accuracy(pair, t_span)
        entries = {"m": cf.m, "v": cf.v, "acc_star": acc, "k_star": k_star, "auc": analytic.bm_auc(pair, t_span)}
    else:
        st = apply_overrides(bench.resolve_case("c", 1), pairs)
        pair = st.pair()
        r = analytic.ou_rates_montecarlo(pair, st.sim_config(args.seed), args.k, args.samples, args.seed)
        entries = {"k": r.k, "alpha0": r.alpha0, "alpha1": r.alpha1, "se0": r.se0, "se1": r.se1, "n": r.n}
        with open(out / "ou_rates.csv", "w") as fh:
            fh.write("k,alpha0,alpha1,se0,se1,n\n")
            fh.write(",".join(FLOAT % entries[c] for c in ("k", "alpha0", "alpha1", "se0", "se1")) + f",{r.n}\n")
    write_manifest(out / "manifest.txt", {
        "schema_version": "1", "tool_version": __version__, "family": args.family, "seed": str(args.seed),
        **pair_manifest(pair), **{f"sim.{k}": repr(getattr(st, k)) for k in ("dt", "n_obs", "t_final")},
        **{f"result.{k}": repr(v) for k, v in entries.items()},
    })
    print(", ".join(f"{k}={v:.6g}" for k, v in entries.items()))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lrtbench", description="LRT benchmarks for SDE time-series classification.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True, out=True):
        if seed:
            sp.add_argument("--seed", type=int, default=0)
        if out:
            sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--workers", type=int, default=1)

    def overrides(sp):
        sp.add_argument("--override", action="append", metavar="KEY=VALUE",
                        help="dotted override such as model.theta1=0.5 or sim.n_paths=400")
        sp.add_argument("--config", help="file of KEY=VALUE lines applied before --override")

    g = sub.add_parser("generate", help="simulate a case and export a dataset bundle")
    g.add_argument("--case", required=True, choices=bench.CASES)
    g.add_argument("--setting", type=int, default=1, choices=(1, 2, 3, 4))
    g.add_argument("--keep-fine", action="store_true")
    g.add_argument("--layout", choices=("long", "wide"), default="long")
    g.add_argument("--paths", type=int, help="number of paths M (even)")
    common(g)
    overrides(g)
    g.set_defaults(func=cmd_generate)

    lr = sub.add_parser("lrt", help="score a bundle with a likelihood-ratio test")
    lr.add_argument("--data", required=True)
    lr.add_argument("--mode", required=True, choices=tuple(_LRT_MODES))
    common(lr, seed=False)
    lr.set_defaults(func=cmd_lrt)

    rk = sub.add_parser("rocket", help="repeated ROCKET train/test runs on a bundle")
    rk.add_argument("--data", required=True)
    rk.add_argument("--kernels", type=int, default=10_000)
    rk.add_argument("--runs", type=int, default=40)
    rk.add_argument("--train-fraction", type=float, default=0.75)
    common(rk)
    rk.set_defaults(func=cmd_rocket)

    b = sub.add_parser("bench", help="run the benchmark protocol on one case setting")
    b.add_argument("--case", required=True, choices=bench.CASES)
    b.add_argument("--setting", type=int, default=1, choices=(1, 2, 3, 4))
    b.add_argument("--runs", type=int, default=40)
    b.add_argument("--classifiers", default=",".join(bench.DEFAULT_CLASSIFIERS),
                   help="comma list from " + ",".join(bench.CLASSIFIERS))
    b.add_argument("--kernels", type=int, default=10_000)
    b.add_argument("--paths", type=int, help="number of paths M (even)")
    b.add_argument("--regenerate", action="store_true", help="simulate a fresh dataset in every run")
    b.add_argument("--no-scores", action="store_true")
    common(b)
    overrides(b)
    b.set_defaults(func=cmd_bench)

    sw = sub.add_parser("sweep", help="vary path length, noise or training size")
    sw.add_argument("--kind", required=True, choices=bench.SWEEP_KINDS)
    sw.add_argument("--values", required=True, help="comma-separated values")
    sw.add_argument("--case", choices=bench.CASES, help="base case (default: 12-d particle system)")
    sw.add_argument("--setting", type=int, default=1, choices=(1, 2, 3, 4))
    sw.add_argument("--runs", type=int, default=40)
    sw.add_argument("--classifiers", default=",".join(bench.DEFAULT_CLASSIFIERS))
    sw.add_argument("--kernels", type=int, default=10_000)
    sw.add_argument("--test-size", type=int, default=500)
    common(sw)
    overrides(sw)
    sw.set_defaults(func=cmd_sweep)

    r = sub.add_parser("report", help="re-render a report directory, optionally merging external scores")
    r.add_argument("--in", dest="input", required=True)
    r.add_argument("--scores", action="append", help="external scores CSV (repeatable)")
    r.add_argument("--data", help="dataset bundle the scores refer to")
    common(r, seed=False)
    r.set_defaults(func=cmd_report)

    a = sub.add_parser("analytic", help="closed-form BM or Monte-Carlo OU error rates")
    a.add_argument("--family", required=True, choices=("bm", "ou"))
    a.add_argument("--k", type=float, default=0.5, help="posterior level (ou)")
    a.add_argument("--samples", type=int, default=100_000, help="Monte-Carlo paths per class (ou)")
    common(a)
    overrides(a)
    a.set_defaults(func=cmd_analytic)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except Exception as exc:  # one parsable line, no traceback
        msg = " ".join(str(exc).split())
        print(f"error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
