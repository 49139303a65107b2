"""CSV bundles for datasets, score files and benchmark reports.

Numbers are written with 17 significant digits, which round-trips every
double exactly.  Each bundle carries ``manifest.txt``, a flat ``key=value``
document recording the generating parameters, the content digest of the
data and the SHA-256 of every data file.
"""

from __future__ import annotations

import hashlib
import os
from pathlib import Path

import numpy as np

from . import __version__
from .bench import BenchmarkReport, CaseSetting, RunResult, add_scores
from .lrt import ScoreSet
from .metrics import MetricsSummary, RocCurve, summarize_runs
from .models import make_model_pair
from .simulate import Dataset
from .svg import box_svg, roc_svg

SCHEMA_VERSION = "1"
FLOAT = "%.17g"
MANIFEST = "manifest.txt"
LABELS = "labels.csv"
LONG = "paths.csv"
WIDE = "paths_wide.csv"
GRID = "time_grid.csv"
FINE = "fine_paths.csv"
SCORE_COLUMNS = ["path_index", "label", "score", "mode"]


class BundleError(ValueError):
    pass


def write_manifest(path, entries: dict[str, str]) -> None:
    lines = ["# lrtbench manifest"]
    for k in sorted(entries):
        v = str(entries[k])
        if "\n" in v or "=" in k:
            raise BundleError(f"manifest entry {k!r} is not flat")
        lines.append(f"{k}={v}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_manifest(path) -> dict[str, str]:
    path = Path(path)
    if not path.is_file():
        raise BundleError(f"missing manifest {path}")
    out = {}
    for line in path.read_text().splitlines():
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise BundleError(f"malformed manifest line {line!r}")
        k, v = line.split("=", 1)
        out[k] = v
    return out


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_long(path, states: np.ndarray, labels: np.ndarray, times: np.ndarray) -> None:
    m, n, d = states.shape
    header = ",".join(["path_id", "label", "step_index", "time"] + [f"x_{j + 1}" for j in range(d)])
    pid = np.repeat(np.arange(m), n)
    table = np.column_stack([
        pid, np.repeat(labels, n), np.tile(np.arange(n), m), np.tile(times, m), states.reshape(m * n, d),
    ])
    np.savetxt(path, table, delimiter=",", header=header, comments="", fmt=["%d"] * 3 + [FLOAT] * (d + 1))


def _read_table(path, columns=None) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise BundleError(f"missing file {path.name}")
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    if columns is not None and header[: len(columns)] != columns:
        raise BundleError(f"{path.name}: unexpected columns {header}")
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2), header


def _read_long(path, m: int, d: int):
    table, header = _read_table(path, ["path_id", "label", "step_index", "time"])
    if len(header) != 4 + d:
        raise BundleError(f"{Path(path).name}: expected {d} state columns")
    if table.shape[0] % m:
        raise BundleError(f"{Path(path).name}: row count {table.shape[0]} is not a multiple of {m} paths")
    n = table.shape[0] // m
    pid = table[:, 0].astype(np.int64).reshape(m, n)
    step = table[:, 2].astype(np.int64).reshape(m, n)
    if np.any(pid != np.arange(m)[:, None]) or np.any(step != np.arange(n)[None, :]):
        raise BundleError(f"{Path(path).name}: rows are not ordered by (path_id, step_index)")
    labels = table[:, 1].astype(np.int64).reshape(m, n)[:, 0]
    times = table[:n, 3].copy()
    states = np.ascontiguousarray(table[:, 4:].reshape(m, n, d))
    return states, labels, times


def export_dataset(dataset: Dataset, directory, layout: str = "long") -> dict[str, Path]:
    """Write ``dataset`` as a CSV bundle; returns the written files by role."""
    if layout not in ("long", "wide"):
        raise BundleError("layout must be 'long' or 'wide'")
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    m, n, d = dataset.observed.shape
    files = {}

    files["labels"] = out / LABELS
    np.savetxt(files["labels"], np.column_stack([np.arange(m), dataset.labels]), delimiter=",",
               header="path_id,label", comments="", fmt="%d")
    if layout == "long":
        files["paths"] = out / LONG
        _write_long(files["paths"], dataset.observed, dataset.labels, dataset.times)
    else:
        files["paths"] = out / WIDE
        header = ",".join(["label"] + [f"x_{l}_{j + 1}" for l in range(n) for j in range(d)])
        np.savetxt(files["paths"], np.column_stack([dataset.labels, dataset.observed.reshape(m, n * d)]),
                   delimiter=",", header=header, comments="", fmt=["%d"] + [FLOAT] * (n * d))
        files["grid"] = out / GRID
        np.savetxt(files["grid"], np.column_stack([np.arange(n), dataset.times]), delimiter=",",
                   header="step_index,time", comments="", fmt=["%d", FLOAT])
    if dataset.fine is not None:
        files["fine"] = out / FINE
        _write_long(files["fine"], dataset.fine, dataset.labels, dataset.fine_times)

    manifest = {k: v for k, v in dataset.manifest.items() if not k.startswith("file.")}
    manifest.update({
        "schema_version": SCHEMA_VERSION,
        "tool_version": manifest.get("tool_version", __version__),
        "layout": layout,
        "shape.M": str(m), "shape.points": str(n), "shape.d": str(d),
        "data.digest": dataset.digest,
        "fine": str(dataset.fine is not None).lower(),
    })
    for role, path in files.items():
        manifest[f"file.{path.name}"] = file_sha256(path)
    files["manifest"] = out / MANIFEST
    write_manifest(files["manifest"], manifest)
    return files


_TUPLE_KEYS = ("theta0", "theta1", "levels0", "levels1", "breakpoints")
_INT_KEYS = ("d", "N", "d1")


def parse_model_value(key: str, text: str):
    """Convert the text form of a model parameter to its typed value."""
    try:
        if key == "ips_sign":
            return text
        if "," in text or key in _TUPLE_KEYS:
            return tuple(float(x) for x in text.split(","))
        if key in _INT_KEYS:
            return int(text)
        return float(text)
    except ValueError as exc:
        raise BundleError(f"bad value {text!r} for model.{key}") from exc


def pair_from_manifest(manifest: dict[str, str]):
    family = manifest.get("model.family")
    if family is None:
        return None
    params = {}
    for k, v in manifest.items():
        if not k.startswith("model.") or k == "model.family":
            continue
        key = k[len("model."):]
        # derived dimensions are not free parameters for these families
        if key == "d" and family in ("interacting-particles", "linear-nonlinear"):
            continue
        params[key] = parse_model_value(key, v)
    return make_model_pair(family, params)


def import_dataset(directory) -> Dataset:
    """Read a bundle written by :func:`export_dataset`, verifying digests."""
    src = Path(directory)
    manifest = read_manifest(src / MANIFEST)
    if manifest.get("schema_version") != SCHEMA_VERSION:
        raise BundleError(f"schema version {manifest.get('schema_version')!r} is not supported")
    for k, v in manifest.items():
        if k.startswith("file."):
            p = src / k[len("file."):]
            if not p.is_file():
                raise BundleError(f"missing file {p.name}")
            if file_sha256(p) != v:
                raise BundleError(f"digest mismatch for {p.name}")
    try:
        m, n, d = (int(manifest[f"shape.{k}"]) for k in ("M", "points", "d"))
        layout = manifest["layout"]
    except KeyError as exc:
        raise BundleError(f"manifest lacks {exc}") from exc
    if f"file.{LABELS}" not in manifest:
        raise BundleError("bundle has no labels file")
    lab_table, _ = _read_table(src / LABELS, ["path_id", "label"])
    labels = lab_table[:, 1].astype(np.int64)
    if layout == "long":
        observed, row_labels, times = _read_long(src / LONG, m, d)
    elif layout == "wide":
        table, header = _read_table(src / WIDE, ["label"])
        if table.shape != (m, 1 + n * d):
            raise BundleError(f"{WIDE}: expected {m} rows of width {1 + n * d}")
        row_labels = table[:, 0].astype(np.int64)
        observed = np.ascontiguousarray(table[:, 1:].reshape(m, n, d))
        grid, _ = _read_table(src / GRID, ["step_index", "time"])
        times = grid[:, 1].copy()
    else:
        raise BundleError(f"unknown layout {layout!r}")
    if len(labels) != m or np.any(row_labels != labels):
        raise BundleError("labels file disagrees with the path data")
    fine = fine_times = None
    if manifest.get("fine") == "true":
        fine, fine_labels, fine_times = _read_long(src / FINE, m, d)
        if np.any(fine_labels != labels):
            raise BundleError("fine paths disagree with labels")
    ds = Dataset(observed, labels, times, fine, fine_times,
                 {k: v for k, v in manifest.items() if not k.startswith("file.")},
                 pair_from_manifest(manifest), None, imported=True)
    if ds.digest != manifest.get("data.digest"):
        raise BundleError("content digest mismatch")
    return ds


def write_scores(scores: ScoreSet, path, classifier: str | None = None) -> Path:
    """Scores CSV: two ``#`` provenance lines, then one row per path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(f"# dataset_digest={scores.provenance}\n")
        fh.write(f"# classifier={classifier or scores.mode}\n")
        fh.write(",".join(SCORE_COLUMNS) + "\n")
        for i, lab, s in zip(scores.path_index, scores.labels, scores.scores):
            fh.write(f"{int(i)},{int(lab)},{FLOAT % s},{scores.mode}\n")
    return path


def read_scores(path) -> tuple[ScoreSet, str]:
    """Parse a scores CSV into ``(ScoreSet, classifier name)``."""
    path = Path(path)
    if not path.is_file():
        raise BundleError(f"missing scores file {path}")
    meta = {}
    idx, labels, scores, modes = [], [], [], set()
    with open(path) as fh:
        lines = fh.read().splitlines()
    body = [ln for ln in lines if ln.startswith("#") is False]
    for ln in lines:
        if ln.startswith("#") and "=" in ln:
            k, v = ln[1:].strip().split("=", 1)
            meta[k] = v
    if "dataset_digest" not in meta:
        raise BundleError(f"{path.name}: missing dataset_digest line")
    if not body or body[0].split(",") != SCORE_COLUMNS:
        raise BundleError(f"{path.name}: header must be {','.join(SCORE_COLUMNS)}")
    for n, ln in enumerate(body[1:], start=2):
        parts = ln.split(",")
        if len(parts) != 4:
            raise BundleError(f"{path.name}: row {n} has {len(parts)} fields")
        try:
            idx.append(int(parts[0]))
            labels.append(int(parts[1]))
            scores.append(float(parts[2]))
        except ValueError as exc:
            raise BundleError(f"{path.name}: row {n}: {exc}") from exc
        modes.add(parts[3])
    if not idx:
        raise BundleError(f"{path.name}: no score rows")
    if not set(labels) <= {0, 1}:
        raise BundleError(f"{path.name}: labels must be 0 or 1")
    mode = modes.pop() if len(modes) == 1 else "mixed"
    name = meta.get("classifier", mode)
    return ScoreSet(np.array(scores), np.array(labels), mode, meta["dataset_digest"], np.array(idx)), name


def check_scores(scores: ScoreSet, digest: str, labels: np.ndarray) -> None:
    if scores.provenance != digest:
        raise BundleError("scores reference a different dataset (digest mismatch)")
    if np.any(scores.path_index < 0) or np.any(scores.path_index >= len(labels)):
        raise BundleError("path_index out of range for the dataset")
    if np.any(labels[scores.path_index] != scores.labels):
        raise BundleError("per-row labels disagree with the dataset")


def import_external_scores(report: BenchmarkReport, path, name: str | None = None, run: int | None = None) -> ScoreSet:
    """Merge a scores CSV into ``report`` as an extra classifier column."""
    scores, file_name = read_scores(path)
    if report.labels is None:
        raise BundleError("report has no fixed dataset to check scores against")
    check_scores(scores, report.manifest.get("dataset.digest", ""), report.labels)
    add_scores(report, name or f"external:{file_name}", scores, run)
    return scores


def _safe(name: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in name)


METRICS = ("auc", "acc_star", "k_star", "alpha0", "alpha1")


def emit_report(report: BenchmarkReport, directory, with_scores: bool = True) -> list[Path]:
    """Write CSV tables and SVG plots for ``report`` into ``directory``."""
    if not report.classifiers:
        raise BundleError("report has no classifiers")
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    typical = {}
    for c in report.classifiers:
        try:
            typical[c] = report.typical_run(c)
        except StopIteration:
            continue
        roc = typical[c].roc[c]
        p = out / f"roc_{_safe(c)}.csv"
        np.savetxt(p, np.column_stack([roc.fpr, roc.tpr, roc.thresholds]), delimiter=",",
                   header="fpr,tpr,threshold", comments="", fmt=FLOAT)
        written.append(p)

    for metric in ("auc", "acc_star"):
        p = out / f"{metric}_runs.csv"
        with open(p, "w") as fh:
            fh.write(",".join(["run", "seed"] + report.classifiers) + "\n")
            for r in report.runs:
                vals = [FLOAT % getattr(r.metrics[c], metric) if c in r.metrics else ""
                        for c in report.classifiers]
                fh.write(",".join([str(r.run), str(r.seed)] + vals) + "\n")
        written.append(p)

    p = out / "metrics_runs.csv"
    with open(p, "w") as fh:
        fh.write(",".join(["run", "seed", "classifier"] + list(METRICS)) + "\n")
        for r in report.runs:
            for c in report.classifiers:
                if c not in r.metrics:
                    continue
                m = r.metrics[c]
                fh.write(",".join([str(r.run), str(r.seed), c] + [FLOAT % getattr(m, k) for k in METRICS]) + "\n")
    written.append(p)

    p = out / "summary.csv"
    panels = {"auc": {}, "acc_star": {}}
    with open(p, "w") as fh:
        fh.write("metric,classifier,n,min,q1,median,q3,max,whisker_low,whisker_high,outliers\n")
        for metric in ("auc", "acc_star"):
            for c in report.classifiers:
                s = report.summary(metric, c)
                panels[metric][c] = s
                nums = [s.minimum, s.q1, s.median, s.q3, s.maximum, s.whisker_low, s.whisker_high]
                fh.write(",".join([metric, c, str(len(report.values(metric, c)))] + [FLOAT % v for v in nums]
                                  + [";".join(FLOAT % o for o in s.outliers)]) + "\n")
    written.append(p)

    label = report.setting.label
    curves = {c: (r.roc[c].fpr, r.roc[c].tpr) for c, r in typical.items()}
    p = out / "roc.svg"
    p.write_text(roc_svg(curves, f"ROC, case {label}, typical run"))
    written.append(p)
    p = out / "box.svg"
    p.write_text(box_svg(panels, f"case {label}, {len(report.runs)} run(s)"))
    written.append(p)

    if with_scores:
        sdir = out / "scores"
        fixed = report.labels is not None
        for c in report.classifiers:
            per_run = [(r.run, r.scores[c]) for r in report.runs if c in r.scores]
            if not per_run:
                continue
            if fixed and len(per_run) == len(report.runs) and all(s is per_run[0][1] for _, s in per_run):
                written.append(write_scores(per_run[0][1], sdir / f"{_safe(c)}.csv", c))
            else:
                for run, s in per_run:
                    written.append(write_scores(s, sdir / f"{_safe(c)}_run{run}.csv", c))

    p = out / MANIFEST
    write_manifest(p, report.manifest)
    written.append(p)
    return written


def load_report(directory) -> BenchmarkReport:
    """Rebuild a report (metrics of every run, ROC of run 0) from its tables."""
    src = Path(directory)
    manifest = read_manifest(src / MANIFEST)
    table = src / "metrics_runs.csv"
    if not table.is_file():
        raise BundleError(f"{src} holds no metrics_runs.csv")
    with open(table) as fh:
        header = fh.readline().strip().split(",")
        if header != ["run", "seed", "classifier"] + list(METRICS):
            raise BundleError("metrics_runs.csv has unexpected columns")
        rows = [ln.strip().split(",") for ln in fh if ln.strip()]
    runs: dict[int, RunResult] = {}
    classifiers: list[str] = []
    for run, seed, c, *vals in rows:
        r = runs.setdefault(int(run), RunResult(int(run), int(seed)))
        r.metrics[c] = MetricsSummary(*(float(v) for v in vals))
        if c not in classifiers:
            classifiers.append(c)
    ordered = [runs[k] for k in sorted(runs)]
    for c in classifiers:
        p = src / f"roc_{_safe(c)}.csv"
        if p.is_file():
            t, _ = _read_table(p, ["fpr", "tpr", "threshold"])
            home = next(r for r in ordered if c in r.metrics)
            home.roc[c] = RocCurve(t[:, 0], t[:, 1], t[:, 2])
    s = {k[len("setting."):]: v for k, v in manifest.items() if k.startswith("setting.")}
    try:
        ov = tuple(tuple(kv.split("=", 1)) for kv in s.get("overrides", "").split(";") if kv)
        setting = CaseSetting(s["case"], int(s["setting"]), s["family"], int(s["d"]), int(s["L"]),
                              float(s["t_L"]), float(s["dt"]), float(s["delta"]), int(s["M"]),
                              float(s["train_fraction"]), ov)
    except KeyError as exc:
        raise BundleError(f"report manifest lacks setting field {exc}") from exc
    return BenchmarkReport(setting, classifiers, ordered, manifest)


def summaries_equal(report: BenchmarkReport, directory) -> bool:
    """True when ``summary.csv`` in ``directory`` matches recomputed summaries."""
    with open(Path(directory) / "summary.csv") as fh:
        next(fh)
        for line in fh:
            metric, c, _, *rest = line.rstrip("\n").split(",")
            s = summarize_runs(report.values(metric, c))
            if [float(v) for v in rest[:7]] != [s.minimum, s.q1, s.median, s.q3, s.maximum,
                                                 s.whisker_low, s.whisker_high]:
                return False
    return True


def ensure_writable(directory) -> Path:
    p = Path(directory)
    p.mkdir(parents=True, exist_ok=True)
    if not os.access(p, os.W_OK):
        raise BundleError(f"directory {p} is not writable")
    return p
