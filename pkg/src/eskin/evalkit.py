"""Stratified cross-validation, metrics, and confusion-matrix reporting.

Fold plans shuffle within each stratum and deal round-robin, so per-stratum
fold counts never differ by more than 1. Reports carry pooled metrics
(computed over the concatenation of all test folds), per-fold values, and
their mean/std; confusion matrices are summed across folds. Everything is a
pure function of (dataset, k, seed, config), which is what makes report
files byte-reproducible.

Localisation and force metrics are computed on contact-positive test
samples only (the gated pipeline defines no node or force for a negative
detection); detection accuracy covers every test sample.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import SCHEMA_SINGLE, SCHEMA_TWO, Dataset, atomic_write_text
from .errors import (
    ConfigError,
    CoverageError,
    SchemaError,
    UndefinedMetricError,
    ValidationError,
)
from .pipeline import (
    PipelineConfig,
    predict_single_batch,
    predict_two_batch,
    train_single,
    train_two,
)


@dataclass(frozen=True)
class FoldPlan:
    """Fold index per sample plus the strata the split preserved."""

    k: int
    assignments: tuple[int, ...]
    strata: tuple

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.assignments) == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.assignments) != fold)


def stratified_kfold(strata, k: int, seed: int = 0) -> FoldPlan:
    """Shuffle each stratum by seed, then deal its samples round-robin."""
    if k < 2:
        raise ConfigError(f"k must be >= 2, got {k}")
    strata = list(strata)
    if not strata:
        raise ValidationError("cannot fold an empty sample list")
    rng = np.random.default_rng(seed)
    assignments = np.empty(len(strata), dtype=int)
    groups: dict = {}
    for i, s in enumerate(strata):
        groups.setdefault(s, []).append(i)
    for label in sorted(groups):
        idx = np.array(groups[label])
        rng.shuffle(idx)
        for pos, i in enumerate(idx):
            assignments[i] = pos % k
    return FoldPlan(k=k, assignments=tuple(int(a) for a in assignments), strata=tuple(strata))


def _check_pair(y, yhat) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.ndim != 1 or yhat.ndim != 1 or y.shape != yhat.shape:
        raise ValidationError("need two 1-d vectors of equal length")
    if y.shape[0] == 0:
        raise ValidationError("metrics are undefined on empty vectors")
    return y, yhat


def r2(y, yhat) -> float:
    """Coefficient of determination 1 - SS_res/SS_tot."""
    y, yhat = _check_pair(y, yhat)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise UndefinedMetricError("r2 is undefined for zero-variance targets")
    return 1.0 - float(np.sum((y - yhat) ** 2)) / ss_tot


def mse(y, yhat) -> float:
    y, yhat = _check_pair(y, yhat)
    return float(np.mean((y - yhat) ** 2))


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are true classes, columns predicted; labels name the classes."""

    counts: tuple[tuple[int, ...], ...]
    labels: tuple

    def __post_init__(self):
        n = len(self.labels)
        if len(self.counts) != n or any(len(r) != n for r in self.counts):
            raise ValidationError("counts grid must be n_classes x n_classes")
        if any(c < 0 for row in self.counts for c in row):
            raise ValidationError("counts must be >= 0")

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    def accuracy(self) -> float:
        total = self.total
        if total == 0:
            raise UndefinedMetricError("accuracy is undefined for an empty matrix")
        return sum(self.counts[i][i] for i in range(len(self.labels))) / total

    def is_diagonal_dominant(self) -> bool:
        """Every diagonal entry strictly exceeds every other entry in its row."""
        for i, row in enumerate(self.counts):
            if any(row[j] >= row[i] for j in range(len(row)) if j != i):
                return False
        return True

    def add(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if self.labels != other.labels:
            raise ValidationError("cannot sum confusion matrices over different classes")
        summed = tuple(
            tuple(a + b for a, b in zip(ra, rb))
            for ra, rb in zip(self.counts, other.counts)
        )
        return ConfusionMatrix(counts=summed, labels=self.labels)

    def to_dict(self) -> dict:
        return {"labels": list(self.labels), "counts": [list(r) for r in self.counts]}

    @classmethod
    def from_dict(cls, d: dict) -> "ConfusionMatrix":
        return cls(
            counts=tuple(tuple(int(c) for c in row) for row in d["counts"]),
            labels=tuple(d["labels"]),
        )


def confusion(true, pred, n_classes: int, labels=None) -> ConfusionMatrix:
    true = np.asarray(true, dtype=int)
    pred = np.asarray(pred, dtype=int)
    if true.shape != pred.shape or true.ndim != 1:
        raise ValidationError("need equal-length 1-d label vectors")
    for name, arr in (("true", true), ("pred", pred)):
        if arr.size and (arr.min() < 0 or arr.max() >= n_classes):
            raise ValidationError(f"{name} labels outside 0..{n_classes - 1}")
    counts = np.zeros((n_classes, n_classes), dtype=int)
    np.add.at(counts, (true, pred), 1)
    if labels is None:
        labels = tuple(range(n_classes))
    return ConfusionMatrix(
        counts=tuple(tuple(int(c) for c in row) for row in counts),
        labels=tuple(labels),
    )


@dataclass(frozen=True)
class MetricsReport:
    mode: str
    k: int
    seed: int
    n_samples: int
    pooled: dict
    per_fold: dict
    fold_mean: dict
    fold_std: dict
    confusions: dict
    notes: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "k": self.k,
            "seed": self.seed,
            "n_samples": self.n_samples,
            "pooled": dict(self.pooled),
            "per_fold": {k: list(v) for k, v in self.per_fold.items()},
            "fold_mean": dict(self.fold_mean),
            "fold_std": dict(self.fold_std),
            "confusions": {k: cm.to_dict() for k, cm in self.confusions.items()},
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        return cls(
            mode=d["mode"],
            k=int(d["k"]),
            seed=int(d["seed"]),
            n_samples=int(d["n_samples"]),
            pooled=dict(d["pooled"]),
            per_fold={k: tuple(v) for k, v in d["per_fold"].items()},
            fold_mean=dict(d["fold_mean"]),
            fold_std=dict(d["fold_std"]),
            confusions={
                k: ConfusionMatrix.from_dict(v) for k, v in d["confusions"].items()
            },
            notes=tuple(d["notes"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    def headline(self) -> str:
        keys = (
            ("stretch_r2", "stretch_mse", "force_r2", "detection_accuracy",
             "row_accuracy", "col_accuracy")
            if self.mode == SCHEMA_SINGLE
            else ("x1_accuracy", "y1_accuracy", "x2_accuracy", "y2_accuracy",
                  "force1_r2", "force2_r2", "force_mse_shared_axis",
                  "force_mse_disjoint")
        )
        parts = [f"{k}={self.pooled[k]:.6g}" for k in keys if k in self.pooled]
        return f"mode={self.mode} k={self.k} " + " ".join(parts)


def _finalize(per_fold: dict) -> tuple[dict, dict]:
    mean = {k: float(np.mean(v)) for k, v in per_fold.items()}
    std = {k: float(np.std(v)) for k, v in per_fold.items()}
    return mean, std


def _fold_datasets(ds: Dataset, plan: FoldPlan, fold: int) -> tuple[Dataset, np.ndarray]:
    tr = plan.train_indices(fold)
    te = plan.test_indices(fold)
    train = Dataset(samples=tuple(ds.samples[i] for i in tr), meta=ds.meta)
    return train, te


def cross_validate(
    ds: Dataset, k: int = 10, seed: int = 0, config: PipelineConfig | None = None
) -> MetricsReport:
    """k-fold CV of the single-contact pipeline, stratified on pressed node."""
    config = config or PipelineConfig()
    if ds.schema != SCHEMA_SINGLE:
        raise SchemaError(f"expected a single-contact dataset, got {ds.schema}")
    node_ids = np.array([s.node.node_id for s in ds])
    plan = stratified_kfold(node_ids.tolist(), k, seed)
    dataset_nodes = set(int(n) for n in node_ids if n > 0)
    x_all = ds.features()
    stretch_all = np.array([s.stretch for s in ds])
    force_all = np.array([s.force for s in ds])
    contact_all = node_ids > 0
    xt_all = np.array([s.node.x for s in ds])
    yt_all = np.array([s.node.y for s in ds])

    per_fold: dict[str, list] = {
        key: []
        for key in (
            "stretch_r2", "stretch_mse", "force_r2", "force_mse",
            "detection_accuracy", "row_accuracy", "col_accuracy",
        )
    }
    pooled_pred: dict[str, list] = {key: [] for key in (
        "stretch", "detected", "x_term", "y_term", "force"
    )}
    pooled_idx: list[np.ndarray] = []
    terminal_labels = tuple(range(1, 11))
    cm_row = confusion([], [], 10, terminal_labels)
    cm_col = confusion([], [], 10, terminal_labels)

    for fold in range(k):
        train, te = _fold_datasets(ds, plan, fold)
        train_nodes = {s.node.node_id for s in train if s.node.is_contact}
        missing = sorted(dataset_nodes - train_nodes)
        if missing:
            raise CoverageError(
                f"fold {fold} training split lacks node classes {missing}"
            )
        p = train_single(train, config)
        out = predict_single_batch(p, x_all[te])
        pos = contact_all[te]

        per_fold["stretch_r2"].append(r2(stretch_all[te], out["stretch"]))
        per_fold["stretch_mse"].append(mse(stretch_all[te], out["stretch"]))
        per_fold["detection_accuracy"].append(
            float(np.mean(out["detected"] == pos))
        )
        per_fold["force_r2"].append(r2(force_all[te][pos], out["force"][pos]))
        per_fold["force_mse"].append(mse(force_all[te][pos], out["force"][pos]))
        per_fold["row_accuracy"].append(
            float(np.mean(out["y_term"][pos] == yt_all[te][pos]))
        )
        per_fold["col_accuracy"].append(
            float(np.mean(out["x_term"][pos] == xt_all[te][pos]))
        )
        cm_row = cm_row.add(
            confusion(yt_all[te][pos] - 1, out["y_term"][pos] - 1, 10, terminal_labels)
        )
        cm_col = cm_col.add(
            confusion(xt_all[te][pos] - 1, out["x_term"][pos] - 1, 10, terminal_labels)
        )
        for key in pooled_pred:
            pooled_pred[key].append(out[key])
        pooled_idx.append(te)

    idx = np.concatenate(pooled_idx)
    cat = {key: np.concatenate(v) for key, v in pooled_pred.items()}
    pos = contact_all[idx]
    pooled = {
        "stretch_r2": r2(stretch_all[idx], cat["stretch"]),
        "stretch_mse": mse(stretch_all[idx], cat["stretch"]),
        "detection_accuracy": float(np.mean(cat["detected"] == pos)),
        "force_r2": r2(force_all[idx][pos], cat["force"][pos]),
        "force_mse": mse(force_all[idx][pos], cat["force"][pos]),
        "row_accuracy": float(np.mean(cat["y_term"][pos] == yt_all[idx][pos])),
        "col_accuracy": float(np.mean(cat["x_term"][pos] == xt_all[idx][pos])),
    }
    fold_mean, fold_std = _finalize(per_fold)
    return MetricsReport(
        mode=SCHEMA_SINGLE,
        k=k,
        seed=seed,
        n_samples=len(ds),
        pooled=pooled,
        per_fold={k2: tuple(v) for k2, v in per_fold.items()},
        fold_mean=fold_mean,
        fold_std=fold_std,
        confusions={"row": cm_row, "col": cm_col},
        notes=(
            "localisation and force metrics cover contact-positive test samples only",
            "pooled metrics are computed over the concatenated test folds; "
            "fold_mean/fold_std aggregate the per-fold values",
        ),
    )


def cross_validate_two(
    ds: Dataset, k: int = 5, seed: int = 0, config: PipelineConfig | None = None
) -> MetricsReport:
    """k-fold CV of the two-contact models, stratified on the node pair."""
    config = config or PipelineConfig()
    if ds.schema != SCHEMA_TWO:
        raise SchemaError(f"expected a two-contact dataset, got {ds.schema}")
    if len(ds) == 0:
        raise ValidationError("empty two-contact dataset")
    pair_labels = [(s.node1.node_id, s.node2.node_id) for s in ds]
    plan = stratified_kfold(pair_labels, k, seed)
    x_all = ds.features()
    truth = {
        "x1": np.array([s.node1.x for s in ds]),
        "y1": np.array([s.node1.y for s in ds]),
        "x2": np.array([s.node2.x for s in ds]),
        "y2": np.array([s.node2.y for s in ds]),
        "force1": np.array([s.force1 for s in ds]),
        "force2": np.array([s.force2 for s in ds]),
    }
    shared_all = (truth["x1"] == truth["x2"]) | (truth["y1"] == truth["y2"])

    coord_keys = ("x1", "y1", "x2", "y2")
    metric_keys = [f"{c}_accuracy" for c in coord_keys] + [
        "force1_r2", "force1_mse", "force2_r2", "force2_mse",
    ]
    per_fold: dict[str, list] = {key: [] for key in metric_keys}
    axes = tuple(sorted(config.node_axes))
    axis_index = {v: i for i, v in enumerate(axes)}
    cms = {c: confusion([], [], len(axes), axes) for c in coord_keys}
    pooled_pred: dict[str, list] = {key: [] for key in coord_keys + ("force1", "force2")}
    pooled_idx: list[np.ndarray] = []

    for fold in range(k):
        train, te = _fold_datasets(ds, plan, fold)
        try:
            p = train_two(train, config)
        except CoverageError as exc:
            raise CoverageError(f"fold {fold}: {exc}")
        out = predict_two_batch(p, x_all[te])
        for c in coord_keys:
            per_fold[f"{c}_accuracy"].append(float(np.mean(out[c] == truth[c][te])))
            cms[c] = cms[c].add(
                confusion(
                    [axis_index[int(v)] for v in truth[c][te]],
                    [axis_index[int(v)] for v in out[c]],
                    len(axes),
                    axes,
                )
            )
        for f in ("force1", "force2"):
            per_fold[f"{f}_r2"].append(r2(truth[f][te], out[f]))
            per_fold[f"{f}_mse"].append(mse(truth[f][te], out[f]))
        for key in pooled_pred:
            pooled_pred[key].append(out[key])
        pooled_idx.append(te)

    idx = np.concatenate(pooled_idx)
    cat = {key: np.concatenate(v) for key, v in pooled_pred.items()}
    sq_err = np.concatenate(
        [
            (cat["force1"] - truth["force1"][idx]) ** 2,
            (cat["force2"] - truth["force2"][idx]) ** 2,
        ]
    )
    shared2 = np.concatenate([shared_all[idx], shared_all[idx]])
    pooled = {}
    for c in coord_keys:
        pooled[f"{c}_accuracy"] = float(np.mean(cat[c] == truth[c][idx]))
    for f in ("force1", "force2"):
        pooled[f"{f}_r2"] = r2(truth[f][idx], cat[f])
        pooled[f"{f}_mse"] = mse(truth[f][idx], cat[f])
    pooled["force_mse_shared_axis"] = float(np.mean(sq_err[shared2]))
    pooled["force_mse_disjoint"] = float(np.mean(sq_err[~shared2]))
    fold_mean, fold_std = _finalize(per_fold)
    return MetricsReport(
        mode=SCHEMA_TWO,
        k=k,
        seed=seed,
        n_samples=len(ds),
        pooled=pooled,
        per_fold={k2: tuple(v) for k2, v in per_fold.items()},
        fold_mean=fold_mean,
        fold_std=fold_std,
        confusions=cms,
        notes=(
            "force_mse_shared_axis pools both contacts over test pairs sharing a "
            "row or column terminal; force_mse_disjoint covers the remaining pairs",
            "pooled metrics are computed over the concatenated test folds; "
            "fold_mean/fold_std aggregate the per-fold values",
        ),
    )


def confusion_to_csv(cm: ConfusionMatrix) -> str:
    lines = ["true\\pred," + ",".join(str(l) for l in cm.labels)]
    for label, row in zip(cm.labels, cm.counts):
        lines.append(str(label) + "," + ",".join(str(c) for c in row))
    return "\n".join(lines) + "\n"


def confusion_to_pgm(cm: ConfusionMatrix, cell: int = 24) -> str:
    """ASCII (P2) heatmap; darker cells hold more counts."""
    n = len(cm.labels)
    peak = max((c for row in cm.counts for c in row), default=0)
    lines = ["P2", f"{n * cell} {n * cell}", "255"]
    for i in range(n):
        shades = [
            255 - round(255 * cm.counts[i][j] / peak) if peak else 255
            for j in range(n)
        ]
        pixel_row = " ".join(" ".join([str(s)] * cell) for s in shades)
        lines.extend([pixel_row] * cell)
    return "\n".join(lines) + "\n"


def write_report_files(
    report: MetricsReport, out_dir: str | Path, emit_heatmaps: bool = False
) -> list[Path]:
    """report.json plus one CSV (and optional PGM) per confusion matrix."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    path = out / "report.json"
    atomic_write_text(path, report.to_json())
    written.append(path)
    for name, cm in sorted(report.confusions.items()):
        csv_path = out / f"cm_{name}.csv"
        atomic_write_text(csv_path, confusion_to_csv(cm))
        written.append(csv_path)
        if emit_heatmaps:
            pgm_path = out / f"heatmap_{name}.pgm"
            atomic_write_text(pgm_path, confusion_to_pgm(cm))
            written.append(pgm_path)
    return written


def load_report(path: str | Path) -> MetricsReport:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"report is not valid JSON: {exc}")
    try:
        return MetricsReport.from_dict(d)
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"report is missing required fields: {exc}")
