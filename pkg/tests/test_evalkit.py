"""Fold planning, metrics, confusion matrices, and the cross-validation
drivers."""

import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eskin import (
    ConfigError,
    ConfusionMatrix,
    CoverageError,
    Dataset,
    MetricsReport,
    SchemaError,
    UndefinedMetricError,
    ValidationError,
    confusion,
    cross_validate,
    cross_validate_two,
    mse,
    r2,
    stratified_kfold,
)
from eskin.evalkit import (
    confusion_to_csv,
    confusion_to_pgm,
    load_report,
    write_report_files,
)


@pytest.fixture(scope="module")
def single_report(small_single_ds):
    return cross_validate(small_single_ds, k=3)


@pytest.fixture(scope="module")
def two_report(small_two_ds, small_two_config):
    return cross_validate_two(small_two_ds, k=2, config=small_two_config)


class TestStratifiedKfold:
    def test_balanced_two_class_k10(self):
        labels = ["a"] * 10 + ["b"] * 10
        plan = stratified_kfold(labels, k=10)
        for fold in range(10):
            test = plan.test_indices(fold)
            assert len(test) == 2
            assert {labels[i] for i in test} == {"a", "b"}

    def test_seven_three_split(self):
        labels = ["A"] * 7 + ["B"] * 3
        plan = stratified_kfold(labels, k=2)
        comps = []
        for fold in range(2):
            test = plan.test_indices(fold)
            comps.append(
                (
                    sum(labels[i] == "A" for i in test),
                    sum(labels[i] == "B" for i in test),
                )
            )
        assert sorted(comps) == [(3, 1), (4, 2)]

    def test_k1_rejected(self):
        with pytest.raises(ConfigError):
            stratified_kfold([0, 1], k=1)

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            stratified_kfold([], k=2)

    def test_train_test_complementary(self):
        labels = [i % 3 for i in range(17)]
        plan = stratified_kfold(labels, k=4, seed=2)
        for fold in range(4):
            test = set(plan.test_indices(fold))
            train = set(plan.train_indices(fold))
            assert test | train == set(range(17))
            assert not (test & train)

    def test_deterministic_per_seed(self):
        labels = [i % 4 for i in range(30)]
        a = stratified_kfold(labels, k=3, seed=5)
        b = stratified_kfold(labels, k=3, seed=5)
        c = stratified_kfold(labels, k=3, seed=6)
        assert a.assignments == b.assignments
        assert a.assignments != c.assignments

    @given(
        n=st.integers(4, 60),
        k=st.integers(2, 5),
        n_classes=st.integers(1, 4),
        seed=st.integers(0, 100),
    )
    def test_partition_and_balance(self, n, k, n_classes, seed):
        rng = np.random.default_rng(seed)
        labels = [int(v) for v in rng.integers(0, n_classes, n)]
        plan = stratified_kfold(labels, k=k, seed=seed)
        seen = [i for f in range(k) for i in plan.test_indices(f)]
        assert sorted(seen) == list(range(n))
        # every stratum spreads as evenly as it can
        for cls in set(labels):
            per_fold = [
                sum(labels[i] == cls for i in plan.test_indices(f)) for f in range(k)
            ]
            assert max(per_fold) - min(per_fold) <= 1


class TestMetrics:
    def test_r2_example(self):
        assert r2([1, 2, 3], [1, 2, 4]) == pytest.approx(0.5, abs=1e-12)

    def test_mse_examples(self):
        assert mse([1, 2, 3], [1, 2, 4]) == pytest.approx(1.0 / 3.0, abs=1e-12)
        assert mse([0.0], [2.0]) == pytest.approx(4.0, abs=1e-12)

    def test_r2_zero_variance(self):
        with pytest.raises(UndefinedMetricError):
            r2([2, 2, 2], [1, 2, 3])

    def test_perfect_prediction(self):
        assert r2([1.0, 2.0, 5.0], [1.0, 2.0, 5.0]) == pytest.approx(1.0)
        assert mse([1.0, 2.0], [1.0, 2.0]) == 0.0

    @pytest.mark.parametrize("fn", [r2, mse])
    def test_empty_rejected(self, fn):
        with pytest.raises(ValidationError):
            fn([], [])

    @pytest.mark.parametrize("fn", [r2, mse])
    def test_length_mismatch(self, fn):
        with pytest.raises(ValidationError):
            fn([1, 2], [1])


class TestConfusion:
    def test_three_sample_example(self):
        cm = confusion([0, 0, 1], [0, 1, 1], n_classes=2)
        assert cm.counts[0][0] == 1
        assert cm.counts[0][1] == 1
        assert cm.counts[1][0] == 0
        assert cm.counts[1][1] == 1
        assert cm.total == 3
        assert cm.accuracy() == pytest.approx(2.0 / 3.0)

    def test_row_sums_match_class_counts(self, rng):
        true = rng.integers(0, 5, 100)
        pred = rng.integers(0, 5, 100)
        cm = confusion(true, pred, n_classes=5)
        rows = np.array(cm.counts).sum(axis=1)
        assert np.array_equal(rows, np.bincount(true, minlength=5))
        assert cm.total == 100

    def test_out_of_range_rejected(self):
        with pytest.raises(ValidationError):
            confusion([0, 1], [0, 2], n_classes=2)

    def test_custom_labels(self):
        cm = confusion([0, 1], [0, 1], n_classes=2, labels=(1, 6))
        assert cm.labels == (1, 6)

    def test_diagonal_dominance(self):
        good = ConfusionMatrix(counts=((2, 0), (1, 3)), labels=(0, 1))
        assert good.is_diagonal_dominant()
        bad = ConfusionMatrix(counts=((2, 2), (0, 3)), labels=(0, 1))
        assert not bad.is_diagonal_dominant()

    def test_add(self):
        a = confusion([0, 1], [0, 1], n_classes=2)
        b = confusion([0, 0], [0, 1], n_classes=2)
        merged = a.add(b)
        assert merged.counts == ((2, 1), (0, 1))
        with pytest.raises(ValidationError):
            a.add(ConfusionMatrix(counts=((1,),), labels=(9,)))

    def test_empty_accuracy_undefined(self):
        cm = ConfusionMatrix(counts=((0, 0), (0, 0)), labels=(0, 1))
        with pytest.raises(UndefinedMetricError):
            cm.accuracy()

    def test_dict_round_trip(self):
        cm = confusion([0, 1, 1], [0, 1, 0], n_classes=2)
        assert ConfusionMatrix.from_dict(cm.to_dict()) == cm


class TestEmitters:
    CM = ConfusionMatrix(counts=((2, 0), (1, 3)), labels=(1, 6))

    def test_csv_layout(self):
        text = confusion_to_csv(self.CM)
        assert text == "true\\pred,1,6\n1,2,0\n6,1,3\n"

    def test_pgm_layout(self):
        text = confusion_to_pgm(self.CM, cell=2)
        lines = text.splitlines()
        assert lines[0] == "P2"
        assert lines[1] == "4 4"
        assert lines[2] == "255"
        pixels = [int(v) for row in lines[3:] for v in row.split()]
        assert len(pixels) == 16
        assert all(0 <= p <= 255 for p in pixels)
        # peak count renders black, zero count renders white
        assert pixels[0] == 85           # count 2 of peak 3
        assert pixels[2] == 255          # count 0
        assert pixels[-1] == 0           # count 3 (peak)

    def test_pgm_empty_matrix_is_white(self):
        cm = ConfusionMatrix(counts=((0, 0), (0, 0)), labels=(0, 1))
        pixels = confusion_to_pgm(cm, cell=1).splitlines()[3:]
        assert all(v == "255" for row in pixels for v in row.split())


class TestCrossValidateSingle:
    def test_report_shape(self, single_report, small_single_ds):
        rep = single_report
        assert rep.mode == "single"
        assert rep.k == 3
        assert rep.n_samples == len(small_single_ds)
        assert all(len(vals) == 3 for vals in rep.per_fold.values())
        assert set(rep.per_fold) == set(rep.pooled)
        assert set(rep.confusions) == {"row", "col"}
        for cm in rep.confusions.values():
            assert cm.labels == tuple(range(1, 11))

    def test_headline_line(self, single_report):
        head = single_report.headline()
        assert head.startswith("mode=single k=3 ")
        for key in (
            "stretch_r2",
            "stretch_mse",
            "force_r2",
            "detection_accuracy",
            "row_accuracy",
            "col_accuracy",
        ):
            assert f"{key}=" in head

    def test_sane_pooled_values(self, single_report):
        pooled = single_report.pooled
        assert pooled["stretch_r2"] > 0.98
        assert pooled["force_r2"] > 0.6
        assert 0.0 <= pooled["detection_accuracy"] <= 1.0
        assert pooled["stretch_mse"] >= 0.0

    def test_fold_stats_align(self, single_report):
        assert set(single_report.fold_mean) == set(single_report.fold_std)
        assert all(v >= 0.0 for v in single_report.fold_std.values())

    def test_json_round_trip(self, single_report):
        back = MetricsReport.from_dict(json.loads(single_report.to_json()))
        assert back.to_json() == single_report.to_json()

    def test_missing_node_class_raises(self, small_single_ds):
        keep = []
        dropped = 0
        for s in small_single_ds:
            if s.node.node_id == 1 and dropped < 8:
                dropped += 1
                continue
            keep.append(s)
        assert dropped == 8   # node 1 keeps a single sample
        thin = Dataset(tuple(keep))
        with pytest.raises(CoverageError, match="training split lacks node classes"):
            cross_validate(thin, k=2)

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            cross_validate(Dataset(()), k=2)

    def test_two_schema_rejected(self, small_two_ds):
        with pytest.raises(SchemaError):
            cross_validate(small_two_ds, k=2)


class TestCrossValidateTwo:
    def test_report_shape(self, two_report, small_two_ds):
        rep = two_report
        assert rep.mode == "two"
        assert rep.k == 2
        assert rep.n_samples == len(small_two_ds)
        assert set(rep.confusions) == {"x1", "y1", "x2", "y2"}
        for cm in rep.confusions.values():
            assert cm.labels == (1, 6)

    def test_headline_line(self, two_report):
        head = two_report.headline()
        assert head.startswith("mode=two k=2 ")
        for key in (
            "x1_accuracy",
            "y1_accuracy",
            "x2_accuracy",
            "y2_accuracy",
            "force1_r2",
            "force2_r2",
            "force_mse_shared_axis",
            "force_mse_disjoint",
        ):
            assert f"{key}=" in head
        for key in ("x1_accuracy", "y1_accuracy", "x2_accuracy", "y2_accuracy"):
            assert 0.0 <= two_report.pooled[key] <= 1.0

    def test_deterministic_report(self, small_two_ds, small_two_config, two_report):
        again = cross_validate_two(small_two_ds, k=2, config=small_two_config)
        assert again.to_json() == two_report.to_json()

    def test_fold_coverage_failure_is_attributed(self, small_two_ds, small_two_config):
        keep = []
        dropped = 0
        for s in small_two_ds:
            pair = (s.node1.node_id, s.node2.node_id)
            if pair == (1, 6) and dropped < 17:
                dropped += 1
                continue
            keep.append(s)
        assert dropped == 17
        thin = Dataset(tuple(keep))
        with pytest.raises(CoverageError, match=r"fold \d+:"):
            cross_validate_two(thin, k=2, config=small_two_config)

    def test_empty_rejected(self, two_ds, small_two_config):
        empty = Dataset(samples=(), meta=two_ds.meta)
        with pytest.raises(ValidationError):
            cross_validate_two(empty, k=2, config=small_two_config)

    def test_single_schema_rejected(self, small_single_ds, small_two_config):
        with pytest.raises(SchemaError):
            cross_validate_two(small_single_ds, k=2, config=small_two_config)


class TestReportFiles:
    def test_write_and_load_round_trip(self, two_report, tmp_path):
        paths = write_report_files(two_report, tmp_path)
        names = [p.name for p in paths]
        assert names == [
            "report.json",
            "cm_x1.csv",
            "cm_x2.csv",
            "cm_y1.csv",
            "cm_y2.csv",
        ]
        back = load_report(tmp_path / "report.json")
        assert back.to_json() == two_report.to_json()

    def test_heatmaps_emitted_on_request(self, two_report, tmp_path):
        paths = write_report_files(two_report, tmp_path, emit_heatmaps=True)
        names = {p.name for p in paths}
        assert "heatmap_x1.pgm" in names
        assert (tmp_path / "heatmap_y2.pgm").read_text().startswith("P2\n")

    def test_load_rejects_invalid_json(self, tmp_path):
        bad = tmp_path / "report.json"
        bad.write_text("{not json")
        with pytest.raises(SchemaError):
            load_report(bad)

    def test_load_rejects_missing_fields(self, tmp_path):
        bad = tmp_path / "report.json"
        bad.write_text(json.dumps({"mode": "single"}))
        with pytest.raises(SchemaError):
            load_report(bad)
