"""Evaluation engine: config, input pairing, reports, determinism."""

import json

import numpy as np
import pytest

from voxeval import (
    DegradationSpec,
    EvalConfig,
    MetricReport,
    ThresholdGrid,
    emit_report,
    eval_metrics,
    from_gt,
    max_3d_box_acc,
    max_3d_box_acc_v2,
    max_box_acc_2d,
    pair_inputs,
    run_eval,
    sample_ap,
    f1_sweep,
    vxap,
)
from voxeval.datasets import Dataset, Sample, load_manifest, write_dataset
from voxeval.errors import ValidationError
from voxeval.formats.sev import save_sev
from voxeval.report import DEFAULT_METRICS, METRIC_IDS


def _blob(rng, dims=(8, 8, 8)):
    m = np.zeros(dims, np.uint8)
    x, y, z = (rng.integers(0, d - 3) for d in dims)
    m[x : x + 3, y : y + 3, z : z + 3] = 1
    return m


def _fixture(rng, n=5, alphas=(0.0, 0.2, 0.4, 0.6, 0.8)):
    masks = [_blob(rng) for _ in range(n)]
    sals = [
        from_gt(m, DegradationSpec(alpha=alphas[i % len(alphas)], seed=i)).astype(
            np.float32
        )
        for i, m in enumerate(masks)
    ]
    orders = [int(rng.integers(2)) for _ in range(n)]
    return sals, masks, orders


def _disk_dataset(tmp_path, rng, n=5):
    """A written pairs-style dataset plus matching saliency files."""
    sals, masks, orders = _fixture(rng, n)
    ds = Dataset("pairs-fixture", 0, ("a", "b"))
    for i, m in enumerate(masks):
        vol = m.copy()
        ds.samples.append(Sample(f"s{i}", i % 2, vol, m, order=orders[i]))
    ds.samples.append(
        Sample("neg", 0, _blob(rng), np.zeros((8, 8, 8), np.uint8), order=0)
    )
    manifest = write_dataset(ds, tmp_path / "data")
    sdir = tmp_path / "sal"
    sdir.mkdir()
    for i, s in enumerate(sals):
        save_sev(sdir / f"s{i}.sev", s)
    return manifest, sdir, (sals, masks, orders)


class TestEvalConfig:
    def test_defaults(self):
        c = EvalConfig()
        assert c.metrics == DEFAULT_METRICS
        assert "mc" not in c.metrics
        assert c.v1_delta == 0.5
        assert c.grid.values.size == 101

    def test_single_delta_becomes_the_v1_threshold(self):
        assert EvalConfig(delta=(0.3,)).v1_delta == 0.3
        assert EvalConfig(delta=(0.3, 0.7)).v1_delta == 0.5

    def test_validation(self):
        with pytest.raises(ValidationError):
            EvalConfig(metrics=("vxap", "nope"))
        with pytest.raises(ValidationError):
            EvalConfig(delta=())
        with pytest.raises(ValidationError):
            EvalConfig(delta=(0.0,))
        with pytest.raises(ValidationError):
            EvalConfig(delta=(1.2,))
        with pytest.raises(ValidationError):
            EvalConfig(slice_axis=3)
        with pytest.raises(ValidationError):
            EvalConfig(workers=0)
        with pytest.raises(ValidationError):
            EvalConfig(connectivity=18)
        with pytest.raises(ValidationError):
            EvalConfig(tau_grid="uniform:0")
        EvalConfig(metrics=())  # empty selection is allowed

    def test_from_mapping_parses_cli_strings(self):
        c = EvalConfig.from_mapping(
            {"metrics": "vxap,maxf1", "delta": "0.3,0.5,0.7", "workers": 4}
        )
        assert c.metrics == ("vxap", "maxf1")
        assert c.delta == (0.3, 0.5, 0.7)
        assert c.workers == 4
        c2 = EvalConfig.from_mapping({"metrics": ["mc"], "delta": [0.4]})
        assert c2.metrics == ("mc",) and c2.delta == (0.4,)

    def test_from_mapping_rejects_unknown_keys(self):
        with pytest.raises(ValidationError):
            EvalConfig.from_mapping({"metric": "vxap"})

    def test_echo_is_json_ready_and_versioned(self):
        import voxeval

        e = EvalConfig(delta=(0.4,)).echo()
        json.dumps(e)
        assert e["version"] == voxeval.__version__
        assert e["v1_delta"] == 0.4
        assert e["connectivity_kind"] == "full-26"


class TestPairInputs:
    def test_positives_pair_and_negatives_exclude(self, tmp_path):
        rng = np.random.default_rng(120)
        manifest_path, sdir, (sals, masks, orders) = _disk_dataset(tmp_path, rng)
        manifest = load_manifest(manifest_path)
        items, errors, exclusions = pair_inputs(manifest, sdir)
        assert [it.sample_id for it in items] == [f"s{i}" for i in range(5)]
        assert not errors
        assert [e["id"] for e in exclusions] == ["neg"]
        it = items[2]
        np.testing.assert_array_equal(it.load_saliency(), sals[2])
        np.testing.assert_array_equal(it.load_mask(), masks[2])
        assert it.order == orders[2]

    def test_missing_saliency_for_a_positive_is_an_error(self, tmp_path):
        rng = np.random.default_rng(121)
        manifest_path, sdir, _ = _disk_dataset(tmp_path, rng)
        (sdir / "s3.sev").unlink()
        items, errors, _ = pair_inputs(load_manifest(manifest_path), sdir)
        assert len(items) == 4
        assert [e["id"] for e in errors] == ["s3"]
        assert errors[0]["kind"] == "missing_saliency"


class TestRunEval:
    def _config(self, manifest, sdir, **kw):
        base = dict(
            manifest=str(manifest),
            saliency_dir=str(sdir),
            metrics=METRIC_IDS,
            tau_grid="uniform:21",
        )
        base.update(kw)
        return EvalConfig.from_mapping(base)

    def test_report_shape_and_exclusions(self, tmp_path):
        rng = np.random.default_rng(122)
        manifest, sdir, _ = _disk_dataset(tmp_path, rng)
        report = run_eval(self._config(manifest, sdir))
        assert report.dataset == "pairs-fixture"
        assert report.n_samples == 6 and report.n_evaluated == 5
        assert report.sample_ids == [f"s{i}" for i in range(5)]
        assert [e["id"] for e in report.exclusions] == ["neg"]
        assert not report.errors
        assert set(report.metrics) == set(METRIC_IDS)
        assert report.timing["total_seconds"] > 0
        assert set(report.timing["per_sample_seconds"]) == set(report.sample_ids)

    def test_worker_count_does_not_change_the_report(self, tmp_path):
        rng = np.random.default_rng(123)
        manifest, sdir, _ = _disk_dataset(tmp_path, rng, n=8)

        def normalized(workers):
            d = run_eval(self._config(manifest, sdir, workers=workers)).to_json_dict()
            d.pop("timing")
            d["config"]["workers"] = 0
            return json.loads(json.dumps(d))

        assert normalized(1) == normalized(8)

    def test_rerun_is_bit_identical(self, tmp_path):
        rng = np.random.default_rng(124)
        manifest, sdir, _ = _disk_dataset(tmp_path, rng)
        cfg = self._config(manifest, sdir)
        a = run_eval(cfg).to_json_dict()
        b = run_eval(cfg).to_json_dict()
        a.pop("timing"), b.pop("timing")
        assert json.dumps(a) == json.dumps(b)

    def test_values_match_the_library_routes(self, tmp_path):
        rng = np.random.default_rng(125)
        manifest, sdir, (sals, masks, orders) = _disk_dataset(tmp_path, rng, n=6)
        report = run_eval(self._config(manifest, sdir))
        pairs = [(s.astype(np.float64), m) for s, m in zip(sals, masks)]
        grid = ThresholdGrid.uniform(21)
        assert report.metrics["max3dboxacc"]["value"] == max_3d_box_acc(pairs, grid).value
        assert (
            report.metrics["max3dboxaccv2"]["value"]
            == max_3d_box_acc_v2(pairs, grid).value
        )
        assert report.metrics["vxap"]["value"] == vxap(pairs, grid)
        f1 = f1_sweep(pairs, grid)
        assert report.metrics["maxf1"]["value"] == f1.max_f1
        assert report.metrics["maxf1"]["prec_at_tau"] == f1.prec_at_tau
        assert report.metrics["maxf1"]["rec_at_tau"] == f1.rec_at_tau
        assert report.metrics["maxboxacc"]["value"] == max_box_acc_2d(pairs, grid).value

    def test_missing_file_records_error_and_still_aggregates(self, tmp_path):
        rng = np.random.default_rng(126)
        manifest, sdir, _ = _disk_dataset(tmp_path, rng)
        (sdir / "s1.sev").unlink()
        report = run_eval(self._config(manifest, sdir))
        assert [e["id"] for e in report.errors] == ["s1"]
        assert report.n_evaluated == 4
        assert "s1" not in report.sample_ids

    def test_strict_mode_raises_on_the_first_error(self, tmp_path):
        rng = np.random.default_rng(127)
        manifest, sdir, _ = _disk_dataset(tmp_path, rng)
        (sdir / "s1.sev").unlink()
        with pytest.raises(ValidationError, match="s1"):
            run_eval(self._config(manifest, sdir, strict=True))

    def test_corrupt_mask_file_is_a_per_sample_error(self, tmp_path):
        rng = np.random.default_rng(128)
        manifest, sdir, _ = _disk_dataset(tmp_path, rng)
        (tmp_path / "data" / "masks" / "s2.sev").write_bytes(b"garbage")
        report = run_eval(self._config(manifest, sdir))
        assert [e["kind"] for e in report.errors] == ["unreadable_mask"]
        assert report.n_evaluated == 4

    def test_undeclared_empty_mask_is_caught_at_load_time(self, tmp_path):
        rng = np.random.default_rng(129)
        manifest_path, sdir, _ = _disk_dataset(tmp_path, rng)
        doc = json.loads(manifest_path.read_text())
        for entry in doc["samples"]:
            if entry["id"] == "neg":
                entry["positive"] = True
        manifest_path.write_text(json.dumps(doc))
        save_sev(sdir / "neg.sev", np.zeros((8, 8, 8), np.float32))
        report = run_eval(self._config(manifest_path, sdir))
        assert {e["id"]: e["reason"] for e in report.exclusions} == {
            "neg": "empty ground-truth mask"
        }
        assert report.n_evaluated == 5

    def test_mc_requires_order_metadata(self, tmp_path):
        rng = np.random.default_rng(130)
        ds = Dataset("plain", 0, ("a", "b"))
        for i in range(3):
            m = _blob(rng)
            ds.samples.append(Sample(f"s{i}", 0, m, m))  # no order
        manifest = write_dataset(ds, tmp_path / "data")
        sdir = tmp_path / "sal"
        sdir.mkdir()
        for i in range(3):
            save_sev(sdir / f"s{i}.sev", np.ones((8, 8, 8), np.float32))
        with pytest.raises(ValidationError, match="order"):
            run_eval(self._config(manifest, sdir))
        report = run_eval(
            self._config(manifest, sdir, metrics="vxap")
        )  # fine without mc
        assert report.n_evaluated == 3

    def test_exact_grid_unions_distinct_positive_values(self, tmp_path):
        rng = np.random.default_rng(131)
        masks = [_blob(rng) for _ in range(2)]
        sals = []
        for vals, m in zip(([0.25, 1.0], [0.5, 1.0]), masks):
            s = np.zeros((8, 8, 8), np.float32)
            s[m == 1] = vals[1]
            s[0, 0, 0] = vals[0]
            sals.append(s)
        ds = Dataset("exact", 0, ("a", "b"))
        for i, m in enumerate(masks):
            ds.samples.append(Sample(f"s{i}", 0, m, m, order=0))
        manifest = write_dataset(ds, tmp_path / "data")
        sdir = tmp_path / "sal"
        sdir.mkdir()
        for i, s in enumerate(sals):
            save_sev(sdir / f"s{i}.sev", s)
        report = run_eval(
            self._config(manifest, sdir, metrics="max3dboxacc", tau_grid="exact")
        )
        assert report.metrics["max3dboxacc"]["taus"] == [0.25, 0.5, 1.0]

    def test_exact_grid_vxap_uses_per_sample_value_sets(self, tmp_path):
        rng = np.random.default_rng(132)
        manifest, sdir, (sals, masks, _) = _disk_dataset(tmp_path, rng, n=4)
        report = run_eval(
            self._config(manifest, sdir, metrics="vxap", tau_grid="exact")
        )
        expected = [
            sample_ap(s.astype(np.float64), m, ThresholdGrid.exact())
            for s, m in zip(sals, masks)
        ]
        assert report.metrics["vxap"]["per_sample"] == expected
        assert report.metrics["vxap"]["value"] == float(np.mean(expected))

    def test_pooled_ap_flag(self, tmp_path):
        rng = np.random.default_rng(133)
        manifest, sdir, (sals, masks, _) = _disk_dataset(tmp_path, rng, n=4)
        report = run_eval(
            self._config(manifest, sdir, metrics="vxap", pooled_ap=True)
        )
        entry = report.metrics["vxap"]
        assert entry["pooled"] is True and "per_sample" not in entry
        pairs = [(s.astype(np.float64), m) for s, m in zip(sals, masks)]
        assert entry["value"] == vxap(pairs, ThresholdGrid.uniform(21), pooled=True)

    def test_no_evaluable_samples_raises(self, tmp_path):
        rng = np.random.default_rng(134)
        manifest, sdir, _ = _disk_dataset(tmp_path, rng, n=5)
        for i in range(5):
            (sdir / f"s{i}.sev").unlink()
        with pytest.raises(ValidationError, match="no evaluable samples"):
            run_eval(self._config(manifest, sdir))


class TestReportObject:
    def _report(self, tmp_path, rng, **kw):
        manifest, sdir, _ = _disk_dataset(tmp_path, rng)
        cfg = EvalConfig.from_mapping(
            dict(
                manifest=str(manifest),
                saliency_dir=str(sdir),
                metrics=kw.pop("metrics", METRIC_IDS),
                tau_grid="uniform:21",
                **kw,
            )
        )
        return run_eval(cfg)

    def test_json_round_trip_is_exact(self, tmp_path):
        rng = np.random.default_rng(135)
        report = self._report(tmp_path, rng)
        blob = report.to_json()
        back = MetricReport.from_json(blob)
        assert back.to_json() == blob
        assert back.aggregates() == report.aggregates()

    def test_aggregates_recompute_from_per_sample(self, tmp_path):
        rng = np.random.default_rng(136)
        report = self._report(tmp_path, rng)
        for mid in ("max3dboxacc", "max3dboxaccv2", "maxboxacc", "maxboxaccv2",
                    "vxap", "maxf1", "mc"):
            entry = report.metrics[mid]
            assert entry["value"] == pytest.approx(
                float(np.mean(entry["per_sample"])), abs=1e-12
            )
        for mid in ("max3dboxacc", "max3dboxaccv2", "maxboxacc", "maxboxaccv2"):
            entry = report.metrics[mid]
            curve = np.asarray(entry["curve"])
            best = int(np.argmax(curve))
            assert entry["value"] == curve[best]
            assert entry["best_tau"] == entry["taus"][best]

    def test_csv_column_order_is_canonical(self, tmp_path):
        rng = np.random.default_rng(137)
        report = self._report(tmp_path, rng)
        lines = report.to_csv().decode().splitlines()
        assert lines[0] == (
            "Max3DBoxAcc,Max3DBoxAccV2,VxAP,MaxF1,PrecAtF1Tau,RecAtF1Tau,"
            "MaxBoxAcc,MaxBoxAccV2,MassConcentration"
        )
        values = [float(x) for x in lines[1].split(",")]
        assert values == list(report.aggregates().values())

    def test_csv_single_metric_single_column(self, tmp_path):
        rng = np.random.default_rng(138)
        report = self._report(tmp_path, rng, metrics="mc")
        lines = report.to_csv().decode().splitlines()
        assert lines[0] == "MassConcentration"
        assert len(lines) == 2

    def test_csv_empty_selection_is_header_only(self, tmp_path):
        rng = np.random.default_rng(139)
        report = self._report(tmp_path, rng, metrics=())
        assert report.to_csv() == b"\n"
        assert report.metrics == {}

    def test_emit_report_formats(self, tmp_path):
        rng = np.random.default_rng(140)
        report = self._report(tmp_path, rng, metrics="vxap")
        assert emit_report(report, "json") == report.to_json()
        assert emit_report(report, "csv") == report.to_csv()
        with pytest.raises(ValidationError):
            emit_report(report, "yaml")


class TestEvalMetrics:
    def test_matches_the_file_route_bit_for_bit(self, tmp_path):
        rng = np.random.default_rng(141)
        manifest, sdir, (sals, masks, orders) = _disk_dataset(tmp_path, rng, n=6)
        cfg = dict(metrics=",".join(METRIC_IDS), tau_grid="uniform:21")
        file_report = run_eval(
            EvalConfig.from_mapping(
                dict(cfg, manifest=str(manifest), saliency_dir=str(sdir))
            )
        )
        mem = eval_metrics(sals, masks, config=cfg, orders=orders)
        assert mem["metrics"] == json.loads(file_report.to_json())["metrics"]

    def test_default_ids_and_dataset_name(self):
        rng = np.random.default_rng(142)
        sals, masks, _ = _fixture(rng, n=2)
        out = eval_metrics(sals, masks, config={"metrics": "vxap"})
        assert out["dataset"] == "in-memory"
        assert out["sample_ids"] == ["00000", "00001"]

    def test_length_mismatches_rejected(self):
        rng = np.random.default_rng(143)
        sals, masks, orders = _fixture(rng, n=2)
        with pytest.raises(ValidationError):
            eval_metrics(sals, masks[:1])
        with pytest.raises(ValidationError):
            eval_metrics(sals, masks, orders=orders[:1])
        with pytest.raises(ValidationError):
            eval_metrics(sals, masks, ids=["a"])

    def test_accepts_eval_config_instance(self):
        rng = np.random.default_rng(144)
        sals, masks, _ = _fixture(rng, n=2)
        out = eval_metrics(
            sals, masks, config=EvalConfig(metrics=("vxap",), tau_grid="uniform:11")
        )
        assert out["config"]["tau_grid"] == "uniform:11"
