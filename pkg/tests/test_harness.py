import json

import numpy as np
import pytest

from spusim.harness import (
    DESIGN_POINTS,
    ExperimentSpec,
    SpecError,
    design_point_config,
    load_trace,
    recompute_metrics,
    run_experiment,
    run_jsd_sweep,
    save_trace,
)
from spusim.metrics import SweepPipeline
from spusim.sampler import RunConfig, SampleTrace


def small_spec(**overrides):
    base = {
        "schema_version": 1,
        "model": {"source": "synthetic", "kind": "two-label-denoise",
                  "size": 12, "seed": 3},
        "design_points": ["fp64", "spu", "pd"],
        "mode": "sampling",
        "iterations": 60,
        "temperature": 1.0,
        "chains": 2,
        "runs": 3,
        "base_seed": 50,
        "ess_window": 20,
    }
    base.update(overrides)
    return base


class TestSpecValidation:
    def test_accepts_minimal(self):
        spec = ExperimentSpec.from_dict(small_spec())
        assert spec.design_points == ("fp64", "spu", "pd")
        assert spec.burn_in == 30
        assert spec.collected == 30
        assert spec.n_runs == 3

    def test_rejects_wrong_schema_version(self):
        with pytest.raises(SpecError, match="schema_version"):
            ExperimentSpec.from_dict(small_spec(schema_version=2))

    def test_rejects_unknown_keys(self):
        with pytest.raises(SpecError, match="unknown"):
            ExperimentSpec.from_dict(small_spec(bogus=1))

    def test_rejects_unknown_design_point(self):
        with pytest.raises(SpecError, match="design point"):
            ExperimentSpec.from_dict(small_spec(design_points=["fp64", "p5"]))

    def test_rejects_single_chain(self):
        with pytest.raises(SpecError, match="chains"):
            ExperimentSpec.from_dict(small_spec(chains=1))

    def test_rejects_bad_model(self):
        with pytest.raises(SpecError, match="kind"):
            ExperimentSpec.from_dict(small_spec(
                model={"source": "synthetic", "kind": "other", "size": 12, "seed": 0}))
        with pytest.raises(SpecError, match="source"):
            ExperimentSpec.from_dict(small_spec(model={"source": "csv"}))

    def test_rejects_burn_in_eating_everything(self):
        with pytest.raises(SpecError):
            ExperimentSpec.from_dict(small_spec(burn_in_fraction=0.99))

    def test_every_design_point_maps(self):
        cfg = RunConfig(iterations=10)
        seen = set()
        for name in DESIGN_POINTS:
            sp = design_point_config(name, cfg)
            if sp is None:
                seen.add("reference")
            else:
                seen.add((sp.backend, sp.p_bits, sp.pow2_approx, sp.rng_kind))
        assert len(seen) == len(DESIGN_POINTS)  # all distinct

    def test_spu_equals_p4a_plus_lfsr(self):
        cfg = RunConfig(iterations=10)
        spu = design_point_config("spu", cfg)
        p4a = design_point_config("p4a", cfg)
        assert (spu.p_bits, spu.pow2_approx) == (p4a.p_bits, p4a.pow2_approx) == (4, True)
        assert spu.rng_kind == "lfsr19"
        assert p4a.rng_kind == "fp64_uniform"


class TestTraceFiles:
    def test_round_trip(self, tmp_path):
        samples = np.random.default_rng(0).integers(0, 4, (24, 9)).astype(np.int16)
        trace = SampleTrace(samples, 6, 4)
        path = tmp_path / "t.trace"
        save_trace(path, trace)
        again = load_trace(path)
        assert np.array_equal(again.samples, samples)
        assert (again.width, again.height) == (6, 4)

    def test_rejects_garbage(self, tmp_path):
        path = tmp_path / "bad.trace"
        path.write_bytes(b"NOTATRACE because")
        with pytest.raises(ValueError, match="not a trace"):
            load_trace(path)

    def test_deterministic_bytes(self, tmp_path):
        samples = np.zeros((10, 5), dtype=np.int16)
        trace = SampleTrace(samples, 5, 2)
        save_trace(tmp_path / "a", trace)
        save_trace(tmp_path / "b", trace)
        assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()


@pytest.fixture(scope="module")
def experiment(tmp_path_factory):
    out = tmp_path_factory.mktemp("exp")
    spec = ExperimentSpec.from_dict(small_spec())
    report = run_experiment(spec, out)
    return out, report


class TestRunExperiment:
    def test_output_files_exist(self, experiment):
        out, _ = experiment
        for name in ("report.json", "boxplot.csv", "spec.json"):
            assert (out / name).is_file()
        assert (out / "traces" / "fp64" / "run_000.trace").is_file()
        assert (out / "endstates" / "spu.pgm").is_file()
        assert (out / "metrics" / "spu.ess.json").is_file()
        assert (out / "metrics" / "spu.convergence.json").is_file()

    def test_report_structure(self, experiment):
        _, report = experiment
        data = report.data
        assert data["schema_version"] == 1
        assert set(data["design_points"]) == {"fp64", "spu", "pd"}
        entry = data["design_points"]["spu"]
        assert entry["status"] == "ok"
        assert 0 <= entry["convergence"]["percentage"] <= 100
        assert len(entry["rmse"]["values"]) == 3
        assert len(entry["ess"]["per_run"]) == 2  # chains, not runs
        assert entry["ground_truth"] is not None

    def test_pd_matches_fp64_metrics(self, experiment):
        _, report = experiment
        fp = report.design_points["fp64"]
        pd = report.design_points["pd"]
        assert pd["rmse"]["values"] == fp["rmse"]["values"]
        assert pd["convergence"]["percentage"] == fp["convergence"]["percentage"]

    def test_rerun_is_byte_identical(self, experiment, tmp_path):
        out, _ = experiment
        spec = ExperimentSpec.from_dict(small_spec())
        run_experiment(spec, tmp_path / "again")
        assert (tmp_path / "again" / "report.json").read_bytes() == \
            (out / "report.json").read_bytes()

    def test_recompute_from_traces_identical(self, experiment):
        out, _ = experiment
        recomputed = recompute_metrics(out)
        assert recomputed.to_json() == (out / "report.json").read_text()

    def test_boxplot_columns(self, experiment):
        out, _ = experiment
        lines = (out / "boxplot.csv").read_text().splitlines()
        assert lines[0] == "design_point,dataset,min,q25,median,q75,max,n_outliers"
        assert len(lines) == 4  # header + three design points
        first = lines[1].split(",")
        assert first[0] == "fp64"
        assert float(first[2]) <= float(first[3]) <= float(first[4])

    def test_base_seed_changes_traces_not_structure(self, experiment, tmp_path):
        out, report = experiment
        spec = ExperimentSpec.from_dict(small_spec(base_seed=999))
        other = run_experiment(spec, tmp_path / "reseeded")
        a = report.design_points["fp64"]["rmse"]["values"]
        b = other.design_points["fp64"]["rmse"]["values"]
        assert a != b
        assert set(other.data) == set(report.data)
        assert other.data["model"] == report.data["model"]

    def test_infeasible_point_reported_not_fatal(self, tmp_path):
        spec = ExperimentSpec.from_dict(small_spec(
            model={"source": "synthetic", "kind": "shifted-stereo",
                   "size": 40, "seed": 0, "label_count": 40, "shift": 2},
            design_points=["fp64", "p8", "pd"],
            iterations=20,
            ess_window=8,
        ))
        report = run_experiment(spec, tmp_path / "mixed")
        assert report.design_points["p8"]["status"] == "error"
        assert "4096" in report.design_points["p8"]["error"]
        assert report.design_points["pd"]["status"] == "ok"
        lines = (tmp_path / "mixed" / "boxplot.csv").read_text().splitlines()
        assert len(lines) == 3  # header + fp64 + pd only

    def test_implicit_fp64_baseline(self, tmp_path):
        # spu alone still gets an fp64 reference for RMSE and trace storage
        spec = ExperimentSpec.from_dict(small_spec(design_points=["spu"]))
        report = run_experiment(spec, tmp_path / "only_spu")
        assert list(report.design_points) == ["spu"]
        assert (tmp_path / "only_spu" / "traces" / "fp64").is_dir()
        recomputed = recompute_metrics(tmp_path / "only_spu")
        assert recomputed.to_json() == report.to_json()


class TestJsdSweepDriver:
    def test_writes_csv_and_summary(self, tmp_path):
        summary = run_jsd_sweep(
            tmp_path, SweepPipeline(kind="quantized", p_bits=4),
            temperatures=(1.0,))
        (entry,) = summary["grids"]
        assert (tmp_path / entry["file"]).is_file()
        assert entry["temperature"] == 1.0
        parsed = json.loads((tmp_path / "jsd_summary.json").read_text())
        assert parsed == summary
