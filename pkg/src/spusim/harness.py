"""Design-space exploration harness.

Takes a JSON experiment spec, runs every requested design point with the
shared multi-run protocol (same per-run seeds everywhere), computes the
three metric pillars, and writes a deterministic report directory:

    report.json      full metrics report (canonical JSON, byte-stable)
    boxplot.csv      RMSE box summaries, one row per design point
    spec.json        the spec with all defaults resolved
    traces/          recorded post-burn-in traces, one file per run
    endstates/       final label map of run 0 as a PGM image
    metrics/         per-design-point ESS and convergence detail

Design points:

    fp64   full-precision reference sampler
    spu    the hardware pipeline (4-bit pow2 LUT, LFSR uniforms)
    pNa    N-bit LUT, pow2 weights, software uniforms (N in 4/6/8)
    pN     N-bit LUT, exact truncated weights, software uniforms
    pd     quantized 8-bit front end with fp64 sampling behind it

The fp64 baseline is always executed (and its traces stored) even when it
is not listed, because RMSE references and ESS comparisons need it.
"""

from __future__ import annotations

import json
import re
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import metrics as met
from .model import GridModel, LabelField, build_synthetic_model, build_stereo_model, load_pgm, save_pgm
from .pipeline import ConfigError, SpuConfig, check_feasible, spu_run
from .sampler import RunConfig, SampleTrace, run as reference_run

__all__ = [
    "SpecError",
    "ExperimentSpec",
    "DESIGN_POINTS",
    "design_point_config",
    "build_model",
    "run_experiment",
    "recompute_metrics",
    "run_jsd_sweep",
    "save_trace",
    "load_trace",
    "RobustnessReport",
]

SCHEMA_VERSION = 1

DESIGN_POINTS = ("fp64", "spu", "p4a", "p6a", "p8a", "p4", "p6", "p8", "pd")

TRACE_MAGIC = b"SPUTRACE"
TRACE_VERSION = 1


class SpecError(ValueError):
    """The experiment spec is malformed or unsupported."""


_SPEC_KEYS = {
    "schema_version",
    "model",
    "design_points",
    "mode",
    "iterations",
    "temperature",
    "t_start",
    "t_decay",
    "chains",
    "runs",
    "base_seed",
    "ess_window",
    "burn_in_fraction",
    "rhat_threshold",
}

_SYNTH_KEYS = {"source", "kind", "size", "seed", "alpha", "beta", "noise_rate", "label_count", "shift"}
_PGM_KEYS = {"source", "left", "right", "label_count", "alpha", "beta"}


@dataclass(frozen=True)
class ExperimentSpec:
    """A fully resolved experiment description."""

    model: dict
    design_points: tuple
    mode: str = "sampling"
    iterations: int = 2000
    temperature: float = 1.0
    t_start: float = 10.0
    t_decay: float | None = None
    chains: int = 10
    runs: int = 10
    base_seed: int = 0
    ess_window: int = 1000
    burn_in_fraction: float = 0.5
    rhat_threshold: float = 1.1
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        object.__setattr__(self, "design_points", tuple(self.design_points))
        object.__setattr__(self, "model", dict(self.model))

    @property
    def burn_in(self) -> int:
        return int(self.iterations * self.burn_in_fraction)

    @property
    def collected(self) -> int:
        """Samples retained per run after burn-in."""
        return self.iterations - self.burn_in

    @property
    def n_runs(self) -> int:
        return max(self.chains, self.runs)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentSpec":
        if not isinstance(raw, dict):
            raise SpecError("spec must be a JSON object")
        unknown = set(raw) - _SPEC_KEYS
        if unknown:
            raise SpecError(f"unknown spec keys: {sorted(unknown)}")
        version = raw.get("schema_version")
        if version != SCHEMA_VERSION:
            raise SpecError(
                f"unsupported schema_version {version!r}, expected {SCHEMA_VERSION}"
            )
        if "model" not in raw:
            raise SpecError("spec is missing 'model'")
        if "design_points" not in raw:
            raise SpecError("spec is missing 'design_points'")
        model = _validate_model_dict(raw["model"])
        points = raw["design_points"]
        if not isinstance(points, (list, tuple)) or not points:
            raise SpecError("design_points must be a nonempty list")
        for p in points:
            if p not in DESIGN_POINTS:
                raise SpecError(f"unknown design point {p!r} (choose from {DESIGN_POINTS})")
        if len(set(points)) != len(points):
            raise SpecError("design_points contains duplicates")
        spec = cls(
            model=model,
            design_points=tuple(points),
            mode=raw.get("mode", "sampling"),
            iterations=_as_int(raw.get("iterations", 2000), "iterations"),
            temperature=_as_float(raw.get("temperature", 1.0), "temperature"),
            t_start=_as_float(raw.get("t_start", 10.0), "t_start"),
            t_decay=None if raw.get("t_decay") is None else _as_float(raw["t_decay"], "t_decay"),
            chains=_as_int(raw.get("chains", 10), "chains"),
            runs=_as_int(raw.get("runs", 10), "runs"),
            base_seed=_as_int(raw.get("base_seed", 0), "base_seed"),
            ess_window=_as_int(raw.get("ess_window", 1000), "ess_window"),
            burn_in_fraction=_as_float(raw.get("burn_in_fraction", 0.5), "burn_in_fraction"),
            rhat_threshold=_as_float(raw.get("rhat_threshold", 1.1), "rhat_threshold"),
        )
        spec.validate()
        return spec

    def validate(self) -> None:
        if self.mode not in ("sampling", "optimization"):
            raise SpecError(f"mode must be 'sampling' or 'optimization', got {self.mode!r}")
        if self.iterations < 4:
            raise SpecError("iterations must be >= 4")
        if self.chains < 2:
            raise SpecError("chains must be >= 2 (convergence needs parallel chains)")
        if self.runs < 1:
            raise SpecError("runs must be >= 1")
        if not 0.0 <= self.burn_in_fraction < 1.0:
            raise SpecError("burn_in_fraction must lie in [0, 1)")
        if self.collected < 2:
            raise SpecError("burn-in leaves fewer than 2 retained samples")
        if self.ess_window < 2:
            raise SpecError("ess_window must be >= 2")
        if not self.rhat_threshold > 1.0:
            raise SpecError("rhat_threshold must exceed 1")
        if not self.temperature > 0:
            raise SpecError("temperature must be positive")
        if not self.t_start > 0:
            raise SpecError("t_start must be positive")
        if self.t_decay is not None and not 0.0 < self.t_decay < 1.0:
            raise SpecError("t_decay must lie in (0, 1)")
        if self.base_seed < 0:
            raise SpecError("base_seed must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "model": dict(self.model),
            "design_points": list(self.design_points),
            "mode": self.mode,
            "iterations": self.iterations,
            "temperature": self.temperature,
            "t_start": self.t_start,
            "t_decay": self.t_decay,
            "chains": self.chains,
            "runs": self.runs,
            "base_seed": self.base_seed,
            "ess_window": self.ess_window,
            "burn_in_fraction": self.burn_in_fraction,
            "rhat_threshold": self.rhat_threshold,
        }

    def run_config(self, seed: int) -> RunConfig:
        try:
            return RunConfig(
                mode=self.mode,
                iterations=self.iterations,
                temperature=self.temperature,
                t_start=self.t_start,
                t_decay=self.t_decay,
                seed=seed,
                collect_last=self.collected,
            )
        except ValueError as exc:
            raise SpecError(str(exc)) from exc


def _as_int(value, name) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SpecError(f"{name} must be an integer, got {value!r}")
    return value


def _as_float(value, name) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecError(f"{name} must be a number, got {value!r}")
    return float(value)


def _validate_model_dict(raw) -> dict:
    if not isinstance(raw, dict):
        raise SpecError("model must be a JSON object")
    source = raw.get("source")
    if source == "synthetic":
        unknown = set(raw) - _SYNTH_KEYS
        if unknown:
            raise SpecError(f"unknown model keys: {sorted(unknown)}")
        kind = raw.get("kind")
        if kind not in ("two-label-denoise", "shifted-stereo"):
            raise SpecError(f"unknown synthetic kind {kind!r}")
        resolved = {
            "source": "synthetic",
            "kind": kind,
            "size": raw.get("size", 32),
            "seed": _as_int(raw.get("seed", 0), "model.seed"),
            "alpha": _as_float(raw.get("alpha", 1.0), "model.alpha"),
            "beta": _as_float(raw.get("beta", 1.0), "model.beta"),
        }
        size = resolved["size"]
        if isinstance(size, list):
            if len(size) != 2 or not all(isinstance(s, int) for s in size):
                raise SpecError("model.size must be an int or [height, width]")
        elif not isinstance(size, int):
            raise SpecError("model.size must be an int or [height, width]")
        if kind == "two-label-denoise":
            resolved["noise_rate"] = _as_float(raw.get("noise_rate", 0.1), "model.noise_rate")
        else:
            resolved["label_count"] = _as_int(raw.get("label_count", 4), "model.label_count")
            resolved["shift"] = _as_int(raw.get("shift", 2), "model.shift")
        return resolved
    if source == "pgm":
        unknown = set(raw) - _PGM_KEYS
        if unknown:
            raise SpecError(f"unknown model keys: {sorted(unknown)}")
        for key in ("left", "right"):
            if not isinstance(raw.get(key), str):
                raise SpecError(f"model.{key} must be a file path")
        return {
            "source": "pgm",
            "left": raw["left"],
            "right": raw["right"],
            "label_count": _as_int(raw.get("label_count", 16), "model.label_count"),
            "alpha": _as_float(raw.get("alpha", 1.0), "model.alpha"),
            "beta": _as_float(raw.get("beta", 2.0), "model.beta"),
        }
    raise SpecError(f"model.source must be 'synthetic' or 'pgm', got {source!r}")


def build_model(spec: ExperimentSpec):
    """Instantiate (model, ground truth or None) from the spec's model block."""
    m = spec.model
    if m["source"] == "synthetic":
        size = m["size"]
        if isinstance(size, list):
            size = tuple(size)
        kwargs = {}
        if m["kind"] == "two-label-denoise":
            kwargs["noise_rate"] = m["noise_rate"]
        else:
            kwargs["label_count"] = m["label_count"]
            kwargs["shift"] = m["shift"]
        try:
            return build_synthetic_model(
                m["kind"], size, m["seed"], alpha=m["alpha"], beta=m["beta"], **kwargs
            )
        except ValueError as exc:
            raise SpecError(str(exc)) from exc
    left = load_pgm(m["left"])
    right = load_pgm(m["right"])
    try:
        model = build_stereo_model(
            left, right, m["label_count"], alpha=m["alpha"], beta=m["beta"]
        )
    except ValueError as exc:
        raise SpecError(str(exc)) from exc
    return model, None


_PN_PATTERN = re.compile(r"p([468])(a?)\Z")


def design_point_config(name: str, run_cfg: RunConfig) -> SpuConfig | None:
    """Pipeline configuration for a design point; None means the reference."""
    if name == "fp64":
        return None
    if name == "spu":
        return SpuConfig(run=run_cfg, p_bits=4, pow2_approx=True, rng_kind="lfsr19")
    if name == "pd":
        return SpuConfig(run=run_cfg, backend="fp64")
    m = _PN_PATTERN.match(name)
    if m:
        return SpuConfig(
            run=run_cfg,
            p_bits=int(m.group(1)),
            pow2_approx=bool(m.group(2)),
            rng_kind="fp64_uniform",
        )
    raise SpecError(f"unknown design point {name!r}")


# ---------------------------------------------------------------------------
# Trace files
# ---------------------------------------------------------------------------

def save_trace(path, trace: SampleTrace) -> None:
    """Write a trace file: 16-byte header, then zlib-compressed int16 data.

    Header layout (little-endian): 8-byte magic ``SPUTRACE``, then u16
    version, width, height, n_samples.  The payload is the variable-major
    sample matrix.
    """
    if trace.n_samples > 0xFFFF:
        raise ValueError("trace too long for the file format")
    header = TRACE_MAGIC + struct.pack(
        "<HHHH", TRACE_VERSION, trace.width, trace.height, trace.n_samples
    )
    payload = zlib.compress(
        np.ascontiguousarray(trace.samples, dtype="<i2").tobytes(), 6
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def load_trace(path) -> SampleTrace:
    blob = Path(path).read_bytes()
    if len(blob) < 16 or blob[:8] != TRACE_MAGIC:
        raise ValueError(f"{path}: not a trace file")
    version, width, height, n_samples = struct.unpack("<HHHH", blob[8:16])
    if version != TRACE_VERSION:
        raise ValueError(f"{path}: unsupported trace version {version}")
    raw = zlib.decompress(blob[16:])
    expected = width * height * n_samples * 2
    if len(raw) != expected:
        raise ValueError(f"{path}: payload length {len(raw)} != expected {expected}")
    samples = np.frombuffer(raw, dtype="<i2").reshape(width * height, n_samples)
    return SampleTrace(samples.astype(np.int16), width, height)


# ---------------------------------------------------------------------------
# Experiment execution
# ---------------------------------------------------------------------------

def _check_point_feasible(model: GridModel, spec: ExperimentSpec, point: str) -> None:
    """Raise ConfigError early when a design point cannot run on this model."""
    sp = design_point_config(point, spec.run_config(spec.base_seed))
    if sp is not None:
        check_feasible(model, sp)


def _execute_runs(model: GridModel, spec: ExperimentSpec, point: str) -> list[SampleTrace]:
    traces = []
    for i in range(spec.n_runs):
        cfg = spec.run_config(spec.base_seed + i)
        sp = design_point_config(point, cfg)
        if sp is None:
            _, trace = reference_run(model, cfg)
        else:
            _, trace = spu_run(model, sp)
        traces.append(trace)
    return traces


def run_experiment(spec: ExperimentSpec, out_dir) -> "RobustnessReport":
    """Run all design points of a spec and write the report directory."""
    model, truth = build_model(spec)
    out = Path(out_dir)
    (out / "traces").mkdir(parents=True, exist_ok=True)
    (out / "endstates").mkdir(exist_ok=True)
    (out / "metrics").mkdir(exist_ok=True)

    to_execute = list(spec.design_points)
    if "fp64" not in to_execute:
        to_execute.insert(0, "fp64")
    run_data: dict[str, list[SampleTrace]] = {}
    errors: dict[str, str] = {}
    for point in to_execute:
        try:
            _check_point_feasible(model, spec, point)
            run_data[point] = _execute_runs(model, spec, point)
        except ConfigError as exc:
            if point == "fp64":
                raise
            errors[point] = str(exc)

    for point, traces in run_data.items():
        tdir = out / "traces" / point
        tdir.mkdir(parents=True, exist_ok=True)
        for i, trace in enumerate(traces):
            save_trace(tdir / f"run_{i:03d}.trace", trace)

    report = _report_from_traces(spec, model, truth, run_data, errors)
    _write_outputs(out, spec, model, report, run_data)
    return report


def recompute_metrics(experiment_dir) -> "RobustnessReport":
    """Rebuild the metrics report from stored traces alone.

    Reads ``spec.json`` and the ``traces/`` directory written by
    :func:`run_experiment` and recomputes every metric; the result is
    byte-identical to the original ``report.json``.
    """
    exp = Path(experiment_dir)
    spec_path = exp / "spec.json"
    if not spec_path.is_file():
        raise SpecError(f"{spec_path} not found (not an experiment directory?)")
    spec = ExperimentSpec.from_dict(json.loads(spec_path.read_text()))
    model, truth = build_model(spec)
    run_data: dict[str, list[SampleTrace]] = {}
    errors: dict[str, str] = {}
    for point in spec.design_points + ("fp64",):
        if point in run_data:
            continue
        tdir = exp / "traces" / point
        if not tdir.is_dir():
            # the original run rejected this configuration; reproduce the message
            try:
                _check_point_feasible(model, spec, point)
            except ConfigError as exc:
                errors[point] = str(exc)
                continue
            raise SpecError(f"traces for design point {point!r} are missing")
        run_data[point] = [
            load_trace(p) for p in sorted(tdir.glob("run_*.trace"))
        ]
        if len(run_data[point]) != spec.n_runs:
            raise SpecError(
                f"expected {spec.n_runs} traces for {point!r}, found {len(run_data[point])}"
            )
    return _report_from_traces(spec, model, truth, run_data, errors)


# ---------------------------------------------------------------------------
# Metrics assembly
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RobustnessReport:
    """The full metrics report; ``data`` serializes to canonical JSON."""

    data: dict

    def to_json(self) -> str:
        return _canonical_json(self.data)

    @property
    def design_points(self) -> dict:
        return self.data["design_points"]

    def boxplot_rows(self) -> list[str]:
        rows = ["design_point,dataset,min,q25,median,q75,max,n_outliers"]
        dataset = self.data["model"]["name"]
        for point, entry in self.data["design_points"].items():
            if entry["status"] != "ok":
                continue
            s = entry["rmse"]
            rows.append(
                f"{point},{dataset},{s['min']!r},{s['q25']!r},{s['median']!r},"
                f"{s['q75']!r},{s['max']!r},{s['n_outliers']}"
            )
        return rows


def _distribution_summary(values: np.ndarray) -> dict:
    """Five-number summary plus an outlier count under the 1.5*IQR rule."""
    v = np.asarray(values, dtype=np.float64)
    q25, median, q75 = (float(q) for q in np.percentile(v, [25, 50, 75]))
    iqr = q75 - q25
    lo = q25 - 1.5 * iqr
    hi = q75 + 1.5 * iqr
    outliers = (v < lo) | (v > hi)
    return {
        "values": [float(x) for x in v],
        "min": float(v.min()),
        "q25": q25,
        "median": median,
        "q75": q75,
        "max": float(v.max()),
        "n_outliers": int(outliers.sum()),
    }


def _report_from_traces(
    spec: ExperimentSpec,
    model: GridModel,
    truth: LabelField | None,
    run_data: dict[str, list[SampleTrace]],
    errors: dict[str, str],
) -> RobustnessReport:
    window = min(spec.ess_window, spec.collected)
    if "fp64" not in run_data:
        raise SpecError("fp64 baseline traces are required")
    fp64_traces = run_data["fp64"]

    def ess_per_run(traces):
        return [
            met.ess_all(tr.samples[:, -window:]) for tr in traces[: spec.chains]
        ]

    def end_fields(traces):
        return [tr.final_state() for tr in traces[: spec.runs]]

    fp64_ess = ess_per_run(fp64_traces)
    reference = met.reference_mode(end_fields(fp64_traces))

    points_report = {}
    detail = {}
    for point in spec.design_points:
        if point in errors:
            points_report[point] = {"status": "error", "error": errors[point]}
            continue
        traces = run_data[point]
        ess_runs = ess_per_run(traces)
        chain_stack = np.stack(
            [tr.samples for tr in traces[: spec.chains]]
        )  # (chains, n_vars, collected)
        convergence = met.convergence_percentage(chain_stack, spec.rhat_threshold)
        ends = end_fields(traces)
        rmse_values = np.array([met.rmse(f, reference) for f in ends])
        vs_fp64 = [
            met.mean_active_ess(sw, hw) for sw, hw in zip(fp64_ess, ess_runs)
        ]
        sw_means = [v.software for v in vs_fp64 if v.software is not None]
        hw_means = [v.hardware for v in vs_fp64 if v.hardware is not None]
        overall = [r.mean_overall_ess for r in ess_runs]
        overall = [x for x in overall if not np.isnan(x)]
        entry = {
            "status": "ok",
            "ess": {
                "mean_overall": float(np.mean(overall)) if overall else None,
                "inactive_percentage": float(
                    np.mean([r.inactive_percentage for r in ess_runs])
                ),
                "over_unity_count": int(sum(int(r.over_unity.sum()) for r in ess_runs)),
                "window": window,
                "per_run": [
                    {
                        "mean_overall": _none_if_nan(r.mean_overall_ess),
                        "inactive_percentage": r.inactive_percentage,
                        "over_unity_count": int(r.over_unity.sum()),
                    }
                    for r in ess_runs
                ],
            },
            "ess_vs_fp64": {
                "software_mean": float(np.mean(sw_means)) if sw_means else None,
                "hardware_mean": float(np.mean(hw_means)) if hw_means else None,
                "per_run": [v.to_json_dict() for v in vs_fp64],
            },
            "convergence": {
                "percentage": convergence.percentage,
                "n_chains": convergence.n_chains,
                "n_samples": convergence.n_samples,
                "threshold": convergence.threshold,
                "branch_counts": convergence.branch_counts(),
            },
            "rmse": _distribution_summary(rmse_values),
        }
        if truth is not None:
            gt_rmse = np.array([met.rmse(f, truth) for f in ends])
            gt_err = np.array(
                [float(np.mean(f.labels != truth.labels)) for f in ends]
            )
            entry["ground_truth"] = {
                "rmse": _distribution_summary(gt_rmse),
                "error_rate": _distribution_summary(gt_err),
            }
        else:
            entry["ground_truth"] = None
        points_report[point] = entry
        detail[point] = (ess_runs, convergence)

    data = {
        "schema_version": SCHEMA_VERSION,
        "model": {
            "name": model.name,
            "width": model.width,
            "height": model.height,
            "label_count": model.label_count,
            "alpha": model.alpha,
            "beta": model.beta,
            "has_ground_truth": truth is not None,
        },
        "protocol": {
            "mode": spec.mode,
            "iterations": spec.iterations,
            "burn_in": spec.burn_in,
            "collected": spec.collected,
            "ess_window": window,
            "chains": spec.chains,
            "runs": spec.runs,
            "base_seed": spec.base_seed,
            "rhat_threshold": spec.rhat_threshold,
        },
        "spec": spec.to_dict(),
        "design_points": points_report,
        "files": {
            "boxplot": "boxplot.csv",
            "spec": "spec.json",
            "traces": "traces",
            "endstates": "endstates",
            "metrics": "metrics",
        },
    }
    report = RobustnessReport(data=data)
    object.__setattr__(report, "_detail", detail)
    return report


def _none_if_nan(v: float):
    return None if np.isnan(v) else float(v)


def _write_outputs(
    out: Path,
    spec: ExperimentSpec,
    model: GridModel,
    report: RobustnessReport,
    run_data: dict[str, list[SampleTrace]],
) -> None:
    (out / "spec.json").write_text(_canonical_json(spec.to_dict()))
    (out / "report.json").write_text(report.to_json())
    (out / "boxplot.csv").write_text("\n".join(report.boxplot_rows()) + "\n")
    detail = getattr(report, "_detail", {})
    for point, (ess_runs, convergence) in detail.items():
        base = out / "metrics"
        ess_doc = {"per_run": [r.to_json_dict() for r in ess_runs]}
        (base / f"{point}.ess.json").write_text(_canonical_json(ess_doc))
        (base / f"{point}.convergence.json").write_text(
            _canonical_json(convergence.to_json_dict())
        )
    for point, traces in run_data.items():
        final = traces[0].final_state()
        save_pgm(out / "endstates" / f"{point}.pgm", final.grid().astype(np.uint8))


def _canonical_json(obj) -> str:
    return json.dumps(_to_builtin(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _to_builtin(obj):
    if isinstance(obj, dict):
        return {str(k): _to_builtin(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_builtin(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return None if np.isnan(f) else f
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# ---------------------------------------------------------------------------
# JSD sweep driver
# ---------------------------------------------------------------------------

def run_jsd_sweep(
    out_dir,
    pipeline_a: met.SweepPipeline,
    pipeline_b: met.SweepPipeline | None = None,
    temperatures=(1.0, 10.0),
) -> dict:
    """Write per-temperature JSD sweep CSVs plus a summary JSON.

    Returns the summary dict.  CSV files are named
    ``jsd_<A>_vs_<B>_T<temperature>.csv`` with columns e0, e1, jsd.
    """
    if pipeline_b is None:
        pipeline_b = met.SweepPipeline(kind="fp64")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grids = met.jsd_sweep(pipeline_a, pipeline_b, temperatures)
    entries = []
    for grid in grids:
        fname = f"jsd_{grid.pipeline_a}_vs_{grid.pipeline_b}_T{grid.temperature:g}.csv"
        grid.to_csv(out / fname)
        entries.append({"file": fname, **grid.summary()})
    summary = {"schema_version": SCHEMA_VERSION, "grids": entries}
    (out / "jsd_summary.json").write_text(_canonical_json(summary))
    return summary
