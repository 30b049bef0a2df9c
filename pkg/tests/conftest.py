"""Shared fixtures and the acceptance-criteria terminal summary."""

import time
from dataclasses import dataclass
from pathlib import Path

import pytest

from spusim.harness import ExperimentSpec, RobustnessReport, run_experiment
from spusim.model import build_synthetic_model
from spusim.pipeline import SpuConfig, lfsr_cycle_stats, spu_run
from spusim.sampler import RunConfig, run

ACCEPTANCE_TITLES = {
    1: "pipeline LUT golden vectors",
    2: "LFSR period and sample histogram",
    3: "ESS oracle suite",
    4: "R-hat decision table",
    5: "JSD properties",
    6: "dynamic-scaling JSD sweep",
    7: "inactive-percentage trend",
    8: "convergence-percentage trend",
    9: "optimization-mode goodness of fit",
    10: "byte-identical report rerun",
}

_acceptance_outcomes = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    tail = report.nodeid.split("::test_criterion_", 1)[1]
    num = int(tail.split("_", 1)[0])
    if report.when == "call":
        _acceptance_outcomes[num] = report.outcome
    elif report.when == "setup" and report.outcome != "passed":
        _acceptance_outcomes[num] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_acceptance_outcomes):
        outcome = _acceptance_outcomes[num]
        word = "PASS" if outcome == "passed" else outcome.upper()
        terminalreporter.write_line(
            f"criterion {num:2d}: {word}  ({ACCEPTANCE_TITLES[num]})"
        )


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile every jitted code path once, outside any timed test."""
    model, _ = build_synthetic_model("two-label-denoise", 8, seed=0)
    cfg = RunConfig(iterations=4, temperature=1.0, seed=1, collect_last=2)
    run(model, cfg)
    spu_run(model, SpuConfig(run=cfg))
    spu_run(model, SpuConfig(run=cfg, rng_kind="fp64_uniform"))
    spu_run(model, SpuConfig(run=cfg, backend="fp64"))
    lfsr_cycle_stats(1)


@dataclass
class ExperimentFixture:
    spec_dict: dict
    report: RobustnessReport
    out_dir: Path
    seconds: float

    def point(self, name: str) -> dict:
        return self.report.design_points[name]


ALL_POINTS = ["fp64", "spu", "p4a", "p6a", "p8a", "p4", "p6", "p8", "pd"]


def _denoise_spec(mode: str) -> dict:
    spec = {
        "schema_version": 1,
        "model": {
            "source": "synthetic",
            "kind": "two-label-denoise",
            "size": 32,
            "seed": 7,
        },
        "design_points": list(ALL_POINTS),
        "mode": mode,
        "chains": 10,
        "runs": 10,
        "base_seed": 0,
    }
    if mode == "sampling":
        spec["iterations"] = 2000
        spec["temperature"] = 1.0
    else:
        spec["iterations"] = 1000
        spec["t_start"] = 10.0
    return spec


def _run_fixture(tmp_path_factory, mode: str, label: str) -> ExperimentFixture:
    spec_dict = _denoise_spec(mode)
    out = tmp_path_factory.mktemp(label)
    start = time.perf_counter()
    report = run_experiment(ExperimentSpec.from_dict(spec_dict), out)
    return ExperimentFixture(spec_dict, report, out, time.perf_counter() - start)


@pytest.fixture(scope="session")
def sampling_experiment(tmp_path_factory) -> ExperimentFixture:
    """Sampling-mode design-space sweep shared by the trend criteria."""
    return _run_fixture(tmp_path_factory, "sampling", "sampling_exp")


@pytest.fixture(scope="session")
def optimization_experiment(tmp_path_factory) -> ExperimentFixture:
    """Annealing-mode sweep shared by the goodness-of-fit criteria."""
    return _run_fixture(tmp_path_factory, "optimization", "optimization_exp")
