"""Full-precision Gibbs sampler: the software baseline.

Runs raster-scan Gibbs sweeps over a :class:`~spusim.model.GridModel` at
double precision.  Two operating modes:

* ``sampling``: constant temperature, the chain explores the posterior;
* ``optimization``: simulated annealing with a geometric cooling schedule
  ``T_k = t_start * t_decay**k``.  When ``t_decay`` is not given it is
  chosen so the final sweep lands at ``DEFAULT_FINAL_TEMPERATURE``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import _engine
from .model import GridModel, LabelField, label_energies

__all__ = [
    "RunConfig",
    "SampleTrace",
    "run",
    "gibbs_probabilities_fp64",
    "mode_estimate",
    "DEFAULT_FINAL_TEMPERATURE",
]

DEFAULT_FINAL_TEMPERATURE = 0.1

_MODES = ("sampling", "optimization")


@dataclass(frozen=True)
class RunConfig:
    """Settings for one chain.

    ``collect_last`` is how many trailing sweeps to record; ``None`` keeps
    every sweep.  ``temperature`` applies in sampling mode, the
    ``t_start``/``t_decay`` pair in optimization mode.
    """

    mode: str = "sampling"
    iterations: int = 1000
    temperature: float = 1.0
    t_start: float = 10.0
    t_decay: float | None = None
    seed: int = 0
    collect_last: int | None = None

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}, got {self.mode!r}")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not (self.temperature > 0 and np.isfinite(self.temperature)):
            raise ValueError("temperature must be positive and finite")
        if not (self.t_start > 0 and np.isfinite(self.t_start)):
            raise ValueError("t_start must be positive and finite")
        if self.t_decay is not None and not 0.0 < self.t_decay < 1.0:
            raise ValueError("t_decay must lie in (0, 1)")
        if self.collect_last is not None and not 1 <= self.collect_last <= self.iterations:
            raise ValueError("collect_last must be in [1, iterations]")

    @property
    def resolved_collect_last(self) -> int:
        return self.iterations if self.collect_last is None else self.collect_last

    def temperature_schedule(self) -> np.ndarray:
        """Per-sweep temperatures, length ``iterations``."""
        n = self.iterations
        if self.mode == "sampling":
            return np.full(n, float(self.temperature))
        if n == 1:
            return np.array([float(self.t_start)])
        decay = self.t_decay
        if decay is None:
            decay = (DEFAULT_FINAL_TEMPERATURE / self.t_start) ** (1.0 / (n - 1))
        return self.t_start * decay ** np.arange(n, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class SampleTrace:
    """Recorded tail of a chain: (n_vars, n_samples) int16, variable-major.

    Column ``k`` is the full label vector after the corresponding sweep;
    the last column is the chain's final state.
    """

    samples: np.ndarray
    width: int
    height: int

    def __post_init__(self):
        arr = np.ascontiguousarray(self.samples, dtype=np.int16)
        if arr.ndim != 2 or arr.shape[0] != self.width * self.height:
            raise ValueError("samples must have shape (width*height, n_samples)")
        object.__setattr__(self, "samples", arr)

    @property
    def n_vars(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    def final_state(self) -> LabelField:
        return LabelField(self.samples[:, -1].copy(), self.width, self.height)


def gibbs_probabilities_fp64(
    model: GridModel, state: LabelField, var: int, temperature: float
) -> np.ndarray:
    """Full conditional over labels at ``var``: softmax of -E/T.

    Energies are shifted by their minimum before exponentiation, which
    changes nothing mathematically but keeps exp() in range.
    """
    if not temperature > 0:
        raise ValueError("temperature must be positive")
    energies = label_energies(model, state.labels, var)
    shifted = energies - energies.min()
    weights = np.exp(-shifted / temperature)
    return weights / weights.sum()


def run(model: GridModel, config: RunConfig) -> tuple[LabelField, SampleTrace]:
    """Run the full-precision sampler; returns (final state, trace)."""
    labels, trace = _engine.run_chain(
        model,
        backend=_engine.REFERENCE,
        temperatures=config.temperature_schedule(),
        seed=config.seed,
        collect_last=config.resolved_collect_last,
    )
    field = LabelField(labels, model.width, model.height)
    return field, SampleTrace(trace, model.width, model.height)


def mode_estimate(trace: SampleTrace) -> LabelField:
    """Per-variable most frequent label; ties go to the smallest label."""
    samples = trace.samples
    n_labels = int(samples.max()) + 1 if samples.size else 1
    counts = np.empty((samples.shape[0], n_labels), dtype=np.int64)
    for label in range(n_labels):
        counts[:, label] = (samples == label).sum(axis=1)
    return LabelField(counts.argmax(axis=1), trace.width, trace.height)


def anneal(model: GridModel, config: RunConfig) -> LabelField:
    """Convenience wrapper: optimization-mode run returning only the state."""
    cfg = config if config.mode == "optimization" else replace(config, mode="optimization")
    field, _ = run(model, cfg)
    return field
