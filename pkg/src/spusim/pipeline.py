"""Bit-exact model of the quantized sampling pipeline.

The hardware datapath, stage by stage:

1. per-label energies are quantized to 8 bits (round to nearest, saturate);
2. dynamic scaling subtracts the minimum energy, saturating at 255;
3. a 256-entry LUT maps each scaled energy to an integer weight of
   ``p_bits`` bits: ``floor((2**p_bits - 1) * exp(-E_s / T))``, optionally
   rounded down to a power of two (weights below 1 truncate to 0);
4. an inverse-transform sampler picks a label from the integer weights,
   driven either by a 19-bit LFSR (12-bit samples) or by the software
   uniform generator.

When every weight truncates to zero the sampler falls back to the minimum
scaled energy (smallest label on ties).  ``backend="fp64"`` swaps stages
3 and 4 for a double-precision softmax over the scaled energies, keeping
the quantized front end; that hybrid isolates the effect of stages 1 and 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _engine
from .model import GridModel, LabelField
from .sampler import RunConfig, SampleTrace

__all__ = [
    "SpuConfig",
    "ConfigError",
    "ProbLut",
    "build_lut",
    "dynamic_scale",
    "sample_discrete",
    "Lfsr19",
    "lfsr_next",
    "lfsr_cycle_stats",
    "spu_run",
    "MAX_WEIGHT_SUM",
    "P_BITS_CHOICES",
]

P_BITS_CHOICES = (4, 6, 8)
RNG_KINDS = ("lfsr19", "fp64_uniform")
BACKENDS = ("quantized", "fp64")

# The accumulated weight sum must fit the sampler's 12-bit comparator, so a
# configuration is only feasible when label_count * (2**p_bits - 1) <= 4096.
MAX_WEIGHT_SUM = 4096


class ConfigError(ValueError):
    """An infeasible pipeline configuration."""


@dataclass(frozen=True)
class SpuConfig:
    """Pipeline settings wrapped around a base :class:`RunConfig`."""

    run: RunConfig = field(default_factory=RunConfig)
    p_bits: int = 4
    pow2_approx: bool = True
    rng_kind: str = "lfsr19"
    backend: str = "quantized"

    def __post_init__(self):
        if self.p_bits not in P_BITS_CHOICES:
            raise ConfigError(f"p_bits must be one of {P_BITS_CHOICES}")
        if self.rng_kind not in RNG_KINDS:
            raise ConfigError(f"rng_kind must be one of {RNG_KINDS}")
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {BACKENDS}")


# ---------------------------------------------------------------------------
# Pipeline stages as standalone operations
# ---------------------------------------------------------------------------

def dynamic_scale(energies: np.ndarray) -> np.ndarray:
    """Subtract the minimum energy, saturating the result at 255.

    Input and output are 8-bit unsigned energies; at least one output is
    always 0, so the smallest energy keeps maximum probability regardless
    of the common offset.
    """
    arr = np.asarray(energies)
    if arr.size == 0:
        raise ValueError("energies must be nonempty")
    if np.issubdtype(arr.dtype, np.floating):
        raise ValueError("dynamic_scale expects integer energies")
    if arr.min() < 0 or arr.max() > 255:
        raise ValueError("energies must lie in [0, 255]")
    scaled = arr.astype(np.int64) - int(arr.min())
    return np.minimum(scaled, 255).astype(np.uint8)


@dataclass(frozen=True, eq=False)
class ProbLut:
    """256-entry table mapping a scaled energy to an integer weight."""

    entries: np.ndarray
    temperature: float
    p_bits: int
    pow2_approx: bool

    def __post_init__(self):
        arr = np.ascontiguousarray(self.entries, dtype=np.uint8)
        if arr.shape != (256,):
            raise ValueError("LUT must have exactly 256 entries")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)


def build_lut(temperature: float, p_bits: int, pow2_approx: bool) -> ProbLut:
    """Tabulate the scaled probability for every 8-bit scaled energy.

    ``p_tr(E_s) = floor((2**p_bits - 1) * exp(-E_s / T))``, then, when
    ``pow2_approx`` is set, rounded down to the nearest power of two
    (exact zeros stay zero).  Entry 0 is always ``2**p_bits - 1``.
    """
    if p_bits not in P_BITS_CHOICES:
        raise ConfigError(f"p_bits must be one of {P_BITS_CHOICES}")
    if not temperature > 0:
        raise ValueError("temperature must be positive")
    top = (1 << p_bits) - 1
    p_s = top * np.exp(-np.arange(256, dtype=np.float64) / temperature)
    if pow2_approx:
        live = p_s >= 1.0
        exponents = np.zeros(256, dtype=np.int64)
        exponents[live] = np.floor(np.log2(p_s[live])).astype(np.int64)
        entries = np.where(live, np.int64(1) << exponents, 0).astype(np.uint8)
    else:
        entries = np.floor(p_s).astype(np.uint8)
    return ProbLut(entries, float(temperature), p_bits, pow2_approx)


def sample_discrete(
    weights: np.ndarray, u: float, scaled_energies: np.ndarray | None = None
) -> int:
    """Inverse-transform draw from unnormalized integer weights.

    ``u`` is a uniform sample in [0, 1); the draw scans labels in order and
    returns the first whose cumulative weight exceeds ``u * sum(weights)``.
    With all-zero weights the hardware falls back to the minimum of
    ``scaled_energies`` (the labels' scaled energies; required in that case),
    taking the smallest label on ties.
    """
    w = np.asarray(weights, dtype=np.int64)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a nonempty 1-D array")
    if w.min() < 0:
        raise ValueError("weights must be nonnegative")
    if not 0.0 <= u < 1.0:
        raise ValueError("u must lie in [0, 1)")
    total = int(w.sum())
    if total == 0:
        if scaled_energies is None:
            raise ValueError("all-zero weights need scaled_energies for the fallback")
        return int(np.argmin(scaled_energies))
    target = u * total
    acc = 0
    for i, wi in enumerate(w):
        acc += int(wi)
        if acc > target:
            return i
    return int(w.size - 1)


# ---------------------------------------------------------------------------
# LFSR uniform source
# ---------------------------------------------------------------------------

def lfsr_next(state: int) -> tuple[int, int]:
    """Advance the 19-bit Fibonacci LFSR once.

    Taps are at bits 19, 18, 17 and 14 (1-based), a maximal-length
    configuration: the state walks all 2**19 - 1 nonzero values.  Returns
    ``(new_state, sample)`` where ``sample`` is the low 12 bits of the new
    state.
    """
    if not 0 < state <= _engine.LFSR_MASK:
        raise ValueError("LFSR state must be a nonzero 19-bit value")
    fb = ((state >> 18) ^ (state >> 17) ^ (state >> 16) ^ (state >> 13)) & 1
    new_state = ((state << 1) | fb) & _engine.LFSR_MASK
    return new_state, new_state & _engine.LFSR_SAMPLE_MASK


class Lfsr19:
    """Stateful wrapper over :func:`lfsr_next`."""

    def __init__(self, seed: int):
        if not 0 < seed <= _engine.LFSR_MASK:
            raise ValueError("LFSR seed must be a nonzero 19-bit value")
        self.state = seed

    def step(self) -> int:
        """Advance once and return the 12-bit sample."""
        self.state, sample = lfsr_next(self.state)
        return sample


def lfsr_cycle_stats(seed: int = 1) -> tuple[int, np.ndarray]:
    """Exhaustively walk the LFSR cycle containing ``seed``.

    Returns ``(period, histogram)`` where ``histogram[k]`` counts how often
    the 12-bit sample ``k`` appeared over one full period.
    """
    if not 0 < seed <= _engine.LFSR_MASK:
        raise ValueError("LFSR seed must be a nonzero 19-bit value")
    visited = np.zeros(_engine.LFSR_MASK + 1, dtype=np.bool_)
    period, hist = _engine._lfsr_cycle(seed, visited)
    return int(period), hist


# ---------------------------------------------------------------------------
# Whole-pipeline runs
# ---------------------------------------------------------------------------

def check_feasible(model: GridModel, config: SpuConfig) -> None:
    """Reject configurations whose weight sum overflows the sampler."""
    if config.backend != "quantized":
        return
    top = (1 << config.p_bits) - 1
    worst = model.label_count * top
    if worst > MAX_WEIGHT_SUM:
        raise ConfigError(
            f"label_count {model.label_count} with p_bits {config.p_bits} can "
            f"accumulate weight {worst} > {MAX_WEIGHT_SUM}"
        )


@lru_cache(maxsize=64)
def _lut_stack_cached(p_bits: int, pow2_approx: bool, temps_key: bytes) -> np.ndarray:
    temps = np.frombuffer(temps_key, dtype=np.float64)
    rows = np.empty((temps.shape[0], 256), dtype=np.int64)
    for k, t in enumerate(temps):
        rows[k] = build_lut(float(t), p_bits, pow2_approx).entries
    rows.setflags(write=False)
    return rows


def _lut_stack(config: SpuConfig) -> tuple[np.ndarray, bool]:
    """LUT rows for a run: one per sweep when annealing, one row otherwise.

    Cached because every run of a design point shares the same schedule.
    """
    temps = config.run.temperature_schedule()
    if config.run.mode == "sampling":
        temps = temps[:1]
    rows = _lut_stack_cached(config.p_bits, config.pow2_approx, temps.tobytes())
    return rows, config.run.mode == "optimization"


def spu_run(model: GridModel, config: SpuConfig) -> tuple[LabelField, SampleTrace]:
    """Run the pipeline simulation; returns (final state, trace).

    With ``backend="fp64"`` the LUT, ``p_bits``, ``pow2_approx`` and
    ``rng_kind`` settings are ignored: sampling happens at double precision
    from the scaled 8-bit energies, using the software uniform source.
    """
    if config.backend == "fp64":
        labels, trace = _engine.run_chain(
            model,
            backend=_engine.SCALED_FP64,
            temperatures=config.run.temperature_schedule(),
            seed=config.run.seed,
            collect_last=config.run.resolved_collect_last,
        )
    else:
        check_feasible(model, config)
        luts, per_sweep = _lut_stack(config)
        labels, trace = _engine.run_chain(
            model,
            backend=_engine.QUANTIZED,
            temperatures=config.run.temperature_schedule(),
            seed=config.run.seed,
            collect_last=config.run.resolved_collect_last,
            luts=luts,
            lut_per_sweep=per_sweep,
            use_lfsr=config.rng_kind == "lfsr19",
        )
    return (
        LabelField(labels, model.width, model.height),
        SampleTrace(trace, model.width, model.height),
    )
