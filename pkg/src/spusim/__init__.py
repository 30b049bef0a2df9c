"""Bit-exact simulator for a quantized Gibbs-sampling pipeline.

The package pairs a full-precision MRF Gibbs sampler with a cycle-faithful
model of the quantized hardware datapath (8-bit energies, dynamic scaling,
LUT probabilities, LFSR-driven discrete sampling), plus the statistical
machinery to compare the two: effective sample size, Gelman-Rubin
convergence, RMSE and Jensen-Shannon divergence, and a design-space
exploration harness that sweeps precision/approximation variants.
"""

from .model import (
    GridModel,
    LabelField,
    PgmFormatError,
    build_stereo_model,
    build_synthetic_model,
    load_pgm,
    save_pgm,
    total_energy,
)
from .sampler import RunConfig, SampleTrace, gibbs_probabilities_fp64, mode_estimate, run
from .pipeline import (
    ConfigError,
    Lfsr19,
    ProbLut,
    SpuConfig,
    build_lut,
    dynamic_scale,
    lfsr_next,
    sample_discrete,
    spu_run,
)
from .metrics import (
    ConvergenceResult,
    EssResult,
    JsdGrid,
    MeanActiveEss,
    RhatDecision,
    SweepPipeline,
    autocorr,
    convergence_percentage,
    ess,
    ess_all,
    gelman_rubin,
    jsd,
    jsd_sweep,
    mean_active_ess,
    reference_mode,
    rmse,
)
from .harness import (
    DESIGN_POINTS,
    ExperimentSpec,
    RobustnessReport,
    SpecError,
    recompute_metrics,
    run_experiment,
    run_jsd_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "GridModel",
    "LabelField",
    "PgmFormatError",
    "build_stereo_model",
    "build_synthetic_model",
    "load_pgm",
    "save_pgm",
    "total_energy",
    "RunConfig",
    "SampleTrace",
    "gibbs_probabilities_fp64",
    "mode_estimate",
    "run",
    "ConfigError",
    "Lfsr19",
    "ProbLut",
    "SpuConfig",
    "build_lut",
    "dynamic_scale",
    "lfsr_next",
    "sample_discrete",
    "spu_run",
    "ConvergenceResult",
    "EssResult",
    "JsdGrid",
    "MeanActiveEss",
    "RhatDecision",
    "SweepPipeline",
    "autocorr",
    "convergence_percentage",
    "ess",
    "ess_all",
    "gelman_rubin",
    "jsd",
    "jsd_sweep",
    "mean_active_ess",
    "reference_mode",
    "rmse",
    "DESIGN_POINTS",
    "ExperimentSpec",
    "RobustnessReport",
    "SpecError",
    "recompute_metrics",
    "run_experiment",
    "run_jsd_sweep",
    "__version__",
]
