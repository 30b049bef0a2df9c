"""Statistical robustness metrics for sampler traces.

Three pillars:

* sampling quality: autocorrelation-based effective sample size (ESS) per
  random variable, with zero-variance variables classed as inactive;
* convergence: the Gelman-Rubin diagnostic across parallel chains, reduced
  to the percentage of variables that converged;
* goodness of fit: RMSE between label fields (against a mode-of-reference
  pseudo ground truth) and Jensen-Shannon divergence between per-variable
  conditional distributions, including an exhaustive two-label sweep over
  all 8-bit energy pairs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import LabelField
from .pipeline import build_lut

__all__ = [
    "ZeroVarianceError",
    "autocorr",
    "ess",
    "ess_all",
    "EssResult",
    "mean_active_ess",
    "MeanActiveEss",
    "gelman_rubin",
    "RhatDecision",
    "convergence_percentage",
    "ConvergenceResult",
    "reference_mode",
    "rmse",
    "jsd",
    "jsd_sweep",
    "JsdGrid",
    "SweepPipeline",
    "RHAT_DEFAULT_THRESHOLD",
]

RHAT_DEFAULT_THRESHOLD = 1.1

LN2 = float(np.log(2.0))


class ZeroVarianceError(ValueError):
    """Autocorrelation is undefined for a constant sequence."""


# ---------------------------------------------------------------------------
# Pillar 1: effective sample size
# ---------------------------------------------------------------------------

def autocorr(sequence: np.ndarray, lag: int) -> float:
    """Normalized autocorrelation rho(lag) with the biased covariance.

    gamma(k) = (1/n) * sum_t (x_t - mean)(x_{t+k} - mean); rho = gamma(k)/gamma(0).
    Raises :class:`ZeroVarianceError` on a constant sequence; callers doing
    ESS bookkeeping should treat those variables as inactive instead.
    """
    x = np.asarray(sequence, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("sequence must be 1-D with at least 2 samples")
    n = x.size
    if not 0 <= lag < n:
        raise ValueError("lag must be in [0, n)")
    centered = x - x.mean()
    var = float(centered @ centered) / n
    if np.all(x == x[0]):
        raise ZeroVarianceError("autocorrelation of a constant sequence")
    cov = float(centered[: n - lag] @ centered[lag:]) / n
    return cov / var

def _autocorr_rows(x: np.ndarray, active: np.ndarray) -> np.ndarray:
    """rho(k) for every row of x via FFT; inactive rows come back as zeros."""
    n_rows, n = x.shape
    rho = np.zeros((n_rows, n), dtype=np.float64)
    if not active.any():
        return rho
    sub = x[active] - x[active].mean(axis=1, keepdims=True)
    m = 1
    while m < 2 * n:
        m <<= 1
    f = np.fft.rfft(sub, n=m, axis=1)
    acov = np.fft.irfft(f * np.conj(f), n=m, axis=1)[:, :n]
    rho[active] = acov / acov[:, :1]
    return rho


def _geyer_sums(rho: np.ndarray) -> np.ndarray:
    """Initial-positive-sequence truncated sum of rho(1..K) per row.

    Lags are paired (1,2), (3,4), ...; pairs are accumulated until the
    first pair whose sum is negative, which is excluded along with
    everything after it.
    """
    n_rows, n = rho.shape
    max_pairs = (n - 1) // 2
    if max_pairs == 0:
        return np.zeros(n_rows)
    pair_sums = rho[:, 1 : 1 + 2 * max_pairs].reshape(n_rows, max_pairs, 2).sum(axis=2)
    negative = pair_sums < 0.0
    cutoff = np.where(negative.any(axis=1), negative.argmax(axis=1), max_pairs)
    padded = np.concatenate(
        [np.zeros((n_rows, 1)), np.cumsum(pair_sums, axis=1)], axis=1
    )
    return padded[np.arange(n_rows), cutoff]


@dataclass(frozen=True, eq=False)
class EssResult:
    """Per-variable ESS over one trace.

    ``values`` holds NaN where ``inactive`` is set.  ESS greater than the
    sample count is reported as-is (negatively correlated chains can beat
    independent sampling); ``over_unity`` flags those variables.
    """

    values: np.ndarray
    inactive: np.ndarray
    n_samples: int

    @property
    def n_vars(self) -> int:
        return self.values.shape[0]

    @property
    def active(self) -> np.ndarray:
        return ~self.inactive

    @property
    def over_unity(self) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            return np.nan_to_num(self.values) > self.n_samples

    @property
    def inactive_percentage(self) -> float:
        return 100.0 * float(self.inactive.mean())

    @property
    def mean_overall_ess(self) -> float:
        """Mean over active variables only; NaN when none are active."""
        if not self.active.any():
            return float("nan")
        return float(self.values[self.active].mean())

    def to_json_dict(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "n_vars": self.n_vars,
            "values": [None if np.isnan(v) else float(v) for v in self.values],
            "inactive": [bool(b) for b in self.inactive],
            "inactive_percentage": self.inactive_percentage,
            "mean_overall_ess": _nan_to_none(self.mean_overall_ess),
            "over_unity_count": int(self.over_unity.sum()),
        }


def ess_all(trace: np.ndarray) -> EssResult:
    """ESS for every row of a (n_vars, n_samples) trace.

    ESS = n / (1 + 2 * sum_k rho(k)) with the Geyer initial-positive-sequence
    truncation of the lag sum.  Constant rows are inactive (NaN).
    """
    x = np.asarray(trace, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] < 2:
        raise ValueError("trace must be (n_vars, n_samples) with n_samples >= 2")
    n_vars, n = x.shape
    active = ~np.all(x == x[:, :1], axis=1)
    rho = _autocorr_rows(x, active)
    tail = _geyer_sums(rho)
    values = np.full(n_vars, np.nan)
    values[active] = n / (1.0 + 2.0 * tail[active])
    return EssResult(values=values, inactive=~active, n_samples=n)


def ess(sequence: np.ndarray) -> float | None:
    """ESS of a single chain; ``None`` means the variable is inactive."""
    x = np.asarray(sequence, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("sequence must be 1-D")
    result = ess_all(x[None, :])
    if result.inactive[0]:
        return None
    return float(result.values[0])


@dataclass(frozen=True)
class MeanActiveEss:
    """Mean ESS over variables active in both the software and hardware runs."""

    software: float | None
    hardware: float | None
    joint_active: int
    reason: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "software": self.software,
            "hardware": self.hardware,
            "joint_active": self.joint_active,
            "reason": self.reason,
        }


def mean_active_ess(software: EssResult, hardware: EssResult) -> MeanActiveEss:
    """Average ESS over the variables active in both results.

    Restricting both averages to the joint active set keeps the comparison
    honest when the hardware freezes variables the software does not.
    """
    if software.n_vars != hardware.n_vars:
        raise ValueError("results cover different numbers of variables")
    joint = software.active & hardware.active
    count = int(joint.sum())
    if count == 0:
        return MeanActiveEss(None, None, 0, reason="no jointly active variables")
    return MeanActiveEss(
        software=float(software.values[joint].mean()),
        hardware=float(hardware.values[joint].mean()),
        joint_active=count,
    )


# ---------------------------------------------------------------------------
# Pillar 2: convergence
# ---------------------------------------------------------------------------

_BRANCH_NAMES = ("rhat", "zero-variance-equal", "zero-variance-mixed")


@dataclass(frozen=True)
class RhatDecision:
    """Gelman-Rubin verdict for one variable.

    ``branch`` records how the verdict was reached: ``"rhat"`` for the
    ordinary statistic, or one of the zero-variance branches when every
    chain is constant (``rhat`` is then None).
    """

    converged: bool
    branch: str
    within: float
    between: float
    rhat: float | None
    threshold: float

    def to_json_dict(self) -> dict:
        return {
            "converged": self.converged,
            "branch": self.branch,
            "within": self.within,
            "between": self.between,
            "rhat": self.rhat,
            "threshold": self.threshold,
        }


@dataclass(frozen=True, eq=False)
class ConvergenceResult:
    """Vectorized Gelman-Rubin over every variable of a chain set."""

    converged: np.ndarray
    branch: np.ndarray  # indices into _BRANCH_NAMES
    within: np.ndarray
    between: np.ndarray
    rhat: np.ndarray  # NaN on zero-variance branches
    threshold: float
    n_chains: int
    n_samples: int

    @property
    def n_vars(self) -> int:
        return self.converged.shape[0]

    @property
    def percentage(self) -> float:
        return 100.0 * float(self.converged.mean())

    def branch_counts(self) -> dict:
        return {
            name: int((self.branch == i).sum()) for i, name in enumerate(_BRANCH_NAMES)
        }

    def to_json_dict(self) -> dict:
        return {
            "n_chains": self.n_chains,
            "n_samples": self.n_samples,
            "n_vars": self.n_vars,
            "threshold": self.threshold,
            "percentage": self.percentage,
            "converged": [bool(b) for b in self.converged],
            "branch": [_BRANCH_NAMES[i] for i in self.branch],
            "rhat": [_nan_to_none(v) for v in self.rhat],
            "branch_counts": self.branch_counts(),
        }


def _rhat_all(x: np.ndarray, threshold: float) -> ConvergenceResult:
    m, n_vars, n = x.shape
    if m < 2:
        raise ValueError("need at least 2 chains")
    if n < 2:
        raise ValueError("need at least 2 samples per chain")
    chain_constant = np.all(x == x[:, :, :1], axis=2)  # (m, n_vars)
    all_constant = chain_constant.all(axis=0)  # (n_vars,)
    same_value = all_constant & np.all(x[:, :, 0] == x[0, :, 0], axis=0)
    within = x.var(axis=2, ddof=1).mean(axis=0)
    means = x.mean(axis=2)
    between = n * means.var(axis=0, ddof=1)
    rhat = np.full(n_vars, np.nan)
    ordinary = ~all_constant
    if ordinary.any():
        w = within[ordinary]
        b = between[ordinary]
        sigma2 = (n - 1) / n * w + b / n
        rhat_sq = (m + 1) / m * (sigma2 / w) - (n - 1) / (m * n)
        rhat[ordinary] = np.sqrt(rhat_sq)
    converged = np.where(all_constant, same_value, np.nan_to_num(rhat, nan=np.inf) < threshold)
    branch = np.zeros(n_vars, dtype=np.int8)
    branch[all_constant & same_value] = 1
    branch[all_constant & ~same_value] = 2
    return ConvergenceResult(
        converged=converged,
        branch=branch,
        within=within,
        between=between,
        rhat=rhat,
        threshold=threshold,
        n_chains=m,
        n_samples=n,
    )


def gelman_rubin(
    chains: np.ndarray, threshold: float = RHAT_DEFAULT_THRESHOLD
) -> RhatDecision:
    """Gelman-Rubin diagnostic for one variable from (m, n) chain draws.

    Within-chain variance W averages the per-chain sample variances
    (ddof=1); between-chain variance B is n times the variance of the
    chain means.  The pooled estimate sigma2+ = (n-1)/n * W + B/n feeds
    R-hat^2 = (m+1)/m * sigma2+/W - (n-1)/(m*n); converged iff
    R-hat < threshold.  All-constant chain sets bypass the statistic:
    equal constants converge, unequal constants do not.
    """
    x = np.asarray(chains, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("chains must be a (m, n) array")
    res = _rhat_all(x[:, None, :], threshold)
    rhat = res.rhat[0]
    return RhatDecision(
        converged=bool(res.converged[0]),
        branch=_BRANCH_NAMES[res.branch[0]],
        within=float(res.within[0]),
        between=float(res.between[0]),
        rhat=None if np.isnan(rhat) else float(rhat),
        threshold=threshold,
    )


def convergence_percentage(
    chains: np.ndarray, threshold: float = RHAT_DEFAULT_THRESHOLD
) -> ConvergenceResult:
    """Gelman-Rubin verdicts for every variable of a parallel-chain stack.

    ``chains`` has shape (n_chains, n_vars, n_samples): the same variable
    observed across independent chains.  The headline number is
    ``result.percentage``, the share of variables judged converged.
    """
    x = np.asarray(chains, dtype=np.float64)
    if x.ndim != 3:
        raise ValueError("chains must be (n_chains, n_vars, n_samples)")
    return _rhat_all(x, threshold)


def _nan_to_none(v: float):
    f = float(v)
    return None if np.isnan(f) else f


# ---------------------------------------------------------------------------
# Pillar 3: goodness of fit
# ---------------------------------------------------------------------------

def reference_mode(fields: list[LabelField]) -> LabelField:
    """Per-variable most frequent label across runs; ties take the smallest."""
    if not fields:
        raise ValueError("need at least one field")
    first = fields[0]
    for f in fields[1:]:
        if f.width != first.width or f.height != first.height:
            raise ValueError("fields have mismatched dimensions")
    stacked = np.stack([f.labels for f in fields])  # (runs, n_vars)
    n_labels = int(stacked.max()) + 1
    counts = np.empty((stacked.shape[1], n_labels), dtype=np.int64)
    for label in range(n_labels):
        counts[:, label] = (stacked == label).sum(axis=0)
    return LabelField(counts.argmax(axis=1), first.width, first.height)


def rmse(a: LabelField, b: LabelField) -> float:
    """Root mean squared difference between two label fields."""
    if a.width != b.width or a.height != b.height:
        raise ValueError("fields have mismatched dimensions")
    diff = a.labels.astype(np.float64) - b.labels.astype(np.float64)
    return float(np.sqrt(np.mean(diff * diff)))


def jsd(p: np.ndarray, q: np.ndarray) -> float:
    """Jensen-Shannon divergence (natural log, bounded by ln 2).

    JSD = KL(p||m)/2 + KL(q||m)/2 with m = (p+q)/2; zero entries contribute
    nothing (0 * log 0 = 0).  Inputs must be distributions over the same
    support, each summing to 1 within 1e-9.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise ValueError("p and q must be 1-D with the same length")
    if p.min() < 0 or q.min() < 0:
        raise ValueError("distributions must be nonnegative")
    if abs(p.sum() - 1.0) > 1e-9 or abs(q.sum() - 1.0) > 1e-9:
        raise ValueError("distributions must each sum to 1 (within 1e-9)")
    m = 0.5 * (p + q)

    def kl_against_m(a):
        mask = a > 0
        return float(np.sum(a[mask] * np.log(a[mask] / m[mask])))

    return 0.5 * kl_against_m(p) + 0.5 * kl_against_m(q)


@dataclass(frozen=True)
class SweepPipeline:
    """Which probability pipeline produces a sweep distribution.

    ``kind="fp64"`` is the exact softmax; ``kind="quantized"`` runs the
    LUT pipeline, optionally without the dynamic-scaling stage (the
    first-generation datapath for comparison).
    """

    kind: str = "quantized"
    p_bits: int = 4
    pow2_approx: bool = True
    dynamic_scaling: bool = True

    def __post_init__(self):
        if self.kind not in ("quantized", "fp64"):
            raise ValueError("kind must be 'quantized' or 'fp64'")

    @property
    def label(self) -> str:
        if self.kind == "fp64":
            return "fp64"
        tag = f"b{self.p_bits}" + ("-pow2" if self.pow2_approx else "")
        if not self.dynamic_scaling:
            tag += "-noscale"
        return tag


@dataclass(frozen=True, eq=False)
class JsdGrid:
    """JSD over every 8-bit energy pair (E0, E1) for a two-label variable."""

    values: np.ndarray  # (256, 256); [i, j] is the pair E0=i, E1=j
    temperature: float
    pipeline_a: str
    pipeline_b: str

    @property
    def max(self) -> float:
        return float(self.values.max())

    @property
    def mean(self) -> float:
        return float(self.values.mean())

    def to_csv(self, path) -> None:
        lines = ["e0,e1,jsd"]
        vals = self.values
        for e0 in range(256):
            row = vals[e0]
            for e1 in range(256):
                lines.append(f"{e0},{e1},{float(row[e1])!r}")
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write("\n".join(lines))
            fh.write("\n")

    def summary(self) -> dict:
        return {
            "temperature": self.temperature,
            "pipeline_a": self.pipeline_a,
            "pipeline_b": self.pipeline_b,
            "max": self.max,
            "mean": self.mean,
        }


def _sweep_distributions(desc: SweepPipeline, temperature: float) -> np.ndarray:
    """(256, 256, 2) label distributions for every (E0, E1) energy pair."""
    e = np.arange(256, dtype=np.int64)
    e0 = e[:, None].repeat(256, axis=1)
    e1 = e[None, :].repeat(256, axis=0)
    if desc.kind == "fp64":
        m = np.minimum(e0, e1)
        w0 = np.exp(-(e0 - m) / temperature)
        w1 = np.exp(-(e1 - m) / temperature)
        total = w0 + w1
        return np.stack([w0 / total, w1 / total], axis=-1)
    lut = build_lut(temperature, desc.p_bits, desc.pow2_approx).entries.astype(np.int64)
    if desc.dynamic_scaling:
        m = np.minimum(e0, e1)
        w0 = lut[e0 - m]
        w1 = lut[e1 - m]
    else:
        w0 = lut[e0]
        w1 = lut[e1]
    total = w0 + w1
    out = np.empty((256, 256, 2), dtype=np.float64)
    nz = total > 0
    out[nz, 0] = w0[nz] / total[nz]
    out[nz, 1] = w1[nz] / total[nz]
    # All-zero weights: the sampler falls back to the minimum energy
    # (smallest label on ties), a point mass.
    zero = ~nz
    out[zero, 0] = (e0[zero] <= e1[zero]).astype(np.float64)
    out[zero, 1] = 1.0 - out[zero, 0]
    return out


def _jsd_values(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    m = 0.5 * (p + q)

    def kl_against_m(a):
        out = np.zeros(a.shape[:-1], dtype=np.float64)
        for k in range(a.shape[-1]):
            ak = a[..., k]
            mask = ak > 0
            out[mask] += ak[mask] * np.log(ak[mask] / m[..., k][mask])
        return out

    return 0.5 * (kl_against_m(p) + kl_against_m(q))


def jsd_sweep(
    pipeline_a: SweepPipeline,
    pipeline_b: SweepPipeline = SweepPipeline(kind="fp64"),
    temperatures=(1.0, 10.0),
) -> list[JsdGrid]:
    """Exhaustive two-label divergence sweep, one grid per temperature.

    For each 8-bit energy pair (E0, E1) the per-variable label distribution
    of pipeline A is compared against pipeline B.  Values are bounded by
    ln 2 and are exactly 0 when the pipelines agree.
    """
    grids = []
    for t in temperatures:
        if not t > 0:
            raise ValueError("temperatures must be positive")
        dist_a = _sweep_distributions(pipeline_a, float(t))
        dist_b = _sweep_distributions(pipeline_b, float(t))
        grids.append(
            JsdGrid(
                values=_jsd_values(dist_a, dist_b),
                temperature=float(t),
                pipeline_a=pipeline_a.label,
                pipeline_b=pipeline_b.label,
            )
        )
    return grids
