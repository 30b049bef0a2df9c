"""Compiled Gibbs sweep kernels shared by the reference and hardware paths.

All three execution paths (full-precision reference, quantized pipeline,
and the quantized-front-end/fp64-sampler hybrid) run through one kernel so
that they consume randomness in exactly the same order: per run, the seed
first draws the initial labels and then, when the uniform source is the
software generator, one double per variable visit.  That shared stream
discipline is what makes the hybrid path bit-identical to the reference
whenever quantization happens to be lossless.

The kernel updates variables in raster-scan order, one full sweep per
temperature entry, and records the label vector after each of the last
``trace.shape[1]`` sweeps.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

# Execution paths.
REFERENCE = 0      # fp64 softmax on the raw (unquantized) energies
QUANTIZED = 1      # 8-bit energies, LUT weights, integer inverse transform
SCALED_FP64 = 2    # 8-bit scaled energies, then fp64 softmax and sampling

LFSR_STATE_BITS = 19
LFSR_MASK = (1 << LFSR_STATE_BITS) - 1
LFSR_SAMPLE_MASK = 0xFFF  # low 12 bits of the state form the uniform sample


@njit(cache=True, nogil=True)
def _lfsr_step(state):
    # Fibonacci LFSR, taps at bits 19/18/17/14 (1-based), maximal length.
    fb = ((state >> 18) ^ (state >> 17) ^ (state >> 16) ^ (state >> 13)) & 1
    return ((state << 1) | fb) & LFSR_MASK


@njit(cache=True, nogil=True)
def _lfsr_cycle(seed, visited):
    """Walk the LFSR until the state repeats; tally the 12-bit samples.

    Returns (period, histogram over the 4096 possible samples).  ``visited``
    must be a zeroed bool array of length 2**19.
    """
    hist = np.zeros(LFSR_SAMPLE_MASK + 1, dtype=np.int64)
    state = seed
    period = 0
    while not visited[state]:
        visited[state] = True
        state = _lfsr_step(state)
        hist[state & LFSR_SAMPLE_MASK] += 1
        period += 1
    return period, hist


@njit(cache=True, nogil=True)
def _run_sweeps(
    singleton,
    pairwise,
    neighbors,
    alpha,
    beta,
    labels,
    temperatures,
    uniforms,
    luts,
    lut_per_sweep,
    backend,
    use_lfsr,
    lfsr_state,
    trace,
):
    n_vars, n_labels = singleton.shape
    n_sweeps = temperatures.shape[0]
    collect_from = n_sweeps - trace.shape[1]
    energy = np.empty(n_labels, dtype=np.float64)
    scaled = np.empty(n_labels, dtype=np.int64)
    prob = np.empty(n_labels, dtype=np.float64)
    state = lfsr_state
    for t in range(n_sweeps):
        temperature = temperatures[t]
        lut_row = t if lut_per_sweep else 0
        for v in range(n_vars):
            for l in range(n_labels):
                acc = alpha * singleton[v, l]
                for j in range(4):
                    nb = neighbors[v, j]
                    if nb >= 0:
                        acc += beta * pairwise[l, labels[nb]]
                energy[l] = acc
            if backend == REFERENCE:
                emin = energy[0]
                for l in range(1, n_labels):
                    if energy[l] < emin:
                        emin = energy[l]
                total = 0.0
                for l in range(n_labels):
                    p = math.exp(-(energy[l] - emin) / temperature)
                    prob[l] = p
                    total += p
                target = uniforms[t, v] * total
                chosen = n_labels - 1
                acc_p = 0.0
                for l in range(n_labels):
                    acc_p += prob[l]
                    if acc_p > target:
                        chosen = l
                        break
            else:
                # 8-bit front end: round to nearest even, saturate at 255,
                # then subtract the minimum (dynamic scaling, again saturated).
                for l in range(n_labels):
                    q = int(round(energy[l]))
                    if q < 0:
                        q = 0
                    elif q > 255:
                        q = 255
                    scaled[l] = q
                qmin = scaled[0]
                for l in range(1, n_labels):
                    if scaled[l] < qmin:
                        qmin = scaled[l]
                for l in range(n_labels):
                    s = scaled[l] - qmin
                    if s > 255:
                        s = 255
                    scaled[l] = s
                if backend == SCALED_FP64:
                    total = 0.0
                    for l in range(n_labels):
                        p = math.exp(-(scaled[l]) / temperature)
                        prob[l] = p
                        total += p
                    target = uniforms[t, v] * total
                    chosen = n_labels - 1
                    acc_p = 0.0
                    for l in range(n_labels):
                        acc_p += prob[l]
                        if acc_p > target:
                            chosen = l
                            break
                else:
                    wsum = 0
                    for l in range(n_labels):
                        wsum += luts[lut_row, scaled[l]]
                    if use_lfsr:
                        # One step per variable visit, even when every LUT
                        # weight truncated to zero, so streams stay aligned.
                        state = _lfsr_step(state)
                    if wsum == 0:
                        chosen = 0
                        best = scaled[0]
                        for l in range(1, n_labels):
                            if scaled[l] < best:
                                best = scaled[l]
                                chosen = l
                    elif use_lfsr:
                        draw = (state & LFSR_SAMPLE_MASK) % wsum
                        chosen = n_labels - 1
                        acc_w = 0
                        for l in range(n_labels):
                            acc_w += luts[lut_row, scaled[l]]
                            if acc_w > draw:
                                chosen = l
                                break
                    else:
                        target = uniforms[t, v] * wsum
                        chosen = n_labels - 1
                        acc_f = 0.0
                        for l in range(n_labels):
                            acc_f += luts[lut_row, scaled[l]]
                            if acc_f > target:
                                chosen = l
                                break
            labels[v] = chosen
        if t >= collect_from:
            col = t - collect_from
            for v in range(n_vars):
                trace[v, col] = labels[v]
    return state


def make_rng(seed: int) -> np.random.Generator:
    """The software uniform source: a Mersenne Twister behind the numpy API."""
    return np.random.Generator(np.random.MT19937(seed))


def lfsr_seed_from(seed: int) -> int:
    """Fold a run seed into a nonzero 19-bit LFSR state."""
    return (seed % LFSR_MASK) + 1


def run_chain(
    model,
    *,
    backend: int,
    temperatures: np.ndarray,
    seed: int,
    collect_last: int,
    luts: np.ndarray | None = None,
    lut_per_sweep: bool = False,
    use_lfsr: bool = False,
):
    """Run one chain and return (final labels, trace).

    ``trace`` has shape (n_vars, collect_last), int16, variable-major; its
    last column equals the final labels.
    """
    n_sweeps = int(temperatures.shape[0])
    if not 1 <= collect_last <= n_sweeps:
        raise ValueError("collect_last must be in [1, n_sweeps]")
    rng = make_rng(seed)
    labels = rng.integers(0, model.label_count, model.n_vars).astype(np.int64)
    if use_lfsr and backend == QUANTIZED:
        uniforms = np.zeros((1, 1), dtype=np.float64)  # never read
    else:
        uniforms = rng.random((n_sweeps, model.n_vars))
    if luts is None:
        luts = np.zeros((1, 256), dtype=np.int64)
    else:
        # fresh writable copy so the jitted kernel sees one array type
        luts = np.array(luts, dtype=np.int64)
    trace = np.empty((model.n_vars, collect_last), dtype=np.int16)
    _run_sweeps(
        model.singleton,
        model.pairwise,
        model.neighbors,
        float(model.alpha),
        float(model.beta),
        labels,
        np.ascontiguousarray(temperatures, dtype=np.float64),
        uniforms,
        np.ascontiguousarray(luts, dtype=np.int64),
        lut_per_sweep,
        backend,
        use_lfsr,
        lfsr_seed_from(seed),
        trace,
    )
    return labels.astype(np.int16), trace
