import math

import numpy as np
import pytest

from spusim.model import LabelField, build_synthetic_model, label_energies, potts_pairwise, GridModel
from spusim.sampler import (
    DEFAULT_FINAL_TEMPERATURE,
    RunConfig,
    SampleTrace,
    gibbs_probabilities_fp64,
    mode_estimate,
    run,
)


def beta_free_model(singleton, width, height):
    """A model whose conditionals depend on the singleton table only."""
    labels = singleton.shape[1]
    return GridModel(
        width=width,
        height=height,
        label_count=labels,
        alpha=1.0,
        beta=0.0,
        singleton=singleton,
        pairwise=potts_pairwise(labels),
    )


class TestRunConfig:
    def test_sampling_schedule_is_flat(self):
        cfg = RunConfig(mode="sampling", iterations=5, temperature=2.5)
        assert np.all(cfg.temperature_schedule() == 2.5)

    def test_annealing_schedule_geometric(self):
        cfg = RunConfig(mode="optimization", iterations=100, t_start=10.0)
        temps = cfg.temperature_schedule()
        assert temps[0] == 10.0
        assert temps[-1] == pytest.approx(DEFAULT_FINAL_TEMPERATURE)
        ratios = temps[1:] / temps[:-1]
        assert np.allclose(ratios, ratios[0])

    def test_explicit_decay(self):
        cfg = RunConfig(mode="optimization", iterations=4, t_start=8.0, t_decay=0.5)
        assert cfg.temperature_schedule().tolist() == [8.0, 4.0, 2.0, 1.0]

    def test_rejects_bad_values(self):
        with pytest.raises(ValueError):
            RunConfig(iterations=0)
        with pytest.raises(ValueError):
            RunConfig(temperature=0.0)
        with pytest.raises(ValueError):
            RunConfig(mode="optimize")
        with pytest.raises(ValueError):
            RunConfig(iterations=10, collect_last=11)
        with pytest.raises(ValueError):
            RunConfig(mode="optimization", t_decay=1.0)


class TestConditionals:
    def test_equal_energies_give_uniform(self):
        single = np.zeros((9, 3))
        m = beta_free_model(single, 3, 3)
        state = LabelField(np.zeros(9, dtype=int), 3, 3)
        p = gibbs_probabilities_fp64(m, state, 4, 1.0)
        assert np.allclose(p, 1 / 3)

    def test_known_two_label_split(self):
        # energies {0, T ln 2} give probabilities {2/3, 1/3}
        t = 1.7
        single = np.tile([0.0, t * math.log(2.0)], (9, 1))
        m = beta_free_model(single, 3, 3)
        state = LabelField(np.zeros(9, dtype=int), 3, 3)
        p = gibbs_probabilities_fp64(m, state, 0, t)
        assert p[0] == pytest.approx(2 / 3, rel=1e-12)
        assert p[1] == pytest.approx(1 / 3, rel=1e-12)

    def test_high_temperature_flattens(self):
        single = np.tile([0.0, 5.0], (9, 1))
        m = beta_free_model(single, 3, 3)
        state = LabelField(np.zeros(9, dtype=int), 3, 3)
        p = gibbs_probabilities_fp64(m, state, 0, 1e4)
        assert abs(p[0] - p[1]) < 1e-3

    def test_sums_to_one_and_shift_invariant(self):
        rng = np.random.default_rng(3)
        base = rng.uniform(0, 50, (9, 4))
        state = LabelField(rng.integers(0, 4, 9), 3, 3)
        p1 = gibbs_probabilities_fp64(beta_free_model(base, 3, 3), state, 5, 2.0)
        p2 = gibbs_probabilities_fp64(beta_free_model(base + 17.0, 3, 3), state, 5, 2.0)
        assert p1.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(p1, p2, atol=1e-12)

    def test_rejects_nonpositive_temperature(self):
        m = beta_free_model(np.zeros((9, 2)), 3, 3)
        state = LabelField(np.zeros(9, dtype=int), 3, 3)
        with pytest.raises(ValueError):
            gibbs_probabilities_fp64(m, state, 0, 0.0)


class TestRun:
    def test_deterministic(self):
        model, _ = build_synthetic_model("two-label-denoise", 12, seed=2)
        cfg = RunConfig(iterations=50, seed=33)
        f1, t1 = run(model, cfg)
        f2, t2 = run(model, cfg)
        assert np.array_equal(t1.samples, t2.samples)
        assert np.array_equal(f1.labels, f2.labels)

    def test_seed_matters(self):
        model, _ = build_synthetic_model("two-label-denoise", 12, seed=2)
        _, t1 = run(model, RunConfig(iterations=50, seed=1))
        _, t2 = run(model, RunConfig(iterations=50, seed=2))
        assert not np.array_equal(t1.samples, t2.samples)

    def test_trace_shape_and_final_state(self):
        model, _ = build_synthetic_model("two-label-denoise", 12, seed=2)
        field, trace = run(model, RunConfig(iterations=40, seed=0, collect_last=15))
        assert trace.samples.shape == (144, 15)
        assert trace.samples.dtype == np.int16
        assert np.array_equal(trace.final_state().labels, field.labels)

    def test_matches_pure_python_replay(self):
        """The jitted kernel is bit-identical to a straightforward replay."""
        model, _ = build_synthetic_model("shifted-stereo", 8, seed=5,
                                         label_count=3, beta=2.0)
        cfg = RunConfig(mode="sampling", iterations=5, temperature=1.3, seed=21)
        _, trace = run(model, cfg)

        rng = np.random.Generator(np.random.MT19937(cfg.seed))
        labels = rng.integers(0, model.label_count, model.n_vars).astype(np.int64)
        uniforms = rng.random((cfg.iterations, model.n_vars))
        frames = []
        for t in range(cfg.iterations):
            for v in range(model.n_vars):
                e = label_energies(model, labels, v)
                emin = min(e)
                w = [math.exp(-(e[l] - emin) / 1.3) for l in range(3)]
                target = uniforms[t, v] * sum(w)
                acc = 0.0
                chosen = 2
                for l in range(3):
                    acc += w[l]
                    if acc > target:
                        chosen = l
                        break
                labels[v] = chosen
            frames.append(labels.copy())
        assert np.array_equal(np.stack(frames, axis=1), trace.samples)

    def test_annealing_finds_singleton_optimum(self):
        # with beta=0 the annealer must land on the per-variable argmin
        rng = np.random.default_rng(8)
        single = rng.uniform(0, 20, (100, 4))
        model = beta_free_model(single, 10, 10)
        cfg = RunConfig(mode="optimization", iterations=400, t_start=10.0, seed=4)
        field, _ = run(model, cfg)
        assert np.mean(field.labels == single.argmin(axis=1)) >= 0.99

    def test_sampling_frequencies_track_conditional(self):
        # two equal-energy labels at high temperature: ~50/50 occupancy
        model = beta_free_model(np.zeros((16, 2)), 4, 4)
        cfg = RunConfig(iterations=3000, temperature=1.0, seed=6)
        _, trace = run(model, cfg)
        freq = trace.samples.mean()
        assert abs(freq - 0.5) < 0.05


class TestModeEstimate:
    def test_majority(self):
        samples = np.array([[0, 0, 1], [1, 1, 0]], dtype=np.int16)
        est = mode_estimate(SampleTrace(samples, 2, 1))
        assert est.labels.tolist() == [0, 1]

    def test_tie_takes_smallest(self):
        samples = np.array([[2, 1, 1, 2]], dtype=np.int16)
        est = mode_estimate(SampleTrace(samples, 1, 1))
        assert est.labels.tolist() == [1]

    def test_constant(self):
        samples = np.full((4, 7), 3, dtype=np.int16)
        est = mode_estimate(SampleTrace(samples, 2, 2))
        assert np.all(est.labels == 3)
