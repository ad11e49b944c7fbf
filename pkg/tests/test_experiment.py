"""Counting simulation: distributions, calibration, determinism."""

import math

import numpy as np
import pytest

import polarmoments as pm
from polarmoments import DetectorConfig, Direction

X = Direction(math.pi / 2, 0.0)
Z = Direction(0.0)


def test_outcome_distribution_two_photon():
    dist = pm.outcome_distribution(pm.fock(2, 0), X)
    np.testing.assert_allclose(dist.probs, [0.25, 0.5, 0.25], atol=1e-12)
    np.testing.assert_allclose(dist.values, [-2, 0, 2])
    dist_z = pm.outcome_distribution(pm.fock(2, 0), Z)
    np.testing.assert_allclose(dist_z.probs, [0, 0, 1], atol=1e-12)


def test_outcome_distribution_spans_manifolds():
    s = pm.coherent(1.0, tail_mass=1e-10)
    dist = pm.outcome_distribution(s, Z)
    # total misses 1 - vacuum by at most the truncated tail
    assert dist.total == pytest.approx(1.0 - s.vacuum_weight, abs=2e-10)
    assert set(dist.ns) == set(s.photon_numbers)


def test_class_efficiencies_from_channels():
    cfg = DetectorConfig(channel_efficiencies=(0.9, 0.8, 0.7, 0.6))
    assert cfg.class_efficiency(2, 2) == pytest.approx(0.5 * 0.9 * 0.8)
    assert cfg.class_efficiency(2, 0) == pytest.approx(0.5 * 0.7 * 0.6)
    assert cfg.class_efficiency(2, 1) == pytest.approx(0.85 * 0.65)
    # general manifolds use mean channel efficiencies per arm
    assert cfg.class_efficiency(3, 2) == pytest.approx(0.85 ** 2 * 0.65)
    flat = DetectorConfig(channel_efficiencies=(0.9, 0.8, 0.7, 0.6),
                          splitter_halving=False)
    assert flat.class_efficiency(2, 2) == pytest.approx(0.9 * 0.8)


def test_explicit_class_efficiencies():
    cfg = DetectorConfig(class_efficiencies={(2, 0): 0.3, (2, 1): 0.5, (2, 2): 0.4})
    assert cfg.class_efficiency(2, 1) == 0.5
    with pytest.raises(ValueError):
        DetectorConfig(channel_efficiencies=(1, 1, 1, 1),
                       class_efficiencies={(2, 0): 0.3})


def test_presets_exist():
    assert set(pm.EFFICIENCY_PRESETS) == {"pair_source", "double_source"}
    np.testing.assert_allclose(pm.EFFICIENCY_PRESETS["pair_source"],
                               (0.91, 0.91, 0.82, 1.00))


def test_sampling_is_seed_deterministic():
    state = pm.fock(1, 1)
    dirs = pm.named_direction_set("canonical-2")
    cfg = DetectorConfig(channel_efficiencies=(0.9, 0.9, 0.9, 0.9),
                         trials=2000, runs=2, seed=42)
    a = pm.run_protocol(state, dirs, cfg)
    b = pm.run_protocol(state, dirs, cfg)
    for ra, rb in zip(a.counts, b.counts):
        np.testing.assert_array_equal(ra.raw, rb.raw)
    c = pm.run_protocol(state, dirs,
                        DetectorConfig(channel_efficiencies=(0.9,) * 4,
                                       trials=2000, runs=2, seed=43))
    assert any(not np.array_equal(ra.raw, rc.raw)
               for ra, rc in zip(a.counts, c.counts))


def test_calibration_is_unbiased():
    """Mean calibrated counts track T * p within sampling error."""
    state = pm.fock(2, 0)
    dist = pm.outcome_distribution(state, X)
    cfg = DetectorConfig(channel_efficiencies=(0.75, 0.76, 1.00, 0.57),
                         trials=10_000)
    rng = np.random.default_rng(7)
    acc = np.zeros(3)
    reps = 100
    for _ in range(reps):
        rec = pm.sample_counts(dist, cfg, rng)
        acc += pm.calibrate(rec, cfg).calibrated
    mean = acc / reps
    expect = cfg.trials * dist.probs
    effs = np.array([cfg.class_efficiency(2, k) for k in range(3)])
    sigma = np.sqrt(cfg.trials * dist.probs * (1 - dist.probs * effs) / effs) \
        / math.sqrt(reps)
    assert (np.abs(mean - expect) < 5 * np.maximum(sigma, 1e-9)).all()


def test_expected_counts_invert_exactly():
    state = pm.fock(1, 1)
    dist = pm.outcome_distribution(state, X)
    cfg = DetectorConfig(channel_efficiencies=(0.91, 0.91, 0.82, 1.00),
                         trials=50_000)
    rec = pm.expected_counts(dist, cfg)
    cal = pm.calibrate(rec, cfg)
    np.testing.assert_allclose(cal.calibrated, cfg.trials * dist.probs,
                               atol=1e-9)


def test_exact_protocol_reproduces_moments():
    state = pm.fock(1, 1)
    dirs = pm.named_direction_set("canonical-2")
    cfg = DetectorConfig(channel_efficiencies=(0.75, 0.76, 1.00, 0.57),
                         trials=10_000, seed=0)
    res = pm.run_protocol(state, dirs, cfg, exact=True)
    assert res.observations.stderr is None
    for i, d in enumerate(dirs.directions):
        for r in (1, 2):
            want = pm.raw_moment(state, d, r)
            assert res.observations.values[r][i] == pytest.approx(want, abs=1e-9)


def test_sampled_protocol_statistics():
    state = pm.unpolarized(2)
    dirs = pm.named_direction_set("canonical-2")
    cfg = DetectorConfig(channel_efficiencies=(0.91, 0.91, 0.82, 1.00),
                         trials=100_000, runs=3, seed=5)
    res = pm.run_protocol(state, dirs, cfg)
    assert res.empirical.mean.shape == (6, 2)
    assert (res.observations.stderr[2] > 0).all()
    for i, d in enumerate(dirs.directions):
        want = pm.raw_moment(state, d, 2)
        got = res.observations.values[2][i]
        sig = res.observations.stderr[2][i]
        assert abs(got - want) < 5 * sig


def test_vacuum_classes_are_ignored():
    """Manifold conditioning drops other photon numbers and vacuum."""
    s = pm.coherent(0.9, tail_mass=1e-10)
    dirs = pm.named_direction_set("canonical-2")
    cfg = DetectorConfig(channel_efficiencies=(0.9,) * 4, trials=200_000,
                         runs=1, seed=2)
    res = pm.run_protocol(s, dirs, cfg, manifold=2)
    cond = pm.manifold_state(2, s.manifold(2).rho)
    for i, d in enumerate(dirs.directions):
        want = pm.raw_moment(cond, d, 2)
        got = res.observations.values[2][i]
        assert abs(got - want) < 5 * max(res.observations.stderr[2][i], 1e-6)
