"""Pauli-frame sampler behavior."""

import numpy as np
import pytest

from ccpatch.circuits import baseline_circuit
from ccpatch.errors import ConfigError
from ccpatch.framesim import LANES, SampleBatch, logical_error_rate, sample
from ccpatch.lattice import build_triangular_code
from ccpatch.noise import NoiseParams, apply_noise


@pytest.fixture(scope="module")
def d3():
    return build_triangular_code(3)


@pytest.fixture(scope="module")
def d5():
    return build_triangular_code(5)


def ticks_in(circuit):
    return sum(1 for i in circuit.instructions if i.name == "TICK")


def test_clean_circuit_samples_zero(d3):
    c = baseline_circuit(d3, rounds=2)
    batch = sample(c, 200, seed=7)
    assert not batch.detectors.any()
    assert not batch.observables.any()


def test_reproducible_and_seed_sensitive(d3):
    noisy = apply_noise(baseline_circuit(d3, rounds=2), NoiseParams(0.02))
    a = sample(noisy, 500, seed=11)
    b = sample(noisy, 500, seed=11)
    c = sample(noisy, 500, seed=12)
    assert np.array_equal(a.detectors, b.detectors)
    assert np.array_equal(a.observables, b.observables)
    assert not np.array_equal(a.detectors, c.detectors)


def test_block_prefix_stability(d3):
    # shots are processed in fixed-size blocks with their own substreams,
    # so a longer run starts with exactly the shorter run's bits
    noisy = apply_noise(baseline_circuit(d3, rounds=1), NoiseParams(0.05))
    small = sample(noisy, 64, seed=3)
    big = sample(noisy, 200, seed=3)
    assert np.array_equal(big.detectors[:64], small.detectors)


def test_injected_x_flips_adjacent_z_detectors(d5):
    # an X between rounds flips the next-round Z comparison of exactly
    # the faces containing that qubit; each half emits its flag checks
    # first, so round-2 Z comparisons start at 6 * n_f
    q = 8
    faces = [f.id for f in d5.faces if q in f.data_members]
    assert len(faces) == 3
    one_round = ticks_in(baseline_circuit(d5, rounds=1))
    c = baseline_circuit(d5, rounds=2)
    batch = sample(c, 64, seed=0, inject=[(one_round, "X", q)])
    n_f = len(d5.faces)
    expected = {6 * n_f + fid for fid in faces}
    flipped = set(np.flatnonzero(batch.detectors[0]))
    assert flipped == expected
    assert np.array_equal(batch.detectors, np.tile(batch.detectors[0],
                                                   (64, 1)))


def test_injected_z_flips_x_detectors_only(d5):
    q = 8
    faces = [f.id for f in d5.faces if q in f.data_members]
    one_round = ticks_in(baseline_circuit(d5, rounds=1))
    c = baseline_circuit(d5, rounds=2)
    batch = sample(c, 64, seed=0, inject=[(one_round, "Z", q)])
    n_f = len(d5.faces)
    flipped = set(np.flatnonzero(batch.detectors[0]))
    assert flipped == {4 * n_f + fid for fid in faces}


def test_frame_linearity(d5):
    c = baseline_circuit(d5, rounds=2)
    one_round = ticks_in(baseline_circuit(d5, rounds=1))
    a = [(one_round, "X", 8)]
    b = [(one_round, "X", 2), (one_round, "Z", 11)]
    da = sample(c, 64, seed=0, inject=a).detectors[0]
    db = sample(c, 64, seed=0, inject=b).detectors[0]
    dab = sample(c, 64, seed=0, inject=a + b).detectors[0]
    assert np.array_equal(da ^ db, dab)


def test_inject_validation(d3):
    c = baseline_circuit(d3, rounds=1)
    with pytest.raises(ConfigError):
        sample(c, 8, seed=0, inject=[(0, "W", 1)])
    with pytest.raises(ConfigError):
        sample(c, 8, seed=0, inject=[(10_000, "X", 1)])


def test_serialization_round_trip(d3):
    noisy = apply_noise(baseline_circuit(d3, rounds=2), NoiseParams(0.03))
    batch = sample(noisy, 777, seed=5)
    blob = batch.to_bytes()
    assert blob[:4] == (777).to_bytes(4, "little")
    back = SampleBatch.from_bytes(blob, seed=5)
    assert back.shots == batch.shots
    assert np.array_equal(back.detectors, batch.detectors)
    assert np.array_equal(back.observables, batch.observables)
    with pytest.raises(ConfigError):
        SampleBatch.from_bytes(blob[:-1])


def test_csv_summary(d3):
    noisy = apply_noise(baseline_circuit(d3, rounds=1), NoiseParams(0.05))
    batch = sample(noisy, 128, seed=9)
    lines = batch.to_csv().strip().splitlines()
    assert lines[0] == "kind,index,flips,shots,rate"
    assert len(lines) == 1 + batch.n_det + batch.n_obs
    kind, idx, flips, shots, rate = lines[1].split(",")
    assert kind == "detector" and shots == "128"
    assert abs(float(rate) - int(flips) / 128) < 1e-9


def test_logical_error_rate():
    obs = np.zeros((100, 1), bool)
    obs[:10] = True
    batch = SampleBatch(100, np.zeros((100, 0), bool), obs, seed=0)
    rate, err = logical_error_rate(batch, np.zeros(100, bool))
    assert rate == pytest.approx(0.1)
    assert err == pytest.approx(np.sqrt(0.1 * 0.9 / 100))
    perfect, _ = logical_error_rate(batch, obs)
    assert perfect == 0.0
    with pytest.raises(ConfigError):
        logical_error_rate(batch, np.zeros(99, bool))


def test_throughput_on_large_patch():
    import time
    d9 = build_triangular_code(9)
    noisy = apply_noise(baseline_circuit(d9, rounds=2), NoiseParams(0.001))
    sample(noisy, 64, seed=0)  # warm caches
    t0 = time.perf_counter()
    shots = LANES
    sample(noisy, shots, seed=1)
    rate = shots / (time.perf_counter() - t0)
    assert rate >= 1e5
