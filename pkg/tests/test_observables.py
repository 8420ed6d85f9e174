import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from cavcool.observables import (CSV_COLUMNS, RunRecord, bootstrap_stderr, field_intensity,
                                 histogram, kinetic_energy, kurtosis, magnetization_sq)


def test_kinetic_energy_single_and_batched():
    assert kinetic_energy(np.array([1.0, -3.0]))[0] == 5.0
    mean, se = kinetic_energy(np.array([[1.0, 1.0], [3.0, 3.0]]))
    assert mean == 5.0 and se > 0
    assert kinetic_energy(np.array([[2.0, 2.0]]))[1] == 0.0


def test_bootstrap_matches_analytic_standard_error():
    rng = np.random.default_rng(0)
    data = rng.normal(3.0, 2.0, 400)
    se = bootstrap_stderr(data, n_boot=4000, seed=1)
    assert se == pytest.approx(data.std(ddof=0) / math.sqrt(400), rel=0.05)
    # deterministic for a fixed seed, column-wise for 2-d input
    assert bootstrap_stderr(data, seed=1) == bootstrap_stderr(data, seed=1)
    two = bootstrap_stderr(np.column_stack([data, 2 * data]), seed=7)
    assert two[1] == pytest.approx(2 * two[0], rel=1e-12)


def test_kurtosis_gaussian_and_uniform():
    rng = np.random.default_rng(1)
    assert kurtosis(rng.normal(size=400_000)) == pytest.approx(3.0, abs=0.03)
    assert kurtosis(rng.uniform(-1, 1, 400_000)) == pytest.approx(1.8, abs=0.02)
    with pytest.raises(ValueError):
        kurtosis(np.zeros(5))
    with pytest.raises(ValueError):
        kurtosis(np.array([]))


@given(hnp.arrays(float, st.integers(2, 50), elements=st.floats(-1e3, 1e3)).filter(
    lambda a: np.any(np.abs(a) > 1e-3)))
def test_kurtosis_bounds(p):
    # <p^4> >= <p^2>^2, and at most n for n samples
    k = kurtosis(p)
    assert 1 - 1e-9 <= k <= len(p) + 1e-9


def test_magnetization_and_intensity():
    assert magnetization_sq(np.zeros(10)) == 1.0
    assert magnetization_sq(np.array([[0.0, np.pi], [0.0, 0.0]])) == pytest.approx(0.5)
    assert field_intensity([3.0, 0.0], [4.0, 1.0]) == pytest.approx(13.0)
    with pytest.raises(ValueError):
        field_intensity([], [])


def test_histogram_normalized_and_position_wrap():
    rng = np.random.default_rng(2)
    edges, dens = histogram(rng.normal(size=10_000), bins=40)
    assert np.sum(dens * np.diff(edges)) == pytest.approx(1.0)
    edges, dens = histogram(np.array([0.1, 2 * np.pi - 0.1, 6.0]), bins=8, kind="position")
    assert edges[0] == pytest.approx(-np.pi) and edges[-1] == pytest.approx(np.pi)
    # organized state: density peaked around x = 0
    x = rng.vonmises(0.0, 20.0, 10_000)
    edges, dens = histogram(x, bins=16, kind="position")
    centre = 0.5 * (edges[1:] + edges[:-1])
    assert abs(centre[np.argmax(dens)]) < 0.5
    with pytest.raises(ValueError):
        histogram(x, bins=1)


def _record(T=5, F=4, seed=0):
    rng = np.random.default_rng(seed)
    m2 = rng.uniform(1, 2, (T, F))
    return RunRecord(t=np.arange(F, dtype=float), v=np.ones(F), m2=m2, m4=3 * m2 ** 2,
                     theta=rng.uniform(-1, 1, (T, F)), intensity_traj=rng.uniform(0, 1, (T, F)),
                     h_eff=rng.normal(size=(T, F)))


def test_record_aggregates():
    r = _record()
    np.testing.assert_allclose(r.e_kin_mean, r.m2.mean(axis=0))
    assert np.all(r.kurtosis >= 3.0)
    assert r.table().shape == (4, len(CSV_COLUMNS))
    frames = r.frames()
    assert frames[2].row() == tuple(r.table()[2])
    mean, se = r.window_mean("m2", 1.0, 2.0)
    assert mean == pytest.approx(r.m2[:, 1:3].mean()) and se > 0


def test_single_trajectory_record_equals_trajectory():
    r = _record(T=1)
    np.testing.assert_array_equal(r.e_kin_mean, r.m2[0])
    np.testing.assert_array_equal(r.e_kin_stderr, np.zeros(4))
