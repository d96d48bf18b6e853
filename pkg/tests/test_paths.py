import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from galrpi.algebra import PhysicsParams, Rotation
from galrpi.errors import DimensionError, GridMismatchError
from galrpi.paths import (
    Corridor,
    Path,
    VelocityRecord,
    boost,
    concat,
    concat_corridor,
    displacement,
    extension_multiplicator,
    extension_multiplicator_phase,
    rotate,
)

P = PhysicsParams()
DT = 0.125

samples = st.integers(0, 12).flatmap(
    lambda n: arrays(np.float64, (n, 1), elements=st.floats(-5, 5, allow_nan=False)))


def path_of(u):
    return Path(DT, u)


def record_of(v):
    return VelocityRecord(DT, v)


def test_concat_with_empty_is_identity():
    p = Path(DT, [[1.0], [2.0]])
    assert concat(p, Path.empty(DT)) == p
    assert concat(Path.empty(DT), p) == p


def test_durations_add():
    p, q = Path(0.5, np.ones((2, 1))), Path(0.5, np.ones((4, 1)))
    assert concat(p, q).duration == 3.0


@settings(max_examples=100, deadline=None)
@given(samples, samples)
def test_displacement_additive(u, w):
    p, q = path_of(u), path_of(w)
    brute = DT * (sum(u[:, 0]) + sum(w[:, 0]))
    assert displacement(concat(p, q))[0] == pytest.approx(brute, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(samples, samples, samples)
def test_concat_associative_exactly(a, b, c):
    p, q, r = map(path_of, (a, b, c))
    assert concat(concat(p, q), r) == concat(p, concat(q, r))


def test_concat_corridor_lengths():
    c = concat_corridor(Corridor(DT, [1, 2, 3]), Corridor(DT, [4, 5, 6, 7, 8]))
    assert len(c) == 8
    assert concat_corridor(c, Corridor(DT, [])) == c


@settings(max_examples=100, deadline=None)
@given(samples, samples, samples)
def test_concat_corridor_associative(a, b, c):
    x, y, z = (Corridor(DT, s[:, 0]) for s in (a, b, c))
    left = concat_corridor(concat_corridor(x, y), z)
    assert list(left.a) == list(a[:, 0]) + list(b[:, 0]) + list(c[:, 0])
    assert left == concat_corridor(x, concat_corridor(y, z))


def test_mismatched_dt_rejected():
    with pytest.raises(GridMismatchError):
        concat(Path(0.1, [[1.0]]), Path(0.2, [[1.0]]))
    with pytest.raises(GridMismatchError):
        concat_corridor(Corridor(0.1, [1.0]), Corridor(0.2, [1.0]))


def test_invalid_samples_rejected():
    with pytest.raises(ValueError):
        Path(0.0, [[1.0]])
    with pytest.raises(ValueError):
        Path(0.1, [[np.nan]])
    with pytest.raises(ValueError):
        Corridor(0.1, [np.inf])


def test_boost_by_zero_is_identity():
    p = Path(DT, [[1.0], [-2.0], [0.5]])
    assert boost(p, VelocityRecord(DT, np.zeros((3, 1)))) == p


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10).flatmap(lambda n: st.tuples(
    arrays(np.float64, (n, 1), elements=st.floats(-5, 5)),
    arrays(np.float64, (n, 1), elements=st.floats(-5, 5)),
    arrays(np.float64, (n, 1), elements=st.floats(-5, 5)))))
def test_boost_group_action(data):
    u, v1, v2 = data
    p, w1, w2 = path_of(u), record_of(v1), record_of(v2)
    assert np.allclose(boost(boost(p, w1), -w1).u, p.u, atol=1e-12)
    assert np.allclose(boost(boost(p, w1), w2).u, boost(p, w1 + w2).u, atol=1e-12)


def test_boost_length_mismatch():
    with pytest.raises(GridMismatchError):
        boost(Path(DT, np.ones((3, 1))), VelocityRecord(DT, np.ones((2, 1))))


def test_displacement_examples():
    assert displacement(Path(0.5, np.ones((4, 1))))[0] == 2.0
    assert displacement(Path.empty(DT))[0] == 0.0


def test_positions_roundtrip():
    x = np.array([[0.0], [0.3], [0.1], [0.9]])
    p = Path.from_positions(DT, x)
    assert np.allclose(p.positions(0.0), x, atol=1e-15)


def test_extension_multiplicator_examples():
    assert extension_multiplicator(Path(DT, np.ones((4, 1))), record_of(np.zeros((4, 1))), P) == 1
    p = Path(0.25, np.ones((4, 1)))
    w = VelocityRecord(0.25, np.ones((4, 1)))
    assert extension_multiplicator(p, w, P) == pytest.approx(cmath.exp(1.5j), abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(samples, samples)
def test_extension_multiplicator_splits_exactly(a, b):
    rng = np.random.default_rng(len(a) * 31 + len(b))
    wa = record_of(rng.normal(size=a.shape))
    wb = record_of(rng.normal(size=b.shape))
    w = VelocityRecord(DT, np.concatenate([wa.v, wb.v]))
    whole = extension_multiplicator(concat(path_of(a), path_of(b)), w, P)
    parts = extension_multiplicator(path_of(a), wa, P) * extension_multiplicator(path_of(b), wb, P)
    assert abs(whole - parts) < 1e-14


def test_extension_multiplicator_refines_at_first_order():
    # u = cos t, v = sin t on [0, 1]; exact exponent is sin^2(1)/2 + (1/2 - sin(2)/4)/2
    exact = math.sin(1) ** 2 / 2 + 0.5 * (0.5 - math.sin(2) / 4)
    errs = []
    for n in (64, 128, 256, 512):
        t = np.arange(n) / n
        p = Path(1 / n, np.cos(t)[:, None])
        w = VelocityRecord(1 / n, np.sin(t)[:, None])
        errs.append(abs(extension_multiplicator_phase(p, w, P) - exact))
    ratios = [errs[i] / errs[i + 1] for i in range(3)]
    assert all(r == pytest.approx(2.0, rel=0.05) for r in ratios)


def test_rotate_examples():
    rng = np.random.default_rng(2)
    p = Path(DT, rng.normal(size=(6, 3)))
    r = Rotation.about_axis([1, -2, 0.5], 1.1)
    assert rotate(p, Rotation.identity()) == p
    assert np.allclose(rotate(rotate(p, r), r.inverse()).u, p.u, atol=1e-12)
    assert np.allclose(displacement(rotate(p, r)), r.mat @ displacement(p), atol=1e-12)


def test_rotate_needs_three_dimensions():
    with pytest.raises(DimensionError):
        rotate(Path(DT, np.ones((2, 1))), Rotation.identity())


def test_corridor_split_inverts_concat():
    c = Corridor(DT, np.arange(7.0))
    a, b = c.split(3)
    assert concat_corridor(a, b) == c
