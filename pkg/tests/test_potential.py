import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from polarize.geometry import SampleNet, boundary_sample
from polarize.potential import (PotentialSpec, control_g, control_hat, eval_f,
                                polarization_over_net, potential_U)

A1 = PotentialSpec(1.0)
A5 = PotentialSpec(5.0)


def test_eval_f():
    assert eval_f(A5, 0) == 1.0
    assert eval_f(A5, 1) == pytest.approx(0.0067379470, abs=1e-10)
    assert eval_f(A1, 0.5) == pytest.approx(math.exp(-0.25), abs=1e-15)
    with pytest.raises(ValueError):
        eval_f(A5, -0.1)


def test_bad_spec():
    with pytest.raises(ValueError):
        PotentialSpec(0.0)
    with pytest.raises(ValueError):
        PotentialSpec(1.0, family="riesz")


def test_potential_U():
    assert potential_U(A5, (0, 0), [(0, 0)] * 3) == pytest.approx(3.0)
    assert potential_U(A5, (0, 0), [(1, 0)]) == pytest.approx(math.exp(-5))
    assert potential_U(A1, (0, 0), [(1, 0), (0, 1)]) == pytest.approx(2 * math.exp(-1))
    with pytest.raises(ValueError):
        potential_U(A5, (0, 0), [])


def test_polarization_over_net():
    v, p = polarization_over_net(A5, [(0, 0), (1, 0)], [(0, 0)])
    assert v == pytest.approx(math.exp(-5))
    assert tuple(p) == (1.0, 0.0)
    with pytest.raises(ValueError):
        polarization_over_net(A5, np.empty((0, 2)), [(0, 0)])


def test_polarization_far_lamps():
    net = np.random.default_rng(0).uniform(0, 1, (50, 2))
    C = [(3.0, 3.0)] * 4
    d = np.hypot(*(net - 3.0).T).min()
    v, _ = polarization_over_net(A5, net, C)
    assert v <= 4 * math.exp(-5 * d * d) + 1e-15


def test_polarization_disk_boundary_tie():
    from polarize.geometry import Disk
    net = SampleNet(boundary_sample(Disk((0, 0), 1), 0.1), 0.1)
    v, p = polarization_over_net(A5, net, [(0, 0)])
    assert v == pytest.approx(math.exp(-5), abs=1e-12)
    # first in lexicographic order among the ties
    assert p[0] == net.points[:, 0].min()


def test_control_hat():
    assert control_hat(A1, 0.3, -1.0) == pytest.approx(1 - math.exp(-0.09))
    assert control_hat(A5, 1.0, 0.0) == 0.0
    assert control_hat(A1, 1.0, 0.5) == pytest.approx(math.exp(-1) - math.exp(-2.25), abs=1e-15)


def test_control_g_values():
    # both branches evaluated by hand, take the larger
    up = math.exp(-1) - math.exp(-2.25)
    down = math.exp(-0.25) - math.exp(-1)
    assert control_g(A1, 1.0, 0.5) == pytest.approx(max(up, down), abs=1e-15)
    assert control_g(A1, 1.0, 0.5) == pytest.approx(0.4109213, abs=1e-7)
    assert control_g(A5, 0.7, 0.0) == 0.0
    assert control_g(A1, 0.3, 1.0) == pytest.approx(math.exp(-0.09) - math.exp(-1.69), abs=1e-15)


@pytest.mark.parametrize("a", [1.0, 5.0, 10.0])
def test_control_bound_moving_p(a):
    spec = PotentialSpec(a)
    rng = np.random.default_rng(int(a))
    c, p, q = (rng.uniform(-2, 2, (10000, 2)) for _ in range(3))
    d = np.hypot(*(c - p).T)
    lhs = np.abs(eval_f(spec, d) - eval_f(spec, np.hypot(*(c - q).T)))
    assert np.all(lhs <= control_g(spec, d, np.hypot(*(p - q).T)) + 1e-12)


@pytest.mark.parametrize("a", [1.0, 5.0, 10.0])
def test_control_bound_moving_c(a):
    spec = PotentialSpec(a)
    rng = np.random.default_rng(100 + int(a))
    c, c2, p = (rng.uniform(-2, 2, (10000, 2)) for _ in range(3))
    d = np.hypot(*(c - p).T)
    lhs = np.abs(eval_f(spec, d) - eval_f(spec, np.hypot(*(c2 - p).T)))
    assert np.all(lhs <= control_g(spec, d, np.hypot(*(c - c2).T)) + 1e-12)


@given(st.floats(0.1, 10), st.floats(0, 3), st.floats(0, 3), st.floats(0, 2 * math.pi))
def test_control_bound_hypothesis(a, d, eps, theta):
    spec = PotentialSpec(a)
    # p at distance d from c = 0, p' at distance eps from p in direction theta
    p = np.array([d, 0.0])
    q = p + eps * np.array([math.cos(theta), math.sin(theta)])
    lhs = abs(eval_f(spec, d) - eval_f(spec, float(np.hypot(*q))))
    assert lhs <= control_g(spec, d, eps) + 1e-12


def test_control_g_monotone():
    rng = np.random.default_rng(2)
    eps = np.linspace(0, 3, 100)
    for d in rng.uniform(0, 3, 100):
        g = control_g(A5, d, eps)
        assert np.all(np.diff(g) >= -1e-15)


@pytest.mark.parametrize("a", [0.5, 5.0, 10.0])
def test_control_g_continuous_at_zero(a):
    d = np.linspace(0, 3, 301)
    assert np.all(control_g(PotentialSpec(a), d, 1e-8) < 1e-6)


def test_potential_decreases_moving_lamp_away():
    p = np.array([0.2, -0.1])
    c = np.array([0.5, 0.3])
    direction = (c - p) / np.linalg.norm(c - p)
    h = 1e-4
    prev = potential_U(A5, p, [c])
    for t in range(1, 200):
        cur = potential_U(A5, p, [c + t * h * 50 * direction])
        assert cur < prev
        prev = cur
