import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polarize.analysis import (DarkSet, certified_lower_bound, certified_lower_bound_on,
                               check_containment, check_dark_location, darkest_points,
                               heatmap_grid, monte_carlo_floor, shadow_certificate,
                               single_move_check, write_darkset_csv)
from polarize.geometry import ON_A, ON_CONV_A, build_net, contains, diameter, sample_uniform
from polarize.model import build_lower_instance
from polarize.potential import PotentialSpec, control_g, polarization_over_net, potential_U
from polarize.solver import solve_bnb

A5 = PotentialSpec(5.0)


@pytest.fixture(scope="module")
def disk_net(disk):
    return build_net(disk, 0.02, 1, ON_A)


@pytest.fixture(scope="module")
def fine_disk_net(disk):
    return build_net(disk, 0.01, 1, ON_A)


# --- certified lower bound -------------------------------------------------

def test_bound_far_lamps(triangle):
    D, eps, N = 2.0, 0.05, 3
    C = [(0.5, -D)] * N  # distance from the triangle is exactly D
    b = certified_lower_bound(A5, triangle, C, eps)
    g_max = control_g(A5, np.linspace(0, D + 2, 2001), eps).max()
    assert b <= N * math.exp(-5 * D * D)
    assert b >= N * (math.exp(-5 * (D + diameter(triangle)) ** 2) - g_max)


def test_bound_disk_center(disk):
    b = certified_lower_bound(A5, disk, [(0, 0)], 0.01)
    # the envelope is attained exactly at boundary net points, up to rounding
    assert math.exp(-5) - control_g(A5, 1.0, 0.01) - 1e-12 <= b <= math.exp(-5)


def test_bound_halving_eps(triangle):
    C = [(0.3, 0.2), (0.7, 0.2), (0.5, 0.6)]
    coarse = certified_lower_bound(A5, triangle, C, 0.08)
    fine = certified_lower_bound(A5, triangle, C, 0.04)
    jitter = len(C) * control_g(A5, np.linspace(0, 2, 401), 0.04).max()
    assert fine >= coarse - jitter


def test_bound_is_sound(triangle):
    C = [(0.2, 0.1), (0.8, 0.15), (0.5, 0.7)]
    b = certified_lower_bound(A5, triangle, C, 0.05)
    floor, where = monte_carlo_floor(A5, triangle, C, probes=10 ** 5, seed=9)
    assert floor >= b - 1e-9 and contains(triangle, where)


def test_lower_mip_solution_is_sound(triangle):
    gamma = build_net(triangle, 0.1, 1, ON_A)
    lam = build_net(triangle, 0.1 / 3, 1, ON_CONV_A)
    rep = solve_bnb(build_lower_instance(A5, lam, gamma, 2))
    floor, _ = monte_carlo_floor(A5, triangle, rep.points, probes=10 ** 5, seed=1)
    assert rep.value <= floor + 1e-9


# --- dark sets -------------------------------------------------------------

def test_dark_set_on_disk_boundary(disk, disk_net):
    # the default band reaches one net cell into the disk
    loose = darkest_points(A5, disk, [(0, 0)], disk_net)
    assert np.all(np.hypot(*loose.points.T) > 0.95)
    assert check_containment([(0, 0)], loose).holds
    tight = darkest_points(A5, disk, [(0, 0)], disk_net, tol=1e-9)
    assert len(tight.points) >= 8
    assert np.allclose(np.hypot(*tight.points.T), 1.0, atol=1e-12)
    assert check_containment([(0, 0)], tight).holds
    assert check_dark_location(disk, [(0, 0)], tight, 1e-6).holds


def test_dark_set_level_matches_recomputation(triangle):
    net = build_net(triangle, 0.05, 1, ON_A)
    C = [(0.2, 0.2), (0.6, 0.3)]
    dark = darkest_points(A5, triangle, C, net)
    U = [sum(math.exp(-5 * math.dist(p, c) ** 2) for c in C) for p in net.points.tolist()]
    assert dark.level == pytest.approx(min(U), abs=1e-14)
    assert np.all(dark.values <= dark.level + dark.tol)


def test_dark_set_with_lamps_everywhere(triangle):
    net = build_net(triangle, 0.2, 1, ON_A)
    dark = darkest_points(A5, triangle, net.points, net)
    assert dark.level > 0 and len(dark.points) > 0


def test_dark_set_other_component(two_triangles):
    net = build_net(two_triangles, 0.1, 1, ON_A)
    C = [(0.5, 0.3), (0.45, 0.25), (0.55, 0.25)]
    dark = darkest_points(A5, two_triangles, C, net)
    assert np.all(dark.points[:, 0] > 2.5)


def test_dark_set_needs_tol_without_eps():
    with pytest.raises(ValueError):
        darkest_points(A5, None, [(0, 0)], np.array([[1.0, 0.0]]))


# --- containment -----------------------------------------------------------

def test_containment_off_center_violated(disk, disk_net):
    C = [(0.9, 0.0)]
    dark = darkest_points(A5, disk, C, disk_net)
    far = np.hypot(dark.points[:, 0] - 0.9, dark.points[:, 1])
    assert np.all(far > 1.0) and dark.points[np.argmin(dark.values), 0] < -0.99
    rep = check_containment(C, dark)
    assert not rep.holds and rep.violators.tolist() == [[0.9, 0.0]]


def test_containment_subset_holds():
    pts = np.array([[0, 0], [1, 0], [0, 1], [0.2, 0.2]], dtype=float)
    dark = DarkSet(pts, 0.0, 0.0, np.zeros(4))
    assert check_containment(pts, dark).holds


def test_containment_empty_dark_set():
    with pytest.raises(ValueError):
        check_containment([(0, 0)], DarkSet(np.empty((0, 2)), 0.0, 0.0, np.empty(0)))


@settings(max_examples=25)
@given(st.integers(0, 10 ** 6))
def test_containment_invariant_under_scaling(seed):
    # doubling every lamp doubles U; with the band doubled the dark set is unchanged
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0, 1, (150, 2))
    C = rng.uniform(0, 1, (2, 2))
    one = darkest_points(A5, None, C, pts, tol=0.01)
    two = darkest_points(A5, None, np.vstack([C, C]), pts, tol=0.02)
    assert np.array_equal(one.points, two.points)
    assert check_containment(C, one).holds == check_containment(C, two).holds


# --- dark location ---------------------------------------------------------

def test_dark_location_solver_output(triangle):
    gamma = build_net(triangle, 0.08, 1, ON_A)
    lam = build_net(triangle, 0.08 / 3, 1, ON_CONV_A)
    C = solve_bnb(build_lower_instance(A5, lam, gamma, 3)).points
    net = build_net(triangle, 0.02, 1, ON_A)
    dark = darkest_points(A5, triangle, C, net, tol=1e-9)
    assert check_dark_location(triangle, C, dark, 1e-6).holds


def test_dark_location_flags_injected_point(triangle):
    C = np.array([[0.2, 0.1], [0.3, 0.1], [0.25, 0.2]])
    dark = DarkSet(np.array([[0.7, 0.3]]), 0.0, 0.0, np.zeros(1))
    rep = check_dark_location(triangle, C, dark, 1e-6)
    assert not rep.holds and len(rep.violators) == 1


# --- shadow certificates ---------------------------------------------------

def test_shadow_collinear(disk):
    C = [(0.0, 0.0)]
    q = shadow_certificate(A5, disk, C, (0.5, 0.0))
    assert q is not None and contains(disk, q)
    assert q[1] == 0.0 and q[0] > 0.5
    assert potential_U(A5, q, C) < potential_U(A5, (0.5, 0.0), C)
    assert potential_U(A5, (0.6, 0), C) == pytest.approx(math.exp(-1.8))


def test_shadow_boundary_inconclusive(disk):
    assert shadow_certificate(A5, disk, [(0.0, 0.0)], (1.0, 0.0)) is None


def test_shadow_exists_outside_hull(triangle):
    C = [(0.2, 0.1), (0.8, 0.1)]
    p = (0.5, 0.4)  # interior point of A off the segment conv(C)
    q = shadow_certificate(A5, triangle, C, p)
    assert q is not None and potential_U(A5, q, C) < potential_U(A5, p, C)


@settings(max_examples=60)
@given(st.integers(0, 10 ** 6))
def test_shadow_output_is_darker(seed):
    from polarize.geometry import Polygon
    tri = Polygon(((0.0, 0.0), (1.0, 0.0), (0.5, math.sqrt(3) / 2)))
    rng = np.random.default_rng(seed)
    C = sample_uniform(tri, int(rng.integers(1, 4)), rng)
    p = sample_uniform(tri, 1, rng)[0]
    q = shadow_certificate(A5, tri, C, p)
    if q is not None:
        assert contains(tri, q) and potential_U(A5, q, C) < potential_U(A5, p, C)


# --- single moves ----------------------------------------------------------

def test_single_move_from_center(disk, fine_disk_net):
    C = [(0.0, 0.0), (0.0, 0.0)]
    rep = single_move_check(A5, disk, C, 1, (0.1, 0.0), fine_disk_net)
    assert rep.decreased and rep.p_new < rep.p_old
    same = single_move_check(A5, disk, C, 0, (0.0, 0.0), fine_disk_net)
    assert not same.decreased and same.p_new == same.p_old


def test_single_move_bad_index(disk, disk_net):
    with pytest.raises(IndexError):
        single_move_check(A5, disk, [(0, 0)], 1, (0.1, 0), disk_net)


# --- heatmaps --------------------------------------------------------------

def test_heatmap_peak_and_positivity(triangle):
    lamp = (0.31, 0.27)
    hm = heatmap_grid(A5, triangle, [lamp], 40)
    k = int(np.argmax(hm.u))
    nearest = int(np.argmin(np.hypot(hm.x - lamp[0], hm.y - lamp[1])))
    assert k == nearest
    assert np.all(hm.u[hm.inside] > 0)
    assert len(hm.x) == 1600 and hm.x[1] > hm.x[0] and hm.y[1] == hm.y[0]


def test_heatmap_matches_net(triangle):
    C = [(0.3, 0.2), (0.7, 0.2), (0.5, 0.6)]
    hm = heatmap_grid(A5, triangle, C, 120)
    net = build_net(triangle, 0.02, 1, ON_A)
    v, _ = polarization_over_net(A5, net, C)
    envelope = 3 * control_g(A5, np.linspace(0, 2, 401), 0.02).max()
    assert abs(hm.u[hm.inside].min() - v) <= envelope


def test_heatmap_csv(tmp_path, triangle):
    hm = heatmap_grid(A5, triangle, [(0.5, 0.3)], 3)
    hm.to_csv(tmp_path / "h.csv")
    lines = (tmp_path / "h.csv").read_text().splitlines()
    assert lines[0] == "x,y,inside,u" and len(lines) == 10
    with pytest.raises(ValueError):
        heatmap_grid(A5, triangle, [(0.5, 0.3)], 1)


def test_darkset_csv(tmp_path, disk, disk_net):
    dark = darkest_points(A5, disk, [(0, 0)], disk_net)
    write_darkset_csv(dark, tmp_path / "d.csv")
    data = np.loadtxt(tmp_path / "d.csv", delimiter=",", skiprows=1, ndmin=2)
    assert np.allclose(data[:, :2], dark.points) and np.allclose(data[:, 2], dark.values)


def test_bound_on_uses_net_eps(triangle):
    net = build_net(triangle, 0.1, 1, ON_A)
    C = [(0.5, 0.3)]
    assert certified_lower_bound_on(A5, net, C) <= polarization_over_net(A5, net, C)[0]
