import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from entropy_diagnostics import (ConstraintError, Field, Grid, chi_derivative, chi_profile,
                                 estimate_holder, localize, make_kernel, make_weierstrass,
                                 mollify, sup_norm)
from entropy_diagnostics.mollifier import (CutoffProfile, bump, bump_derivative, extend_periodic,
                                           smooth_step)


# -- kernels -------------------------------------------------------------------

def test_kernel_four_cells():
    g = Grid.periodic(256)
    k = make_kernel(g, 4 * g.h[0])
    assert np.count_nonzero(k.grid_stencil) >= 7
    assert k.mass == pytest.approx(1.0, abs=1e-12)
    assert k.weights.sum() == pytest.approx(1.0, abs=1e-12)


def test_kernel_symmetry_and_first_moment():
    g = Grid.periodic(1000, length=3.0)
    k = make_kernel(g, 0.037)
    s = k.grid_stencil
    np.testing.assert_array_equal(s, s[::-1])
    m = k.radius_cells[0]
    x = np.arange(-m, m + 1) * g.h[0]
    assert abs(np.sum(x * k.weights)) <= 1e-12


def test_kernel_2d_is_radial():
    g = Grid.periodic(128, dim=2)
    k = make_kernel(g, 6 * g.h[0])
    s = k.grid_stencil
    np.testing.assert_array_equal(s, s.T)
    np.testing.assert_array_equal(s, s[::-1, :])
    assert k.mass == pytest.approx(1.0, abs=1e-12)
    m = k.radius_cells[0]
    assert s[m, 0] == 0.0 and s[0, 0] == 0.0  # the ball, not the square


def test_kernel_support_inside_ball():
    g = Grid.periodic(512)
    eps = 10.5 * g.h[0]
    k = make_kernel(g, eps)
    m = k.radius_cells[0]
    x = np.abs(np.arange(-m, m + 1)) * g.h[0]
    assert np.all(k.grid_stencil[x >= eps] == 0) and np.all(k.grid_stencil[x < eps] > 0)


@pytest.mark.parametrize("eps_cells", [1.0, 1.9])
def test_kernel_rejects_small_radius(eps_cells):
    g = Grid.periodic(128)
    with pytest.raises(ConstraintError):
        make_kernel(g, eps_cells * g.h[0])


def test_kernel_rejects_large_radius():
    with pytest.raises(ConstraintError):
        make_kernel(Grid.periodic(128, length=2.0), 0.5)


# -- convolution ---------------------------------------------------------------

@pytest.mark.parametrize("method", ["direct", "fft"])
def test_constants_preserved(method):
    g = Grid.periodic(300)
    f = Field(g, np.full(300, -2.75))
    out = mollify(f, make_kernel(g, 5 * g.h[0]), method=method)
    np.testing.assert_allclose(out.values, -2.75, atol=1e-12)


def test_cosine_multiplier_against_direct_sum():
    L = 2.0
    g = Grid.periodic(512, length=L)
    x = g.coords(0)
    k = make_kernel(g, 40 * g.h[0])
    f = Field(g, np.cos(2 * np.pi * x / L))
    m = k.radius_cells[0]
    y = np.arange(-m, m + 1) * g.h[0]
    ghat = np.sum(k.weights * np.cos(2 * np.pi * y / L))
    expected = ghat * np.cos(2 * np.pi * x / L)
    np.testing.assert_allclose(mollify(f, k, "fft").values, expected, atol=1e-10)
    np.testing.assert_allclose(mollify(f, k, "direct").values, expected, atol=1e-10)


@pytest.mark.parametrize("cells", [3, 20, 45])
def test_direct_and_fft_agree(cells):
    g = Grid.periodic(1024)
    f = make_weierstrass(g, 0.3, seed=4)
    k = make_kernel(g, cells * g.h[0])
    a = mollify(f, k, "direct").values
    b = mollify(f, k, "fft").values
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_direct_and_fft_agree_2d_bounded():
    g = Grid.bounded((40, 50), (0.0, 0.0), (1.0, 1.3))
    f = Field(g, np.random.default_rng(0).normal(size=(40, 50, 2)))
    k = make_kernel(g, 3.5 * max(g.h))
    np.testing.assert_allclose(mollify(f, k, "direct").data, mollify(f, k, "fft").data, atol=1e-10)


def test_auto_picks_strategy_by_taps():
    g = Grid.periodic(512)
    f = make_weierstrass(g, 0.5)
    small = make_kernel(g, 10 * g.h[0])
    large = make_kernel(g, 80 * g.h[0])
    assert small.taps <= 64 < large.taps
    np.testing.assert_array_equal(mollify(f, small).data, mollify(f, small, "direct").data)
    np.testing.assert_array_equal(mollify(f, large).data, mollify(f, large, "fft").data)


def test_grid_mismatch():
    k = make_kernel(Grid.periodic(128), 0.05)
    with pytest.raises(ConstraintError):
        mollify(Field(Grid.periodic(256), np.zeros(256)), k)


def test_double_mollification_bound():
    g = Grid.periodic(2 ** 14)
    f = make_weierstrass(g, 0.5, seed=9)
    s = estimate_holder(f, 0.5).seminorm
    for cells in (8, 64, 256):
        k = make_kernel(g, cells * g.h[0])
        once = mollify(f, k)
        twice = mollify(once, k)
        assert sup_norm(twice - once) <= s * (2 * k.epsilon) ** 0.5


@settings(max_examples=25, deadline=None)
@given(a=st.floats(-10, 10), b=st.floats(-10, 10), cells=st.integers(2, 60),
       method=st.sampled_from(["direct", "fft"]))
def test_linearity(a, b, cells, method):
    g = Grid.periodic(256)
    f = make_weierstrass(g, 0.4, seed=1)
    h = make_weierstrass(g, 0.7, seed=2)
    k = make_kernel(g, cells * g.h[0])
    lhs = mollify(f * a + h * b, k, method).values
    rhs = a * mollify(f, k, method).values + b * mollify(h, k, method).values
    scale = max(1.0, np.max(np.abs(lhs)))
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * scale * 10


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 1000), cells=st.integers(2, 60), alpha=st.floats(0.1, 0.9))
def test_sup_norm_not_increased(seed, cells, alpha):
    g = Grid.periodic(512)
    f = make_weierstrass(g, alpha, seed=seed)
    k = make_kernel(g, cells * g.h[0])
    assert sup_norm(mollify(f, k)) <= sup_norm(f) * (1 + 1e-12)


@settings(max_examples=25, deadline=None)
@given(shift=st.integers(-300, 300), cells=st.integers(2, 40))
def test_translation_commutes_for_direct_sum(shift, cells):
    g = Grid.periodic(512)
    f = make_weierstrass(g, 0.5, seed=3)
    k = make_kernel(g, cells * g.h[0])
    shifted = Field(g, np.roll(f.data, shift, axis=0))
    a = mollify(shifted, k, "direct").data
    b = np.roll(mollify(f, k, "direct").data, shift, axis=0)
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("alpha", [0.35, 0.5, 0.75])
def test_mollification_error_bound(weierstrass_1d, alpha):
    f = weierstrass_1d(alpha)
    s = estimate_holder(f, alpha).seminorm
    for j in (3, 6, 9, 12):
        k = make_kernel(f.grid, 2 ** j * f.grid.h[0])
        assert sup_norm(mollify(f, k) - f) <= 1.1 * s * k.epsilon ** alpha


# -- bounded fields ----------------------------------------------------------------

def test_extend_periodic_keeps_coordinates():
    g = Grid.bounded(21, -1.0, 1.0)
    f = Field(g, g.coords(0))
    ext = extend_periodic(f, 5)
    assert ext.grid.periodic_topology and ext.grid.n == (31,)
    np.testing.assert_allclose(ext.grid.coords(0)[5:-5], g.coords(0), atol=1e-14)
    np.testing.assert_array_equal(ext.values[5:-5], f.values)
    assert np.all(ext.values[:5] == 0) and np.all(ext.values[-5:] == 0)


def test_localize_unit_field():
    g = Grid.bounded(401, 0.0, 1.0)
    out = localize(Field(g, np.ones(401)), 0.1, 0.2)
    d = g.boundary_distance()
    assert np.all(out.values[d >= 0.2] == 1.0)
    assert np.all(out.values[d <= 0.1] == 0.0)


def test_localize_does_not_increase_sup():
    g = Grid.bounded((64, 64), 0.0, 1.0)
    f = Field(g, np.random.default_rng(2).normal(size=(64, 64)))
    assert sup_norm(localize(f, 0.05, 0.2)) <= sup_norm(f)


def test_localize_then_mollify_vanishes_near_boundary():
    g = Grid.bounded(2001, 0.0, 1.0)
    eps = 0.01
    f = Field(g, 1.0 + np.sin(7 * g.coords(0)) ** 2)
    out = mollify(localize(f, 3 * eps, 6 * eps), make_kernel(g, eps))
    d = g.boundary_distance()
    assert np.all(out.values[d < 2 * eps] == 0.0)
    assert np.all(out.values[d > 6 * eps + eps] > 0.0)


@pytest.mark.parametrize("inner,outer", [(0.2, 0.1), (0.0, 0.1), (0.1, 0.6)])
def test_localize_margin_order(inner, outer):
    g = Grid.bounded(64)
    with pytest.raises(ConstraintError):
        localize(Field(g, np.ones(64)), inner, outer)


def test_localize_needs_bounded_grid():
    with pytest.raises(ConstraintError):
        localize(Field(Grid.periodic(64), np.ones(64)), 0.1, 0.2)


# -- cutoff profiles -------------------------------------------------------------

def test_chi_breakpoints():
    assert chi_profile(0.2) == 0.0
    assert chi_profile(0.6) == 1.0
    s = np.linspace(0.0, 0.25, 101)
    assert np.all(chi_profile(s) == 0.0)
    s = np.linspace(0.5, 5.0, 101)
    assert np.all(chi_profile(s) == 1.0)


def test_chi_monotone():
    s = np.linspace(0.0, 1.0, 10_000)
    assert np.all(np.diff(chi_profile(s)) >= 0)


def test_chi_derivative_integrates_to_one():
    s = np.linspace(0.0, 1.0, 200_001)
    assert np.trapezoid(chi_derivative(s), s) == pytest.approx(1.0, abs=1e-8)


def test_chi_derivative_matches_differences():
    s = np.linspace(0.26, 0.49, 50)
    step = 1e-6
    fd = (chi_profile(s + step) - chi_profile(s - step)) / (2 * step)
    np.testing.assert_allclose(chi_derivative(s), fd, rtol=1e-6, atol=1e-8)


def test_bump_derivative_matches_differences():
    r = np.linspace(-0.95, 0.95, 77)
    step = 1e-7
    fd = (bump(r + step) - bump(r - step)) / (2 * step)
    np.testing.assert_allclose(bump_derivative(r), fd, rtol=1e-5, atol=1e-10)


def test_smooth_step_symmetry():
    t = np.linspace(-0.5, 1.5, 201)
    np.testing.assert_allclose(smooth_step(t) + smooth_step(1 - t), 1.0, atol=1e-15)


def test_cutoff_profile_validation():
    with pytest.raises(ConstraintError):
        CutoffProfile("interior", 0.5, 0.5)
