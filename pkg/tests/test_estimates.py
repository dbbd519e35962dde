import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fyamabe.estimates import (TestFunction, _quad, check_rho_property, check_young,
                               contradiction_table, ibp_identity_gap, lemma_mp2_check,
                               lemma_mp_check, loglog_slope, make_test_function,
                               polynomial_profile, rational_profile, rescaling_decay,
                               trajectory_profile, trivial_profile)
from fyamabe.integrator import integrate
from fyamabe.model import DomainError, PotentialSpec, ProblemSpec

ZERO_W = lambda r: (0.0, 0.0, 0.0)  # noqa: E731


# test functions
# ---------------------------------------------------------------------------

def test_plateau_and_support():
    tf = make_test_function(1.0, 4)
    assert tf(0.5)[0] == 1.0 and tf(2.5)[0] == 0.0
    assert tf(1.0)[0] == 1.0 and tf(2.0)[0] == 0.0


@pytest.mark.parametrize("rho", [0.3, 1.0, 7.0])
@pytest.mark.parametrize("k", [2, 4, 6, 9])
def test_rho_property(rho, k):
    rep = check_rho_property(TestFunction(rho, k), n=10)
    assert rep.passes, rep
    assert rep.refinement_change < 1e-4


def test_scaling_law():
    tf1 = make_test_function(1.0)
    tf7 = tf1.rescaled(7.0)
    r = np.linspace(0, 20, 101)
    np.testing.assert_allclose(tf7(r)[0], tf1(r / 7.0)[0], rtol=0, atol=1e-14)
    np.testing.assert_allclose(tf7(r)[1], tf1(r / 7.0)[1] / 7.0, atol=1e-15)
    assert check_rho_property(tf7).passes


def test_k_too_small():
    with pytest.raises(DomainError, match="k = 1"):
        make_test_function(1.0, 1)
    with pytest.raises(ValueError):
        make_test_function(-1.0)


def test_c2_derivatives_by_finite_differences():
    tf = TestFunction(1.3, 6)
    r = np.linspace(0.05, 3.0, 300)
    d = 1e-6
    phi, d1, d2 = tf(r)
    np.testing.assert_allclose((tf(r + d)[0] - tf(r - d)[0]) / (2 * d), d1, atol=1e-7)
    np.testing.assert_allclose((tf(r + d)[1] - tf(r - d)[1]) / (2 * d), d2, atol=1e-6)


def test_cutoff_integrals_frozen():
    # reference values: 30-digit quadrature of the uncancelled integrands,
    # split at the kink r = 1.3072067293301486
    tf = TestFunction(1.0, 6)
    cut = _quad(lambda r: r**6 * tf.curvature_ratio(r, 4), 1.0, 2.0)[0]
    slope = _quad(lambda r: r**6 * tf.slope_ratio(r), 1.0, 2.0)[0]
    assert cut == pytest.approx(322.41365606044373, rel=1e-9)
    assert slope == pytest.approx(701.18899010391045, rel=1e-9)


def test_cancelled_ratios_match_direct_formula():
    tf = TestFunction(1.0, 6)
    r = np.linspace(1.05, 1.95, 37)
    phi, d1, d2 = tf(r)
    direct = np.abs(d2 + 6 / r * d1) ** 1.5 / np.sqrt(phi)
    np.testing.assert_allclose(tf.curvature_ratio(r, 4), direct, rtol=1e-10)
    np.testing.assert_allclose(tf.slope_ratio(r), np.abs(d1) ** 3 / phi**2, rtol=1e-10)


# Young
# ---------------------------------------------------------------------------

def test_young_examples():
    lhs, rhs, ok = check_young("young1", 1, 1, 1)
    assert ok and lhs == 1 and rhs == 1
    assert check_young("young1", 2, 3, 0.5)[2]
    lhs, rhs, ok = check_young("young2", 0, 5, 2)
    assert ok and lhs == 0 and rhs == pytest.approx(125 / 6)
    with pytest.raises(ValueError):
        check_young("young3", 1, 1, 1)


@settings(max_examples=300, deadline=None)
@given(a=st.floats(0, 1e3), b=st.floats(0, 1e3), p=st.floats(1e-3, 1e3),
       form=st.sampled_from(["young1", "young2"]))
def test_young_always_holds(a, b, p, form):
    lhs, rhs, _ = check_young(form, a, b, p)
    assert lhs <= rhs * (1 + 1e-12) + 1e-300


# lemmas
# ---------------------------------------------------------------------------

def test_mp_trivial_profile():
    rep = lemma_mp_check(trivial_profile(), 2.0, 1.0, make_test_function(2.0), 4)
    assert rep.holds and rep.converged
    for eps in (0.5, 1.0, 2.0):
        assert lemma_mp_check(trivial_profile(scale=2.0), 1.0, eps,
                              make_test_function(1.0), 4).holds


def test_mp_zero_profile():
    rep = lemma_mp_check(ZERO_W, 1.0, 1.0, make_test_function(1.0), 5)
    assert rep.lhs == 0 and rep.rhs > 0 and rep.holds


def test_mp2_examples():
    assert lemma_mp2_check(trivial_profile(), 1.0, 1.0, make_test_function(1.0), 5).holds
    rep = lemma_mp2_check(lambda r: (3.0, 0.0, 0.0), 1.0, 1.0, make_test_function(1.0), 5)
    assert rep.lhs == 0 and rep.holds
    for delta in (0.1, 1.0, 10.0):
        assert lemma_mp2_check(trivial_profile(), 1.0, delta, make_test_function(1.0), 5).holds


def test_absolute_value_form_fails_for_oscillation():
    # |w'' + (2n-2) w'/r| is not controlled by the right-hand side: a small,
    # fast oscillation keeps the cubic term tiny while the absolute Laplacian grows
    A, om = 0.05, 150.0
    w = lambda r: (A * np.sin(om * r), A * om * np.cos(om * r), -A * om * om * np.sin(om * r))  # noqa: E731
    rep = lemma_mp_check(w, 1.0, 1.0, make_test_function(1.0, 6, 4), 4)
    assert rep.holds
    assert rep.terms["lhs_abs"] > 2 * rep.rhs


@settings(max_examples=10, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=2, max_size=5), st.floats(0.2, 3),
       st.integers(1, 3))
def test_lemmas_on_rational_profiles(coeffs, c, m):
    w = rational_profile(coeffs, c, m)
    tf = make_test_function(1.0)
    assert lemma_mp_check(w, 1.0, 1.0, tf, 4).holds
    assert lemma_mp2_check(w, 1.0, 1.0, tf, 4).holds


def test_rescaling_decay():
    tf1 = make_test_function(1.0)
    for n in (4, 7):
        rep = rescaling_decay(tf1, n, [1, 2, 4, 8])
        assert abs(rep.slope + 3) <= 0.05
    with pytest.raises(DomainError):
        rescaling_decay(tf1, 4, [1.0])
    with pytest.raises(DomainError):
        loglog_slope([1.0], [1.0])


@pytest.mark.parametrize("n", [3, 4, 6])
def test_integration_by_parts(n):
    tf = make_test_function(1.5)
    for w in (trivial_profile(), polynomial_profile([0.3, -1.0, 0.5, 0.2])):
        assert ibp_identity_gap(w, tf, n) <= 1e-8


def test_trajectory_profile_and_table():
    traj, _ = integrate(ProblemSpec(4, -2.0, PotentialSpec.zero(), r_max=10))
    w = trajectory_profile(traj)
    exact = trivial_profile()
    for r in (5e-5, 0.3, 2.0, 7.0):
        assert w(r)[0] == pytest.approx(exact(r)[0], rel=1e-6)
    rep = lemma_mp_check(w, 2.0, 1.0, make_test_function(2.0), 4)
    assert rep.holds
    rows = contradiction_table(traj, [1.0, 2.0, 4.0, 20.0])
    assert [row[0] for row in rows] == [1.0, 2.0, 4.0]
    assert all(math.isfinite(x) for row in rows for x in row)
