import numpy as np
import pytest

from fyamabe.integrator import integrate
from fyamabe.model import DomainError, PotentialSpec, ProblemSpec, oracle_eval, residual
from fyamabe.startup import expansion, startup_state


def test_beta_vanishes_when_h0_is_zero():
    for n in (3, 4, 9):
        spec = ProblemSpec(n, -3.0, PotentialSpec.power_law(2.0, 1.0))
        assert expansion(spec).beta == 0
        u, up = startup_state(spec)
        assert u == -3.0 * spec.r0 and up == -3.0


def test_beta_example():
    spec = ProblemSpec(4, -1.0, PotentialSpec.constant(-1.0))
    ex = expansion(spec)
    assert ex.beta == pytest.approx(0.4, rel=1e-15)
    u, up = startup_state(spec)
    r0 = spec.r0
    assert u == pytest.approx(-r0 + 0.4 * r0**2, rel=1e-15)
    assert up == pytest.approx(-1 + 0.8 * r0, rel=1e-15)


@pytest.mark.parametrize("n", [3, 4, 5, 8])
@pytest.mark.parametrize("alpha", [-2.0, 0.5])
def test_residual_decays_linearly(n, alpha):
    # h = -1 + 2r: the O(r) coefficient a(n+1)(n+2) + 4(n+1) + 6 is nonzero here
    h = PotentialSpec.tabulated([(0, -1.0), (1, 1.0), (2, 3.0)])
    spec = ProblemSpec(n, alpha, h)
    ex = expansion(spec)
    res = [abs(residual(spec, r, ex.u(r), ex.up(r), ex.upp(r))) for r in (1e-2, 1e-3, 1e-4)]
    ratios = [res[0] / res[1], res[1] / res[2]]
    assert all(8 <= q <= 12 for q in ratios), ratios


def test_residual_coefficient_frozen():
    # symbolic O(r) coefficient: -a (a n^2 + 3 a n + 2 a + 6 c0^2 + 2 c1 n + 2 c1)/(n+1)
    # for h = c0 + c1 r with n=4, a=-1, c0=-1, c1=2 this is -0.8
    h = PotentialSpec.tabulated([(0, -1.0), (1, 1.0), (2, 3.0)])
    spec = ProblemSpec(4, -1.0, h)
    ex = expansion(spec)
    r = 1e-4
    assert residual(spec, r, ex.u(r), ex.up(r), ex.upp(r)) / r == pytest.approx(-0.8, rel=1e-3)


@pytest.mark.parametrize("a", [0.25, 1.0, 4.0])
def test_matches_trivial_family_to_third_order(a):
    for r0 in (1e-4, 3e-5):
        spec = ProblemSpec(4, -2 * a, PotentialSpec.zero(), r0=r0)
        u, _ = startup_state(spec)
        exact, _ = oracle_eval("trivial", r0, a)
        assert abs(u - exact) <= 2 * a * a * r0**3 * 1.01


def test_discontinuous_h_rejected():
    with pytest.raises(DomainError):
        startup_state(ProblemSpec(4, 1.0, PotentialSpec.power_law(1.0, -0.5)))
    with pytest.raises(DomainError):
        startup_state(ProblemSpec(4, 1.0, PotentialSpec.tabulated([(0.1, 1), (2, 1)])))


def test_r0_too_large_rejected():
    with pytest.raises(DomainError, match="smaller r0"):
        startup_state(ProblemSpec(4, -1.0, PotentialSpec.constant(5.0), r0=0.1))


def test_grid_refinement():
    # starting at r0 or r0/2 agrees at 10 r0 within 10x the local tolerance
    for h in (PotentialSpec.constant(-1.0), PotentialSpec.bounded_below(4)):
        spec = ProblemSpec(4, -1.0, h, r_max=1.0, r0=1e-5)
        fine = spec.replace(r0=5e-6)
        x = 10 * spec.r0
        u1 = integrate(spec, events=False)[0](x)[0]
        u2 = integrate(fine, events=False)[0](x)[0]
        assert abs(u1 - u2) <= 10 * (spec.rel_tol * abs(u1) + spec.abs_tol)
