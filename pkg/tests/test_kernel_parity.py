"""The compiled and pure-Python kernels must agree bit for bit."""
import numpy as np
import pytest

from fyamabe import _backend
from fyamabe.integrator import integrate, run_kernel
from fyamabe.model import PotentialSpec, ProblemSpec

pytestmark = pytest.mark.skipif("cython" not in _backend.KERNELS,
                                reason="compiled kernel not built")

CASES = [
    ProblemSpec(4, -2.0, PotentialSpec.zero(), r_max=10),
    ProblemSpec(4, 2.0, PotentialSpec.zero(), r_max=10),
    ProblemSpec(5, -1.0, PotentialSpec.linear_exact(-1.0, 5), r_max=5),
    ProblemSpec(8, 0.5, PotentialSpec.bounded_below(8), r_max=50),
    ProblemSpec(4, -1.0, PotentialSpec.power_law(-1.0, 2.0), r_max=20),
    ProblemSpec(4, -0.3, PotentialSpec.tabulated([(0, 0.2), (1, -0.4), (3, 0.1), (9, -1)]),
                r_max=12),
    ProblemSpec(3, -1.0, PotentialSpec.constant(0.7), r_max=30),
]


@pytest.mark.parametrize("spec", CASES, ids=lambda s: f"n{s.n}-{s.h.kind}-{s.alpha:g}")
@pytest.mark.parametrize("eq", [0, 1])
def test_bitwise_parity(spec, eq):
    y0, yp0 = (spec.r0 * spec.alpha, spec.alpha) if eq == 0 else \
        (spec.r0 * spec.r0 * spec.alpha, 2 * spec.r0 * spec.alpha)
    a = run_kernel(eq, spec, y0, yp0, "python")
    b = run_kernel(eq, spec, y0, yp0, "cython")
    for x, y in zip(a[:4], b[:4]):
        np.testing.assert_array_equal(x, y)
    assert a[4:] == b[4:]


def test_backend_selection():
    assert _backend.get_kernel("python") is _backend.KERNELS["python"]
    with pytest.raises(ValueError):
        _backend.get_kernel("fortran")
    t1, _ = integrate(CASES[0], backend="python")
    t2, _ = integrate(CASES[0], backend="cython")
    assert t1.to_csv() == t2.to_csv()
