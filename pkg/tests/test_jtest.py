import numpy as np
import pytest

from gnmh.cli import exp_series_datagen
from gnmh.errors import DimensionMismatch, PointOutsideDomain
from gnmh.jtest import JtestDomain, JtestOptions, jtest
from gnmh.model import (
    ModelHandle,
    exp_series_handle,
    linear_handle,
    quickstart_handle,
    quickstart_model,
    simple2d_handle,
)


def test_defaults_match_standard_values():
    o = JtestOptions()
    assert (o.dx, o.N, o.eps_max, o.p, o.l_max, o.r) == (2e-4, 1000, 1e-4, 2.0, 50, 0.5)


def test_domain_validation():
    with pytest.raises(ValueError):
        JtestDomain.create([0.0, 0.0], [1.0, 0.0])
    with pytest.raises(DimensionMismatch):
        JtestDomain.create([0.0], [1.0, 2.0])


def test_linear_model_passes_immediately():
    h = linear_handle(np.array([[2.0, 0.5], [-0.3, 1.5], [0.1, -0.7]]),
                      np.array([0.4, -1.0, 0.2]))
    dom = JtestDomain.create([-3.0, -3.0], [3.0, 3.0])
    assert jtest(h, dom, rng=0) == 0.0


def test_quickstart_passes_on_standard_box():
    h = quickstart_handle(y=1.0, sigma=0.5)
    assert jtest(h, JtestDomain.create([-2.0], [2.0]), rng=1) == 0.0


def test_simple2d_passes():
    h = simple2d_handle()
    dom = JtestDomain.create([-2.0, -2.0], [2.0, 2.0])
    assert jtest(h, dom, JtestOptions(N=200), rng=2) == 0.0


def test_exp_series_passes_on_standard_box():
    h = exp_series_handle(exp_series_datagen(seed=5), n_terms=2)
    dom = JtestDomain.create([0.1] * 4, [5.0] * 4)
    assert jtest(h, dom, JtestOptions(N=200), rng=3) == 0.0


def _perturbed_quickstart(x, args):
    inside, f, jac = quickstart_model(x, args)
    return inside, f, [[jac[0][0] + 0.01]]


def test_perturbed_jacobian_detected():
    h = ModelHandle(_perturbed_quickstart, {"y": 1.0, "sigma": 0.5}, dim_in=1)
    err = jtest(h, JtestDomain.create([-2.0], [2.0]), rng=4)
    assert err >= 0.01 - 1e-4


def test_return_is_zero_or_above_threshold():
    h = ModelHandle(_perturbed_quickstart, {"y": 1.0, "sigma": 0.5}, dim_in=1)
    opts = JtestOptions()
    for seed in range(5):
        err = jtest(h, JtestDomain.create([-2.0], [2.0]), opts, rng=seed)
        assert err == 0.0 or err > opts.eps_max


def test_deterministic_given_seed():
    h1 = quickstart_handle()
    h2 = quickstart_handle()
    dom = JtestDomain.create([-2.0], [2.0])
    opts = JtestOptions(N=50)
    r1 = jtest(h1, dom, opts, rng=9)
    r2 = jtest(h2, dom, opts, rng=9)
    assert r1 == r2
    assert h1.call_count == h2.call_count


def test_call_accounting_when_all_pass_at_first_stage():
    # 1 evaluation for the analytic Jacobian plus 2 per column per point
    A = np.array([[2.0, 0.5], [-0.3, 1.5]])
    h = linear_handle(A, np.zeros(2))
    opts = JtestOptions(N=37)
    jtest(h, JtestDomain.create([-1.0, -1.0], [1.0, 1.0]), opts, rng=0)
    assert h.call_count == opts.N * (2 * h.dim_in + 1)


def test_redraws_when_point_outside_domain():
    # half of the box is outside the domain; points must be redrawn
    def half_plane(x, args):
        if x[0] <= 0:
            return 0, None, None
        return 1, [x[0] ** 2], [[2 * x[0]]]

    h = ModelHandle(half_plane, None, dim_in=1)
    dom = JtestDomain.create([-1.0], [1.0])
    assert jtest(h, dom, JtestOptions(N=40), rng=11) == 0.0


def test_errors_out_when_domain_never_hit():
    h = ModelHandle(lambda x, a: (0, None, None), None, dim_in=1)
    with pytest.raises(PointOutsideDomain):
        jtest(h, JtestDomain.create([0.0], [1.0]), JtestOptions(N=3), rng=0)


def test_box_dimension_must_match_model():
    h = quickstart_handle()
    with pytest.raises(DimensionMismatch):
        jtest(h, JtestDomain.create([-1.0, -1.0], [1.0, 1.0]), rng=0)
