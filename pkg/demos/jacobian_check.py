"""Verify a model's analytic Jacobian against symmetric differences.

The check draws random points in a box, forms the numerical Jacobian, and
shrinks the perturbation until the difference converges below a threshold.
It returns 0 when everything matches and the offending error norm when the
derivative code is wrong.
"""

import gnmh
from gnmh.jtest import JtestDomain, JtestOptions

handle = gnmh.quickstart_handle(y=1.0, sigma=0.5)
error = gnmh.jtest(handle, JtestDomain.create([-2.0], [2.0]), rng=0)
print(f"correct Jacobian   -> jtest returns {error}")
assert error == 0

# now a model whose derivative code is off by 0.01
def sloppy(x, args):
    inside, f, jac = gnmh.quickstart_model(x, args)
    return inside, f, [[jac[0][0] + 0.01]]

bad = gnmh.ModelHandle(sloppy, {"y": 1.0, "sigma": 0.5}, dim_in=1)
error = gnmh.jtest(bad, JtestDomain.create([-2.0], [2.0]), rng=0)
print(f"broken Jacobian    -> jtest returns {error:.4f} (the difference norm)")
assert error > 0

# the knobs: more points, a larger starting perturbation
opts = JtestOptions(N=200, dx=1e-3)
error = gnmh.jtest(gnmh.simple2d_handle(), JtestDomain.create([-2, -2], [2, 2]),
                   opts, rng=1)
print(f"2D model, 200 pts  -> jtest returns {error}")
