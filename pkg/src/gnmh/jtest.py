"""Randomized check that a model's Jacobian matches symmetric differences.

Points are drawn uniformly in a user-supplied box. At each point the
numerical Jacobian is formed column by column from symmetric difference
quotients and compared to the analytic one under an entrywise p-norm. A
point that fails has its perturbations shrunk geometrically and is retried;
a point that never converges ends the test with its final error norm.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import DimensionMismatch, PointOutsideDomain
from .model import ModelHandle


@dataclass(frozen=True)
class JtestOptions:
    """Tuning knobs; the defaults are the standard configuration.

    dx: initial perturbation as a fraction of the box width per coordinate.
    N: number of random test points.
    eps_max: pass threshold on the error norm.
    p: order of the entrywise norm (2 gives the Frobenius norm).
    l_max: number of shrink stages allowed per point.
    r: shrink ratio applied to the perturbation at each stage.
    """

    dx: float = 2e-4
    N: int = 1000
    eps_max: float = 1e-4
    p: float = 2.0
    l_max: int = 50
    r: float = 0.5


@dataclass(frozen=True)
class JtestDomain:
    """Open box {x : x_min < x < x_max} the test points are drawn from."""

    x_min: np.ndarray
    x_max: np.ndarray

    @classmethod
    def create(cls, x_min, x_max) -> "JtestDomain":
        x_min = np.asarray(x_min, dtype=float).reshape(-1)
        x_max = np.asarray(x_max, dtype=float).reshape(-1)
        if x_min.shape != x_max.shape:
            raise DimensionMismatch("box corners must have the same length")
        if not np.all(x_min < x_max):
            raise ValueError("box is empty: need x_min < x_max componentwise")
        return cls(x_min=x_min, x_max=x_max)


class _OutsideDomain(Exception):
    """Internal: a test or perturbed point hit indicator 0."""


def _eval_residual(model: ModelHandle, x: np.ndarray) -> np.ndarray:
    ev = model.evaluate(x)
    if not ev.inside:
        raise _OutsideDomain
    return ev.residual


def jtest(model: ModelHandle, domain: JtestDomain,
          options: JtestOptions = JtestOptions(),
          rng: Union[np.random.Generator, int, None] = None) -> float:
    """Run the randomized Jacobian check.

    Returns 0.0 when every test point's numerical Jacobian converged to the
    analytic one within ``options.eps_max``; otherwise returns the error
    norm at the final shrink stage of the first failing point (a value
    strictly above the threshold). Deterministic given ``rng``.

    Raises
    ------
    PointOutsideDomain
        If 100 consecutive redraws of a test point kept landing on
        indicator-0 points (the box should sit inside the model's domain).
    DimensionMismatch
        If the box does not match the model's input dimension.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    n = model.dim_in
    if domain.x_min.shape[0] != n:
        raise DimensionMismatch(
            f"box has dimension {domain.x_min.shape[0]}, model expects {n}"
        )
    width = domain.x_max - domain.x_min
    delta0 = width * options.dx

    for _ in range(options.N):
        for attempt in range(100):
            x_k = domain.x_min + width * rng.random(n)
            try:
                eps = _check_point(model, x_k, delta0, options)
            except _OutsideDomain:
                continue
            break
        else:
            raise PointOutsideDomain(
                "could not find an in-domain test point after 100 redraws"
            )
        if eps is not None:
            return eps
    return 0.0


def _check_point(model: ModelHandle, x_k: np.ndarray, delta0: np.ndarray,
                 options: JtestOptions) -> Optional[float]:
    """Test one point. None means it passed; a float is its final error."""
    ev = model.evaluate(x_k)
    if not ev.inside:
        raise _OutsideDomain
    analytic = ev.jacobian
    m, n = analytic.shape

    eps = np.inf
    for l in range(options.l_max + 1):
        delta = delta0 * options.r ** l
        numeric = np.empty((m, n))
        for j in range(n):
            shift = np.zeros(n)
            shift[j] = delta[j]
            f_plus = _eval_residual(model, x_k + shift)
            f_minus = _eval_residual(model, x_k - shift)
            numeric[:, j] = (f_plus - f_minus) / (2.0 * delta[j])
        eps = float(np.linalg.norm((numeric - analytic).ravel(), ord=options.p))
        if eps <= options.eps_max:
            return None
    return eps
