"""Log-posterior evaluation and the Gauss-Newton proposal distribution.

The target density is indicator(x) * prior(x) * exp(-||f(x)||^2 / 2) up to a
global constant. Linearizing f about the current point turns the target into
a Gaussian whose precision is H + J'J; completing the square gives its mean.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DimensionMismatch, NotPositiveDefinite, NotPSD, SingularProposal
from .gaussian import PrecisionGaussian
from .model import ModelEval, ModelHandle


@dataclass(frozen=True)
class GaussianPrior:
    """Gaussian prior with mean ``mean`` and precision matrix ``precision``.

    A zero precision matrix is the flat (improper) prior.
    """

    mean: np.ndarray
    precision: np.ndarray

    @classmethod
    def create(cls, mean, precision) -> "GaussianPrior":
        """Validate symmetry and positive semidefiniteness, then build."""
        mean = np.asarray(mean, dtype=float).reshape(-1)
        precision = np.asarray(precision, dtype=float)
        n = mean.shape[0]
        if precision.shape != (n, n):
            raise DimensionMismatch(
                f"prior precision shape {precision.shape}, expected ({n}, {n})"
            )
        if not np.allclose(precision, precision.T, rtol=1e-10, atol=1e-10):
            raise NotPSD("prior precision is not symmetric")
        precision = 0.5 * (precision + precision.T)
        if n > 0 and float(np.linalg.eigvalsh(precision).min()) < -1e-10:
            raise NotPSD("prior precision has a negative eigenvalue")
        return cls(mean=mean, precision=precision)

    @classmethod
    def flat(cls, n_or_mean) -> "GaussianPrior":
        """Flat prior: zero precision about an arbitrary mean."""
        if np.ndim(n_or_mean) == 0:
            mean = np.zeros(int(n_or_mean))
        else:
            mean = np.asarray(n_or_mean, dtype=float).reshape(-1)
        return cls(mean=mean, precision=np.zeros((mean.shape[0], mean.shape[0])))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def log_posterior(prior: GaussianPrior, ev: ModelEval, x) -> float:
    """Unnormalized log target at ``x`` given its model evaluation.

    Returns -inf outside the domain; otherwise
    -(x-m)'H(x-m)/2 - ||f(x)||^2/2. The normalization constant is omitted
    (it cancels in every ratio the sampler forms).
    """
    if not ev.inside:
        return -np.inf
    x = np.asarray(x, dtype=float).reshape(-1)
    d = x - prior.mean
    return -0.5 * float(d @ prior.precision @ d) - 0.5 * float(ev.residual @ ev.residual)


def gn_proposal(prior: GaussianPrior, ev: ModelEval, x) -> PrecisionGaussian:
    """Gauss-Newton proposal distribution anchored at ``x``.

    Precision P = H + J'J and mean mu = P^-1 (H m - J'f + J'J x), from
    completing the square in the linearized target. Requires an in-domain
    evaluation.

    Raises
    ------
    SingularProposal
        If H + J'J is not positive definite.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    J = ev.jacobian
    f = ev.residual
    JtJ = J.T @ J
    P = prior.precision + JtJ
    P = 0.5 * (P + P.T)
    try:
        shell = PrecisionGaussian.from_precision(np.zeros_like(x), P)
    except NotPositiveDefinite as exc:
        raise SingularProposal(
            "Gauss-Newton precision H + J'J is not positive definite"
        ) from exc
    rhs = prior.precision @ prior.mean - J.T @ f + JtJ @ x
    half = solve_triangular(shell.chol, rhs, lower=True, check_finite=False)
    mu = solve_triangular(shell.chol, half, lower=True, trans="T", check_finite=False)
    return PrecisionGaussian(mean=mu, precision=shell.precision,
                             chol=shell.chol, log_norm=shell.log_norm)


@dataclass
class PointState:
    """Everything the sampler needs about one point, from one model call.

    ``proposal`` is the Gauss-Newton proposal anchored here; it is None when
    the point is outside the domain, or when the proposal precision was
    singular (``proposal_failed`` distinguishes the two).
    """

    x: np.ndarray
    eval: ModelEval
    log_post: float
    proposal: Optional[PrecisionGaussian]
    proposal_failed: bool = False

    @property
    def inside(self) -> bool:
        return self.eval.inside


def point_state_from_eval(prior: GaussianPrior, x, ev: ModelEval) -> PointState:
    """Assemble a PointState from a cached evaluation (no model call)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    lp = log_posterior(prior, ev, x)
    proposal = None
    failed = False
    if ev.inside:
        try:
            proposal = gn_proposal(prior, ev, x)
        except SingularProposal:
            failed = True
    return PointState(x=x, eval=ev, log_post=lp, proposal=proposal, proposal_failed=failed)


def point_state(prior: GaussianPrior, model: ModelHandle, x) -> PointState:
    """Evaluate the model once at ``x`` and assemble the PointState."""
    x = np.asarray(x, dtype=float).reshape(-1)
    return point_state_from_eval(prior, x, model.evaluate(x))
