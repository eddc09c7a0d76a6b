"""One sampler transition: propose, test, and back off with dilated kernels.

A transition starts from the undilated Gauss-Newton proposal. Each rejection
contracts the kernel toward the current point (by a fixed factor, or by a
factor chosen from a cubic line-search model of ||f||^2) and proposes again,
up to a stage limit. Acceptance probabilities balance whole trajectories: the
ratio pits the reverse trajectory (from the candidate back through the same
intermediates) against the forward one, with each side carrying its kernel
densities and the complements of its nested acceptance probabilities.

All ratio arithmetic is in log space; log 0 is -inf and propagates to an
acceptance probability of 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import InvalidPolicy
from .gaussian import PrecisionGaussian
from .model import ModelHandle
from .posterior import GaussianPrior, PointState, point_state


@dataclass(frozen=True)
class BackoffPolicy:
    """Back-off configuration.

    ``mode`` is "none", "static" or "dynamic". ``max_steps`` is the number of
    extra proposals after the first one (0 means plain Metropolis).
    ``factor`` is the per-stage dilation in static mode. ``t_lo``/``t_hi``
    clamp the dynamically chosen factor; their midpoint is the fallback when
    the cubic model has no interior minimum.
    """

    mode: str = "none"
    max_steps: int = 0
    factor: float = 0.5
    t_lo: float = 0.05
    t_hi: float = 0.95

    def __post_init__(self):
        if self.mode not in ("none", "static", "dynamic"):
            raise InvalidPolicy(f"unknown back-off mode {self.mode!r}")
        if self.max_steps < 0:
            raise InvalidPolicy("max_steps must be nonnegative")
        if (self.mode == "none") != (self.max_steps == 0):
            raise InvalidPolicy("mode 'none' if and only if max_steps == 0")
        if self.mode == "static" and not 0.0 < self.factor < 1.0:
            raise InvalidPolicy("static dilation factor must lie in (0, 1)")
        if not 0.0 < self.t_lo < self.t_hi < 1.0:
            raise InvalidPolicy("need 0 < t_lo < t_hi < 1")

    @classmethod
    def none(cls) -> "BackoffPolicy":
        return cls(mode="none", max_steps=0)

    @classmethod
    def static(cls, max_steps: int, factor: float) -> "BackoffPolicy":
        if max_steps == 0:
            return cls.none()
        return cls(mode="static", max_steps=max_steps, factor=factor)

    @classmethod
    def dynamic(cls, max_steps: int) -> "BackoffPolicy":
        if max_steps == 0:
            return cls.none()
        return cls(mode="dynamic", max_steps=max_steps)

    @property
    def n_stages(self) -> int:
        return self.max_steps + 1


@dataclass(frozen=True)
class CubicData:
    """Endpoint values and slopes of a function on [0, 1]."""

    phi0: float
    phi1: float
    dphi0: float
    dphi1: float


def cubic_minimizer(c: CubicData) -> Optional[float]:
    """Location in (0, 1) of the Hermite cubic interpolant's local minimum.

    Uses the closed form
    d1 = dphi0 + dphi1 - 3(phi1 - phi0), d2 = sqrt(d1^2 - dphi0*dphi1),
    t = 1 - (dphi1 + d2 - d1) / (dphi1 - dphi0 + 2 d2).
    Returns None when the square root is imaginary or the minimizer is not
    strictly interior. None is an ordinary outcome, not an error.
    """
    d1 = c.dphi0 + c.dphi1 - 3.0 * (c.phi1 - c.phi0)
    disc = d1 * d1 - c.dphi0 * c.dphi1
    if disc < 0.0:
        return None
    d2 = math.sqrt(disc)
    denom = c.dphi1 - c.dphi0 + 2.0 * d2
    if denom == 0.0:
        return None
    t = 1.0 - (c.dphi1 + d2 - d1) / denom
    if not 0.0 < t < 1.0 or not math.isfinite(t):
        return None
    return t


def dynamic_gamma(x_state: PointState, z_state: PointState, policy: BackoffPolicy) -> float:
    """Dilation factor from a cubic model of phi(t) = ||f(x + t(z-x))||^2.

    The endpoint values and slopes come from the two cached evaluations, so
    no model calls are spent. The minimizer is clamped to
    [policy.t_lo, policy.t_hi]; if the cubic has no interior minimum or ``z``
    is outside the domain, the clamp midpoint is returned.
    """
    fallback = 0.5 * (policy.t_lo + policy.t_hi)
    if not z_state.inside:
        return fallback
    direction = z_state.x - x_state.x
    fx, Jx = x_state.eval.residual, x_state.eval.jacobian
    fz, Jz = z_state.eval.residual, z_state.eval.jacobian
    c = CubicData(
        phi0=float(fx @ fx),
        phi1=float(fz @ fz),
        dphi0=2.0 * float(fx @ (Jx @ direction)),
        dphi1=2.0 * float(fz @ (Jz @ direction)),
    )
    t = cubic_minimizer(c)
    if t is None:
        return fallback
    return min(max(t, policy.t_lo), policy.t_hi)


@dataclass(frozen=True)
class Stage:
    """One back-off stage: the kernel used, the point drawn, and the
    cumulative dilation scale of the kernel relative to stage 1."""

    kernel: PrecisionGaussian
    point: PointState
    gamma: float


@dataclass
class BackoffTrajectory:
    """A back-off path: origin, policy, and the ordered proposal stages.

    Stage 1 always carries the undilated Gauss-Newton proposal at the origin
    (gamma = 1); later stages carry strictly shrinking cumulative scales.
    The last stage's point is the candidate under consideration.
    """

    origin: PointState
    policy: BackoffPolicy
    stages: List[Stage] = field(default_factory=list)


def stage_multiplier(policy: BackoffPolicy, origin: PointState, last: PointState) -> float:
    """Per-stage dilation multiplier after ``last`` was rejected."""
    if policy.mode == "static":
        return policy.factor
    return dynamic_gamma(origin, last, policy)


def trajectory(origin: PointState, policy: BackoffPolicy,
               points: List[PointState]) -> BackoffTrajectory:
    """Build the trajectory visiting ``points`` in order from ``origin``.

    Kernels and cumulative scales are a deterministic function of the visit
    order, which is what makes the reverse-trajectory densities in the
    acceptance ratio well defined.
    """
    traj = BackoffTrajectory(origin=origin, policy=policy, stages=[])
    scale = 1.0
    for i, pt in enumerate(points):
        if i == 0:
            kern = origin.proposal
        else:
            scale *= stage_multiplier(policy, origin, points[i - 1])
            kern = origin.proposal.dilate(origin.x, scale)
        traj.stages.append(Stage(kernel=kern, point=pt, gamma=scale))
    return traj


def _log1m_exp(log_a: float) -> float:
    """log(1 - exp(log_a)) for log_a <= 0."""
    if log_a >= 0.0:
        return -np.inf
    if log_a == -np.inf:
        return 0.0
    return float(np.log1p(-np.exp(log_a)))


def _log_accept(traj: BackoffTrajectory, counters: Optional[dict]) -> float:
    """log acceptance probability of the trajectory's final stage."""
    cand = traj.stages[-1].point
    if cand.log_post == -np.inf:
        return -np.inf
    if cand.proposal is None:
        # in-domain point whose Gauss-Newton precision was singular: the
        # reverse kernels cannot be built, so the move is never accepted
        if counters is not None:
            counters["singular_proposals"] = counters.get("singular_proposals", 0) + 1
        return -np.inf

    # forward side: density of reaching the candidate from the origin
    log_fwd = traj.origin.log_post
    k = len(traj.stages)
    for i, st in enumerate(traj.stages):
        log_fwd += st.kernel.log_pdf(st.point.x)
        if i < k - 1:
            prefix = BackoffTrajectory(traj.origin, traj.policy, traj.stages[: i + 1])
            log_fwd += _log1m_exp(_log_accept(prefix, counters))

    # reverse side: from the candidate through the same intermediates,
    # ending at the origin, with kernels anchored at the candidate and
    # dilation scales recomputed by the same rule in the reverse context
    rev_points = [st.point for st in traj.stages[:-1]] + [traj.origin]
    log_rev = cand.log_post
    scale = 1.0
    rev_stages: List[Stage] = []
    for i, pt in enumerate(rev_points):
        if i == 0:
            kern = cand.proposal
        else:
            scale *= stage_multiplier(traj.policy, cand, rev_points[i - 1])
            kern = cand.proposal.dilate(cand.x, scale)
        log_rev += kern.log_pdf(pt.x)
        rev_stages.append(Stage(kernel=kern, point=pt, gamma=scale))
        if i < len(rev_points) - 1:
            rev_prefix = BackoffTrajectory(cand, traj.policy, list(rev_stages))
            log_rev += _log1m_exp(_log_accept(rev_prefix, counters))

    if log_rev == -np.inf:
        # reverse trajectory carries no flow, whatever the forward side
        return -np.inf
    if log_fwd == -np.inf:
        return 0.0
    log_ratio = log_rev - log_fwd
    if math.isnan(log_ratio):
        return -np.inf
    return min(0.0, log_ratio)


def accept_prob(prior: GaussianPrior, traj: BackoffTrajectory,
                counters: Optional[dict] = None) -> float:
    """Acceptance probability in [0, 1] for the trajectory's candidate.

    With a single stage this is the plain Metropolis-Hastings ratio
    min{1, p(z) K(z,x) / (p(x) K(x,z))}; with more stages it is the
    trajectory-balanced ratio described in the module docstring. Every
    density is read from evaluations already cached in the trajectory's
    PointStates, so the computation costs no model calls. ``counters``, if
    given, accumulates a count under "singular_proposals" whenever an
    unbuildable reverse kernel forced an acceptance of 0.
    """
    # prior enters through the cached log_post values and proposals; it is
    # accepted here so call sites read naturally
    del prior
    return float(np.exp(_log_accept(traj, counters)))


def step(current: PointState, policy: BackoffPolicy, prior: GaussianPrior,
         model: ModelHandle, rng: np.random.Generator,
         counters: Optional[dict] = None) -> Tuple[PointState, int]:
    """Advance the chain by one transition.

    Draws a candidate from the undilated proposal; on rejection, dilates and
    redraws until acceptance or until ``policy.max_steps`` back-offs are
    exhausted. Returns the next state and the stage index at which it was
    accepted (1 is the undilated proposal), or ``(current, -1)`` when every
    stage rejected.

    Per stage the generator is consumed in a fixed order: the proposal's
    standard normals first, then one uniform for the accept test.
    """
    n = current.x.shape[0]
    stages: List[Stage] = []
    scale = 1.0
    for stage_idx in range(1, policy.n_stages + 1):
        if stage_idx == 1:
            kern = current.proposal
        else:
            scale *= stage_multiplier(policy, current, stages[-1].point)
            kern = current.proposal.dilate(current.x, scale)
        z = kern.sample(rng.standard_normal(n))
        z_state = point_state(prior, model, z)
        stages.append(Stage(kernel=kern, point=z_state, gamma=scale))
        traj = BackoffTrajectory(current, policy, list(stages))
        a = accept_prob(prior, traj, counters)
        if rng.random() < a:
            return z_state, stage_idx
    return current, -1
