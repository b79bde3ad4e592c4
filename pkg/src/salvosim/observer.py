"""Distributed target-position observer with a hard convergence horizon.

Every interceptor, seeker-equipped or not, integrates an estimate p_hat of
the target position.  The innovation of agent i mixes a direct measurement
term (present only when the sensing graph has a target edge to i and the
seeker works) with disagreement terms against its in-neighbors:

    eps_i = a_i0 * (p_hat_i - p) + sum_j a_ij * (p_hat_i - p_hat_j)

Stacked over agents this equals the reduced follower Laplacian applied to
the estimation errors, so the error dynamics are linear with a shared
time-varying gain:

    p_hat_dot_i = -(alpha - beta * gain_ratio(t)) * eps_i

gain_ratio is nonpositive and diverges toward the horizon, which collapses
the error by the horizon for any initial estimates; afterwards the dynamics
reduce to plain exponential decay at rate alpha.  The gain floor on beta
comes from the follower spectrum: beta >= 2 * max_weight / min_eig_sym.
"""

from dataclasses import dataclass

import numpy as np

from salvosim.graph import DirectedGraph, FollowerSpectrum
from salvosim.timescale import TimeScale, gain_ratio

DEFAULT_ALPHA = 2.0
AUTO_BETA_MARGIN = 1.05  # auto-derived beta sits just above the floor


@dataclass(frozen=True)
class ObserverGains:
    """Constant gain ``alpha`` > 0 and horizon-schedule weight ``beta``."""

    alpha: float
    beta: float
    horizon: float  # s


def beta_floor(spectrum: FollowerSpectrum) -> float:
    """Smallest beta for which the horizon guarantee holds on this graph."""
    return 2.0 * spectrum.max_weight / spectrum.min_eig_sym


def auto_gains(spectrum: FollowerSpectrum, horizon: float,
               alpha: float = DEFAULT_ALPHA) -> ObserverGains:
    return ObserverGains(alpha=alpha, beta=AUTO_BETA_MARGIN * beta_floor(spectrum), horizon=horizon)


def validate_observer_gains(gains: ObserverGains, spectrum: FollowerSpectrum):
    """Return a list of violated gain conditions (empty when valid)."""
    problems = []
    if not gains.alpha > 0.0:
        problems.append(f"observer alpha must be positive, got {gains.alpha}")
    floor = beta_floor(spectrum)
    if gains.beta < floor:
        problems.append(
            f"observer beta {gains.beta:.6g} below floor {floor:.6g} "
            f"(2 * max weight / min eig of symmetrized form)"
        )
    if not gains.horizon > 0.0:
        problems.append(f"observer horizon must be positive, got {gains.horizon}")
    return problems


def innovation(agent: int, estimates, target_xy, seeker_ok, sensing: DirectedGraph):
    """Innovation 2-vector for one agent.

    ``estimates`` is an (N, 2) array of all agents' target-position estimates
    (agent k at row k); ``sensing`` is the full graph with the target as node
    0 and agent k as node k+1.  The measurement term is active only when the
    edge (0, agent+1) exists and ``seeker_ok[agent]`` is true.
    """
    estimates = np.asarray(estimates, dtype=float)
    target_xy = np.asarray(target_xy, dtype=float)
    own = estimates[agent]
    eps = np.zeros(2)
    if (0, agent + 1) in sensing.edges and seeker_ok[agent]:
        eps += own - target_xy
    for (u, v) in sensing.edges:
        if v == agent + 1 and u != 0:
            eps += own - estimates[u - 1]
    return eps


def innovation_all(estimates, target_xy, effective_follower_laplacian):
    """All innovations at once: L_eff @ (estimates - target)."""
    errors = np.asarray(estimates, dtype=float) - np.asarray(target_xy, dtype=float)
    return effective_follower_laplacian @ errors


def observer_deriv(eps, t: float, gains: ObserverGains, ts: TimeScale):
    """Estimate derivative -(alpha - beta * gain_ratio(t)) * eps.

    The bracketed gain is always >= alpha because gain_ratio <= 0.
    """
    return -(gains.alpha - gains.beta * gain_ratio(t, ts)) * np.asarray(eps, dtype=float)
