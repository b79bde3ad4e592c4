"""Cooperative time-to-go consensus guidance (outer loop).

Each interceptor broadcasts its estimated time-to-go over the actuation
graph.  Because the Laplacian annihilates the all-ones direction, only
pairwise disagreements matter and no common interception time ever has to be
agreed on explicitly; the team converges on one dynamically.  The consensus
correction for agent i is

    u_c_i = (-zeta + eta * gain_ratio(t)) * sum_j L_ij * tgo_j

with zeta > 0 and eta floored by 1 / fiedler(mirror of actuation graph).
The lateral-acceleration command inverts the time-to-go dynamics so that the
closed loop satisfies d(tgo_i)/dt + 1 = u_c_i exactly (signed variant):

    a = V*theta_dot + V^2*kappa*(cos(sigma) - 1)/(r*S)
        + V^2*sin(sigma)/(2r) + V^2*kappa*u_c/(r*S)

where S = sin(2*sigma).  The absolute variant uses |S|, which keeps the
geometric terms pulling the lead angle toward zero over the full heading
circle and is the default.  |S| is floored to keep the command bounded when
the lead angle crosses 0 or +-pi/2; the command is then saturated to the
configured lateral-acceleration limit.

All geometry entering the command is the agent's own estimated geometry,
also before the observer has converged (the transient acts as a bounded
disturbance that the consensus schedule absorbs).
"""

import math
from dataclasses import dataclass

import numpy as np

from salvosim.engagement import Geometry, Interceptor, ZeroRange
from salvosim.graph import DirectedGraph, mirror_fiedler
from salvosim.timescale import TimeScale, gain_ratio

GRAVITY = 9.81  # m/s^2, used for the g-unit acceleration limit

DEFAULT_ZETA = 0.5
AUTO_ETA_MARGIN = 1.05
DEFAULT_DENOM_FLOOR = 1e-3  # floor on |sin(2 sigma)| in command denominators
DEFAULT_RATE_CAP = 2.0      # cap on the demanded time-to-go rate correction


@dataclass(frozen=True)
class GuidanceGains:
    """Consensus and command parameters for the outer loop.

    ``rate_cap`` bounds the consensus correction, i.e. the demanded
    d(tgo)/dt adjustment.  The interception time can physically change no
    faster than roughly 1 + |B| * accel_limit per unit time, so an uncapped
    demand under gross disagreement leaves the acceleration command
    saturated for entire heading revolutions and the team windmills without
    converging; 2.0 equals the stretch-rate ceiling reached when flying
    straight away from the target.  The cap never binds once disagreement is
    small, so horizon convergence for moderate spreads is unaffected.
    """

    zeta: float
    eta: float
    horizon: float          # consensus horizon, s; must exceed the observer's
    accel_limit: float      # m/s^2
    denom_floor: float = DEFAULT_DENOM_FLOOR
    absolute_denominator: bool = True
    rate_cap: float = DEFAULT_RATE_CAP


def eta_floor(actuation: DirectedGraph) -> float:
    """Smallest eta for which the consensus horizon guarantee holds.

    A single-node graph needs no consensus, so the floor is 0 there.
    """
    if actuation.node_count < 2:
        return 0.0
    return 1.0 / mirror_fiedler(actuation)


def auto_gains(actuation: DirectedGraph, horizon: float, accel_limit: float,
               zeta: float = DEFAULT_ZETA, denom_floor: float = DEFAULT_DENOM_FLOOR,
               absolute_denominator: bool = True,
               rate_cap: float = DEFAULT_RATE_CAP) -> GuidanceGains:
    return GuidanceGains(
        zeta=zeta,
        eta=AUTO_ETA_MARGIN * max(eta_floor(actuation), 1e-12),
        horizon=horizon,
        accel_limit=accel_limit,
        denom_floor=denom_floor,
        absolute_denominator=absolute_denominator,
        rate_cap=rate_cap,
    )


def validate_guidance_gains(gains: GuidanceGains, actuation: DirectedGraph,
                            observer_horizon: float):
    """Return a list of violated conditions (empty when valid)."""
    problems = []
    if not gains.zeta > 0.0:
        problems.append(f"guidance zeta must be positive, got {gains.zeta}")
    floor = eta_floor(actuation)
    if gains.eta < floor:
        problems.append(
            f"guidance eta {gains.eta:.6g} below floor {floor:.6g} "
            f"(reciprocal mirror-graph Fiedler value of the actuation graph)"
        )
    if not gains.horizon > observer_horizon:
        problems.append(
            f"consensus horizon {gains.horizon} must exceed observer horizon {observer_horizon}"
        )
    if not gains.accel_limit > 0.0:
        problems.append(f"acceleration limit must be positive, got {gains.accel_limit}")
    if not gains.denom_floor > 0.0:
        problems.append(f"denominator floor must be positive, got {gains.denom_floor}")
    if not gains.rate_cap > 0.0:
        problems.append(f"rate cap must be positive, got {gains.rate_cap}")
    return problems


def consensus_term(tgo, t: float, gains: GuidanceGains, actuation_laplacian,
                   ts: TimeScale) -> np.ndarray:
    """Per-agent consensus correction u_c, capped at +-rate_cap.

    Invariant to adding a common constant to every time-to-go (Laplacian rows
    sum to zero), zero at consensus, and identically zero contribution for
    t >= horizon once agreement holds.
    """
    disagreement = np.asarray(actuation_laplacian, dtype=float) @ np.asarray(tgo, dtype=float)
    raw = (-gains.zeta + gains.eta * gain_ratio(t, ts)) * disagreement
    return np.clip(raw, -gains.rate_cap, gains.rate_cap)


def command_core(r, sigma, los_rate, speed, kappa, u_c, gains: GuidanceGains):
    """Vectorized command evaluation; callers guarantee r > 0.

    Both variants share the collision-course behavior for lead angles in
    (0, pi/2), where sin(2 sigma) > 0 makes them identical.  Outside that
    quadrant they differ:

    * signed keeps the raw sin(2 sigma) denominator in both correction
      terms, which linearizes the time-to-go error exactly everywhere but
      leaves a stable fly-away equilibrium at a lead angle of +-pi (the
      geometric term reverses there and holds the agent pointed away).

    * absolute (default) uses sign(sigma) * |sin(2 sigma)| in the geometric
      term, making it odd in the lead angle so that zero lead is attractive
      over the whole circle, and keeps the signed denominator in the
      consensus term so the correction never acts against agreement.  The
      closed-loop time-to-go error rate is then u_c for |sigma| < pi/2 and
      2 * (1 - cos(sigma)) + u_c beyond, a bounded transient stretch while
      the geometric term hauls the lead angle back into the homing quadrant.

    Denominators are floored in magnitude (sign preserved) and the result is
    saturated to the configured acceleration limit.
    """
    r = np.asarray(r, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    s2 = np.sin(2.0 * sigma)
    floor = gains.denom_floor
    sign_s2 = np.where(s2 != 0.0, np.sign(s2), np.where(sigma >= 0.0, 1.0, -1.0))
    denom_consensus = sign_s2 * np.maximum(np.abs(s2), floor)
    if gains.absolute_denominator:
        sign_sigma = np.where(sigma >= 0.0, 1.0, -1.0)
        denom_geo = sign_sigma * np.maximum(np.abs(s2), floor)
    else:
        denom_geo = denom_consensus
    v2 = np.asarray(speed, dtype=float) ** 2
    accel = (
        speed * los_rate
        + v2 * kappa * (np.cos(sigma) - 1.0) / (r * denom_geo)
        + v2 * np.sin(sigma) / (2.0 * r)
        + v2 * kappa * u_c / (r * denom_consensus)
    )
    return np.clip(accel, -gains.accel_limit, gains.accel_limit)


def guidance_command(est_geom: Geometry, agent: Interceptor, u_c: float,
                     gains: GuidanceGains, min_range: float = 1.0) -> float:
    """Saturated lateral-acceleration command from estimated geometry.

    Raises ZeroRange if the estimated range is below ``min_range`` (the
    interception radius); by then the agent should already be flagged
    intercepted.
    """
    if est_geom.r < min_range:
        raise ZeroRange(f"estimated range {est_geom.r:.3e} m below {min_range:.3e} m")
    return float(command_core(est_geom.r, est_geom.lead_angle, est_geom.los_rate,
                              agent.speed, agent.kappa, u_c, gains))


def fb_decomposition(geom: Geometry, agent: Interceptor):
    """Drift/control split (F, B) of the time-to-go error dynamics.

    Satisfies F + B * accel == tgo_rate(geom, agent, accel) + 1 identically;
    B vanishes at lead angles 0 and +-pi/2 where the command loses direct
    authority over the interception time.
    """
    sigma = geom.lead_angle
    k = agent.kappa
    sin_s, cos_s = math.sin(sigma), math.cos(sigma)
    sin_2s = math.sin(2.0 * sigma)
    drift = 1.0 - cos_s - sin_s * sin_s * cos_s / k + sin_2s * sin_s / k
    control = geom.r * sin_2s / (k * agent.speed**2)
    return drift, control
