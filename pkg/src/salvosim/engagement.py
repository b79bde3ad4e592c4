"""Planar interceptor/target kinematics and the heading-corrected time-to-go.

State per interceptor: inertial position (x, y), flight-path angle gamma, and
a constant speed V.  The engagement geometry against a point target gives the
range r, the line-of-sight angle theta, and the lead angle sigma = gamma -
theta (wrapped to (-pi, pi]).  Along-LOS and transverse velocity components
follow as V_r = -V cos(sigma) and V_theta = -V sin(sigma), with LOS rate
theta_dot = V_theta / r.

Time-to-go uses the estimate r/V * (1 + sin^2(sigma)/kappa) with kappa =
4*nav_gain - 2, which stays accurate for large lead angles instead of only
near the collision course.  All functions work equally on true target
positions and on per-agent estimates of it.

Angles are radians and positions meters throughout; degrees and kilometers
exist only at the scenario-file boundary.
"""

import math
from dataclasses import dataclass

import numpy as np


class ZeroRange(ValueError):
    """Geometry or command requested below the interception radius."""


def wrap_angle(angle):
    """Wrap an angle (scalar or array) to (-pi, pi]."""
    wrapped = np.fmod(np.asarray(angle) + math.pi, 2.0 * math.pi)
    wrapped = np.where(wrapped <= 0.0, wrapped + 2.0 * math.pi, wrapped) - math.pi
    if np.ndim(angle) == 0:
        return float(wrapped)
    return wrapped


@dataclass(frozen=True)
class Interceptor:
    """Kinematic state and guidance constants of one interceptor.

    ``nav_gain`` must exceed 2 so that kappa = 4*nav_gain - 2 > 6, which
    keeps the time-to-go correction term below r/(6V).
    """

    x: float
    y: float
    heading: float  # flight-path angle, rad
    speed: float    # m/s, constant
    nav_gain: float

    def __post_init__(self):
        if self.speed <= 0.0:
            raise ValueError("speed must be positive")
        if self.nav_gain <= 2.0:
            raise ValueError("nav_gain must exceed 2")

    @property
    def kappa(self) -> float:
        return 4.0 * self.nav_gain - 2.0


@dataclass(frozen=True)
class Geometry:
    """Relative geometry of one interceptor against a (true or estimated)
    target position."""

    r: float            # range, m
    los_angle: float    # theta, rad
    lead_angle: float   # sigma = heading - theta, rad, in (-pi, pi]
    closing_rate: float     # V_r = -V cos(sigma), m/s (negative when closing)
    transverse_rate: float  # V_theta = -V sin(sigma), m/s
    los_rate: float         # theta_dot = V_theta / r, rad/s


def geometry(agent: Interceptor, target_xy, min_range: float = 1e-9) -> Geometry:
    """Engagement geometry of ``agent`` against ``target_xy`` = (x, y) m.

    Raises ZeroRange when the range falls below ``min_range``.
    """
    dx = target_xy[0] - agent.x
    dy = target_xy[1] - agent.y
    r = math.hypot(dx, dy)
    if r < min_range:
        raise ZeroRange(f"range {r:.3e} m below {min_range:.3e} m")
    theta = math.atan2(dy, dx)
    sigma = wrap_angle(agent.heading - theta)
    v_r = -agent.speed * math.cos(sigma)
    v_t = -agent.speed * math.sin(sigma)
    return Geometry(
        r=r,
        los_angle=theta,
        lead_angle=sigma,
        closing_rate=v_r,
        transverse_rate=v_t,
        los_rate=v_t / r,
    )


def time_to_go(geom: Geometry, agent: Interceptor) -> float:
    """Heading-corrected time-to-go estimate, seconds.

    Always at least r/V, with equality exactly on a collision course.
    """
    s = math.sin(geom.lead_angle)
    return geom.r / agent.speed * (1.0 + s * s / agent.kappa)


def tgo_rate(geom: Geometry, agent: Interceptor, accel: float) -> float:
    """Time derivative of the time-to-go estimate along the kinematic flow.

    -1 on a collision course; the lateral acceleration enters through the
    last term, which is what gives the guidance law direct authority over
    the interception time.
    """
    sig = geom.lead_angle
    k = agent.kappa
    sin_s, cos_s = math.sin(sig), math.cos(sig)
    sin_2s = math.sin(2.0 * sig)
    return (
        -cos_s
        - sin_s * sin_s * cos_s / k
        + sin_2s * sin_s / k
        + geom.r * accel * sin_2s / (k * agent.speed**2)
    )


def kinematics_deriv(agent: Interceptor, accel: float):
    """(x_dot, y_dot, heading_dot) under lateral acceleration ``accel``."""
    return (
        agent.speed * math.cos(agent.heading),
        agent.speed * math.sin(agent.heading),
        accel / agent.speed,
    )


def geometry_arrays(x, y, heading, speed, target_xy, min_range: float = 1e-9):
    """Vectorized geometry across agents: returns (r, theta, sigma, los_rate).

    ``target_xy`` is either one position (2,) or one per agent (N, 2), the
    latter used when each agent works from its own target estimate.  Ranges
    are floored at ``min_range`` inside the LOS-rate division only; the
    returned r is the raw range.
    """
    target_xy = np.asarray(target_xy, dtype=float)
    if target_xy.ndim == 1:
        dx = target_xy[0] - x
        dy = target_xy[1] - y
    else:
        dx = target_xy[:, 0] - x
        dy = target_xy[:, 1] - y
    r = np.hypot(dx, dy)
    theta = np.arctan2(dy, dx)
    sigma = wrap_angle(heading - theta)
    los_rate = -speed * np.sin(sigma) / np.maximum(r, min_range)
    return r, theta, sigma, los_rate


def time_to_go_arrays(r, sigma, speed, kappa):
    """Vectorized time-to-go across agents."""
    return r / speed * (1.0 + np.sin(sigma) ** 2 / kappa)
