"""Canard-controlled pitch-plane airframe and sliding-mode fin command.

Airframe state: angle of attack alpha, pitch angle, pitch rate q, and the
canard fin deflection delta, which follows the commanded deflection through a
first-order actuator lag.  Lift and pitching moment pass through smooth
bounded shaping functions k(x) = width * tanh(x / width), so the achieved
lateral acceleration is

    a_ach = lift_alpha * k(alpha) + lift_fin * k(alpha + delta)

The tracking error s = a_ach - a_cmd has relative degree one in the fin
command: differentiating a_ach and substituting the airframe equations gives
an affine expression drift + gain * cmd whose gain (lift_fin / tau) * k'
never vanishes because tanh' > 0 everywhere.  The fin command inverts that
expression and adds a horizon-scheduled linear term plus a smoothed
switching term, driving s to zero by the autopilot horizon and holding it
there against bounded command rates.

The switching gain must dominate the command rate |da_cmd/dt|; the simulator
estimates that bound online as a windowed running max.  The discontinuous
sign function is replaced by x / (|x| + eps): at millisecond step sizes the
smooth variant preserves the convergence envelope without integrator-killing
chatter.

All functions accept scalars or equal-shaped numpy arrays (one entry per
agent) and evaluate elementwise.
"""

from dataclasses import dataclass

import numpy as np

from salvosim.timescale import TimeScale, gain_ratio

DEFAULT_FEEDBACK = 6.0       # constant error gain, 1/s
DEFAULT_HORIZON_WEIGHT = 2.0  # weight on the horizon gain schedule (>= 2)
DEFAULT_SMOOTH_EPS = 0.05     # m/s^2, boundary layer of the smoothed sign
DEFAULT_SWITCH_FLOOR = 10.0   # m/s^3, floor for the online rate-bound estimate
SWITCH_MARGIN = 1.2           # switching gain = margin * estimated rate bound


@dataclass(frozen=True)
class AeroModel:
    """Lift/moment coefficients and actuator constants of one airframe.

    ``lift_alpha``/``lift_fin`` are m/s^2 per unit shaping output;
    ``moment_alpha``/``moment_fin`` are 1/s^2 per unit shaping output and
    ``moment_q`` is 1/s.  ``smooth_width`` (rad) bounds the shaping outputs,
    so it must be large enough that the commanded acceleration limit is
    reachable at trim.
    """

    lift_alpha: float
    lift_fin: float
    moment_q: float
    moment_alpha: float
    moment_fin: float
    actuator_tau: float   # s
    fin_limit: float      # rad
    smooth_width: float   # rad

    def __post_init__(self):
        if self.actuator_tau <= 0.0:
            raise ValueError("actuator_tau must be positive")
        if self.lift_fin == 0.0:
            raise ValueError("lift_fin must be nonzero")
        if self.smooth_width <= 0.0:
            raise ValueError("smooth_width must be positive")
        if self.fin_limit <= 0.0:
            raise ValueError("fin_limit must be positive")


@dataclass(frozen=True)
class AutopilotGains:
    """Sliding-mode fin-command parameters.

    ``switching`` of None selects the online rate-bound estimate.
    """

    feedback: float = DEFAULT_FEEDBACK
    horizon_weight: float = DEFAULT_HORIZON_WEIGHT
    switching: float | None = None
    horizon: float = 1.0       # s
    smooth_eps: float = DEFAULT_SMOOTH_EPS
    switch_floor: float = DEFAULT_SWITCH_FLOOR


@dataclass(frozen=True)
class AirframeState:
    alpha: float       # angle of attack, rad
    pitch: float       # rad
    pitch_rate: float  # rad/s
    fin: float         # canard deflection, rad


def validate_autopilot_gains(gains: AutopilotGains, observer_horizon: float | None = None):
    """Return a list of violated conditions (empty when valid)."""
    problems = []
    if not gains.feedback > 0.0:
        problems.append(f"autopilot feedback gain must be positive, got {gains.feedback}")
    if gains.horizon_weight < 2.0:
        problems.append(f"autopilot horizon weight must be >= 2, got {gains.horizon_weight}")
    if not gains.horizon > 0.0:
        problems.append(f"autopilot horizon must be positive, got {gains.horizon}")
    if gains.switching is not None and gains.switching <= 0.0:
        problems.append(f"autopilot switching gain must be positive, got {gains.switching}")
    if not gains.smooth_eps > 0.0:
        problems.append(f"autopilot smoothing width must be positive, got {gains.smooth_eps}")
    return problems


def shaping(x, width):
    """Bounded odd shaping k(x) = width * tanh(x / width); |k| < width."""
    return width * np.tanh(np.asarray(x, dtype=float) / width)


def shaping_prime(x, width):
    """k'(x) = sech^2(x / width); equals 1 at the origin, positive everywhere."""
    return np.cosh(np.asarray(x, dtype=float) / width) ** -2


def achieved_accel(alpha, fin, model: AeroModel):
    """Lateral acceleration produced by the current alpha and fin deflection."""
    w = model.smooth_width
    return model.lift_alpha * shaping(alpha, w) + model.lift_fin * shaping(alpha + fin, w)


def airframe_deriv(alpha, pitch, pitch_rate, fin, cmd, model: AeroModel, speed):
    """Elementwise state derivative (alpha', pitch', q', fin').

    ``cmd`` is clamped to the fin limit before entering the actuator lag.
    """
    w = model.smooth_width
    cmd = np.clip(cmd, -model.fin_limit, model.fin_limit)
    a_ach = achieved_accel(alpha, fin, model)
    alpha_dot = pitch_rate - a_ach / speed
    q_dot = (
        model.moment_q * pitch_rate
        + model.moment_alpha * shaping(alpha, w)
        + model.moment_fin * shaping(alpha + fin, w)
    )
    fin_dot = (cmd - fin) / model.actuator_tau
    return alpha_dot, pitch_rate, q_dot, fin_dot


def accel_rate(alpha, pitch_rate, fin, cmd, model: AeroModel, speed):
    """Time derivative of the achieved acceleration under fin command ``cmd``.

    Affine in the command; used inside the fin-command law and as a test
    probe against finite differences of the achieved acceleration.
    """
    drift, gain = _accel_rate_split(alpha, pitch_rate, fin, model, speed)
    return drift + gain * np.asarray(cmd, dtype=float)


def _accel_rate_split(alpha, pitch_rate, fin, model: AeroModel, speed):
    """(drift, command gain) of the achieved-acceleration rate."""
    w = model.smooth_width
    a_ach = achieved_accel(alpha, fin, model)
    k1p = shaping_prime(alpha, w)
    k2p = shaping_prime(np.asarray(alpha, dtype=float) + fin, w)
    lift_slope = model.lift_alpha * k1p + model.lift_fin * k2p
    gain = model.lift_fin / model.actuator_tau * k2p
    drift = lift_slope * (pitch_rate - a_ach / speed) - gain * np.asarray(fin, dtype=float)
    return drift, gain


def smooth_sign(x, eps):
    """Boundary-layer sign x / (|x| + eps)."""
    x = np.asarray(x, dtype=float)
    return x / (np.abs(x) + eps)


def canard_command(alpha, pitch_rate, fin, accel_cmd, t, gains: AutopilotGains,
                   model: AeroModel, speed, ts: TimeScale, switch_gain=None):
    """Fin deflection command tracking ``accel_cmd``, clamped to the fin limit.

    ``ts`` is the autopilot TimeScale; ``switch_gain`` overrides the
    configured switching gain (the simulator passes its online estimate).
    Total after clamping; the denominator is bounded away from zero by the
    tanh shaping.
    """
    if switch_gain is None:
        switch_gain = gains.switching if gains.switching is not None else gains.switch_floor
    s = achieved_accel(alpha, fin, model) - np.asarray(accel_cmd, dtype=float)
    drift, gain = _accel_rate_split(alpha, pitch_rate, fin, model, speed)
    schedule = gains.feedback - gains.horizon_weight * gain_ratio(t, ts)
    cmd = -(drift + schedule * s + switch_gain * smooth_sign(s, gains.smooth_eps)) / gain
    return np.clip(cmd, -model.fin_limit, model.fin_limit)
