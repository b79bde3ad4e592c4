"""Time-varying gain schedule that forces convergence by a chosen horizon.

The taper function starts at -horizon, rises monotonically in magnitude
toward zero as t approaches the horizon, and equals 1 afterwards.  Feedback
laws use the ratio rate/value, which is negative on [0, horizon) and diverges
as the horizon is approached; subtracting it from a constant gain produces a
total gain that grows without bound, which is what drives the tracked error
to zero by the horizon regardless of its initial size.

The raw ratio is unbounded, so it is clamped in magnitude.  The clamp is the
one numerical concession: near the horizon the true error shrinks faster
than the gain grows, so at a finite step size the product is noise-dominated
and an uncapped gain would destabilize explicit integration.  The default
cap of 1e4 engages only in roughly the last 3/cap seconds before the horizon
(the raw ratio behaves like -3/(horizon - t) there).
"""

import math
from dataclasses import dataclass
from functools import lru_cache

DEFAULT_GAIN_CLAMP = 1.0e4


@dataclass(frozen=True)
class TimeScale:
    """Convergence horizon (s) and magnitude cap for the rate/value ratio."""

    horizon: float
    gain_clamp: float = DEFAULT_GAIN_CLAMP

    def __post_init__(self):
        if self.horizon <= 0.0:
            raise ValueError("horizon must be positive")
        if self.gain_clamp < 1.0:
            raise ValueError("gain_clamp must be at least 1")


def taper(t: float, ts: TimeScale) -> float:
    """Scaling value: (h/pi)*sin(pi*t/h) + t - h before the horizon, 1 after.

    Negative on [0, horizon) with monotonically shrinking magnitude.
    """
    h = ts.horizon
    if t >= h:
        return 1.0
    return (h / math.pi) * math.sin(math.pi * t / h) + t - h


def taper_rate(t: float, ts: TimeScale) -> float:
    """Time derivative of the taper: cos(pi*t/h) + 1 before the horizon, 0 after.

    Lies in [0, 2] and vanishes exactly at and beyond the horizon.
    """
    h = ts.horizon
    if t >= h:
        return 0.0
    return math.cos(math.pi * t / h) + 1.0


def gain_ratio(t: float, ts: TimeScale) -> float:
    """Clamped rate/value ratio of the taper.

    Nonpositive everywhere, exactly zero for t >= horizon, and never below
    -gain_clamp.
    """
    if t >= ts.horizon:
        return 0.0
    raw = taper_rate(t, ts) / taper(t, ts)
    return max(raw, -ts.gain_clamp)


@lru_cache(maxsize=None)
def _clamp_onset(horizon: float, gain_clamp: float) -> float:
    """First time at which |rate/value| reaches the clamp.

    |rate/value| grows monotonically from 2/horizon toward infinity on
    [0, horizon), so a bisection on the log-ratio is exact enough; the onset
    sits roughly 3/gain_clamp before the horizon.
    """
    ts = TimeScale(horizon, gain_clamp)
    if 2.0 / horizon >= gain_clamp:
        return 0.0
    lo, hi = 0.0, horizon * (1.0 - 1e-15)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if -gain_ratio_raw(mid, ts) >= gain_clamp:
            hi = mid
        else:
            lo = mid
    return hi


def gain_ratio_raw(t: float, ts: TimeScale) -> float:
    """Unclamped rate/value ratio (diverges toward the horizon)."""
    if t >= ts.horizon:
        return 0.0
    return taper_rate(t, ts) / taper(t, ts)


def gain_weight_integral(t0: float, t1: float, ts: TimeScale) -> float:
    """Integral of |gain_ratio| over [t0, t1], exactly.

    On the unclamped stretch the integrand is -d/dt log|taper|, so the
    integral telescopes to log|taper(t0)| - log|taper(t1)|; on the clamped
    stretch it is the constant clamp, and it vanishes past the horizon.
    Linear feedback driven by the schedule contracts by exp(-gain *
    this integral) per step, which is what the exact estimate propagator in
    the simulator consumes.
    """
    if t1 <= t0:
        return 0.0
    h = ts.horizon
    onset = _clamp_onset(h, ts.gain_clamp)
    total = 0.0
    a, b = t0, min(t1, onset)
    if b > a and a < onset:
        total += math.log(abs(taper(a, ts))) - math.log(abs(taper(b, ts)))
    a, b = max(t0, onset), min(t1, h)
    if b > a:
        total += ts.gain_clamp * (b - a)
    return total
