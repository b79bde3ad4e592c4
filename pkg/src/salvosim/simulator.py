"""Fixed-step integration of the coupled observer/guidance/airframe system.

One run is single-threaded and fully deterministic: the same configuration
produces bitwise-identical traces.  Positions, headings, and airframe states
advance with classical fourth-order Runge-Kutta; the guidance command, the
consensus correction, and the fin command are computed once per step at the
step boundary and held constant across the four stages (zero-order hold, as
in a digital control loop).

The target-estimate block is the exception: its dynamics are linear with a
shared scalar time-varying gain, and that gain is scheduled to grow beyond
1/dt near the observer horizon, where any explicit stepper is unstable (with
the default clamp the schedule crosses the RK4 stability boundary roughly
beta * lambda_max * 3 * dt / 2.8 seconds before the horizon and the estimate
error then grows by orders of magnitude instead of vanishing).  Because the
gain multiplies a fixed matrix, the exact one-step propagator
expm(-integral(gain) * L) is available in closed form, so the estimates are
advanced with it: unconditionally stable, exact for the block, and cheap via
an eigendecomposition that only changes when the topology does.

Failure events (agent loss, seeker loss, link loss) apply at the first step
boundary at or after their scheduled time.  After every failure event the
surviving topology is revalidated: the run aborts with InvalidAfterEvent if
the target no longer roots a spanning tree of the effective sensing graph or
the actuation graph loses strong connectivity.  Interception removals prune
the same graphs but are not treated as faults; gain floors are recomputed
whenever the pruned graphs still support them.

Interception is declared when the true range drops below ``r_hit`` or starts
increasing inside ``r_near``; the intercept time and miss distance are then
refined by quadratic interpolation of the range over the bracketing steps,
giving sub-step resolution at the trace's fixed dt.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from salvosim import autopilot as ap
from salvosim import engagement as eng
from salvosim import guidance as gd
from salvosim import observer as ob
from salvosim.graph import (
    DirectedGraph,
    follower_spectrum,
    has_spanning_tree_from,
    is_strongly_connected,
    laplacian,
    leader_partition,
)
from salvosim.timescale import TimeScale, gain_weight_integral

R_HIT = 1.0    # m, interception radius
R_NEAR = 50.0  # m, closest-approach watch radius
RAD2DEG = 180.0 / math.pi

_trapz = getattr(np, "trapezoid", None) or np.trapz

# Per-agent trace fields in CSV column order, with file units.
TRACE_FIELDS = (
    ("x", "m"), ("y", "m"), ("gamma", "deg"), ("r", "m"), ("theta", "deg"),
    ("sigma", "deg"), ("tgo", "s"), ("acmd", "mps2"), ("aach", "mps2"),
    ("alpha", "deg"), ("q", "degps"), ("delta", "deg"),
    ("xtgt_est", "m"), ("ytgt_est", "m"), ("esterr", "m"),
    ("strack", "mps2"), ("uc", "1"),
)
_DEG_FIELDS = {"gamma", "theta", "sigma", "alpha", "q", "delta"}


class NonFiniteState(RuntimeError):
    """A state component left the finite range during integration."""


class InvalidAfterEvent(RuntimeError):
    """A failure event broke the graph requirements; the run cannot continue."""


@dataclass(frozen=True)
class Event:
    """Scheduled failure.  ``agent`` is a 0-based interceptor index; link
    failures carry the graph name and the edge in that graph's own node
    numbering (sensing: 0 = target; actuation: 0 = first interceptor)."""

    time: float
    kind: str                      # agent_fail | seeker_fail | link_fail
    agent: int | None = None
    graph: str | None = None       # sensing | actuation
    edge: tuple | None = None


@dataclass
class Metrics:
    """Aggregate scores of one run.  Per-agent entries are NaN when the
    agent never intercepted (failed agents, or t_max reached first)."""

    intercept_time: np.ndarray
    miss_distance: np.ndarray
    spread: float
    consensus_time: float
    observer_conv_time: float
    final_time: float
    control_effort: np.ndarray | None = None
    notes: list = field(default_factory=list)

    @property
    def control_effort_total(self):
        if self.control_effort is None:
            return None
        return float(np.nansum(self.control_effort))

    def as_flat_dict(self):
        out = {}
        n = len(self.intercept_time)
        for i in range(n):
            out[f"agent{i + 1}_intercept_time_s"] = _none_if_nan(self.intercept_time[i])
            out[f"agent{i + 1}_miss_m"] = _none_if_nan(self.miss_distance[i])
        out["spread_s"] = _none_if_nan(self.spread)
        out["consensus_time_s"] = _none_if_nan(self.consensus_time)
        out["observer_conv_time_s"] = _none_if_nan(self.observer_conv_time)
        out["final_time_s"] = self.final_time
        if self.control_effort is not None:
            for i in range(n):
                out[f"agent{i + 1}_control_effort_deg2s"] = _none_if_nan(self.control_effort[i])
            out["control_effort_total_deg2s"] = self.control_effort_total
        if self.notes:
            out["notes"] = "; ".join(self.notes)
        return out


def _none_if_nan(x):
    x = float(x)
    return None if math.isnan(x) else x


class Trace:
    """Uniform-dt record of every agent's state, commands, and estimates.

    Arrays are SI internally (angles rad); the CSV boundary converts angle
    columns to degrees.  Rows of agents that have intercepted or failed
    repeat their last live values.
    """

    def __init__(self, t, fields, dt):
        self.t = t
        self.dt = dt
        self.n_agents = fields["x"].shape[1]
        for name, _unit in TRACE_FIELDS:
            setattr(self, name, fields[name])

    def __len__(self):
        return len(self.t)

    def header(self):
        cols = ["t_s"]
        for i in range(self.n_agents):
            cols.extend(f"i{i + 1}_{name}_{unit}" for name, unit in TRACE_FIELDS)
        return cols

    def to_matrix(self):
        cols = [self.t]
        for i in range(self.n_agents):
            for name, _unit in TRACE_FIELDS:
                col = getattr(self, name)[:, i]
                cols.append(col * RAD2DEG if name in _DEG_FIELDS else col)
        return np.column_stack(cols)

    def to_csv(self, path):
        matrix = self.to_matrix()
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(self.header()) + "\n")
            np.savetxt(fh, matrix, fmt="%.10g", delimiter=",")

    @classmethod
    def from_csv(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
            matrix = np.loadtxt(fh, delimiter=",", ndmin=2)
        per_agent = len(TRACE_FIELDS)
        if (len(header) - 1) % per_agent:
            raise ValueError(f"{path}: unexpected column count {len(header)}")
        n = (len(header) - 1) // per_agent
        t = matrix[:, 0]
        fields = {}
        for j, (name, _unit) in enumerate(TRACE_FIELDS):
            block = matrix[:, [1 + i * per_agent + j for i in range(n)]]
            fields[name] = block / RAD2DEG if name in _DEG_FIELDS else block
        dt = float(t[1] - t[0]) if len(t) > 1 else 0.0
        return cls(t, fields, dt)


class Simulation:
    """One engagement run.  Construct from a ScenarioConfig, then ``run()``,
    or drive ``step()`` manually for unit-level checks."""

    def __init__(self, cfg, dt=None):
        self.cfg = cfg
        self.dt = float(dt if dt is not None else cfg.dt)
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        n = cfg.n_agents
        self.n = n
        self.target = np.asarray(cfg.target_m, dtype=float)
        self.speed = np.asarray(cfg.speed, dtype=float)
        self.kappa = 4.0 * np.asarray(cfg.nav_gain, dtype=float) - 2.0
        self.dynamic = cfg.autopilot_mode == "dynamic"
        self.model = cfg.airframe
        self.ap_gains = cfg.autopilot_gains

        self.ts_obs = TimeScale(cfg.observer_horizon, cfg.gain_clamp)
        self.ts_cons = TimeScale(cfg.consensus_horizon, cfg.gain_clamp)
        self.ts_auto = TimeScale(cfg.autopilot_horizon, cfg.gain_clamp)

        # Mutable topology state
        self.sensing_base = cfg.sensing
        self.actuation_base = cfg.actuation
        self.alive = np.ones(n, dtype=bool)
        self.seeker_ok = np.asarray(cfg.seeker, dtype=bool).copy()
        self.intercepted_at = np.full(n, np.nan)
        self.miss = np.full(n, np.nan)

        self._events = sorted(cfg.events, key=lambda e: e.time)
        self._event_idx = 0

        # RK4 state: pos(2n) | gamma(n) | airframe(4n, dynamic).  The target
        # estimates live outside it and advance with their exact propagator.
        self._n_state = 3 * n + (4 * n if self.dynamic else 0)
        self.y = np.zeros(self._n_state)
        self.y[: 2 * n] = np.asarray(cfg.position_m, dtype=float).ravel()
        self.y[2 * n: 3 * n] = np.asarray(cfg.heading_rad, dtype=float)
        self.est = np.asarray(cfg.estimate_m, dtype=float).copy()
        self.step_index = 0

        # Switching-gain estimator state (dynamic autopilot only)
        self._rate_est = _RateBoundEstimator(self.dt, n)

        self.notes = []
        self._refresh_topology(enforce=True, context="initial configuration")

        r0 = np.hypot(*(self.target[:, None] - self._pos().T))
        self._r_prev = r0.copy()
        self._r_prev2 = r0.copy()

        steps_cap = int(math.ceil(cfg.t_max / self.dt)) + 2
        self._buf = {name: np.zeros((steps_cap, n)) for name, _u in TRACE_FIELDS}
        self._buf_t = np.zeros(steps_cap)
        self._rows = 0

    # -- state access ------------------------------------------------------

    def _pos(self):
        return self.y[: 2 * self.n].reshape(self.n, 2)

    def _gamma(self):
        return self.y[2 * self.n: 3 * self.n]

    def _airframe(self):
        n = self.n
        base = 3 * n
        return (self.y[base: base + n], self.y[base + n: base + 2 * n],
                self.y[base + 2 * n: base + 3 * n], self.y[base + 3 * n: base + 4 * n])

    @property
    def t(self):
        return self.step_index * self.dt

    @property
    def flying(self):
        return self.alive & np.isnan(self.intercepted_at)

    # -- topology ----------------------------------------------------------

    def _effective_sensing(self):
        """Sensing graph restricted to flying agents, with target edges
        masked by seeker health.  Node ids keep the original numbering."""
        keep = {0} | {i + 1 for i in np.flatnonzero(self.flying)}
        edges = set()
        for (u, v) in self.sensing_base.edges:
            if u not in keep or v not in keep:
                continue
            if u == 0 and not self.seeker_ok[v - 1]:
                continue
            edges.add((u, v))
        return keep, DirectedGraph(self.sensing_base.node_count, frozenset(edges))

    def _refresh_topology(self, enforce, context):
        """Rebuild effective Laplacians, floors, and auto gains.

        ``enforce`` selects failure-event semantics: structural violations
        raise InvalidAfterEvent.  On interception removals the violation is
        only recorded and the last valid gain floors stay in use.
        """
        n = self.n
        flying_idx = np.flatnonzero(self.flying)
        if flying_idx.size:
            keep, sense_eff = self._effective_sensing()
            act_sub = self.actuation_base.subgraph(sorted(flying_idx))
            sense_ok = has_spanning_tree_from(sense_eff.subgraph(sorted(keep)), 0)
            act_ok = is_strongly_connected(act_sub)
        else:
            sense_ok = act_ok = False

        if flying_idx.size and not (sense_ok and act_ok):
            problems = []
            if not sense_ok:
                problems.append("target no longer roots a spanning tree of the sensing graph")
            if not act_ok:
                problems.append("actuation graph no longer strongly connected")
            message = f"{context}: " + "; ".join(problems)
            if enforce:
                raise InvalidAfterEvent(message)
            self.notes.append(f"gain floors frozen after {message}")

        # Embed reduced Laplacians into full-size matrices (zero rows/cols
        # for agents that left), so the integrator state keeps its layout.
        self.L_sense = np.zeros((n, n))
        self.L_act = np.zeros((n, n))
        if flying_idx.size:
            part = leader_partition(sense_eff.subgraph(sorted(keep)), 0)
            sub_lap = part.follower_laplacian
            ix = np.ix_(flying_idx, flying_idx)
            self.L_sense[ix] = sub_lap
            self.L_act[ix] = laplacian(act_sub)

            if sense_ok:
                spectrum = follower_spectrum(sub_lap)
                self.spectrum = spectrum
                if self.cfg.beta_auto:
                    self.obs_gains = ob.auto_gains(spectrum, self.cfg.observer_horizon,
                                                   alpha=self.cfg.observer_alpha)
                else:
                    self.obs_gains = ob.ObserverGains(self.cfg.observer_alpha,
                                                      self.cfg.observer_beta,
                                                      self.cfg.observer_horizon)
                problems = ob.validate_observer_gains(self.obs_gains, spectrum)
                if problems and enforce:
                    raise InvalidAfterEvent(f"{context}: " + "; ".join(problems))
            if act_ok:
                if self.cfg.eta_auto:
                    self.gd_gains = gd.auto_gains(
                        act_sub, self.cfg.consensus_horizon, self.cfg.accel_limit,
                        zeta=self.cfg.guidance_zeta, denom_floor=self.cfg.denom_floor,
                        absolute_denominator=self.cfg.absolute_denominator,
                        rate_cap=self.cfg.rate_cap)
                else:
                    self.gd_gains = gd.GuidanceGains(
                        self.cfg.guidance_zeta, self.cfg.guidance_eta,
                        self.cfg.consensus_horizon, self.cfg.accel_limit,
                        self.cfg.denom_floor, self.cfg.absolute_denominator,
                        self.cfg.rate_cap)
                problems = gd.validate_guidance_gains(self.gd_gains, act_sub,
                                                      self.cfg.observer_horizon)
                if problems and enforce:
                    raise InvalidAfterEvent(f"{context}: " + "; ".join(problems))
        self._flying_f = self.flying.astype(float)
        self._factor_estimate_propagator()

    def _factor_estimate_propagator(self):
        """Eigendecomposition of the effective sensing Laplacian, reused for
        every step until the topology changes.  Falls back to a dense matrix
        exponential per step when the matrix is too close to defective."""
        vals, vecs = np.linalg.eig(self.L_sense)
        try:
            cond = np.linalg.cond(vecs)
        except np.linalg.LinAlgError:
            cond = np.inf
        if np.isfinite(cond) and cond < 1e8:
            self._prop = (vals, vecs, np.linalg.inv(vecs))
        else:
            self._prop = None

    def _advance_estimates(self, t):
        """Exact estimate update over [t, t+dt]: errors contract by
        expm(-integral(gain) * L_sense)."""
        g = self.obs_gains
        weight = (g.alpha * self.dt
                  + g.beta * gain_weight_integral(t, t + self.dt, self.ts_obs))
        if self._prop is not None:
            vals, vecs, vecs_inv = self._prop
            prop = (vecs * np.exp(-weight * vals)) @ vecs_inv
            prop = prop.real
        else:
            prop = scipy.linalg.expm(-weight * self.L_sense)
        self.est = self.target + prop @ (self.est - self.target)

    def _apply_events(self, t):
        applied = False
        while self._event_idx < len(self._events) and self._events[self._event_idx].time <= t + 1e-12:
            ev = self._events[self._event_idx]
            self._event_idx += 1
            applied = True
            if ev.kind == "agent_fail":
                self.alive[ev.agent] = False
            elif ev.kind == "seeker_fail":
                self.seeker_ok[ev.agent] = False
            elif ev.kind == "link_fail":
                base = self.sensing_base if ev.graph == "sensing" else self.actuation_base
                pruned = base.without_edge(*ev.edge)
                if ev.graph == "sensing":
                    self.sensing_base = pruned
                else:
                    self.actuation_base = pruned
            else:
                raise ValueError(f"unknown event kind {ev.kind!r}")
        if applied:
            self._refresh_topology(enforce=True, context=f"failure event at t={t:.3f} s")

    # -- per-step command computation ---------------------------------------

    def _commands(self, t):
        """Commands and trace quantities from the current step-boundary state."""
        n = self.n
        pos = self._pos()
        gamma = self._gamma()
        est = self.est
        flying = self._flying_f

        r_true, theta_true, sigma_true, _ = eng.geometry_arrays(
            pos[:, 0], pos[:, 1], gamma, self.speed, self.target)
        r_est, _, sigma_est, los_rate_est = eng.geometry_arrays(
            pos[:, 0], pos[:, 1], gamma, self.speed, est)
        tgo_est = eng.time_to_go_arrays(np.maximum(r_est, 1e-9), sigma_est,
                                        self.speed, self.kappa)

        u_c = gd.consensus_term(tgo_est, t, self.gd_gains, self.L_act, self.ts_cons)
        a_cmd = gd.command_core(np.maximum(r_est, R_HIT), sigma_est, los_rate_est,
                                self.speed, self.kappa, u_c, self.gd_gains)
        # No maneuvering inside the interception radius; detection takes over.
        a_cmd = np.where(r_est < R_HIT, 0.0, a_cmd) * flying

        if self.dynamic:
            alpha, _pitch, q, fin = self._airframe()
            a_ach = ap.achieved_accel(alpha, fin, self.model)
            upsilon = self._rate_est.update(a_cmd)
            if self.cfg.switching_auto:
                switch = ap.SWITCH_MARGIN * np.maximum(upsilon, self.ap_gains.switch_floor)
            else:
                switch = np.full(n, self.ap_gains.switching)
            fin_cmd = ap.canard_command(alpha, q, fin, a_cmd, t, self.ap_gains,
                                        self.model, self.speed, self.ts_auto, switch)
            fin_cmd = fin_cmd * flying
        else:
            a_ach = a_cmd
            fin_cmd = np.zeros(n)

        return {
            "a_cmd": a_cmd, "fin_cmd": fin_cmd, "u_c": u_c * flying,
            "r": r_true, "theta": theta_true, "sigma": sigma_true,
            "tgo": tgo_est, "a_ach": a_ach,
        }

    # -- integration ---------------------------------------------------------

    def _rhs(self, t, y, a_cmd, fin_cmd):
        n = self.n
        flying = self._flying_f
        gamma = y[2 * n: 3 * n]
        dy = np.zeros_like(y)

        if self.dynamic:
            base = 3 * n
            alpha = y[base: base + n]
            pitch = y[base + n: base + 2 * n]
            q = y[base + 2 * n: base + 3 * n]
            fin = y[base + 3 * n: base + 4 * n]
            a_real = ap.achieved_accel(alpha, fin, self.model)
            alpha_dot, pitch_dot, q_dot, fin_dot = ap.airframe_deriv(
                alpha, pitch, q, fin, fin_cmd, self.model, self.speed)
            dy[base: base + n] = alpha_dot * flying
            dy[base + n: base + 2 * n] = pitch_dot * flying
            dy[base + 2 * n: base + 3 * n] = q_dot * flying
            dy[base + 3 * n: base + 4 * n] = fin_dot * flying
        else:
            a_real = a_cmd

        v_fly = self.speed * flying
        dy[0: 2 * n: 2] = v_fly * np.cos(gamma)
        dy[1: 2 * n: 2] = v_fly * np.sin(gamma)
        dy[2 * n: 3 * n] = a_real / self.speed * flying
        return dy

    def _rk4(self, t, y, a_cmd, fin_cmd):
        dt = self.dt
        k1 = self._rhs(t, y, a_cmd, fin_cmd)
        k2 = self._rhs(t + 0.5 * dt, y + 0.5 * dt * k1, a_cmd, fin_cmd)
        k3 = self._rhs(t + 0.5 * dt, y + 0.5 * dt * k2, a_cmd, fin_cmd)
        k4 = self._rhs(t + dt, y + dt * k3, a_cmd, fin_cmd)
        return y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    def _check_finite(self, t):
        if np.isfinite(self.y).all() and np.isfinite(self.est).all():
            return
        n = self.n
        blocks = {"position": self.y[:2 * n].reshape(n, 2),
                  "heading": self.y[2 * n:3 * n].reshape(n, 1),
                  "target estimate": self.est}
        if self.dynamic:
            blocks["airframe"] = self.y[3 * n:].reshape(4, n).T
        for label, block in blocks.items():
            bad = ~np.isfinite(block).all(axis=1)
            if bad.any():
                i = int(np.flatnonzero(bad)[0])
                raise NonFiniteState(f"non-finite {label} for agent {i + 1} at t={t:.4f} s")
        raise NonFiniteState(f"non-finite state at t={t:.4f} s")

    def _record(self, t, cmd):
        row = self._rows
        self._rows += 1
        self._buf_t[row] = t
        pos = self._pos()
        est = self.est
        b = self._buf
        b["x"][row] = pos[:, 0]
        b["y"][row] = pos[:, 1]
        b["gamma"][row] = self._gamma()
        b["r"][row] = cmd["r"]
        b["theta"][row] = cmd["theta"]
        b["sigma"][row] = cmd["sigma"]
        b["tgo"][row] = cmd["tgo"]
        b["acmd"][row] = cmd["a_cmd"]
        b["aach"][row] = cmd["a_ach"]
        if self.dynamic:
            alpha, _pitch, q, fin = self._airframe()
            b["alpha"][row] = alpha
            b["q"][row] = q
            b["delta"][row] = fin
            b["strack"][row] = cmd["a_ach"] - cmd["a_cmd"]
        b["xtgt_est"][row] = est[:, 0]
        b["ytgt_est"][row] = est[:, 1]
        b["esterr"][row] = np.hypot(est[:, 0] - self.target[0], est[:, 1] - self.target[1])
        b["uc"][row] = cmd["u_c"]

    def _detect_interceptions(self, t_new):
        """Mark agents whose range crossed its minimum during the last step.

        Both interception conditions (range below r_hit, or range upturn
        inside r_near) resolve at the first range increase inside the watch
        radius: waiting for the upturn brackets the closest approach, so the
        quadratic refinement interpolates instead of extrapolating and the
        refined time converges with the step size.
        """
        pos = self._pos()
        r_new = np.hypot(self.target[0] - pos[:, 0], self.target[1] - pos[:, 1])
        hit = False
        for i in np.flatnonzero(self.flying):
            if not (r_new[i] > self._r_prev[i] and self._r_prev[i] < R_NEAR):
                continue
            t_star, r_star = _refine_closest_approach(
                t_new, self.dt, self._r_prev2[i], self._r_prev[i], r_new[i])
            self.intercepted_at[i] = t_star
            self.miss[i] = r_star
            hit = True
        self._r_prev2 = self._r_prev
        self._r_prev = r_new
        if hit:
            self._refresh_topology(enforce=False, context=f"interception at t={t_new:.3f} s")

    def step(self):
        """Advance one dt: apply due events, hold commands, integrate, detect."""
        t = self.t
        self._apply_events(t)
        cmd = self._commands(t)
        self._record(t, cmd)
        self.y = self._rk4(t, self.y, cmd["a_cmd"], cmd["fin_cmd"])
        self._advance_estimates(t)
        if self.dynamic:
            n = self.n
            fin = self.y[3 * n + 3 * n: 3 * n + 4 * n]
            np.clip(fin, -self.model.fin_limit, self.model.fin_limit, out=fin)
        self.step_index += 1
        self._check_finite(self.t)
        self._detect_interceptions(self.t)

    def run(self):
        """Integrate until every surviving agent has intercepted or t_max.

        Returns (Trace, Metrics).
        """
        t_max = self.cfg.t_max
        while True:
            if not self.flying.any():
                break
            if self.t >= t_max - 1e-12:
                self.notes.append(f"t_max={t_max} s reached with agents still in flight")
                break
            self.step()
        final_cmd = self._commands(self.t)
        self._record(self.t, final_cmd)
        trace = Trace(self._buf_t[: self._rows].copy(),
                      {k: v[: self._rows].copy() for k, v in self._buf.items()},
                      self.dt)
        return trace, self._metrics(trace)

    def _metrics(self, trace):
        consensus_time = _first_gap_below(trace.t, trace.tgo, self.alive, 0.05)
        observer_conv = _first_below(trace.t, trace.esterr, self.alive, 1.0)
        done = ~np.isnan(self.intercepted_at)
        spread = float(np.nanmax(self.intercepted_at) - np.nanmin(self.intercepted_at)) if done.any() else math.nan
        effort = None
        if self.dynamic:
            effort = np.full(self.n, np.nan)
            for i in range(self.n):
                t_end = self.intercepted_at[i] if done[i] else trace.t[-1]
                sel = trace.t <= t_end + 1e-12
                delta_deg = trace.delta[sel, i] * RAD2DEG
                effort[i] = _trapz(delta_deg**2, trace.t[sel])
        return Metrics(
            intercept_time=self.intercepted_at.copy(),
            miss_distance=self.miss.copy(),
            spread=spread,
            consensus_time=consensus_time,
            observer_conv_time=observer_conv,
            final_time=float(trace.t[-1]),
            control_effort=effort,
            notes=list(self.notes),
        )


class _RateBoundEstimator:
    """Windowed bound on the commanded-acceleration rate.

    The span (max - min) of the command over a trailing window, divided by
    the window length, bounds the mean slew rate over that window.  Unlike a
    per-step difference quotient it does not blow up as 1/dt at command
    discontinuities, so the derived switching gain (and with it the fin
    chatter) is independent of the integration step.
    """

    WINDOW_S = 0.1

    def __init__(self, dt, n):
        self.steps = max(2, round(self.WINDOW_S / dt))
        self.span = self.steps * dt
        self.buf = None
        self.idx = 0
        self.n = n

    def update(self, a_cmd):
        if self.buf is None:
            self.buf = np.tile(np.asarray(a_cmd, dtype=float), (self.steps, 1))
        else:
            self.buf[self.idx] = a_cmd
            self.idx = (self.idx + 1) % self.steps
        return (self.buf.max(axis=0) - self.buf.min(axis=0)) / self.span


def _refine_closest_approach(t_new, dt, r0, r1, r2):
    """Quadratic fit through three range samples bracketing the minimum.

    Returns the vertex time and range; never above the sampled minimum.
    """
    t1 = t_new - dt
    curvature = r0 - 2.0 * r1 + r2
    if curvature <= 0.0:
        offset = 0.0 if r1 <= r2 else dt
        r_star = min(r1, r2)
    else:
        offset = min(max(0.5 * dt * (r0 - r2) / curvature, -dt), dt)
        a = curvature / (2.0 * dt * dt)
        b = (r2 - r0) / (2.0 * dt)
        r_star = r1 + b * offset + a * offset * offset
    return t1 + offset, max(min(r_star, r0, r1, r2), 0.0)


def _first_below(t, values, mask, threshold):
    """First time max-over-masked-agents of ``values`` drops to threshold."""
    cols = values[:, mask] if mask is not None else values
    if cols.shape[1] == 0:
        return math.nan
    worst = cols.max(axis=1)
    idx = np.flatnonzero(worst <= threshold)
    return float(t[idx[0]]) if idx.size else math.nan


def _first_gap_below(t, tgo, mask, threshold):
    cols = tgo[:, mask] if mask is not None else tgo
    if cols.shape[1] < 2:
        return 0.0
    gap = cols.max(axis=1) - cols.min(axis=1)
    idx = np.flatnonzero(gap <= threshold)
    return float(t[idx[0]]) if idx.size else math.nan


def metrics_from_trace(trace: Trace, consensus_threshold: float = 0.05,
                       observer_threshold: float = 1.0) -> Metrics:
    """Reconstruct Metrics from a saved trace.

    Interception is taken at each agent's global range minimum when that
    minimum lies inside the watch radius (frozen post-intercept rows repeat
    the last range, so the live upturn trigger cannot be replayed exactly).
    """
    n = trace.n_agents
    intercept = np.full(n, np.nan)
    miss = np.full(n, np.nan)
    for i in range(n):
        r = trace.r[:, i]
        k = int(np.argmin(r))
        if r[k] >= R_NEAR:
            continue
        if 0 < k < len(r) - 1 and trace.dt > 0:
            t_star, r_star = _refine_closest_approach(
                trace.t[k + 1], trace.dt, r[k - 1], r[k], r[k + 1])
        else:
            t_star, r_star = trace.t[k], r[k]
        intercept[i] = t_star
        miss[i] = r_star
    done = ~np.isnan(intercept)
    spread = float(np.nanmax(intercept) - np.nanmin(intercept)) if done.any() else math.nan
    effort = None
    if np.any(trace.delta != 0.0):
        effort = np.full(n, np.nan)
        for i in range(n):
            t_end = intercept[i] if done[i] else trace.t[-1]
            sel = trace.t <= t_end + 1e-12
            delta_deg = trace.delta[sel, i] * RAD2DEG
            effort[i] = _trapz(delta_deg**2, trace.t[sel])
    return Metrics(
        intercept_time=intercept,
        miss_distance=miss,
        spread=spread,
        consensus_time=_first_gap_below(trace.t, trace.tgo, None, consensus_threshold),
        observer_conv_time=_first_below(trace.t, trace.esterr, None, observer_threshold),
        final_time=float(trace.t[-1]),
        control_effort=effort,
    )


def run_scenario(cfg, dt=None):
    """Convenience wrapper: build a Simulation and run it."""
    return Simulation(cfg, dt=dt).run()


# -- open-loop autopilot test bench ----------------------------------------


@dataclass
class AutopilotTestTrace:
    """Single-airframe tracking record for one waveform test."""

    waveform: str
    t: np.ndarray
    a_cmd: np.ndarray
    a_ach: np.ndarray
    s: np.ndarray
    alpha: np.ndarray
    q: np.ndarray
    fin: np.ndarray

    def to_csv(self, path):
        header = "t_s,acmd_mps2,aach_mps2,strack_mps2,alpha_deg,q_degps,delta_deg"
        matrix = np.column_stack([
            self.t, self.a_cmd, self.a_ach, self.s,
            self.alpha * RAD2DEG, self.q * RAD2DEG, self.fin * RAD2DEG,
        ])
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(header + "\n")
            np.savetxt(fh, matrix, fmt="%.10g", delimiter=",")


def _waveform(kind, amplitude, period):
    if kind == "square":
        return lambda t: amplitude if (t % period) < 0.5 * period else -amplitude
    if kind == "cosine":
        return lambda t: amplitude * math.cos(2.0 * math.pi * t / period)
    raise ValueError(f"unknown test waveform {kind!r}")


def run_autopilot_test(cfg, dt=None):
    """Track the configured test waveforms with a single airframe.

    Returns {waveform: AutopilotTestTrace}.  The airframe starts at rest;
    the fin command updates once per step (zero-order hold) like in the
    closed-loop simulator, and the switching gain uses the same windowed
    command-rate estimate.
    """
    ti = cfg.test_inputs
    if ti is None:
        raise ValueError("scenario has no test_inputs section")
    if cfg.airframe is None:
        raise ValueError("autopilot test requires an airframe section")
    dt = float(dt if dt is not None else cfg.dt)
    model = cfg.airframe
    gains = cfg.autopilot_gains
    ts = TimeScale(cfg.autopilot_horizon, cfg.gain_clamp)
    speed = ti["speed_mps"]
    steps = int(round(ti["duration_s"] / dt))

    results = {}
    for kind in ti["waveforms"]:
        wave = _waveform(kind, ti["amplitude_mps2"], ti["period_s"])
        state = np.zeros(4)  # alpha, pitch, q, fin
        rate_est = _RateBoundEstimator(dt, 1)
        rows = np.zeros((steps + 1, 7))
        for k in range(steps + 1):
            t = k * dt
            a_cmd = wave(t)
            alpha, pitch, q, fin = state
            a_ach = float(ap.achieved_accel(alpha, fin, model))
            upsilon = float(rate_est.update(np.array([a_cmd]))[0])
            if cfg.switching_auto:
                switch = ap.SWITCH_MARGIN * max(upsilon, gains.switch_floor)
            else:
                switch = gains.switching
            fin_cmd = float(ap.canard_command(alpha, q, fin, a_cmd, t, gains,
                                              model, speed, ts, switch))
            rows[k] = (t, a_cmd, a_ach, a_ach - a_cmd, alpha, q, fin)
            if k == steps:
                break
            state = _rk4_airframe(state, fin_cmd, model, speed, dt)
            state[3] = min(max(state[3], -model.fin_limit), model.fin_limit)
        results[kind] = AutopilotTestTrace(
            waveform=kind, t=rows[:, 0], a_cmd=rows[:, 1], a_ach=rows[:, 2],
            s=rows[:, 3], alpha=rows[:, 4], q=rows[:, 5], fin=rows[:, 6])
    return results


def _rk4_airframe(state, fin_cmd, model, speed, dt):
    def f(s):
        d = ap.airframe_deriv(s[0], s[1], s[2], s[3], fin_cmd, model, speed)
        return np.array(d)

    k1 = f(state)
    k2 = f(state + 0.5 * dt * k1)
    k3 = f(state + 0.5 * dt * k2)
    k4 = f(state + dt * k3)
    return state + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
