"""Scenario files: strict YAML schema, validation, and round-trip.

A scenario is one complete declarative description of an engagement: target
and interceptor initial conditions, the two communication graphs as edge
lists, convergence horizons, gain settings, failure events, and the
autopilot mode.  Positions are kilometers and angles degrees at the file
boundary (converted once at parse); node 0 of the sensing graph is always
the target and agents are numbered 1..N in file order.

The schema is strict: unknown keys are fatal, and every structural
requirement is checked at parse time with a located message (dotted key
path).  Gain entries accept the string "auto", meaning the value is derived
from the graph spectra with a small margin above its floor; "auto" gains are
re-derived whenever a failure or interception changes the topology.
"""

import copy
import math
import os
from dataclasses import dataclass
from importlib import resources

import yaml

import numpy as np

from salvosim import autopilot as ap
from salvosim import guidance as gd
from salvosim import observer as ob
from salvosim.graph import DirectedGraph, has_spanning_tree_from, is_strongly_connected, \
    follower_spectrum, leader_partition
from salvosim.simulator import Event
from salvosim.timescale import DEFAULT_GAIN_CLAMP

VARIANTS = ("absolute", "signed")
AUTOPILOT_MODES = ("ideal", "dynamic")
EVENT_KINDS = ("agent_fail", "seeker_fail", "link_fail")
WAVEFORMS = ("square", "cosine")


class ScenarioError(ValueError):
    """Scenario file rejected; ``problems`` lists every located finding."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("\n".join(self.problems))


class ScenarioParseError(ScenarioError):
    """File could not be read as YAML at all."""


@dataclass(eq=False)
class ScenarioConfig:
    """Parsed scenario in SI units (m, rad, s) plus the normalized file form
    (``raw``) kept verbatim for lossless round-trips."""

    name: str
    raw: dict
    n_agents: int
    target_m: np.ndarray
    position_m: np.ndarray
    heading_rad: np.ndarray
    speed: np.ndarray
    nav_gain: np.ndarray
    seeker: np.ndarray
    estimate_m: np.ndarray
    sensing: DirectedGraph
    actuation: DirectedGraph
    dt: float
    t_max: float
    observer_horizon: float
    consensus_horizon: float
    autopilot_horizon: float
    gain_clamp: float
    observer_alpha: float
    observer_beta: float | None
    beta_auto: bool
    guidance_zeta: float
    guidance_eta: float | None
    eta_auto: bool
    accel_limit: float
    denom_floor: float
    absolute_denominator: bool
    rate_cap: float
    autopilot_mode: str
    airframe: ap.AeroModel | None
    autopilot_gains: ap.AutopilotGains
    switching_auto: bool
    events: tuple
    test_inputs: dict | None
    output_dir: str | None

    def __eq__(self, other):
        return isinstance(other, ScenarioConfig) and self.raw == other.raw


def _is_num(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _is_int(x):
    return isinstance(x, int) and not isinstance(x, bool)


class _Checker:
    def __init__(self):
        self.problems = []

    def fail(self, path, message):
        self.problems.append(f"{path}: {message}")

    def known_keys(self, mapping, path, allowed):
        for key in mapping:
            if key not in allowed:
                self.fail(f"{path}.{key}" if path else str(key), "unknown key")

    def require(self, mapping, path, key):
        if key not in mapping:
            self.fail(f"{path}.{key}" if path else key, "required key missing")
            return None
        return mapping[key]

    def number(self, value, path, positive=False, minimum=None):
        if not _is_num(value):
            self.fail(path, f"expected a finite number, got {value!r}")
            return None
        value = float(value)
        if positive and value <= 0.0:
            self.fail(path, f"must be positive, got {value}")
            return None
        if minimum is not None and value < minimum:
            self.fail(path, f"must be at least {minimum}, got {value}")
            return None
        return value

    def pair(self, value, path):
        if (not isinstance(value, (list, tuple)) or len(value) != 2
                or not all(_is_num(v) for v in value)):
            self.fail(path, f"expected a pair of numbers, got {value!r}")
            return None
        return [float(value[0]), float(value[1])]


def _parse_edges(check, entries, path, node_lo, node_hi, graph_name):
    """Edge list as [from, to] integer pairs; unit weights only."""
    edges = []
    if not isinstance(entries, list):
        check.fail(path, f"expected a list of [from, to] pairs, got {entries!r}")
        return edges
    seen = set()
    for k, entry in enumerate(entries):
        where = f"{path}[{k}]"
        if not isinstance(entry, (list, tuple)) or len(entry) != 2:
            check.fail(where, "edges are [from, to] pairs; weighted or longer entries are rejected")
            continue
        u, v = entry
        if not (_is_int(u) and _is_int(v)):
            check.fail(where, f"edge endpoints must be integers, got {entry!r}")
            continue
        if u == v:
            check.fail(where, f"self-loop on node {u}")
            continue
        if not (node_lo <= u <= node_hi and node_lo <= v <= node_hi):
            check.fail(where, f"{graph_name} node ids must lie in {node_lo}..{node_hi}")
            continue
        if (u, v) in seen:
            check.fail(where, f"duplicate edge ({u}, {v})")
            continue
        seen.add((u, v))
        edges.append((u, v))
    return edges


def _gain_value(check, mapping, path, key, default, positive=True):
    """Number or the string 'auto'; returns (value_or_None, is_auto)."""
    value = mapping.get(key, default)
    if value == "auto":
        return None, True
    number = check.number(value, f"{path}.{key}", positive=positive)
    return number, False


def parse_scenario(data: dict, name: str = "scenario") -> ScenarioConfig:
    """Validate a scenario mapping and build the config.

    Raises ScenarioError listing every violated requirement with its key
    path and the condition it breaks.
    """
    check = _Checker()
    if not isinstance(data, dict):
        raise ScenarioError([f"{name}: scenario root must be a mapping"])
    raw = copy.deepcopy(data)
    check.known_keys(data, "", (
        "name", "description", "target", "agents", "graphs", "times", "observer",
        "guidance", "autopilot", "airframe", "autopilot_gains", "events",
        "test_inputs", "output"))

    scenario_name = data.get("name", name)
    if not isinstance(scenario_name, str):
        check.fail("name", "must be a string")
        scenario_name = name
    if "description" in data and not isinstance(data["description"], str):
        check.fail("description", "must be a string")

    # -- target and agents ---------------------------------------------------
    target_km = [0.0, 0.0]
    target = check.require(data, "", "target")
    if isinstance(target, dict):
        check.known_keys(target, "target", ("position_km",))
        pos = check.require(target, "target", "position_km")
        if pos is not None:
            target_km = check.pair(pos, "target.position_km") or target_km
    elif target is not None:
        check.fail("target", "must be a mapping with position_km")

    agents = check.require(data, "", "agents")
    agent_rows = []
    if isinstance(agents, list) and agents:
        for i, entry in enumerate(agents):
            path = f"agents[{i}]"
            if not isinstance(entry, dict):
                check.fail(path, "must be a mapping")
                continue
            check.known_keys(entry, path, (
                "position_km", "speed_mps", "heading_deg", "nav_gain", "seeker",
                "initial_estimate_km"))
            pos = check.pair(check.require(entry, path, "position_km"), f"{path}.position_km")
            speed = check.number(check.require(entry, path, "speed_mps"),
                                 f"{path}.speed_mps", positive=True)
            heading = check.number(check.require(entry, path, "heading_deg"),
                                   f"{path}.heading_deg")
            nav = check.number(check.require(entry, path, "nav_gain"), f"{path}.nav_gain")
            if nav is not None and nav <= 2.0:
                check.fail(f"{path}.nav_gain", f"must exceed 2 (got {nav}); the time-to-go "
                           "correction requires it")
                nav = None
            seeker = entry.get("seeker")
            if not isinstance(seeker, bool):
                check.fail(f"{path}.seeker", "required boolean")
                seeker = False
            est = check.pair(check.require(entry, path, "initial_estimate_km"),
                             f"{path}.initial_estimate_km")
            agent_rows.append((pos, speed, heading, nav, seeker, est))
    elif agents is not None:
        check.fail("agents", "must be a non-empty list")

    n = len(agent_rows)

    # -- graphs ---------------------------------------------------------------
    graphs = check.require(data, "", "graphs")
    sensing_edges, actuation_edges = [], []
    if isinstance(graphs, dict):
        check.known_keys(graphs, "graphs", ("sensing", "actuation"))
        sensing_edges = _parse_edges(check, check.require(graphs, "graphs", "sensing") or [],
                                     "graphs.sensing", 0, n, "sensing")
        actuation_edges = _parse_edges(check, check.require(graphs, "graphs", "actuation") or [],
                                       "graphs.actuation", 1, n, "actuation")
    elif graphs is not None:
        check.fail("graphs", "must be a mapping with sensing and actuation edge lists")

    # -- times ----------------------------------------------------------------
    times = check.require(data, "", "times")
    dt = t_max = obs_h = cons_h = auto_h = None
    gain_clamp = DEFAULT_GAIN_CLAMP
    if isinstance(times, dict):
        check.known_keys(times, "times", (
            "observer_horizon", "consensus_horizon", "autopilot_horizon",
            "t_max", "dt", "gain_clamp"))
        obs_h = check.number(check.require(times, "times", "observer_horizon"),
                             "times.observer_horizon", positive=True)
        cons_h = check.number(check.require(times, "times", "consensus_horizon"),
                              "times.consensus_horizon", positive=True)
        auto_h = check.number(check.require(times, "times", "autopilot_horizon"),
                              "times.autopilot_horizon", positive=True)
        t_max = check.number(check.require(times, "times", "t_max"), "times.t_max",
                             positive=True)
        dt = check.number(check.require(times, "times", "dt"), "times.dt", positive=True)
        gain_clamp = check.number(times.get("gain_clamp", DEFAULT_GAIN_CLAMP),
                                  "times.gain_clamp", minimum=1.0) or DEFAULT_GAIN_CLAMP
        if obs_h is not None and cons_h is not None and cons_h <= obs_h:
            check.fail("times.consensus_horizon",
                       f"consensus horizon {cons_h} must exceed the observer horizon {obs_h}")
        if cons_h is not None and t_max is not None and cons_h >= t_max:
            check.fail("times.consensus_horizon",
                       f"consensus horizon {cons_h} must lie within the run window t_max={t_max}")
    elif times is not None:
        check.fail("times", "must be a mapping")

    # -- observer / guidance gain sections -------------------------------------
    observer_sec = data.get("observer", {})
    obs_alpha, obs_beta, beta_auto = ob.DEFAULT_ALPHA, None, True
    if isinstance(observer_sec, dict):
        check.known_keys(observer_sec, "observer", ("alpha", "beta"))
        obs_alpha = check.number(observer_sec.get("alpha", ob.DEFAULT_ALPHA),
                                 "observer.alpha", positive=True) or ob.DEFAULT_ALPHA
        obs_beta, beta_auto = _gain_value(check, observer_sec, "observer", "beta", "auto")
    else:
        check.fail("observer", "must be a mapping")

    guidance_sec = data.get("guidance", {})
    zeta, eta, eta_auto_flag = gd.DEFAULT_ZETA, None, True
    accel_limit_g, denom_floor, variant = 20.0, gd.DEFAULT_DENOM_FLOOR, "absolute"
    rate_cap = gd.DEFAULT_RATE_CAP
    if isinstance(guidance_sec, dict):
        check.known_keys(guidance_sec, "guidance",
                         ("zeta", "eta", "accel_limit_g", "denom_floor", "variant",
                          "rate_cap"))
        zeta = check.number(guidance_sec.get("zeta", gd.DEFAULT_ZETA), "guidance.zeta",
                            positive=True) or gd.DEFAULT_ZETA
        eta, eta_auto_flag = _gain_value(check, guidance_sec, "guidance", "eta", "auto")
        accel_limit_g = check.number(guidance_sec.get("accel_limit_g", 20.0),
                                     "guidance.accel_limit_g", positive=True) or 20.0
        denom_floor = check.number(guidance_sec.get("denom_floor", gd.DEFAULT_DENOM_FLOOR),
                                   "guidance.denom_floor", positive=True) or gd.DEFAULT_DENOM_FLOOR
        variant = guidance_sec.get("variant", "absolute")
        if variant not in VARIANTS:
            check.fail("guidance.variant", f"must be one of {VARIANTS}, got {variant!r}")
            variant = "absolute"
        rate_cap = check.number(guidance_sec.get("rate_cap", gd.DEFAULT_RATE_CAP),
                                "guidance.rate_cap", positive=True) or gd.DEFAULT_RATE_CAP
    else:
        check.fail("guidance", "must be a mapping")

    # -- autopilot --------------------------------------------------------------
    mode = data.get("autopilot", "ideal")
    if mode not in AUTOPILOT_MODES:
        check.fail("autopilot", f"must be one of {AUTOPILOT_MODES}, got {mode!r}")
        mode = "ideal"

    airframe_sec = data.get("airframe")
    airframe = None
    if airframe_sec is not None:
        if not isinstance(airframe_sec, dict):
            check.fail("airframe", "must be a mapping")
        else:
            check.known_keys(airframe_sec, "airframe", (
                "lift_alpha", "lift_fin", "moment_q", "moment_alpha", "moment_fin",
                "actuator_tau_s", "fin_limit_deg", "smooth_width_deg"))
            vals = {}
            for key, positive in (("lift_alpha", False), ("lift_fin", False),
                                  ("moment_q", False), ("moment_alpha", False),
                                  ("moment_fin", False), ("actuator_tau_s", True),
                                  ("fin_limit_deg", True), ("smooth_width_deg", True)):
                vals[key] = check.number(check.require(airframe_sec, "airframe", key),
                                         f"airframe.{key}", positive=positive)
            if all(v is not None for v in vals.values()):
                if vals["lift_fin"] == 0.0:
                    check.fail("airframe.lift_fin", "must be nonzero (fin must produce lift)")
                else:
                    airframe = ap.AeroModel(
                        lift_alpha=vals["lift_alpha"], lift_fin=vals["lift_fin"],
                        moment_q=vals["moment_q"], moment_alpha=vals["moment_alpha"],
                        moment_fin=vals["moment_fin"], actuator_tau=vals["actuator_tau_s"],
                        fin_limit=math.radians(vals["fin_limit_deg"]),
                        smooth_width=math.radians(vals["smooth_width_deg"]))
    if mode == "dynamic" and airframe_sec is None:
        check.fail("airframe", "required when autopilot mode is dynamic")

    gains_sec = data.get("autopilot_gains", {})
    feedback, weight = ap.DEFAULT_FEEDBACK, ap.DEFAULT_HORIZON_WEIGHT
    switching, switching_auto = None, True
    smooth_eps, switch_floor = ap.DEFAULT_SMOOTH_EPS, ap.DEFAULT_SWITCH_FLOOR
    if isinstance(gains_sec, dict):
        check.known_keys(gains_sec, "autopilot_gains", (
            "feedback", "horizon_weight", "switching", "smooth_eps_mps2",
            "switch_floor_mps3"))
        feedback = check.number(gains_sec.get("feedback", ap.DEFAULT_FEEDBACK),
                                "autopilot_gains.feedback", positive=True) or ap.DEFAULT_FEEDBACK
        weight = check.number(gains_sec.get("horizon_weight", ap.DEFAULT_HORIZON_WEIGHT),
                              "autopilot_gains.horizon_weight", minimum=2.0)
        weight = weight if weight is not None else ap.DEFAULT_HORIZON_WEIGHT
        switching, switching_auto = _gain_value(check, gains_sec, "autopilot_gains",
                                                "switching", "auto")
        smooth_eps = check.number(gains_sec.get("smooth_eps_mps2", ap.DEFAULT_SMOOTH_EPS),
                                  "autopilot_gains.smooth_eps_mps2",
                                  positive=True) or ap.DEFAULT_SMOOTH_EPS
        switch_floor = check.number(gains_sec.get("switch_floor_mps3", ap.DEFAULT_SWITCH_FLOOR),
                                    "autopilot_gains.switch_floor_mps3",
                                    positive=True) or ap.DEFAULT_SWITCH_FLOOR
    else:
        check.fail("autopilot_gains", "must be a mapping")

    # -- events -------------------------------------------------------------------
    events = []
    events_sec = data.get("events", [])
    if not isinstance(events_sec, list):
        check.fail("events", "must be a list")
        events_sec = []
    for k, entry in enumerate(events_sec):
        path = f"events[{k}]"
        if not isinstance(entry, dict):
            check.fail(path, "must be a mapping")
            continue
        kind = entry.get("kind")
        if kind not in EVENT_KINDS:
            check.fail(f"{path}.kind", f"must be one of {EVENT_KINDS}, got {kind!r}")
            continue
        time_s = check.number(check.require(entry, path, "time_s"), f"{path}.time_s",
                              minimum=0.0)
        if time_s is None:
            continue
        if kind in ("agent_fail", "seeker_fail"):
            check.known_keys(entry, path, ("time_s", "kind", "agent"))
            agent = entry.get("agent")
            if not (_is_int(agent) and 1 <= agent <= n):
                check.fail(f"{path}.agent", f"must be an agent id in 1..{n}, got {agent!r}")
                continue
            if kind == "seeker_fail" and agent_rows and not agent_rows[agent - 1][4]:
                check.fail(f"{path}.agent", f"agent {agent} carries no seeker to fail")
                continue
            events.append(Event(time=time_s, kind=kind, agent=agent - 1))
        else:
            check.known_keys(entry, path, ("time_s", "kind", "graph", "edge"))
            graph_name = entry.get("graph")
            if graph_name not in ("sensing", "actuation"):
                check.fail(f"{path}.graph", f"must be sensing or actuation, got {graph_name!r}")
                continue
            edge = entry.get("edge")
            if (not isinstance(edge, (list, tuple)) or len(edge) != 2
                    or not all(_is_int(e) for e in edge)):
                check.fail(f"{path}.edge", f"must be a [from, to] pair, got {edge!r}")
                continue
            u, v = edge
            pool = sensing_edges if graph_name == "sensing" else actuation_edges
            if (u, v) not in pool:
                check.fail(f"{path}.edge", f"edge ({u}, {v}) not present in the {graph_name} graph")
                continue
            internal = (u, v) if graph_name == "sensing" else (u - 1, v - 1)
            events.append(Event(time=time_s, kind=kind, graph=graph_name, edge=internal))

    # -- test inputs ----------------------------------------------------------------
    test_inputs = None
    ti_sec = data.get("test_inputs")
    if ti_sec is not None:
        if not isinstance(ti_sec, dict):
            check.fail("test_inputs", "must be a mapping")
        else:
            check.known_keys(ti_sec, "test_inputs", (
                "waveforms", "amplitude_mps2", "period_s", "duration_s", "speed_mps"))
            waves = ti_sec.get("waveforms")
            if (not isinstance(waves, list) or not waves
                    or any(w not in WAVEFORMS for w in waves)):
                check.fail("test_inputs.waveforms", f"must be a non-empty subset of {WAVEFORMS}")
                waves = []
            amp = check.number(check.require(ti_sec, "test_inputs", "amplitude_mps2"),
                               "test_inputs.amplitude_mps2", positive=True)
            period = check.number(check.require(ti_sec, "test_inputs", "period_s"),
                                  "test_inputs.period_s", positive=True)
            duration = check.number(check.require(ti_sec, "test_inputs", "duration_s"),
                                    "test_inputs.duration_s", positive=True)
            speed = check.number(check.require(ti_sec, "test_inputs", "speed_mps"),
                                 "test_inputs.speed_mps", positive=True)
            if airframe is None:
                check.fail("test_inputs", "requires an airframe section")
            if None not in (amp, period, duration, speed) and waves:
                test_inputs = {"waveforms": list(waves), "amplitude_mps2": amp,
                               "period_s": period, "duration_s": duration,
                               "speed_mps": speed}

    output_dir = None
    out_sec = data.get("output")
    if out_sec is not None:
        if isinstance(out_sec, dict):
            check.known_keys(out_sec, "output", ("directory",))
            directory = out_sec.get("directory")
            if directory is not None and not isinstance(directory, str):
                check.fail("output.directory", "must be a string")
            else:
                output_dir = directory
        else:
            check.fail("output", "must be a mapping")

    if check.problems:
        raise ScenarioError(check.problems)

    # -- structural validation on complete, well-typed data -------------------------
    sensing = DirectedGraph(n + 1, frozenset(sensing_edges))
    actuation = DirectedGraph(n, frozenset((u - 1, v - 1) for (u, v) in actuation_edges))
    seeker = [row[4] for row in agent_rows]

    for i in range(n):
        has_edge = (0, i + 1) in sensing.edges
        if seeker[i] and not has_edge:
            check.fail(f"agents[{i}].seeker",
                       "seeker-equipped agent needs the sensing edge [0, "
                       f"{i + 1}] carrying its target measurement")
        if has_edge and not seeker[i]:
            check.fail("graphs.sensing", f"edge [0, {i + 1}] feeds an agent with no seeker")
    if not any(seeker[i] and (0, i + 1) in sensing.edges for i in range(n)):
        check.fail("agents", "at least one agent must carry a seeker fed by a sensing "
                   "edge from the target")
    if sensing.in_neighbors(0):
        check.fail("graphs.sensing", "target node 0 must not receive edges")
    elif not has_spanning_tree_from(sensing, 0):
        check.fail("graphs.sensing", "target does not reach every agent "
                   "(no spanning tree rooted at node 0)")
    if not is_strongly_connected(actuation):
        check.fail("graphs.actuation", "must be strongly connected")

    if check.problems:
        raise ScenarioError(check.problems)

    # Explicit gains are validated against the floors of the configured graphs.
    spectrum = follower_spectrum(leader_partition(sensing, 0).follower_laplacian)
    if not beta_auto:
        gains = ob.ObserverGains(obs_alpha, obs_beta, obs_h)
        for problem in ob.validate_observer_gains(gains, spectrum):
            check.fail("observer", problem)
    if not eta_auto_flag:
        gains = gd.GuidanceGains(zeta, eta, cons_h, accel_limit_g * gd.GRAVITY,
                                 denom_floor, variant == "absolute", rate_cap)
        for problem in gd.validate_guidance_gains(gains, actuation, obs_h):
            check.fail("guidance", problem)
    ap_gains = ap.AutopilotGains(feedback=feedback, horizon_weight=weight,
                                 switching=switching, horizon=auto_h,
                                 smooth_eps=smooth_eps, switch_floor=switch_floor)
    for problem in ap.validate_autopilot_gains(ap_gains):
        check.fail("autopilot_gains", problem)

    if check.problems:
        raise ScenarioError(check.problems)

    return ScenarioConfig(
        name=scenario_name,
        raw=raw,
        n_agents=n,
        target_m=np.array(target_km) * 1000.0,
        position_m=np.array([row[0] for row in agent_rows]) * 1000.0,
        heading_rad=np.array([math.radians(row[2]) for row in agent_rows]),
        speed=np.array([row[1] for row in agent_rows]),
        nav_gain=np.array([row[3] for row in agent_rows]),
        seeker=np.array(seeker, dtype=bool),
        estimate_m=np.array([row[5] for row in agent_rows]) * 1000.0,
        sensing=sensing,
        actuation=actuation,
        dt=dt,
        t_max=t_max,
        observer_horizon=obs_h,
        consensus_horizon=cons_h,
        autopilot_horizon=auto_h,
        gain_clamp=gain_clamp,
        observer_alpha=obs_alpha,
        observer_beta=obs_beta,
        beta_auto=beta_auto,
        guidance_zeta=zeta,
        guidance_eta=eta,
        eta_auto=eta_auto_flag,
        accel_limit=accel_limit_g * gd.GRAVITY,
        denom_floor=denom_floor,
        absolute_denominator=(variant == "absolute"),
        rate_cap=rate_cap,
        autopilot_mode=mode,
        airframe=airframe,
        autopilot_gains=ap_gains,
        switching_auto=switching_auto,
        events=tuple(events),
        test_inputs=test_inputs,
        output_dir=output_dir,
    )


def load_scenario(path) -> ScenarioConfig:
    """Parse a scenario YAML file; located errors name the violated condition."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}" if mark is not None else str(path)
        raise ScenarioParseError([f"{where}: not valid YAML: {exc}"]) from exc
    except OSError as exc:
        raise ScenarioParseError([f"{path}: {exc}"]) from exc
    name = os.path.splitext(os.path.basename(str(path)))[0]
    return parse_scenario(data, name=name)


def serialize_scenario(cfg: ScenarioConfig) -> dict:
    """Normalized file-form mapping; parse(serialize(cfg)) == cfg."""
    return copy.deepcopy(cfg.raw)


def save_scenario(cfg: ScenarioConfig, path):
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(serialize_scenario(cfg), fh, sort_keys=False)


def bundled_scenario_names():
    root = resources.files("salvosim") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def resolve_scenario_path(name_or_path):
    """Existing file path, or the name of a bundled scenario."""
    if os.path.exists(name_or_path):
        return str(name_or_path)
    base = str(name_or_path)
    if not base.endswith(".yaml"):
        base += ".yaml"
    candidate = resources.files("salvosim") / "scenarios" / base
    if candidate.is_file():
        return str(candidate)
    raise ScenarioParseError(
        [f"{name_or_path}: no such file or bundled scenario "
         f"(bundled: {', '.join(bundled_scenario_names())})"])
