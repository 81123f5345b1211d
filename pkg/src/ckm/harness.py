"""
Scenario playback and metric collection.

A scenario is a scene, an optional BIM, timed waypoint trajectories for the
receiver (and optionally the moving obstacle), the strategies to compare
and the sensor/measurement models. `run_episode` steps through decision
ticks and yields one `MetricsRow` per (tick, strategy).

CSV schema (fixed column order):
    t, strategy, rx_power_dbm, tx_beam, rx_beam, link_choice, d_o, r,
    commands_sent, sweeps_used
Empty `d_o` / `r` cells mean no obstacle is present.
"""

from __future__ import annotations

import csv
import json
import os
from bisect import bisect_right
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path as FsPath
from typing import Iterable, Sequence

from .alignment import (DynamicConfig, StrategyDecision, change_filter, ckm_dynamic_strategy,
                        ckm_static_strategy, exhaustive_strategy, location_strategy)
from .ckm_store import DYNAMIC, Bim, load_bim
from .channel import MeasurementNoise, Scene, load_scene, resolve_paths, sweep_power
from .errors import ValidationError
from .geometry import Point2, Pose, perp_distance, project_ratio, signed_offset
from .phased_array import Codebook, load_profile
from .sensors import SensorConfig, SensorStream

EXHAUSTIVE = "exhaustive"
LOCATION = "location"
CKM_STATIC = "ckm_static"
CKM_DYNAMIC = "ckm_dynamic"
STRATEGIES = (EXHAUSTIVE, LOCATION, CKM_STATIC, CKM_DYNAMIC)

SCENARIO_FORMAT = "ckm-scenario"


@dataclass(frozen=True)
class Waypoint:
    t: float
    x: float
    y: float
    orientation: float = 0.0


class Trajectory:
    """Piecewise-linear position and heading between timed waypoints.

    Held constant before the first and after the last waypoint. Headings are
    interpolated on the raw waypoint values, so write them unwrapped.
    """

    def __init__(self, waypoints: Sequence[Waypoint]):
        if not waypoints:
            raise ValidationError("trajectory needs at least one waypoint")
        wps = sorted(waypoints, key=lambda w: w.t)
        if any(b.t == a.t for a, b in zip(wps, wps[1:])):
            raise ValidationError("trajectory waypoints need distinct times")
        self.waypoints = tuple(wps)
        self._times = [w.t for w in wps]

    def __call__(self, t: float) -> Pose:
        wps = self.waypoints
        if t <= wps[0].t:
            w = wps[0]
            return Pose(Point2(w.x, w.y), w.orientation, t)
        if t >= wps[-1].t:
            w = wps[-1]
            return Pose(Point2(w.x, w.y), w.orientation, t)
        k = bisect_right(self._times, t)
        a, b = wps[k - 1], wps[k]
        u = (t - a.t) / (b.t - a.t)
        return Pose(Point2(a.x + u * (b.x - a.x), a.y + u * (b.y - a.y)),
                    a.orientation + u * (b.orientation - a.orientation), t)

    def to_list(self) -> list[dict]:
        return [{"t": w.t, "x": w.x, "y": w.y, "orientation_deg": w.orientation}
                for w in self.waypoints]

    @classmethod
    def from_list(cls, items) -> "Trajectory":
        try:
            return cls([Waypoint(float(d["t"]), float(d["x"]), float(d["y"]),
                                 float(d.get("orientation_deg", 0.0))) for d in items])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed trajectory: {exc!r}") from exc


@dataclass
class Scenario:
    scene: Scene
    rx_trajectory: Trajectory
    strategies: tuple[str, ...]
    bim: Bim | None = None
    obstacle_trajectory: Trajectory | None = None
    sensors: SensorConfig = field(default_factory=SensorConfig)
    measurement: MeasurementNoise = field(default_factory=MeasurementNoise)
    duration: float = 1.0
    decision_rate: float = 10.0
    seed: int = 0
    dynamic: DynamicConfig = field(default_factory=DynamicConfig)
    d_o_normal: Point2 | None = None
    codebook: Codebook = field(default_factory=Codebook.uniform)

    @property
    def num_ticks(self) -> int:
        return int(round(self.duration * self.decision_rate))

    def validate(self) -> None:
        for s in self.strategies:
            if s not in STRATEGIES:
                raise ValidationError(f"unknown strategy {s!r}")
        if len(set(self.strategies)) != len(self.strategies):
            raise ValidationError("duplicate strategy")
        if self.decision_rate <= 0 or self.duration <= 0:
            raise ValidationError("duration and decision rate must be positive")
        if self.decision_rate > min(self.sensors.uwb_rate, self.sensors.gyro_rate):
            raise ValidationError("decision rate exceeds sensor rate")
        trajs = [("rx", self.rx_trajectory), ("obstacle", self.obstacle_trajectory)]
        for name, traj in trajs:
            if traj is None:
                continue
            for w in traj.waypoints:
                if not self.scene.contains(Point2(w.x, w.y)):
                    raise ValidationError(f"{name} trajectory leaves the scene at t={w.t}")
        needs_bim = {CKM_STATIC, CKM_DYNAMIC} & set(self.strategies)
        if needs_bim and self.bim is None:
            raise ValidationError(f"strategies {sorted(needs_bim)} need a BIM")
        if CKM_DYNAMIC in self.strategies and self.bim.mode != DYNAMIC:
            raise ValidationError("ckm_dynamic needs a BIM built in dynamic mode")
        if self.bim is not None and self.bim.profile_hash != self.codebook.profile_hash():
            raise ValidationError("BIM device profile does not match the codebook")
        if self.obstacle_trajectory is not None and self.scene.obstacle is None:
            raise ValidationError("obstacle trajectory given but scene has no obstacle")


@dataclass(frozen=True)
class MetricsRow:
    t: float
    strategy: str
    rx_power_dbm: float
    tx_beam: int
    rx_beam: int
    link_choice: str
    d_o: float | None
    r: float | None
    commands_sent: int
    sweeps_used: int


CSV_COLUMNS = tuple(f.name for f in fields(MetricsRow))


def _decide(name: str, sc: Scenario, tx_obs: Pose, rx_obs: Pose,
            obs_obs: Pose | None, rx_truth: Pose, power) -> StrategyDecision:
    cb = sc.codebook
    if name == EXHAUSTIVE:
        return exhaustive_strategy(sc.scene, rx_truth, cb, power=power)
    if name == LOCATION:
        return location_strategy(tx_obs, rx_obs, cb)
    if name == CKM_STATIC:
        return ckm_static_strategy(sc.bim, rx_obs, cb)
    return ckm_dynamic_strategy(sc.bim, tx_obs, rx_obs, obs_obs, sc.dynamic, cb)


def run_episode(sc: Scenario) -> list[MetricsRow]:
    """Play the scenario; deterministic for a fixed scenario and seed.

    Every strategy is scored on the same measured realization of the true
    channel at each tick, which is also what the exhaustive sweep sees.
    """
    sc.validate()
    scene = sc.scene
    sensors = SensorConfig(sc.sensors.uwb_sigma, sc.sensors.uwb_rate, sc.sensors.gyro_sigma,
                           sc.sensors.gyro_rate, sc.seed)
    tx_truth = scene.tx
    tx_stream = SensorStream(lambda t: Pose(tx_truth.position, tx_truth.orientation, t),
                             sensors, "tx")
    rx_stream = SensorStream(sc.rx_trajectory, sensors, "rx")
    obs_stream = (SensorStream(sc.obstacle_trajectory, sensors, "obstacle")
                  if sc.obstacle_trajectory is not None else None)

    rows: list[MetricsRow] = []
    prev: dict[str, StrategyDecision | None] = {s: None for s in sc.strategies}
    for k in range(sc.num_ticks):
        t = k / sc.decision_rate
        rx_truth = sc.rx_trajectory(t)
        obs_truth = sc.obstacle_trajectory(t) if sc.obstacle_trajectory is not None else None
        tx_obs = tx_stream.observe(t)
        rx_obs = rx_stream.observe(t)
        obs_obs = obs_stream.observe(t) if obs_stream is not None else None

        paths = resolve_paths(scene, rx_truth, obs_truth)
        power = sweep_power(scene, rx_truth, sc.codebook, sc.measurement,
                            seed=[sc.seed, k], paths=paths)

        d_o = r = None
        if obs_truth is not None:
            a, b, o = tx_truth.position, rx_truth.position, obs_truth.position
            r = project_ratio(a, b, o)
            d_o = (signed_offset(a, b, o, sc.d_o_normal) if sc.d_o_normal is not None
                   else perp_distance(a, b, o))

        for name in sc.strategies:
            dec = _decide(name, sc, tx_obs, rx_obs, obs_obs, rx_truth, power)
            dec = change_filter(prev[name], dec)
            prev[name] = dec
            rows.append(MetricsRow(t, name, float(power[dec.tx_beam - 1, dec.rx_beam - 1]),
                                   dec.tx_beam, dec.rx_beam, dec.link_choice, d_o, r,
                                   dec.commands_sent, dec.sweeps_used))
    return rows


# -- export -------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def export(rows: Iterable[MetricsRow], fmt: str, path) -> None:
    """Write rows as CSV (fixed header) or JSON (list of objects)."""
    rows = list(rows)
    if fmt == "csv":
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for row in rows:
                w.writerow([_fmt(getattr(row, c)) for c in CSV_COLUMNS])
    elif fmt == "json":
        with open(path, "w") as f:
            json.dump([asdict(r) for r in rows], f, indent=1)
            f.write("\n")
    else:
        raise ValidationError(f"unknown export format {fmt!r}")


def _opt_float(s: str):
    return None if s == "" else float(s)


def import_rows(path) -> list[MetricsRow]:
    """Read rows back from a CSV or JSON export (chosen by extension)."""
    if str(path).endswith(".json"):
        with open(path) as f:
            return [MetricsRow(**d) for d in json.load(f)]
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValidationError("unexpected CSV header")
        return [MetricsRow(float(d["t"]), d["strategy"], float(d["rx_power_dbm"]),
                           int(d["tx_beam"]), int(d["rx_beam"]), d["link_choice"],
                           _opt_float(d["d_o"]), _opt_float(d["r"]),
                           int(d["commands_sent"]), int(d["sweeps_used"]))
                for d in reader]


# -- scenario files -------------------------------------------------------------

def scenario_to_dict(sc: Scenario, scene_ref: str, bim_ref: str | None) -> dict:
    s = sc.sensors
    m = sc.measurement
    return {
        "format": SCENARIO_FORMAT,
        "version": 1,
        "scene": scene_ref,
        "bim": bim_ref,
        "device_profile": sc.codebook.to_profile(),
        "rx_trajectory": sc.rx_trajectory.to_list(),
        "obstacle_trajectory": (sc.obstacle_trajectory.to_list()
                                if sc.obstacle_trajectory is not None else None),
        "strategies": list(sc.strategies),
        "sensors": {"uwb_sigma_m": s.uwb_sigma, "uwb_rate_hz": s.uwb_rate,
                    "gyro_sigma_deg": s.gyro_sigma, "gyro_rate_hz": s.gyro_rate},
        "measurement": {"sigma_db": m.sigma_db, "reads": m.reads,
                        "noise_floor_dbm": m.noise_floor_dbm, "tx_power_dbm": m.tx_power_dbm},
        "duration_s": sc.duration,
        "decision_rate_hz": sc.decision_rate,
        "seed": sc.seed,
        "eta_m": sc.dynamic.eta,
        "d_o_normal": None if sc.d_o_normal is None else [sc.d_o_normal.x, sc.d_o_normal.y],
    }


def load_scenario(path) -> Scenario:
    """Load a scenario file; `scene` / `bim` refs resolve against its folder."""
    base = FsPath(path).parent
    try:
        with open(path) as f:
            d = json.load(f)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed scenario {path}: {exc}") from exc
    if d.get("format", SCENARIO_FORMAT) != SCENARIO_FORMAT:
        raise ValidationError("not a scenario file")

    def ref(name):
        p = base / name
        if not p.exists():
            raise ValidationError(f"dangling reference {name!r}")
        return p

    try:
        profile = d.get("device_profile")
        if isinstance(profile, str):
            cb = load_profile(ref(profile))
        elif profile:
            cb = Codebook.from_profile(profile)
        else:
            cb = Codebook.uniform()
        scene = load_scene(ref(d["scene"]))
        bim = load_bim(ref(d["bim"]), cb) if d.get("bim") else None
        sens = d.get("sensors", {})
        meas = d.get("measurement", {})
        seed = int(d.get("seed", 0))
        normal = d.get("d_o_normal")
        obs = d.get("obstacle_trajectory")
        return Scenario(
            scene=scene,
            rx_trajectory=Trajectory.from_list(d["rx_trajectory"]),
            strategies=tuple(d["strategies"]),
            bim=bim,
            obstacle_trajectory=Trajectory.from_list(obs) if obs else None,
            sensors=SensorConfig(float(sens.get("uwb_sigma_m", 0.1 / 3)),
                                 float(sens.get("uwb_rate_hz", 200.0)),
                                 float(sens.get("gyro_sigma_deg", 0.2 / 3)),
                                 float(sens.get("gyro_rate_hz", 200.0)), seed),
            measurement=MeasurementNoise(float(meas.get("sigma_db", 0.5)),
                                         int(meas.get("reads", 3)),
                                         float(meas.get("noise_floor_dbm", -90.0)),
                                         float(meas.get("tx_power_dbm", 10.0))),
            duration=float(d["duration_s"]),
            decision_rate=float(d.get("decision_rate_hz", 10.0)),
            seed=seed,
            dynamic=DynamicConfig(float(d.get("eta_m", 0.30))),
            d_o_normal=Point2(*map(float, normal)) if normal else None,
            codebook=cb,
        )
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed scenario: {exc!r}") from exc


def save_scenario(sc: Scenario, path, scene_ref: str, bim_ref: str | None) -> None:
    os.makedirs(FsPath(path).parent, exist_ok=True)
    with open(path, "w") as f:
        json.dump(scenario_to_dict(sc, scene_ref, bim_ref), f, indent=2)
        f.write("\n")


def sweeps_total(rows: Iterable[MetricsRow]) -> dict[str, int]:
    out: dict[str, int] = {}
    for row in rows:
        out[row.strategy] = out.get(row.strategy, 0) + row.sweeps_used
    return out
