"""
The three reference experiments as ready-made scenarios.

exp1-los      4 m x 4 m open area, receiver parked on one cell and rotated
              from -40 to +40 deg in 5 deg steps (17 points).
exp2-nlos     3.2 m x 4.8 m area (24 cells) behind a 0.4 m concrete wall;
              a copper reflector below the area provides the only usable
              link. The receiver visits every cell center.
exp3-dynamic  4 m x 4 m area with a side reflector and a 0.5 m wide plate on
              a vehicle crossing the direct link; the plate offset from the
              link goes from -50 cm to +50 cm in 10 cm steps (11 points).

Coordinates put the lower-left corner of each mapped area at the origin.
Default materials: walls 40 dB per face crossing (the concrete wall is a
0.4 m thick rectangle, so a traversal costs 80 dB), reflectors 3 dB, the
vehicle plate fully opaque.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path as FsPath

from .alignment import DynamicConfig
from .channel import MeasurementNoise, Obstacle, Reflector, Scene, Wall, save_scene
from .ckm_store import DYNAMIC, STATIC, GridSpec, construct_bim, save_bim
from .errors import ValidationError
from .geometry import Point2, Pose, Segment2, link_angle, rotate
from .harness import (CKM_DYNAMIC, CKM_STATIC, EXHAUSTIVE, LOCATION, Scenario, Trajectory,
                      Waypoint, save_scenario)
from .sensors import SensorConfig

PRESETS = ("exp1-los", "exp2-nlos", "exp3-dynamic")

EXP1_OMEGAS = tuple(range(-40, 41, 5))
EXP3_OFFSETS = tuple(round(0.1 * k - 0.5, 1) for k in range(11))
PLATE_HALF_WIDTH = 0.25
STEP_S = 0.1


@dataclass
class Preset:
    name: str
    scene: Scene
    grid: GridSpec
    bim_mode: str
    rx_heading: float
    scenario: Scenario          # bim left empty until built

    def build(self, construction_noise: MeasurementNoise | None = None) -> Scenario:
        """Construct the BIM and return the scenario with it attached."""
        noise = self.scenario.measurement if construction_noise is None else construction_noise
        bim = construct_bim(self.scene, self.grid, self.scenario.codebook, self.bim_mode,
                            rx_orientation=self.rx_heading, noise=noise,
                            seed=self.scenario.seed)
        return replace(self.scenario, bim=bim)


def _rect_walls(x0, y0, x1, y1, db=40.0):
    c = [Point2(x0, y0), Point2(x1, y0), Point2(x1, y1), Point2(x0, y1)]
    return tuple(Wall(Segment2(c[i], c[(i + 1) % 4]), db) for i in range(4))


def exp1_los(seed: int = 0) -> Preset:
    # tx set back from the area so the link points close to a beam center
    scene = Scene((-3.4, -0.5, 4.5, 4.5), Pose(Point2(-3.0, 1.425), 0.0))
    grid = GridSpec.covering(0.0, 0.0, 4.0, 4.0)
    heading = 180.0
    rx = grid.center(19)
    wps = [Waypoint(k * STEP_S, rx.x, rx.y, heading + w) for k, w in enumerate(EXP1_OMEGAS)]
    sc = Scenario(scene, Trajectory(wps), (EXHAUSTIVE, LOCATION, CKM_STATIC),
                  duration=len(wps) * STEP_S, decision_rate=1 / STEP_S, seed=seed)
    return Preset("exp1-los", scene, grid, STATIC, heading, sc)


def exp2_nlos(seed: int = 0) -> Preset:
    tilt = 20.0
    scene = Scene(
        (-3.3, -0.9, 3.6, 5.2),
        Pose(Point2(-2.8, 2.4), -tilt),
        walls=_rect_walls(-1.6, 1.6, -1.2, 3.2),
        reflectors=(Reflector(Segment2(Point2(-2.8, -0.6), Point2(3.6, -0.6)), 3.0),),
    )
    grid = GridSpec.covering(0.0, 0.0, 3.2, 4.8)
    heading = 180.0 + tilt
    wps = []
    for k in range(grid.num_cells):
        c = grid.center(k + 1)
        wps.append(Waypoint(k * STEP_S, c.x, c.y, heading))
    sc = Scenario(scene, Trajectory(wps), (EXHAUSTIVE, LOCATION, CKM_STATIC),
                  duration=len(wps) * STEP_S, decision_rate=1 / STEP_S, seed=seed)
    return Preset("exp2-nlos", scene, grid, STATIC, heading, sc)


def exp3_dynamic(seed: int = 0) -> Preset:
    tx = Point2(-0.6, 2.6)
    scene = Scene(
        (-1.0, -0.5, 4.8, 4.5),
        Pose(tx, 0.0),
        reflectors=(Reflector(Segment2(Point2(-0.6, 4.2), Point2(4.6, 4.2)), 3.0),),
        obstacle=Obstacle(Segment2(Point2(0.0, -PLATE_HALF_WIDTH), Point2(0.0, PLATE_HALF_WIDTH))),
    )
    grid = GridSpec.covering(0.0, 0.0, 4.0, 4.0)
    heading = 180.0
    rx = grid.center(19)
    phi = link_angle(tx, rx)
    normal = rotate(Point2(1.0, 0.0), phi + 90.0)
    mid = Point2(0.5 * (tx.x + rx.x), 0.5 * (tx.y + rx.y))
    rx_wps, obs_wps = [], []
    for k, d in enumerate(EXP3_OFFSETS):
        p = mid + d * normal
        rx_wps.append(Waypoint(k * STEP_S, rx.x, rx.y, heading))
        # the plate faces the link, so its width spans the offset direction
        obs_wps.append(Waypoint(k * STEP_S, p.x, p.y, phi))
    sc = Scenario(scene, Trajectory(rx_wps), (EXHAUSTIVE, LOCATION, CKM_DYNAMIC),
                  obstacle_trajectory=Trajectory(obs_wps),
                  duration=len(obs_wps) * STEP_S, decision_rate=1 / STEP_S, seed=seed,
                  dynamic=DynamicConfig(0.30), d_o_normal=normal)
    return Preset("exp3-dynamic", scene, grid, DYNAMIC, heading, sc)


_FACTORIES = {"exp1-los": exp1_los, "exp2-nlos": exp2_nlos, "exp3-dynamic": exp3_dynamic}


def get_preset(name: str, seed: int = 0) -> Preset:
    try:
        return _FACTORIES[name](seed)
    except KeyError:
        raise ValidationError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None


def write_preset(name: str, out_dir, seed: int = 0) -> dict[str, FsPath]:
    """Write scene.json, bim.json and scenario.json for a preset."""
    preset = get_preset(name, seed)
    out = FsPath(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scenario = preset.build()
    files = {"scene": out / "scene.json", "bim": out / "bim.json",
             "scenario": out / "scenario.json"}
    save_scene(preset.scene, files["scene"])
    save_bim(scenario.bim, files["bim"])
    save_scenario(scenario, files["scenario"], "scene.json", "bim.json")
    return files


def ideal(sc: Scenario) -> Scenario:
    """Same scenario with noiseless sensors and power readings."""
    return replace(sc, sensors=SensorConfig.ideal(sc.seed),
                   measurement=sc.measurement.noiseless())
