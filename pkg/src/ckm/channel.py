"""
Site-specific narrowband multipath channel and received-power measurement.

The channel is the line-of-sight path plus one specular bounce per
reflector (image method). Each path carries a free-space amplitude
lambda/(4*pi*L), a phase of -2*pi*L/lambda, and the losses of every
reflection and penetrated wall. Arrays are front-facing panels: a path that
leaves or arrives from behind an array plane carries no energy and is
dropped.

Received power readings follow the prototype protocol: each beam-pair test
takes several reads with Gaussian dB noise and keeps the maximum.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .geometry import (Point2, Pose, Segment2, bearing, mirror_point, rotate,
                       segment_intersection, side_of, wrap_angle)
from .phased_array import Codebook, gain_matrix, pair_gain, beam_vector

SPEED_OF_LIGHT = 299_792_458.0
DEFAULT_FREQUENCY_HZ = 28e9
DEFAULT_WALL_DB = 40.0
DEFAULT_REFLECTOR_DB = 3.0
DEFAULT_CUTOFF_DB = 60.0

LOS = "LoS"
REFLECTED = "Reflected"


@dataclass(frozen=True)
class Wall:
    segment: Segment2
    attenuation_db: float = DEFAULT_WALL_DB

    def __post_init__(self):
        object.__setattr__(self, "attenuation_db", float(self.attenuation_db))


@dataclass(frozen=True)
class Reflector:
    segment: Segment2
    loss_db: float = DEFAULT_REFLECTOR_DB

    def __post_init__(self):
        object.__setattr__(self, "loss_db", float(self.loss_db))


@dataclass(frozen=True)
class Obstacle:
    """Moving occluder. `footprint` is given in the obstacle's own frame and
    placed in the world by the obstacle pose (translate + rotate)."""

    footprint: Segment2
    attenuation_db: float = math.inf

    def place(self, pose: Pose) -> Segment2:
        a = pose.position + rotate(self.footprint.a, pose.orientation)
        b = pose.position + rotate(self.footprint.b, pose.orientation)
        return Segment2(a, b)


@dataclass(frozen=True)
class Scene:
    bounds: tuple[float, float, float, float]   # xmin, ymin, xmax, ymax
    tx: Pose
    walls: tuple[Wall, ...] = ()
    reflectors: tuple[Reflector, ...] = ()
    obstacle: Obstacle | None = None
    frequency_hz: float = DEFAULT_FREQUENCY_HZ
    blocking_cutoff_db: float = DEFAULT_CUTOFF_DB

    def __post_init__(self):
        object.__setattr__(self, "bounds", tuple(float(v) for v in self.bounds))
        object.__setattr__(self, "frequency_hz", float(self.frequency_hz))
        object.__setattr__(self, "blocking_cutoff_db", float(self.blocking_cutoff_db))
        xmin, ymin, xmax, ymax = self.bounds
        if not (xmin < xmax and ymin < ymax):
            raise ValidationError("scene bounds must have positive extent")
        if not self.contains(self.tx.position):
            raise ValidationError("transmitter outside scene bounds")
        for w in self.walls:
            if not w.attenuation_db >= 0:
                raise ValidationError("wall attenuation must be >= 0 dB")
        for r in self.reflectors:
            if not r.loss_db >= 0:
                raise ValidationError("reflector loss must be >= 0 dB")
        if self.obstacle is not None and not self.obstacle.attenuation_db >= 0:
            raise ValidationError("obstacle attenuation must be >= 0 dB")
        if self.frequency_hz <= 0:
            raise ValidationError("frequency must be positive")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.frequency_hz

    def contains(self, p: Point2, tol: float = 1e-9) -> bool:
        xmin, ymin, xmax, ymax = self.bounds
        return xmin - tol <= p.x <= xmax + tol and ymin - tol <= p.y <= ymax + tol


@dataclass(frozen=True)
class Path:
    kind: str
    gain: complex
    aod: float
    aoa: float
    length: float
    reflector: int | None = None
    vertices: tuple[Point2, ...] = field(default=(), compare=False)


ChannelPaths = tuple[Path, ...]


@dataclass(frozen=True)
class MeasurementNoise:
    """Reading model: `reads` Gaussian draws (std `sigma_db`) per test, max kept."""

    sigma_db: float = 0.5
    reads: int = 3
    noise_floor_dbm: float = -90.0
    tx_power_dbm: float = 10.0

    def __post_init__(self):
        if self.sigma_db < 0 or self.reads < 1:
            raise ValidationError("bad measurement noise config")

    def noiseless(self) -> "MeasurementNoise":
        return MeasurementNoise(0.0, self.reads, self.noise_floor_dbm, self.tx_power_dbm)


@dataclass(frozen=True)
class Measurement:
    rx_power_dbm: float
    beam_pair: tuple[int, int]
    timestamp: float = 0.0


@lru_cache(maxsize=1)
def default_codebook() -> Codebook:
    return Codebook.uniform()


def _blocking_loss(seg: Segment2, scene: Scene, obstacle_seg: Segment2 | None,
                   skip_reflector: int | None = None) -> float:
    """Total penetration loss along `seg` in dB; inf when something blocks it."""
    loss = 0.0
    for w in scene.walls:
        if segment_intersection(seg, w.segment) is not None:
            if w.attenuation_db > scene.blocking_cutoff_db:
                return math.inf
            loss += w.attenuation_db
    for k, r in enumerate(scene.reflectors):
        # metal plates are opaque to everything but their own bounce
        if k != skip_reflector and segment_intersection(seg, r.segment) is not None:
            return math.inf
    if obstacle_seg is not None and segment_intersection(seg, obstacle_seg) is not None:
        att = scene.obstacle.attenuation_db
        if att > scene.blocking_cutoff_db:
            return math.inf
        loss += att
    return loss


def _make_path(scene: Scene, rx: Pose, vertices: Sequence[Point2], loss_db: float,
               kind: str, reflector: int | None) -> Path | None:
    length = sum((b - a).norm() for a, b in zip(vertices, vertices[1:]))
    aod = wrap_angle(bearing(vertices[1] - vertices[0]) - scene.tx.orientation)
    aoa = wrap_angle(bearing(vertices[-2] - vertices[-1]) - rx.orientation)
    if abs(aod) >= 90.0 or abs(aoa) >= 90.0:
        return None
    lam = scene.wavelength
    amp = lam / (4.0 * math.pi * length) * 10.0 ** (-loss_db / 20.0)
    gain = amp * complex(math.cos(-2 * math.pi * length / lam),
                         math.sin(-2 * math.pi * length / lam))
    return Path(kind, gain, aod, aoa, length, reflector, tuple(vertices))


def resolve_paths(scene: Scene, rx: Pose, obstacle_pose: Pose | None = None) -> ChannelPaths:
    """LoS plus first-order reflected paths from the transmitter to `rx`."""
    if not scene.contains(rx.position):
        raise ValidationError(f"receiver ({rx.position.x}, {rx.position.y}) outside scene bounds")
    tx = scene.tx.position
    q = rx.position
    if tx == q:
        raise ValidationError("degenerate link")
    obstacle_seg = None
    if obstacle_pose is not None and scene.obstacle is not None:
        obstacle_seg = scene.obstacle.place(obstacle_pose)

    paths = []
    loss = _blocking_loss(Segment2(tx, q), scene, obstacle_seg)
    if math.isfinite(loss):
        p = _make_path(scene, rx, (tx, q), loss, LOS, None)
        if p is not None:
            paths.append(p)

    for k, refl in enumerate(scene.reflectors):
        s_tx = side_of(tx, refl.segment)
        s_rx = side_of(q, refl.segment)
        if not (s_tx * s_rx > 0):
            continue
        image = mirror_point(tx, refl.segment)
        bounce = segment_intersection(Segment2(image, q), refl.segment)
        if bounce is None or bounce == tx or bounce == q:
            continue
        loss = refl.loss_db
        for leg in (Segment2(tx, bounce), Segment2(bounce, q)):
            loss += _blocking_loss(leg, scene, obstacle_seg, skip_reflector=k)
        if not math.isfinite(loss):
            continue
        p = _make_path(scene, rx, (tx, bounce, q), loss, REFLECTED, k)
        if p is not None:
            paths.append(p)
    return tuple(paths)


def to_dbm(gain, noise: MeasurementNoise):
    """Noise-free link budget: tx power + 10*log10(gain), floored."""
    g = np.asarray(gain, dtype=float)
    with np.errstate(divide="ignore"):
        p = noise.tx_power_dbm + 10.0 * np.log10(g)
    return np.maximum(p, noise.noise_floor_dbm)


def reading_noise(noise: MeasurementNoise, seed, shape) -> np.ndarray:
    """Max-of-`reads` Gaussian dB offsets for an array of beam-pair tests.

    Entry [i, j] depends only on (seed, shape), so one pair measured alone and
    the same pair inside a full sweep see the same draws.
    """
    if noise.sigma_db == 0:
        return np.zeros(shape)
    rng = np.random.default_rng(seed)
    draws = rng.normal(0.0, noise.sigma_db, size=tuple(shape) + (noise.reads,))
    return draws.max(axis=-1)


def sweep_power(scene: Scene, rx: Pose, cb: Codebook, noise: MeasurementNoise,
                seed=0, obstacle_pose: Pose | None = None,
                paths: ChannelPaths | None = None) -> np.ndarray:
    """Measured power (dBm) of every beam pair, shape (tx beams, rx beams)."""
    if paths is None:
        paths = resolve_paths(scene, rx, obstacle_pose)
    g = gain_matrix(cb, paths)
    with np.errstate(divide="ignore"):
        p = noise.tx_power_dbm + 10.0 * np.log10(g)
    p = p + reading_noise(noise, seed, g.shape)
    return np.maximum(p, noise.noise_floor_dbm)


def measure_power(scene: Scene, rx: Pose, pair: tuple[int, int], noise: MeasurementNoise,
                  seed=0, cb: Codebook | None = None, obstacle_pose: Pose | None = None,
                  paths: ChannelPaths | None = None) -> Measurement:
    """One beam-pair test: deterministic link budget plus max-of-reads noise."""
    cb = default_codebook() if cb is None else cb
    m_t, m_r = cb.check_index(pair[0]), cb.check_index(pair[1])
    if paths is None:
        paths = resolve_paths(scene, rx, obstacle_pose)
    g = pair_gain(beam_vector(cb, m_t), beam_vector(cb, m_r), paths, cb.spacing)
    with np.errstate(divide="ignore"):
        p = noise.tx_power_dbm + 10.0 * np.log10(g) if g > 0 else -math.inf
    offset = reading_noise(noise, seed, (cb.num_beams, cb.num_beams))[m_t - 1, m_r - 1]
    return Measurement(float(max(p + offset, noise.noise_floor_dbm)), (m_t, m_r), rx.timestamp)


# -- scene files --------------------------------------------------------------

def _pt(v) -> Point2:
    if isinstance(v, dict):
        return Point2(float(v["x"]), float(v["y"]))
    x, y = v
    return Point2(float(x), float(y))


def _db(v) -> float:
    return math.inf if v is None else float(v)


def _db_out(v: float):
    return None if math.isinf(v) else v


def scene_from_dict(d: dict) -> Scene:
    try:
        tx = d["tx"]
        tx_pose = Pose(_pt(tx["position"]), float(tx.get("orientation_deg", 0.0)))
        walls = tuple(Wall(Segment2(_pt(w["a"]), _pt(w["b"])),
                           _db(w.get("attenuation_db", DEFAULT_WALL_DB)))
                      for w in d.get("walls", []))
        refl = tuple(Reflector(Segment2(_pt(r["a"]), _pt(r["b"])),
                               float(r.get("loss_db", DEFAULT_REFLECTOR_DB)))
                     for r in d.get("reflectors", []))
        obstacle = None
        if d.get("obstacle"):
            o = d["obstacle"]
            fp = o["footprint"]
            obstacle = Obstacle(Segment2(_pt(fp["a"]), _pt(fp["b"])),
                                _db(o.get("attenuation_db")))
        return Scene(tuple(float(v) for v in d["bounds"]), tx_pose, walls, refl, obstacle,
                     float(d.get("frequency_hz", DEFAULT_FREQUENCY_HZ)),
                     _db(d.get("blocking_cutoff_db", DEFAULT_CUTOFF_DB)))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"malformed scene: {exc!r}") from exc


def scene_to_dict(scene: Scene) -> dict:
    seg = lambda s: {"a": [s.a.x, s.a.y], "b": [s.b.x, s.b.y]}  # noqa: E731
    d = {
        "format": "ckm-scene",
        "version": 1,
        "units": {"length": "m", "angle": "deg", "loss": "dB", "frequency": "Hz"},
        "bounds": list(scene.bounds),
        "frequency_hz": scene.frequency_hz,
        "blocking_cutoff_db": _db_out(scene.blocking_cutoff_db),
        "tx": {"position": [scene.tx.position.x, scene.tx.position.y],
               "orientation_deg": scene.tx.orientation},
        "walls": [dict(seg(w.segment), attenuation_db=_db_out(w.attenuation_db))
                  for w in scene.walls],
        "reflectors": [dict(seg(r.segment), loss_db=r.loss_db) for r in scene.reflectors],
        "obstacle": None,
    }
    if scene.obstacle is not None:
        d["obstacle"] = {"footprint": seg(scene.obstacle.footprint),
                         "attenuation_db": _db_out(scene.obstacle.attenuation_db)}
    return d


def scene_hash(scene: Scene) -> str:
    blob = json.dumps(scene_to_dict(scene), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def load_scene(path) -> Scene:
    try:
        with open(path) as f:
            return scene_from_dict(json.load(f))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed scene file {path}: {exc}") from exc


def save_scene(scene: Scene, path) -> None:
    with open(path, "w") as f:
        json.dump(scene_to_dict(scene), f, indent=2)
        f.write("\n")
