"""
UWB position and gyroscope heading observers.

Both sensors sample on their own fixed-rate grid and hold the last sample
until the next tick. The noise of a sample depends only on
(seed, stream id, tick), so replays are exact and streams are independent.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ValidationError
from .geometry import Point2, Pose

# Tolerance when mapping a timestamp onto a sampling tick, so t = k/rate
# computed in floating point lands on tick k rather than k-1.
_TICK_EPS = 1e-9


@dataclass(frozen=True)
class SensorConfig:
    # ~3-sigma bounds of 10 cm (UWB) and 0.2 deg (gyro)
    uwb_sigma: float = 0.1 / 3
    uwb_rate: float = 200.0
    gyro_sigma: float = 0.2 / 3
    gyro_rate: float = 200.0
    seed: int = 0

    def __post_init__(self):
        if self.uwb_rate <= 0 or self.gyro_rate <= 0:
            raise ValidationError("sensor rates must be positive")
        if self.uwb_sigma < 0 or self.gyro_sigma < 0:
            raise ValidationError("sensor sigmas must be >= 0")

    @classmethod
    def ideal(cls, seed: int = 0) -> "SensorConfig":
        return cls(uwb_sigma=0.0, gyro_sigma=0.0, seed=seed)


ObservedPose = Pose


def tick_of(t: float, rate: float) -> int:
    return math.floor(t * rate + _TICK_EPS)


def _stream_key(stream_id) -> int:
    if isinstance(stream_id, int):
        return stream_id
    return zlib.crc32(str(stream_id).encode())


def _draw(cfg: SensorConfig, stream_id, channel: int, tick: int, n: int) -> np.ndarray:
    rng = np.random.default_rng([cfg.seed, _stream_key(stream_id), channel, tick])
    return rng.standard_normal(n)


def position_noise(cfg: SensorConfig, stream_id, tick: int) -> tuple[float, float]:
    if cfg.uwb_sigma == 0:
        return 0.0, 0.0
    dx, dy = _draw(cfg, stream_id, 0, tick, 2) * cfg.uwb_sigma
    return float(dx), float(dy)


def heading_noise(cfg: SensorConfig, stream_id, tick: int) -> float:
    if cfg.gyro_sigma == 0:
        return 0.0
    return float(_draw(cfg, stream_id, 1, tick, 1)[0] * cfg.gyro_sigma)


def observe(truth: Pose, cfg: SensorConfig, stream_id) -> ObservedPose:
    """Noisy reading of `truth`, stamped with the containing UWB tick.

    The noise is that of the sampling tick covering `truth.timestamp`, so any
    two queries inside one tick of a static truth return the same reading.
    """
    pt = tick_of(truth.timestamp, cfg.uwb_rate)
    ht = tick_of(truth.timestamp, cfg.gyro_rate)
    dx, dy = position_noise(cfg, stream_id, pt)
    dh = heading_noise(cfg, stream_id, ht)
    pos = Point2(truth.position.x + dx, truth.position.y + dy)
    return Pose(pos, truth.orientation + dh, pt / cfg.uwb_rate)


class SensorStream:
    """Sample-and-hold observer of a ground-truth trajectory.

    `truth_fn(t)` returns the true Pose at time t. Position is sampled at the
    UWB rate and heading at the gyro rate, each from the truth at its own
    latest tick.
    """

    def __init__(self, truth_fn: Callable[[float], Pose], cfg: SensorConfig, stream_id):
        self.truth_fn = truth_fn
        self.cfg = cfg
        self.stream_id = stream_id

    def observe(self, t: float) -> ObservedPose:
        cfg = self.cfg
        pt = tick_of(t, cfg.uwb_rate)
        ht = tick_of(t, cfg.gyro_rate)
        p_truth = self.truth_fn(pt / cfg.uwb_rate).position
        h_truth = self.truth_fn(ht / cfg.gyro_rate).orientation
        dx, dy = position_noise(cfg, self.stream_id, pt)
        dh = heading_noise(cfg, self.stream_id, ht)
        return Pose(Point2(p_truth.x + dx, p_truth.y + dy), h_truth + dh, pt / cfg.uwb_rate)
