"""
Online beam-alignment strategies.

All strategies return a `StrategyDecision`. Only the exhaustive sweep
spends beam-pair evaluations; the location- and map-based strategies are
training-free and work from observed (noisy) poses. `change_filter` then
counts the control commands actually needed, one per array whose beam
index changed.

Angle frames: headings are degrees CCW from +x. An array angle is the
direction of the far end minus the array heading, so a receiver turned
CCW by d sees every arrival shifted by -d.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

from .channel import MeasurementNoise, Scene, sweep_power
from .ckm_store import Bim, locate_grid, refine_rx_beam, _argmax_pair
from .geometry import Pose, link_angle, perp_distance, project_ratio, wrap_angle
from .phased_array import Codebook, nearest_beam

log = logging.getLogger(__name__)

LOS = "LoS"
NLOS = "NLoS"
NA = "n/a"

# Guard so an obstacle placed exactly on the threshold is not pushed out of
# it by rounding in the projection arithmetic.
_ETA_EPS = 1e-9


@dataclass(frozen=True)
class StrategyDecision:
    tx_beam: int
    rx_beam: int
    link_choice: str = NA
    commands_sent: int = 0
    sweeps_used: int = 0

    @property
    def pair(self) -> tuple[int, int]:
        return self.tx_beam, self.rx_beam


@dataclass(frozen=True)
class DynamicConfig:
    eta: float = 0.30

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be positive")


def location_strategy(tx_obs: Pose, rx_obs: Pose, cb: Codebook) -> StrategyDecision:
    """Point both arrays along the observed geometric link (LoS assumed)."""
    phi = link_angle(tx_obs.position, rx_obs.position)
    tx_beam = nearest_beam(cb, wrap_angle(phi - tx_obs.orientation))
    # the transmitter is seen from the receiver at phi + 180
    rx_beam = nearest_beam(cb, wrap_angle(phi + 180.0 - rx_obs.orientation))
    return StrategyDecision(tx_beam, rx_beam, LOS, 0, 0)


def orientation_offset(bim: Bim, rx_obs: Pose) -> float:
    """Receiver rotation relative to the BIM construction heading, expressed
    as the shift it causes in receive-array angles."""
    return -wrap_angle(rx_obs.orientation - bim.rx_orientation)


def ckm_static_strategy(bim: Bim, rx_obs: Pose, cb: Codebook) -> StrategyDecision:
    gid = locate_grid(bim, rx_obs.position)
    rec = bim.record(gid)
    rx_beam = refine_rx_beam(bim, cb, gid, orientation_offset(bim, rx_obs))
    return StrategyDecision(rec.los_pair[0], rx_beam, LOS, 0, 0)


def obstacle_near_link(tx_obs: Pose, rx_obs: Pose, obs_obs: Pose | None,
                       cfg: DynamicConfig) -> tuple[bool, float | None, float | None]:
    """(switch?, r, |d_o|) for the obstacle projected onto the tx->rx link."""
    if obs_obs is None:
        return False, None, None
    r = project_ratio(tx_obs.position, rx_obs.position, obs_obs.position)
    d_o = perp_distance(tx_obs.position, rx_obs.position, obs_obs.position)
    return (0.0 < r < 1.0 and d_o <= cfg.eta + _ETA_EPS), r, d_o


def ckm_dynamic_strategy(bim: Bim, tx_obs: Pose, rx_obs: Pose, obs_obs: Pose | None,
                         cfg: DynamicConfig, cb: Codebook) -> StrategyDecision:
    """Use the stored LoS pair unless the obstacle sits inside the eta-tube
    around the link, in which case switch to the stored reflected pair."""
    gid = locate_grid(bim, rx_obs.position)
    rec = bim.record(gid)
    near, _, _ = obstacle_near_link(tx_obs, rx_obs, obs_obs, cfg)
    link = "los"
    if near:
        if rec.nlos_pair is None:
            log.warning("grid %d has no NLoS pair; staying on LoS", gid)
        else:
            link = "nlos"
    pair = rec.nlos_pair if link == "nlos" else rec.los_pair
    rx_beam = refine_rx_beam(bim, cb, gid, orientation_offset(bim, rx_obs), link=link)
    return StrategyDecision(pair[0], rx_beam, NLOS if link == "nlos" else LOS, 0, 0)


def exhaustive_strategy(scene: Scene, rx: Pose, cb: Codebook, seed=0,
                        noise: MeasurementNoise | None = None,
                        obstacle_pose: Pose | None = None,
                        power=None) -> StrategyDecision:
    """Measure all pairs on the current channel and keep the best.

    `power` may carry an already measured sweep matrix for this realization.
    """
    noise = MeasurementNoise() if noise is None else noise
    if power is None:
        power = sweep_power(scene, rx, cb, noise, seed, obstacle_pose)
    pair, _ = _argmax_pair(power)
    return StrategyDecision(pair[0], pair[1], NA, 0, power.size)


def change_filter(prev: StrategyDecision | None, nxt: StrategyDecision) -> StrategyDecision:
    """Count control frames: one per array whose beam index changed.

    With no previous decision both arrays must be configured.
    """
    if prev is None:
        n = 2
    else:
        n = int(prev.tx_beam != nxt.tx_beam) + int(prev.rx_beam != nxt.rx_beam)
    return replace(nxt, commands_sent=n)
