"""
Beam index map: per-grid-cell optimal beam pairs learned offline.

Construction fixes the transmitter, walks the receiver over every cell
center, sweeps all tx x rx beam pairs with the measurement protocol and
stores the winner. In dynamic mode each cell also stores a second pair for
the reflected (NLoS) link so the online strategy can switch to it when the
direct link is about to be blocked.
"""

from __future__ import annotations

import datetime as _dt
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import (MeasurementNoise, REFLECTED, Scene, resolve_paths, scene_hash,
                      sweep_power)
from .errors import BimFormatError, ValidationError
from .geometry import Point2, Pose, link_angle, wrap_angle
from .phased_array import Codebook, nearest_beam

log = logging.getLogger(__name__)

BIM_FORMAT = "ckm-bim"
BIM_VERSION = 1
STATIC = "static"
DYNAMIC = "dynamic"
DEFAULT_CELL = 0.8
DEFAULT_LOS_CONE_DEG = 15.0
_TIE_TOL_M = 1e-9


@dataclass(frozen=True)
class GridSpec:
    """nx x ny square cells, numbered 1.. row-major starting at `origin`
    (the lower-left corner)."""

    origin: Point2
    nx: int
    ny: int
    cell: float = DEFAULT_CELL

    def __post_init__(self):
        if not self.cell > 0:
            raise ValidationError("grid cell size must be positive")
        if self.nx < 1 or self.ny < 1:
            raise ValidationError("grid needs at least one cell")

    @classmethod
    def covering(cls, xmin: float, ymin: float, width: float, height: float,
                 cell: float = DEFAULT_CELL) -> "GridSpec":
        nx = round(width / cell)
        ny = round(height / cell)
        if not (math.isclose(nx * cell, width) and math.isclose(ny * cell, height)):
            raise ValidationError(f"{width} x {height} area is not a whole number of {cell} m cells")
        return cls(Point2(xmin, ymin), nx, ny, cell)

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        """'x0,y0,cell,nx,ny' as used on the command line."""
        try:
            x0, y0, cell, nx, ny = text.split(",")
            return cls(Point2(float(x0), float(y0)), int(nx), int(ny), float(cell))
        except ValueError as exc:
            raise ValidationError(f"bad grid spec {text!r}, want x0,y0,cell,nx,ny") from exc

    @property
    def num_cells(self) -> int:
        return self.nx * self.ny

    def center(self, grid_id: int) -> Point2:
        if not 1 <= grid_id <= self.num_cells:
            raise ValidationError(f"grid id {grid_id} out of range")
        iy, ix = divmod(grid_id - 1, self.nx)
        return Point2(self.origin.x + (ix + 0.5) * self.cell,
                      self.origin.y + (iy + 0.5) * self.cell)

    def centers(self) -> np.ndarray:
        return np.array([tuple(self.center(i)) for i in range(1, self.num_cells + 1)])

    def extent(self) -> tuple[float, float, float, float]:
        return (self.origin.x, self.origin.y,
                self.origin.x + self.nx * self.cell, self.origin.y + self.ny * self.cell)

    def to_dict(self) -> dict:
        return {"origin": [self.origin.x, self.origin.y], "cell_m": self.cell,
                "nx": self.nx, "ny": self.ny, "numbering": "row-major"}

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        x, y = d["origin"]
        return cls(Point2(float(x), float(y)), int(d["nx"]), int(d["ny"]), float(d["cell_m"]))


@dataclass(frozen=True)
class BimRecord:
    grid_id: int
    center: Point2
    los_pair: tuple[int, int]
    nlos_pair: tuple[int, int] | None = None
    los_power_dbm: float | None = None
    nlos_power_dbm: float | None = None


@dataclass(frozen=True)
class Bim:
    grid: GridSpec
    records: tuple[BimRecord, ...]
    profile: dict
    profile_hash: str
    construction: dict = field(default_factory=dict)

    def __post_init__(self):
        ids = [r.grid_id for r in self.records]
        if len(set(ids)) != len(ids):
            raise BimFormatError("duplicate grid_id")
        if sorted(ids) != list(range(1, self.grid.num_cells + 1)):
            raise BimFormatError("incomplete BIM")
        object.__setattr__(self, "records",
                           tuple(sorted(self.records, key=lambda r: r.grid_id)))
        object.__setattr__(self, "_centers", self.grid.centers())

    def record(self, grid_id: int) -> BimRecord:
        return self.records[grid_id - 1]

    @property
    def mode(self) -> str:
        return self.construction.get("mode", STATIC)

    @property
    def rx_orientation(self) -> float:
        return float(self.construction.get("rx_orientation_deg", 0.0))

    @property
    def pair_evaluations(self) -> int:
        return int(self.construction.get("pair_evaluations", 0))


def _argmax_pair(power: np.ndarray, mask: np.ndarray | None = None):
    """Best (tx, rx) 1-based pair; ties go to the lower tx then rx index."""
    p = power if mask is None else np.where(mask, power, -np.inf)
    flat = int(np.argmax(p))
    if not np.isfinite(p.flat[flat]):
        return None, None
    i, j = divmod(flat, power.shape[1])
    return (i + 1, j + 1), float(power[i, j])


def construct_bim(scene: Scene, grid: GridSpec, cb: Codebook, mode: str = STATIC,
                  rx_orientation: float = 0.0, noise: MeasurementNoise | None = None,
                  seed: int = 0, los_cone_deg: float = DEFAULT_LOS_CONE_DEG,
                  created: str | None = None) -> Bim:
    """Exhaustively sweep every cell center and record the best beam pairs.

    In `static` mode the overall best pair is stored. In `dynamic` mode the
    pairs whose tx beam lies within `los_cone_deg` of the geometric tx->cell
    direction form the LoS class; the best of that class is the LoS pair and
    the best pair outside it is the NLoS pair. Cells with no reflected path
    get no NLoS pair.
    """
    if mode not in (STATIC, DYNAMIC):
        raise ValidationError(f"unknown BIM mode {mode!r}")
    noise = MeasurementNoise() if noise is None else noise
    xmin, ymin, xmax, ymax = grid.extent()
    if not (scene.contains(Point2(xmin, ymin)) and scene.contains(Point2(xmax, ymax))):
        raise ValidationError("grid outside scene bounds")

    tx = scene.tx
    alpha = cb.angle_array
    records = []
    evaluations = 0
    for gid in range(1, grid.num_cells + 1):
        c = grid.center(gid)
        rx = Pose(c, rx_orientation)
        paths = resolve_paths(scene, rx)
        power = sweep_power(scene, rx, cb, noise, seed=[seed, gid], paths=paths)
        evaluations += power.size

        if mode == STATIC:
            pair, p = _argmax_pair(power)
            records.append(BimRecord(gid, c, pair, None, p))
            continue

        los_dir = wrap_angle(link_angle(tx.position, c) - tx.orientation)
        in_cone = np.abs(alpha - los_dir) <= los_cone_deg
        los_mask = np.broadcast_to(in_cone[:, None], power.shape)
        los_pair, los_p = _argmax_pair(power, los_mask)
        if los_pair is None:
            los_pair, los_p = _argmax_pair(power)
        nlos_pair = nlos_p = None
        if any(pt.kind == REFLECTED for pt in paths):
            nlos_pair, nlos_p = _argmax_pair(power, ~los_mask)
        records.append(BimRecord(gid, c, los_pair, nlos_pair, los_p, nlos_p))

    construction = {
        "mode": mode,
        "seed": seed,
        "rx_orientation_deg": rx_orientation,
        "los_cone_deg": los_cone_deg,
        "scene_hash": scene_hash(scene),
        "pair_evaluations": evaluations,
        "measurement": {"sigma_db": noise.sigma_db, "reads": noise.reads,
                        "noise_floor_dbm": noise.noise_floor_dbm,
                        "tx_power_dbm": noise.tx_power_dbm},
        "created": created if created is not None
        else _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    return Bim(grid, tuple(records), cb.to_profile(), cb.profile_hash(), construction)


def locate_grid(bim: Bim, q_hat: Point2) -> int:
    """Cell whose center is nearest to `q_hat` (lower id on ties)."""
    d = np.hypot(bim._centers[:, 0] - q_hat.x, bim._centers[:, 1] - q_hat.y)
    # distances equal up to rounding count as a tie
    return int(np.flatnonzero(d <= d.min() + _TIE_TOL_M)[0]) + 1


def refine_rx_beam(bim: Bim, cb: Codebook, grid_id: int, omega: float,
                   link: str = "los") -> int:
    """Shift the stored receive beam by `omega` degrees and re-quantize.

    argmin_j |alpha(m_r) + omega - alpha(j)|, clamped at the codebook edges.
    Positive `omega` moves the target toward positive array angles.
    """
    rec = bim.record(grid_id)
    pair = rec.nlos_pair if link == "nlos" else rec.los_pair
    if pair is None:
        raise ValidationError(f"grid {grid_id} has no {link} pair")
    if omega == 0:
        return pair[1]
    return nearest_beam(cb, cb.angle(pair[1]) + omega)


# -- persistence --------------------------------------------------------------

def bim_to_dict(bim: Bim) -> dict:
    recs = []
    for r in bim.records:
        recs.append({
            "grid_id": r.grid_id,
            "center": [r.center.x, r.center.y],
            "los_pair": list(r.los_pair),
            "nlos_pair": None if r.nlos_pair is None else list(r.nlos_pair),
            "los_power_dbm": r.los_power_dbm,
            "nlos_power_dbm": r.nlos_power_dbm,
        })
    return {
        "format": BIM_FORMAT,
        "version": BIM_VERSION,
        "units": {"length": "m", "angle": "deg", "power": "dBm"},
        "grid": bim.grid.to_dict(),
        "device_profile": bim.profile,
        "device_profile_hash": bim.profile_hash,
        "construction": bim.construction,
        "records": recs,
    }


def _pair(v, num_beams: int):
    if v is None:
        return None
    if len(v) != 2:
        raise BimFormatError("beam pair must have two indices")
    out = []
    for m in v:
        if isinstance(m, bool) or not isinstance(m, int):
            raise BimFormatError(f"beam index {m!r} is not an integer")
        if not 1 <= m <= num_beams:
            raise BimFormatError(f"index out of codebook: {m}")
        out.append(m)
    return tuple(out)


def bim_from_dict(d: dict, cb: Codebook | None = None) -> Bim:
    if d.get("format") != BIM_FORMAT:
        raise BimFormatError("not a BIM file")
    if d.get("version") != BIM_VERSION:
        raise BimFormatError(f"unsupported BIM version {d.get('version')}")
    try:
        grid = GridSpec.from_dict(d["grid"])
        profile = d["device_profile"]
        stored_hash = d["device_profile_hash"]
        raw = d["records"]
    except (KeyError, TypeError, ValueError) as exc:
        raise BimFormatError(f"malformed BIM: {exc!r}") from exc

    file_cb = Codebook.from_profile(profile)
    if file_cb.profile_hash() != stored_hash:
        raise BimFormatError("device profile hash does not match profile")
    if cb is not None and cb.profile_hash() != stored_hash:
        raise BimFormatError("device profile mismatch")

    ids = [r.get("grid_id") for r in raw]
    if len(set(ids)) != len(ids):
        raise BimFormatError("duplicate grid_id")
    if len(raw) != grid.num_cells or set(ids) != set(range(1, grid.num_cells + 1)):
        raise BimFormatError("incomplete BIM")

    records = []
    for r in raw:
        gid = r["grid_id"]
        cx, cy = r["center"]
        center = Point2(float(cx), float(cy))
        expect = grid.center(gid)
        if abs(center.x - expect.x) > 1e-9 or abs(center.y - expect.y) > 1e-9:
            raise BimFormatError(f"grid {gid} center does not match grid spec")
        records.append(BimRecord(gid, center,
                                 _pair(r["los_pair"], file_cb.num_beams),
                                 _pair(r.get("nlos_pair"), file_cb.num_beams),
                                 r.get("los_power_dbm"), r.get("nlos_power_dbm")))
    return Bim(grid, tuple(records), profile, stored_hash, d.get("construction", {}))


def save_bim(bim: Bim, path) -> None:
    with open(path, "w") as f:
        json.dump(bim_to_dict(bim), f, indent=2)
        f.write("\n")


def load_bim(path, cb: Codebook | None = None) -> Bim:
    try:
        with open(path) as f:
            d = json.load(f)
    except json.JSONDecodeError as exc:
        raise BimFormatError(f"malformed BIM file {path}: {exc}") from exc
    if not isinstance(d, dict):
        raise BimFormatError("malformed BIM file")
    return bim_from_dict(d, cb)
