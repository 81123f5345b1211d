"""
Uniform linear phased array and its fixed beam codebook.

Beam indices are 1-based (1..num_beams) to match the device numbering.
Angles are degrees relative to the array boresight, positive
counter-clockwise. Element n (0-based) of a steering vector carries phase
2*pi*spacing*n*sin(theta) and magnitude 1/sqrt(num_elements).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ValidationError

DEFAULT_NUM_BEAMS = 64
DEFAULT_NUM_ELEMENTS = 16
DEFAULT_ANGLE_RANGE = (-56.0, 56.0)
DEFAULT_SPACING = 0.5


def steering_vector(theta: float, num_elements: int = DEFAULT_NUM_ELEMENTS,
                    spacing: float = DEFAULT_SPACING) -> np.ndarray:
    """Unit-norm array response toward `theta` degrees off boresight."""
    if not abs(theta) < 90.0:
        raise ValidationError(f"behind array plane: theta={theta}")
    n = np.arange(num_elements)
    phase = 2.0 * np.pi * spacing * n * np.sin(np.radians(theta))
    return np.exp(1j * phase) / np.sqrt(num_elements)


def steering_matrix(thetas, num_elements: int = DEFAULT_NUM_ELEMENTS,
                    spacing: float = DEFAULT_SPACING) -> np.ndarray:
    """Rows are `steering_vector(theta)` for each theta."""
    thetas = np.asarray(thetas, dtype=float)
    if np.any(np.abs(thetas) >= 90.0):
        raise ValidationError("behind array plane")
    n = np.arange(num_elements)
    phase = 2.0 * np.pi * spacing * np.outer(np.sin(np.radians(thetas)), n)
    return np.exp(1j * phase) / np.sqrt(num_elements)


@dataclass(frozen=True)
class Codebook:
    """Ordered beam-index -> steering-angle table plus per-beam weights.

    Build the device default with `Codebook.uniform()`; a JSON device profile
    round-trips through `to_profile` / `from_profile`.
    """

    angles: tuple[float, ...]
    num_elements: int = DEFAULT_NUM_ELEMENTS
    spacing: float = DEFAULT_SPACING
    vectors: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        angles = tuple(float(a) for a in self.angles)
        object.__setattr__(self, "angles", angles)
        if len(angles) < 2:
            raise ValidationError("codebook needs at least 2 beams")
        if any(b <= a for a, b in zip(angles, angles[1:])):
            raise ValidationError("codebook angles must be strictly increasing")
        if self.num_elements < 1 or self.spacing <= 0:
            raise ValidationError("bad array geometry")
        vecs = steering_matrix(angles, self.num_elements, self.spacing)
        vecs.setflags(write=False)
        object.__setattr__(self, "vectors", vecs)

    @classmethod
    def uniform(cls, num_beams: int = DEFAULT_NUM_BEAMS,
                angle_min: float = DEFAULT_ANGLE_RANGE[0],
                angle_max: float = DEFAULT_ANGLE_RANGE[1],
                num_elements: int = DEFAULT_NUM_ELEMENTS,
                spacing: float = DEFAULT_SPACING) -> "Codebook":
        if num_beams < 2:
            raise ValidationError("codebook needs at least 2 beams")
        angles = np.linspace(angle_min, angle_max, num_beams)
        return cls(tuple(angles), num_elements, spacing)

    @property
    def num_beams(self) -> int:
        return len(self.angles)

    @property
    def angle_array(self) -> np.ndarray:
        return np.asarray(self.angles)

    def check_index(self, m: int) -> int:
        if isinstance(m, bool) or int(m) != m or not 1 <= m <= self.num_beams:
            raise ValidationError(f"beam index {m} out of codebook (1..{self.num_beams})")
        return int(m)

    def angle(self, m: int) -> float:
        """alpha(m): steering angle of beam m."""
        return self.angles[self.check_index(m) - 1]

    def to_profile(self) -> dict:
        uni = np.linspace(self.angles[0], self.angles[-1], self.num_beams)
        profile = {
            "num_beams": self.num_beams,
            "angle_min_deg": self.angles[0],
            "angle_max_deg": self.angles[-1],
            "num_elements": self.num_elements,
            "spacing_wavelengths": self.spacing,
        }
        if not np.allclose(uni, self.angles, rtol=0, atol=1e-12):
            profile["angles_deg"] = list(self.angles)
        return profile

    @classmethod
    def from_profile(cls, profile: dict) -> "Codebook":
        try:
            ne = int(profile.get("num_elements", DEFAULT_NUM_ELEMENTS))
            sp = float(profile.get("spacing_wavelengths", DEFAULT_SPACING))
            if "angles_deg" in profile:
                return cls(tuple(profile["angles_deg"]), ne, sp)
            return cls.uniform(int(profile.get("num_beams", DEFAULT_NUM_BEAMS)),
                               float(profile.get("angle_min_deg", DEFAULT_ANGLE_RANGE[0])),
                               float(profile.get("angle_max_deg", DEFAULT_ANGLE_RANGE[1])),
                               ne, sp)
        except (TypeError, ValueError, AttributeError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"bad device profile: {exc}") from exc

    def profile_hash(self) -> str:
        blob = json.dumps(self.to_profile(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def load_profile(path) -> Codebook:
    with open(path) as f:
        try:
            return Codebook.from_profile(json.load(f))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"malformed device profile {path}: {exc}") from exc


def beam_vector(cb: Codebook, m: int) -> np.ndarray:
    """h(m): the preset beamforming vector of beam m."""
    return cb.vectors[cb.check_index(m) - 1]


def nearest_beam(cb: Codebook, target: float) -> int:
    """Beam whose steering angle is closest to `target` degrees.

    Targets beyond the codebook span clamp to the edge beam; ties go to the
    lower index.
    """
    dist = np.abs(cb.angle_array - target)
    return int(np.argmin(dist)) + 1


def _path_terms(paths, num_tx: int, num_rx: int, spacing: float):
    if not paths:
        return None
    aod = [p.aod for p in paths]
    aoa = [p.aoa for p in paths]
    gains = np.array([p.gain for p in paths], dtype=complex)
    a_t = steering_matrix(aod, num_tx, spacing)
    a_r = steering_matrix(aoa, num_rx, spacing)
    return np.sqrt(num_tx * num_rx) * gains, a_t, a_r


def pair_gain(tx_beam: np.ndarray, rx_beam: np.ndarray, paths: Sequence,
              spacing: float = DEFAULT_SPACING) -> float:
    """|w^H H f|^2 for the multipath channel described by `paths`.

    H = sum_p sqrt(Mr*Mt) * gain_p * a_r(aoa_p) a_t(aod_p)^H, with `tx_beam`
    as f and `rx_beam` as w.
    """
    f = np.asarray(tx_beam, dtype=complex)
    w = np.asarray(rx_beam, dtype=complex)
    if f.ndim != 1 or w.ndim != 1:
        raise ValidationError("beam vectors must be 1-D")
    terms = _path_terms(paths, f.size, w.size, spacing)
    if terms is None:
        return 0.0
    c, a_t, a_r = terms
    y = np.sum(c * (a_r.conj() @ w).conj() * (a_t.conj() @ f))
    return float(abs(y) ** 2)


def gain_matrix(tx_cb: Codebook, paths: Sequence, rx_cb: Codebook | None = None) -> np.ndarray:
    """pair_gain for every (tx beam, rx beam), shape (tx beams, rx beams)."""
    rx_cb = tx_cb if rx_cb is None else rx_cb
    if tx_cb.spacing != rx_cb.spacing:
        raise ValidationError("tx and rx arrays must share element spacing")
    terms = _path_terms(paths, tx_cb.num_elements, rx_cb.num_elements, tx_cb.spacing)
    if terms is None:
        return np.zeros((tx_cb.num_beams, rx_cb.num_beams))
    c, a_t, a_r = terms
    tx_resp = tx_cb.vectors @ a_t.conj().T      # (beams, paths): a_t^H f
    rx_resp = rx_cb.vectors.conj() @ a_r.T      # (beams, paths): w^H a_r
    y = (tx_resp * c) @ rx_resp.T
    return np.abs(y) ** 2
