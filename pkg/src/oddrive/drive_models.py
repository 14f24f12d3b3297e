"""Abstract drive-model layers: differential (DD), omnidirectional (OD),
and omni differential (ODD) maps between wheel-group velocities and
center-point velocities.

All maps are linear in the velocities for a fixed spacing d and are pure
functions, safe for concurrent use. Conventions: the left group L lies on
the +y side of the body frame, so d_dot = vy_L - vy_R widens the track.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveSpacing

#: Smallest spacing accepted by default; d below this makes the 1/d rows
#: of the forward maps numerically meaningless.
MIN_SPACING = 1e-6


def _check_spacing(d: float, min_spacing: float = MIN_SPACING) -> float:
    d = float(d)
    if not math.isfinite(d) or d <= 0.0 or d < min_spacing:
        raise NonPositiveSpacing(
            f"spacing d={d!r} must be positive and >= {min_spacing}"
        )
    return d


@dataclass(frozen=True)
class DdTwist:
    """Differential-drive center velocity: forward speed and yaw rate."""

    vx: float
    wz: float


@dataclass(frozen=True)
class OdTwist:
    """Omnidirectional-drive center velocity (fixed spacing)."""

    vx: float
    vy: float
    wz: float


@dataclass(frozen=True)
class BodyTwist:
    """Center-point velocity state of the ODD layer.

    vx, vy in m/s (body frame), wz in rad/s, d_dot in m/s (spacing rate).
    """

    vx: float
    vy: float
    wz: float
    d_dot: float

    def as_array(self) -> np.ndarray:
        return np.array([self.vx, self.vy, self.wz, self.d_dot], dtype=float)

    @staticmethod
    def from_array(a) -> "BodyTwist":
        vx, vy, wz, d_dot = (float(v) for v in a)
        return BodyTwist(vx, vy, wz, d_dot)


@dataclass(frozen=True)
class GroupVelocities:
    """Planar velocities of the left (L) and right (R) group centers,
    expressed in the body frame."""

    vx_l: float
    vy_l: float
    vx_r: float
    vy_r: float

    def as_array(self) -> np.ndarray:
        return np.array([self.vx_l, self.vy_l, self.vx_r, self.vy_r], dtype=float)

    @staticmethod
    def from_array(a) -> "GroupVelocities":
        vx_l, vy_l, vx_r, vy_r = (float(v) for v in a)
        return GroupVelocities(vx_l, vy_l, vx_r, vy_r)


def dd_forward(vx_l: float, vx_r: float, d: float,
               min_spacing: float = MIN_SPACING) -> DdTwist:
    """Two single-DOF wheels: wheel speeds to center forward speed / yaw rate."""
    d = _check_spacing(d, min_spacing)
    return DdTwist(vx=0.5 * (vx_l + vx_r), wz=(vx_r - vx_l) / d)


def dd_inverse(twist: DdTwist, d: float,
               min_spacing: float = MIN_SPACING) -> tuple[float, float]:
    """Center twist to left/right wheel speeds."""
    d = _check_spacing(d, min_spacing)
    half = 0.5 * d * twist.wz
    return twist.vx - half, twist.vx + half


def od_forward(g: GroupVelocities, d: float,
               min_spacing: float = MIN_SPACING) -> tuple[OdTwist, float]:
    """Fixed-spacing omnidirectional layer: group velocities to center twist.

    The layer is over-actuated: vx_l and vx_r must agree or the commanded
    motion implies slip. Returns the twist together with the consistency
    residual |vx_l - vx_r| so the caller can decide its slip policy.
    """
    d = _check_spacing(d, min_spacing)
    twist = OdTwist(
        vx=0.5 * (g.vx_l + g.vx_r),
        vy=0.5 * (g.vy_l + g.vy_r),
        wz=(g.vx_r - g.vx_l) / d,
    )
    return twist, abs(g.vx_l - g.vx_r)


def od_inverse(vx: float, vy: float, wz: float, d: float,
               min_spacing: float = MIN_SPACING) -> GroupVelocities:
    """Center twist to group velocities; rotation splits into opposing vx_l/vx_r."""
    d = _check_spacing(d, min_spacing)
    half = 0.5 * d * wz
    return GroupVelocities(vx_l=vx - half, vy_l=vy, vx_r=vx + half, vy_r=vy)


def odd_forward(g: GroupVelocities, d: float,
                min_spacing: float = MIN_SPACING) -> BodyTwist:
    """Variable-spacing layer: group velocities to body twist.

    The lateral differential vy_l - vy_r becomes the spacing rate d_dot
    instead of being a constraint violation.
    """
    d = _check_spacing(d, min_spacing)
    return BodyTwist(
        vx=0.5 * (g.vx_l + g.vx_r),
        vy=0.5 * (g.vy_l + g.vy_r),
        wz=(g.vx_r - g.vx_l) / d,
        d_dot=g.vy_l - g.vy_r,
    )


def odd_inverse(t: BodyTwist, d: float,
                min_spacing: float = MIN_SPACING) -> GroupVelocities:
    """Body twist to group velocities. Exact inverse of odd_forward: the
    variable-spacing layer is square and fully actuated."""
    d = _check_spacing(d, min_spacing)
    half_rot = 0.5 * d * t.wz
    half_dd = 0.5 * t.d_dot
    return GroupVelocities(
        vx_l=t.vx - half_rot,
        vy_l=t.vy + half_dd,
        vx_r=t.vx + half_rot,
        vy_r=t.vy - half_dd,
    )


def odd_forward_matrix(d: float, min_spacing: float = MIN_SPACING) -> np.ndarray:
    """4x4 matrix of odd_forward: (vx_l, vy_l, vx_r, vy_r) -> (vx, vy, wz, d_dot)."""
    d = _check_spacing(d, min_spacing)
    return np.array([
        [0.5, 0.0, 0.5, 0.0],
        [0.0, 0.5, 0.0, 0.5],
        [-1.0 / d, 0.0, 1.0 / d, 0.0],
        [0.0, 1.0, 0.0, -1.0],
    ])


def odd_inverse_matrix(d: float, min_spacing: float = MIN_SPACING) -> np.ndarray:
    """4x4 matrix of odd_inverse: (vx, vy, wz, d_dot) -> (vx_l, vy_l, vx_r, vy_r)."""
    d = _check_spacing(d, min_spacing)
    return np.array([
        [1.0, 0.0, -0.5 * d, 0.0],
        [0.0, 1.0, 0.0, 0.5],
        [1.0, 0.0, 0.5 * d, 0.0],
        [0.0, 1.0, 0.0, -0.5],
    ])
