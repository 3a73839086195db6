"""Translational quadcopter model and its exact linearization.

The physical input is (thrust, roll, pitch); yaw is an exogenous parameter.
Commanding translational accelerations instead of attitude turns the dynamics
into three decoupled double integrators: the input map implemented by
``to_physical`` inverts the acceleration map ``accel`` exactly on its domain,
so the closed loop in acceleration coordinates is linear with no
approximation error.

State convention throughout the package: ``xi = [x, y, z, xd, yd, zd]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DomainError",
    "PhysicalInput",
    "A_MATRIX",
    "B_MATRIX",
    "accel",
    "to_physical",
    "flat_dynamics",
]


class DomainError(ValueError):
    """Argument outside the mathematical domain of a model map."""


# xi_dot = A xi + B v with xi = (pos, vel), v the commanded acceleration
A_MATRIX = np.block(
    [[np.zeros((3, 3)), np.eye(3)], [np.zeros((3, 3)), np.zeros((3, 3))]]
)
B_MATRIX = np.vstack([np.zeros((3, 3)), np.eye(3)])
A_MATRIX.setflags(write=False)
B_MATRIX.setflags(write=False)


@dataclass(frozen=True)
class PhysicalInput:
    """Normalized thrust (m/s^2) and attitude angles (rad) of the vehicle.

    Thrust must be nonnegative and both angles must stay within
    [-pi/2, pi/2]; outside that range the attitude parameterization of the
    translational dynamics is no longer injective.
    """

    thrust: float
    roll: float
    pitch: float

    def __post_init__(self) -> None:
        if not (
            math.isfinite(self.thrust)
            and math.isfinite(self.roll)
            and math.isfinite(self.pitch)
        ):
            raise DomainError("physical input must be finite")
        if self.thrust < 0.0:
            raise DomainError(f"thrust must be nonnegative, got {self.thrust}")
        if abs(self.roll) > math.pi / 2 or abs(self.pitch) > math.pi / 2:
            raise DomainError("roll/pitch must lie in [-pi/2, pi/2]")


def accel(u: PhysicalInput, psi: float, g: float) -> np.ndarray:
    """Translational acceleration produced by input ``u`` at yaw ``psi``.

    Returns the 3-vector (xdd, ydd, zdd); gravity acts on the z row.
    """
    if not (math.isfinite(psi) and math.isfinite(g)):
        raise DomainError("yaw and gravity must be finite")
    t, phi, theta = u.thrust, u.roll, u.pitch
    cphi, sphi = math.cos(phi), math.sin(phi)
    cth, sth = math.cos(theta), math.sin(theta)
    cpsi, spsi = math.cos(psi), math.sin(psi)
    return np.array(
        [
            t * (cphi * sth * cpsi + sphi * spsi),
            t * (cphi * sth * spsi - sphi * cpsi),
            t * cphi * cth - g,
        ]
    )


def to_physical(v, psi: float, g: float) -> PhysicalInput:
    """Map an acceleration command ``v`` to the physical input (T, roll, pitch).

    This is the exact linearizing inverse of :func:`accel` for fixed yaw:
    ``accel(to_physical(v, psi, g), psi, g) == v`` wherever the map is
    defined. Requires ``v[2] > -g`` strictly; at and below the apex the
    thrust direction degenerates and the pitch angle is undefined.

    Raises:
        DomainError: if ``v`` is not finite or ``v[2] <= -g``.
    """
    v1, v2, v3 = float(v[0]), float(v[1]), float(v[2])
    if not (math.isfinite(v1) and math.isfinite(v2) and math.isfinite(v3)):
        raise DomainError("acceleration command must be finite")
    if not (math.isfinite(psi) and math.isfinite(g)):
        raise DomainError("yaw and gravity must be finite")
    c = v3 + g
    if c <= 0.0:
        raise DomainError(f"v3 must exceed -g, got v3={v3} with g={g}")
    t = math.sqrt(v1 * v1 + v2 * v2 + c * c)
    cpsi, spsi = math.cos(psi), math.sin(psi)
    a = v1 * cpsi + v2 * spsi
    b = v1 * spsi - v2 * cpsi
    # roll = arcsin(b / t), but evaluated as atan2(b, hypot(a, c)): the same
    # value since t^2 = a^2 + b^2 + c^2, without the arcsin conditioning
    # blow-up near +-pi/2 or its argument leaving [-1, 1] by rounding
    roll = math.atan2(b, math.hypot(a, c))
    # c > 0, so atan2 lands in (-pi/2, pi/2) and equals atan of the ratio
    pitch = math.atan2(a, c)
    return PhysicalInput(t, roll, pitch)


def flat_dynamics(xi, v) -> np.ndarray:
    """State derivative of the acceleration-commanded model: (vel, v)."""
    xi = np.asarray(xi, dtype=float)
    v = np.asarray(v, dtype=float)
    return np.concatenate([xi[3:], v])
