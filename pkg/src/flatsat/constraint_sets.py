"""Input-constraint geometry in both coordinate systems.

The physical limits form a box on (thrust, roll, pitch). Pulled back to
acceleration coordinates that box becomes yaw-dependent and non-convex, so
the controller works with a yaw-free convex inner approximation instead: the
intersection of a gravity-shifted ball (thrust bound), a vertical cone (tilt
bound) and the half-space above the cone apex. The largest origin-centered
ball inside that set has a closed-form radius used by the certificate
synthesis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .flat_model import DomainError, PhysicalInput

__all__ = [
    "DEFAULT_TOL",
    "ConstraintParams",
    "InscribedBall",
    "in_U",
    "in_Vc",
    "epsilon_angle",
    "max_inscribed_ball",
]

# absolute slack on the squared-quantity membership inequalities
DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class ConstraintParams:
    """Actuation limits of the vehicle.

    Attributes:
        g: gravitational acceleration (m/s^2).
        t_max: maximum normalized thrust (m/s^2); must exceed g, otherwise
            hover is infeasible and the convex command set has empty
            interior around the origin.
        phi_max, theta_max: roll and pitch limits (rad), each in (0, pi/2).

    The tilt bound ``eps_max`` is the smaller of the two angle limits.
    Defaults are the desk-scale nano-drone values used throughout the test
    suite: g = 9.81, t_max = 1.45 g, both angles 10 degrees.
    """

    g: float = 9.81
    t_max: float = 1.45 * 9.81
    phi_max: float = math.pi / 18
    theta_max: float = math.pi / 18
    eps_max: float = field(init=False)
    tan_eps: float = field(init=False)
    tan2_eps: float = field(init=False)
    t2_max: float = field(init=False)

    def __post_init__(self) -> None:
        if not all(
            math.isfinite(x) for x in (self.g, self.t_max, self.phi_max, self.theta_max)
        ):
            raise ValueError("constraint parameters must be finite")
        if self.g <= 0.0:
            raise ValueError(f"g must be positive, got {self.g}")
        if self.t_max <= self.g:
            raise ValueError(
                f"infeasible hover: t_max={self.t_max} must exceed g={self.g}"
            )
        for name in ("phi_max", "theta_max"):
            a = getattr(self, name)
            if not 0.0 < a < math.pi / 2:
                raise ValueError(f"{name} must lie in (0, pi/2), got {a}")
        eps = min(self.theta_max, self.phi_max)
        object.__setattr__(self, "eps_max", eps)
        object.__setattr__(self, "tan_eps", math.tan(eps))
        object.__setattr__(self, "tan2_eps", math.tan(eps) ** 2)
        object.__setattr__(self, "t2_max", self.t_max * self.t_max)


@dataclass(frozen=True)
class InscribedBall:
    """Largest origin-centered ball inside the convex command set.

    ``rho`` is the squared radius: the ball is { v : ||v||^2 <= rho }.
    """

    rho: float


def in_U(u: PhysicalInput, p: ConstraintParams, tol: float = 0.0) -> bool:
    """Membership in the physical input box, inclusive within ``tol``."""
    return (
        -tol <= u.thrust <= p.t_max + tol
        and abs(u.roll) <= p.phi_max + tol
        and abs(u.pitch) <= p.theta_max + tol
    )


def in_Vc(v, p: ConstraintParams, tol: float = DEFAULT_TOL) -> bool:
    """Membership in the convex acceleration command set.

    Three clauses, with ``tol`` as absolute slack on the squared quantities:
    shifted ball  v1^2 + v2^2 + (v3+g)^2 <= t_max^2, cone
    v1^2 + v2^2 <= (v3+g)^2 tan^2(eps_max), half-space v3 >= -g.
    """
    v1, v2, v3 = float(v[0]), float(v[1]), float(v[2])
    c = v3 + p.g
    h2 = v1 * v1 + v2 * v2
    if h2 + c * c > p.t2_max + tol:
        return False
    if h2 > c * c * p.tan2_eps + tol:
        return False
    return v3 >= -p.g - tol


def epsilon_angle(v, g: float) -> float:
    """Tilt angle implied by an acceleration command: the angle between the
    commanded thrust direction and vertical. Upper-bounds both attitude
    angles produced by the input map. Requires ``v[2] > -g``."""
    v1, v2, v3 = float(v[0]), float(v[1]), float(v[2])
    c = v3 + g
    if c <= 0.0:
        raise DomainError(f"v3 must exceed -g, got v3={v3} with g={g}")
    return math.atan(math.sqrt(v1 * v1 + v2 * v2) / c)


def max_inscribed_ball(p: ConstraintParams) -> InscribedBall:
    """Closed-form largest origin-centered ball inside the command set.

    The origin sits on the cone axis at height g above the apex (0, 0, -g).
    Its distance to the shifted sphere is t_max - g, to the cone's lateral
    surface g*sin(eps_max), and to the half-space boundary g, which never
    binds since sin(eps_max) < 1. The squared radius is therefore
    min(t_max - g, g*sin(eps_max))^2.
    """
    r = min(p.t_max - p.g, p.g * math.sin(p.eps_max))
    return InscribedBall(rho=r * r)
