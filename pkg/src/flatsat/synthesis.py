"""Offline certificate synthesis and verification.

Produces, for a chosen decay rate, a structured stabilizing gain matrix
(solving the closed-loop Lyapunov inequality), and the largest ellipsoid
level set on which the scaled gradient feedback, after ray saturation, keeps
every command inside the inscribed command ball. The three decoupled
position axes make the matrix inequalities block-identical, so everything
reduces to scalar searches on one 2x2 axis block; the full 6x6 inequalities
are re-verified densely by eigenvalue checks afterwards, and certificates
can be re-verified by boundary sampling at any time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constraint_sets import ConstraintParams, max_inscribed_ball
from .flat_model import A_MATRIX, B_MATRIX
from .kvformat import dump_kv, parse_kv
from .saturation import saturate

__all__ = [
    "SynthesisError",
    "GainMatrix",
    "EllipsoidCert",
    "VerificationReport",
    "lyapunov_residual",
    "solve_stabilizing_P",
    "eps_max",
    "multiplier_matrix",
    "synthesize_certificate",
    "verify_cert",
    "save_certificate",
    "load_certificate",
    "CERT_FORMAT",
]


class SynthesisError(RuntimeError):
    """Synthesis problem infeasible or a certificate check failed."""


@dataclass(frozen=True)
class GainMatrix:
    """Block-structured Lyapunov matrix [[p1 I3, p2 I3], [p2 I3, p3 I3]]
    with its decay rate alpha. Must be positive definite."""

    p1: float
    p2: float
    p3: float
    alpha: float

    def __post_init__(self) -> None:
        if not all(
            math.isfinite(x) for x in (self.p1, self.p2, self.p3, self.alpha)
        ):
            raise ValueError("gain scalars must be finite")
        if self.alpha <= 0.0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.p1 <= 0.0 or self.p1 * self.p3 - self.p2 * self.p2 <= 0.0:
            raise ValueError(
                f"matrix ({self.p1}, {self.p2}, {self.p3}) is not positive definite"
            )

    def P_axis(self) -> np.ndarray:
        return np.array([[self.p1, self.p2], [self.p2, self.p3]])

    def P(self) -> np.ndarray:
        return np.kron(self.P_axis(), np.eye(3))

    def P_inv_sqrt(self) -> np.ndarray:
        w, vecs = np.linalg.eigh(self.P())
        return vecs @ np.diag(1.0 / np.sqrt(w)) @ vecs.T


@dataclass(frozen=True)
class EllipsoidCert:
    """Invariance certificate: gain matrix, inscribed-ball level rho,
    ellipsoid level eps, and the feedback scale gamma >= 1."""

    gain: GainMatrix
    rho: float
    eps: float
    gamma: float

    def __post_init__(self) -> None:
        if self.rho <= 0.0 or self.eps <= 0.0:
            raise ValueError("rho and eps must be positive")
        if self.gamma < 1.0:
            raise ValueError(f"gamma must be >= 1, got {self.gamma}")


def lyapunov_residual(gain: GainMatrix) -> float:
    """Largest eigenvalue of Acl' P + P Acl + alpha P with
    Acl = A - B B' P. Nonpositive means the closed-loop decay condition
    holds; small positive values indicate a matrix sitting on the
    feasibility boundary (e.g. scalars rounded to few digits)."""
    P = gain.P()
    acl = A_MATRIX - B_MATRIX @ B_MATRIX.T @ P
    m = acl.T @ P + P @ acl + gain.alpha * P
    return float(np.linalg.eigvalsh(m).max())


def _axis_candidate(q3: float, alpha: float, margin: float):
    """Inner point of the inverse-side inequality for a fixed q3.

    The off-diagonal entry q3 + alpha*q2 must vanish as the (2,2) slack
    closes, which pins q2 = -q3/alpha; q1 then comes from tightness of the
    (1,1) entry. Returns (q1, q2) or None when the point is not feasible.
    """
    if q3 <= 0.0:
        return None
    if 2.0 - alpha * q3 - margin < 0.0:
        return None
    q2 = -q3 / alpha
    q1 = (2.0 * q3 / alpha - margin) / alpha
    if q1 <= 0.0 or q1 * q3 - q2 * q2 <= 0.0:
        return None
    return q1, q2


def solve_stabilizing_P(
    alpha: float, margin: float = 1e-9, delta_cert: float = 1e-6
) -> GainMatrix:
    """Solve for a stabilizing block gain at decay rate ``alpha``.

    Works on the inverse matrix Q = P^-1, whose stability inequality
    Q A' + A Q - 2 B B' + alpha Q <= -margin I decouples into one 2x2
    condition per axis. The solver maximizes q3 by bisection (the largest
    admissible q3 makes the inequality tight), assembles the axis block and
    inverts it, then re-verifies both the 6x6 inverse-side inequality and
    the closed-loop decay condition densely.

    Raises:
        SynthesisError: infeasible (e.g. margin too large) or verification
            of the assembled matrix fails.
    """
    if not (math.isfinite(alpha) and alpha > 0.0):
        raise SynthesisError(f"alpha must be positive and finite, got {alpha}")
    if not (math.isfinite(margin) and 0.0 <= margin < 2.0):
        raise SynthesisError(f"margin must lie in [0, 2), got {margin}")
    lo = (2.0 - margin) / (2.0 * alpha)
    if _axis_candidate(lo, alpha, margin) is None:
        raise SynthesisError(f"infeasible for alpha={alpha}, margin={margin}")
    hi = lo
    while _axis_candidate(hi, alpha, margin) is not None:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _axis_candidate(mid, alpha, margin) is not None:
            lo = mid
        else:
            hi = mid
    q3 = lo
    q1, q2 = _axis_candidate(q3, alpha, margin)
    det = q1 * q3 - q2 * q2
    gain = GainMatrix(p1=q3 / det, p2=-q2 / det, p3=q1 / det, alpha=alpha)

    # dense re-verification of the axis-decoupled construction
    Q = np.kron(np.array([[q1, q2], [q2, q3]]), np.eye(3))
    mq = Q @ A_MATRIX.T + A_MATRIX @ Q - 2.0 * B_MATRIX @ B_MATRIX.T + alpha * Q
    if float(np.linalg.eigvalsh(mq).max()) > -margin + 1e-9:
        raise SynthesisError("inverse-side inequality failed dense verification")
    res = lyapunov_residual(gain)
    if res > delta_cert:
        raise SynthesisError(f"closed-loop residual {res} exceeds {delta_cert}")
    return gain


def multiplier_matrix(gain: GainMatrix, rho: float, eps: float, tau: float) -> np.ndarray:
    """Assembled 7x7 multiplier matrix whose positive semidefiniteness
    certifies: ||xi||_P^2 <= eps implies ||B' P xi||^2 <= rho."""
    P = gain.P()
    pb = P @ B_MATRIX
    top = P - tau * pb @ pb.T
    out = np.zeros((7, 7))
    out[:6, :6] = top
    out[6, 6] = tau * rho - eps
    return out


def eps_max(gain: GainMatrix, rho: float, psd_tol: float = 1e-9):
    """Largest ellipsoid level whose gradient feedback stays in the command
    ball of squared radius ``rho``.

    On the level set { ||xi||_P^2 <= eps } the maximum of ||B' P xi||^2 is
    eps * lambda_max(B' P B) = eps * p3, so the largest admissible level is
    rho / p3, with multiplier tau = 1 / p3. Returns (eps, tau) after
    checking the assembled 7x7 multiplier matrix is positive semidefinite
    within ``psd_tol``.
    """
    if rho <= 0.0:
        raise ValueError(f"rho must be positive, got {rho}")
    eps = rho / gain.p3
    tau = 1.0 / gain.p3
    smin = float(np.linalg.eigvalsh(multiplier_matrix(gain, rho, eps, tau)).min())
    if smin < -psd_tol:
        raise SynthesisError(f"multiplier matrix not PSD: min eigenvalue {smin}")
    return eps, tau


def synthesize_certificate(
    p: ConstraintParams,
    alpha: float,
    gamma: float,
    margin: float = 1e-9,
    delta_cert: float = 1e-6,
) -> EllipsoidCert:
    """Full offline synthesis chain.

    Picks the largest inscribed command ball, solves for the stabilizing
    gain at decay rate ``alpha``, computes the maximal invariant ellipsoid
    level, and records ``gamma`` unchanged (any value >= 1 preserves
    invariance; it only scales the feedback aggressiveness).
    """
    if gamma < 1.0:
        raise SynthesisError(f"gamma must be >= 1, got {gamma}")
    ball = max_inscribed_ball(p)
    gain = solve_stabilizing_P(alpha, margin=margin, delta_cert=delta_cert)
    eps, _tau = eps_max(gain, ball.rho)
    return EllipsoidCert(gain=gain, rho=ball.rho, eps=eps, gamma=gamma)


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of sampling-based certificate verification."""

    n_samples: int
    seed: int
    n_saturated: int
    inward_failures: int
    decay_failures: int
    gain_failures: int
    worst_inward: float
    worst_decay: float
    worst_gain_margin: float
    worst_sample: int

    @property
    def passed(self) -> bool:
        return (
            self.inward_failures == 0
            and self.decay_failures == 0
            and self.gain_failures == 0
        )

    def to_kv(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "seed": self.seed,
            "n_saturated": self.n_saturated,
            "inward_failures": self.inward_failures,
            "decay_failures": self.decay_failures,
            "gain_failures": self.gain_failures,
            "worst_inward": self.worst_inward,
            "worst_decay": self.worst_decay,
            "worst_gain_margin": self.worst_gain_margin,
            "worst_sample": self.worst_sample,
            "passed": self.passed,
        }


def verify_cert(
    cert: EllipsoidCert,
    p: ConstraintParams,
    n_samples: int,
    seed: int = 0,
    inward_tol: float = 1e-9,
    decay_tol: float = 1e-6,
    gain_tol: float = 1e-9,
) -> VerificationReport:
    """Check the certificate on sampled boundary points of the ellipsoid.

    For each point the saturated feedback command is computed and three
    conditions are evaluated: the vector field points inward (boundary
    invariance), the Lyapunov derivative respects the decay rate, and, when
    the command saturates, the scaled pullback factor stays >= 1. Failures
    are counted and the worst margins reported; nothing is raised, so
    negative controls can inspect the report.
    """
    if n_samples <= 0:
        raise ValueError(f"n_samples must be positive, got {n_samples}")
    gain, gamma = cert.gain, cert.gamma
    P = gain.P()
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((n_samples, 6))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    points = math.sqrt(cert.eps) * dirs @ gain.P_inv_sqrt().T

    n_sat = 0
    inward_fail = decay_fail = gain_fail = 0
    worst_inward = -math.inf
    worst_decay = -math.inf
    worst_gain = math.inf
    worst_sample = -1
    worst_violation = 0.0
    for i in range(n_samples):
        xi = points[i]
        raw = -gamma * (gain.p2 * xi[:3] + gain.p3 * xi[3:])
        res = saturate(raw, p)
        pf = P @ np.concatenate([xi[3:], res.v_out])
        flow = float(xi @ pf)
        vval = float(xi @ P @ xi)
        vdot_margin = 2.0 * flow + gain.alpha * vval
        violation = max(flow - inward_tol, vdot_margin - decay_tol)
        if flow > inward_tol:
            inward_fail += 1
        if vdot_margin > decay_tol:
            decay_fail += 1
        if res.saturated:
            n_sat += 1
            gmargin = gamma * res.lam - 1.0
            if gmargin < -gain_tol:
                gain_fail += 1
            violation = max(violation, -gmargin - gain_tol)
            worst_gain = min(worst_gain, gmargin)
        worst_inward = max(worst_inward, flow)
        worst_decay = max(worst_decay, vdot_margin)
        if violation > worst_violation:
            worst_violation = violation
            worst_sample = i
    return VerificationReport(
        n_samples=n_samples,
        seed=seed,
        n_saturated=n_sat,
        inward_failures=inward_fail,
        decay_failures=decay_fail,
        gain_failures=gain_fail,
        worst_inward=worst_inward,
        worst_decay=worst_decay,
        worst_gain_margin=worst_gain,
        worst_sample=worst_sample,
    )


CERT_FORMAT = "flatsat-certificate-1"

_CERT_KEYS = (
    "format",
    "g",
    "t_max",
    "phi_max",
    "theta_max",
    "eps_max",
    "alpha",
    "gamma",
    "rho",
    "eps",
    "p1",
    "p2",
    "p3",
    "seed",
    "margin",
)


def save_certificate(
    path,
    p: ConstraintParams,
    cert: EllipsoidCert,
    seed: int = 0,
    margin: float = 1e-9,
) -> None:
    """Write the certificate file (documented key = value schema).

    Keys: format, g, t_max, phi_max, theta_max, eps_max, alpha, gamma, rho,
    eps, p1, p2, p3, seed, margin. Floats carry 17 significant digits so the
    file round-trips bit-exactly.
    """
    pairs = {
        "format": CERT_FORMAT,
        "g": p.g,
        "t_max": p.t_max,
        "phi_max": p.phi_max,
        "theta_max": p.theta_max,
        "eps_max": p.eps_max,
        "alpha": cert.gain.alpha,
        "gamma": cert.gamma,
        "rho": cert.rho,
        "eps": cert.eps,
        "p1": cert.gain.p1,
        "p2": cert.gain.p2,
        "p3": cert.gain.p3,
        "seed": seed,
        "margin": margin,
    }
    text = dump_kv(pairs, header="invariant-ellipsoid certificate")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def load_certificate(path):
    """Read a certificate file back to (ConstraintParams, EllipsoidCert, meta).

    ``meta`` is a dict with the seed and margin. Unknown or missing keys and
    an inconsistent stored eps_max are rejected.
    """
    with open(path, "r", encoding="utf-8") as fh:
        raw = parse_kv(fh.read())
    if set(raw) != set(_CERT_KEYS):
        missing = sorted(set(_CERT_KEYS) - set(raw))
        unknown = sorted(set(raw) - set(_CERT_KEYS))
        raise ValueError(
            f"bad certificate schema: missing keys {missing}, unknown keys {unknown}"
        )
    if raw["format"] != CERT_FORMAT:
        raise ValueError(f"unsupported certificate format {raw['format']!r}")
    try:
        vals = {k: float(raw[k]) for k in _CERT_KEYS if k not in ("format", "seed")}
        seed = int(raw["seed"])
    except ValueError as exc:
        raise ValueError(f"bad certificate value: {exc}") from exc
    p = ConstraintParams(
        g=vals["g"],
        t_max=vals["t_max"],
        phi_max=vals["phi_max"],
        theta_max=vals["theta_max"],
    )
    if abs(p.eps_max - vals["eps_max"]) > 1e-12:
        raise ValueError(
            f"stored eps_max {vals['eps_max']} inconsistent with angle limits"
        )
    gain = GainMatrix(p1=vals["p1"], p2=vals["p2"], p3=vals["p3"], alpha=vals["alpha"])
    cert = EllipsoidCert(
        gain=gain, rho=vals["rho"], eps=vals["eps"], gamma=vals["gamma"]
    )
    meta = {"seed": seed, "margin": vals["margin"]}
    return p, cert, meta
