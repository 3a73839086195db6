"""Closed-loop simulation of the saturated flat-space controller.

The loop per step: sample the reference, form the scaled gradient feedback on
the tracking error, saturate it onto the convex command set, map the command
to (thrust, roll, pitch), integrate the nonlinear plant one step with the
command held constant, and record monitors (Lyapunov value, set memberships,
controller wall time). Because the input map linearizes the plant exactly and
the command is held over the step, the integrator reproduces the exact
double-integrator update up to floating error; tests assert this.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Callable, Union

import numpy as np

from .constraint_sets import ConstraintParams, in_U, in_Vc
from .flat_model import DomainError, accel, to_physical
from .kvformat import format_value
from .saturation import ActiveConstraint, saturate
from .synthesis import EllipsoidCert, GainMatrix

__all__ = [
    "OriginReference",
    "SetpointReference",
    "CircularReference",
    "Scenario",
    "Trace",
    "ControlDiagnostics",
    "RunMetrics",
    "SimulationAborted",
    "control_law",
    "step_rk4",
    "run",
    "metrics",
    "boundary_states",
    "CSV_COLUMNS",
]

# membership slack used by the run monitors; commands are checked on the
# squared quantities (1e-9, the saturation feasibility slack), physical
# inputs on plain units where boundary outputs can pick up slightly
# amplified rounding near the cone apex
V_MONITOR_TOL = 1e-9
U_MONITOR_TOL = 1e-6

_ZERO3 = np.zeros(3)
_ZERO6 = np.zeros(6)
_ZERO3.setflags(write=False)
_ZERO6.setflags(write=False)


class SimulationAborted(RuntimeError):
    """The input map rejected a command mid-run; carries the partial trace."""

    def __init__(self, message: str, trace: "Trace"):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class OriginReference:
    """Regulation to the origin of the flat state space."""

    def state(self, t: float) -> np.ndarray:
        return _ZERO6

    def accel(self, t: float) -> np.ndarray:
        return _ZERO3


@dataclass(frozen=True)
class SetpointReference:
    """Hold a fixed position with zero velocity."""

    position: tuple[float, float, float]

    def __post_init__(self) -> None:
        xi = np.array([*self.position, 0.0, 0.0, 0.0], dtype=float)
        xi.setflags(write=False)
        object.__setattr__(self, "_state", xi)

    def state(self, t: float) -> np.ndarray:
        return self._state

    def accel(self, t: float) -> np.ndarray:
        return _ZERO3


@dataclass(frozen=True)
class CircularReference:
    """Horizontal circle at fixed altitude.

    ``velocity_mode`` selects how the reference velocity is formed: the
    analytic derivative of the circle ("analytic", default) or zero
    ("zero"), which reduces the tracking law to pure position feedback.
    """

    radius: float = 0.5
    center: tuple[float, float] = (0.2, 0.0)
    altitude: float = 0.3
    omega: float = 0.3 * math.pi
    velocity_mode: str = "analytic"

    def __post_init__(self) -> None:
        if self.velocity_mode not in ("analytic", "zero"):
            raise ValueError(f"velocity_mode must be analytic|zero, got {self.velocity_mode!r}")

    def state(self, t: float) -> np.ndarray:
        wt = self.omega * t
        c, s = math.cos(wt), math.sin(wt)
        if self.velocity_mode == "analytic":
            vx = -self.radius * self.omega * s
            vy = self.radius * self.omega * c
        else:
            vx = vy = 0.0
        return np.array(
            [
                self.center[0] + self.radius * c,
                self.center[1] + self.radius * s,
                self.altitude,
                vx,
                vy,
                0.0,
            ]
        )

    def accel(self, t: float) -> np.ndarray:
        wt = self.omega * t
        w2r = self.radius * self.omega * self.omega
        return np.array([-w2r * math.cos(wt), -w2r * math.sin(wt), 0.0])


@dataclass(frozen=True)
class Scenario:
    """One reproducible closed-loop run.

    ``psi`` is the yaw signal: a constant or a callable of time (the yaw is
    exogenous; default 0). ``feedforward`` adds the reference acceleration
    to the feedback before saturation. ``invariance_mode`` requires the
    initial error state inside the certified ellipsoid and monitors every
    sample against leaving it.
    """

    reference: object
    initial_state: np.ndarray
    duration: float
    dt: float
    cert: EllipsoidCert
    params: ConstraintParams
    psi: Union[float, Callable[[float], float]] = 0.0
    feedforward: bool = False
    invariance_mode: bool = False

    def __post_init__(self) -> None:
        xi0 = np.array(self.initial_state, dtype=float).reshape(6)
        if not np.all(np.isfinite(xi0)):
            raise ValueError("initial state must be finite")
        xi0.setflags(write=False)
        object.__setattr__(self, "initial_state", xi0)
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.duration < self.dt:
            raise ValueError("duration must cover at least one step")

    def psi_at(self, t: float) -> float:
        return self.psi(t) if callable(self.psi) else float(self.psi)


CSV_COLUMNS = (
    "t",
    "x",
    "y",
    "z",
    "xd",
    "yd",
    "zd",
    "v1_raw",
    "v2_raw",
    "v3_raw",
    "v1",
    "v2",
    "v3",
    "thrust",
    "roll",
    "pitch",
    "lyapunov",
    "lam",
    "saturated",
    "active",
    "in_u",
)


@dataclass
class Trace:
    """Uniform-grid record of one run; one row per sample instant.

    The command columns hold both the raw feedback and its saturated value;
    ``lyapunov`` is the tracking-error Lyapunov value. ``violations``
    collects human-readable monitor failures (empty on a clean run).
    """

    t: np.ndarray
    xi: np.ndarray
    v_raw: np.ndarray
    v: np.ndarray
    u: np.ndarray
    lyapunov: np.ndarray
    lam: np.ndarray
    saturated: np.ndarray
    active: list[str]
    in_u: np.ndarray
    ctrl_time: np.ndarray
    violations: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.t)

    def to_csv(self, path) -> None:
        """Write the trace; floats carry 17 significant digits so output is
        byte-stable for a fixed scenario."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(CSV_COLUMNS) + "\n")
            for k in range(len(self.t)):
                row = [
                    self.t[k],
                    *self.xi[k],
                    *self.v_raw[k],
                    *self.v[k],
                    *self.u[k],
                    self.lyapunov[k],
                    self.lam[k],
                    int(self.saturated[k]),
                    self.active[k],
                    int(self.in_u[k]),
                ]
                fh.write(
                    ",".join(
                        x if isinstance(x, str) else format_value(float(x))
                        for x in row
                    )
                    + "\n"
                )


@dataclass(frozen=True)
class ControlDiagnostics:
    raw: np.ndarray
    lam: float
    saturated: bool
    active: ActiveConstraint


def control_law(xi, xi_ref, cert: EllipsoidCert, p: ConstraintParams,
                feedforward_accel=None):
    """Saturated scaled gradient feedback on the tracking error.

    Returns (command, diagnostics). Kept allocation-light: this is the
    per-sample hot path whose wall time the metrics report.
    """
    p2, p3 = cert.gain.p2, cert.gain.p3
    gsc = cert.gamma
    # numpy scalar arithmetic is slow; work on plain floats in the hot path
    e1, e2, e3, e4, e5, e6 = (np.asarray(xi, dtype=float) - xi_ref).tolist()
    r1 = -gsc * (p2 * e1 + p3 * e4)
    r2 = -gsc * (p2 * e2 + p3 * e5)
    r3 = -gsc * (p2 * e3 + p3 * e6)
    if feedforward_accel is not None:
        r1 += float(feedforward_accel[0])
        r2 += float(feedforward_accel[1])
        r3 += float(feedforward_accel[2])
    res = saturate((r1, r2, r3), p)
    diag = ControlDiagnostics(
        raw=np.array([r1, r2, r3]),
        lam=res.lam,
        saturated=res.saturated,
        active=res.active,
    )
    return res.v_out, diag


def _rk4_step(f, x: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(x)
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step_rk4(xi, v, psi: float, g: float, dt: float) -> np.ndarray:
    """One integration step of the nonlinear plant under a held command.

    The command ``v`` is mapped to a physical input once and held for the
    whole step (zero-order hold); yaw is likewise held. Classical 4th-order
    Runge-Kutta; with a constant command the trajectory is polynomial in
    time, so the step is exact up to rounding.
    """
    u = to_physical(v, psi, g)
    a = accel(u, psi, g)

    def f(x):
        return np.concatenate([x[3:], a])

    return _rk4_step(f, np.asarray(xi, dtype=float), dt)


def run(scenario: Scenario) -> Trace:
    """Execute a scenario on the fixed grid t_k = k dt, k = 0..n.

    Controls and monitors are evaluated at every grid point including the
    final one (the last command is recorded but not applied). A command
    rejected by the input map raises SimulationAborted with the completed
    rows attached; the saturation guarantees make that unreachable except
    exactly at the cone apex.
    """
    p = scenario.params
    cert = scenario.cert
    gain = cert.gain
    P = gain.P()
    n = int(round(scenario.duration / scenario.dt))
    dt = scenario.dt

    tgrid = np.arange(n + 1) * dt
    xi_log = np.empty((n + 1, 6))
    vraw_log = np.empty((n + 1, 3))
    v_log = np.empty((n + 1, 3))
    u_log = np.empty((n + 1, 3))
    v_lyap = np.empty(n + 1)
    lam_log = np.empty(n + 1)
    sat_log = np.zeros(n + 1, dtype=bool)
    act_log: list[str] = []
    inu_log = np.zeros(n + 1, dtype=bool)
    ctrl_time = np.empty(n + 1)
    violations: list[str] = []

    def partial(k: int) -> Trace:
        return Trace(
            t=tgrid[:k],
            xi=xi_log[:k],
            v_raw=vraw_log[:k],
            v=v_log[:k],
            u=u_log[:k],
            lyapunov=v_lyap[:k],
            lam=lam_log[:k],
            saturated=sat_log[:k],
            active=act_log[:k],
            in_u=inu_log[:k],
            ctrl_time=ctrl_time[:k],
            violations=violations,
        )

    xi = np.array(scenario.initial_state, dtype=float)
    err0 = xi - scenario.reference.state(0.0)
    v0 = float(err0 @ P @ err0)
    if scenario.invariance_mode and v0 > cert.eps * (1.0 + 1e-9):
        raise ValueError(
            f"initial error level {v0} outside certified ellipsoid {cert.eps}"
        )

    for k in range(n + 1):
        t = tgrid[k]
        ref = scenario.reference.state(t)
        ff = scenario.reference.accel(t) if scenario.feedforward else None
        tic = time.perf_counter()
        v, diag = control_law(xi, ref, cert, p, feedforward_accel=ff)
        ctrl_time[k] = time.perf_counter() - tic
        psi_k = scenario.psi_at(t)

        try:
            u = to_physical(v, psi_k, p.g)
        except DomainError as exc:
            raise SimulationAborted(
                f"input map rejected command {v} at t={t}: {exc}", partial(k)
            ) from exc

        err = xi - ref
        lyap = float(err @ P @ err)
        ok_v = in_Vc(v, p, V_MONITOR_TOL)
        ok_u = in_U(u, p, U_MONITOR_TOL)
        if not ok_v:
            violations.append(f"t={t:.6g}: command left the convex set: {v}")
        if not ok_u:
            violations.append(f"t={t:.6g}: physical input left the box: {u}")
        if scenario.invariance_mode and lyap > cert.eps * (1.0 + 1e-6):
            violations.append(
                f"t={t:.6g}: left the certified ellipsoid: {lyap} > {cert.eps}"
            )

        xi_log[k] = xi
        vraw_log[k] = diag.raw
        v_log[k] = v
        u_log[k] = (u.thrust, u.roll, u.pitch)
        v_lyap[k] = lyap
        lam_log[k] = diag.lam
        sat_log[k] = diag.saturated
        act_log.append(diag.active.value)
        inu_log[k] = ok_u

        if k < n:
            xi = step_rk4(xi, v, psi_k, p.g, dt)

    return partial(n + 1)


@dataclass(frozen=True)
class RunMetrics:
    """Summary numbers for one trace.

    The steady window is the last quarter of the horizon. Margins are the
    smallest observed distances to each constraint boundary (negative means
    a violation); controller times are wall-clock seconds per call.
    """

    rms_pos_error_steady: float
    max_decay_residual: float
    saturation_duty: float
    ctrl_time_mean: float
    ctrl_time_p99: float
    max_lyapunov: float
    min_ball_margin: float
    min_cone_margin: float
    min_half_margin: float
    min_thrust_margin: float
    min_roll_margin: float
    min_pitch_margin: float
    n_violations: int

    def to_kv(self) -> dict:
        return {
            "rms_pos_error_steady": self.rms_pos_error_steady,
            "max_decay_residual": self.max_decay_residual,
            "saturation_duty": self.saturation_duty,
            "ctrl_time_mean": self.ctrl_time_mean,
            "ctrl_time_p99": self.ctrl_time_p99,
            "max_lyapunov": self.max_lyapunov,
            "min_ball_margin": self.min_ball_margin,
            "min_cone_margin": self.min_cone_margin,
            "min_half_margin": self.min_half_margin,
            "min_thrust_margin": self.min_thrust_margin,
            "min_roll_margin": self.min_roll_margin,
            "min_pitch_margin": self.min_pitch_margin,
            "n_violations": self.n_violations,
        }


def metrics(trace: Trace, scenario: Scenario) -> RunMetrics:
    """Summarize a completed trace (tracking error, decay residual,
    saturation duty cycle, controller timing, constraint margins)."""
    p = scenario.params
    tgrid = trace.t
    n = len(tgrid)
    ref_pos = np.stack([scenario.reference.state(t)[:3] for t in tgrid])
    pos_err = np.linalg.norm(trace.xi[:, :3] - ref_pos, axis=1)
    steady = tgrid >= 0.75 * tgrid[-1]
    rms = float(np.sqrt(np.mean(pos_err[steady] ** 2)))

    alpha = scenario.cert.gain.alpha
    if n >= 3:
        vdot = (trace.lyapunov[2:] - trace.lyapunov[:-2]) / (2.0 * scenario.dt)
        decay = float(np.max(vdot + alpha * trace.lyapunov[1:-1]))
    else:
        decay = -math.inf

    v1, v2, v3 = trace.v[:, 0], trace.v[:, 1], trace.v[:, 2]
    c = v3 + p.g
    h2 = v1 * v1 + v2 * v2
    thrust, roll, pitch = trace.u[:, 0], trace.u[:, 1], trace.u[:, 2]

    return RunMetrics(
        rms_pos_error_steady=rms,
        max_decay_residual=decay,
        saturation_duty=float(np.mean(trace.saturated)),
        ctrl_time_mean=float(np.mean(trace.ctrl_time)),
        ctrl_time_p99=float(np.percentile(trace.ctrl_time, 99)),
        max_lyapunov=float(np.max(trace.lyapunov)),
        min_ball_margin=float(np.min(p.t2_max - (h2 + c * c))),
        min_cone_margin=float(np.min(c * c * p.tan2_eps - h2)),
        min_half_margin=float(np.min(c)),
        min_thrust_margin=float(np.min(np.minimum(thrust, p.t_max - thrust))),
        min_roll_margin=float(np.min(p.phi_max - np.abs(roll))),
        min_pitch_margin=float(np.min(p.theta_max - np.abs(pitch))),
        n_violations=len(trace.violations),
    )


def _kronecker_alphas(dim: int) -> np.ndarray:
    # unique positive root of x**(dim+1) = x + 1 drives the additive
    # low-discrepancy recurrence
    x = 1.5
    for _ in range(100):
        x = (x + 1.0) ** (1.0 / (dim + 1))
    return np.array([1.0 / x ** (i + 1) for i in range(dim)])


def boundary_states(gain: GainMatrix, eps: float, n: int, seed: int = 0) -> np.ndarray:
    """Deterministic well-spread points on the ellipsoid boundary.

    Directions come from a Kronecker low-discrepancy sequence in the unit
    cube pushed through the inverse Gaussian CDF and normalized (``seed``
    shifts the sequence start), then mapped onto { ||xi||_P^2 = eps }.
    """
    alphas = _kronecker_alphas(6)
    nd = NormalDist()
    pis = gain.P_inv_sqrt()
    out = np.empty((n, 6))
    for k in range(n):
        u = (0.5 + seed + (k + 1) * alphas) % 1.0
        z = np.array([nd.inv_cdf(min(max(ui, 1e-12), 1.0 - 1e-12)) for ui in u])
        s = z / np.linalg.norm(z)
        out[k] = math.sqrt(eps) * (pis @ s)
    return out
