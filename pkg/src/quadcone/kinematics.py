"""Engagement-state propagation and the planar-to-3-D acceleration lift.

The engagement between two agents is tracked both in Cartesian mirrors
(position/velocity of each agent) and in the spherical quantities of their
relative motion: range r, line-of-sight azimuth theta and elevation phi, and
the relative-velocity components (V_r, V_theta, V_phi) on the corresponding
unit triad.  Propagation runs on the Cartesian mirrors (no cos(phi)
singularity in the integrator) and the spherical quantities are recomputed
from them; the analytic derivative model is kept alongside as the tested
reference.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import GimbalSingularity, StepRejected
from .planes import PlaneFrame

__all__ = [
    "ControlInput",
    "EngagementState",
    "StateRates",
    "accel_direction_3d",
    "accel_vector",
    "advance_turning",
    "integrate_step",
    "state_derivatives",
]

_MIN_COS_ELEVATION = 1e-6
_MIN_RANGE = 1e-6
_MIRROR_RTOL = 1e-6
_MIN_SPEED = 1e-12


@dataclass(frozen=True)
class EngagementState:
    """Two-agent engagement snapshot: Cartesian mirrors plus spherical relative state.

    Attributes:
        pos_a, vel_a: Own-agent Cartesian position (m) and velocity (m/s).
        pos_b, vel_b: Other-agent Cartesian position and velocity.
        r: Range between the agents, m.
        theta: Line-of-sight azimuth, rad.
        phi: Line-of-sight elevation, rad, |phi| < pi/2.
        v_r: Relative range rate, m/s.
        v_theta: Relative azimuthal velocity component, m/s.
        v_phi: Relative elevation velocity component, m/s.
    """

    pos_a: np.ndarray
    vel_a: np.ndarray
    pos_b: np.ndarray
    vel_b: np.ndarray
    r: float
    theta: float
    phi: float
    v_r: float
    v_theta: float
    v_phi: float

    def __post_init__(self):
        for name in ("pos_a", "vel_a", "pos_b", "vel_b"):
            object.__setattr__(self, name,
                               np.asarray(getattr(self, name), dtype=float).reshape(3))
        ref = _spherical_from_cartesian(self.pos_a, self.vel_a, self.pos_b, self.vel_b)
        stored = np.array([self.r, self.theta, self.phi,
                           self.v_r, self.v_theta, self.v_phi])
        scale = max(self.r, float(np.max(np.abs(stored))), 1.0)
        diff = np.abs(stored - np.array(ref))
        diff[1] = abs(_wrap_angle(stored[1] - ref[1]))
        if np.any(diff > _MIRROR_RTOL * scale):
            raise ValueError("spherical state does not match the Cartesian mirrors")

    @classmethod
    def from_cartesian(cls, pos_a, vel_a, pos_b, vel_b) -> "EngagementState":
        """Build a consistent state from the two agents' Cartesian states."""
        pos_a = np.asarray(pos_a, dtype=float).reshape(3)
        vel_a = np.asarray(vel_a, dtype=float).reshape(3)
        pos_b = np.asarray(pos_b, dtype=float).reshape(3)
        vel_b = np.asarray(vel_b, dtype=float).reshape(3)
        r, theta, phi, v_r, v_theta, v_phi = _spherical_from_cartesian(
            pos_a, vel_a, pos_b, vel_b)
        return cls(pos_a=pos_a, vel_a=vel_a, pos_b=pos_b, vel_b=vel_b,
                   r=r, theta=theta, phi=phi,
                   v_r=v_r, v_theta=v_theta, v_phi=v_phi)

    @property
    def speed_a(self) -> float:
        return float(np.linalg.norm(self.vel_a))

    @property
    def speed_b(self) -> float:
        return float(np.linalg.norm(self.vel_b))


@dataclass(frozen=True)
class ControlInput:
    """Lateral-acceleration commands for both agents.

    Each agent's command is a magnitude (m/s^2) plus the global azimuth /
    elevation pair of its direction; the direction is expected normal to that
    agent's velocity.
    """

    accel_a: float = 0.0
    delta_a: float = 0.0
    gamma_a: float = 0.0
    accel_b: float = 0.0
    delta_b: float = 0.0
    gamma_b: float = 0.0

    def __post_init__(self):
        vals = (self.accel_a, self.delta_a, self.gamma_a,
                self.accel_b, self.delta_b, self.gamma_b)
        if not np.all(np.isfinite(vals)):
            raise ValueError("control input must be finite")


@dataclass(frozen=True)
class StateRates:
    """Time derivatives of the six spherical engagement quantities."""

    r_rate: float
    theta_rate: float
    phi_rate: float
    v_r_rate: float
    v_theta_rate: float
    v_phi_rate: float


def _wrap_angle(a: float) -> float:
    return (a + np.pi) % (2.0 * np.pi) - np.pi


def _spherical_from_cartesian(pos_a, vel_a, pos_b, vel_b):
    rel = pos_b - pos_a
    rel_v = vel_b - vel_a
    r = float(np.linalg.norm(rel))
    if r <= _MIN_RANGE:
        raise GimbalSingularity(f"range {r:.3e} below the spherical-frame floor")
    rho = float(np.hypot(rel[0], rel[1]))
    if rho / r <= _MIN_COS_ELEVATION:
        raise GimbalSingularity("line of sight too close to vertical")
    theta = float(np.arctan2(rel[1], rel[0]))
    phi = float(np.arctan2(rel[2], rho))
    r_hat, theta_hat, phi_hat = _los_triad(theta, phi)
    return (r, theta, phi, float(rel_v @ r_hat), float(rel_v @ theta_hat),
            float(rel_v @ phi_hat))


def _los_triad(theta: float, phi: float):
    """Unit vectors along range, azimuth, and elevation directions."""
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(phi), np.sin(phi)
    r_hat = np.array([cp * ct, cp * st, sp])
    theta_hat = np.array([-st, ct, 0.0])
    phi_hat = np.array([-sp * ct, -sp * st, cp])
    return r_hat, theta_hat, phi_hat


def accel_vector(magnitude: float, delta: float, gamma: float) -> np.ndarray:
    """Cartesian acceleration from a magnitude and azimuth/elevation angles."""
    return magnitude * np.array([
        np.cos(gamma) * np.cos(delta),
        np.cos(gamma) * np.sin(delta),
        np.sin(gamma),
    ])


def state_derivatives(state: EngagementState, control: ControlInput,
                      azimuth_coupled_elevation: bool = False) -> StateRates:
    """Analytic derivatives of the six spherical engagement quantities.

    The acceleration coupling comes from both agents: the relative
    acceleration (other minus own) is projected on the line-of-sight triad.

    Args:
        state: Current engagement state.
        control: Lateral-acceleration commands for both agents.
        azimuth_coupled_elevation: Use the variant elevation-rate cross term
            -V_r*V_theta/r in place of -V_r*V_phi/r.  Straight-line motion
            follows the default form; the variant is kept so the mismatch can
            be measured rather than silently discarded.

    Returns:
        StateRates with all six derivatives.

    Raises:
        GimbalSingularity: If the line of sight is too close to vertical.
        ValueError: If the range is below the working floor.
    """
    if state.r <= _MIN_RANGE:
        raise ValueError(f"range {state.r:.3e} below the working floor")
    cos_phi = np.cos(state.phi)
    if abs(cos_phi) <= _MIN_COS_ELEVATION:
        raise GimbalSingularity("elevation too close to +/- pi/2")

    r_hat, theta_hat, phi_hat = _los_triad(state.theta, state.phi)
    rel_acc = (accel_vector(control.accel_b, control.delta_b, control.gamma_b)
               - accel_vector(control.accel_a, control.delta_a, control.gamma_a))
    a_r = float(rel_acc @ r_hat)
    a_theta = float(rel_acc @ theta_hat)
    a_phi = float(rel_acc @ phi_hat)

    r, v_r, v_theta, v_phi = state.r, state.v_r, state.v_theta, state.v_phi
    tan_phi = np.tan(state.phi)
    cross = v_theta if azimuth_coupled_elevation else v_phi
    return StateRates(
        r_rate=v_r,
        theta_rate=v_theta / (r * cos_phi),
        phi_rate=v_phi / r,
        v_r_rate=(v_theta**2 + v_phi**2) / r + a_r,
        v_theta_rate=(-v_r * v_theta + v_theta * v_phi * tan_phi) / r + a_theta,
        v_phi_rate=(-v_r * cross - v_theta**2 * tan_phi) / r + a_phi,
    )


def _lateral(vel: np.ndarray, acc: np.ndarray) -> np.ndarray:
    """Component of a commanded acceleration normal to the current velocity."""
    speed_sq = vel @ vel
    if speed_sq <= _MIN_SPEED**2 or not np.any(acc):
        return np.zeros(3)
    return acc - (acc @ vel) / speed_sq * vel


def advance_turning(pos, vel, acc, h):
    """One Runge-Kutta step of a single body under turn-only acceleration.

    The commanded acceleration is projected normal to the velocity at every
    stage, so the flow conserves speed; the integrator's own tiny drift is
    projected out afterwards.

    Returns:
        (new_pos, new_vel) arrays.
    """
    speed = np.linalg.norm(vel)

    def rates(p, v):
        return v, _lateral(v, acc)

    k1p, k1v = rates(pos, vel)
    k2p, k2v = rates(pos + 0.5 * h * k1p, vel + 0.5 * h * k1v)
    k3p, k3v = rates(pos + 0.5 * h * k2p, vel + 0.5 * h * k2v)
    k4p, k4v = rates(pos + h * k3p, vel + h * k3v)
    new_pos = pos + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
    new_vel = vel + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    new_speed = np.linalg.norm(new_vel)
    if speed > _MIN_SPEED and new_speed > _MIN_SPEED:
        new_vel = new_vel * (speed / new_speed)
    return new_pos, new_vel


def integrate_step(
    state: EngagementState,
    control: ControlInput,
    dt: float,
    contact: Callable[[np.ndarray, np.ndarray], bool] | None = None,
) -> EngagementState:
    """Advance both agents by one step of fourth-order Runge-Kutta.

    Lateral acceleration is modeled as a turn: at every stage the commanded
    acceleration is projected normal to the current velocity, so the modeled
    force never does work and each agent's speed is conserved by the flow
    (the integrator's own tiny drift is projected out after the step).  The
    spherical quantities are recomputed from the stepped Cartesian mirrors,
    so the two representations stay consistent by construction.

    Args:
        state: Current engagement state.
        control: Lateral-acceleration commands held over the step.
        dt: Step length, s, > 0.
        contact: Optional predicate on (pos_a, pos_b) returning True when the
            bodies touch; checked mid-step and at the end.

    Raises:
        GimbalSingularity: If the stepped line of sight is too vertical.
        StepRejected: If the contact predicate fires (caller halves dt).
        ValueError: If dt is not positive.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")

    acc_a = accel_vector(control.accel_a, control.delta_a, control.gamma_a)
    acc_b = accel_vector(control.accel_b, control.delta_b, control.gamma_b)
    pos_a, vel_a = advance_turning(state.pos_a, state.vel_a, acc_a, dt)
    pos_b, vel_b = advance_turning(state.pos_b, state.vel_b, acc_b, dt)

    if contact is not None:
        mid_a, _ = advance_turning(state.pos_a, state.vel_a, acc_a, 0.5 * dt)
        mid_b, _ = advance_turning(state.pos_b, state.vel_b, acc_b, 0.5 * dt)
        if contact(mid_a, mid_b) or contact(pos_a, pos_b):
            raise StepRejected("bodies would touch within this step")

    return EngagementState.from_cartesian(pos_a, vel_a, pos_b, vel_b)


def accel_direction_3d(frame: PlaneFrame, heading_p: float,
                       magnitude: float) -> tuple[float, float, float]:
    """Lift an in-plane lateral acceleration to 3-D direction angles.

    The in-plane direction is the left normal of the agent's in-plane
    heading; a negative magnitude flips it to the right normal.

    Args:
        frame: Engagement plane carrying the lift.
        heading_p: Agent's in-plane velocity direction angle, rad.
        magnitude: Signed acceleration, m/s^2.

    Returns:
        (accel, delta, gamma): nonnegative magnitude and the global azimuth /
        elevation of the applied direction.
    """
    normal = heading_p + 0.5 * np.pi
    direction = np.cos(normal) * frame.r_x + np.sin(normal) * frame.r_y
    if magnitude < 0:
        direction = -direction
        magnitude = -magnitude
    delta = float(np.arctan2(direction[1], direction[0]))
    gamma = float(np.arcsin(np.clip(direction[2], -1.0, 1.0)))
    return float(magnitude), delta, gamma
