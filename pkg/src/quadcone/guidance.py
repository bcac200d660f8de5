"""Avoidance-plane selection and dynamic-inversion lateral acceleration.

On the selected engagement plane the margin y is driven toward a reference w
by inverting its dynamics: the commanded lateral acceleration makes the error
z = y - w decay like dz/dt = -K z.  The aperture and bisector rates that feed
the inversion are synthesized numerically from per-step history because the
tangent geometry has no closed-form time derivative.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .cone import Cone3D, PlanarCone
from .errors import ConfigInvalid, NoValidPlane, SingularInversion

__all__ = [
    "ActivationGate",
    "GuidanceConfig",
    "GuidanceTerms",
    "PlaneRule",
    "RateTracker",
    "coop_accels",
    "noncoop_accel",
    "numeric_rates",
    "select_plane",
]

_TIE_TOL = 1e-9
_SINGULAR_TOL = 1e-9


class PlaneRule(Enum):
    """How the avoidance plane is chosen from the cone's family."""

    MAX_APERTURE = "max_aperture"
    MIN_DEVIATION = "min_deviation"


@dataclass(frozen=True)
class GuidanceConfig:
    """Tunable guidance parameters.

    Attributes:
        k_gain: Error decay rate K, 1/s; the y-error time constant is 1/K.
        w_ref: Margin reference w >= 0; positive values push the relative
            velocity strictly outside the cone instead of onto its boundary.
        mu: Cooperative acceleration ratio a_B / a_A.
        plane_rule: Avoidance-plane selection rule.
        rate_window: Sample count for the backward-difference rate estimates.
        accel_limit: Saturation bound on commanded acceleration, m/s^2.
        release_margin: Hysteresis margin above w_ref for deactivation.
        release_steps: Consecutive clear steps required to deactivate.
    """

    k_gain: float = 2.0
    w_ref: float = 0.05
    mu: float = 1.0
    plane_rule: PlaneRule = PlaneRule.MAX_APERTURE
    rate_window: int = 2
    accel_limit: float = 30.0
    release_margin: float = 0.02
    release_steps: int = 5

    def __post_init__(self):
        if not self.k_gain > 0:
            raise ConfigInvalid("k_gain must be positive")
        if self.w_ref < 0:
            raise ConfigInvalid("w_ref must be nonnegative")
        if self.rate_window < 2:
            raise ConfigInvalid("rate_window must be at least 2")
        if not self.accel_limit > 0:
            raise ConfigInvalid("accel_limit must be positive")


@dataclass(frozen=True)
class GuidanceTerms:
    """Intermediate inversion quantities, logged for each guided step."""

    n1: float
    n2: float
    n3: float
    d1: float
    d2: float
    psi_rate: float
    theta_b_rate: float


def _wrap(angle: float) -> float:
    return (angle + np.pi) % (2.0 * np.pi) - np.pi


def select_plane(cone: Cone3D, rule: PlaneRule) -> int:
    """Pick the avoidance plane's index from an evaluated cone.

    MAX_APERTURE takes the widest plane; MIN_DEVIATION the plane whose cone
    boundary lies angularly closest to the own agent's in-plane heading.
    Planes with no usable margin (frozen in-plane geometry) are skipped; ties
    resolve to the lowest index.

    Raises:
        NoValidPlane: If every plane was skipped.
    """
    valid = [i for i, p in enumerate(cone.planes) if np.isfinite(p.y)]
    if not valid:
        raise NoValidPlane("no plane has usable in-plane motion")
    if rule is PlaneRule.MAX_APERTURE:
        scores = np.array([-cone.planes[i].psi for i in valid])
    else:
        scores = np.empty(len(valid))
        for k, i in enumerate(valid):
            p = cone.planes[i]
            lo = abs(_wrap(p.heading_a - (p.theta_b - 0.5 * p.psi)))
            hi = abs(_wrap(p.heading_a - (p.theta_b + 0.5 * p.psi)))
            scores[k] = min(lo, hi)
    best = float(np.min(scores))
    tol = _TIE_TOL * (1.0 + abs(best))
    for k, i in enumerate(valid):
        if scores[k] <= best + tol:
            return i
    raise NoValidPlane("unreachable")  # pragma: no cover


def numeric_rates(times, psis, theta_bs, window: int) -> tuple[float, float]:
    """Backward-difference rates of the aperture and bisector angles.

    The bisector history is unwrapped before differencing so a crossing of
    +/- pi does not spike the rate.  Fewer than two samples degrade to zero
    rates.

    Args:
        times: Sample times, strictly increasing.
        psis: Aperture history on the tracked plane.
        theta_bs: Bisector history on the tracked plane.
        window: Number of most recent samples to difference across.

    Returns:
        (psi_rate, theta_b_rate) in rad/s.
    """
    count = len(times)
    if count < 2:
        return 0.0, 0.0
    k = min(window, count)
    t = np.asarray(times[-k:], dtype=float)
    span = t[-1] - t[0]
    if span <= 0:
        return 0.0, 0.0
    psi = np.asarray(psis[-k:], dtype=float)
    theta = np.unwrap(np.asarray(theta_bs[-k:], dtype=float))
    return float((psi[-1] - psi[0]) / span), float((theta[-1] - theta[0]) / span)


class RateTracker:
    """Per-run history feeding numeric_rates, reset on every plane switch."""

    def __init__(self, window: int):
        self.window = window
        self.plane_index: int | None = None
        self._times: list[float] = []
        self._psis: list[float] = []
        self._theta_bs: list[float] = []

    def update(self, t: float, plane_index: int, plane: PlanarCone) -> tuple[float, float]:
        """Record one sample and return the current rate estimates."""
        if plane_index != self.plane_index:
            self.plane_index = plane_index
            self._times, self._psis, self._theta_bs = [], [], []
        self._times.append(t)
        self._psis.append(plane.psi)
        self._theta_bs.append(plane.theta_b)
        keep = max(self.window, 2)
        del self._times[:-keep], self._psis[:-keep], self._theta_bs[:-keep]
        return numeric_rates(self._times, self._psis, self._theta_bs, self.window)


def _inversion_terms(plane: PlanarCone, separation: float, psi_rate: float,
                     theta_b_rate: float,
                     cfg: GuidanceConfig) -> tuple[float, GuidanceTerms]:
    # The plane frame is rebuilt every step with the line of sight pinned to
    # bearing pi/2, so the measured bisector rate is frame-relative; the
    # inversion needs the inertial rate, which adds the frame's own rotation
    # v_theta / r.  With that transport the drift model
    #     dy/dt = -(theta_b_rate + v_theta/r) * D1 / S - (psi_rate/2) sin(psi)
    # matches a finite-difference check on coasting planar engagements to
    # machine precision, and the acceleration channels enter as
    #     + a_A * D1 * D2 / (2 S^2)   + a_B * D1 * N3 / S^2.
    s = plane.v_r**2 + plane.v_theta**2
    d1 = 2.0 * plane.v_hat_r * plane.v_hat_theta
    gap = plane.heading_a - plane.theta_p
    d2 = 2.0 * (plane.v_r * np.cos(gap) - plane.v_theta * np.sin(gap))
    n1 = s * (2.0 * cfg.k_gain * (cfg.w_ref - plane.y)
              + psi_rate * np.sin(plane.psi))
    n2 = 2.0 * (theta_b_rate + plane.v_theta / separation) * d1
    gap_b = plane.heading_b - plane.theta_p
    n3 = -(plane.v_r * np.cos(gap_b) - plane.v_theta * np.sin(gap_b))
    return s, GuidanceTerms(n1=n1, n2=n2, n3=n3, d1=d1, d2=d2,
                            psi_rate=psi_rate, theta_b_rate=theta_b_rate)


def noncoop_accel(plane: PlanarCone, separation: float, psi_rate: float,
                  theta_b_rate: float,
                  cfg: GuidanceConfig) -> tuple[float, GuidanceTerms]:
    """Single-agent inversion acceleration on the selected plane.

    Args:
        plane: Selected plane's cone record.
        separation: Center distance between the bodies, m.
        psi_rate: Numeric aperture rate, rad/s.
        theta_b_rate: Numeric bisector rate, rad/s.
        cfg: Guidance parameters.

    Returns:
        (accel, terms): signed lateral acceleration (positive along the
        heading's left normal), clamped to the saturation limit, plus the
        logged intermediate terms.

    Raises:
        SingularInversion: If the inversion denominator D1*D2 is too small.
    """
    s, terms = _inversion_terms(plane, separation, psi_rate, theta_b_rate, cfg)
    denom = terms.d1 * terms.d2
    if abs(denom) <= _SINGULAR_TOL * max(s, 1e-30) ** 1.5:
        raise SingularInversion(f"D1*D2 = {denom:.3e} at speed^2 {s:.3e}")
    accel = s * (terms.n1 + terms.n2) / denom
    return float(np.clip(accel, -cfg.accel_limit, cfg.accel_limit)), terms


def coop_accels(plane: PlanarCone, separation: float, psi_rate: float,
                theta_b_rate: float,
                cfg: GuidanceConfig) -> tuple[tuple[float, float], GuidanceTerms]:
    """Cooperative pair of inversion accelerations with ratio mu.

    Both agents share one inversion: the margin dynamics see a_A through the
    D2 channel and a_B = mu * a_A through the N3 channel, so the combined
    denominator is D1 * (D2 + 2 mu N3).  At mu = 0 this reduces exactly to
    the single-agent law.  The clamp preserves the ratio exactly.

    Raises:
        SingularInversion: If the shared denominator is too small.
    """
    s, terms = _inversion_terms(plane, separation, psi_rate, theta_b_rate, cfg)
    denom = terms.d1 * (terms.d2 + 2.0 * cfg.mu * terms.n3)
    if abs(denom) <= _SINGULAR_TOL * max(s, 1e-30) ** 1.5:
        raise SingularInversion(f"coop denominator {denom:.3e} at speed^2 {s:.3e}")
    accel_a = s * (terms.n1 + terms.n2) / denom
    bound = cfg.accel_limit
    if abs(cfg.mu) > 1.0:
        bound = cfg.accel_limit / abs(cfg.mu)
    accel_a = float(np.clip(accel_a, -bound, bound))
    return (accel_a, float(cfg.mu * accel_a)), terms


class ActivationGate:
    """Hysteresis switch deciding when avoidance is engaged.

    Engages as soon as a cone evaluation predicts collision; disengages only
    after the margin has stayed above w + release_margin for release_steps
    consecutive steps, so the command does not chatter at the boundary.
    """

    def __init__(self, cfg: GuidanceConfig):
        self.cfg = cfg
        self.active = False
        self._clear_streak = 0

    def update(self, predicts_collision: bool, y: float | None) -> bool:
        """Advance one step; returns whether guidance is engaged."""
        if not self.active:
            if predicts_collision:
                self.active = True
                self._clear_streak = 0
        else:
            threshold = self.cfg.w_ref + self.cfg.release_margin
            if y is not None and np.isfinite(y) and y > threshold:
                self._clear_streak += 1
                if self._clear_streak >= self.cfg.release_steps:
                    self.active = False
            else:
                self._clear_streak = 0
        return self.active
