"""Voltage-controlled resistance-switch device model.

The device is a threshold-switched memristor with a bounded internal state
variable ``w`` (meters) that maps linearly to resistance, plus a slowly
decaying drift capacity ``theta`` (m/s) that reproduces the stimulus-free
state drift observed after a SET operation.

Sign conventions (binding for the whole package):

* ``w = w_off`` is the HRS end, ``w = w_on`` the LRS end of the state range.
* A SET drive (effective voltage above ``v_off``) moves ``w`` toward
  ``w_on``; a RESET drive (below ``v_on``) moves it toward ``w_off``.
  ``k_off``/``k_on`` are treated as rate magnitudes for those directions.
* ``theta > 0`` drifts ``w`` toward ``w_off`` (resistance recovers upward
  after a SET); RESET-coupled drift, when enabled, charges ``theta``
  negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .errors import ContractError, NumericInputError

# Substep bound for the theta decay ODE: explicit Euler over tau_l/1000
# keeps the decay within 0.05% of exact over one time constant.
_THETA_SUBSTEP_FRACTION = 1e-3
_MAX_SUBSTEPS = 20_000_000


@dataclass(frozen=True)
class DeviceParams:
    """One full set of model constants (SI units)."""

    r_off: float
    r_on: float
    v_off: float
    v_on: float
    k_off: float
    k_on: float
    alpha_off: float
    alpha_on: float
    a_off: float
    a_on: float
    w_c: float
    w_off: float
    w_on: float
    theta_off: float
    theta_on: float
    tau_l: float

    def validate(self) -> "DeviceParams":
        if not all(math.isfinite(v) for v in (
                self.r_off, self.r_on, self.v_off, self.v_on, self.k_off,
                self.k_on, self.alpha_off, self.alpha_on, self.a_off,
                self.a_on, self.w_c, self.w_off, self.w_on, self.theta_off,
                self.theta_on, self.tau_l)):
            raise ContractError("device parameters must be finite")
        if not (self.r_off > self.r_on > 0):
            raise ContractError(f"need r_off > r_on > 0, got {self.r_off}, {self.r_on}")
        if not (self.v_off > 0 > self.v_on):
            raise ContractError(f"need v_off > 0 > v_on, got {self.v_off}, {self.v_on}")
        if not (self.w_off > self.w_on >= 0):
            raise ContractError(f"need w_off > w_on >= 0, got {self.w_off}, {self.w_on}")
        if self.w_c <= 0:
            raise ContractError("w_c must be positive")
        if self.tau_l <= 0:
            raise ContractError("tau_l must be positive")
        if self.theta_off < 0:
            raise ContractError("theta_off must be >= 0 (zero disables SET drift)")
        if self.theta_on > 0:
            raise ContractError("theta_on must be <= 0 (zero disables RESET drift)")
        return self

    @property
    def w_range(self) -> float:
        return self.w_off - self.w_on


@dataclass
class DeviceState:
    """Dynamic state: internal variable w, drift capacity theta.

    ``polarity`` (+1/-1) maps the sign of the terminal voltage to the SET
    direction; it externalizes the device orientation in a circuit.
    """

    w: float
    theta: float = 0.0
    polarity: int = 1

    def copy(self) -> "DeviceState":
        return replace(self)


@dataclass(frozen=True)
class StepReport:
    dt_used: float
    substeps: int
    w_before: float
    w_after: float
    clamped: bool


@dataclass(frozen=True)
class IntegratorConfig:
    """Explicit time stepping controls.

    ``max_dw_fraction`` caps the per-substep state change at that fraction
    of the full state range. ``scheme`` is ``euler`` or ``rk4``.
    """

    max_dw_fraction: float = 1.0 / 200.0
    scheme: str = "euler"

    def validate(self) -> "IntegratorConfig":
        if not (0 < self.max_dw_fraction <= 0.5):
            raise ContractError("max_dw_fraction must be in (0, 0.5]")
        if self.scheme not in ("euler", "rk4"):
            raise ContractError(f"unknown scheme {self.scheme!r}")
        return self


def window_off(w: float, p: DeviceParams) -> float:
    """Double-exponential damping window for the SET branch; in (0, 1)."""
    return math.exp(-math.exp((w - p.a_off) / p.w_c))


def window_on(w: float, p: DeviceParams) -> float:
    """Double-exponential damping window for the RESET branch; in (0, 1)."""
    return math.exp(-math.exp((-w - p.a_on) / p.w_c))


def resistance(w: float, p: DeviceParams) -> float:
    """Linear state-to-resistance map; endpoints are exactly r_on/r_off."""
    if not (p.w_on <= w <= p.w_off):
        raise ContractError(f"w={w} outside [{p.w_on}, {p.w_off}]")
    return p.r_on + (p.r_off - p.r_on) * (w - p.w_on) / p.w_range


def current(v: float, w: float, p: DeviceParams, i_limit: float | None = None) -> float:
    """Ohmic current through the device, optionally compliance-clamped.

    The clamp models an instrument-side current limit: the reported
    current is capped at ``|i| <= i_limit`` while the state dynamics stay
    voltage-controlled.
    """
    i = v / resistance(w, p)
    if i_limit is not None and abs(i) > i_limit:
        i = math.copysign(i_limit, i)
    return i


def lrs_fraction(w: float, p: DeviceParams) -> float:
    """Normalized state in [0, 1]; 1 denotes full LRS (w at w_on)."""
    return (p.w_off - w) / p.w_range


def _set_magnitude(v_eff: float, w: float, p: DeviceParams) -> float:
    """|dw/dt| of the SET branch (valid for v_eff > v_off)."""
    return p.k_off * (v_eff / p.v_off - 1.0) ** p.alpha_off * window_off(w, p)


def _reset_magnitude(v_eff: float, w: float, p: DeviceParams) -> float:
    """|dw/dt| of the RESET branch (valid for v_eff < v_on)."""
    return -p.k_on * (v_eff / p.v_on - 1.0) ** p.alpha_on * window_on(w, p)


def state_derivative(v: float, s: DeviceState, p: DeviceParams) -> float:
    """dw/dt per the three-branch threshold law.

    Threshold equalities belong to the hold branch (strict inequalities),
    where the drift capacity theta is the only driver.
    """
    if not math.isfinite(v):
        raise NumericInputError(f"non-finite voltage {v!r}")
    v_eff = s.polarity * v
    if v_eff > p.v_off:
        return -_set_magnitude(v_eff, s.w, p)
    if v_eff < p.v_on:
        return _reset_magnitude(v_eff, s.w, p)
    return s.theta


def leakage_derivative(v: float, s: DeviceState, p: DeviceParams) -> float:
    """dtheta/dt: exponential drain plus switching-coupled source.

    The source term follows the active branch magnitude so that SET
    charges theta positive (subsequent drift raises resistance) and RESET,
    when theta_on < 0, charges it negative. In the hold band theta only
    decays.
    """
    if not math.isfinite(v):
        raise NumericInputError(f"non-finite voltage {v!r}")
    v_eff = s.polarity * v
    source = 0.0
    if v_eff > p.v_off:
        source = p.theta_off * _set_magnitude(v_eff, s.w, p)
    elif v_eff < p.v_on:
        source = p.theta_on * _reset_magnitude(v_eff, s.w, p)
    return -s.theta / p.tau_l + source


def _derivs(v_eff: float, w: float, theta: float, p: DeviceParams) -> tuple[float, float]:
    """(dw/dt, dtheta/dt) at fixed effective voltage."""
    if v_eff > p.v_off:
        mag = _set_magnitude(v_eff, w, p)
        return -mag, -theta / p.tau_l + p.theta_off * mag
    if v_eff < p.v_on:
        mag = _reset_magnitude(v_eff, w, p)
        return mag, -theta / p.tau_l + p.theta_on * mag
    return theta, -theta / p.tau_l


def step(s: DeviceState, v: float, dt: float, p: DeviceParams,
         cfg: IntegratorConfig | None = None) -> tuple[DeviceState, StepReport]:
    """Advance (w, theta) by dt at a fixed terminal voltage.

    Substeps are chosen so each changes w by at most
    ``max_dw_fraction * (w_off - w_on)`` and resolves the theta decay; w is
    hard-clamped to [w_on, w_off] after every substep because the windows
    alone do not prevent finite-step overshoot.
    """
    if cfg is None:
        cfg = IntegratorConfig()
    cfg.validate()
    if not math.isfinite(v):
        raise NumericInputError(f"non-finite voltage {v!r}")
    if not math.isfinite(dt) or dt <= 0:
        raise NumericInputError(f"dt must be positive and finite, got {dt!r}")

    v_eff = s.polarity * v
    max_dw = cfg.max_dw_fraction * p.w_range
    theta_h = p.tau_l * _THETA_SUBSTEP_FRACTION

    w = s.w
    theta = s.theta
    w_before = w
    clamped = False
    substeps = 0
    remaining = dt

    while remaining > 0.0:
        substeps += 1
        if substeps > _MAX_SUBSTEPS:
            raise ContractError("substep budget exceeded; check parameters")
        dw, dtheta = _derivs(v_eff, w, theta, p)
        # Rate that can actually move the state: a drive pushing outward
        # against a bound is inert and must not shrink the substep.
        eff_dw = dw
        if (w <= p.w_on and dw < 0.0) or (w >= p.w_off and dw > 0.0):
            eff_dw = 0.0
        h = remaining
        if eff_dw != 0.0:
            h = min(h, max_dw / abs(eff_dw))
        if theta != 0.0 or dtheta != 0.0:
            h = min(h, theta_h)

        if cfg.scheme == "euler":
            w_new = w + h * dw
            theta_new = theta + h * dtheta
        else:  # rk4
            k1w, k1t = dw, dtheta
            k2w, k2t = _derivs(v_eff, w + 0.5 * h * k1w, theta + 0.5 * h * k1t, p)
            k3w, k3t = _derivs(v_eff, w + 0.5 * h * k2w, theta + 0.5 * h * k2t, p)
            k4w, k4t = _derivs(v_eff, w + h * k3w, theta + h * k3t, p)
            w_new = w + h / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w)
            theta_new = theta + h / 6.0 * (k1t + 2 * k2t + 2 * k3t + k4t)

        if w_new < p.w_on:
            w_new = p.w_on
            clamped = True
        elif w_new > p.w_off:
            w_new = p.w_off
            clamped = True
        w = w_new
        theta = theta_new
        remaining -= h

    new_state = DeviceState(w=w, theta=theta, polarity=s.polarity)
    return new_state, StepReport(dt_used=dt, substeps=substeps,
                                 w_before=w_before, w_after=w, clamped=clamped)
