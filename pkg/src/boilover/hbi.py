"""Closed-form heat-balance-integral and ablation solutions.

Coordinates: ``y`` is depth below the regressing surface (m), ``t`` is time
since ignition (s). Temperatures are returned as the dimensionless excess
``theta = (T - T_inf) / (T_s - T_inf)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .corephys import (
    CharacteristicScales,
    DimensionlessGroups,
    FluxBalance,
    FuelProperties,
    Scenario,
    flux_balance,
    regression_velocity,
)
from .errors import DomainError, InvalidRegime

LINEAR_BC = "linear_bc"
STEFAN_BC = "stefan_bc"
VARIANTS = (LINEAR_BC, STEFAN_BC)

PROFILE_CSV_COLUMNS = ("y_m", "t_s", "theta", "variant", "saturated")


def _as_float_or_array(x):
    arr = np.asarray(x, dtype=float)
    return float(arr) if arr.ndim == 0 else arr


def delta_squared(a_F, V_a, B_F, t, verbatim=False):
    """Square of the HBI thermal penetration depth.

    ``2 (a_F/V_a)**2 B_F (1 - exp(-3 V_a**2 t / a_F))`` which solves
    ``d(delta**2)/dt = 6 a_F B_F - 3 (V_a**2/a_F) delta**2`` with
    ``delta(0) = 0``. ``verbatim=True`` evaluates the dimensionally
    inconsistent printed form ``(2 a_F B_F / V_a)(1 - exp(-3 V_a t))``; it is
    exposed for documentation only.
    """
    t = np.asarray(t, dtype=float)
    if verbatim:
        return 2.0 * a_F * B_F / V_a * -np.expm1(-3.0 * V_a * t)
    y_p0 = a_F / V_a
    return 2.0 * y_p0**2 * B_F * -np.expm1(-3.0 * V_a**2 / a_F * t)


def penetration_delta(a_F, V_a, B_F, t, verbatim=False):
    if not B_F > 0:
        raise InvalidRegime(
            f"B_F={B_F:.4g} <= 0: the penetration-depth closed form needs a positive flux "
            "factor (use the 1 - 1/H_p approximation to reproduce the published curves)"
        )
    if np.any(np.asarray(t) < 0):
        raise DomainError("time must be non-negative")
    return _as_float_or_array(np.sqrt(delta_squared(a_F, V_a, B_F, t, verbatim)))


def _resolve_bf(groups: DimensionlessGroups, bf_mode):
    if bf_mode == "exact":
        groups.require("B_F")
        return groups.B_F
    if bf_mode == "approx":
        groups.require("H_p")
        return groups.B_F_approx
    raise ValueError(f"unknown B_F mode {bf_mode!r}")


def hbi_delta(groups: DimensionlessGroups, scales: CharacteristicScales, t, *,
              bf_mode="exact", verbatim=False):
    """HBI thermal penetration depth delta(t) in metres.

    Parameters
    ----------
    groups, scales
        Output of :func:`~boilover.corephys.dimensionless_groups` and
        :func:`~boilover.corephys.characteristic_scales`.
    t : float or array
        Time(s) in seconds, ``t >= 0``.
    bf_mode : {"exact", "approx"}
        ``exact`` uses ``B_F = 1 - F/phi``; ``approx`` uses ``1 - 1/H_p``.
    verbatim : bool
        Evaluate the printed (dimensionally inconsistent) form.

    Raises
    ------
    InvalidRegime
        If the selected ``B_F`` is not positive.
    """
    B_F = _resolve_bf(groups, bf_mode)
    return penetration_delta(scales.a_F, scales.V_a, B_F, t, verbatim)


def goodman_delta(a_F, B_F, t):
    """Small-time limit ``sqrt(6 a_F B_F t)``; also the support width Z(t)."""
    return _as_float_or_array(np.sqrt(6.0 * a_F * B_F * np.asarray(t, dtype=float)))


def goodman_internal_generation_delta(fuel: FuelProperties, F: float, t):
    """Penetration depth with a constant-flux internal source, ``sqrt(24 a_F t)``.

    The accumulated heat ``Q = F t`` cancels from the cubic-profile integral,
    so ``F`` only has to be constant and positive.
    """
    if not F > 0:
        raise DomainError("surface flux must be positive")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("time must be non-negative")
    return _as_float_or_array(np.sqrt(24.0 * fuel.a_F * t))


def fill_time_internal_generation(h, a_F):
    """Time for the internal-generation depth to reach ``h``: ``t0_h / 24``."""
    return h**2 / a_F / 24.0


def fill_time_no_source(h, a_F, B_F=1.0):
    """Time for ``sqrt(6 a_F B_F t)`` to reach ``h``: ``t0_h / (6 B_F)``."""
    return h**2 / a_F / (6.0 * B_F)


@dataclass(frozen=True)
class QuadraticProfile:
    """``T(y) = beta0 + beta1 y + beta2 y**2`` on ``[0, delta]``."""

    beta0: float
    beta1: float
    beta2: float
    delta: float
    phi: float
    T_inf: float
    delta_T: float

    @classmethod
    def from_flux(cls, phi, lambda_F, delta, T_inf, delta_T):
        return cls(
            beta0=T_inf + phi * delta / (2.0 * lambda_F),
            beta1=-phi / lambda_F,
            beta2=phi / (2.0 * lambda_F * delta),
            delta=delta,
            phi=phi,
            T_inf=T_inf,
            delta_T=delta_T,
        )

    def temperature(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(y < 0) or np.any(y > self.delta * (1 + 1e-12)):
            raise DomainError(f"y outside the profile support [0, {self.delta:.4g}] m")
        return _as_float_or_array(self.beta0 + self.beta1 * y + self.beta2 * y**2)

    def gradient(self, y):
        return _as_float_or_array(self.beta1 + 2.0 * self.beta2 * np.asarray(y, dtype=float))

    def theta(self, y):
        return _as_float_or_array((np.asarray(self.temperature(y)) - self.T_inf) / self.delta_T)

    __call__ = theta


def hbi_quadratic_profile(flux: FluxBalance, fuel: FuelProperties, t, *, T_inf=293.0,
                          bf_mode="exact", B_F: Optional[float] = None) -> QuadraticProfile:
    """Quadratic HBI temperature profile at time ``t``.

    ``theta(y) = phi delta (1 - y/delta)**2 / (2 lambda_F (T_s - T_inf))``.
    The regression velocity is recovered from ``flux.q_vap``. An explicit
    ``B_F`` overrides ``bf_mode``.
    """
    fuel.require("lambda_F", "rho_F", "H_v", "T_s")
    if not t > 0:
        raise DomainError("profile time must be positive")
    V_a = flux.q_vap / (fuel.rho_F * fuel.H_v)
    if B_F is None:
        if bf_mode == "exact":
            B_F = flux.B_F
        elif bf_mode == "approx":
            B_F = 1.0 - flux.q_vap / flux.F
        else:
            raise ValueError(f"unknown B_F mode {bf_mode!r}")
    delta = penetration_delta(fuel.a_F, V_a, B_F, t)
    return QuadraticProfile.from_flux(flux.phi, fuel.lambda_F, delta, T_inf, fuel.T_s - T_inf)


@dataclass(frozen=True)
class PenetrationDepth:
    a_F: float
    V_a: float
    B_F: float

    @property
    def y_p0(self):
        """e-folding depth of the exponential ablation profile."""
        return self.a_F / self.V_a

    def delta_hbi(self, t):
        return penetration_delta(self.a_F, self.V_a, self.B_F, t)

    def y_pt(self, t):
        return self.y_p0 + self.V_a * np.asarray(t, dtype=float)

    def Z(self, t):
        return goodman_delta(self.a_F, self.B_F, t)


@dataclass(frozen=True)
class AblationProfile:
    variant: str
    amplitude: float
    decay: float
    growth: float
    D0_or_P0: float = 1.0

    def __call__(self, y, t):
        y = np.asarray(y, dtype=float)
        t = np.asarray(t, dtype=float)
        return _as_float_or_array(
            self.amplitude * self.D0_or_P0 * np.exp(-self.decay * y + self.growth * t)
        )


@dataclass(frozen=True)
class ProfileSample:
    """Profile value(s) with the audit flags the closed forms need."""

    theta: object
    saturated: object
    out_of_layer: object

    def __float__(self):
        return float(self.theta)


def stefan_amplitude(scenario: Scenario):
    """Pulse magnitude ``phi a_F / (lambda_F (T_s - T_inf) V_a)``.

    This is the amplitude for which the profile carries the net flux ``phi``
    at the surface. It equals ``N0 / N_DHS`` only when vaporization takes a
    negligible share of ``F`` (``N0`` is built on ``F``).
    """
    fuel = scenario.fuel
    fuel.require("lambda_F", "T_s")
    phi = flux_balance(scenario).phi
    return phi * fuel.a_F / (fuel.lambda_F * scenario.delta_T * regression_velocity(scenario))


def ablation(variant, scenario: Scenario, amplitude: Optional[float] = None):
    """Profile record; ``amplitude`` overrides the stefan_bc magnitude."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    V_a = regression_velocity(scenario)
    a_F = scenario.fuel.a_F
    if variant == LINEAR_BC:
        amplitude = 1.0
    elif amplitude is None:
        amplitude = stefan_amplitude(scenario)
    return AblationProfile(variant=variant, amplitude=amplitude, decay=V_a / a_F,
                           growth=V_a**2 / a_F)


def _sample(theta, y, t, scenario, V_a):
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    layer = scenario.y0 - V_a * t
    out = (y < 0) | (y > layer)
    sat = np.asarray(theta) > 1.0
    if sat.ndim == 0 and out.ndim == 0:
        return ProfileSample(float(theta), bool(sat), bool(out))
    return ProfileSample(np.asarray(theta), sat, out)


def ablation_profile(variant, scenario: Scenario, y, t, amplitude=None) -> ProfileSample:
    """Exponential ablation-approximation profile.

    ``linear_bc``: ``exp(-(V_a/a_F) y) exp((V_a**2/a_F) t)``;
    ``stefan_bc``: the same scaled by :func:`stefan_amplitude`. Values are not clipped at 1;
    ``saturated`` marks them. ``out_of_layer`` marks depths below the
    current fuel layer ``y0 - V_a t``.
    """
    if np.any(np.asarray(y) < 0) or np.any(np.asarray(t) < 0):
        raise DomainError("ablation profile needs y >= 0 and t >= 0")
    prof = ablation(variant, scenario, amplitude)
    V_a = regression_velocity(scenario)
    return _sample(prof(y, t), y, t, scenario, V_a)


def wave_pulse(scenario: Scenario, y_lab, t, variant=STEFAN_BC, amplitude=None) -> ProfileSample:
    """Travelling-wave form ``A exp(-(V_a/a_F)(y - V_a t))`` of the ablation profile."""
    if np.any(np.asarray(y_lab) < 0) or np.any(np.asarray(t) < 0):
        raise DomainError("wave pulse needs y >= 0 and t >= 0")
    prof = ablation(variant, scenario, amplitude)
    V_a = regression_velocity(scenario)
    k = V_a / scenario.fuel.a_F
    xi = np.asarray(y_lab, dtype=float) - V_a * np.asarray(t, dtype=float)
    theta = _as_float_or_array(prof.amplitude * np.exp(-k * xi))
    return _sample(theta, y_lab, t, scenario, V_a)


def penetration_depth_nonlinear(groups: DimensionlessGroups, scales: CharacteristicScales):
    """``(a_F/V_a)(1 + ln N_p)``, the 1/e depth of the Stefan-condition profile."""
    groups.require("N_p")
    if not groups.N_p > 0:
        raise InvalidRegime(f"N_p={groups.N_p:.4g} <= 0 has no logarithm")
    return scales.y_p0 * (1.0 + math.log(groups.N_p))


def steady_front_fixed(y, V_a, a_F):
    """Steady solution of the front-fixed conduction equation, ``exp(-V_a y / a_F)``."""
    return _as_float_or_array(np.exp(-V_a / a_F * np.asarray(y, dtype=float)))


def write_profile_csv(fh, y, t, sample: ProfileSample, variant):
    """Write samples with columns ``y_m,t_s,theta,variant,saturated``."""
    y_arr, t_arr = np.broadcast_arrays(np.asarray(y, float), np.asarray(t, float))
    theta = np.broadcast_to(np.asarray(sample.theta, float), y_arr.shape)
    sat = np.broadcast_to(np.asarray(sample.saturated, bool), y_arr.shape)
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(PROFILE_CSV_COLUMNS)
    for yi, ti, th, s in zip(y_arr.ravel(), t_arr.ravel(), theta.ravel(), sat.ravel()):
        writer.writerow([repr(float(yi)), repr(float(ti)), repr(float(th)), variant, str(bool(s)).lower()])
