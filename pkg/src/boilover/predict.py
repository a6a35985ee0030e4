"""Boilover-onset predictors and regime classification."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional

from .corephys import (
    CharacteristicScales,
    DimensionlessGroups,
    Scenario,
    characteristic_scales,
    dimensionless_groups,
    regression_velocity,
)
from .errors import BoiloverError, InvalidRegime, MissingInput

THETA_B0_GARO = 0.335
THETA_B0_KOSEKI = 0.432
RESIDUAL_FRACTION = 0.4
BAND_LOW = 0.5
BAND_HIGH = 2.5
SERIES_THRESHOLD = 0.5

THIN, THICK, TRANSITION = "thin_layer", "thick_layer", "transition"

METHODS = ("problem_A", "problem_B", "scaled_A", "conduction",
           "radiation_exact", "radiation_unit_prefactor")
REPORT_FIELDS = ("method", "t_B0_s", "Fo_e", "theta_B0", "regime", "U_T_m_per_s", "warnings")


@dataclass(frozen=True)
class PredictionResult:
    method: str
    t_B0: Optional[float] = None
    Fo_e: Optional[float] = None
    theta_B0: Optional[float] = None
    regime: Optional[str] = None
    U_T: Optional[float] = None
    warnings: tuple = ()
    extras: dict = field(default_factory=dict, compare=False)
    alternatives: tuple = ()

    def to_dict(self):
        out = {
            "method": self.method,
            "t_B0_s": self.t_B0,
            "Fo_e": self.Fo_e,
            "theta_B0": self.theta_B0,
            "regime": self.regime,
            "U_T_m_per_s": self.U_T,
            "warnings": list(self.warnings),
        }
        if self.extras:
            out["extras"] = dict(self.extras)
        if self.alternatives:
            out["alternatives"] = [alt.to_dict() for alt in self.alternatives]
        return out

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    def csv_row(self):
        d = self.to_dict()
        return [d[k] if k != "warnings" else ";".join(d[k]) for k in REPORT_FIELDS]


def _finish(method, scenario, t_B0=None, Fo_e=None, theta_B0=None, regime=None,
            warnings=(), **extras):
    """Fill the derived fields so Fo_e and U_T are always consistent with t_B0."""
    a_F, y0 = scenario.fuel.a_F, scenario.y0
    U_T = None
    if t_B0 is not None:
        Fo_e = t_B0 * a_F / y0**2
        if t_B0 > 0:
            U_T = y0 / t_B0
    return PredictionResult(method=method, t_B0=t_B0, Fo_e=Fo_e, theta_B0=theta_B0,
                            regime=regime, U_T=U_T, warnings=tuple(warnings), extras=extras)


# -- closed-form kernels -------------------------------------------------------

def onset_amplitude(theta_B0, N_p, N_DHS, delta_F):
    """``A_B0 = theta_B0 / (N_p exp(-N_DHS delta_F))``."""
    return theta_B0 / (N_p * math.exp(-N_DHS * delta_F))


def onset_prefactor(N_p, N_DHS, delta_F):
    """``B_B0 = N_p exp(-N_DHS delta_F)``."""
    return N_p * math.exp(-N_DHS * delta_F)


def fourier_from_amplitude(A_B0, N_DHS):
    return math.log(A_B0) / N_DHS**2


def interface_theta(B_B0, N_DHS, Fo_e):
    return B_B0 * math.exp(N_DHS**2 * Fo_e)


def conduction_time(tau0, N_DHS):
    """``tau0 (1 - 1/N_DHS)``, valid for ``N_DHS > 1``."""
    if not N_DHS > 1:
        raise InvalidRegime(f"conduction estimate requires N_DHS > 1, got {N_DHS:.4g}")
    return tau0 * (1.0 - 1.0 / N_DHS)


def conduction_wave_velocity(V_a, N_DHS):
    if not N_DHS > 1:
        raise InvalidRegime(f"conduction wave velocity requires N_DHS > 1, got {N_DHS:.4g}")
    return V_a * N_DHS / (N_DHS - 1.0)


def radiation_time(t0, Bu, prefactor=1.0):
    return prefactor * t0 / Bu


# -- scenario-level predictors -------------------------------------------------

def _theta(scenario, theta_B0=None):
    theta = scenario.theta_B0 if theta_B0 is None else theta_B0
    if theta is None:
        raise MissingInput("boilover-onset temperature theta_B0 not supplied")
    return theta


def predict_problem_A(scenario: Scenario, groups: Optional[DimensionlessGroups] = None):
    """Time to boilover from a known interface temperature at onset.

    ``Fo_e = ln(A_B0) / N_DHS**2``. When ``A_B0 <= 1`` the logarithm is not
    positive; the result then carries the ``nonpositive_log`` warning and no
    ``t_B0`` (``A_B0 == 1`` gives ``t_B0 = 0`` exactly).
    """
    theta = _theta(scenario)
    groups = groups or dimensionless_groups(scenario)
    groups.require("N_p")
    if not (groups.N_DHS > 0 and groups.N_p > 0):
        raise InvalidRegime("problem A needs N_DHS > 0 and N_p > 0")
    A = onset_amplitude(theta, groups.N_p, groups.N_DHS, groups.delta_F)
    warnings = []
    if A < 1:
        warnings.append("nonpositive_log")
        return _finish("problem_A", scenario, theta_B0=theta, warnings=warnings, A_B0=A)
    if A == 1:
        warnings.append("nonpositive_log")
    Fo = fourier_from_amplitude(A, groups.N_DHS)
    t = Fo * scenario.y0**2 / scenario.fuel.a_F
    return _finish("problem_A", scenario, t_B0=t, theta_B0=theta, warnings=warnings, A_B0=A)


def predict_problem_B(scenario: Scenario, groups: Optional[DimensionlessGroups], Fo_e: float):
    """Interface temperature at a given boilover Fourier number.

    The returned ``theta_B0`` may exceed 1 (flagged ``saturated``).
    """
    if not Fo_e >= 0:
        raise ValueError("Fo_e must be non-negative")
    groups = groups or dimensionless_groups(scenario)
    groups.require("N_p")
    B = onset_prefactor(groups.N_p, groups.N_DHS, groups.delta_F)
    theta = interface_theta(B, groups.N_DHS, Fo_e)
    warnings = ["saturated"] if theta > 1 else []
    t = Fo_e * scenario.y0**2 / scenario.fuel.a_F
    res = _finish("problem_B", scenario, t_B0=t, theta_B0=theta, warnings=warnings, B_B0=B)
    # keep the caller's Fo_e bit-exact rather than the t_B0 round trip
    return replace(res, Fo_e=Fo_e)


def scaled_problem_A(scenario: Scenario, groups: Optional[DimensionlessGroups] = None):
    """Scaled problem A: ``A_B0 ~ theta_B0 H_p / (N0 delta_F)``, ``ln x ~ x - 1``."""
    theta = _theta(scenario)
    groups = groups or dimensionless_groups(scenario)
    groups.require("H_p", "N0")
    return scaled_problem_A_from_groups(scenario, groups, theta)


def scaled_problem_A_from_groups(scenario, groups, theta):
    warnings = []
    if groups.N_DHS * groups.delta_F > SERIES_THRESHOLD:
        warnings.append("series_step_outside_validity")
    A = scaled_amplitude(theta, groups.H_p, groups.N0, groups.delta_F)
    Fo = scaled_fourier(A, groups.N_DHS)
    if Fo < 0:
        warnings.append("nonpositive_log")
        return _finish("scaled_A", scenario, theta_B0=theta, warnings=warnings, A_B0=A, Fo_scaled=Fo)
    t = Fo * scenario.y0**2 / scenario.fuel.a_F
    return _finish("scaled_A", scenario, t_B0=t, theta_B0=theta, warnings=warnings, A_B0=A)


def scaled_amplitude(theta_B0, H_p, N0, delta_F):
    return theta_B0 * H_p / (N0 * delta_F)


def scaled_fourier(A_B0, N_DHS):
    return (A_B0 - 1.0) / N_DHS**2


def conduction_t_B0(scenario: Scenario, groups: Optional[DimensionlessGroups] = None,
                    scales: Optional[CharacteristicScales] = None):
    """Heat-conduction estimate ``t_B0 = tau0 (1 - 1/N_DHS)``.

    Raises
    ------
    InvalidRegime
        If ``N_DHS <= 1`` (the layer is thinner than ``a_F / V_a``).
    """
    groups = groups or dimensionless_groups(scenario)
    scales = scales or characteristic_scales(scenario)
    t = conduction_time(scales.tau0, groups.N_DHS)
    res = _finish("conduction", scenario, t_B0=t, regime=THICK,
                  U_T_closed_form=conduction_wave_velocity(scales.V_a, groups.N_DHS))
    return res


def radiation_t_B0(scenario: Scenario, groups: Optional[DimensionlessGroups] = None,
                   scales: Optional[CharacteristicScales] = None, prefactor_mode="unity",
                   theta_B0=None, residual_fraction=RESIDUAL_FRACTION):
    """Radiation-dominated estimate ``t_B0 = c t0 / Bu``.

    ``prefactor_mode="unity"`` takes ``c = 1``; ``"exact_084"`` takes
    ``c = theta_B0 / residual_fraction`` (0.335 / 0.4 = 0.84 by default).
    """
    groups = groups or dimensionless_groups(scenario)
    scales = scales or characteristic_scales(scenario)
    groups.require("Bu")
    warnings = []
    if groups.N_DHS >= 1:
        warnings.append("radiation_regime_violation: N_DHS >= 1")
    if groups.N_DHS >= groups.Bu:
        warnings.append("radiation_regime_violation: N_DHS >= Bu")
    if prefactor_mode == "unity":
        method, c = "radiation_unit_prefactor", 1.0
        theta = scenario.theta_B0 if theta_B0 is None else theta_B0
    elif prefactor_mode == "exact_084":
        method = "radiation_exact"
        theta = theta_B0 if theta_B0 is not None else (scenario.theta_B0 or THETA_B0_GARO)
        c = theta / residual_fraction
    else:
        raise ValueError(f"unknown prefactor mode {prefactor_mode!r}")
    t = radiation_time(scales.t0, groups.Bu, c)
    return _finish(method, scenario, t_B0=t, theta_B0=theta, regime=THIN, warnings=warnings,
                   prefactor=c, U_T_printed_form=1.2 * groups.Bu**2 * scenario.fuel.a_F / scenario.y0)


@dataclass(frozen=True)
class RegimeReport:
    y_crit: float
    N_DHS: float
    Bu: Optional[float]
    classification: str
    transition_band: tuple


def classify_regime(scenario: Scenario, groups: Optional[DimensionlessGroups] = None,
                    band=(BAND_LOW, BAND_HIGH)) -> RegimeReport:
    """Thin/thick classification around the critical depth ``a_F / V_a``."""
    groups = groups or dimensionless_groups(scenario)
    y_crit = scenario.fuel.a_F / regression_velocity(scenario)
    lo, hi = band[0] * y_crit, band[1] * y_crit
    if scenario.y0 > hi:
        cls = THICK
    elif scenario.y0 < lo:
        cls = THIN
    else:
        cls = TRANSITION
    return RegimeReport(y_crit=y_crit, N_DHS=groups.N_DHS, Bu=groups.Bu,
                        classification=cls, transition_band=(lo, hi))


def _attempt(fn, *args, **kw):
    try:
        return fn(*args, **kw), None
    except BoiloverError as exc:
        return None, f"{fn.__name__}: {exc}"


def predict_auto(scenario: Scenario, groups: Optional[DimensionlessGroups] = None,
                 scales: Optional[CharacteristicScales] = None, prefactor_mode="unity"):
    """Dispatch on the regime.

    Thick layers get the conduction estimate, thin layers the radiation
    estimate. In the transition band both are computed; the conduction one is
    primary when ``N_DHS > 1``. Problem A is attached when ``theta_B0`` and
    the surface flux are known. Sub-errors become warnings.
    """
    groups = groups or dimensionless_groups(scenario)
    scales = scales or characteristic_scales(scenario)
    regime = classify_regime(scenario, groups)
    warnings = []
    cond = rad = None
    if regime.classification in (THICK, TRANSITION):
        cond, err = _attempt(conduction_t_B0, scenario, groups, scales)
        if err:
            warnings.append(err)
    if regime.classification in (THIN, TRANSITION):
        rad, err = _attempt(radiation_t_B0, scenario, groups, scales, prefactor_mode)
        if err:
            warnings.append(err)
    if regime.classification == TRANSITION:
        warnings.append(
            f"transition_band: y0 within [{regime.transition_band[0]:.4g}, "
            f"{regime.transition_band[1]:.4g}] m, both mechanisms contribute"
        )
    if regime.classification == THICK:
        primary, others = cond, []
    elif regime.classification == THIN:
        primary, others = rad, []
    elif groups.N_DHS > 1 and cond is not None:
        primary, others = cond, [rad]
    else:
        primary, others = rad, [cond]
    others = [o for o in others if o is not None]
    if scenario.theta_B0 is not None:
        if scenario.F is not None:
            prob_a, err = _attempt(predict_problem_A, scenario, groups)
            if err:
                warnings.append(err)
            else:
                others.append(prob_a)
        else:
            warnings.append("problem_A skipped: surface flux F not supplied")
    if primary is None:
        if not others:
            return PredictionResult(method="none", regime=regime.classification,
                                    warnings=tuple(warnings),
                                    extras={"y_crit_m": regime.y_crit})
        primary, others = others[0], others[1:]
    extras = dict(primary.extras)
    extras["y_crit_m"] = regime.y_crit
    return replace(primary, regime=regime.classification,
                   warnings=primary.warnings + tuple(warnings),
                   extras=extras, alternatives=tuple(others))


@dataclass(frozen=True)
class KosekiWave:
    U_T: float
    U_T_conduction: Optional[float]
    notes: tuple


def koseki_velocity(prediction: PredictionResult, scenario: Scenario,
                    groups: Optional[DimensionlessGroups] = None) -> KosekiWave:
    """Heat-wave velocity ``y0 / t_B0`` with the closed-form annotations."""
    if prediction.t_B0 is None or not prediction.t_B0 > 0:
        raise MissingInput("prediction carries no positive t_B0")
    groups = groups or dimensionless_groups(scenario)
    V_a = regression_velocity(scenario)
    U_T = scenario.y0 / prediction.t_B0
    U_cond = None
    notes = []
    if groups.N_DHS > 1:
        U_cond = conduction_wave_velocity(V_a, groups.N_DHS)
        notes.append(f"conduction closed form V_a N/(N-1) = {U_cond:.4g} m/s")
    if groups.Bu is not None:
        printed = 1.2 * groups.Bu**2 * scenario.fuel.a_F / scenario.y0
        notes.append(f"printed radiation form 1.2 Bu^2 a_F/y0 = {printed:.4g} m/s (annotation only)")
    notes.append("t_B0 ~ D^(1/2) at fixed fuel when the feedback flux scales as D^(1/2)")
    return KosekiWave(U_T=U_T, U_T_conduction=U_cond, notes=tuple(notes))


def write_predictions_csv(fh, results, extra_columns=()):
    """One row per prediction; ``extra_columns`` is a sequence of ``(name, values)``."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow([name for name, _ in extra_columns] + list(REPORT_FIELDS))
    for i, res in enumerate(results):
        writer.writerow([values[i] for _, values in extra_columns] + res.csv_row())
