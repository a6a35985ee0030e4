"""Fuel and scenario records, surface flux bookkeeping and dimensionless groups.

All quantities are SI; temperatures are kelvin.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, fields
from importlib import resources
from typing import Optional

from .errors import Conflict, InvalidInput, MissingInput, SchemaError

FUEL_DB_ENV = "BOILOVER_FUEL_DB"
FUEL_DB_COLUMNS = ("name", "a_F", "lambda_F", "rho_F", "C_pF", "H_v", "mu", "T_s")

DIFFUSIVITY_TOLERANCE = 0.05
VELOCITY_CONFLICT_TOLERANCE = 0.01


def _rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


@dataclass(frozen=True)
class FuelProperties:
    """Thermophysical constants of a liquid fuel.

    Any field except ``name`` may be ``None`` when unknown. ``a_F`` is derived
    from ``lambda_F / (rho_F * C_pF)`` when omitted.
    """

    name: str
    a_F: Optional[float] = None
    lambda_F: Optional[float] = None
    rho_F: Optional[float] = None
    C_pF: Optional[float] = None
    H_v: Optional[float] = None
    mu: Optional[float] = None
    T_s: Optional[float] = None

    def __post_init__(self):
        for f in fields(self):
            if f.name == "name":
                continue
            value = getattr(self, f.name)
            if value is not None and not (math.isfinite(value) and value > 0):
                raise InvalidInput(f"fuel {self.name!r}: {f.name} must be positive, got {value}")
        triplet = (self.lambda_F, self.rho_F, self.C_pF)
        if all(v is not None for v in triplet):
            derived = self.lambda_F / (self.rho_F * self.C_pF)
            if self.a_F is None:
                object.__setattr__(self, "a_F", derived)
            elif abs(self.a_F - derived) / self.a_F > DIFFUSIVITY_TOLERANCE:
                raise InvalidInput(
                    f"fuel {self.name!r}: a_F={self.a_F:.4g} disagrees with "
                    f"lambda/(rho*Cp)={derived:.4g} by more than 5%"
                )
        if self.a_F is None:
            raise InvalidInput(f"fuel {self.name!r}: thermal diffusivity unknown")

    def require(self, *names):
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise MissingInput(f"fuel {self.name!r} lacks {', '.join(missing)}")


@dataclass(frozen=True)
class FlameEnvironment:
    """Inputs of the flame heat-feedback correlation."""

    T_f: float = 1100.0
    T_inf_f: float = 293.15
    rho_inf: float = 1.2
    C_p: float = 1005.0
    K: float = 1.0
    g: float = 9.81

    def __post_init__(self):
        if not self.T_f > self.T_inf_f > 0:
            raise InvalidInput("flame environment needs T_f > T_inf_f > 0")
        if self.K < 0 or self.g <= 0:
            raise InvalidInput("flame environment needs K >= 0 and g > 0")


@dataclass(frozen=True)
class Scenario:
    """One burn configuration.

    Exactly one of ``V_a`` and ``m_dot`` is normally given; when both are
    present they must agree (checked by :func:`regression_velocity`).
    """

    fuel: FuelProperties
    D: float
    y0: float
    T_inf: float = 293.0
    V_a: Optional[float] = None
    m_dot: Optional[float] = None
    F: Optional[float] = None
    theta_B0: Optional[float] = None
    y_F: Optional[float] = None

    def __post_init__(self):
        if not self.D > 0 or not self.y0 > 0:
            raise InvalidInput("scenario needs D > 0 and y0 > 0")
        if self.y_F is not None and not 0 < self.y_F <= self.y0:
            raise InvalidInput(f"residual depth y_F={self.y_F} outside (0, y0]")
        if self.fuel.T_s is not None and not self.fuel.T_s > self.T_inf:
            raise InvalidInput(f"T_s={self.fuel.T_s} K must exceed T_inf={self.T_inf} K")
        if self.F is not None and not self.F > 0:
            raise InvalidInput(f"surface flux must be positive, got {self.F}")
        if self.theta_B0 is not None and not 0 < self.theta_B0 < 1:
            raise InvalidInput(f"theta_B0 must lie in (0, 1), got {self.theta_B0}")
        for name in ("V_a", "m_dot"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise InvalidInput(f"{name} must be positive, got {value}")

    @property
    def depth(self):
        """Residual fuel depth at evaluation (defaults to ``y0``)."""
        return self.y0 if self.y_F is None else self.y_F

    @property
    def delta_T(self):
        self.fuel.require("T_s")
        return self.fuel.T_s - self.T_inf

    def require_flux(self):
        if self.F is None:
            raise MissingInput("surface heat flux F not supplied")
        return self.F


@dataclass(frozen=True)
class FluxBalance:
    F: float
    q_vap: float
    phi: float
    q_c: float
    warning: bool

    @property
    def B_F(self):
        """Exact ``1 - F/phi``; NaN when phi vanishes."""
        return 1.0 - self.F / self.phi if self.phi != 0 else math.nan


@dataclass(frozen=True)
class DimensionlessGroups:
    """All dimensionless numbers of a scenario.

    Groups needing an input that was not supplied (flux, absorption
    coefficient, latent heat) are ``None``.
    """

    N_DHS: float
    a_F: float
    y0: float
    delta_F: float = 1.0
    Ste: Optional[float] = None
    Bu: Optional[float] = None
    N0: Optional[float] = None
    H_p: Optional[float] = None
    B_F: Optional[float] = None
    N_p: Optional[float] = None

    @property
    def B_SA(self):
        return self.N0

    @property
    def B_F_approx(self):
        """The ``1 - 1/H_p`` approximation; differs from the exact ``B_F``."""
        return None if self.H_p is None else 1.0 - 1.0 / self.H_p

    def Fo_of(self, t):
        return t * self.a_F / self.y0**2

    def require(self, *names):
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise MissingInput(f"dimensionless group(s) unavailable: {', '.join(missing)}")


@dataclass(frozen=True)
class CharacteristicScales:
    t0: float
    tau0: float
    t0_h: float
    U0: float
    y_p0: float
    L0: Optional[float] = None

    @property
    def y0(self):
        return self.t0 * self.U0

    @property
    def V_a(self):
        return self.y0 / self.tau0

    @property
    def a_F(self):
        return self.U0**2 * self.t0

    @property
    def tau_rad(self):
        """Radiation time scale ``L0**2 / a_F``."""
        return None if self.L0 is None else self.L0**2 / self.a_F


def regression_velocity(scenario: Scenario) -> float:
    """Surface regression velocity, ``m_dot / rho_F`` when derived."""
    V_a, m_dot = scenario.V_a, scenario.m_dot
    if m_dot is None:
        if V_a is None:
            raise MissingInput("neither regression velocity V_a nor burning rate m_dot supplied")
        return V_a
    scenario.fuel.require("rho_F")
    derived = m_dot / scenario.fuel.rho_F
    if V_a is not None:
        if _rel(V_a, derived) > VELOCITY_CONFLICT_TOLERANCE:
            raise Conflict(f"V_a={V_a:.4g} m/s disagrees with m_dot/rho_F={derived:.4g} m/s")
        return V_a
    return derived


def chi_fraction(K, D):
    """Radiative feedback fraction ``[(1 - exp(-K D)) / sqrt(D)]**0.61``."""
    return (-math.expm1(-K * D) / math.sqrt(D)) ** 0.61


def flame_feedback(env: FlameEnvironment, D: float, strict: bool = False) -> float:
    """Net flame heat feedback to the pool surface (W/m^2).

    With ``strict=False`` the buoyant velocity scale ``sqrt(g * T_inf_f)``
    multiplies the excess temperature. ``strict=True`` evaluates the printed
    correlation ``sqrt(T_inf_f * (T_f - T_inf_f))`` instead, which is not
    dimensionally a heat flux and is kept for reproduction only.
    """
    if not D > 0:
        raise InvalidInput(f"pool diameter must be positive, got {D}")
    chi = chi_fraction(env.K, D)
    excess = env.T_f - env.T_inf_f
    if strict:
        core = math.sqrt(env.T_inf_f * excess)
    else:
        core = math.sqrt(env.g * env.T_inf_f) * excess
    return 4.0 * chi / math.pi * env.rho_inf * env.C_p * core * math.sqrt(D)


def flux_balance(scenario: Scenario) -> FluxBalance:
    F = scenario.require_flux()
    scenario.fuel.require("rho_F", "H_v")
    q_vap = scenario.fuel.rho_F * scenario.fuel.H_v * regression_velocity(scenario)
    phi = F - q_vap
    return FluxBalance(F=F, q_vap=q_vap, phi=phi, q_c=phi, warning=phi <= 0)


def dimensionless_groups(scenario: Scenario) -> DimensionlessGroups:
    fuel = scenario.fuel
    V_a = regression_velocity(scenario)
    y0 = scenario.y0
    n_dhs = y0 * V_a / fuel.a_F
    ste = bu = n0 = h_p = b_f = n_p = None
    if fuel.T_s is not None and fuel.C_pF is not None and fuel.H_v is not None:
        ste = fuel.C_pF * (fuel.T_s - scenario.T_inf) / fuel.H_v
    if fuel.mu is not None:
        bu = fuel.mu * y0
    if scenario.F is not None and fuel.lambda_F is not None and fuel.T_s is not None:
        n0 = scenario.F * y0 / (fuel.lambda_F * scenario.delta_T)
        n_p = n0 / n_dhs
    if scenario.F is not None and fuel.rho_F is not None and fuel.H_v is not None:
        balance = flux_balance(scenario)
        h_p = scenario.F / balance.q_vap
        b_f = balance.B_F
    groups = DimensionlessGroups(
        N_DHS=n_dhs, a_F=fuel.a_F, y0=y0, delta_F=scenario.depth / y0,
        Ste=ste, Bu=bu, N0=n0, H_p=h_p, B_F=b_f, N_p=n_p,
    )
    _check_identities(groups)
    return groups


def _check_identities(g: DimensionlessGroups):
    # H_p = B_SA*Ste/N_DHS is exact only when a_F == lambda/(rho*Cp); a fuel
    # admitted inside the 5% diffusivity window carries that mismatch, so it
    # is not asserted here.
    if g.H_p is not None and g.B_F is not None and g.H_p != 1 and math.isfinite(g.B_F):
        if _rel(g.B_F, 1.0 / (1.0 - g.H_p)) > 1e-9:
            raise RuntimeError("B_F identity violated")


def characteristic_scales(scenario: Scenario) -> CharacteristicScales:
    a_F = scenario.fuel.a_F
    V_a = regression_velocity(scenario)
    y0 = scenario.y0
    h = scenario.depth
    L0 = None
    if scenario.F is not None and scenario.fuel.lambda_F is not None and scenario.fuel.T_s is not None:
        L0 = scenario.fuel.lambda_F * scenario.delta_T / scenario.F
    return CharacteristicScales(
        t0=y0**2 / a_F,
        tau0=y0 / V_a,
        t0_h=h**2 / a_F,
        U0=a_F / y0,
        y_p0=a_F / V_a,
        L0=L0,
    )


def _parse_cell(value, column, line):
    value = value.strip()
    if value == "":
        return None
    try:
        return float(value)
    except ValueError:
        raise SchemaError(f"column {column!r}: not a number: {value!r}", line) from None


def load_fuel_db(path=None) -> dict:
    """Read a fuel database CSV into ``{name: FuelProperties}``.

    The header must be exactly ``name,a_F,lambda_F,rho_F,C_pF,H_v,mu,T_s``
    (any order). Empty cells mean "unknown". Without ``path`` the
    ``BOILOVER_FUEL_DB`` environment variable, then the bundled table, is used.
    """
    if path is None:
        path = os.environ.get(FUEL_DB_ENV)
    if path is None:
        text = resources.files("boilover").joinpath("data/fuels.csv").read_text()
    else:
        with open(path, newline="") as fh:
            text = fh.read()
    reader = csv.reader(text.splitlines())
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        return {}
    unknown = set(header) - set(FUEL_DB_COLUMNS)
    if unknown:
        raise SchemaError(f"unknown column(s) {sorted(unknown)}", 1)
    missing = set(FUEL_DB_COLUMNS) - set(header)
    if missing:
        raise SchemaError(f"missing column(s) {sorted(missing)}", 1)
    fuels = {}
    for line, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise SchemaError(f"expected {len(header)} cells, got {len(row)}", line)
        cells = dict(zip(header, row))
        name = cells.pop("name").strip()
        if not name:
            raise SchemaError("empty fuel name", line)
        values = {k: _parse_cell(v, k, line) for k, v in cells.items()}
        try:
            fuels[name] = FuelProperties(name=name, **values)
        except InvalidInput as exc:
            raise SchemaError(str(exc), line) from None
    return fuels


def get_fuel(name, path=None) -> FuelProperties:
    db = load_fuel_db(path)
    key = name.replace("-", "_").replace(" ", "_").lower()
    if key not in db:
        raise MissingInput(f"fuel {name!r} not in database (known: {', '.join(sorted(db))})")
    return db[key]
