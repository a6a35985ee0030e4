"""Finite-difference reference solver for the front-fixed fuel-layer heat equation.

Solves, in the frame attached to the regressing surface (``y`` = depth below
the surface),

    d(theta)/dt = a_F d2(theta)/dy2 + V_a d(theta)/dy + S(y)

i.e. the liquid is carried towards the surface at speed ``V_a``. The source
``S = mu F exp(-mu y) / (rho_F C_pF (T_s - T_inf))`` models in-depth
absorption of the flame radiation.

The grid is vertex centred with half control volumes at both ends, so that
the stored energy ``sum(m_i theta_i)`` changes exactly by the boundary and
source terms; :attr:`FDSolution.energy_audit` records the per-step residual.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .corephys import Scenario, regression_velocity
from .errors import DomainError, Instability, InvalidInput, MissingInput, NonConvergence

SCHEMES = ("explicit", "implicit_theta")
BC_MODES = ("flux_linear", "flux_stefan", "dirichlet_Ts")
BOTTOMS = ("far_field", "adiabatic")
ADVECTION = ("hybrid", "upwind", "central")

# e-folding lengths of the far-field truncation (e^-10 ~ 5e-5 of the surface value)
FAR_FIELD_LENGTHS = 10.0

SOLVER_TOL = 1e-10
SOLVER_MAX_ITER = 100


@dataclass(frozen=True)
class FDConfig:
    """Discretisation and model switches.

    ``velocity`` overrides the scenario's regression velocity as the
    advection speed (0 switches advection off, a negative value reverses
    it); the probe still follows the scenario's regression.
    """

    t_end: float
    n_cells: int = 256
    domain_depth: Optional[float] = None
    dt_safety: float = 0.4
    dt: Optional[float] = None
    scheme: str = "implicit_theta"
    theta: float = 1.0
    bc_mode: str = "dirichlet_Ts"
    source_on: bool = False
    bottom: str = "far_field"
    advection: str = "hybrid"
    velocity: Optional[float] = None
    n_saves: int = 100

    def __post_init__(self):
        if self.n_cells < 16:
            raise InvalidInput("n_cells must be at least 16")
        if not self.t_end > 0:
            raise InvalidInput("t_end must be positive")
        if not 0 < self.dt_safety <= 1:
            raise InvalidInput("dt_safety must lie in (0, 1]")
        if self.scheme not in SCHEMES:
            raise InvalidInput(f"scheme must be one of {SCHEMES}")
        if self.scheme == "implicit_theta" and not 0.5 <= self.theta <= 1:
            raise InvalidInput("implicit theta weight must lie in [0.5, 1]")
        if self.bc_mode not in BC_MODES:
            raise InvalidInput(f"bc_mode must be one of {BC_MODES}")
        if self.bottom not in BOTTOMS:
            raise InvalidInput(f"bottom must be one of {BOTTOMS}")
        if self.advection not in ADVECTION:
            raise InvalidInput(f"advection must be one of {ADVECTION}")
        if self.dt is not None and not self.dt > 0:
            raise InvalidInput("dt must be positive")
        if self.domain_depth is not None and not self.domain_depth > 0:
            raise InvalidInput("domain_depth must be positive")

    @property
    def weight(self):
        return 0.0 if self.scheme == "explicit" else self.theta


@dataclass(frozen=True)
class FDSolution:
    times: np.ndarray
    grid: np.ndarray
    theta: np.ndarray
    step_times: np.ndarray
    probe_depth: np.ndarray
    probe_theta: np.ndarray
    energy_audit: np.ndarray
    config: FDConfig
    velocity: float
    warnings: tuple = ()
    meta: dict = field(default_factory=dict, compare=False)

    def interface_theta(self, t):
        """Temperature at the fuel/water interface ``y0 - V_a t`` (linear in time)."""
        return np.interp(t, self.step_times, self.probe_theta)

    @property
    def surface_theta(self):
        return self.theta[:, 0]


def default_depth(scenario: Scenario, config: FDConfig, V):
    if config.domain_depth is not None:
        return config.domain_depth
    if config.bottom == "adiabatic":
        return scenario.y0
    if V > 0:
        return max(scenario.y0, FAR_FIELD_LENGTHS * scenario.fuel.a_F / V)
    # no advective length: use the diffusion length reached by t_end
    return max(scenario.y0, FAR_FIELD_LENGTHS * math.sqrt(scenario.fuel.a_F * config.t_end))


def _face_coefficients(n, dy, a, w, advection):
    """Flux through each interior face as ``cL*theta_i + cR*theta_{i+1}``."""
    cL = np.full(n, a / dy)
    cR = np.full(n, -a / dy)
    peclet = abs(w) * dy / a if a > 0 else math.inf
    central = advection == "central" or (advection == "hybrid" and peclet <= 2.0)
    if central:
        cL += 0.5 * w
        cR += 0.5 * w
    elif w > 0:
        cL += w
    else:
        cR += w
    return cL, cR, peclet


def _surface_flux(scenario: Scenario, config: FDConfig, V):
    """Diffusive flux into the liquid at the surface, in theta*m/s."""
    fuel = scenario.fuel
    F = scenario.require_flux()
    fuel.require("rho_F", "C_pF", "T_s")
    q = F
    if config.bc_mode == "flux_stefan":
        fuel.require("H_v")
        q = F - fuel.rho_F * fuel.H_v * V
    return q / (fuel.rho_F * fuel.C_pF * scenario.delta_T)


def _source(scenario: Scenario, y):
    fuel = scenario.fuel
    F = scenario.require_flux()
    fuel.require("mu", "rho_F", "C_pF", "T_s")
    return fuel.mu * F / (fuel.rho_F * fuel.C_pF * scenario.delta_T) * np.exp(-fuel.mu * y)


def fd_solve(scenario: Scenario, config: FDConfig) -> FDSolution:
    """Integrate the front-fixed heat equation from a uniform ``theta = 0`` start.

    Raises
    ------
    Instability
        Explicit step larger than ``dt_safety * dy**2 / (2 a_F)`` or the
        advective limit.
    NonConvergence
        Linear solve residual above 1e-10 after 100 refinement sweeps.
    """
    a = scenario.fuel.a_F
    V_probe = regression_velocity(scenario)
    V = V_probe if config.velocity is None else config.velocity
    w = -V
    L = default_depth(scenario, config, V)
    n = config.n_cells
    dy = L / n
    y = np.linspace(0.0, L, n + 1)
    m = np.full(n + 1, dy)
    m[0] = m[-1] = 0.5 * dy

    cL, cR, peclet = _face_coefficients(n, dy, a, w, config.advection)
    warnings = []
    if peclet > 2.0 and config.advection != "central":
        warnings.append(f"cell Peclet {peclet:.3g} > 2: first-order upwind advection")

    # R(theta) = A theta + b, per unit control-volume (A and b scaled below)
    main = np.zeros(n + 1)
    lower = np.zeros(n)   # A[i+1, i]
    upper = np.zeros(n)   # A[i, i+1]
    main[:-1] -= cL
    upper -= cR
    lower += cL
    main[1:] += cR
    b = np.zeros(n + 1)
    dirichlet_top = config.bc_mode == "dirichlet_Ts"
    dirichlet_bottom = config.bottom == "far_field"
    g0 = 0.0
    if not dirichlet_top:
        g0 = _surface_flux(scenario, config, V)
        main[0] += w
        b[0] += g0
    if config.source_on:
        src = _source(scenario, y)
        b += m * src
    else:
        src = np.zeros(n + 1)

    A = sp.diags([lower / m[1:], main / m, upper / m[:-1]], [-1, 0, 1], format="csr")
    bh = b / m

    theta0 = np.zeros(n + 1)
    if dirichlet_top:
        theta0[0] = 1.0
    fixed = np.zeros(n + 1, dtype=bool)
    fixed[0] = dirichlet_top
    fixed[-1] = dirichlet_bottom
    fixed_values = theta0.copy()

    weight = config.weight
    dt_diff = config.dt_safety * dy**2 / (2.0 * a)
    dt_adv = dy / abs(w) if w != 0 else math.inf
    if config.scheme == "explicit":
        dt_limit = min(dt_diff, config.dt_safety * dt_adv)
        if config.dt is not None and config.dt > dt_limit * (1 + 1e-12):
            raise Instability(
                f"explicit dt={config.dt:.3g} s exceeds stability bound {dt_limit:.3g} s"
            )
        dt_req = config.dt or dt_limit
    else:
        dt_req = config.dt or config.t_end / 2000.0
    n_steps = max(1, math.ceil(config.t_end / dt_req - 1e-9))
    dt = config.t_end / n_steps

    eye = sp.identity(n + 1, format="csr")
    lhs = (eye / dt - weight * A).tolil()
    rhs_op = (eye / dt + (1.0 - weight) * A).tocsr()
    for i in np.flatnonzero(fixed):
        lhs.rows[i] = [i]
        lhs.data[i] = [1.0]
    lhs = lhs.tocsc()
    lu = spla.splu(lhs) if weight > 0 else None

    free = ~fixed
    i0 = int(np.argmax(free))
    i1 = n - int(np.argmax(free[::-1]))

    def boundary_in(th):
        if i0 == 0:
            return g0 + w * th[0]
        k = i0 - 1
        return cL[k] * th[k] + cR[k] * th[k + 1]

    def boundary_out(th):
        if i1 == n:
            return 0.0
        return cL[i1] * th[i1] + cR[i1] * th[i1 + 1]

    src_total = float(np.sum(m[free] * src[free]))

    save_every = max(1, n_steps // max(1, config.n_saves))
    saves_t = [0.0]
    saves = [theta0.copy()]
    step_t = np.empty(n_steps + 1)
    probe_y = np.empty(n_steps + 1)
    probe = np.empty(n_steps + 1)
    audit = np.zeros(n_steps + 1)

    def probe_at(th, t):
        yf = scenario.y0 - V_probe * t
        if yf < 0 or yf > L:
            return yf, math.nan
        return yf, float(np.interp(yf, y, th))

    step_t[0] = 0.0
    probe_y[0], probe[0] = probe_at(theta0, 0.0)
    th = theta0
    for k in range(1, n_steps + 1):
        rhs = rhs_op @ th + bh
        rhs[fixed] = fixed_values[fixed]
        if lu is None:
            new = rhs * dt
            new[fixed] = fixed_values[fixed]
        else:
            new = _solve(lu, lhs, rhs)
        e_old = float(np.sum(m[free] * th[free]))
        e_new = float(np.sum(m[free] * new[free]))
        flux_old = boundary_in(th) - boundary_out(th)
        flux_new = boundary_in(new) - boundary_out(new)
        expected = dt * (weight * flux_new + (1.0 - weight) * flux_old + src_total)
        scale = max(abs(e_new - e_old), abs(expected), 1e-300)
        audit[k] = abs((e_new - e_old) - expected) / scale
        th = new
        if not np.all(np.isfinite(th)):
            raise Instability(f"non-finite temperature at step {k}")
        t = k * dt
        step_t[k] = t
        probe_y[k], probe[k] = probe_at(th, t)
        if k % save_every == 0 or k == n_steps:
            saves_t.append(t)
            saves.append(th.copy())

    return FDSolution(
        times=np.array(saves_t), grid=y, theta=np.array(saves), step_times=step_t,
        probe_depth=probe_y, probe_theta=probe, energy_audit=audit, config=config,
        velocity=V, warnings=tuple(warnings),
        meta={"dt": dt, "n_steps": n_steps, "dy": dy, "peclet": peclet,
              "surface_flux_theta_units": g0},
    )


def _solve(lu, lhs, rhs):
    x = lu.solve(rhs)
    norm = max(np.max(np.abs(rhs)), 1e-300)
    for _ in range(SOLVER_MAX_ITER):
        r = rhs - lhs @ x
        if np.max(np.abs(r)) <= SOLVER_TOL * norm:
            return x
        x = x + lu.solve(r)
    raise NonConvergence(f"linear solve residual above {SOLVER_TOL} after {SOLVER_MAX_ITER} sweeps")


@dataclass(frozen=True)
class ProbeResult:
    t_star: Optional[float]
    warnings: tuple = ()


def fd_probe_boilover(solution: FDSolution, scenario: Scenario, theta_B0=None) -> ProbeResult:
    """First time the interface temperature reaches ``theta_B0``.

    Linear interpolation between steps. ``None`` with a warning when the
    threshold is not reached before ``t_end`` or before the layer burns
    through at ``tau0 = y0 / V_a``.
    """
    threshold = scenario.theta_B0 if theta_B0 is None else theta_B0
    if threshold is None:
        raise MissingInput("theta_B0 not supplied")
    t = solution.step_times
    p = solution.probe_theta
    valid = np.isfinite(p)
    hit = np.flatnonzero(valid & (p >= threshold))
    tau0 = scenario.y0 / regression_velocity(scenario)
    if hit.size == 0:
        return ProbeResult(None, (f"threshold {threshold:g} not reached before t_end={t[-1]:.4g} s"
                                  " or layer burn-through",))
    k = int(hit[0])
    if k == 0:
        t_star = float(t[0])
    else:
        p0, p1 = p[k - 1], p[k]
        frac = (threshold - p0) / (p1 - p0) if p1 != p0 else 0.0
        t_star = float(t[k - 1] + frac * (t[k] - t[k - 1]))
    if t_star >= tau0:
        return ProbeResult(None, (f"threshold reached only after burn-through (tau0={tau0:.4g} s)",))
    return ProbeResult(t_star)


@dataclass(frozen=True)
class SteadyReport:
    successive_linf: float
    analytic_linf: Optional[float]
    monotone_decreasing: bool


def analytic_steady(solution: FDSolution, scenario: Scenario):
    """Closed-form steady state when one exists (no source, positive advection)."""
    cfg = solution.config
    V = solution.velocity
    if cfg.source_on or V <= 0:
        return None
    k = V / scenario.fuel.a_F
    if cfg.bc_mode == "dirichlet_Ts":
        return np.exp(-k * solution.grid)
    g0 = solution.meta["surface_flux_theta_units"]
    return g0 / V * np.exp(-k * solution.grid)


def fd_steady_check(solution: FDSolution, scenario: Optional[Scenario] = None) -> SteadyReport:
    if solution.theta.shape[0] < 2:
        raise DomainError("need at least two saved profiles")
    last, prev = solution.theta[-1], solution.theta[-2]
    successive = float(np.max(np.abs(last - prev)))
    analytic = None
    if scenario is not None:
        ref = analytic_steady(solution, scenario)
        if ref is not None:
            analytic = float(np.max(np.abs(last - ref)))
    monotone = bool(np.all(np.diff(last) <= 1e-14))
    return SteadyReport(successive, analytic, monotone)


def write_solution_csv(fh, solution: FDSolution):
    """Long-format dump with columns ``t_s,y_m,theta``."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(("t_s", "y_m", "theta"))
    for t, row in zip(solution.times, solution.theta):
        for yi, th in zip(solution.grid, row):
            writer.writerow((repr(float(t)), repr(float(yi)), repr(float(th))))


def config_echo(solution: FDSolution, scenario: Scenario):
    """JSON-serialisable record of everything needed to reproduce a run."""
    return {
        "config": asdict(solution.config),
        "scenario": {
            "fuel": asdict(scenario.fuel),
            "D": scenario.D, "y0": scenario.y0, "T_inf": scenario.T_inf,
            "V_a": scenario.V_a, "m_dot": scenario.m_dot, "F": scenario.F,
            "theta_B0": scenario.theta_B0, "y_F": scenario.y_F,
        },
        "derived": {k: float(v) for k, v in solution.meta.items()},
        "advection_velocity": solution.velocity,
        "warnings": list(solution.warnings),
    }


def write_config_json(fh, solution: FDSolution, scenario: Scenario):
    json.dump(config_echo(solution, scenario), fh, indent=2)
