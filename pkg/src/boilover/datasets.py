"""Experiment tables: loading, consistency checks and predictor comparison reports."""

from __future__ import annotations

import csv
import json
import math
import statistics
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Optional

from . import predict
from .corephys import (
    CharacteristicScales,
    FuelProperties,
    Scenario,
    characteristic_scales,
    dimensionless_groups,
    load_fuel_db,
)
from .errors import BoiloverError, SchemaError, UnitError

BUNDLED = ("garo_heating_oil.csv", "arai_thin_layer.csv", "koseki_crude_oil.csv")

# column base name -> (record field, unit table or None)
_LENGTH = {"m": 1.0, "cm": 1e-2, "mm": 1e-3}
_TIME = {"s": 1.0, "min": 60.0, "h": 3600.0}
_SPEED = {"m_per_s": 1.0, "cm_per_s": 1e-2, "mm_per_s": 1e-3}
_TEMP = {"K": 1.0}
UNIT_COLUMNS = {
    "D": ("D", _LENGTH),
    "y0": ("y0", _LENGTH),
    "tB0": ("t_B0_exp", _TIME),
    "UT": ("U_T_exp", _SPEED),
    "Va": ("V_a", _SPEED),
    "T_inf": ("T_inf", _TEMP),
}
PLAIN_COLUMNS = {"Fo_e": "Fo_e_exp", "N_DHS": "N_DHS", "Bu": "Bu", "Ste": "Ste"}
TEXT_COLUMNS = {"source": "source", "fuel": "fuel_name", "legibility": "legibility", "notes": "notes"}
REQUIRED = ("source", "fuel", "D", "y0")

WRITE_HEADER = ("source", "fuel", "D_m", "y0_m", "tB0_s", "UT_m_per_s", "Fo_e", "Va_m_per_s",
                "N_DHS", "Bu", "Ste", "T_inf_K", "legibility", "notes")

CONSISTENCY_TOLERANCE = 0.10
AGREEMENT_BAND = (0.7, 1.2)
STRONG_BAND = (0.9, 1.1)


@dataclass(frozen=True)
class ExperimentRecord:
    source: str
    fuel_name: str
    D: float
    y0: float
    t_B0_exp: Optional[float] = None
    U_T_exp: Optional[float] = None
    Fo_e_exp: Optional[float] = None
    V_a: Optional[float] = None
    N_DHS: Optional[float] = None
    Bu: Optional[float] = None
    Ste: Optional[float] = None
    T_inf: Optional[float] = None
    legibility: str = "high"
    notes: str = ""
    V_a_inferred: bool = False
    flags: tuple = ()

    @property
    def low_fields(self):
        """Fields marked unreliable; ``{"*"}`` for a wholly unreliable row."""
        if self.legibility == "low":
            return {"*"}
        if self.legibility.startswith("low:"):
            return set(self.legibility[4:].split(";"))
        return set()

    def is_reliable(self, name=None):
        low = self.low_fields
        return "*" not in low and (name is None or name not in low)


def _parse_header(header, line=1):
    columns = []
    for raw in header:
        name = raw.strip()
        if name in TEXT_COLUMNS:
            columns.append((name, TEXT_COLUMNS[name], None))
            continue
        if name in PLAIN_COLUMNS:
            columns.append((name, PLAIN_COLUMNS[name], None))
            continue
        for base, (attr, units) in UNIT_COLUMNS.items():
            if name.startswith(base + "_"):
                unit = name[len(base) + 1:]
                if unit not in units:
                    raise UnitError(f"column {name!r}: undeclared unit {unit!r}", line)
                columns.append((base, attr, units[unit]))
                break
        else:
            raise SchemaError(f"unknown column {name!r}", line)
    bases = [c[0] for c in columns]
    dup = {b for b in bases if bases.count(b) > 1}
    if dup:
        raise SchemaError(f"duplicate column(s) {sorted(dup)}", line)
    missing = [r for r in REQUIRED if r not in bases]
    if missing:
        raise SchemaError(f"missing column(s) {missing}", line)
    return columns


def _number(text, column, line):
    try:
        value = float(text)
    except ValueError:
        raise SchemaError(f"column {column!r}: not a number: {text!r}", line) from None
    if not math.isfinite(value):
        raise SchemaError(f"column {column!r}: non-finite value", line)
    return value


def parse_experiments(text, fuels=None):
    """Parse dataset CSV text. See :func:`load_experiments`."""
    reader = csv.reader(text.splitlines())
    try:
        header = next(reader)
    except StopIteration:
        return []
    columns = _parse_header(header)
    fuels = load_fuel_db() if fuels is None else fuels
    records = []
    for line, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(columns):
            raise SchemaError(f"expected {len(columns)} cells, got {len(row)}", line)
        values = {}
        for (base, attr, scale), cell in zip(columns, row):
            cell = cell.strip()
            if cell == "":
                continue
            if base in TEXT_COLUMNS:
                values[attr] = cell
            else:
                values[attr] = _number(cell, base, line) * (1.0 if scale is None else scale)
        for name in ("source", "fuel_name", "D", "y0"):
            if name not in values:
                raise SchemaError(f"empty required field {name!r}", line)
        for name in ("D", "y0", "t_B0_exp"):
            if name in values and not values[name] > 0:
                raise SchemaError(f"{name} must be positive", line)
        leg = values.get("legibility", "high")
        if leg not in ("high", "low") and not leg.startswith("low:"):
            raise SchemaError(f"legibility must be high, low or low:<fields>, got {leg!r}", line)
        records.append(_checked(ExperimentRecord(**values), fuels.get(values["fuel_name"])))
    return records


def _checked(rec: ExperimentRecord, fuel: Optional[FuelProperties]):
    """Back-solve a missing velocity and attach consistency flags."""
    flags = []
    if fuel is None:
        flags.append(f"fuel {rec.fuel_name!r} not in database; derived checks skipped")
        return replace(rec, flags=tuple(flags))
    if rec.V_a is None and rec.N_DHS is not None:
        rec = replace(rec, V_a=rec.N_DHS * fuel.a_F / rec.y0, V_a_inferred=True)
        flags.append("V_a back-solved from N_DHS")
    elif rec.V_a is not None and rec.N_DHS is not None:
        n = rec.y0 * rec.V_a / fuel.a_F
        if abs(n - rec.N_DHS) / rec.N_DHS > CONSISTENCY_TOLERANCE:
            flags.append(f"inconsistent: N_DHS={rec.N_DHS:g} but y0*V_a/a_F={n:.4g}")
    if rec.t_B0_exp is not None and rec.U_T_exp is not None:
        u = rec.y0 / rec.t_B0_exp
        if abs(u - rec.U_T_exp) / rec.U_T_exp > CONSISTENCY_TOLERANCE:
            flags.append(f"inconsistent: U_T={rec.U_T_exp:.4g} but y0/t_B0={u:.4g}")
    if rec.t_B0_exp is not None and rec.Fo_e_exp is not None:
        fo = rec.t_B0_exp * fuel.a_F / rec.y0**2
        if abs(fo - rec.Fo_e_exp) / rec.Fo_e_exp > CONSISTENCY_TOLERANCE:
            flags.append(f"inconsistent: Fo_e={rec.Fo_e_exp:g} but t_B0*a_F/y0^2={fo:.4g}")
    return replace(rec, flags=tuple(flags))


def load_experiments(path, fuels=None):
    """Read an experiment CSV.

    Column names carry their unit (``y0_mm``, ``Va_mm_per_s``, ``tB0_s``...);
    values are converted to SI. Optional columns ``T_inf_K``, ``legibility``
    and ``notes`` are accepted. An empty file yields an empty list.

    Raises
    ------
    SchemaError
        Malformed header or row; the message carries the line number.
    UnitError
        A column declares a unit that is not supported.
    """
    with open(path, newline="") as fh:
        return parse_experiments(fh.read(), fuels)


def load_bundled(name=None, fuels=None):
    """Records from one bundled table, or from all of them when ``name`` is None."""
    names = BUNDLED if name is None else (name if name.endswith(".csv") else name + ".csv",)
    out = []
    for n in names:
        text = resources.files("boilover").joinpath("data", n).read_text()
        out.extend(parse_experiments(text, fuels))
    return out


def _cell(value):
    return "" if value is None else repr(float(value))


def write_experiments(fh, records):
    """Write records in SI columns so that reloading is bit-exact.

    A back-solved velocity is not written; it is derived again on load.
    """
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(WRITE_HEADER)
    for r in records:
        writer.writerow((
            r.source, r.fuel_name, _cell(r.D), _cell(r.y0), _cell(r.t_B0_exp), _cell(r.U_T_exp),
            _cell(r.Fo_e_exp), "" if r.V_a_inferred else _cell(r.V_a), _cell(r.N_DHS),
            _cell(r.Bu), _cell(r.Ste), _cell(r.T_inf), r.legibility, r.notes,
        ))


# -- comparison ---------------------------------------------------------------

COMPARE_METHODS = ("conduction", "radiation_unit_prefactor", "radiation_exact", "problem_A", "auto")


@dataclass(frozen=True)
class ComparisonRow:
    record: ExperimentRecord
    predictions: dict
    ratios: dict
    regime: Optional[str]
    notes: tuple = ()


@dataclass(frozen=True)
class MethodSummary:
    method: str
    n: int
    median_ratio: Optional[float]
    ratio_min: Optional[float]
    ratio_max: Optional[float]
    n_within_agreement: int
    n_within_strong: int


@dataclass(frozen=True)
class ComparisonReport:
    rows: tuple
    summary: dict = field(default_factory=dict)
    excluded: int = 0


def record_scenario(rec: ExperimentRecord, fuel: FuelProperties, F=None, theta_B0=None):
    T_inf = rec.T_inf if rec.T_inf is not None else 293.0
    return Scenario(fuel=fuel, D=rec.D, y0=rec.y0, T_inf=T_inf, V_a=rec.V_a, F=F, theta_B0=theta_B0)


def record_groups(rec: ExperimentRecord, scenario: Scenario, mode="table"):
    """Dimensionless groups and scales, with printed values substituted in ``table`` mode."""
    groups = dimensionless_groups(scenario)
    scales = characteristic_scales(scenario)
    if mode == "table":
        subs = {k: getattr(rec, k) for k in ("N_DHS", "Bu", "Ste") if getattr(rec, k) is not None}
        groups = replace(groups, **subs)
    elif mode != "computed":
        raise ValueError(f"groups mode must be 'table' or 'computed', got {mode!r}")
    return groups, scales


def _predict(method, scenario, groups, scales: CharacteristicScales):
    if method == "conduction":
        return predict.conduction_t_B0(scenario, groups, scales)
    if method == "radiation_unit_prefactor":
        return predict.radiation_t_B0(scenario, groups, scales, "unity")
    if method == "radiation_exact":
        return predict.radiation_t_B0(scenario, groups, scales, "exact_084")
    if method == "problem_A":
        return predict.predict_problem_A(scenario, groups)
    if method == "auto":
        return predict.predict_auto(scenario, groups, scales)
    raise ValueError(f"unknown method {method!r}")


def compare_report(records, methods=COMPARE_METHODS, groups="table", fuels=None,
                   F=None, theta_B0=None) -> ComparisonReport:
    """Predict every record with every method and compare with experiment.

    Ratios are experimental / predicted. Rows marked wholly unreliable are
    reported but left out of the per-method summary.
    """
    fuels = load_fuel_db() if fuels is None else fuels
    rows = []
    for rec in records:
        notes = list(rec.flags)
        preds, ratios, regime = {}, {}, None
        fuel = fuels.get(rec.fuel_name)
        if fuel is None:
            rows.append(ComparisonRow(rec, preds, ratios, None, tuple(notes)))
            continue
        try:
            scenario = record_scenario(rec, fuel, F, theta_B0)
            g, s = record_groups(rec, scenario, groups)
            regime = predict.classify_regime(scenario, g).classification
        except BoiloverError as exc:
            notes.append(f"scenario: {exc}")
            rows.append(ComparisonRow(rec, preds, ratios, None, tuple(notes)))
            continue
        if groups == "table" and not rec.is_reliable("N_DHS") and rec.N_DHS is not None:
            notes.append("uses printed N_DHS flagged as unreliable")
        for method in methods:
            try:
                res = _predict(method, scenario, g, s)
            except BoiloverError as exc:
                notes.append(f"{method}: {exc}")
                continue
            notes.extend(f"{method}: {w}" for w in res.warnings)
            if res.t_B0 is None:
                continue
            preds[method] = res.t_B0
            if rec.t_B0_exp is not None and rec.t_B0_exp > 0 and res.t_B0 > 0:
                ratios[method] = rec.t_B0_exp / res.t_B0
        rows.append(ComparisonRow(rec, preds, ratios, regime, tuple(notes)))
    return ComparisonReport(rows=tuple(rows), summary=summarize(rows, methods),
                            excluded=sum(not r.record.is_reliable() for r in rows))


def _count(values, band):
    return sum(band[0] <= v <= band[1] for v in values)


def summarize(rows, methods):
    out = {}
    for m in methods:
        vals = [r.ratios[m] for r in rows if m in r.ratios and r.record.is_reliable()]
        out[m] = MethodSummary(
            method=m, n=len(vals),
            median_ratio=statistics.median(vals) if vals else None,
            ratio_min=min(vals) if vals else None,
            ratio_max=max(vals) if vals else None,
            n_within_agreement=_count(vals, AGREEMENT_BAND),
            n_within_strong=_count(vals, STRONG_BAND),
        )
    return out


REPORT_CSV_FIELDS = ("source", "fuel", "D_m", "y0_m", "tB0_exp_s", "regime", "method",
                     "tB0_pred_s", "ratio", "legibility", "notes")


def report_rows(report: ComparisonReport):
    """Flatten to one dict per (record, method) pair."""
    for row in report.rows:
        rec = row.record
        methods = list(row.predictions) or [None]
        for m in methods:
            yield {
                "source": rec.source, "fuel": rec.fuel_name, "D_m": rec.D, "y0_m": rec.y0,
                "tB0_exp_s": rec.t_B0_exp, "regime": row.regime, "method": m,
                "tB0_pred_s": row.predictions.get(m), "ratio": row.ratios.get(m),
                "legibility": rec.legibility, "notes": "; ".join(row.notes),
            }


def write_report_csv(fh, report: ComparisonReport):
    writer = csv.DictWriter(fh, fieldnames=REPORT_CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for r in report_rows(report):
        writer.writerow({k: "" if v is None else v for k, v in r.items()})


def report_to_dict(report: ComparisonReport):
    return {
        "rows": list(report_rows(report)),
        "summary": {m: vars(s) for m, s in report.summary.items()},
        "excluded_from_summary": report.excluded,
        "bands": {"agreement": AGREEMENT_BAND, "strong": STRONG_BAND},
    }


def write_report_json(fh, report: ComparisonReport):
    json.dump(report_to_dict(report), fh, indent=2)
