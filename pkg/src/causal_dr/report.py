"""CSV/Markdown writers for grid results and boxplot statistics."""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError

SUMMARY_COLUMNS = ["scenario_id", "n", "rho", "ps_model", "estimator", "mean", "bias", "abias",
                   "rmse", "se", "width", "n_replicates"]
REPLICATE_COLUMNS = ["scenario_id", "n", "rho", "replicate", "ps_model", "estimator", "tau_hat",
                     "se", "ci_low", "ci_high", "flags"]
BOXPLOT_COLUMNS = ["scenario_id", "n", "rho", "ps_model", "estimator", "count", "min", "q1",
                   "median", "q3", "max", "whisker_low", "whisker_high", "outliers"]
ANALYSIS_COLUMNS = ["estimator", "ps_model", "tau_hat", "se", "ci_low", "ci_high", "p_value"]
FOREST_COLUMNS = ["position", "label", "estimator", "ps_model", "estimate", "lower", "upper", "significant"]

QUANTILE_RULE = (
    "Quartiles use linear interpolation between order statistics (type 7): "
    "Q(p) = x[k] + (h - k)(x[k+1] - x[k]) with h = (B - 1) p, k = floor(h). "
    "Outliers lie beyond 1.5 IQR from the quartiles; whiskers end at the most "
    "extreme non-outlying estimate."
)

_INT_FIELDS = {"scenario_id", "n", "replicate", "n_replicates", "count", "position", "significant"}
_STR_FIELDS = {"ps_model", "estimator", "flags", "outliers", "label"}


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def to_csv(rows: Iterable[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def write_csv(path, rows: Iterable[dict], columns: Sequence[str]) -> None:
    path = Path(path)
    try:
        path.write_text(to_csv(rows, columns))
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def read_csv(path, columns: Sequence[str]) -> list[dict]:
    """Read a file written by :func:`write_csv`, converting numeric fields."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: file not found")
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"{path}: empty file")
        missing = [c for c in columns if c not in reader.fieldnames]
        if missing:
            raise DataError(f"{path}: missing columns {missing}")
        rows = []
        for lineno, raw in enumerate(reader, start=2):
            row = {}
            for c in columns:
                value = raw[c]
                try:
                    if c in _STR_FIELDS:
                        row[c] = value
                    elif c in _INT_FIELDS:
                        row[c] = int(value)
                    else:
                        row[c] = float(value)
                except (TypeError, ValueError):
                    raise DataError(f"{path}: bad value {value!r} in column {c!r} at line {lineno}") from None
            rows.append(row)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return rows


def summary_markdown(rows: Sequence[dict], tau: float | None = None) -> str:
    """Markdown tables, one per (n, rho), grouped by scenario like the usual layout."""
    out = ["# Simulation summary", ""]
    out.append(
        "Bias is mean(tau_hat) - tau, so an estimator that overshoots the true "
        "effect has positive bias. SE is the Monte Carlo standard deviation of "
        "the estimates (divisor B - 1); Width is the mean 95% Wald interval width."
    )
    if tau is not None:
        out.append(f"True effect tau = {tau:g}.")
    out.append("")
    out.append(QUANTILE_RULE + " (applies to boxplots.csv)")
    out.append("")
    cells = []
    for r in rows:
        key = (r["n"], r["rho"])
        if key not in cells:
            cells.append(key)
    for n, rho in cells:
        block = [r for r in rows if (r["n"], r["rho"]) == (n, rho)]
        reps = sorted({r["n_replicates"] for r in block})
        out.append(f"## n = {n}, rho = {rho:g} (B = {', '.join(map(str, reps))})")
        out.append("")
        out.append("| Scenario | PS model | Estimator | Mean | Bias | ABias | RMSE | SE | Width |")
        out.append("|---|---|---|---|---|---|---|---|---|")
        last = None
        for r in block:
            sid = str(r["scenario_id"]) if r["scenario_id"] != last else ""
            last = r["scenario_id"]
            out.append(
                f"| {sid} | {r['ps_model']} | {r['estimator']} | {r['mean']:.3f} | {r['bias']:.3f} | "
                f"{r['abias']:.3f} | {r['rmse']:.3f} | {r['se']:.3f} | {r['width']:.3f} |"
            )
        out.append("")
    return "\n".join(out)


def boxplot_stats(values) -> dict:
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        raise DataError("no values for boxplot statistics")
    q1, med, q3 = np.quantile(v, [0.25, 0.5, 0.75])
    iqr = q3 - q1
    lo_f, hi_f = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = v[(v >= lo_f) & (v <= hi_f)]
    outliers = v[(v < lo_f) | (v > hi_f)]
    return {
        "count": int(v.size), "min": float(v[0]), "q1": float(q1), "median": float(med),
        "q3": float(q3), "max": float(v[-1]),
        "whisker_low": float(inside.min()) if inside.size else float(q1),
        "whisker_high": float(inside.max()) if inside.size else float(q3),
        "outliers": ";".join(repr(float(x)) for x in outliers),
    }


def boxplot_rows(replicate_rows: Sequence[dict]) -> list[dict]:
    groups: dict = {}
    for r in replicate_rows:
        key = (r["scenario_id"], r["n"], r["rho"], r["ps_model"], r["estimator"])
        groups.setdefault(key, []).append(r["tau_hat"])
    out = []
    for (sid, n, rho, ps, est), vals in groups.items():
        row = {"scenario_id": sid, "n": n, "rho": rho, "ps_model": ps, "estimator": est}
        row.update(boxplot_stats(vals))
        out.append(row)
    return out
