"""CSV and JSON writers with round-trip float formatting.

CSV files start with one ``#`` comment line carrying a timestamp; everything
after it is a deterministic function of the inputs. JSON files carry no
timestamp at all.
"""

from __future__ import annotations

import csv
import io
import json
import math
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

FLOAT_FORMAT = "%.17g"


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return FLOAT_FORMAT % float(v)
    return str(v)


def comment_line(command: str) -> str:
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return f"# scarlab {command} generated {stamp}"


def write_csv(path, command: str, header, rows) -> Path:
    """Write ``rows`` under a one-line timestamp comment and a header row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    buf.write(comment_line(command) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    path.write_text(buf.getvalue())
    return path


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    """Header and rows, skipping ``#`` comment lines."""
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]


def payload_bytes(path) -> bytes:
    """File content without comment lines, for determinism comparisons."""
    text = Path(path).read_text()
    return "".join(ln + "\n" for ln in text.splitlines() if not ln.startswith("#")).encode()


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        # NaN/inf are not JSON; encode as strings so files stay standard
        return f if math.isfinite(f) else str(f)
    return v


def write_json(path, data) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")
    return path


def complex_columns(label: str) -> list[str]:
    return [f"{label}_re", f"{label}_im"]


# --------------------------------------------------------------- row builders

SCAR_HEADER = ["index", "energy", "neel_overlap", "entropy", "is_scar", "in_window"]
FACTORIZATION_HEADER = ["a", "b", "E_a", "E_b", "beta_ab", "lhs", "rhs", "rel_error"]
CROSSING_HEADER = ["N", "D", "a", "b", "crossing_aa", "crossing_ab"]


def scar_rows(spec, scarset):
    is_scar = np.zeros(spec.dim, dtype=bool)
    is_scar[scarset.scar_indices] = True
    window = scarset.in_window
    for m in range(spec.dim):
        yield [m, spec.energies[m], scarset.neel_overlap[m], scarset.entanglement_entropy[m],
               is_scar[m], window[m]]


def factorization_rows(report):
    rel = report.rel_error
    for x, a in enumerate(report.scars):
        for y, b in enumerate(report.scars):
            yield [a, b, report.energies[x], report.energies[y], report.betas[x, y],
                   report.lhs[x, y], report.rhs[x, y], rel[x, y]]


def decomposition_table(report, variant=None):
    """Header and rows: t, each term, sum, exact, abs_error (+ unfactorized set)."""
    times = report.sum.times
    header = ["t"]
    cols = []
    # the grid parameter is the first time argument that varies, else index 0
    varying = [k for k in range(times.shape[1]) if np.ptp(times[:, k]) > 0]
    tcol = times[:, varying[0]] if varying else times[:, 0]
    for term in report.terms:
        header += complex_columns(term.label)
        cols.append(term.values)
    header += complex_columns("sum") + complex_columns("exact") + ["abs_error"]
    cols += [report.sum.values, report.exact.values]
    abs_err = np.abs(report.sum.values - report.exact.values)
    extra_cols, extra_header = [], []
    if variant is not None:
        for term in variant.terms:
            extra_header += complex_columns(f"unfactorized_{term.label}")
            extra_cols.append(term.values)
        extra_header += complex_columns("unfactorized_sum") + ["unfactorized_abs_error"]
        extra_cols.append(variant.sum.values)
    rows = []
    for p in range(len(tcol)):
        row = [tcol[p]]
        for c in cols:
            row += [c[p].real, c[p].imag]
        row.append(abs_err[p])
        for c in extra_cols:
            row += [c[p].real, c[p].imag]
        if variant is not None:
            row.append(abs(variant.sum.values[p] - report.exact.values[p]))
        rows.append(row)
    return header + extra_header, rows
