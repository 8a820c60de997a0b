"""Cross-run aggregation and difficulty/performance correlation."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np
from scipy.stats import rankdata

from .errors import InputError, InsufficientData, InvalidInput, InvalidParameter
from .trajmetrics import PerformanceReport

DIFFICULTY_COLUMNS = ("to", "vo", "aol")
DIFFICULTY_LABELS = ("TO", "VO", "AOL")
BASE_PERFORMANCE_COLUMNS = ("success_rate", "avg_speed", "avg_curvature", "avg_acceleration", "avg_jerk")
LAST_COLUMN_CHOICES = ("progress", "computation_time")
_MEAN_FIELDS = (
    "avg_speed",
    "avg_curvature",
    "avg_acceleration",
    "avg_jerk",
    "total_time",
    "path_length",
    "progress",
)


@dataclass
class AggregateReport:
    n_runs: int
    success_rate: float
    avg_speed: float
    avg_curvature: float
    avg_acceleration: float
    avg_jerk: float
    total_time: float
    path_length: float
    progress: float
    computation_time_total: Optional[float] = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def aggregate_runs(reports: Sequence[PerformanceReport]) -> AggregateReport:
    """Arithmetic means over independent runs of one method on one test case."""
    if not reports:
        raise InvalidInput("no reports to aggregate")
    n = len(reports)
    means = {name: math.fsum(getattr(r, name) for r in reports) / n for name in _MEAN_FIELDS}
    times = [r.computation_time_total for r in reports if r.computation_time_total is not None]
    return AggregateReport(
        n_runs=n,
        success_rate=sum(1 for r in reports if r.success) / n,
        computation_time_total=math.fsum(times) / len(times) if times else None,
        **means,
    )


@dataclass
class RunRow:
    test_case_id: str
    method: str
    to: float
    vo: float
    aol: float
    metrics: dict


@dataclass
class RunTable:
    rows: list = field(default_factory=list)

    @property
    def methods(self) -> list[str]:
        return sorted({r.method for r in self.rows})

    def grouping(self) -> dict:
        return {r.test_case_id: r.method for r in self.rows}

    def subset(self, method: str) -> "RunTable":
        return RunTable([r for r in self.rows if r.method == method])


def read_run_table(text: str) -> RunTable:
    reader = csv.DictReader(io.StringIO(text))
    header = reader.fieldnames or []
    required = ("test_case_id", "method") + DIFFICULTY_COLUMNS + BASE_PERFORMANCE_COLUMNS
    missing = [c for c in required if c not in header]
    if missing:
        raise InputError(f"run table is missing column {missing[0]!r}", column=missing[0])
    known = set(required) | set(LAST_COLUMN_CHOICES)
    unknown = [c for c in header if c not in known]
    if unknown:
        raise InputError(f"run table has unknown column {unknown[0]!r}", column=unknown[0])
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        try:
            values = {k: (float(v) if v not in ("", None) else math.nan) for k, v in rec.items()
                      if k not in ("test_case_id", "method")}
        except ValueError as exc:
            raise InputError(f"line {lineno}: {exc}", line=lineno) from exc
        rows.append(
            RunRow(
                test_case_id=rec["test_case_id"],
                method=rec["method"],
                to=values.pop("to"),
                vo=values.pop("vo"),
                aol=values.pop("aol"),
                metrics=values,
            )
        )
    return RunTable(rows)


def pearson(x: Sequence[float], y: Sequence[float]) -> Optional[float]:
    """Pearson r, or None when either series has zero variance."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) != len(y):
        raise InvalidParameter("series lengths differ")
    if len(x) < 2 or np.all(x == x[0]) or np.all(y == y[0]):
        return None
    # exactly rounded sums keep the result independent of row order
    dx, dy = x - math.fsum(x) / len(x), y - math.fsum(y) / len(y)
    r = math.fsum(dx * dy) / math.sqrt(math.fsum(dx * dx) * math.fsum(dy * dy))
    return max(-1.0, min(1.0, r))


def spearman(x: Sequence[float], y: Sequence[float]) -> Optional[float]:
    return pearson(rankdata(x), rankdata(y))


@dataclass
class CorrelationMatrix:
    """|r| between difficulty rows and performance columns; NaN marks undefined."""

    values: np.ndarray
    row_labels: tuple
    col_labels: tuple
    mode: str = "pooled"
    kind: str = "pearson"

    def defined(self) -> np.ndarray:
        return np.isfinite(self.values)


def _single_matrix(rows: list, columns: Sequence[str], kind: str) -> np.ndarray:
    corr = pearson if kind == "pearson" else spearman
    out = np.full((len(DIFFICULTY_COLUMNS), len(columns)), np.nan)
    for i, d in enumerate(DIFFICULTY_COLUMNS):
        dx = [getattr(r, d) for r in rows]
        for j, p in enumerate(columns):
            py = [r.metrics.get(p, math.nan) for r in rows]
            if any(math.isnan(v) for v in py):
                continue
            r = corr(dx, py)
            if r is not None:
                out[i, j] = abs(r)
    return out


def correlation_matrix(
    table: RunTable,
    mode: str = "pooled",
    kind: str = "pearson",
    last_column: str = "progress",
) -> CorrelationMatrix:
    """Absolute correlation between each difficulty metric and each performance metric.

    ``mode="pooled"`` correlates across all rows; ``mode="per_method"`` builds one
    matrix per method and averages the defined entries.
    """
    if mode not in ("pooled", "per_method"):
        raise InvalidParameter(f"unknown mode {mode!r}")
    if kind not in ("pearson", "spearman"):
        raise InvalidParameter(f"unknown correlation kind {kind!r}")
    if last_column not in LAST_COLUMN_CHOICES:
        raise InvalidParameter(f"last column must be one of {LAST_COLUMN_CHOICES}")
    columns = BASE_PERFORMANCE_COLUMNS + (last_column,)
    if len(table.rows) < 2:
        raise InsufficientData("correlation needs at least 2 rows")
    if any(last_column not in r.metrics for r in table.rows):
        raise InputError(f"run table has no {last_column!r} column", column=last_column)

    if mode == "pooled":
        values = _single_matrix(table.rows, columns, kind)
    else:
        stacks = []
        for method in table.methods:
            sub = table.subset(method).rows
            if len(sub) < 2:
                raise InsufficientData(f"method {method!r} has fewer than 2 rows")
            stacks.append(_single_matrix(sub, columns, kind))
        stack = np.stack(stacks)
        counts = np.isfinite(stack).sum(axis=0)
        sums = np.nansum(stack, axis=0)
        values = np.full(stack.shape[1:], np.nan)
        np.divide(sums, counts, out=values, where=counts > 0)
    return CorrelationMatrix(values, DIFFICULTY_LABELS, columns, mode, kind)


def format_float(x: float) -> str:
    return format(x, ".9g")


def matrix_to_csv(matrix: CorrelationMatrix) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["difficulty", *matrix.col_labels])
    for label, row in zip(matrix.row_labels, matrix.values):
        writer.writerow([label, *(format_float(v) if np.isfinite(v) else "undefined" for v in row)])
    return buf.getvalue()


def _heat_color(v: float) -> str:
    # white -> dark red
    lo, hi = np.array([255, 255, 255]), np.array([165, 15, 21])
    rgb = np.rint(lo + (hi - lo) * v).astype(int)
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def matrix_to_svg(matrix: CorrelationMatrix, title: Optional[str] = None) -> str:
    cell_w, cell_h = 96, 44
    left, top = 64, 84 if title else 60
    n_rows, n_cols = matrix.values.shape
    width, height = left + n_cols * cell_w + 16, top + n_rows * cell_h + 16
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
    ]
    if title:
        out.append(f'<text x="{left}" y="22" font-size="14">{escape(title)}</text>')
    for j, label in enumerate(matrix.col_labels):
        x = left + j * cell_w + cell_w / 2
        out.append(f'<text x="{x:g}" y="{top - 10}" text-anchor="middle">{escape(label)}</text>')
    for i, label in enumerate(matrix.row_labels):
        y = top + i * cell_h
        out.append(f'<text x="{left - 8}" y="{y + cell_h / 2 + 4:g}" text-anchor="end">{escape(label)}</text>')
        for j in range(n_cols):
            v = matrix.values[i, j]
            x = left + j * cell_w
            if np.isfinite(v):
                fill, text = _heat_color(float(v)), f"{v:.2f}"
                ink = "#ffffff" if v > 0.6 else "#000000"
            else:
                fill, text, ink = "#d9d9d9", "n/a", "#000000"
            out.append(
                f'<rect x="{x}" y="{y}" width="{cell_w}" height="{cell_h}" fill="{fill}" stroke="#ffffff"/>'
            )
            out.append(
                f'<text x="{x + cell_w / 2:g}" y="{y + cell_h / 2 + 4:g}" text-anchor="middle" '
                f'fill="{ink}">{text}</text>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def rows_from_results(results: Iterable[tuple]) -> RunTable:
    """Build a table from ``(test_case_id, method, DifficultyScores, AggregateReport)`` tuples."""
    rows = []
    for case_id, method, scores, agg in results:
        metrics = {
            "success_rate": agg.success_rate,
            "avg_speed": agg.avg_speed,
            "avg_curvature": agg.avg_curvature,
            "avg_acceleration": agg.avg_acceleration,
            "avg_jerk": agg.avg_jerk,
            "progress": agg.progress,
        }
        if agg.computation_time_total is not None:
            metrics["computation_time"] = agg.computation_time_total
        rows.append(RunRow(case_id, method, scores.to, scores.vo, scores.aol, metrics))
    return RunTable(rows)
