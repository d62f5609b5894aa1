"""CFRP-confined cylinder database handling.

CSV ingestion, range validation against the reference-database bounds,
summary statistics, Pearson correlation, min-max normalization onto
[0.1, 0.9], and seeded train/test splitting. Every operation here is a
pure function of its inputs, so concurrent use is safe.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

FIELDS = ("d", "h", "nt", "ef", "fco", "eco", "ecc", "fcc")
DEFAULT_FEATURES = ("d", "h", "nt", "ef", "fco", "eco", "ecc")
TARGET_FIELD = "fcc"

CSV_COLUMNS = {
    "d": "d_mm",
    "h": "h_mm",
    "nt": "nt_mm",
    "ef": "ef_gpa",
    "fco": "fco_mpa",
    "eco": "eco_pct",
    "ecc": "ecc_pct",
    "fcc": "fcc_mpa",
}
CSV_HEADER = tuple(CSV_COLUMNS[f] for f in FIELDS)
# Optional trailing column carrying measured hoop rupture strains
# (dimensionless), used by the empirical strength baselines.
RUPTURE_COLUMN = "eps_hrup"

# Observed bounds of the reference database (mm, GPa, MPa, percent strain).
# Used for range warnings and as sampling bounds for synthetic data.
FIELD_BOUNDS: dict[str, tuple[float, float]] = {
    "d": (51.0, 406.0),
    "h": (102.0, 812.0),
    "nt": (0.09, 5.9),
    "ef": (10.0, 663.0),
    "fco": (12.41, 188.2),
    "eco": (0.1676, 1.53),
    "ecc": (0.083, 4.62),
    "fcc": (18.5, 302.2),
}


class DatasetFormatError(ValueError):
    """Malformed CSV input; carries row/column context when known."""

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        context = []
        if row is not None:
            context.append(f"row {row}")
        if column is not None:
            context.append(f"column {column!r}")
        if context:
            message = f"{message} ({', '.join(context)})"
        super().__init__(message)
        self.row = row
        self.column = column


@dataclass(frozen=True)
class SpecimenRecord:
    """One CFRP-confined cylinder observation.

    Lengths in mm, modulus in GPa, strengths in MPa, strains in percent.
    ``eps_h_rup`` is an optional dimensionless hoop rupture strain consumed
    by the empirical strength models.
    """

    d: float
    h: float
    nt: float
    ef: float
    fco: float
    eco: float
    ecc: float
    fcc: float
    eps_h_rup: float | None = None

    def __post_init__(self):
        for name in FIELDS:
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0.0:
                raise ValueError(f"field {name!r} must be positive and finite, got {value}")
        if self.h < self.d:
            raise ValueError(f"cylinder height {self.h} is smaller than diameter {self.d}")
        if self.eps_h_rup is not None:
            if not math.isfinite(self.eps_h_rup) or self.eps_h_rup < 0.0:
                raise ValueError(f"eps_h_rup must be non-negative and finite, got {self.eps_h_rup}")

    def as_dict(self) -> dict[str, float]:
        return {name: float(getattr(self, name)) for name in FIELDS}


def _read_text(source) -> str:
    if isinstance(source, (str, Path)):
        return Path(source).read_text(encoding="utf-8")
    if isinstance(source, bytes):
        return source.decode("utf-8")
    data = source.read()
    if isinstance(data, bytes):
        return data.decode("utf-8")
    return data


def _check_header(header: Sequence[str]) -> bool:
    """Validate the header; returns True when the rupture column is present."""
    missing = [c for c in CSV_HEADER if c not in header]
    if missing:
        raise DatasetFormatError(f"missing column {missing[0]!r} in header")
    if tuple(header[: len(CSV_HEADER)]) != CSV_HEADER:
        raise DatasetFormatError("header columns must be, in order: " + ",".join(CSV_HEADER))
    extras = list(header[len(CSV_HEADER):])
    if extras and extras != [RUPTURE_COLUMN]:
        raise DatasetFormatError(f"unexpected column(s): {', '.join(extras)}")
    return bool(extras)


def _parse_float(cell: str, row: int, column: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise DatasetFormatError(f"could not parse number from {cell!r}", row=row, column=column) from None
    if not math.isfinite(value):
        raise DatasetFormatError(f"non-finite value {cell!r}", row=row, column=column)
    return value


def parse_dataset(source) -> list[SpecimenRecord]:
    """Parse specimen records from a CSV path, file object, text, or bytes.

    The header must carry the canonical columns ``d_mm,h_mm,nt_mm,ef_gpa,
    fco_mpa,eco_pct,ecc_pct,fcc_mpa`` in that order; an optional trailing
    ``eps_hrup`` column supplies hoop rupture strains. Blank lines are
    skipped. Row numbers in errors are 1-based file lines (header is 1).
    """
    text = _read_text(source)
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = [c.strip() for c in next(reader)]
    except StopIteration:
        raise DatasetFormatError("empty input: missing header") from None
    has_rupture = _check_header(header)

    records: list[SpecimenRecord] = []
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise DatasetFormatError(f"expected {len(header)} columns, found {len(row)}", row=line_no)
        values = {
            name: _parse_float(cell, line_no, CSV_COLUMNS[name])
            for name, cell in zip(FIELDS, row)
        }
        eps = None
        if has_rupture and row[len(CSV_HEADER)].strip():
            eps = _parse_float(row[len(CSV_HEADER)], line_no, RUPTURE_COLUMN)
        try:
            records.append(SpecimenRecord(**values, eps_h_rup=eps))
        except ValueError as exc:
            raise DatasetFormatError(str(exc), row=line_no) from None
    return records


def records_to_csv(records: Sequence[SpecimenRecord]) -> str:
    """Serialize records back to the canonical CSV schema.

    The ``eps_hrup`` column is emitted when any record carries a rupture
    strain; records without one get an empty cell.
    """
    include_rupture = any(r.eps_h_rup is not None for r in records)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    header = list(CSV_HEADER) + ([RUPTURE_COLUMN] if include_rupture else [])
    writer.writerow(header)
    for r in records:
        row = [repr(float(getattr(r, f))) for f in FIELDS]
        if include_rupture:
            row.append("" if r.eps_h_rup is None else repr(float(r.eps_h_rup)))
        writer.writerow(row)
    return out.getvalue()


@dataclass(frozen=True)
class RangeFlag:
    """One out-of-range warning for one record field."""

    index: int
    field: str
    value: float
    kind: str  # below_min | above_max | fcc_below_fco
    bound: float


@dataclass
class ValidationReport:
    n_records: int
    flags: list[RangeFlag]

    @property
    def flagged_indices(self) -> list[int]:
        return sorted({f.index for f in self.flags})

    def to_dict(self) -> dict:
        return {
            "n_records": self.n_records,
            "n_flags": len(self.flags),
            "flags": [
                {
                    "index": f.index,
                    "field": f.field,
                    "value": f.value,
                    "kind": f.kind,
                    "bound": f.bound,
                }
                for f in self.flags
            ],
        }


def validate_ranges(
    records: Sequence[SpecimenRecord],
    bounds: Mapping[str, tuple[float, float]] | None = None,
) -> ValidationReport:
    """Flag fields lying outside the reference-database ranges.

    Flags are warnings only; a new database may legitimately exceed the
    ranges. Records with fcc below fco get an extra warning flag.
    """
    if not records:
        raise ValueError("validate_ranges requires at least one record")
    limits = dict(FIELD_BOUNDS if bounds is None else bounds)
    flags: list[RangeFlag] = []
    for i, r in enumerate(records):
        for name in FIELDS:
            lo, hi = limits[name]
            value = getattr(r, name)
            if value < lo:
                flags.append(RangeFlag(i, name, float(value), "below_min", lo))
            elif value > hi:
                flags.append(RangeFlag(i, name, float(value), "above_max", hi))
        if r.fcc < r.fco:
            flags.append(RangeFlag(i, "fcc", float(r.fcc), "fcc_below_fco", float(r.fco)))
    return ValidationReport(n_records=len(records), flags=flags)


@dataclass(frozen=True)
class FieldStats:
    min: float
    max: float
    range: float
    mean: float
    median: float
    stdev: float
    cov: float


@dataclass
class DatasetSummary:
    n: int
    fields: dict[str, FieldStats]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "fields": {
                name: {
                    "min": s.min,
                    "max": s.max,
                    "range": s.range,
                    "mean": s.mean,
                    "median": s.median,
                    "stdev": s.stdev,
                    "cov": s.cov,
                }
                for name, s in self.fields.items()
            },
        }


def raw_matrix(records: Sequence[SpecimenRecord], fields: Sequence[str]) -> np.ndarray:
    return np.array([[getattr(r, f) for f in fields] for r in records], dtype=float)


def summary_stats(records: Sequence[SpecimenRecord]) -> DatasetSummary:
    """Per-field sample statistics (stdev uses the n-1 convention)."""
    if len(records) < 2:
        raise ValueError("summary_stats requires at least 2 records")
    data = raw_matrix(records, FIELDS)
    stats: dict[str, FieldStats] = {}
    for j, name in enumerate(FIELDS):
        col = data[:, j]
        lo = float(np.min(col))
        hi = float(np.max(col))
        mean = float(np.mean(col))
        stdev = float(np.std(col, ddof=1))
        stats[name] = FieldStats(
            min=lo,
            max=hi,
            range=hi - lo,
            mean=mean,
            median=float(np.median(col)),
            stdev=stdev,
            cov=stdev / mean,
        )
    return DatasetSummary(n=len(records), fields=stats)


def correlation_matrix(
    records: Sequence[SpecimenRecord], fields: Sequence[str] = FIELDS
) -> np.ndarray:
    """Pearson correlation matrix over the given fields.

    Symmetric with an exact unit diagonal; entries clipped into [-1, 1].
    A constant column makes the coefficient undefined and raises.
    """
    if len(records) < 2:
        raise ValueError("correlation_matrix requires at least 2 records")
    data = raw_matrix(records, fields)
    for name, s in zip(fields, data.std(axis=0)):
        if s == 0.0:
            raise ValueError(f"column {name!r} is constant; correlation undefined")
    corr = np.corrcoef(data, rowvar=False)
    corr = np.clip((corr + corr.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    return corr


@dataclass(frozen=True)
class FeatureRange:
    x_min: float
    x_max: float


@dataclass
class NormalizationSpec:
    """Per-field affine maps sending [x_min, x_max] onto [lo, hi].

    Values beyond the fitted range extrapolate linearly; out-of-range
    inputs are the business of validate_ranges, not of this map.
    """

    ranges: dict[str, FeatureRange]
    lo: float = 0.1
    hi: float = 0.9

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ValueError(f"hi must exceed lo, got [{self.lo}, {self.hi}]")
        for name, r in self.ranges.items():
            if not r.x_max > r.x_min:
                raise ValueError(f"feature {name!r} has empty range [{r.x_min}, {r.x_max}]")

    def normalize(self, field: str, x):
        r = self.ranges[field]
        arr = np.asarray(x, dtype=float)
        z = (self.lo * (r.x_max - arr) + self.hi * (arr - r.x_min)) / (r.x_max - r.x_min)
        # pin the endpoints so the fitted bounds map to lo/hi bit-exactly
        z = np.where(arr == r.x_min, self.lo, np.where(arr == r.x_max, self.hi, z))
        return float(z) if np.ndim(x) == 0 else z

    def denormalize(self, field: str, z):
        r = self.ranges[field]
        arr = np.asarray(z, dtype=float)
        x = r.x_min + (arr - self.lo) * (r.x_max - r.x_min) / (self.hi - self.lo)
        return float(x) if np.ndim(z) == 0 else x

    def in_range(self, field: str, x: float) -> bool:
        r = self.ranges[field]
        return r.x_min <= x <= r.x_max

    def to_dict(self) -> dict:
        return {
            "lo": self.lo,
            "hi": self.hi,
            "ranges": {name: [r.x_min, r.x_max] for name, r in self.ranges.items()},
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "NormalizationSpec":
        ranges = {
            name: FeatureRange(float(pair[0]), float(pair[1]))
            for name, pair in data["ranges"].items()
        }
        return cls(ranges=ranges, lo=float(data.get("lo", 0.1)), hi=float(data.get("hi", 0.9)))


def fit_normalizer(
    records: Sequence[SpecimenRecord],
    fields: Sequence[str] = FIELDS,
    lo: float = 0.1,
    hi: float = 0.9,
) -> NormalizationSpec:
    """Fit per-field min/max from the given (training) records."""
    if len(records) < 2:
        raise ValueError("fit_normalizer requires at least 2 records")
    data = raw_matrix(records, fields)
    ranges: dict[str, FeatureRange] = {}
    for j, name in enumerate(fields):
        x_min = float(np.min(data[:, j]))
        x_max = float(np.max(data[:, j]))
        if x_max == x_min:
            raise ValueError(f"feature {name!r} is constant; cannot normalize")
        ranges[name] = FeatureRange(x_min, x_max)
    return NormalizationSpec(ranges=ranges, lo=lo, hi=hi)


def feature_matrix(
    records: Sequence[SpecimenRecord], fields: Sequence[str], spec: NormalizationSpec
) -> np.ndarray:
    """Normalized feature matrix, one row per record."""
    raw = raw_matrix(records, fields)
    return np.column_stack([spec.normalize(f, raw[:, j]) for j, f in enumerate(fields)])


def target_vector(
    records: Sequence[SpecimenRecord], spec: NormalizationSpec, field: str = TARGET_FIELD
) -> np.ndarray:
    raw = np.array([getattr(r, field) for r in records], dtype=float)
    return spec.normalize(field, raw)


def split(
    records: Sequence[SpecimenRecord], train_fraction: float = 0.75, seed: int = 0
) -> tuple[list[SpecimenRecord], list[SpecimenRecord]]:
    """Disjoint, exhaustive train/test partition via a seeded shuffle.

    The train size is round(n * train_fraction) with halves rounded up,
    so 708 records at 0.75 give exactly 531 + 177.
    """
    if not records:
        raise ValueError("cannot split an empty dataset")
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    n = len(records)
    n_train = int(math.floor(n * train_fraction + 0.5))
    order = np.random.default_rng(seed).permutation(n)
    train = [records[i] for i in order[:n_train]]
    test = [records[i] for i in order[n_train:]]
    return train, test


def summary_to_csv(summary: DatasetSummary) -> str:
    lines = ["field,min,max,range,mean,median,stdev,cov"]
    for name, s in summary.fields.items():
        cells = [name] + [repr(float(v)) for v in (s.min, s.max, s.range, s.mean, s.median, s.stdev, s.cov)]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def correlation_to_csv(matrix: np.ndarray, fields: Sequence[str] = FIELDS) -> str:
    lines = ["field," + ",".join(fields)]
    for name, row in zip(fields, matrix):
        lines.append(name + "," + ",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"
