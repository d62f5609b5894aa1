"""Regression error metrics and evaluation reports.

Accuracy follows the convention used throughout this project: 100 times
the squared Pearson correlation between targets and predictions. Reports
carry both physical-scale (MPa) metrics and normalized-scale metrics
expressed as percentages (the normalized MSE/MAE times 100).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dataset import NormalizationSpec, TARGET_FIELD

SCALES = ("mpa", "normalized")


def _paired(targets, predictions) -> tuple[np.ndarray, np.ndarray]:
    t = np.asarray(targets, dtype=float)
    p = np.asarray(predictions, dtype=float)
    if t.ndim != 1 or t.shape != p.shape:
        raise ValueError(f"targets and predictions must be 1-D of equal length, got {t.shape} and {p.shape}")
    if t.size == 0:
        raise ValueError("metrics need at least one (target, prediction) pair")
    return t, p


def mse(targets, predictions) -> float:
    """Mean squared error."""
    t, p = _paired(targets, predictions)
    return float(np.mean((t - p) ** 2))


def mae(targets, predictions) -> float:
    """Mean absolute error."""
    t, p = _paired(targets, predictions)
    return float(np.mean(np.abs(t - p)))


def r_squared(x, y) -> float:
    """Squared Pearson correlation of two sequences.

    Evaluated from centered sums, the numerically stable form of the
    textbook product-moment expression. Affine-invariant in either
    argument; undefined (raises) for constant sequences.
    """
    t, p = _paired(x, y)
    if t.size < 2:
        raise ValueError("r_squared needs at least 2 pairs")
    dx = t - t.mean()
    dy = p - p.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("r_squared is undefined for a constant sequence")
    r = float(np.dot(dx, dy)) / math.sqrt(sxx * syy)
    return r * r


@dataclass
class EvaluationReport:
    """Error metrics of one model on one evaluation set.

    ``mse``/``mae`` mirror the selected headline scale ("mpa" or
    "normalized", the latter as percentages). ``r_squared`` is None when
    undefined (fewer than 2 pairs or a constant sequence), with the
    reason recorded in ``notes``.
    """

    n: int
    scale: str
    mse: float
    mae: float
    r_squared: float | None
    accuracy_percent: float | None
    mse_mpa: float
    mae_mpa: float
    mse_pct: float | None
    mae_pct: float | None
    targets: np.ndarray
    predictions: np.ndarray
    notes: list[str] = field(default_factory=list)

    def to_dict(self, include_pairs: bool = False) -> dict:
        out = {
            "n": self.n,
            "scale": self.scale,
            "mse": self.mse,
            "mae": self.mae,
            "r_squared": self.r_squared,
            "accuracy_percent": self.accuracy_percent,
            "mse_mpa": self.mse_mpa,
            "mae_mpa": self.mae_mpa,
            "mse_pct": self.mse_pct,
            "mae_pct": self.mae_pct,
            "notes": list(self.notes),
        }
        if include_pairs:
            out["pairs"] = [[float(t), float(p)] for t, p in zip(self.targets, self.predictions)]
        return out

    def pairs_csv(self) -> str:
        lines = ["target_mpa,prediction_mpa"]
        lines.extend(f"{float(t)!r},{float(p)!r}" for t, p in zip(self.targets, self.predictions))
        return "\n".join(lines) + "\n"


def report_from_pairs(
    targets_mpa,
    predictions_mpa,
    spec: NormalizationSpec | None = None,
    scale: str = "mpa",
    target_field: str = TARGET_FIELD,
) -> EvaluationReport:
    """Build a report from physical-scale pairs.

    Normalized-scale metrics are included when a normalization spec is
    given (pairs are mapped through the target's affine normalization).
    """
    t, p = _paired(targets_mpa, predictions_mpa)
    if scale not in SCALES:
        raise ValueError(f"scale must be one of {SCALES}")
    if scale == "normalized" and spec is None:
        raise ValueError("normalized headline scale needs a NormalizationSpec")
    mse_mpa = mse(t, p)
    mae_mpa = mae(t, p)
    mse_pct = mae_pct = None
    if spec is not None:
        tn = spec.normalize(target_field, t)
        pn = spec.normalize(target_field, p)
        mse_pct = 100.0 * mse(tn, pn)
        mae_pct = 100.0 * mae(tn, pn)
    notes: list[str] = []
    r2 = accuracy = None
    if t.size < 2:
        notes.append("r_squared not computable for fewer than 2 pairs")
    else:
        try:
            r2 = r_squared(t, p)
            accuracy = 100.0 * r2
        except ValueError as exc:
            notes.append(str(exc))
    headline_mse, headline_mae = (mse_mpa, mae_mpa) if scale == "mpa" else (mse_pct, mae_pct)
    return EvaluationReport(
        n=int(t.size),
        scale=scale,
        mse=headline_mse,
        mae=headline_mae,
        r_squared=r2,
        accuracy_percent=accuracy,
        mse_mpa=mse_mpa,
        mae_mpa=mae_mpa,
        mse_pct=mse_pct,
        mae_pct=mae_pct,
        targets=t,
        predictions=p,
        notes=notes,
    )


def evaluate(
    predict: Callable[[np.ndarray], np.ndarray],
    X_norm,
    y_norm,
    spec: NormalizationSpec,
    scale: str = "mpa",
    target_field: str = TARGET_FIELD,
) -> EvaluationReport:
    """Run a predictor over normalized features and score both scales.

    ``predict`` maps an (n, k) normalized feature matrix to n normalized
    predictions. Pairs are denormalized to MPa before scoring; the
    squared-correlation accuracy is identical on either scale because the
    normalization is affine.
    """
    X = np.asarray(X_norm, dtype=float)
    y = np.asarray(y_norm, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("evaluation set must be a non-empty 2-D array")
    pred_norm = np.asarray(predict(X), dtype=float).reshape(-1)
    if pred_norm.shape != y.shape:
        raise ValueError(f"predictor returned shape {pred_norm.shape}, expected {y.shape}")
    t_mpa = spec.denormalize(target_field, y)
    p_mpa = spec.denormalize(target_field, pred_norm)
    return report_from_pairs(t_mpa, p_mpa, spec, scale=scale, target_field=target_field)
