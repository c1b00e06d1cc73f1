"""Sampled curves with metadata, the common output record."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import isotonic_regression

__all__ = ["CurveTable", "CurveNonConvergence", "RAW_DEVIATION_LIMIT", "clean_probability_curve"]

RAW_DEVIATION_LIMIT = 0.01


class CurveNonConvergence(RuntimeError):
    """Some grid points did not converge; ``partial`` holds the flagged curve."""

    def __init__(self, message: str, partial: "CurveTable"):
        super().__init__(message)
        self.partial = partial


def _fmt(x: float) -> str:
    return repr(float(x))


@dataclass
class CurveTable:
    """A sampled function ``abscissa -> value``.

    ``value`` is the cleaned ordinate (clamped, and made monotone for CDF
    type curves); ``raw_value`` keeps the unprocessed numbers and
    ``reliable`` marks points whose raw value stayed within
    ``RAW_DEVIATION_LIMIT`` of the cleaned one.
    """

    abscissa: np.ndarray
    value: np.ndarray
    raw_value: Optional[np.ndarray] = None
    reliable: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.abscissa = np.asarray(self.abscissa, dtype=float)
        self.value = np.asarray(self.value, dtype=float)
        if self.raw_value is None:
            self.raw_value = self.value.copy()
        self.raw_value = np.asarray(self.raw_value, dtype=float)
        if self.reliable is None:
            self.reliable = np.ones(self.value.shape, dtype=bool)
        self.reliable = np.asarray(self.reliable, dtype=bool)
        n = self.abscissa.size
        if not (self.value.size == self.raw_value.size == self.reliable.size == n):
            raise ValueError("curve columns must have equal length")
        if n > 1 and np.any(np.diff(self.abscissa) <= 0):
            raise ValueError("abscissa must be strictly increasing")

    def __len__(self) -> int:
        return self.abscissa.size

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["abscissa", "value", "raw_value", "reliable_flag"])
        for a, v, r, ok in zip(self.abscissa, self.value, self.raw_value, self.reliable):
            writer.writerow([_fmt(a), _fmt(v), _fmt(r), int(bool(ok))])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def to_dict(self) -> dict:
        return {
            "abscissa": self.abscissa.tolist(),
            "value": self.value.tolist(),
            "raw_value": self.raw_value.tolist(),
            "reliable_flag": [bool(x) for x in self.reliable],
            "meta": self.meta,
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True, default=_json_default)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    @classmethod
    def from_csv(cls, path, meta: Optional[dict] = None) -> "CurveTable":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls(
            [float(r["abscissa"]) for r in rows],
            [float(r["value"]) for r in rows],
            [float(r["raw_value"]) for r in rows],
            [bool(int(r["reliable_flag"])) for r in rows],
            dict(meta or {}),
        )

    @classmethod
    def from_json(cls, path) -> "CurveTable":
        with open(path) as fh:
            d = json.load(fh)
        return cls(d["abscissa"], d["value"], d["raw_value"], d["reliable_flag"], d.get("meta", {}))


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


def clean_probability_curve(raw, monotone: Optional[str] = None) -> tuple[np.ndarray, np.ndarray, float]:
    """Clamp to [0, 1] and optionally enforce monotonicity.

    ``monotone`` is ``"increasing"``, ``"decreasing"`` or None. Returns the
    cleaned values, per-point reliability flags and the largest deviation.
    """
    raw = np.asarray(raw, dtype=float)
    finite = np.isfinite(raw)
    vals = np.clip(np.where(finite, raw, 0.0), 0.0, 1.0)
    if monotone is not None and vals.size > 1:
        vals = isotonic_regression(vals, increasing=(monotone == "increasing")).x
        vals = np.clip(vals, 0.0, 1.0)
    dev = np.where(finite, np.abs(raw - vals), math.inf)
    reliable = dev <= RAW_DEVIATION_LIMIT
    return vals, reliable, float(np.max(dev)) if dev.size else 0.0
