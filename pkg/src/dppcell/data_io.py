"""Loading and saving point data, intensity estimation, preset models and config files."""

from __future__ import annotations

import csv
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .kernels import Family, KernelModel
from .simulation.patterns import PointPattern, Window

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = [
    "DataError",
    "Dataset",
    "PRESETS",
    "estimate_intensity",
    "load_config",
    "load_pattern",
    "model_from_config",
    "preset",
    "preset_names",
    "save_pattern",
]

log = logging.getLogger(__name__)


class DataError(ValueError):
    """Unreadable, malformed or empty input data."""


# fitted parameters (lambda per km^2, alpha in km, nu) for two urban BS deployments
PRESETS = {
    "houston-gauss": (Family.GAUSS, 0.4492, 0.8417, None),
    "houston-cauchy": (Family.CAUCHY, 0.4492, 1.558, 3.424),
    "houston-gengamma": (Family.GENGAMMA, 0.4492, 2.539, 2.63),
    "la-gauss": (Family.GAUSS, 0.2347, 1.165, None),
    "la-cauchy": (Family.CAUCHY, 0.2347, 2.13, 3.344),
    "la-gengamma": (Family.GENGAMMA, 0.2347, 3.446, 2.505),
}

# observation windows (km) the presets were fitted on
PRESET_WINDOWS = {"houston": 16.0, "la": 28.0}


def preset_names() -> list:
    return list(PRESETS)


def preset(name: str) -> KernelModel:
    """Built-in fitted model by name, e.g. ``houston-gauss``."""
    key = name.strip().lower()
    if key not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    family, lam, alpha, nu = PRESETS[key]
    return KernelModel(family, lam, alpha, nu)


def preset_window(name: str) -> Window:
    return Window.square(PRESET_WINDOWS[name.strip().lower().split("-")[0]])


@dataclass
class Dataset:
    """A loaded point pattern with its provenance."""

    pattern: PointPattern
    name: str = ""
    source: str = ""
    warnings: list = field(default_factory=list)
    duplicates_removed: int = 0

    def __post_init__(self):
        if len(self.pattern) < 1:
            raise DataError("dataset has no points")
        if not self.pattern.window.area > 0:
            raise DataError("dataset window has zero area")

    @property
    def intensity(self) -> float:
        return estimate_intensity(self)


def estimate_intensity(data: Union[Dataset, PointPattern]) -> float:
    """Points per unit area of the observation window."""
    pat = data.pattern if isinstance(data, Dataset) else data
    return len(pat) / pat.window.area


def load_pattern(path, window=None, x_col: str = "x_km", y_col: str = "y_km", name: Optional[str] = None) -> Dataset:
    """Read a CSV of planar coordinates in km.

    ``window`` is a :class:`Window`, a ``(width, height)`` or
    ``(x0, x1, y0, y1)`` sequence, or None for the bounding box of the data.
    Points outside an explicit window are dropped and listed in
    ``Dataset.warnings``; exact duplicates are dropped and counted.
    """
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    try:
        ix, iy = header.index(x_col), header.index(y_col)
    except ValueError:
        raise DataError(f"{path}: header must contain columns {x_col!r} and {y_col!r}, got {header}") from None
    pts = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            x, y = float(row[ix]), float(row[iy])
        except (ValueError, IndexError):
            raise DataError(f"{path}:{lineno}: non-numeric row {row}") from None
        if not (math.isfinite(x) and math.isfinite(y)):
            raise DataError(f"{path}:{lineno}: non-finite coordinate")
        pts.append((x, y))
    arr = np.array(pts, dtype=float).reshape(-1, 2)
    warnings = []
    if window is None:
        if arr.shape[0] == 0:
            raise DataError(f"{path}: no data rows")
        lo, hi = arr.min(axis=0), arr.max(axis=0)
        win = Window(lo[0], hi[0], lo[1], hi[1])
    else:
        win = Window.parse(window)
        inside = win.contains(arr)
        for x, y in arr[~inside]:
            warnings.append(f"point ({x!r}, {y!r}) outside window {win.as_list()} dropped")
        arr = arr[inside]
    for w in warnings:
        log.warning(w)
    uniq, first = np.unique(arr, axis=0, return_index=True)
    dups = arr.shape[0] - uniq.shape[0]
    if dups:
        log.warning("%d duplicate points removed", dups)
    arr = arr[np.sort(first)]
    if arr.shape[0] == 0:
        raise DataError(f"{path}: no points left after filtering")
    return Dataset(PointPattern(arr, win), name or path.stem, str(path), warnings, dups)


def save_pattern(data: Union[Dataset, PointPattern], path) -> None:
    """Write ``x_km,y_km`` CSV with round-trip exact float formatting."""
    pat = data.pattern if isinstance(data, Dataset) else data
    pat.to_csv(path)


def load_config(path) -> dict:
    """Parse a JSON or TOML config file into a dict."""
    path = Path(path)
    try:
        text = path.read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from exc
    try:
        if path.suffix.lower() == ".json":
            return json.loads(text)
        return tomllib.loads(text.decode())
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise DataError(f"cannot parse config {path}: {exc}") from exc


def model_from_config(cfg: Union[dict, str, Path]) -> KernelModel:
    """Build a model from ``{family, lambda, alpha, nu}`` or ``{preset}``.

    Accepts a dict, a path to a JSON/TOML file, or a dict with a nested
    ``model`` table.
    """
    if not isinstance(cfg, dict):
        cfg = load_config(cfg)
    if "model" in cfg and isinstance(cfg["model"], dict):
        cfg = cfg["model"]
    if "preset" in cfg:
        return preset(cfg["preset"])
    try:
        family = cfg["family"]
        lam = cfg.get("lambda", cfg.get("lam"))
    except (KeyError, AttributeError):
        raise DataError("model config needs 'family' and 'lambda'") from None
    if lam is None:
        raise DataError("model config needs 'lambda'")
    return KernelModel(family, float(lam), cfg.get("alpha"), cfg.get("nu"))
