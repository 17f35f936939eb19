"""Weighted finite scenario sets.

A :class:`WeightedSample` is the universal input to all empirical risk
estimators: ``M`` joint scenarios of a pair ``(x, y)`` with strictly positive
probability weights summing to one.  Depending on context ``x`` plays the net
asset value (or its change) and ``y`` the liabilities.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

WEIGHT_SUM_TOL = 1e-12

# Column aliases accepted when reading scenario CSVs.  Files produced by the
# simulator carry (deltaE, L, A); hand-written files use (x, y).
_X_ALIASES = ("x", "deltaE", "dE")
_Y_ALIASES = ("y", "L", "l")
_A_ALIASES = ("A", "a")


def _validate_weights(weights: np.ndarray) -> None:
    if weights.ndim != 1 or weights.size == 0:
        raise ValueError("weights must be a non-empty 1-d array")
    if not np.all(np.isfinite(weights)):
        raise ValueError("weights contain non-finite values")
    if np.any(weights <= 0.0):
        raise ValueError("weights must be strictly positive")
    total = float(np.sum(weights))
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise ValueError(f"weights must sum to 1 within {WEIGHT_SUM_TOL}, got {total!r}")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class WeightedSample:
    """Finite joint scenarios of (x, y) with probability weights."""

    x: np.ndarray
    y: np.ndarray
    weights: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        if x.ndim != 1 or y.ndim != 1 or x.size != y.size or x.size == 0:
            raise ValueError("x and y must be non-empty 1-d arrays of equal length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("scenario values must be finite")
        if self.weights is None:
            w = np.full(x.size, 1.0 / x.size)
        else:
            w = np.atleast_1d(np.asarray(self.weights, dtype=float))
            if w.size != x.size:
                raise ValueError("weights length must match the number of scenarios")
            _validate_weights(w)
        object.__setattr__(self, "x", _frozen(x))
        object.__setattr__(self, "y", _frozen(y))
        object.__setattr__(self, "weights", _frozen(w))

    @property
    def size(self) -> int:
        return self.x.size

    @classmethod
    def uniform(cls, x, y) -> "WeightedSample":
        return cls(np.asarray(x, dtype=float), np.asarray(y, dtype=float), None)

    def require_nonnegative_y(self, context: str = "this operation") -> None:
        if np.any(self.y < 0.0):
            raise ValueError(f"{context} requires nonnegative liabilities (y >= 0)")

    def shifted_x(self, amount: float) -> "WeightedSample":
        return WeightedSample(self.x + amount, self.y, self.weights)

    def mean_x(self) -> float:
        return float(np.dot(self.weights, self.x))

    def mean_y(self) -> float:
        return float(np.dot(self.weights, self.y))


def _parse_header(fields: list[str]) -> tuple[int | None, int, int, int | None]:
    cols = [f.strip() for f in fields]
    def find(aliases):
        for name in aliases:
            if name in cols:
                return cols.index(name)
        return None
    wi = cols.index("weight") if "weight" in cols else None
    xi = find(_X_ALIASES)
    yi = find(_Y_ALIASES)
    ai = find(_A_ALIASES)
    if xi is None or yi is None:
        raise ValueError(
            "scenario CSV must have columns weight,x,y (weight optional; "
            "deltaE/L/A accepted as aliases); got header " + ",".join(cols)
        )
    return wi, xi, yi, ai


def read_scenario_csv(path_or_buffer) -> tuple[WeightedSample, np.ndarray | None]:
    """Read a scenario CSV; returns the sample and the asset column if present.

    Header ``weight,x,y`` with the weight column optional (uniform weights
    then apply).  Lines starting with ``#`` are comments.  UTF-8, '.' decimal
    separator, no thousands separators.
    """
    if hasattr(path_or_buffer, "read"):
        text = path_or_buffer.read()
    else:
        with open(path_or_buffer, "r", encoding="utf-8") as fh:
            text = fh.read()
    rows = [ln.strip() for ln in text.splitlines()]
    rows = [ln for ln in rows if ln and not ln.startswith("#")]
    if not rows:
        raise ValueError("scenario CSV is empty")
    wi, xi, yi, ai = _parse_header(rows[0].split(","))
    data = []
    for ln in rows[1:]:
        parts = ln.split(",")
        data.append([float(p) for p in parts])
    if not data:
        raise ValueError("scenario CSV has a header but no rows")
    arr = np.asarray(data, dtype=float)
    weights = arr[:, wi] if wi is not None else None
    assets = arr[:, ai] if ai is not None else None
    return WeightedSample(arr[:, xi], arr[:, yi], weights), assets


def write_scenario_csv(sample: WeightedSample, path_or_buffer,
                       assets: np.ndarray | None = None,
                       header_comment: str | None = None,
                       columns: tuple[str, ...] | None = None) -> None:
    """Write a scenario CSV with deterministic shortest-roundtrip floats."""
    if columns is None:
        columns = ("weight", "x", "y") if assets is None else ("weight", "deltaE", "L", "A")
    buf = io.StringIO()
    if header_comment:
        buf.write(f"# {header_comment}\n")
    buf.write(",".join(columns) + "\n")
    for m in range(sample.size):
        row = [sample.weights[m], sample.x[m], sample.y[m]]
        if assets is not None:
            row.append(assets[m])
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    payload = buf.getvalue()
    if hasattr(path_or_buffer, "write"):
        path_or_buffer.write(payload)
    else:
        with open(path_or_buffer, "w", encoding="utf-8", newline="") as fh:
            fh.write(payload)
