"""Parametric one-period balance-sheet model and its Monte Carlo sampler.

Assets are lognormal, liabilities follow a spliced mixture of two gamma laws
(body below a splice quantile, tail shifted to keep the distribution function
continuous), and the pair is linked by a Gaussian copula.  Scenario
generation is fully deterministic given a 64-bit seed: a SplitMix64
counter-based stream produces 53-bit uniforms, two per scenario, so any
block partition of the scenario index range reproduces identical output.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import gammainc, gammaincinv, ndtr, ndtri

from .samples import WeightedSample, write_scenario_csv

__all__ = [
    "BalanceSheetModel", "SimulationResult",
    "normal_cdf", "normal_quantile", "gamma_cdf", "gamma_quantile",
    "mixture_gamma_cdf", "mixture_gamma_quantile",
    "sample_scenarios", "loss_probability", "uniform_stream",
]


# --- special functions -----------------------------------------------------
# Backed by scipy.special (erf-based normal CDF, Wichura's AS241 inverse,
# regularized incomplete gamma); the wrappers add domain validation and the
# rate/shape parametrisation used throughout this package.

def normal_cdf(z):
    """Standard normal distribution function."""
    return ndtr(np.asarray(z, dtype=float)) if np.ndim(z) else float(ndtr(z))


def normal_quantile(u):
    """Inverse of the standard normal distribution function, u in (0, 1)."""
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr <= 0.0) or np.any(u_arr >= 1.0):
        raise ValueError("normal quantile requires u in (0, 1)")
    out = ndtri(u_arr)
    return float(out) if u_arr.ndim == 0 else out


def gamma_cdf(x, shape: float, rate: float):
    """Gamma distribution function with the given shape and rate."""
    if shape <= 0.0 or rate <= 0.0:
        raise ValueError("gamma shape and rate must be positive")
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0.0):
        raise ValueError("gamma cdf requires x >= 0")
    out = gammainc(shape, rate * x_arr)
    return float(out) if x_arr.ndim == 0 else out


def gamma_quantile(u, shape: float, rate: float):
    """Inverse gamma distribution function, u in (0, 1)."""
    if shape <= 0.0 or rate <= 0.0:
        raise ValueError("gamma shape and rate must be positive")
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr <= 0.0) or np.any(u_arr >= 1.0):
        raise ValueError("gamma quantile requires u in (0, 1)")
    out = gammaincinv(shape, u_arr) / rate
    return float(out) if u_arr.ndim == 0 else out


# --- model -----------------------------------------------------------------

@dataclass(frozen=True)
class BalanceSheetModel:
    asset_log_mean: float = 2.0
    asset_log_sd: float = 0.2
    body_shape: float = 1.0
    body_rate: float = 1.0
    tail_shape: float = 3.0
    tail_rate: float = 1.0
    splice_level: float = 0.975
    copula_correlation: float = 0.5
    initial_net_asset_value: float = 6.5

    def __post_init__(self) -> None:
        if self.asset_log_sd <= 0.0:
            raise ValueError("asset log-sd must be positive")
        for name in ("body_shape", "body_rate", "tail_shape", "tail_rate"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if not (0.0 < self.splice_level < 1.0):
            raise ValueError("splice level must lie strictly inside (0, 1)")
        # |rho| = 1 is tolerated for the degenerate comonotone/antimonotone sampler.
        if not (-1.0 <= self.copula_correlation <= 1.0):
            raise ValueError("copula correlation must lie in [-1, 1]")

    def with_params(self, **kwargs) -> "BalanceSheetModel":
        return replace(self, **kwargs)

    def to_json(self) -> str:
        return json.dumps({k: getattr(self, k) for k in self.__dataclass_fields__},
                          sort_keys=True)

    @classmethod
    def from_json(cls, payload: str | dict) -> "BalanceSheetModel":
        obj = json.loads(payload) if isinstance(payload, str) else payload
        return cls(**obj)

    # Splice constants: body quantile at the splice level and the shift that
    # glues the tail gamma continuously on top of it.
    def splice_point(self) -> float:
        return gamma_quantile(self.splice_level, self.body_shape, self.body_rate)

    def tail_shift(self) -> float:
        return gamma_quantile(self.splice_level, self.tail_shape, self.tail_rate) - self.splice_point()


def mixture_gamma_cdf(x, model: BalanceSheetModel):
    """Distribution function of the spliced liability law."""
    q0 = model.splice_point()
    shift = model.tail_shift()
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x_arr < 0.0):
        raise ValueError("liability cdf requires x >= 0")
    out = np.empty_like(x_arr)
    body = x_arr < q0
    out[body] = gamma_cdf(x_arr[body], model.body_shape, model.body_rate)
    out[~body] = gamma_cdf(x_arr[~body] + shift, model.tail_shape, model.tail_rate)
    return float(out[0]) if np.ndim(x) == 0 else out


def mixture_gamma_quantile(u, model: BalanceSheetModel):
    """Inverse of :func:`mixture_gamma_cdf`, u in (0, 1)."""
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any(u_arr <= 0.0) or np.any(u_arr >= 1.0):
        raise ValueError("liability quantile requires u in (0, 1)")
    q0 = model.splice_point()
    shift = model.tail_shift()
    out = np.empty_like(u_arr)
    body = u_arr < model.splice_level
    if np.any(body):
        out[body] = gamma_quantile(u_arr[body], model.body_shape, model.body_rate)
    if np.any(~body):
        out[~body] = gamma_quantile(u_arr[~body], model.tail_shape, model.tail_rate) - shift
    return float(out[0]) if np.ndim(u) == 0 else out


# --- deterministic uniform stream -------------------------------------------

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64 = np.uint64


def _splitmix64(state: np.ndarray) -> np.ndarray:
    z = state
    z = (z ^ (z >> _U64(30))) * _MIX1
    z = (z ^ (z >> _U64(27))) * _MIX2
    return z ^ (z >> _U64(31))


def uniform_stream(seed: int, start: int, count: int) -> np.ndarray:
    """Outputs ``start .. start+count-1`` of the SplitMix64 stream at ``seed``
    as 53-bit uniforms in (0, 1).

    Output ``i`` is ``mix(seed + (i + 1) * golden)``, so any block of indices
    can be generated independently of the rest of the stream.
    """
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        states = _U64(seed & 0xFFFFFFFFFFFFFFFF) + idx * _GOLDEN
        bits = _splitmix64(states)
    return ((bits >> _U64(11)).astype(np.float64) + 0.5) / float(1 << 53)


@dataclass(frozen=True)
class SimulationResult:
    """Scenario set of (delta E, L) with the asset companion column."""

    sample: WeightedSample
    assets: np.ndarray
    model: BalanceSheetModel
    seed: int

    def write_csv(self, path_or_buffer) -> None:
        header = f"model={self.model.to_json()} seed={self.seed} rng=splitmix64"
        write_scenario_csv(self.sample, path_or_buffer, assets=self.assets,
                           header_comment=header)


def sample_scenarios(model: BalanceSheetModel, m: int, seed: int) -> SimulationResult:
    """Draw ``m`` scenarios of (delta E, L) under the model, deterministically.

    Two uniforms per scenario are mapped to standard normals by quantile
    inversion; the 2x2 Cholesky factor correlates them; margins follow by
    quantile inversion of the lognormal and spliced liability laws.
    """
    if m < 1:
        raise ValueError("scenario count must be at least 1")
    u = uniform_stream(seed, 0, 2 * m)
    z1 = ndtri(u[0::2])
    z2 = ndtri(u[1::2])
    rho = model.copula_correlation
    zc = rho * z1 + math.sqrt(max(1.0 - rho * rho, 0.0)) * z2
    assets = np.exp(model.asset_log_mean + model.asset_log_sd * z1)
    liabilities = mixture_gamma_quantile(ndtr(zc), model)
    delta_e = assets - liabilities - model.initial_net_asset_value
    sample = WeightedSample(delta_e, liabilities, None)
    return SimulationResult(sample, assets, model, int(seed))


def loss_probability(sample: WeightedSample) -> float:
    """Weighted frequency of a negative net-asset-value change."""
    return float(np.sum(sample.weights[sample.x < 0.0]))
