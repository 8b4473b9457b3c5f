"""Bates model parameters, the log-jump density and the change of variables.

Solver coordinates are ``x = log(S/K)``, ``y = sigma / sigma_v`` and
``tau = T - t``; the solver unknown is the per-unit-strike growth-factored
price ``u = exp((r + lam) tau) V / K``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

__all__ = [
    "BatesParams",
    "ContractSpec",
    "MarketPoint",
    "ConfigError",
    "DomainError",
    "xi_b",
    "jump_density_z",
    "to_solver_coords",
    "from_solver_coords",
    "put_payoff_transformed",
    "smoothed_payoff",
    "from_solver_value",
    "discount",
]


class ConfigError(ValueError):
    """Invalid configuration or parameter values."""


class DomainError(ValueError):
    """A query point lies outside the computational (or trimmed) domain."""


# JSON name -> attribute name; ``lambda`` is a Python keyword.
_PARAM_JSON = {
    "kappa": "kappa",
    "theta": "theta",
    "sigma_v": "sigma_v",
    "rho": "rho",
    "r": "r",
    "lambda": "lam",
    "gamma_j": "gamma_j",
    "delta_j": "delta_j",
}


@dataclass(frozen=True)
class BatesParams:
    """Risk-neutral Bates model constants.

    ``sigma_v`` is the volatility of variance and ``delta_j`` the standard
    deviation of the log jump size; both default to 0.1.
    """

    kappa: float = 2.0
    theta: float = 0.01
    sigma_v: float = 0.1
    rho: float = -0.5
    r: float = 0.05
    lam: float = 0.2
    gamma_j: float = -0.5
    delta_j: float = 0.1

    def __post_init__(self):
        if not all(math.isfinite(getattr(self, f.name)) for f in fields(self)):
            raise ConfigError("model parameters must be finite")
        if self.kappa < 0:
            raise ConfigError(f"kappa must be >= 0, got {self.kappa}")
        if self.theta < 0:
            raise ConfigError(f"theta must be >= 0, got {self.theta}")
        if self.sigma_v <= 0:
            raise ConfigError(f"sigma_v must be > 0, got {self.sigma_v}")
        if self.delta_j <= 0:
            raise ConfigError(f"delta_j must be > 0, got {self.delta_j}")
        if self.lam < 0:
            raise ConfigError(f"lambda must be >= 0, got {self.lam}")
        if abs(self.rho) > 1:
            raise ConfigError(f"|rho| must be <= 1, got {self.rho}")

    @property
    def xi_b(self) -> float:
        return xi_b(self)

    @property
    def mu_b(self) -> float:
        """Risk-neutral drift ``r - lam * xi_b``."""
        return self.r - self.lam * xi_b(self)

    def replace(self, **changes) -> "BatesParams":
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values.update(changes)
        return BatesParams(**values)

    @classmethod
    def from_dict(cls, data: dict) -> "BatesParams":
        unknown = set(data) - set(_PARAM_JSON)
        if unknown:
            raise ConfigError(f"unknown model field(s): {sorted(unknown)}")
        kwargs = {}
        for key, value in data.items():
            try:
                kwargs[_PARAM_JSON[key]] = float(value)
            except (TypeError, ValueError):
                raise ConfigError(f"model field {key!r} must be a number") from None
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {key: getattr(self, attr) for key, attr in _PARAM_JSON.items()}


@dataclass(frozen=True)
class ContractSpec:
    """European put with strike ``K`` and expiry ``T`` (years)."""

    K: float = 100.0
    T: float = 0.5
    kind: str = field(default="put")

    def __post_init__(self):
        if not (self.K > 0 and math.isfinite(self.K)):
            raise ConfigError(f"strike K must be > 0, got {self.K}")
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ConfigError(f"expiry T must be > 0, got {self.T}")
        if self.kind != "put":
            raise ConfigError(f"only European puts are supported, got {self.kind!r}")

    @classmethod
    def from_dict(cls, data: dict) -> "ContractSpec":
        unknown = set(data) - {"K", "T", "kind"}
        if unknown:
            raise ConfigError(f"unknown contract field(s): {sorted(unknown)}")
        try:
            kwargs = {k: (v if k == "kind" else float(v)) for k, v in data.items()}
        except (TypeError, ValueError):
            raise ConfigError("contract K and T must be numbers") from None
        return cls(**kwargs)


@dataclass(frozen=True)
class MarketPoint:
    """Spot ``S``, instantaneous variance ``sigma`` and time-to-expiry ``tau``."""

    S: float
    sigma: float
    tau: float = 0.0

    def __post_init__(self):
        if not self.S > 0:
            raise ConfigError(f"spot S must be > 0, got {self.S}")
        if not self.sigma > 0:
            raise ConfigError(f"variance sigma must be > 0, got {self.sigma}")
        if self.tau < 0:
            raise ConfigError(f"tau must be >= 0, got {self.tau}")


def xi_b(params: BatesParams) -> float:
    """Mean relative jump size ``E[e^Z] - 1`` for ``Z ~ N(gamma_j, delta_j^2)``."""
    return math.expm1(params.gamma_j + 0.5 * params.delta_j**2)


def jump_density_z(z, params: BatesParams):
    """Density of the log jump size, a normal with mean ``gamma_j``, std ``delta_j``."""
    d = params.delta_j
    z = np.asarray(z, dtype=float)
    return np.exp(-0.5 * ((z - params.gamma_j) / d) ** 2) / (math.sqrt(2.0 * math.pi) * d)


def to_solver_coords(p: MarketPoint, c: ContractSpec, params: BatesParams):
    """Map ``(S, sigma, tau)`` to ``(x, y, tau)``."""
    if p.tau > c.T:
        raise ConfigError(f"tau={p.tau} exceeds expiry T={c.T}")
    return math.log(p.S / c.K), p.sigma / params.sigma_v, p.tau


def from_solver_coords(x: float, y: float, tau: float, c: ContractSpec, params: BatesParams) -> MarketPoint:
    return MarketPoint(S=c.K * math.exp(x), sigma=y * params.sigma_v, tau=tau)


def put_payoff_transformed(x):
    """Per-unit-strike put payoff ``max(1 - e^x, 0)``."""
    return np.maximum(-np.expm1(x), 0.0)


def _cubic_bspline(t):
    t = np.abs(t)
    return np.where(t < 1, (4 - 6 * t**2 + 3 * t**3) / 6, np.where(t < 2, (2 - t) ** 3 / 6, 0.0))


def _kreiss_kernel(t):
    # Fourier symbol (sin(w/2)/(w/2))^4 (1 + 2/3 sin^2(w/2)): moments 1, 0, 0, 0
    return 4.0 / 3.0 * _cubic_bspline(t) - (_cubic_bspline(t + 1) + _cubic_bspline(t - 1)) / 6.0


_GL_T, _GL_W = np.polynomial.legendre.leggauss(12)


def smoothed_payoff(x, h: float):
    """Payoff averaged against the fourth-order Kreiss kernel of width ``6 h``.

    Only nodes whose kernel support contains the kink at ``x = 0`` change;
    elsewhere the point values are returned unchanged.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = put_payoff_transformed(x)
    for n in np.flatnonzero(np.abs(x) < 3 * h):
        # integrate kernel(t) * payoff(x - h t) over t in [-3, 3], split at knots and kink
        cuts = np.unique(np.concatenate([np.arange(-3.0, 4.0), [x[n] / h]]))
        cuts = cuts[(cuts >= -3) & (cuts <= 3)]
        total = 0.0
        for a, b in zip(cuts[:-1], cuts[1:]):
            t = 0.5 * (b - a) * _GL_T + 0.5 * (a + b)
            total += 0.5 * (b - a) * np.dot(_GL_W, _kreiss_kernel(t) * put_payoff_transformed(x[n] - h * t))
        out[n] = total
    return out


def discount(tau, params: BatesParams):
    """Factor ``exp(-(r + lam) tau)`` undoing the growth transformation."""
    return np.exp(-(params.r + params.lam) * np.asarray(tau, dtype=float))


def from_solver_value(u_value, tau, c: ContractSpec, params: BatesParams):
    """Option price ``V = K exp(-(r + lam) tau) u``."""
    if np.any(np.asarray(tau) < 0):
        raise ConfigError("tau must be >= 0")
    return c.K * discount(tau, params) * u_value
