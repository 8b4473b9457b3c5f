"""Uniform tensor grid on ``[-R1, R1] x [L2, R2]`` and the time step."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ConfigError

__all__ = ["GridSpec", "Grid", "build_grid", "common_nodes"]

_REL = 1e-9


def _as_count(length: float, h: float, name: str) -> int:
    q = length / h
    n = int(round(q))
    if n < 1 or abs(q - n) > _REL * max(1.0, q):
        raise ConfigError(f"{name}={length:g} is not an integer multiple of h={h:g}")
    return n


@dataclass(frozen=True)
class GridSpec:
    R1: float = 4.0
    L2: float = 0.1
    R2: float = 4.1
    h: float = 0.1
    T: float = 0.5
    mesh_ratio: float = 0.4
    n_steps: int | None = None  # overrides the mesh ratio (time-refinement studies)

    def __post_init__(self):
        if not self.h > 0:
            raise ConfigError(f"h must be > 0, got {self.h}")
        if not self.mesh_ratio > 0:
            raise ConfigError(f"mesh_ratio must be > 0, got {self.mesh_ratio}")
        if not self.L2 > 0:
            raise ConfigError(f"L2 must be > 0 (degenerate diffusion at y=0), got {self.L2}")
        if not self.R2 > self.L2:
            raise ConfigError(f"R2={self.R2} must exceed L2={self.L2}")
        if not self.R1 > 0:
            raise ConfigError(f"R1 must be > 0, got {self.R1}")
        if not self.T > 0:
            raise ConfigError(f"T must be > 0, got {self.T}")
        if self.n_steps is not None and self.n_steps < 1:
            raise ConfigError(f"n_steps must be >= 1, got {self.n_steps}")
        _as_count(self.R1, self.h, "R1")
        _as_count(self.R2 - self.L2, self.h, "R2-L2")

    def with_h(self, h: float) -> "GridSpec":
        return GridSpec(self.R1, self.L2, self.R2, h, self.T, self.mesh_ratio, self.n_steps)

    @classmethod
    def from_dict(cls, data: dict, T: float = 0.5) -> "GridSpec":
        allowed = {"R1", "L2", "R2", "h", "mesh_ratio", "n_steps"}
        unknown = set(data) - allowed
        if unknown:
            raise ConfigError(f"unknown grid field(s): {sorted(unknown)}")
        try:
            kwargs = {k: (int(v) if k == "n_steps" else float(v)) for k, v in data.items()}
        except (TypeError, ValueError):
            raise ConfigError("grid fields must be numbers") from None
        return cls(T=T, **kwargs)


@dataclass(frozen=True, eq=False)
class Grid:
    """Nodes ``x_i = i h`` (i = -N..N), ``y_j = L2 + j h`` (j = 0..M) and step ``k``."""

    spec: GridSpec
    N: int
    M: int
    x: np.ndarray
    y: np.ndarray
    k: float
    n_steps: int

    @property
    def h(self) -> float:
        return self.spec.h

    @property
    def shape(self) -> tuple[int, int]:
        return (2 * self.N + 1, self.M + 1)

    @property
    def size(self) -> int:
        return (2 * self.N + 1) * (self.M + 1)

    @property
    def T(self) -> float:
        return self.spec.T

    def flat_index(self, i: int, j: int) -> int:
        """Position of node (i, j) in the y-fastest ordering; ``i`` counts from the left edge."""
        return i * (self.M + 1) + j

    def node_of(self, index: int) -> tuple[float, float]:
        i, j = divmod(int(index), self.M + 1)
        return float(self.x[i]), float(self.y[j])


def build_grid(spec: GridSpec) -> Grid:
    h = spec.h
    N = _as_count(spec.R1, h, "R1")
    M = _as_count(spec.R2 - spec.L2, h, "R2-L2")
    x = np.arange(-N, N + 1) * h
    y = spec.L2 + np.arange(M + 1) * h
    if spec.n_steps is not None:
        n_steps = spec.n_steps
    else:
        k_max = spec.mesh_ratio * h * h
        # guard against ceil(125.0000000001) from rounding
        n_steps = max(1, math.ceil(spec.T / k_max * (1.0 - 1e-12)))
    k = spec.T / n_steps
    return Grid(spec=spec, N=N, M=M, x=x, y=y, k=k, n_steps=n_steps)


def common_nodes(coarse: Grid, fine: Grid):
    """Index arrays into ``fine`` of the nodes shared with ``coarse``.

    Returns ``(ix, iy)`` such that ``fine.x[ix] == coarse.x`` and
    ``fine.y[iy] == coarse.y``; the stride is ``coarse.h / fine.h``.
    """
    ratio = coarse.h / fine.h
    stride = int(round(ratio))
    if stride < 1 or abs(ratio - stride) > 1e-9 * ratio:
        raise ConfigError(f"grids do not nest: h={coarse.h:g} is not a multiple of h={fine.h:g}")
    if not (
        math.isclose(coarse.x[0], fine.x[0], abs_tol=1e-12)
        and math.isclose(coarse.x[-1], fine.x[-1], abs_tol=1e-12)
        and math.isclose(coarse.y[0], fine.y[0], abs_tol=1e-12)
        and math.isclose(coarse.y[-1], fine.y[-1], abs_tol=1e-12)
    ):
        raise ConfigError("grids do not nest: domains differ")
    ix = np.arange(coarse.x.size) * stride
    iy = np.arange(coarse.y.size) * stride
    return ix, iy
