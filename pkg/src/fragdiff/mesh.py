"""Cell-centered grids on a truncated size domain and weighted-L1 reductions.

The size axis (0, infinity) is truncated to [0, x_max] and split into N
cells with edges 0 = x_0 < x_1 < ... < x_N = x_max.  States hold one
density value per cell.  All integral quantities use the midpoint rule

    integral of x^m * phi  ~  sum_i  xbar_i^m * phi_i * dx_i,

which is exact for linear integrands and second-order accurate otherwise.
Moments of order m are defined for m > -1 only; below that the weight is
not integrable at the origin.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, UnsupportedOrderError

GRADINGS = ("uniform", "geometric")


@dataclass(frozen=True)
class Mesh:
    """Immutable 1-D cell mesh with centers, widths and grading metadata."""

    edges: np.ndarray
    grading: str = "uniform"
    ratio: float | None = None
    centers: np.ndarray = field(init=False, repr=False)
    widths: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=float)
        if edges.ndim != 1 or edges.size < 2:
            raise ConfigError("mesh needs at least two edges")
        if edges[0] != 0.0:
            raise ConfigError("first edge must be exactly 0")
        if np.any(np.diff(edges) <= 0):
            raise ConfigError("edges must be strictly increasing")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "centers", 0.5 * (edges[:-1] + edges[1:]))
        object.__setattr__(self, "widths", np.diff(edges))

    @property
    def n_cells(self) -> int:
        return self.widths.size

    @property
    def x_max(self) -> float:
        return float(self.edges[-1])

    def tail_slice(self, fraction: float = 0.05) -> slice:
        """Index range of the outermost cells covering `fraction` of [0, x_max]."""
        cut = self.x_max * (1.0 - fraction)
        start = int(np.searchsorted(self.centers, cut))
        return slice(min(start, self.n_cells - 1), self.n_cells)


def build_mesh(x_max: float, n_cells: int, grading: str = "uniform",
               ratio: float | None = None) -> Mesh:
    """Build a uniform or geometrically graded mesh on [0, x_max].

    Geometric grading uses dx_{i+1} = ratio * dx_i with ratio in (1, 1.2],
    so the first cell has width x_max * (ratio - 1) / (ratio^N - 1).
    """
    if not x_max > 0:
        raise ConfigError(f"x_max must be positive, got {x_max}")
    if n_cells < 8:
        raise ConfigError(f"need at least 8 cells, got {n_cells}")
    if grading not in GRADINGS:
        raise ConfigError(f"unknown grading {grading!r}")
    if grading == "uniform":
        edges = np.linspace(0.0, x_max, n_cells + 1)
        return Mesh(edges=edges, grading="uniform")
    if ratio is None or not (1.0 < ratio <= 1.2):
        raise ConfigError("geometric grading needs ratio in (1, 1.2]")
    k = np.arange(n_cells + 1, dtype=float)
    edges = x_max * (ratio ** k - 1.0) / (ratio ** n_cells - 1.0)
    edges[0] = 0.0
    edges[-1] = x_max
    return Mesh(edges=edges, grading="geometric", ratio=ratio)


@dataclass
class State:
    """Cell-averaged size distribution at one instant."""

    values: np.ndarray
    mesh: Mesh
    time: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.mesh.n_cells,):
            raise ConfigError(
                f"state length {values.shape} does not match mesh ({self.mesh.n_cells},)")
        if not np.all(np.isfinite(values)):
            raise ConfigError("state contains non-finite values")
        self.values = values

    def copy_with(self, values: np.ndarray, time: float | None = None) -> "State":
        return State(values=values, mesh=self.mesh,
                     time=self.time if time is None else time)


def moment_of(mesh: Mesh, values: np.ndarray, m: float) -> float:
    """Signed moment sum_i xbar_i^m values_i dx_i; requires m > -1."""
    if m <= -1.0:
        raise UnsupportedOrderError(f"moment order must exceed -1, got {m}")
    return float(np.sum(mesh.centers ** m * values * mesh.widths))


def moment(state: State, m: float) -> float:
    return moment_of(state.mesh, state.values, m)


def mass(state: State) -> float:
    """First moment, the conserved quantity of the dynamics."""
    return moment(state, 1.0)


def weighted_norm_of(mesh: Mesh, values: np.ndarray, m: float) -> float:
    """Norm with weight x + x^m (equal to |.|_{X_1} + |.|_{X_m})."""
    if m < 1.0:
        raise UnsupportedOrderError(f"weighted norm needs m >= 1, got {m}")
    w = mesh.centers + mesh.centers ** m
    return float(np.sum(w * np.abs(values) * mesh.widths))


def weighted_norm(state: State, m: float) -> float:
    return weighted_norm_of(state.mesh, state.values, m)


def x1_distance_of(mesh: Mesh, u: np.ndarray, v: np.ndarray) -> float:
    return float(np.sum(mesh.centers * np.abs(u - v) * mesh.widths))


def x1_distance(a: State, b: State) -> float:
    if a.mesh is not b.mesh and not np.array_equal(a.mesh.edges, b.mesh.edges):
        raise ConfigError("states live on different meshes")
    return x1_distance_of(a.mesh, a.values, b.values)


def tail_mass_fraction(state: State, fraction: float = 0.05) -> float:
    """Share of |mass| sitting in the outermost cells; truncation-leak monitor."""
    sl = state.mesh.tail_slice(fraction)
    total = np.sum(state.mesh.centers * np.abs(state.values) * state.mesh.widths)
    if total == 0.0:
        return 0.0
    tail = np.sum((state.mesh.centers * np.abs(state.values) * state.mesh.widths)[sl])
    return float(tail / total)
