"""Discrete generator: diffusion, death and mass-conserving birth operators.

The generator acting on cell values phi is

    (G phi)_i = (L phi)_i - d_i phi_i + sum_{j>i} w_ij phi_j dx_j,

with L the flux-form second difference and d the effective death rate.

Diffusion uses two-point face fluxes; the Dirichlet condition phi(0) = 0
enters through the left face flux F_0 = phi_1 / xbar_1 (linear profile
through the boundary node).  This specific choice makes the discrete
x-weighted sum telescope exactly, so diffusion changes total mass only
through the truncation boundary at x_max.

Birth weights apportion fragment MASS exactly: donors in cell j are spread
over their cell, and the fragment mass a donor places in receiver cell i is
integrated in closed form (power-law kernels) or by Gauss quadrature.
Fragments that land inside the donor's own cell cancel part of its death
instead of appearing in the strictly lower triangle, so for every donor

    birth mass rate  =  effective death mass rate      (exactly),

and the conservation defect of the full generator is the boundary flux
alone.  Cell averages of a are mass-weighted for the same reason.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .coefficients import DaughterKernel, PowerLawKernel, RateModel
from .errors import ConfigError, PropertyViolation
from .mesh import Mesh, State

RIGHT_BCS = ("noflux", "dirichlet")
_GAUSS_NODES, _GAUSS_WEIGHTS = leggauss(24)


@dataclass(frozen=True)
class Tridiagonal:
    """Tridiagonal operator stored as bands (lower/diag/upper)."""

    lower: np.ndarray   # sub-diagonal, length n-1
    diag: np.ndarray    # length n
    upper: np.ndarray   # super-diagonal, length n-1

    @property
    def n(self) -> int:
        return self.diag.size

    def apply(self, v: np.ndarray) -> np.ndarray:
        out = self.diag * v
        out[:-1] += self.upper * v[1:]
        out[1:] += self.lower * v[:-1]
        return out

    def to_dense(self) -> np.ndarray:
        return (np.diag(self.diag) + np.diag(self.upper, 1) + np.diag(self.lower, -1))

    def shifted_banded(self, alpha: float, beta: float,
                       extra_diag: np.ndarray | None = None) -> np.ndarray:
        """Banded storage of alpha*I + beta*this (+ diag(extra)), for solve_banded."""
        n = self.n
        ab = np.zeros((3, n))
        ab[0, 1:] = beta * self.upper
        ab[1, :] = alpha + beta * self.diag
        if extra_diag is not None:
            ab[1, :] += extra_diag
        ab[2, :-1] = beta * self.lower
        return ab


def assemble_diffusion(mesh: Mesh, right_bc: str = "noflux",
                       diffusion_rate: float = 1.0) -> Tridiagonal:
    """Flux-form second difference with Dirichlet at 0 and configurable right end."""
    if right_bc not in RIGHT_BCS:
        raise ConfigError(f"unknown right boundary {right_bc!r}")
    if diffusion_rate <= 0:
        raise ConfigError("diffusion rate must be positive")
    xc, dx = mesh.centers, mesh.widths
    n = mesh.n_cells
    gap = xc[1:] - xc[:-1]
    lower = np.zeros(n - 1)
    diag = np.zeros(n)
    upper = np.zeros(n - 1)
    inv = 1.0 / gap
    # interior faces couple neighbours
    diag[:-1] -= inv / dx[:-1]
    upper += inv / dx[:-1]
    lower += inv / dx[1:]
    diag[1:] -= inv / dx[1:]
    # left face: F_0 = phi_0 / xbar_0 (profile vanishing at x = 0)
    diag[0] -= 1.0 / (xc[0] * dx[0])
    if right_bc == "dirichlet":
        diag[-1] -= 1.0 / ((mesh.x_max - xc[-1]) * dx[-1])
    return Tridiagonal(lower=diffusion_rate * lower, diag=diffusion_rate * diag,
                       upper=diffusion_rate * upper)


@dataclass(frozen=True)
class BirthOperator:
    """Strictly lower-triangular gain term plus matching effective death.

    separable form: (B phi)_i = receiver_i * sum_{j>i} donor_j * phi_j, where
    donor_j already carries the donor-cell measure.  Custom kernels store the
    dense applied weights instead.
    """

    mesh: Mesh
    death: np.ndarray
    receiver: np.ndarray | None = None
    donor: np.ndarray | None = None
    dense_applied: np.ndarray | None = field(default=None, repr=False)

    @property
    def separable(self) -> bool:
        return self.receiver is not None

    def apply(self, v: np.ndarray) -> np.ndarray:
        if self.separable:
            suffix = np.cumsum((self.donor * v)[::-1])[::-1]
            out = np.zeros_like(v)
            out[:-1] = self.receiver[:-1] * suffix[1:]
            return out
        return self.dense_applied @ v

    def applied_matrix(self) -> np.ndarray:
        """Dense matrix K with (B phi) = K phi (strictly upper triangle)."""
        if self.separable:
            return np.triu(np.outer(self.receiver, self.donor), 1)
        return self.dense_applied

    def unit_weights(self) -> np.ndarray:
        """Weights per unit donor density, w_ij = K_ij / dx_j."""
        return self.applied_matrix() / self.mesh.widths[None, :]


def _assemble_birth_powerlaw(mesh: Mesh, rate: RateModel,
                             kernel: PowerLawKernel) -> BirthOperator:
    nu = kernel.nu
    edges, xc, dx = mesh.edges, mesh.centers, mesh.widths
    n = mesh.n_cells
    # receiver_i: fragment mass landing in cell i per unit donor strength,
    # converted to a density gain; exact power-law antiderivative.
    beta = edges[1:] ** (nu + 2.0) - edges[:-1] ** (nu + 2.0)
    receiver = beta / (xc * dx)
    # donor_j: integral over the donor cell of a(y) y^(-nu-1); the first cell
    # has no receivers below it, so its entry is never used.
    donor = np.zeros(n)
    donor[1:] = rate.cell_integrals(edges, -nu - 1.0)[1:]
    if np.any(donor < 0) or np.any(receiver < 0):
        raise PropertyViolation("negative birth weight from inadmissible coefficients")
    # in-cell fragments cancel death down to x_{i-1}^(nu+2) * donor_i / (xbar dx);
    # donor 1 keeps all its fragments and loses nothing.
    death = np.zeros(n)
    death[1:] = edges[1:-1] ** (nu + 2.0) * donor[1:] / (xc[1:] * dx[1:])
    return BirthOperator(mesh=mesh, death=death, receiver=receiver, donor=donor)


def _assemble_birth_custom(mesh: Mesh, rate: RateModel,
                           kernel: DaughterKernel) -> BirthOperator:
    edges, xc, dx = mesh.edges, mesh.centers, mesh.widths
    n = mesh.n_cells
    half = 0.5 * dx
    y_nodes = xc[:, None] + half[:, None] * _GAUSS_NODES[None, :]   # (n, q)
    y_weights = half[:, None] * _GAUSS_WEIGHTS[None, :]
    a_nodes = rate(y_nodes)
    mass_prod = np.sum(y_weights * a_nodes * y_nodes, axis=1)       # int a(y) y dy
    applied = np.zeros((n, n))
    death = np.zeros(n)
    for j in range(n):
        yq = y_nodes[j]
        wq = y_weights[j] * a_nodes[j]
        mass_to = np.zeros(j + 1)
        for i in range(j):
            frac = np.array([float(kernel.fragment_mass_below(edges[i + 1], y))
                             - float(kernel.fragment_mass_below(edges[i], y))
                             for y in yq])
            mass_to[i] = float(np.dot(wq, frac))
        self_ret = float(np.dot(wq, np.array(
            [float(kernel.fragment_mass_below(y, y))
             - float(kernel.fragment_mass_below(edges[j], y)) for y in yq])))
        raw_total = mass_to[:j].sum() + self_ret
        if raw_total <= 0.0:
            continue
        # enforce exact balance against the quadrature defect
        scale = mass_prod[j] / raw_total
        mass_to *= scale
        self_ret *= scale
        applied[:j, j] = mass_to[:j] / (xc[:j] * dx[:j])
        death[j] = (mass_prod[j] - self_ret) / (xc[j] * dx[j])
    if np.any(applied < 0) or np.any(death < -1e-14):
        raise PropertyViolation("negative birth weight from inadmissible coefficients")
    return BirthOperator(mesh=mesh, death=np.maximum(death, 0.0),
                         dense_applied=applied)


def assemble_birth(mesh: Mesh, rate: RateModel, kernel: DaughterKernel) -> BirthOperator:
    if isinstance(kernel, PowerLawKernel):
        return _assemble_birth_powerlaw(mesh, rate, kernel)
    return _assemble_birth_custom(mesh, rate, kernel)


@dataclass(frozen=True)
class OperatorBundle:
    """Assembled generator pieces on one mesh; immutable and reusable."""

    mesh: Mesh
    diffusion: Tridiagonal
    birth: BirthOperator
    rate: RateModel
    kernel: DaughterKernel
    right_bc: str = "noflux"
    diffusion_rate: float = 1.0

    @property
    def death(self) -> np.ndarray:
        return self.birth.death

    def apply(self, v: np.ndarray) -> np.ndarray:
        return self.diffusion.apply(v) - self.death * v + self.birth.apply(v)

    def apply_reaction(self, v: np.ndarray) -> np.ndarray:
        return self.birth.apply(v) - self.death * v

    def dense(self) -> np.ndarray:
        out = self.diffusion.to_dense()
        out[np.diag_indices_from(out)] -= self.death
        out += self.birth.applied_matrix()
        return out


def assemble_bundle(mesh: Mesh, rate: RateModel, kernel: DaughterKernel,
                    right_bc: str = "noflux", diffusion_rate: float = 1.0) -> OperatorBundle:
    diffusion = assemble_diffusion(mesh, right_bc, diffusion_rate)
    birth = assemble_birth(mesh, rate, kernel)
    return OperatorBundle(mesh=mesh, diffusion=diffusion, birth=birth,
                          rate=rate, kernel=kernel, right_bc=right_bc,
                          diffusion_rate=diffusion_rate)


def apply_generator(bundle: OperatorBundle, state: State) -> State:
    if state.mesh is not bundle.mesh and \
            not np.array_equal(state.mesh.edges, bundle.mesh.edges):
        raise ConfigError("state mesh does not match operator mesh")
    return state.copy_with(bundle.apply(state.values))


# ---------------------------------------------------------------------------
# half-line heat propagator by reflection
# ---------------------------------------------------------------------------

def kernel_value(t, z) -> np.ndarray:
    """Gaussian heat kernel exp(-z^2 / 4t) / sqrt(4 pi t); t broadcastable."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ConfigError("kernel time must be positive")
    z = np.asarray(z, dtype=float)
    return np.exp(-z * z / (4.0 * t)) / np.sqrt(4.0 * np.pi * t)


def image_kernel_value(t: float, x, y) -> np.ndarray:
    """Dirichlet half-line kernel k(t, x-y) - k(t, x+y); nonnegative for x, y > 0."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return kernel_value(t, x - y) - kernel_value(t, x + y)


def heat_apply_exact(state: State, t: float, clamp: bool | None = None) -> State:
    """Evolve a state by the half-line heat propagator, as a dense quadrature.

    O(N^2) reference evaluator for validation; never used in the time loop.
    Nonnegative input yields nonnegative output (kernel positivity), enforced
    against roundoff when `clamp` is true (default: input nonnegativity).
    """
    if t <= 0:
        raise ConfigError(f"propagation time must be positive, got {t}")
    xc = state.mesh.centers
    f_dx = state.values * state.mesh.widths
    out = np.empty_like(f_dx)
    chunk = 1024
    for lo in range(0, xc.size, chunk):
        hi = min(lo + chunk, xc.size)
        block = image_kernel_value(t, xc[lo:hi, None], xc[None, :])
        out[lo:hi] = block @ f_dx
    if clamp is None:
        clamp = bool(np.all(state.values >= 0.0))
    if clamp:
        np.maximum(out, 0.0, out=out)
    return state.copy_with(out, time=state.time + t)


def heat_growth_bound(m: float) -> float:
    """Growth-rate envelope for the weighted norm under pure diffusion.

    Defined for m = 1 (contraction) and m >= 3, where the dissipativity
    constant is 4^(1/(m-1)) * m * (m-3)^((m-3)/(m-1)); equal to 6 at m = 3.
    """
    if m == 1.0:
        return 0.0
    if m < 3.0:
        raise ConfigError("growth envelope available for m = 1 or m >= 3")
    return float(4.0 ** (1.0 / (m - 1.0)) * m * (m - 3.0) ** ((m - 3.0) / (m - 1.0)))
