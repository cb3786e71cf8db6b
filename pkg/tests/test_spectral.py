import numpy as np
import pytest

from fragdiff import (ConstantRate, IntegratorConfig, PowerLawKernel,
                      PowerRate, PropertyViolation, State, assemble_bundle,
                      build_mesh, decay_rate, dominant_eigenpair, evolve,
                      mass, solve_steady, spectral_gap, subdominant_spectrum,
                      x1_distance)
from conftest import exact_equilibrium


def test_dominant_eigenpair_mitosis(mitosis_512):
    lam, psi = dominant_eigenpair(mitosis_512)
    scale = float(np.max(np.abs(mitosis_512.dense())))
    assert abs(lam) <= 1e-8 * scale
    mesh = mitosis_512.mesh
    err = np.sum(mesh.centers * np.abs(psi.values - exact_equilibrium(mesh.centers))
                 * mesh.widths)
    assert err < 1e-3          # discretization-level agreement
    steady = solve_steady(mitosis_512).state
    assert x1_distance(psi, steady) <= 1e-8


def test_dominant_eigenpair_without_fragmentation(mesh_512):
    # pure absorption-free diffusion on the truncated domain: no conserved
    # profile survives, the leading mode decays
    bundle = assemble_bundle(mesh_512, ConstantRate(1e-14), PowerLawKernel(0.0),
                             right_bc="dirichlet")
    lam, _ = dominant_eigenpair(bundle)
    assert lam < 0.0


def test_spectral_gap_positive_and_stable():
    gaps = {}
    for n in (512, 1024):
        mesh = build_mesh(40.0, n)
        bundle = assemble_bundle(mesh, PowerRate(1.0), PowerLawKernel(0.0))
        gaps[n] = spectral_gap(bundle, k=8)
    assert gaps[512] > 0
    assert abs(gaps[512] - gaps[1024]) / gaps[1024] <= 0.05


def test_subdominant_modes_decay(linear_rate_512):
    values = subdominant_spectrum(linear_rate_512, k=8)
    assert values.size > 0
    assert np.all(values.real < 0)


def test_spectral_gap_requires_positive_rate(mesh_512):
    from fragdiff import TableRate
    vanishing = TableRate(np.array([0.0, 40.0]), np.array([0.0, 0.0]))
    bundle = assemble_bundle(mesh_512, vanishing, PowerLawKernel(0.0))
    with pytest.raises(PropertyViolation):
        spectral_gap(bundle)


def test_decay_rate_matches_gap(linear_rate_512):
    mesh = linear_rate_512.mesh
    steady = solve_steady(linear_rate_512).state
    f = np.exp(-mesh.centers)
    f /= np.sum(mesh.centers * f * mesh.widths)
    config = IntegratorConfig(dt=0.005, t_end=25.0, output_every=200)
    trajectory = evolve(linear_rate_512, State(values=f, mesh=mesh), config,
                        reference=steady)
    fit = decay_rate(trajectory, steady)
    assert fit.status == "ok"
    assert fit.nu_hat > 0
    assert fit.r_squared >= 0.999
    gap = spectral_gap(linear_rate_512, k=6)
    assert abs(fit.nu_hat - gap) / gap <= 0.1


def test_decay_rate_not_applicable_at_equilibrium(linear_rate_512):
    steady = solve_steady(linear_rate_512).state
    config = IntegratorConfig(dt=0.01, t_end=1.0)
    trajectory = evolve(linear_rate_512, steady, config, reference=steady)
    fit = decay_rate(trajectory, steady)
    assert fit.status in ("not_applicable", "no_decay")


def test_limit_depends_on_initial_mass_only(linear_rate_512):
    # two different shapes with the same mass end at the same profile
    mesh = linear_rate_512.mesh
    xc = mesh.centers
    shapes = [np.exp(-xc), xc ** 2 * np.exp(-2.0 * xc)]
    finals = []
    config = IntegratorConfig(dt=0.01, t_end=30.0, output_every=500)
    for shape in shapes:
        f = shape / np.sum(xc * shape * mesh.widths)
        trajectory = evolve(linear_rate_512, State(values=f, mesh=mesh), config)
        assert mass(trajectory.final) == pytest.approx(1.0, abs=1e-9)
        finals.append(trajectory.final)
    assert x1_distance(finals[0], finals[1]) <= 1e-6


def test_projection_identity(linear_rate_512, rng):
    # long-time limit is the steady profile scaled by the initial mass
    mesh = linear_rate_512.mesh
    steady = solve_steady(linear_rate_512).state
    f = rng.random(mesh.n_cells) * np.exp(-0.5 * mesh.centers)
    state = State(values=f, mesh=mesh)
    m0 = mass(state)
    config = IntegratorConfig(dt=0.01, t_end=30.0, output_every=500)
    trajectory = evolve(linear_rate_512, state, config)
    projected = steady.copy_with(steady.values * m0)
    assert x1_distance(trajectory.final, projected) <= 1e-6 * max(m0, 1.0)


def test_near_null_space_is_one_dimensional(mitosis_512):
    from fragdiff.spectral import kernel_dimension_check
    gap = spectral_gap(mitosis_512, k=6)
    check = kernel_dimension_check(mitosis_512, gap)
    assert check["separated"]
    assert check["smallest"] < 1e-8 * check["second_smallest"]
