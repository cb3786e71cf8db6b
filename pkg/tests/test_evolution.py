import numpy as np
import pytest

from fragdiff import (ConstantRate, IntegratorConfig, PowerLawKernel, State,
                      Stepper, apply_generator, assemble_bundle, default_dt,
                      evolve, heat_apply_exact, mass, moment, solve_steady,
                      step, x1_distance)
from conftest import exact_equilibrium


def unit_mass_exponential(mesh, scale=1.0):
    values = np.exp(-mesh.centers / scale)
    values /= np.sum(mesh.centers * values * mesh.widths)
    return State(values=values, mesh=mesh)


def test_default_dt_formula(mitosis_512):
    dt = default_dt(mitosis_512)
    h_min = mitosis_512.mesh.widths.min()
    expected = min(0.25 * h_min ** 2, 0.5 / mitosis_512.death.max())
    assert dt == pytest.approx(expected)


def test_step_consistency_with_generator(mitosis_512):
    state = unit_mass_exponential(mitosis_512.mesh)
    gen = apply_generator(mitosis_512, state).values
    errors = []
    for dt in (1e-3, 5e-4):
        moved = step(mitosis_512, state, dt)
        errors.append(np.max(np.abs((moved.values - state.values) / dt - gen)))
    assert errors[0] / errors[1] == pytest.approx(2.0, rel=0.2)


def test_pure_heat_march_matches_exact_propagator(mesh_512):
    # negligible rate: marching to a fixed time agrees with the image-kernel
    # propagator at first order in dt, down to the spatial floor
    bundle = assemble_bundle(mesh_512, ConstantRate(1e-12), PowerLawKernel(0.0))
    state = unit_mass_exponential(mesh_512)
    horizon = 0.5
    exact = heat_apply_exact(state, horizon)
    errors = []
    for dt in (0.025, 0.0125):
        stepper = Stepper(bundle, dt)
        current = state
        for _ in range(int(round(horizon / dt))):
            current = stepper.step(current)
        errors.append(x1_distance(current, exact))
    assert errors[0] < 0.02
    assert errors[0] / errors[1] > 1.6       # dominated by the O(dt) term


def test_equilibrium_is_stationary(mitosis_2048):
    mesh = mitosis_2048.mesh
    psi = State(values=exact_equilibrium(mesh.centers), mesh=mesh)
    dt = 1e-3
    moved = step(mitosis_2048, psi, dt)
    drift = x1_distance(moved, psi) / dt
    # residual-speed of the exact profile is bounded by scheme + space error
    assert drift < 5e-4


def test_zero_initial_stays_zero(mitosis_512):
    zero = State(values=np.zeros(mitosis_512.mesh.n_cells), mesh=mitosis_512.mesh)
    config = IntegratorConfig(dt=1e-3, t_end=0.05)
    trajectory = evolve(mitosis_512, zero, config)
    assert np.all(trajectory.final.values == 0.0)
    assert trajectory.max_drift == 0.0


@pytest.mark.parametrize("scheme", ["imex_euler", "crank_nicolson_imex",
                                    "fully_implicit"])
def test_mass_conserved_all_schemes(mitosis_512, scheme):
    state = unit_mass_exponential(mitosis_512.mesh)
    config = IntegratorConfig(scheme=scheme, dt=2e-3, t_end=0.5)
    trajectory = evolve(mitosis_512, state, config)
    assert trajectory.max_drift <= 1e-10


def test_mass_conserved_growing_rate(linear_rate_512):
    # birth and death act at the same time level, so conservation is exact
    # for unbounded rates as well
    state = unit_mass_exponential(linear_rate_512.mesh)
    config = IntegratorConfig(dt=5e-3, t_end=1.0)
    trajectory = evolve(linear_rate_512, state, config)
    assert trajectory.max_drift <= 1e-10


def test_positivity_random_data(linear_rate_512, rng):
    mesh = linear_rate_512.mesh
    config = IntegratorConfig(dt=5e-3, t_end=0.25)
    for _ in range(5):
        values = rng.random(mesh.n_cells) * np.exp(-0.2 * mesh.centers)
        trajectory = evolve(linear_rate_512, State(values=values, mesh=mesh), config)
        assert trajectory.min_value >= -1e-13


def test_positivity_warning_on_large_dt(linear_rate_512):
    with pytest.warns(UserWarning, match="positivity"):
        Stepper(linear_rate_512, dt=0.1, scheme="imex_euler")


def test_moment_ceiling_along_trajectory(linear_rate_512):
    from fragdiff import moment_ceiling
    ceiling = moment_ceiling(linear_rate_512.rate, linear_rate_512.kernel,
                             3.0, linear_rate_512.mesh.x_max)
    state = unit_mass_exponential(linear_rate_512.mesh, scale=1.5)
    config = IntegratorConfig(dt=5e-3, t_end=3.0, moment_order=3.0)
    trajectory = evolve(linear_rate_512, state, config)
    cap = max(trajectory.moments[3.0][0], ceiling.mu)
    assert np.max(trajectory.moments[3.0]) <= cap * (1 + 1e-6)


def test_difference_contraction(mitosis_512, rng):
    # the weighted-L1 distance of two evolutions never grows
    mesh = mitosis_512.mesh
    stepper = Stepper(mitosis_512, 2e-3)
    u = rng.random(mesh.n_cells) * np.exp(-0.3 * mesh.centers)
    v = rng.random(mesh.n_cells) * np.exp(-0.3 * mesh.centers)
    su, sv = State(values=u, mesh=mesh), State(values=v, mesh=mesh)
    previous = x1_distance(su, sv)
    for _ in range(100):
        su = stepper.step(su)
        sv = stepper.step(sv)
        current = x1_distance(su, sv)
        assert current <= previous * (1 + 1e-12)
        previous = current


def test_long_run_converges_to_equilibrium(mitosis_512):
    state = unit_mass_exponential(mitosis_512.mesh)
    config = IntegratorConfig(dt=5e-3, t_end=40.0, output_every=1000)
    reference = solve_steady(mitosis_512).state
    trajectory = evolve(mitosis_512, state, config, reference=reference)
    assert trajectory.dist_ref[-1] <= 1e-3
    assert trajectory.dist_ref[-1] < trajectory.dist_ref[0]


def test_smoothing_of_rough_data(mitosis_512, rng):
    # a few diffusion steps wipe out cell-scale oscillation: the second
    # difference contracts far faster than the profile itself
    mesh = mitosis_512.mesh
    rough = (1 + rng.random(mesh.n_cells)) * np.exp(-mesh.centers)
    state = State(values=rough, mesh=mesh)
    d2_before = np.sum(np.abs(np.diff(rough, 2)))
    config = IntegratorConfig(dt=2e-4, t_end=4e-2)
    trajectory = evolve(mitosis_512, state, config)
    d2_after = np.sum(np.abs(np.diff(trajectory.final.values, 2)))
    assert d2_after < 0.1 * d2_before
    assert mass(trajectory.final) == pytest.approx(mass(state), rel=1e-10)


def test_trajectory_records(mitosis_512):
    state = unit_mass_exponential(mitosis_512.mesh)
    config = IntegratorConfig(dt=1e-3, t_end=0.02, output_every=5,
                              moment_order=2.5)
    trajectory = evolve(mitosis_512, state, config)
    assert trajectory.times.size == 21
    assert set(trajectory.moments) == {0.0, 1.0, 2.0, 2.5}
    assert len(trajectory.states) == 4
    assert trajectory.moments[1.0][0] == pytest.approx(1.0, rel=1e-12)
    assert np.all(trajectory.tail_fraction < 1e-12)
    assert moment(trajectory.final, 2.5) == pytest.approx(
        trajectory.moments[2.5][-1], rel=1e-12)
