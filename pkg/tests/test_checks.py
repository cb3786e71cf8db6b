import numpy as np
import pytest

from fragdiff import (ConstantRate, CustomKernel, PowerLawKernel, PowerRate,
                      State, assemble_bundle, build_mesh)
from fragdiff.checks import (SampleProfile, WeightSpec, check_gain_smallness,
                             check_interpolation, check_kato, default_catalog,
                             kernel_positivity_samples)


def catalog_by_name(name):
    for profile in default_catalog():
        if profile.name == name:
            return profile
    raise KeyError(name)


# ---------------------------------------------------------------------------
# weighted Kato inequality
# ---------------------------------------------------------------------------

def test_kato_equality_for_one_signed_profile():
    report = check_kato(catalog_by_name("x_exp"), WeightSpec("x"))
    assert report.status == "pass"
    # sign(f) is constant: integrating by parts makes both sides equal
    assert abs(report.margin) <= 1e-8 * report.scale


def test_kato_strict_for_sign_changing_profile():
    report = check_kato(catalog_by_name("shifted_exp"), WeightSpec("power", m=2.0))
    assert report.status == "pass"
    assert report.margin > 1e-3        # genuinely strict inequality


def test_kato_all_catalog_and_weights():
    for profile in default_catalog():
        for weight in (WeightSpec("x"), WeightSpec("power", m=2.0),
                       WeightSpec("power", m=3.0),
                       WeightSpec("capped_power", m=2.0, cap=8.0)):
            report = check_kato(profile, weight)
            assert report.status == "pass", (profile.name, weight.kind, report)


def test_kato_random_scalings():
    rng = np.random.default_rng(3)
    base = catalog_by_name("sin_exp")
    for _ in range(50):
        c = float(rng.uniform(0.05, 20.0))
        scaled = SampleProfile("scaled", lambda x, c=c: c * base.f(x),
                               lambda x, c=c: c * base.d1(x),
                               lambda x, c=c: c * base.d2(x),
                               sign_roots=base.sign_roots)
        report = check_kato(scaled, WeightSpec("x"))
        assert report.status == "pass"


def test_kato_inconclusive_on_missing_roots():
    base = catalog_by_name("shifted_exp")
    hidden = SampleProfile("hidden", base.f, base.d1, base.d2, sign_roots=())
    report = check_kato(hidden, WeightSpec("x"))
    assert report.status == "inconclusive"


# ---------------------------------------------------------------------------
# interpolation inequality and pointwise bounds
# ---------------------------------------------------------------------------

def test_interpolation_x_exp_m0():
    report = check_interpolation(catalog_by_name("x_exp"), 0.0)
    assert report.status == "pass"
    assert report.lhs == pytest.approx(1.0, rel=1e-10)      # integral of x e^-x
    # the bound 2 sqrt(|f''| * |f|) with |f|_{X_1} = 2
    assert report.rhs == pytest.approx(2.0 * np.sqrt(report.d2_norm * 2.0), rel=1e-10)
    assert report.pointwise_sup <= report.d2_norm
    assert report.pointwise_slope <= report.d2_norm


@pytest.mark.parametrize("m", [-0.9, -0.5, 0.0, 0.5, 0.9, 0.99])
def test_interpolation_orders(m):
    for name in ("x_exp", "odd_gauss", "two_roots"):
        report = check_interpolation(catalog_by_name(name), m)
        assert report.status == "pass", (name, m, report)


def test_interpolation_rejects_outside_range():
    from fragdiff import ConfigError
    with pytest.raises(ConfigError):
        check_interpolation(catalog_by_name("x_exp"), 1.0)


# ---------------------------------------------------------------------------
# kernel inequality sampling
# ---------------------------------------------------------------------------

def test_kernel_inequalities_sampled():
    rng = np.random.default_rng(11)
    report = kernel_positivity_samples(rng, n_samples=2000)
    assert report["positivity_ok"]
    assert report["monotone_ok"]


# ---------------------------------------------------------------------------
# integrated gain smallness along the absorption flow
# ---------------------------------------------------------------------------

def test_gain_smallness_linear_rate():
    mesh = build_mesh(40.0, 256)
    bundle = assemble_bundle(mesh, PowerRate(1.0), PowerLawKernel(0.0))
    xc = mesh.centers
    f = State(values=xc * np.exp(-xc), mesh=mesh)
    report = check_gain_smallness(bundle, f, m=2.0, t_max=0.5, dt=1e-3)
    assert report.status == "pass"
    # the integrated ratio stays below 1 up to t = 0.1
    idx = int(round(0.1 / 1e-3))
    assert report.ratio[idx] < 1.0
    assert np.all(np.diff(report.ratio) >= 0)


def test_gain_smallness_scale_invariant():
    mesh = build_mesh(40.0, 256)
    bundle = assemble_bundle(mesh, PowerRate(1.0), PowerLawKernel(0.0))
    xc = mesh.centers
    a = check_gain_smallness(bundle, State(values=xc * np.exp(-xc), mesh=mesh),
                             m=2.0, t_max=0.2, dt=1e-3)
    b = check_gain_smallness(bundle, State(values=7.5 * xc * np.exp(-xc), mesh=mesh),
                             m=2.0, t_max=0.2, dt=1e-3)
    assert np.allclose(a.ratio, b.ratio, rtol=1e-12)


def test_gain_smallness_weak_contraction_is_slower():
    # a kernel concentrated near the parent size has little moment
    # contraction; the integrated gain then eats the budget faster
    # (the concentration scale must stay resolvable on the mesh)
    mesh = build_mesh(20.0, 256)
    xc = mesh.centers
    f = State(values=xc * np.exp(-xc), mesh=mesh)
    healthy = assemble_bundle(mesh, ConstantRate(1.0), PowerLawKernel(0.0))
    p = 6.0
    concentrated = CustomKernel(
        lambda x, y, p=p: (p + 2.0) * x ** p * y ** (-p - 1.0), name="near-parent")
    from fragdiff import delta_m
    assert delta_m(concentrated, 2.0) < 0.15        # weak contraction indeed
    stressed = assemble_bundle(mesh, ConstantRate(1.0), concentrated)
    h = check_gain_smallness(healthy, f, m=2.0, t_max=0.4, dt=2e-3)
    s = check_gain_smallness(stressed, f, m=2.0, t_max=0.4, dt=2e-3)
    assert s.ratio[-1] > h.ratio[-1]
