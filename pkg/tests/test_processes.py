import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from supchain.errors import ConfigurationError, DomainError, KernelAuditError
from supchain.montecarlo import sample_points
from supchain.processes import (
    CppModel,
    IndicatorModel,
    KernelSpec,
    PowerLawIntensity,
    b_eps,
    cpp_path,
    draw_jumps,
    increment_bound,
    increment_variance,
    indicator_cross_moment,
    indicator_increment,
    indicator_moments,
    indicator_path,
    indicator_values,
    kernel_hoelder_audit,
    levy_khinchine_cf,
    region_mass,
    replicate_rng,
    second_moment_mass,
    truncated_variance,
    var_t0,
)

NU = PowerLawIntensity(0.5, 1.0)
LINEAR = KernelSpec("linear")
SINUSOID = KernelSpec("sinusoid")
HOELDER = KernelSpec("hoelder", p=0.75)


def cross_oracle(eps, s, t):
    # P(max(s,t) < U <= min(s,t) + eps) for U uniform on [0, 1]
    return max(0.0, min(min(s, t) + eps, 1.0) - max(s, t))


# --- indicator -------------------------------------------------------------

def test_indicator_boundaries():
    assert indicator_values(0.35, 0.1, [0.3])[0] == 1.0
    assert indicator_values(0.35, 0.1, [0.35])[0] == 0.0
    assert indicator_values(0.35, 0.1, [0.25])[0] == 1.0  # right end inclusive
    assert indicator_values(0.35, 0.1, [0.24])[0] == 0.0


@given(st.floats(0.0, 1.0), st.sampled_from([0.05, 0.1, 0.3, 0.9]))
def test_indicator_grid_sup_is_one(u, eps):
    g = 2
    while 2.0**-g > eps / 2:
        g += 1
    grid = np.arange(2**g + 1) / 2**g
    if u == 0.0:
        # U = 0 has probability zero and no t < 0 exists on the grid
        return
    assert indicator_values(u, eps, grid).max() == 1.0


def test_indicator_path_values_binary():
    p = indicator_path(IndicatorModel(0.1), np.linspace(0, 1, 101), seed=5, replicate_index=3)
    assert set(np.unique(p.values)) <= {0.0, 1.0}
    assert p.seed == 5 and p.replicate_index == 3


def test_indicator_path_empty_grid():
    with pytest.raises(DomainError):
        indicator_path(IndicatorModel(0.1), [])


def test_indicator_model_domain():
    for eps in (0.0, 1.0, -0.1):
        with pytest.raises(DomainError):
            IndicatorModel(eps)


def test_indicator_moment_examples():
    m = indicator_moments(IndicatorModel(0.1), 0.5, 0.5)
    assert m.second_moment == m.cross_moment == 0.1
    m = indicator_moments(IndicatorModel(0.1), 0.25, 0.2)
    assert m.cross_moment == pytest.approx(0.05)
    m = indicator_moments(IndicatorModel(0.1), 0.97, 0.95)
    assert m.cross_moment == pytest.approx(0.03)
    assert m.increment_bound == pytest.approx(0.04)


@given(st.floats(0.01, 0.99), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_indicator_cross_moment_oracle(eps, s, t):
    assert indicator_cross_moment(eps, s, t) == pytest.approx(cross_oracle(eps, s, t), abs=1e-12)
    inc = indicator_increment(IndicatorModel(eps), s, t)
    assert inc <= 2 * min(eps, abs(t - s)) + 1e-12


def test_indicator_mc_second_moment():
    x = sample_points(IndicatorModel(0.1), [0.5], 20_000, seed=1)[:, 0]
    se = x.std(ddof=1) / math.sqrt(len(x))
    assert abs(x.mean() - 0.1) < 4 * se


# --- intensity ------------------------------------------------------------

def test_region_mass_example():
    assert region_mass(NU, 0.01, 1.0) == pytest.approx(36.0, rel=1e-14)
    q, _ = integrate.quad(lambda u: u**-1.5, 0.01, 1.0, epsabs=0, epsrel=1e-13)
    assert region_mass(NU, 0.01, 1.0) == pytest.approx(2 * q, rel=1e-10)


def test_region_mass_limits():
    masses = [region_mass(NU, 0.1 - 10.0**-k, 0.1) for k in range(2, 10)]
    assert all(a > b for a, b in zip(masses, masses[1:])) and masses[-1] < 1e-6
    growing = [region_mass(NU, 10.0**-k, 0.1) for k in range(2, 12)]
    assert all(a < b for a, b in zip(growing, growing[1:])) and growing[-1] > 1e5


@pytest.mark.parametrize("tau, eps", [(0.1, 0.1), (0.2, 0.1), (0.0, 0.1), (0.01, 1.5)])
def test_region_mass_domain(tau, eps):
    with pytest.raises(DomainError):
        region_mass(NU, tau, eps)


def test_intensity_domain():
    for rho in (0.0, 2.0, 2.5):
        with pytest.raises(DomainError):
            PowerLawIntensity(rho)


def test_second_moment_total():
    assert second_moment_mass(NU, 0.0, 1.0) == pytest.approx(NU.total_second_moment())


# --- B_eps and var_t0 -----------------------------------------------------

def test_b_eps_example():
    m = CppModel(NU, LINEAR, 0.1)
    q, _ = integrate.quad(lambda u: u * u * u**-1.5, 0.0, 0.1, epsabs=0, epsrel=1e-13)
    assert b_eps(m) == pytest.approx(2 * 0.1**1.5 / 1.5, rel=1e-14)
    assert b_eps(m) == pytest.approx(2 * q, rel=1e-10)


def test_b_eps_zero_cutoff():
    assert second_moment_mass(NU, 0.0, 0.0) == 0.0


@pytest.mark.parametrize("rho", [0.3, 0.5, 1.2])
def test_b_eps_scaling_and_monotone(rho):
    nu = PowerLawIntensity(rho)
    # analytic quantity only; pin tau so no sampling budget is needed
    vals = [b_eps(CppModel(nu, LINEAR, e, tau_fixed=e)) for e in (0.4, 0.2, 0.1, 0.05)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[0] / vals[1] == pytest.approx(2 ** (2 - rho), rel=1e-13)


def test_b_eps_uses_declared_constant():
    assert b_eps(CppModel(NU, SINUSOID, 0.1)) == pytest.approx(4 * math.pi**2 * b_eps(CppModel(NU, LINEAR, 0.1)))


def test_var_t0_examples():
    assert var_t0(CppModel(NU, LINEAR, 0.1), 0.0) == 0.0
    assert var_t0(IndicatorModel(0.1), 0.5) == 0.1
    assert var_t0(IndicatorModel(0.1), 0.95) == pytest.approx(0.05)


def midpoint(f, a, b, panels=10**6):
    x = a + (b - a) * (np.arange(panels) + 0.5) / panels
    return float(np.sum(f(x)) * (b - a) / panels)


@pytest.mark.parametrize("kernel", [SINUSOID, LINEAR, HOELDER])
@pytest.mark.parametrize("t0", [0.0, 0.3, 0.7])
def test_var_t0_quadrature(kernel, t0):
    eps = 0.1
    m = CppModel(NU, kernel, eps, t0=0.5)
    k2 = midpoint(lambda w: kernel(t0, w) ** 2, 0.0, 1.0)
    # u**2 * |u|**(-1.5) = u**0.5; substitute u = x**2 to smooth the endpoint
    u2 = 2 * midpoint(lambda x: 2 * x * (x * x) ** 0.5, 0.0, math.sqrt(eps))
    expected = k2 * u2
    got = var_t0(m, t0)
    if expected == 0:
        assert got == 0
    else:
        assert abs(got - expected) / expected < 1e-6


def test_increment_variance_closed_forms():
    m = CppModel(NU, SINUSOID, 0.1)
    for s, t in ((0.2, 0.7), (0.1, 0.15)):
        kk = midpoint(lambda w: (SINUSOID(t, w) - SINUSOID(s, w)) ** 2, 0.0, 1.0)
        assert increment_variance(m, s, t, truncated=False) == pytest.approx(
            kk * second_moment_mass(NU, 0.0, 0.1), rel=1e-9)
    h = CppModel(NU, HOELDER, 0.1)
    kk = midpoint(lambda w: (HOELDER(0.7, w) - HOELDER(0.2, w)) ** 2, 0.0, 1.0)
    assert increment_variance(h, 0.2, 0.7, truncated=False) == pytest.approx(
        kk * second_moment_mass(NU, 0.0, 0.1), rel=1e-8)


@pytest.mark.parametrize("kernel", [LINEAR, SINUSOID, HOELDER])
def test_increment_below_bound(kernel):
    m = CppModel(NU, kernel, 0.1)
    for s, t in ((0.0, 1.0), (0.2, 0.7), (0.4, 0.41)):
        assert increment_variance(m, s, t, truncated=False) <= increment_bound(m, s, t) * (1 + 1e-12)


# --- truncation -------------------------------------------------------------

@pytest.mark.parametrize("kernel", [LINEAR, SINUSOID, HOELDER])
@pytest.mark.parametrize("eps", [0.2, 0.05])
def test_truncation_tolerance(kernel, eps):
    m = CppModel(NU, kernel, eps, t0=0.7)
    assert m.tau < eps
    assert m.neglected_variance_bound <= 1e-4 * var_t0(m, 0.7) * (1 + 1e-12)


def test_truncation_zero_kernel_at_t0():
    m = CppModel(NU, LINEAR, 0.1, t0=0.0)
    ref = second_moment_mass(NU, 0.0, 0.1)
    assert m.neglected_variance_bound == pytest.approx(1e-4 * ref, rel=1e-10)


def test_truncation_unachievable():
    with pytest.raises(ConfigurationError):
        CppModel(PowerLawIntensity(1.9), LINEAR, 1.0, tau_rel_tol=1e-12)


def test_empty_region_gives_zero_path():
    m = CppModel(NU, LINEAR, 0.1, tau_fixed=0.1)
    assert m.expected_jumps == 0.0
    p = cpp_path(m, np.linspace(0, 1, 17), seed=1)
    assert np.all(p.values == 0.0)


# --- sampling ---------------------------------------------------------------

def test_jump_magnitudes_follow_power_law():
    m = CppModel(NU, LINEAR, 0.1, tau_fixed=1e-3)
    u, w = draw_jumps(m, replicate_rng(3, 0))
    mags = np.abs(u)
    assert np.all((mags >= 1e-3) & (mags < 0.1))
    a, b = 1e-3**-0.5, 0.1**-0.5
    cdf = lambda x: (a - x**-0.5) / (a - b)
    assert stats.kstest(mags, cdf).pvalue > 1e-3
    assert stats.kstest(w, "uniform").pvalue > 1e-3
    assert abs(np.mean(u > 0) - 0.5) < 4 * 0.5 / math.sqrt(len(u))
    assert stats.poisson(m.expected_jumps).cdf(len(u)) > 1e-4


def test_path_determinism():
    m = CppModel(NU, SINUSOID, 0.1)
    g = np.linspace(0, 1, 33)
    a = cpp_path(m, g, seed=7, replicate_index=12).values
    b = cpp_path(m, g, seed=7, replicate_index=12).values
    c = cpp_path(m, g, seed=7, replicate_index=13).values
    assert np.array_equal(a, b) and not np.array_equal(a, c)
    d = cpp_path(m, g, rng=replicate_rng(7, 12)).values
    assert np.array_equal(a, d)


def test_path_equals_direct_sum():
    m = CppModel(NU, HOELDER, 0.1)
    g = np.linspace(0, 1, 9)
    u, w = draw_jumps(m, replicate_rng(2, 4))
    direct = np.array([np.sum(np.abs(t - w) ** 0.75 * u) for t in g])
    np.testing.assert_allclose(cpp_path(m, g, seed=2, replicate_index=4).values, direct, rtol=1e-12, atol=1e-15)


@pytest.fixture(scope="module")
def linear_samples():
    m = CppModel(NU, LINEAR, 0.1, t0=0.7)
    pts = np.array([0.0, 0.2, 0.5, 0.7, 1.0])
    return m, pts, sample_points(m, pts, 20_000, seed=11)


def test_cpp_centered(linear_samples):
    _, _, x = linear_samples
    se = x.std(axis=0, ddof=1) / math.sqrt(len(x))
    ok = se == 0
    assert np.all(np.abs(x.mean(axis=0))[~ok] < 4 * se[~ok])
    assert np.all(x[:, ok] == 0)


def test_cpp_isometry(linear_samples):
    m, pts, x = linear_samples
    x2 = x[:, 3] ** 2
    se = x2.std(ddof=1) / math.sqrt(len(x2))
    assert abs(x2.mean() - truncated_variance(m, 0.7)) < 4 * se


def test_cpp_increment_bound(linear_samples):
    m, pts, x = linear_samples
    for i, j in ((1, 3), (0, 4), (2, 3)):
        d2 = (x[:, j] - x[:, i]) ** 2
        se = d2.std(ddof=1) / math.sqrt(len(d2))
        assert d2.mean() <= increment_bound(m, pts[i], pts[j]) + 4 * se


@pytest.mark.parametrize("kernel, zeta", [(LINEAR, 5.0), (SINUSOID, 3.0), (HOELDER, 4.0)])
def test_cpp_characteristic_function(kernel, zeta):
    m = CppModel(NU, kernel, 0.1, t0=0.7)
    x = sample_points(m, [0.7], 20_000, seed=5)[:, 0]
    c = np.cos(zeta * x)
    se = c.std(ddof=1) / math.sqrt(len(c))
    assert abs(c.mean() - levy_khinchine_cf(m, zeta, 0.7)) < 4 * se
    assert abs(np.sin(zeta * x).mean()) < 4 * np.sin(zeta * x).std(ddof=1) / math.sqrt(len(x))


def test_levy_khinchine_small_zeta():
    # second-order expansion: phi(zeta) ~ 1 - zeta**2 var / 2
    m = CppModel(NU, SINUSOID, 0.1)
    z = 1e-3
    assert 1 - levy_khinchine_cf(m, z, 0.3) == pytest.approx(z * z * var_t0(m, 0.3) / 2, rel=1e-4)


# --- kernel audit -----------------------------------------------------------

def test_audit_linear_equality():
    rep = kernel_hoelder_audit(LINEAR, 2000)
    assert rep.worst_ratio == 1.0 and rep.passed


@pytest.mark.parametrize("kernel", [SINUSOID, HOELDER, KernelSpec("hoelder", p=1.0), KernelSpec("hoelder", p=0.5)])
def test_audit_passes(kernel):
    rep = kernel_hoelder_audit(kernel, 20_000, seed=4)
    assert rep.worst_ratio <= 1 + 1e-9


@pytest.mark.parametrize("kernel", [SINUSOID, HOELDER])
def test_dense_grid_audit_oracle(kernel):
    g = np.linspace(0, 1, 201)
    s, t, w = np.meshgrid(g, g, g[::10], indexing="ij")
    mask = s != t
    num = (kernel(t, w) - kernel(s, w)) ** 2
    ratio = num[mask] / (kernel.c_omega * np.abs(t - s)[mask] ** (1 + kernel.alpha))
    assert ratio.max() <= 1 + 1e-9


def test_audit_detects_misdeclared():
    bad = KernelSpec("sinusoid", c_omega=1.0)
    with pytest.raises(KernelAuditError) as exc:
        kernel_hoelder_audit(bad, 5000)
    assert exc.value.report.worst_ratio > 30
    rep = kernel_hoelder_audit(bad, 5000, strict=False)
    assert not rep.passed


def test_audit_min_samples():
    with pytest.raises(DomainError):
        kernel_hoelder_audit(LINEAR, 999)


def test_kernel_spec_validation():
    with pytest.raises(DomainError):
        KernelSpec("hoelder", p=0.4)
    with pytest.raises(DomainError):
        KernelSpec("linear", p=0.7)
    with pytest.raises(DomainError):
        KernelSpec("cubic")
    assert KernelSpec("hoelder", p=0.75).alpha == 0.5
    assert SINUSOID.c_omega_bar == pytest.approx(4 * math.pi**2)


@settings(max_examples=30)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_omega_mean_square_quadrature(t, w_unused):
    for kernel in (LINEAR, SINUSOID, HOELDER):
        q, _ = integrate.quad(lambda w: float(kernel(t, w)) ** 2, 0, 1, points=[t], epsabs=1e-13, epsrel=1e-12)
        assert kernel.omega_mean_square(t) == pytest.approx(q, rel=1e-9, abs=1e-13)
