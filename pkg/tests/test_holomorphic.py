import numpy as np
import pytest

import degennes as dg

CO = dg.Scheme.COLLOCATION


def de_gennes(xi=0.0):
    return dg.OperatorSpec(dg.Family.DEGENNES, xi=xi)


# --- isolation radius -------------------------------------------------------

def test_r0_positive_and_certified(band_wide, r0):
    assert r0 > 0
    per_point = np.diff(band_wide.mu, axis=1)[:, 0]
    assert np.all(per_point >= 4.0 * r0 - 1e-12)


def test_r0_needs_two_bands(colloc160):
    grid = np.arange(0.0, 2.0001, 0.5)
    single = dg.band_table(dg.Family.DEGENNES, grid, 1, colloc160)
    with pytest.raises(dg.CertificationError):
        dg.estimate_r0(single)


# --- resolvent norms --------------------------------------------------------

def test_resolvent_norm_equals_inverse_distance(colloc160, r0):
    rng = np.random.default_rng(3)
    for _ in range(5):
        a = float(rng.uniform(0.0, 2.0))
        op = dg.assemble(de_gennes(a), colloc160)
        ev = dg.eigs(op, 12).eigenvalues.real
        z = ev[0] + 1.5 * r0 * np.exp(1j * rng.uniform(0, 2 * np.pi))
        dist = np.min(np.abs(ev - z))
        norm = dg.resolvent_norm(op, z)
        assert norm * dist == pytest.approx(1.0, abs=1e-9)
        # the contour stays at distance >= r0 from the whole spectrum
        assert norm <= 1.0 / r0 + 1e-8


def test_resolvent_norm_on_positive_real_ray(colloc160, r0):
    op = dg.assemble(de_gennes(0.76), colloc160)
    mu1 = dg.eigs(op, 2).eigenvalues.real[0]
    z = mu1 + 1.5 * r0
    assert dg.resolvent_norm(op, z) == pytest.approx(2.0 / (3.0 * r0), rel=1e-10)


def test_resolvent_norm_complex_dtype_matches_real(colloc160, r0):
    op_r = dg.assemble(de_gennes(0.76), colloc160)
    op_c = dg.assemble(de_gennes(0.76 + 0.0j), colloc160)
    z = 0.3 + 0.2j
    assert dg.resolvent_norm(op_r, z) == pytest.approx(
        dg.resolvent_norm(op_c, z), rel=1e-12)


def test_resolvent_norm_near_singular(colloc160):
    op = dg.assemble(de_gennes(0.76), colloc160)
    mu1 = dg.eigs(op, 1).eigenvalues.real[0]
    with pytest.raises(dg.NearSingularError):
        dg.resolvent_norm(op, complex(mu1))


def test_weighted_resolvent_norm_on_contour(colloc160, r0):
    op = dg.assemble(de_gennes(0.76), colloc160)
    mu1 = dg.eigs(op, 1).eigenvalues.real[0]
    for theta in (0.0, 1.1, 2.5, 4.0):
        z = mu1 + 1.5 * r0 * np.exp(1j * theta)
        assert dg.weighted_resolvent_norm(op, z) <= r0 ** -0.5 + 1e-8


def test_weighted_resolvent_energy_bound_below_spectrum(colloc160):
    # for Re z <= 0 the energy identity gives |w R(z)| <= dist^{-1/2}
    op = dg.assemble(de_gennes(0.76), colloc160)
    mu1 = dg.eigs(op, 1).eigenvalues.real[0]
    z = -10.0
    dist = mu1 - z
    assert dg.weighted_resolvent_norm(op, z) <= dist ** -0.5


def test_weighted_resolvent_stable_under_refinement(r0):
    for n in (160, 220):
        disc = dg.Discretization(CO, 15.0, n)
        op = dg.assemble(de_gennes(0.76), disc)
        mu1 = dg.eigs(op, 1).eigenvalues.real[0]
        z = mu1 + 1.5 * r0 * np.exp(0.7j)
        assert dg.weighted_resolvent_norm(op, z) <= r0 ** -0.5 + 1e-8


def test_weighted_resolvent_requires_real_parameter(colloc160):
    op = dg.assemble(de_gennes(0.76 + 0.1j), colloc160)
    with pytest.raises(dg.ConfigurationError):
        dg.weighted_resolvent_norm(op, 0.5)


def test_resolvent_difference_zero_on_axis(colloc160, r0):
    mu1 = dg.mu_1(0.76, colloc160)
    z = mu1 + 1.5 * r0 * np.exp(0.3j)
    assert dg.resolvent_difference(0.76 + 0.0j, z, colloc160) == 0.0


def test_resolvent_difference_linear_in_imaginary_part(colloc160, r0):
    mu1 = dg.mu_1(0.76, colloc160)
    z = mu1 + 1.5 * r0 * np.exp(1j * np.pi / 4)
    eps = np.array([0.02, 0.04, 0.08, 0.16])
    norms = [dg.resolvent_difference(complex(0.76, b), z, colloc160)
             for b in eps]
    slope = np.polyfit(np.log(eps), np.log(norms), 1)[0]
    assert abs(slope - 1.0) <= 0.2


def test_resolvent_difference_conjugation_invariance(colloc160, r0):
    mu1 = dg.mu_1(0.76, colloc160)
    z = mu1 + 1.5 * r0 * np.exp(0.9j)
    d1 = dg.resolvent_difference(0.76 + 0.1j, z, colloc160)
    d2 = dg.resolvent_difference(0.76 - 0.1j, np.conj(z), colloc160)
    assert d1 == pytest.approx(d2, rel=1e-10)


# --- contour projector ------------------------------------------------------

def test_contour_spec_validation(r0):
    with pytest.raises(dg.ConfigurationError):
        dg.ContourSpec(center=1.0, radius=0.5 * r0, r0=r0)
    with pytest.raises(dg.ConfigurationError):
        dg.ContourSpec(center=1.0, radius=2.5 * r0, r0=r0)
    with pytest.raises(dg.ConfigurationError):
        dg.ContourSpec(center=1.0, radius=1.5 * r0, r0=r0, n_nodes=7)


def test_projection_real_parameter_is_ground_projector(colloc160, r0):
    mu1, _, psi0 = dg.real_ground_state(0.76, colloc160)
    contour = dg.make_contour(mu1, r0)
    rp = dg.riesz_projection(0.76, contour, colloc160)
    assert np.max(np.abs(rp.matrix - np.outer(psi0, psi0))) <= 1e-8
    assert rp.trace == pytest.approx(1.0, abs=1e-10)


def test_projection_rank_one_off_axis(colloc160, r0):
    mu1, _, _ = dg.real_ground_state(0.76, colloc160)
    rp = dg.riesz_projection(0.76 + 0.1j, dg.make_contour(mu1, r0), colloc160)
    assert abs(rp.trace - 1.0) <= 1e-6
    assert rp.idem_defect <= 1e-6
    assert abs(rp.overlap) >= 0.5


def test_projection_close_to_real_projector(colloc160, r0):
    mu1, _, _ = dg.real_ground_state(0.76, colloc160)
    contour = dg.make_contour(mu1, r0)
    p_complex = dg.riesz_projection(0.76 + 0.1j, contour, colloc160).matrix
    p_real = dg.riesz_projection(0.76, contour, colloc160).matrix
    import scipy.linalg as sla
    assert sla.svdvals(p_complex - p_real)[0] < 1.0


def test_contour_node_on_eigenvalue_raises(colloc160, r0):
    mu1, _, _ = dg.real_ground_state(0.76, colloc160)
    # first trapezoid node lands exactly on the ground eigenvalue
    bad = dg.ContourSpec(center=mu1 - 1.5 * r0, radius=1.5 * r0, r0=r0)
    with pytest.raises((dg.ContourError, dg.NearSingularError)):
        dg.riesz_projection(0.76, bad, colloc160)


# --- continuation -----------------------------------------------------------

def test_extension_real_axis_reproduces_band(colloc160, r0):
    res = dg.extend_mu(0.76 + 0.0j, colloc160, r0=r0)
    assert abs(res.F.imag) <= 1e-10
    assert res.F.real == pytest.approx(dg.mu_1(0.76, colloc160), abs=1e-9)
    assert res.method is dg.ExtensionMethod.PROJECTION_QUOTIENT


def test_extension_lower_bound_and_crosscheck(colloc160, r0):
    res = dg.extend_mu(0.76 + 0.1j, colloc160, r0=r0)
    assert res.lower_bound_slack >= -1e-8
    assert abs(res.F - res.f_direct) <= 1e-8
    assert res.eigen_residual <= 1e-8


def test_extension_schwarz_reflection(colloc160, r0):
    up = dg.extend_mu(0.9 + 0.12j, colloc160, r0=r0)
    dn = dg.extend_mu(0.9 - 0.12j, colloc160, r0=r0)
    assert abs(up.F - np.conj(dn.F)) <= 1e-10


def test_extension_outside_strip_raises(colloc160, r0):
    # the band slope is steep at -1, so a 0.25 shift moves the continued
    # eigenvalue out of any admissible contour: rank certification fails
    with pytest.raises(dg.StripExceededError):
        dg.extend_mu(-1.0 + 0.25j, colloc160, r0=r0)


def test_extension_needs_certificate(colloc160):
    with pytest.raises(dg.ConfigurationError):
        dg.extend_mu(0.76 + 0.1j, colloc160)


def test_quadrature_node_count_insensitive(colloc160, r0):
    f32 = dg.extend_mu(1.3 + 0.2j, colloc160, r0=r0, contour_nodes=32).F
    f64 = dg.extend_mu(1.3 + 0.2j, colloc160, r0=r0, contour_nodes=64).F
    assert abs(f32 - f64) <= 1e-9


# --- sweeps -----------------------------------------------------------------

@pytest.fixture(scope="module")
def small_sweep():
    disc = dg.Discretization(CO, 15.0, 128)
    return dg.strip_sweep((0.3, 1.3), 0.1, 0.25, 0.05, disc)


def test_sweep_certifies_requested_width(small_sweep):
    assert small_sweep.n_failed == 0
    assert small_sweep.eps_certified == pytest.approx(0.1)
    assert small_sweep.worst_slack() >= -1e-8


def test_sweep_grid_layout(small_sweep):
    assert small_sweep.re_values.size == 5
    assert small_sweep.im_values.size == 5
    assert len(small_sweep.points) == 25
    p = small_sweep.point(2, 1)
    assert p.xi == pytest.approx(0.55 + 0.0j)


def test_sweep_cauchy_riemann_diagnostic(small_sweep):
    # 3-point residual floor is h^2 |F'''| / 6 at the grid spacings
    assert small_sweep.cr_max is not None
    assert small_sweep.cr_max <= 0.05


def test_sweep_collects_failures_and_shrinks_eps(band_wide):
    # with the wide-range gap certificate (r0 ~ 0.44) the steep band slope
    # near -1 pushes the continued eigenvalue out of the contour at
    # |Im xi| = 0.25; with a band restricted to [-1.2, -0.8] the local gap
    # is ~5.7 and the same points certify fine
    disc = dg.Discretization(CO, 15.0, 128)
    sweep = dg.strip_sweep((-1.2, -0.8), 0.25, 0.2, 0.125, disc,
                           band=band_wide)
    assert sweep.n_failed > 0
    assert sweep.eps_certified < 0.25
    statuses = [p.error for p in sweep.points if not p.ok]
    assert any("StripExceeded" in s or "RankAmbiguity" in s for s in statuses)
    local = dg.strip_sweep((-1.2, -0.8), 0.25, 0.2, 0.125, disc)
    assert local.n_failed == 0


def test_sweep_flags_lost_coercivity():
    disc = dg.Discretization(CO, 15.0, 96)
    sweep = dg.strip_sweep((0.6, 1.0), 0.9, 0.4, 0.45, disc, eps_max=1.0)
    flags = {p.xi.imag: p.coercive for p in sweep.points}
    assert flags[0.0] is True
    assert flags[0.9] is False  # (Im xi)^2 exceeds the band minimum


def test_sweep_rejects_width_beyond_configured_max(colloc160):
    with pytest.raises(dg.ConfigurationError):
        dg.strip_sweep((0.0, 1.0), 0.5, 0.5, 0.25, colloc160)


# --- holomorphy diagnostics -------------------------------------------------

def test_cauchy_riemann_residual_oracles():
    f = lambda z: z**3 + 2.0 * z
    # 3-point Wirtinger residual carries the h^2 F'''/6 truncation term
    assert dg.cauchy_riemann_residual(f, 0.5 + 0.2j, 0.01) == pytest.approx(
        1e-4, rel=1e-3)
    assert dg.cauchy_riemann_residual(f, 0.5 + 0.2j, 0.01, order=4) <= 1e-12
    # an anti-holomorphic map is detected at unit scale
    g = lambda z: np.conj(z)
    assert dg.cauchy_riemann_residual(g, 0.3j, 0.01) == pytest.approx(1.0)
    with pytest.raises(dg.ConfigurationError):
        dg.cauchy_riemann_residual(f, 0.0, 0.01, order=3)
