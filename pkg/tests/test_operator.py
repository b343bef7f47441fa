import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

import degennes as dg
from degennes.operator import _lowest_symmetric_eigvals

FD = dg.Scheme.FINITE_DIFFERENCE_2
CO = dg.Scheme.COLLOCATION


def de_gennes(xi=0.0):
    return dg.OperatorSpec(dg.Family.DEGENNES, xi=xi)


# --- assembly oracles ------------------------------------------------------

def test_fd_even_oscillator_levels():
    # Neumann at 0 with the even potential t^2 selects the even full-line
    # oscillator levels 1, 5, 9.  Second-order scheme: the interior
    # stencil error at h = 0.01 is ~6e-6 on the ground level.
    disc = dg.Discretization(FD, 15.0, 1500)
    vals = dg.eigs(dg.assemble(de_gennes(), disc), 3).eigenvalues.real
    assert abs(vals[0] - 1.0) < 1e-5
    assert np.allclose(vals, [1.0, 5.0, 9.0], atol=3e-4)


def test_fd_refinement_is_second_order():
    disc1 = dg.Discretization(FD, 15.0, 1500)
    disc2 = dg.Discretization(FD, 15.0, 3000)
    e1 = dg.eigs(dg.assemble(de_gennes(), disc1), 1).eigenvalues.real[0] - 1.0
    e2 = dg.eigs(dg.assemble(de_gennes(), disc2), 1).eigenvalues.real[0] - 1.0
    assert 3.5 < e1 / e2 < 4.5


def test_colloc_even_oscillator_levels(colloc160):
    vals = dg.eigs(dg.assemble(de_gennes(), colloc160), 3).eigenvalues.real
    assert np.allclose(vals, [1.0, 5.0, 9.0], atol=1e-8)


def test_complex_shift_is_exact_algebraic_split(colloc160):
    a0 = dg.assemble(de_gennes(0.0), colloc160)
    ac = dg.assemble(de_gennes(0.1j), colloc160)
    expected = a0.matrix - 0.2j * np.diag(a0.nodes) - 0.01 * np.eye(a0.n_dof)
    assert np.array_equal(ac.matrix, expected)


def test_montgomery_potential_value():
    spec = dg.OperatorSpec(dg.Family.MONTGOMERY, xi=0.0, montgomery_n=1)
    assert dg.potential_values(spec, 2.0) == pytest.approx(4.0)


def test_fd_neumann_row_in_physical_coordinates():
    # Unscaling the symmetrized matrix must reproduce the mirrored
    # ghost-point row (2 psi_0 - 2 psi_1)/h^2 + V_0 psi_0.
    disc = dg.Discretization(FD, 10.0, 50)
    op = dg.assemble(de_gennes(0.0), disc)
    h = 10.0 / 50
    s = 1.0 / np.sqrt(op.quad_weights)
    phys = (op.matrix * s[:, None]) / s[None, :]
    assert phys[0, 0] == pytest.approx(2.0 / h**2 + op.nodes[0] ** 2, rel=1e-12)
    assert phys[0, 1] == pytest.approx(-2.0 / h**2, rel=1e-12)
    assert phys[1, 0] == pytest.approx(-1.0 / h**2, rel=1e-12)


# --- structural invariants -------------------------------------------------

xi_strategy = st.builds(
    complex,
    st.floats(min_value=-3.0, max_value=4.0, allow_nan=False),
    st.floats(min_value=-0.4, max_value=0.4, allow_nan=False),
)


@settings(max_examples=20, deadline=None)
@given(xi=xi_strategy, scheme=st.sampled_from([FD, CO]))
def test_complex_symmetric_and_adjoint(xi, scheme):
    disc = dg.Discretization(scheme, 8.0, 28)
    A = dg.assemble(de_gennes(xi), disc).matrix
    assert np.array_equal(A, A.T)  # plain transpose, no conjugation
    Abar = dg.assemble(de_gennes(np.conj(xi)), disc).matrix
    assert np.array_equal(Abar, np.conj(A))
    if xi.imag != 0.0:
        assert np.max(np.abs(A - A.conj().T)) > 0  # never Hermitian


@settings(max_examples=20, deadline=None)
@given(xi=xi_strategy)
def test_montgomery_split(xi):
    disc = dg.Discretization(CO, 6.0, 24)
    spec0 = dg.OperatorSpec(dg.Family.MONTGOMERY, xi=xi.real, montgomery_n=2)
    specc = dg.OperatorSpec(dg.Family.MONTGOMERY, xi=xi, montgomery_n=2)
    op = dg.assemble(specc, disc)
    b = xi.imag
    expected = dg.assemble(spec0, disc).matrix.astype(complex)
    expected -= 2j * b * np.diag(op.weight_diag) + b * b * np.eye(op.n_dof)
    assert np.max(np.abs(op.matrix - expected)) == 0.0


def test_split_holds_on_many_random_strip_points(colloc160):
    rng = np.random.default_rng(7)
    disc = dg.Discretization(CO, 8.0, 24)
    eye = np.eye(24)
    for _ in range(100):
        a = rng.uniform(-3.0, 4.0)
        b = rng.uniform(-0.4, 0.4)
        op = dg.assemble(de_gennes(complex(a, b)), disc)
        base = dg.assemble(de_gennes(a), disc).matrix
        expected = base - 2j * b * np.diag(op.weight_diag) - b * b * eye
        assert np.max(np.abs(op.matrix - expected)) == 0.0


def test_real_xi_gives_real_symmetric_matrix(colloc160):
    A = dg.assemble(de_gennes(0.76), colloc160).matrix
    assert not np.iscomplexobj(A)
    assert np.array_equal(A, A.T)


def test_airy_ignores_xi():
    disc = dg.Discretization(CO, 20.0, 64)
    a1 = dg.assemble(dg.OperatorSpec(dg.Family.AIRY_COMPARISON, xi=0.0), disc)
    a2 = dg.assemble(dg.OperatorSpec(dg.Family.AIRY_COMPARISON, xi=1.0 + 0.2j), disc)
    assert np.array_equal(a1.matrix, a2.matrix)


def test_mass_matrix_is_identity(colloc160):
    op = dg.assemble(de_gennes(0.3), colloc160)
    assert np.array_equal(op.mass_matrix, np.eye(op.n_dof))


def test_dense_guard_for_large_banded():
    disc = dg.Discretization(FD, 15.0, 10000)
    op = dg.assemble(de_gennes(0.0), disc)
    with pytest.raises(dg.ConfigurationError):
        _ = op.matrix
    # banded eigensolve still works
    assert _lowest_symmetric_eigvals(op, 1)[0] == pytest.approx(1.0, abs=1e-6)


# --- Hermitian part --------------------------------------------------------

def test_form_min_real_parameter(colloc160):
    got = dg.real_part_form_min(de_gennes(0.76), colloc160)
    assert got == pytest.approx(dg.mu_1(0.76, colloc160), abs=1e-12)


def test_form_min_complex_shift(colloc160):
    got = dg.real_part_form_min(de_gennes(0.76 + 0.2j), colloc160)
    expected = dg.mu_1(0.76, colloc160) - 0.04
    assert got == pytest.approx(expected, abs=1e-10)


def test_form_min_at_imaginary_parameter(colloc160):
    got = dg.real_part_form_min(de_gennes(0.3j), colloc160)
    assert got == pytest.approx(1.0 - 0.09, abs=1e-8)


def test_form_min_banded_complex():
    disc = dg.Discretization(FD, 15.0, 2000)
    got = dg.real_part_form_min(de_gennes(0.5 + 0.1j), disc)
    expected = dg.mu_1(0.5, disc, adaptive_truncation=False) - 0.01
    assert got == pytest.approx(expected, abs=1e-10)


# --- dilation cross-check --------------------------------------------------

def test_dilation_identity_at_alpha_one():
    disc = dg.Discretization(CO, 15.0, 160)
    direct, rescaled = dg.dilation_check(1.0, 1, disc)
    assert direct == pytest.approx(rescaled, abs=1e-12)
    # exact analytic value: (1+t) exp(-(1+t)^2/2 + 1/2) solves the
    # shifted-well problem with Neumann derivative zero at the origin
    assert direct == pytest.approx(3.0, abs=1e-9)


def test_dilation_alpha_five():
    disc = dg.Discretization(CO, 10.0, 240)
    direct, rescaled = dg.dilation_check(5.0, 1, disc)
    assert abs(direct - rescaled) <= 1e-6


def test_dilation_alpha_ten_second_branch():
    disc = dg.Discretization(CO, 10.0, 240)
    direct, rescaled = dg.dilation_check(10.0, 2, disc)
    assert abs(direct - rescaled) <= 1e-5


# --- validation errors -----------------------------------------------------

def test_invalid_discretization_rejected():
    with pytest.raises(dg.ConfigurationError):
        dg.Discretization(CO, 15.0, 4)
    with pytest.raises(dg.ConfigurationError):
        dg.Discretization(CO, -1.0, 64)


def test_montgomery_index_domain_error():
    with pytest.raises(dg.DomainError):
        dg.OperatorSpec(dg.Family.MONTGOMERY, xi=0.0, montgomery_n=0)


def test_dilation_validation():
    disc = dg.Discretization(CO, 10.0, 64)
    with pytest.raises(dg.ConfigurationError):
        dg.dilation_check(0.5, 1, disc)
