"""Operator families and their discretized matrices.

Three families are supported:

* ``DEGENNES`` -- the half-line operator -d^2/dt^2 + (t - xi)^2 with a
  natural (Neumann) condition at t = 0, parameterized by a real or
  complex number xi;
* ``AIRY_COMPARISON`` -- the half-line Neumann operator -d^2/dt^2 + 2t,
  whose eigenvalues govern the deep-well limit of the first family
  (xi is ignored);
* ``MONTGOMERY`` -- the full-line operator
  -d^2/dt^2 + (xi - t^(n+1)/(n+1))^2 for integer n >= 1.

Coordinates
-----------
Both discretizations are assembled from the quadratic form
``integral(|psi'|^2 + V |psi|^2)`` and then rescaled by the square root
of the diagonal quadrature weights.  In these coordinates the discrete
L2 inner product is the plain Euclidean one, so the mass matrix is the
identity, operator 2-norms are discrete L2 operator norms, and the
bilinear pairing ``integral(f g)`` (no conjugation) of two nodal vectors
is their plain dot product.  ``quad_weights`` converts back to physical
nodal values when needed.

For complex xi the matrix is assembled through the exact algebraic split

    A(xi) = A(Re xi) - 2i Im(xi) * diag(m(t) - Re xi) - (Im xi)^2 * I,

where m(t) is the xi-coupling profile of the family (t itself for the
shifted oscillator, t^(n+1)/(n+1) for the full-line family).  The result
is complex symmetric -- equal to its plain transpose -- and never
Hermitian unless Im xi = 0.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg as sla

from .config import DENSE_LIMIT, sequential_blas
from .errors import ConfigurationError, DomainError, EigensolverError


class Family(enum.Enum):
    DEGENNES = "degennes"
    AIRY_COMPARISON = "airy"
    MONTGOMERY = "montgomery"


class Scheme(enum.Enum):
    #: second-order finite differences (lumped piecewise-linear elements)
    FINITE_DIFFERENCE_2 = "fd"
    #: Chebyshev-Lobatto polynomial collocation with Clenshaw-Curtis
    #: quadrature; the independent cross-validation scheme
    COLLOCATION = "colloc"


@dataclass(frozen=True)
class OperatorSpec:
    """Which operator family at which (possibly complex) parameter."""

    family: Family
    xi: complex = 0.0
    montgomery_n: int = 1

    def __post_init__(self):
        object.__setattr__(self, "xi", complex(self.xi))
        if self.family is Family.MONTGOMERY and self.montgomery_n < 1:
            raise DomainError(
                f"Montgomery index must be a positive integer, got "
                f"{self.montgomery_n}"
            )

    @property
    def is_full_line(self) -> bool:
        return self.family is Family.MONTGOMERY

    def xi_profile(self, t: np.ndarray) -> Optional[np.ndarray]:
        """Profile m(t) such that the potential is (m(t) - xi)^2.

        Returns None for the comparison family, whose potential 2t does
        not couple to xi.
        """
        if self.family is Family.DEGENNES:
            return t
        if self.family is Family.MONTGOMERY:
            n = self.montgomery_n
            return t ** (n + 1) / (n + 1)
        return None


def potential_values(spec: OperatorSpec, t: np.ndarray | float) -> np.ndarray:
    """Evaluate the family's potential at points t (complex for complex xi)."""
    t = np.asarray(t, dtype=float)
    profile = spec.xi_profile(t)
    if profile is None:
        return 2.0 * t
    diff = profile - spec.xi
    return diff * diff


@dataclass(frozen=True)
class Discretization:
    """Grid parameters.

    Half-line families live on [0, T] with the Neumann condition at 0
    encoded naturally by the quadratic form (no boundary penalty) and an
    artificial Dirichlet condition at the truncation point T.  The
    full-line family lives on [-T, T] with Dirichlet conditions at both
    ends.  ``n_points`` is the number of retained degrees of freedom.
    """

    scheme: Scheme
    truncation: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 8:
            raise ConfigurationError(
                f"n_points must be >= 8, got {self.n_points}"
            )
        if not (self.truncation > 0):
            raise ConfigurationError(
                f"truncation length must be positive, got {self.truncation}"
            )


# ---------------------------------------------------------------------------
# kinetic-part assembly (xi-independent, cached)
# ---------------------------------------------------------------------------


def _cheb_diff(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Chebyshev-Lobatto nodes x_j = cos(j pi / n) on [-1, 1] and the
    standard polynomial differentiation matrix on them."""
    if n < 2:
        raise ConfigurationError("collocation degree too small")
    x = np.cos(np.pi * np.arange(n + 1) / n)
    c = np.ones(n + 1)
    c[0] = c[n] = 2.0
    c *= (-1.0) ** np.arange(n + 1)
    dx = x[:, None] - x[None, :]
    D = np.outer(c, 1.0 / c) / (dx + np.eye(n + 1))
    D -= np.diag(D.sum(axis=1))
    return D, x

def _clencurt_weights(n: int) -> np.ndarray:
    """Clenshaw-Curtis quadrature weights for the n+1 Lobatto nodes."""
    theta = np.pi * np.arange(n + 1) / n
    w = np.zeros(n + 1)
    ii = np.arange(1, n)
    v = np.ones(n - 1)
    if n % 2 == 0:
        w[0] = w[n] = 1.0 / (n**2 - 1)
        for k in range(1, n // 2):
            v -= 2.0 * np.cos(2.0 * k * theta[ii]) / (4.0 * k**2 - 1)
        v -= np.cos(n * theta[ii]) / (n**2 - 1)
    else:
        w[0] = w[n] = 1.0 / n**2
        for k in range(1, (n - 1) // 2 + 1):
            v -= 2.0 * np.cos(2.0 * k * theta[ii]) / (4.0 * k**2 - 1)
    w[ii] = 2.0 * v / n
    return w


def _freeze(*arrays: np.ndarray):
    for a in arrays:
        a.flags.writeable = False


@functools.lru_cache(maxsize=128)
def _fd_pieces(full_line: bool, T: float, N: int):
    """Nodes, quadrature weights and the weight-rescaled stiffness
    diagonals of the second-difference scheme.

    Half-line: vertex grid t_i = i h with h = T/N; the node at t = T is
    the eliminated Dirichlet point.  The lumped end mass h/2 at t = 0
    reproduces, after the symmetrizing rescale, the mirrored-ghost-point
    second difference whose first row reads (2 psi_0 - 2 psi_1)/h^2 in
    physical coordinates, which keeps the Neumann end second-order
    accurate without breaking symmetry.
    """
    if full_line:
        h = 2.0 * T / (N + 1)
        t = -T + h * np.arange(1, N + 1)
        w = np.full(N, h)
        kin_main = np.full(N, 2.0 / h**2)
        kin_off = np.full(N - 1, -1.0 / h**2)
    else:
        h = T / N
        t = h * np.arange(N)
        w = np.full(N, h)
        w[0] = h / 2.0
        k_main = np.full(N, 2.0 / h)
        k_main[0] = 1.0 / h
        k_off = np.full(N - 1, -1.0 / h)
        s = 1.0 / np.sqrt(w)
        kin_main = k_main * s * s
        kin_off = k_off * s[:-1] * s[1:]
    _freeze(t, w, kin_main, kin_off)
    return t, w, kin_main, kin_off


@functools.lru_cache(maxsize=64)
def _colloc_pieces(full_line: bool, T: float, N: int):
    """Nodes, weights and the dense symmetrized stiffness matrix of the
    Chebyshev collocation scheme.

    The stiffness is the Galerkin form D^T W D over all Lobatto nodes
    restricted to the retained columns, so the Neumann condition at a
    half-line origin is natural and no boundary row is modified.
    """
    if full_line:
        deg = N + 1
        D, x = _cheb_diff(deg)
        t_all = -T * x                      # increasing from -T to T
        Dt = -(1.0 / T) * D
        w_all = _clencurt_weights(deg) * T
        keep = np.arange(1, deg)            # Dirichlet at both ends
    else:
        deg = N
        D, x = _cheb_diff(deg)
        t_all = T * (1.0 - x) / 2.0         # increasing from 0 to T
        Dt = -(2.0 / T) * D
        w_all = _clencurt_weights(deg) * (T / 2.0)
        keep = np.arange(0, deg)            # Dirichlet at t = T only
    Dk = Dt[:, keep]
    K = Dk.T @ (w_all[:, None] * Dk)
    t = t_all[keep]
    w = w_all[keep]
    s = 1.0 / np.sqrt(w)
    kin = (K * s).T * s
    kin = 0.5 * (kin + kin.T)               # exact symmetry
    _freeze(t, w, kin)
    return t, w, kin


@dataclass(frozen=True)
class AssembledOperator:
    """Discretized operator in L2-orthonormal nodal coordinates.

    Either ``dense`` is set (collocation) or the symmetric-tridiagonal
    pair ``main_diag``/``off_diag`` is (finite differences).  The matrix
    equals its plain transpose for every xi; ``weight_diag`` holds the
    diagonal of the multiplication operator m(t) - Re xi entering the
    algebraic split (zeros for the comparison family).
    """

    spec: OperatorSpec
    disc: Discretization
    nodes: np.ndarray
    quad_weights: np.ndarray
    weight_diag: np.ndarray
    dense: Optional[np.ndarray] = None
    main_diag: Optional[np.ndarray] = None
    off_diag: Optional[np.ndarray] = None

    @property
    def n_dof(self) -> int:
        return self.nodes.size

    @property
    def is_banded(self) -> bool:
        return self.dense is None

    @property
    def is_real(self) -> bool:
        return self.spec.family is Family.AIRY_COMPARISON or self.spec.xi.imag == 0.0

    @property
    def matrix(self) -> np.ndarray:
        """Dense matrix (materialized on demand for banded storage)."""
        if self.dense is not None:
            return self.dense
        n = self.n_dof
        if n > DENSE_LIMIT:
            raise ConfigurationError(
                f"refusing to materialize a dense {n}x{n} matrix; use the "
                f"banded representation (main_diag/off_diag) instead"
            )
        A = np.diag(self.main_diag)
        idx = np.arange(n - 1)
        A[idx, idx + 1] = self.off_diag
        A[idx + 1, idx] = self.off_diag
        return A

    @property
    def mass_matrix(self) -> np.ndarray:
        """Identity: the Gram factor is folded into the coordinates."""
        return np.eye(self.n_dof)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        if self.dense is not None:
            return self.dense @ v
        d, e = self.main_diag, self.off_diag
        if v.ndim == 2:
            d, e = d[:, None], e[:, None]
        y = d * v
        y[:-1] = y[:-1] + e * v[1:]
        y[1:] = y[1:] + e * v[:-1]
        return y

    def boundary_mask(self, n_nodes: int) -> np.ndarray:
        """Boolean mask of the n_nodes grid points adjacent to each
        artificial Dirichlet end (truncation-pollution guard)."""
        mask = np.zeros(self.n_dof, dtype=bool)
        mask[-n_nodes:] = True
        if self.spec.is_full_line:
            mask[:n_nodes] = True
        return mask

    def opnorm_estimate(self) -> float:
        """Cheap upper estimate of the operator norm (Gershgorin)."""
        if self.dense is not None:
            return float(np.max(np.sum(np.abs(self.dense), axis=1)))
        r = np.abs(self.main_diag).astype(float)
        r[:-1] += np.abs(self.off_diag)
        r[1:] += np.abs(self.off_diag)
        return float(np.max(r))


def assemble(spec: OperatorSpec, disc: Discretization) -> AssembledOperator:
    """Assemble the discretized operator for ``spec`` on grid ``disc``.

    The caller is responsible for a truncation length that keeps the
    relevant well interior; ``config.default_truncation`` implements the
    recommended rule T = max(15, |Re xi| + 12).
    """
    full_line = spec.is_full_line
    a = spec.xi.real
    b = spec.xi.imag

    if disc.scheme is Scheme.FINITE_DIFFERENCE_2:
        t, w, kin_main, kin_off = _fd_pieces(full_line, disc.truncation, disc.n_points)
        profile = spec.xi_profile(t)
        if profile is None:
            weight = np.zeros_like(t)
            main = kin_main + 2.0 * t
        else:
            weight = profile - a
            main = kin_main + weight * weight
            if b != 0.0:
                main = main - (2j * b) * weight - b * b
        _freeze(weight)
        return AssembledOperator(
            spec=spec, disc=disc, nodes=t, quad_weights=w,
            weight_diag=weight, main_diag=main, off_diag=kin_off,
        )

    t, w, kin = _colloc_pieces(full_line, disc.truncation, disc.n_points)
    profile = spec.xi_profile(t)
    idx = np.arange(t.size)
    if profile is None:
        weight = np.zeros_like(t)
        A = kin.copy()
        A[idx, idx] += 2.0 * t
    else:
        weight = profile - a
        A = kin.copy()
        A[idx, idx] += weight * weight
        if b != 0.0:
            A = A.astype(complex)
            A[idx, idx] -= (2j * b) * weight + b * b
    _freeze(weight)
    return AssembledOperator(
        spec=spec, disc=disc, nodes=t, quad_weights=w,
        weight_diag=weight, dense=A,
    )


# ---------------------------------------------------------------------------
# small symmetric eigensolves used inside this module
# ---------------------------------------------------------------------------


def _lowest_symmetric_eigvals(op: AssembledOperator, k: int) -> np.ndarray:
    """First k eigenvalues of a real-symmetric assembled operator."""
    try:
        with sequential_blas():
            if op.is_banded:
                return sla.eigvalsh_tridiagonal(
                    op.main_diag.real if np.iscomplexobj(op.main_diag) else op.main_diag,
                    op.off_diag, select="i", select_range=(0, k - 1),
                )
            return sla.eigh(op.matrix, eigvals_only=True, subset_by_index=[0, k - 1])
    except sla.LinAlgError as exc:  # pragma: no cover - LAPACK failure path
        raise EigensolverError(str(exc), condition=op.opnorm_estimate()) from exc


def real_part_form_min(spec: OperatorSpec, disc: Discretization) -> float:
    """Smallest eigenvalue of the Hermitian part of the assembled matrix.

    By the algebraic split the Hermitian part of A(xi) equals
    A(Re xi) - (Im xi)^2, so the result is the real-parameter ground
    energy lowered by (Im xi)^2; the function computes it honestly from
    (A + A*)/2 rather than using that identity.
    """
    op = assemble(spec, disc)
    try:
        with sequential_blas():
            if op.is_banded:
                main = op.main_diag
                herm_main = main.real if np.iscomplexobj(main) else main
                return float(sla.eigvalsh_tridiagonal(
                    herm_main, op.off_diag, select="i", select_range=(0, 0))[0])
            A = op.matrix
            H = 0.5 * (A + A.conj().T)
            return float(sla.eigh(H, eigvals_only=True, subset_by_index=[0, 0])[0])
    except sla.LinAlgError as exc:  # pragma: no cover
        raise EigensolverError(str(exc)) from exc


# ---------------------------------------------------------------------------
# dilation cross-check
# ---------------------------------------------------------------------------


def _assemble_custom(
    potential: Callable[[np.ndarray], np.ndarray],
    kappa: float,
    scheme: Scheme,
    T: float,
    N: int,
) -> tuple[np.ndarray, AssembledOperator]:
    """Half-line Neumann operator -kappa d^2/dtau^2 + potential(tau),
    assembled with the same machinery as the public families."""
    if scheme is Scheme.FINITE_DIFFERENCE_2:
        t, w, kin_main, kin_off = _fd_pieces(False, T, N)
        main = kappa * kin_main + potential(t)
        return t, AssembledOperator(
            spec=OperatorSpec(Family.AIRY_COMPARISON), disc=Discretization(scheme, T, N),
            nodes=t, quad_weights=w, weight_diag=np.zeros_like(t),
            main_diag=main, off_diag=kappa * kin_off,
        )
    t, w, kin = _colloc_pieces(False, T, N)
    idx = np.arange(t.size)
    A = kappa * kin
    A[idx, idx] += potential(t)
    return t, AssembledOperator(
        spec=OperatorSpec(Family.AIRY_COMPARISON), disc=Discretization(scheme, T, N),
        nodes=t, quad_weights=w, weight_diag=np.zeros_like(t), dense=A,
    )


def dilation_check(
    alpha: float, k: int, disc: Discretization
) -> tuple[float, float]:
    """Cross-check the unitary rescaling of the deep-well regime.

    Returns the pair (direct, rescaled) where ``direct`` is the k-th
    eigenvalue at parameter xi = -alpha computed on the caller's grid and
    ``rescaled`` is alpha^2 times the k-th Neumann eigenvalue of
    alpha^-4 d^2/dtau^2 + (tau + 1)^2 on an independently truncated grid.
    The two agree up to the combined discretization error; for alpha = 1
    and matched truncations the rescaling is the identity.
    """
    if alpha < 1.0:
        raise ConfigurationError(f"alpha must be >= 1, got {alpha}")
    if k < 1:
        raise ConfigurationError(f"branch index must be >= 1, got {k}")
    direct_op = assemble(OperatorSpec(Family.DEGENNES, xi=-alpha), disc)
    direct = float(_lowest_symmetric_eigvals(direct_op, k)[k - 1])

    T2 = max(6.0, disc.truncation / alpha)
    _, resc_op = _assemble_custom(
        lambda tau: (tau + 1.0) ** 2, alpha ** -4.0, disc.scheme, T2, disc.n_points
    )
    lam = float(_lowest_symmetric_eigvals(resc_op, k)[k - 1])
    return direct, alpha**2 * lam
