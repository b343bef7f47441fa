"""Central defaults: tolerances, contour parameters, threading.

Every tolerance used by the library lives in one record so that tests and
the CLI can state explicitly which knob they touch.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass

from threadpoolctl import threadpool_limits

THREADS_ENV_VAR = "DEGENNES_NUM_THREADS"

# Dense materialization guard for banded operators (memory safety).
DENSE_LIMIT = 4096

# Contour-quadrature defaults: equispaced trapezoid nodes on a circle are
# spectrally accurate for the (analytic, periodic) resolvent integrand.
CONTOUR_NODES = 32
CONTOUR_RADIUS_FACTOR = 1.5

# Default maximum half-width requested from strip sweeps.
STRIP_EPS_MAX = 0.3


@dataclass(frozen=True)
class Tolerances:
    """All numeric thresholds, with the defaults used by the test suite."""

    # eigenpair retention: discard branches whose residual exceeds
    # max(eig_residual, eig_residual_relative * |A|)
    eig_residual: float = 1e-8
    eig_residual_relative: float = 1e-12
    # truncation-pollution guard: eigenvector mass within `boundary_nodes`
    # grid points of an artificial Dirichlet end must stay below this
    boundary_mass: float = 1e-6
    boundary_nodes: int = 5
    # relative floor below which a shifted operator counts as singular
    near_singular: float = 1e-11
    # contour-projector rank test: |trace - round(trace)| above this is
    # ambiguous
    rank_ambiguity: float = 0.1
    # bilinear overlap threshold relative to |psi0|^2
    overlap_min: float = 0.5
    # quotient vs direct-eigenvalue cross-check in the continuation
    quotient_direct: float = 1e-6
    # golden-section/parabolic refinement width for the band minimum
    theta0_xi: float = 1e-8
    # continuation diagnostics
    slack: float = 1e-8
    schwarz: float = 1e-10
    cauchy_riemann: float = 1e-5
    trace_unit: float = 1e-6
    idempotency: float = 1e-6


DEFAULT_TOL = Tolerances()


def default_truncation(xi: complex | float) -> float:
    """Default domain length: 12 units of Gaussian-type decay beyond the
    potential well keeps truncation error far below solver tolerances."""
    return max(15.0, abs(complex(xi).real) + 12.0)


def num_threads() -> int:
    """Worker-thread cap, controlled by DEGENNES_NUM_THREADS."""
    raw = os.environ.get(THREADS_ENV_VAR)
    if raw is not None:
        try:
            n = int(raw)
        except ValueError:
            return 1
        return max(1, n)
    return max(1, min(4, os.cpu_count() or 1))


# Multi-threaded BLAS is counterproductive for this workload: the
# matrices are small (a few hundred rows) and threaded BLAS spin
# synchronization costs an order of magnitude more than the factorization
# itself, both under our own thread pool and for single calls.  Every
# LAPACK-heavy kernel runs under this cap.  The flag keeps the context
# re-entrant so that worker threads inside thread_map never touch the
# (process-global) thread-pool controls concurrently.
_BLAS_CAPPED = False


@contextmanager
def sequential_blas():
    global _BLAS_CAPPED
    if _BLAS_CAPPED:
        yield
        return
    _BLAS_CAPPED = True
    try:
        with threadpool_limits(limits=1):
            yield
    finally:
        _BLAS_CAPPED = False


def thread_map(fn, items):
    """Order-preserving parallel map over independent pure computations.

    Grid sweeps are embarrassingly parallel; LAPACK calls release the GIL
    so plain threads give real speedup. Results are merged in input order,
    keeping every sweep deterministic.
    """
    items = list(items)
    n = num_threads()
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with sequential_blas():
        with ThreadPoolExecutor(max_workers=n) as pool:
            return list(pool.map(fn, items))
