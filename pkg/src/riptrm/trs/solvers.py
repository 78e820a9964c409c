"""Solvers for the trust-region subproblem on a tangent space.

Three solvers are provided: the Cauchy step, Steihaug-Toint truncated
conjugate gradients and an exact solver that works in the eigenbasis of the
matrixised operator and handles the hard case explicitly.
"""

from __future__ import annotations

import logging
import math
from typing import TYPE_CHECKING, Any

import numpy as np
import scipy.optimize

from riptrm.errors import SolverFailureError
from riptrm.linalg.dense import min_eigenvalue, sym_eig
from riptrm.trs.models import (
    OptimalityReport,
    Subsolver,
    TrsInstance,
    TrsSolution,
    TrsStatus,
)

if TYPE_CHECKING:
    from collections.abc import Callable

    from riptrm.manifolds.base import Tangent

logger = logging.getLogger(__name__)

TCG_KAPPA = 0.1
TCG_THETA = 1.0
EXACT_RTOL = 1e-9
_HARD_CASE_RTOL = 1e-10
_BRACKET_GROWTH_LIMIT = 64
_FLOAT_MAX = float(np.finfo(float).max)


def model_value(inst: TrsInstance, d: Tangent) -> float:
    """Quadratic model ``1/2 <H d, d> + <grad, d>``."""
    return 0.5 * inst.inner(inst.apply_H(d), d) + inst.inner(inst.grad, d)


def matrixize(inst: TrsInstance) -> np.ndarray:
    """Symmetric matrix of ``H`` in the instance's orthonormal tangent basis."""
    return inst.manifold.operator_matrix(inst.x, inst.basis, inst.apply_H)


def min_eig(inst: TrsInstance) -> float:
    """Smallest eigenvalue of ``H``."""
    return min_eigenvalue(matrixize(inst))


def operator_norm(inst: TrsInstance) -> float:
    """Spectral norm of ``H``."""
    eigenvalues = sym_eig(matrixize(inst)).eigenvalues
    return float(np.max(np.abs(eigenvalues))) if eigenvalues.size else 0.0


def _solution(
    inst: TrsInstance, d: Tangent, status: TrsStatus, **kwargs: Any
) -> TrsSolution:
    decrease = -model_value(inst, d)
    return TrsSolution(d=d, status=status, model_decrease=decrease, **kwargs)


def _boundary_tau(inst: TrsInstance, d: Tangent, p: Tangent) -> float:
    """Nonnegative ``tau`` with ``||d + tau p|| = radius``, for ``||d|| <= radius``."""
    dp = inst.inner(d, p)
    pp = inst.inner(p, p)
    dd = inst.inner(d, d)
    slack = max(inst.radius**2 - dd, 0.0)
    return (-dp + math.sqrt(dp**2 + pp * slack)) / pp


def cauchy_step(inst: TrsInstance) -> TrsSolution:
    """Minimiser of the model along ``-grad`` inside the trust region."""
    grad = inst.grad
    grad_norm = inst.norm(grad)
    if grad_norm == 0.0:
        return _solution(inst, inst.manifold.zero_vector(grad), TrsStatus.INTERIOR)
    curvature = inst.inner(inst.apply_H(grad), grad)
    t_boundary = inst.radius / grad_norm
    if curvature <= 0.0:
        return _solution(inst, -t_boundary * grad, TrsStatus.BOUNDARY)
    t = grad_norm**2 / curvature
    if t >= t_boundary:
        return _solution(inst, -t_boundary * grad, TrsStatus.BOUNDARY)
    return _solution(inst, -t * grad, TrsStatus.INTERIOR)


def truncated_cg(
    inst: TrsInstance,
    kappa: float = TCG_KAPPA,
    theta: float = TCG_THETA,
    max_iter: int | None = None,
) -> TrsSolution:
    """Steihaug-Toint truncated conjugate gradients started at ``d = 0``.

    Parameters
    ----------
    inst:
        The subproblem.
    kappa, theta:
        Residual test ``||r|| <= ||r0|| * min(kappa, ||r0||**theta)``.
    max_iter:
        Iteration cap; defaults to the manifold dimension.
    """
    if max_iter is None:
        max_iter = inst.manifold.dim
    d = inst.manifold.zero_vector(inst.grad)
    r = inst.grad
    r_norm0 = inst.norm(r)
    if r_norm0 == 0.0:
        return _solution(inst, d, TrsStatus.INTERIOR)
    target = r_norm0 * min(kappa, r_norm0**theta)
    rr = r_norm0**2
    p = -r
    for iteration in range(1, max_iter + 1):
        hp = inst.apply_H(p)
        curvature = inst.inner(p, hp)
        if curvature <= 0.0:
            d = d + _boundary_tau(inst, d, p) * p
            return _solution(
                inst, d, TrsStatus.NEGATIVE_CURVATURE_BOUNDARY, iterations=iteration
            )
        alpha = rr / curvature
        d_next = d + alpha * p
        if inst.norm(d_next) >= inst.radius:
            d = d + _boundary_tau(inst, d, p) * p
            return _solution(inst, d, TrsStatus.BOUNDARY, iterations=iteration)
        d = d_next
        r = r + alpha * hp
        rr_next = inst.inner(r, r)
        if math.sqrt(rr_next) <= target:
            return _solution(inst, d, TrsStatus.INTERIOR, iterations=iteration)
        p = -r + (rr_next / rr) * p
        rr = rr_next
    return _solution(inst, d, TrsStatus.MAX_ITER, iterations=max_iter)


def verify_global_optimality(
    inst: TrsInstance,
    d: Tangent,
    nu: float,
    tol: float | None = None,
    matrix: np.ndarray | None = None,
) -> OptimalityReport:
    """Residuals of the global optimality conditions for ``(d, nu)``.

    A failed check is reported through ``OptimalityReport.passed``, never
    raised.
    """
    if matrix is None:
        matrix = matrixize(inst)
    eigenvalues = sym_eig(matrix).eigenvalues
    if tol is None:
        h_norm = float(np.max(np.abs(eigenvalues))) if eigenvalues.size else 0.0
        tol = EXACT_RTOL * (1.0 + inst.norm(inst.grad) + h_norm)
    basis = inst.basis
    d_coords = inst.manifold.coordinates(inst.x, basis, d)
    grad_coords = inst.manifold.coordinates(inst.x, basis, inst.grad)
    d_norm = float(np.linalg.norm(d_coords))
    lam_min = float(eigenvalues[0]) if eigenvalues.size else math.inf
    stationarity = matrix @ d_coords + nu * d_coords + grad_coords
    return OptimalityReport(
        stationarity=float(np.linalg.norm(stationarity)),
        complementarity=abs(nu * (inst.radius - d_norm)),
        radius_excess=max(d_norm - inst.radius, 0.0),
        psd_residual=max(-(lam_min + nu), 0.0),
        nu_negative=max(-nu, 0.0),
        tol=float(tol),
    )


def _scaled_norm(y: np.ndarray) -> float:
    scale = float(np.max(np.abs(y))) if y.size else 0.0
    if scale == 0.0 or math.isinf(scale) or math.isnan(scale):
        return scale
    return scale * float(np.linalg.norm(y / scale))


def _secular_root(secular: Callable[[float], float], sigma_high: float) -> float:
    """Root of the decreasing secular function on ``[0, sigma_high]``.

    ``sigma_high`` is grown until the sign changes; a nonpositive value at zero
    means the unshifted step already reaches the boundary.
    """
    if secular(0.0) <= 0.0:
        return 0.0
    sigma_high = max(sigma_high, np.finfo(float).tiny)
    for _ in range(_BRACKET_GROWTH_LIMIT):
        value = secular(sigma_high)
        if value == 0.0:
            return sigma_high
        if value < 0.0:
            break
        sigma_high *= 2.0
    else:
        msg = f"Could not bracket the secular equation below sigma = {sigma_high!r}"
        raise SolverFailureError(msg)
    try:
        root = scipy.optimize.brentq(
            secular, 0.0, sigma_high, xtol=1e-300, maxiter=500
        )
    except (ValueError, RuntimeError) as exc:
        msg = f"Secular equation solve failed on [0, {sigma_high!r}]: {exc}"
        raise SolverFailureError(msg) from exc
    return float(root)


def _orientation(vector: np.ndarray) -> float:
    """``+1`` if the first nonzero coordinate of ``vector`` is positive, else ``-1``."""
    nonzero = np.flatnonzero(np.abs(vector) > 1e-12 * np.max(np.abs(vector)))
    return -1.0 if nonzero.size and vector[nonzero[0]] < 0.0 else 1.0


def exact_step(inst: TrsInstance, tol: float | None = None) -> TrsSolution:
    """Global minimiser of the subproblem.

    The operator is matrixised in an orthonormal basis and diagonalised. With
    ``H = Q diag(l) Q^T`` and ``a = Q^T grad`` the step is
    ``y(nu) = -a / (l + nu)`` in eigen-coordinates, where ``nu`` is zero for
    an interior solution, solves ``||y(nu)|| = radius`` otherwise, or equals
    ``-l_1`` in the hard case, where a multiple of the leading eigenvector
    brings the step to the boundary. The secular equation is solved for the
    shift ``sigma = nu - max(0, -l_1)`` so that poles stay exact.

    Raises
    ------
    SolverFailureError
        If the computed pair fails :func:`verify_global_optimality` at ``tol``.
    """
    radius = inst.radius
    basis = inst.basis
    matrix = matrixize(inst)
    eig = sym_eig(matrix)
    lam, q = eig.eigenvalues, eig.eigenvectors
    a = q.T @ inst.manifold.coordinates(inst.x, basis, inst.grad)
    a_norm = float(np.linalg.norm(a))
    h_norm = float(np.max(np.abs(lam)))
    if tol is None:
        tol = EXACT_RTOL * (1.0 + a_norm + h_norm)
    lam1 = float(lam[0])
    nu_low = max(0.0, -lam1)
    # Eigenvalues shifted by nu_low; leading ones are exactly zero if lam1 <= 0.
    base = lam - lam1 if lam1 <= 0.0 else lam.copy()
    active = a != 0.0

    def step(sigma: float) -> np.ndarray:
        y = np.zeros_like(a)
        with np.errstate(divide="ignore", invalid="ignore"):
            y[active] = -a[active] / (base[active] + sigma)
        return y

    status = TrsStatus.BOUNDARY
    if lam1 > 0.0 and float(np.linalg.norm(step(0.0))) <= radius:
        nu, status = 0.0, TrsStatus.INTERIOR
        y = step(0.0)
    else:
        leading = np.abs(lam - lam1) <= _HARD_CASE_RTOL * (1.0 + h_norm)
        y = np.zeros_like(a)
        hard = False
        if lam1 <= 0.0 and float(np.linalg.norm(a[leading])) <= _HARD_CASE_RTOL * (
            1.0 + a_norm
        ):
            y[~leading] = -a[~leading] / base[~leading]
            hard = float(np.linalg.norm(y)) <= radius
        if hard:
            nu, status = nu_low, TrsStatus.HARD_CASE
            tau = math.sqrt(max(radius**2 - float(np.linalg.norm(y)) ** 2, 0.0))
            first = int(np.flatnonzero(leading)[0])
            y[first] = _orientation(q[:, first]) * tau
            logger.debug("Hard case: nu = %.6e, tau = %.6e", nu, tau)
        else:

            def secular(sigma: float) -> float:
                norm = _scaled_norm(step(sigma))
                if math.isinf(norm):
                    return 1.0 / radius
                if norm == 0.0:
                    return -_FLOAT_MAX
                return max(1.0 / radius - 1.0 / norm, -_FLOAT_MAX)

            sigma = _secular_root(secular, a_norm / radius)
            nu = nu_low + sigma
            y = step(sigma)
        y_norm = float(np.linalg.norm(y))
        if y_norm > radius:
            y *= radius / y_norm
    d = inst.manifold.combine(inst.x, basis, q @ y)
    report = verify_global_optimality(inst, d, nu, tol, matrix=matrix)
    if not report.passed:
        msg = f"Exact subproblem solution failed verification: {report}"
        raise SolverFailureError(msg)
    return _solution(inst, d, status, nu=nu)


def eigen_step(inst: TrsInstance) -> TrsSolution | None:
    """Boundary step along the leading eigenvector when ``H`` is indefinite.

    The eigenvector is oriented so that ``<grad, u> <= 0``. Returns ``None``
    when ``H`` is positive semidefinite.
    """
    eig = sym_eig(matrixize(inst))
    if eig.min_eigenvalue >= 0.0:
        return None
    u = inst.manifold.combine(inst.x, inst.basis, eig.eigenvectors[:, 0])
    if inst.inner(inst.grad, u) > 0.0:
        u = -u
    d = (inst.radius / inst.norm(u)) * u
    return _solution(inst, d, TrsStatus.BOUNDARY)


def solve_subproblem(
    inst: TrsInstance,
    subsolver: Subsolver | str,
    *,
    tcg_kappa: float = TCG_KAPPA,
    tcg_theta: float = TCG_THETA,
    exact_tol: float | None = None,
) -> TrsSolution:
    """Dispatch ``inst`` to the named subsolver."""
    match Subsolver(subsolver):
        case Subsolver.CAUCHY:
            return cauchy_step(inst)
        case Subsolver.TCG:
            return truncated_cg(inst, kappa=tcg_kappa, theta=tcg_theta)
        case Subsolver.EXACT:
            return exact_step(inst, tol=exact_tol)
