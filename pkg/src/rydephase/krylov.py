"""Lanczos propagation of ``exp(-i H t) psi`` for large sparse Hermitian ``H``.

Each step builds an ``m``-dimensional Krylov space (full reorthogonalization),
diagonalizes the tridiagonal projection once and picks the largest step size
whose a-posteriori error estimate ``beta * h_{m+1,m} * |e_m^T exp(-i T dt) e_1|``
stays below ``tol * dt / t``. The accumulated error over ``[0, t]`` is therefore
bounded by roughly ``tol`` (in the 2-norm of the state).
"""

from __future__ import annotations

from typing import Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import InvalidArgument, NumericalFailure

__all__ = ["expmv_hermitian"]

_BREAKDOWN = 1e-13


def _lanczos(matvec, v, m_max):
    dim = v.shape[0]
    m_max = min(m_max, dim)
    basis = np.empty((m_max, dim), dtype=np.complex128)
    alpha = np.zeros(m_max)
    beta = np.zeros(m_max)
    basis[0] = v
    for j in range(m_max):
        w = matvec(basis[j])
        alpha[j] = np.vdot(basis[j], w).real
        w = w - alpha[j] * basis[j]
        if j > 0:
            w -= beta[j - 1] * basis[j - 1]
        # one full re-orthogonalization pass keeps the basis orthonormal
        w -= (basis[: j + 1] @ w.conj()).conj() @ basis[: j + 1]
        b = np.linalg.norm(w)
        beta[j] = b
        if b < _BREAKDOWN or j + 1 == m_max:
            return basis[: j + 1], alpha[: j + 1], beta[: j + 1], b < _BREAKDOWN or j + 1 == dim
        basis[j + 1] = w / b
    raise AssertionError("unreachable")


def expmv_hermitian(
    matvec: Callable[[np.ndarray], np.ndarray],
    psi: np.ndarray,
    t: float,
    tol: float = 1e-8,
    m_max: int = 30,
    max_steps: int = 200_000,
) -> np.ndarray:
    """Return ``exp(-i H t) psi`` where ``matvec(x) == H @ x`` and ``H`` is Hermitian.

    Raises
    ------
    NumericalFailure
        If the step size collapses or more than ``max_steps`` steps are needed.
    """
    if t < 0:
        raise InvalidArgument(f"duration must be >= 0, got {t!r}")
    if not tol > 0:
        raise InvalidArgument(f"tol must be > 0, got {tol!r}")
    out = np.array(psi, dtype=np.complex128)
    if t == 0:
        return out

    elapsed = 0.0
    dt = t
    steps = 0
    while elapsed < t:
        if steps >= max_steps:
            raise NumericalFailure(f"Krylov propagation exceeded {max_steps} steps")
        steps += 1
        nrm = np.linalg.norm(out)
        if nrm == 0.0:
            return out
        vecs, a, b, exact = _lanczos(matvec, out / nrm, m_max)
        m = len(a)
        theta, s = (a, np.ones((1, 1))) if m == 1 else eigh_tridiagonal(a, b[: m - 1])
        s0 = s[0]
        remaining = t - elapsed
        dt = min(remaining, 2.0 * dt)
        if not exact:
            h_next = b[m - 1]
            for _ in range(200):
                coeffs = s @ (np.exp(-1j * theta * dt) * s0)
                err = nrm * h_next * abs(coeffs[-1])
                target = tol * dt / t
                if err <= target:
                    break
                shrink = 0.9 * (target / err) ** (1.0 / m)
                dt *= min(0.5, max(shrink, 0.05))
            else:
                raise NumericalFailure("Krylov step size collapsed below resolution")
            if elapsed + dt == elapsed:
                raise NumericalFailure("Krylov step size underflow")
        coeffs = s @ (np.exp(-1j * theta * dt) * s0)
        out = nrm * (coeffs @ vecs)
        elapsed = t if dt >= remaining else elapsed + dt
    return out
