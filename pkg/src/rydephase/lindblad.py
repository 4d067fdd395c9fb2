"""Three-level ladder system |g> - |e> - |r> in the rotating-wave approximation.

All frequencies and rates are angular (rad/s) and hbar = 1. The density matrix
is a 3x3 complex array in the basis (|g>, |e>, |r>).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from enum import Enum

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DegenerateSteadyState, InvalidArgument, NumericalFailure, SingularityError

__all__ = [
    "ThreeLevelParams",
    "ScanAxis",
    "Spectrum",
    "hamiltonian3",
    "dissipator3",
    "lindblad_rhs",
    "liouvillian_matrix",
    "evolve_rho",
    "steady_state",
    "steady_im_rho_ge",
    "im_rho_ge_perturbative",
    "scan_spectrum",
    "ground_projector",
    "check_density_matrix",
]

G, E, R = 0, 1, 2


@dataclass(frozen=True)
class ThreeLevelParams:
    """Rabi frequencies, detunings and rates of the ladder system (rad/s).

    ``gamma_eg`` and ``gamma_re`` are the natural decay rates of |e> and |r>;
    ``gamma_ed`` and ``gamma_rd`` are the pure dephasing rates.
    """

    omega_p: float
    omega_c: float
    delta_p: float = 0.0
    delta_c: float = 0.0
    gamma_eg: float = 2 * np.pi * 6e6
    gamma_re: float = 0.0
    gamma_ed: float = 0.0
    gamma_rd: float = 0.0

    def __post_init__(self):
        for name in ("omega_p", "omega_c", "gamma_re", "gamma_ed", "gamma_rd"):
            if not getattr(self, name) >= 0:
                raise InvalidArgument(f"{name} must be >= 0, got {getattr(self, name)!r}")
        if not self.gamma_eg > 0:
            raise InvalidArgument(f"gamma_eg must be > 0, got {self.gamma_eg!r}")

    @property
    def delta(self) -> float:
        """Two-photon detuning."""
        return self.delta_p + self.delta_c

    @property
    def gamma_e(self) -> float:
        return self.gamma_ed + self.gamma_eg

    @property
    def gamma_r(self) -> float:
        return self.gamma_rd + self.gamma_re

    @property
    def max_rate(self) -> float:
        return max(
            self.omega_p, self.omega_c, abs(self.delta_p), abs(self.delta_c),
            abs(self.delta), self.gamma_e, self.gamma_r,
        )

    def with_(self, **changes) -> "ThreeLevelParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)


def hamiltonian3(p: ThreeLevelParams) -> np.ndarray:
    h = np.zeros((3, 3), dtype=np.complex128)
    h[G, E] = h[E, G] = p.omega_p
    h[E, R] = h[R, E] = p.omega_c
    h[E, E] = -2.0 * p.delta_p
    h[R, R] = -2.0 * p.delta
    return 0.5 * h


def dissipator3(rho: np.ndarray, p: ThreeLevelParams) -> np.ndarray:
    """Entrywise decay and dephasing terms of the master equation."""
    ge, gr = p.gamma_e, p.gamma_r
    d = np.empty((3, 3), dtype=np.complex128)
    d[G, G] = p.gamma_eg * rho[E, E]
    d[E, E] = -p.gamma_eg * rho[E, E] + p.gamma_re * rho[R, R]
    d[R, R] = -p.gamma_re * rho[R, R]
    d[G, E] = -0.5 * ge * rho[G, E]
    d[E, G] = -0.5 * ge * rho[E, G]
    d[G, R] = -0.5 * gr * rho[G, R]
    d[R, G] = -0.5 * gr * rho[R, G]
    d[E, R] = -0.5 * (ge + gr) * rho[E, R]
    d[R, E] = -0.5 * (ge + gr) * rho[R, E]
    return d


def lindblad_rhs(rho: np.ndarray, p: ThreeLevelParams) -> np.ndarray:
    """Time derivative ``-i [H, rho] + L(rho)``."""
    rho = np.asarray(rho, dtype=np.complex128)
    h = hamiltonian3(p)
    return -1j * (h @ rho - rho @ h) + dissipator3(rho, p)


def _liouvillian_stack(omega_p, omega_c, delta_p, delta, gamma_eg, gamma_re, gamma_e, gamma_r):
    """Broadcasted (..., 9, 9) Liouvillians acting on row-major ``vec(rho)``."""
    arrays = np.broadcast_arrays(*map(np.asarray, (omega_p, omega_c, delta_p, delta, gamma_eg, gamma_re, gamma_e, gamma_r)))
    op, oc, dp, d, geg, gre, ge, gr = (np.asarray(a, dtype=float) for a in arrays)
    shape = op.shape
    h = np.zeros(shape + (3, 3), dtype=np.complex128)
    h[..., G, E] = h[..., E, G] = 0.5 * op
    h[..., E, R] = h[..., R, E] = 0.5 * oc
    h[..., E, E] = -dp
    h[..., R, R] = -d
    eye = np.eye(3)
    # vec(H rho) = (H x I) vec(rho), vec(rho H) = (I x H^T) vec(rho)
    left = np.einsum("...ij,kl->...ikjl", h, eye).reshape(shape + (9, 9))
    right = np.einsum("ij,...lk->...ikjl", eye, h).reshape(shape + (9, 9))
    lmat = -1j * (left - right)

    def idx(m, n):
        return 3 * m + n

    lmat[..., idx(G, G), idx(E, E)] += geg
    lmat[..., idx(E, E), idx(E, E)] -= geg
    lmat[..., idx(E, E), idx(R, R)] += gre
    lmat[..., idx(R, R), idx(R, R)] -= gre
    for a, b, rate in ((G, E, ge), (G, R, gr), (E, R, ge + gr)):
        lmat[..., idx(a, b), idx(a, b)] -= 0.5 * rate
        lmat[..., idx(b, a), idx(b, a)] -= 0.5 * rate
    return lmat


def liouvillian_matrix(p: ThreeLevelParams) -> np.ndarray:
    """9x9 matrix acting on the row-major flattening of rho."""
    return _liouvillian_stack(
        p.omega_p, p.omega_c, p.delta_p, p.delta, p.gamma_eg, p.gamma_re, p.gamma_e, p.gamma_r
    )


def _solve_steady(lmat, scale):
    lmat = lmat / np.asarray(scale)[..., None, None]
    lmat[..., 0, :] = 0.0
    lmat[..., 0, [0, 4, 8]] = 1.0
    if np.max(np.linalg.cond(lmat)) > 1e14:
        raise DegenerateSteadyState("steady-state system is singular")
    rhs = np.zeros(lmat.shape[:-1], dtype=np.complex128)
    rhs[..., 0] = 1.0
    rho = np.linalg.solve(lmat, rhs[..., None])[..., 0].reshape(lmat.shape[:-2] + (3, 3))
    return 0.5 * (rho + np.swapaxes(rho.conj(), -1, -2))


def ground_projector() -> np.ndarray:
    rho = np.zeros((3, 3), dtype=np.complex128)
    rho[G, G] = 1.0
    return rho


def check_density_matrix(rho, atol_herm=1e-10, atol_tr=1e-10, min_eig=-1e-9):
    """Raise ``InvalidArgument`` unless ``rho`` is Hermitian, unit-trace and PSD."""
    rho = np.asarray(rho)
    if rho.shape != (3, 3):
        raise InvalidArgument("density matrix must be 3x3")
    if np.max(np.abs(rho - rho.conj().T)) > atol_herm:
        raise InvalidArgument("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > atol_tr:
        raise InvalidArgument("density matrix trace differs from 1")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < min_eig:
        raise InvalidArgument("density matrix has a negative eigenvalue")


def evolve_rho(rho0, p: ThreeLevelParams, duration: float, tol: float = 1e-10) -> np.ndarray:
    """Integrate the master equation for ``duration`` seconds.

    The linear ODE is integrated with an adaptive Runge-Kutta scheme in the
    dimensionless time ``max_rate * t``; ``tol`` is the relative tolerance and
    ``tol * 1e-3`` the absolute one.
    """
    if duration < 0:
        raise InvalidArgument(f"duration must be >= 0, got {duration!r}")
    rho0 = np.array(rho0, dtype=np.complex128)
    if duration == 0:
        return rho0
    scale = p.max_rate
    lmat = liouvillian_matrix(p) / scale

    sol = solve_ivp(
        lambda _t, y: lmat @ y,
        (0.0, duration * scale),
        rho0.reshape(9),
        method="DOP853",
        rtol=tol,
        atol=tol * 1e-3,
    )
    if not sol.success:
        raise NumericalFailure(f"master-equation integration failed: {sol.message}")
    return sol.y[:, -1].reshape(3, 3)


def steady_state(p: ThreeLevelParams) -> np.ndarray:
    """Stationary density matrix from the 9x9 linear system.

    The equation for d(rho_gg)/dt is replaced by the trace condition.
    """
    return _solve_steady(liouvillian_matrix(p), p.max_rate)


def steady_im_rho_ge(omega_p, omega_c, delta_p, delta_c, gamma_eg, gamma_re=0.0, gamma_ed=0.0, gamma_rd=0.0):
    """Vectorized steady-state Im(rho_ge); arguments broadcast against each other."""
    args = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (
        omega_p, omega_c, delta_p, delta_c, gamma_eg, gamma_re, gamma_ed, gamma_rd)))
    op, oc, dp, dc, geg, gre, ged, grd = args
    d = dp + dc
    ge, gr = ged + geg, grd + gre
    scale = np.max(np.abs(np.stack([op, oc, dp, dc, d, ge, gr])), axis=0)
    rho = _solve_steady(_liouvillian_stack(op, oc, dp, d, geg, gre, ge, gr), scale)
    return rho[..., G, E].imag


def _lineshape(gamma_e, gamma_r, omega_c, delta_p, delta):
    oc2 = np.square(omega_c)
    num = 4.0 * np.square(delta) * gamma_e + gamma_r * (oc2 + gamma_e * gamma_r)
    den = np.abs(oc2 + (gamma_e - 2j * delta_p) * (gamma_r - 2j * delta)) ** 2
    return num, den


def im_rho_ge_perturbative(p: ThreeLevelParams) -> float:
    """Weak-probe line shape of Im(rho_ge), normalization constant 1.

    ``Omega_p * im_rho_ge_perturbative(p)`` is the first-order steady-state
    value of Im(rho_ge).
    """
    num, den = _lineshape(p.gamma_e, p.gamma_r, p.omega_c, p.delta_p, p.delta)
    if den == 0:
        raise SingularityError("perturbative line shape has a zero denominator")
    return float(num / den)


class ScanAxis(str, Enum):
    probe_detuning = "probe_detuning"
    coupling_detuning = "coupling_detuning"


@dataclass
class Spectrum:
    scan_axis: ScanAxis
    detuning: np.ndarray
    im_rho_ge: np.ndarray
    params: ThreeLevelParams | None = None
    mode: str = "full_steady_state"

    def __post_init__(self):
        self.scan_axis = ScanAxis(self.scan_axis)
        self.detuning = np.asarray(self.detuning, dtype=float)
        self.im_rho_ge = np.asarray(self.im_rho_ge, dtype=float)
        if self.detuning.shape != self.im_rho_ge.shape or self.detuning.ndim != 1:
            raise InvalidArgument("detuning and im_rho_ge must be 1-d arrays of equal length")
        if np.any(np.diff(self.detuning) <= 0):
            raise InvalidArgument("detunings must be strictly increasing")

    def __len__(self):
        return len(self.detuning)

    def rows(self):
        for d, v in zip(self.detuning, self.im_rho_ge):
            yield {"detuning_rad_s": float(d), "im_rho_ge": float(v)}

    def to_dict(self) -> dict:
        return {
            "scan_axis": self.scan_axis.value,
            "mode": self.mode,
            "params": None if self.params is None else self.params.to_dict(),
            "detuning_rad_s": self.detuning.tolist(),
            "im_rho_ge": self.im_rho_ge.tolist(),
        }

    @classmethod
    def from_dict(cls, record: dict) -> "Spectrum":
        params = record.get("params")
        return cls(
            record["scan_axis"],
            record["detuning_rad_s"],
            record["im_rho_ge"],
            ThreeLevelParams(**params) if params else None,
            record.get("mode", "full_steady_state"),
        )


def scan_spectrum(template: ThreeLevelParams, scan_axis, detunings, mode="full_steady_state") -> Spectrum:
    """Im(rho_ge) across a probe or coupling detuning grid.

    ``mode`` is ``"full_steady_state"`` or ``"perturbative"``; the latter
    returns ``Omega_p`` times the weak-probe line shape.
    """
    axis = ScanAxis(scan_axis)
    grid = np.asarray(detunings, dtype=float)
    if grid.ndim != 1 or len(grid) == 0:
        raise InvalidArgument("detuning grid must be a nonempty 1-d sequence")
    if np.any(np.diff(grid) <= 0):
        raise InvalidArgument("detuning grid must be strictly increasing")
    if mode not in ("full_steady_state", "perturbative"):
        raise InvalidArgument(f"unknown mode {mode!r}")
    field_name = "delta_p" if axis is ScanAxis.probe_detuning else "delta_c"
    if mode == "perturbative":
        values = np.array([
            template.omega_p * im_rho_ge_perturbative(template.with_(**{field_name: float(d)}))
            for d in grid
        ])
    else:
        t = template.to_dict()
        t[field_name] = grid
        values = steady_im_rho_ge(**t)
    return Spectrum(axis, grid, values, template, mode)
