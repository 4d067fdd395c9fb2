"""Rotary-echo dynamics of a frozen, blockade-truncated Rydberg gas.

The Hamiltonian in the truncated basis is

    H = (s * Omega / 2) * X + D,

where ``X`` couples configurations that differ by exactly one excitation,
``D`` is diagonal with the summed van der Waals shifts of all excited pairs and
``s = +1 / -1`` is the drive sign. The rotary echo runs ``s = +1`` for
``tau_p`` and ``s = -1`` for the remaining ``tau - tau_p``; the interaction
term is identical in both segments.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .blockade import (
    DEFAULT_KAPPA,
    DEFAULT_MAX_DIMENSION,
    BlockadeBasis,
    build_blockade_basis,
)
from .cloud import pair_interactions, sample_positions
from .errors import InvalidArgument, RydephaseError
from .krylov import expmv_hermitian

__all__ = [
    "DEFAULT_TOL",
    "DEFAULT_GRID_POINTS",
    "EchoProtocol",
    "EchoCurve",
    "ManyBodyHamiltonian",
    "RealizationFailure",
    "hamiltonian_for",
    "ground_state",
    "apply_hamiltonian",
    "evolve",
    "rydberg_number",
    "run_echo",
    "echo_curve",
    "aggregate_curves",
    "disorder_average",
    "echo_study",
]

DEFAULT_TOL = 1e-8
DEFAULT_GRID_POINTS = 21

_CHUNK = 1 << 16


class RealizationFailure(RydephaseError):
    """A single disorder realization failed; the batch is aborted."""

    def __init__(self, seed, cause):
        super().__init__(f"realization with seed {seed} failed: {cause}")
        self.seed = seed
        self.cause = cause


@dataclass(frozen=True)
class EchoProtocol:
    tau: float
    tau_p: float
    omega: float = 1.0

    def __post_init__(self):
        if not self.tau > 0:
            raise InvalidArgument(f"tau must be > 0, got {self.tau!r}")
        if not 0.0 <= self.tau_p <= self.tau:
            raise InvalidArgument(f"tau_p must lie in [0, tau], got {self.tau_p!r}")


@dataclass
class EchoCurve:
    """Rydberg number ``n_r`` at ``t = tau`` versus the flip time ``tau_p``."""

    tau: float
    tau_p: np.ndarray
    n_r: np.ndarray
    stderr: np.ndarray | None = None
    n_atoms: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.tau_p = np.asarray(self.tau_p, dtype=float)
        self.n_r = np.asarray(self.n_r, dtype=float)
        if self.stderr is not None:
            self.stderr = np.asarray(self.stderr, dtype=float)
        if self.tau_p.shape != self.n_r.shape or self.tau_p.ndim != 1:
            raise InvalidArgument("tau_p and n_r must be 1-d arrays of equal length")
        if np.any(np.diff(self.tau_p) <= 0):
            raise InvalidArgument("tau_p values must be strictly increasing")
        eps = 1e-12 * max(1.0, self.tau)
        if len(self.tau_p) and (self.tau_p[0] < -eps or self.tau_p[-1] > self.tau + eps):
            raise InvalidArgument("tau_p values must lie within [0, tau]")

    def __len__(self):
        return len(self.tau_p)

    def rows(self):
        err = self.stderr if self.stderr is not None else np.zeros_like(self.n_r)
        for tp, nr, se in zip(self.tau_p, self.n_r, err):
            yield {"tau": self.tau, "tau_p": float(tp), "n_r": float(nr), "stderr": float(se)}

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "n_atoms": self.n_atoms,
            "tau_p": self.tau_p.tolist(),
            "n_r": self.n_r.tolist(),
            "stderr": None if self.stderr is None else self.stderr.tolist(),
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, record: dict) -> "EchoCurve":
        return cls(
            tau=float(record["tau"]),
            tau_p=record["tau_p"],
            n_r=record["n_r"],
            stderr=record.get("stderr"),
            n_atoms=record.get("n_atoms"),
            meta=dict(record.get("meta") or {}),
        )


class ManyBodyHamiltonian:
    """Sparse representation of the echo Hamiltonian on a blockade basis."""

    def __init__(self, basis: BlockadeBasis):
        self.basis = basis
        self.dim = len(basis)
        self.diag = self._interaction_energies(basis)
        self.hop = self._hopping(basis)

    @staticmethod
    def _interaction_energies(basis):
        v = pair_interactions(basis.cloud)
        occ = basis.occupation
        energy = np.empty(len(basis))
        for start in range(0, len(basis), _CHUNK):
            b = occ[start : start + _CHUNK].astype(np.float64)
            energy[start : start + _CHUNK] = 0.5 * np.einsum("ki,ki->k", b @ v, b)
        return energy

    @staticmethod
    def _hopping(basis):
        rows, cols = [], []
        masks = basis.masks
        occ = basis.occupation
        for i in range(basis.n_atoms):
            excited = np.nonzero(occ[:, i])[0]
            if len(excited) == 0:
                continue
            target = basis.index_of(masks[excited] ^ (np.uint64(1) << np.uint64(i)))
            keep = target >= 0
            rows.append(excited[keep])
            cols.append(target[keep])
        if rows:
            r = np.concatenate(rows)
            c = np.concatenate(cols)
        else:
            r = c = np.zeros(0, dtype=np.int64)
        data = np.ones(2 * len(r))
        hop = sp.csr_matrix(
            (data, (np.concatenate([r, c]), np.concatenate([c, r]))),
            shape=(len(basis), len(basis)),
        )
        hop.sum_duplicates()
        return hop

    def matvec(self, psi, drive_sign=1, omega=1.0):
        psi = np.ascontiguousarray(psi, dtype=np.complex128)
        # real sparse matrix times the (dim, 2) real view of a complex vector
        hopped = (self.hop @ psi.view(np.float64).reshape(-1, 2)).reshape(-1).view(np.complex128)
        return self.diag * psi + (0.5 * drive_sign * omega) * hopped

    def dense(self, drive_sign=1, omega=1.0) -> np.ndarray:
        return np.diag(self.diag) + 0.5 * drive_sign * omega * self.hop.toarray()


_HAMILTONIANS: "weakref.WeakKeyDictionary[BlockadeBasis, ManyBodyHamiltonian]" = weakref.WeakKeyDictionary()


def hamiltonian_for(basis: BlockadeBasis) -> ManyBodyHamiltonian:
    """Build (once per basis object) the sparse Hamiltonian."""
    ham = _HAMILTONIANS.get(basis)
    if ham is None:
        ham = ManyBodyHamiltonian(basis)
        _HAMILTONIANS[basis] = ham
    return ham


def _check_sign(drive_sign):
    if drive_sign not in (1, -1):
        raise InvalidArgument(f"drive_sign must be +1 or -1, got {drive_sign!r}")


def _check_state(state, basis):
    state = np.asarray(state)
    if state.shape != (len(basis),):
        raise InvalidArgument(
            f"state has shape {state.shape}, basis dimension is {len(basis)}"
        )
    return state


def ground_state(basis: BlockadeBasis) -> np.ndarray:
    psi = np.zeros(len(basis), dtype=np.complex128)
    psi[0] = 1.0
    return psi


def apply_hamiltonian(state, basis: BlockadeBasis, drive_sign: int = 1, omega: float = 1.0):
    """Return ``H @ state`` for the given drive sign."""
    _check_sign(drive_sign)
    state = _check_state(state, basis).astype(np.complex128, copy=False)
    return hamiltonian_for(basis).matvec(state, drive_sign, omega)


def evolve(state, basis, drive_sign=1, duration=0.0, tol=DEFAULT_TOL, omega=1.0):
    """Propagate ``state`` by ``exp(-i H duration)`` at fixed drive sign."""
    _check_sign(drive_sign)
    state = _check_state(state, basis)
    if duration < 0:
        raise InvalidArgument(f"duration must be >= 0, got {duration!r}")
    ham = hamiltonian_for(basis)
    return expmv_hermitian(lambda x: ham.matvec(x, drive_sign, omega), state, duration, tol)


def rydberg_number(state, basis: BlockadeBasis) -> float:
    """Expected number of Rydberg excitations ``sum |c_k|^2 popcount(mask_k)``."""
    state = _check_state(state, basis)
    return float(np.dot(np.abs(state) ** 2, basis.excitations))


def run_echo(basis: BlockadeBasis, protocol: EchoProtocol, tol: float = DEFAULT_TOL) -> float:
    """Rydberg number at ``t = tau`` after a rotary echo flipped at ``tau_p``."""
    psi = evolve(ground_state(basis), basis, +1, protocol.tau_p, tol, protocol.omega)
    psi = evolve(psi, basis, -1, protocol.tau - protocol.tau_p, tol, protocol.omega)
    return rydberg_number(psi, basis)


def echo_curve(
    basis: BlockadeBasis,
    tau: float,
    grid_points: int = DEFAULT_GRID_POINTS,
    tol: float = DEFAULT_TOL,
    omega: float = 1.0,
) -> EchoCurve:
    """Rotary-echo signal on a uniform ``tau_p`` grid over ``[0, tau]``.

    The ``+Omega`` segment is propagated incrementally along the grid; each
    ``-Omega`` segment is propagated separately.
    """
    if int(grid_points) != grid_points or grid_points < 5:
        raise InvalidArgument(f"grid_points must be an integer >= 5, got {grid_points!r}")
    EchoProtocol(tau, 0.0, omega)
    taus = np.linspace(0.0, tau, int(grid_points))
    n_r = np.empty(len(taus))
    forward = ground_state(basis)
    for k, tp in enumerate(taus):
        if k > 0:
            forward = evolve(forward, basis, +1, tp - taus[k - 1], tol, omega)
        final = evolve(forward, basis, -1, tau - tp, tol, omega)
        n_r[k] = rydberg_number(final, basis)
    return EchoCurve(
        tau,
        taus,
        n_r,
        n_atoms=basis.n_atoms,
        meta={
            "c6": basis.cloud.c6,
            "seed": basis.cloud.seed,
            "cutoff_kappa": basis.cutoff_kappa,
            "basis_dimension": len(basis),
        },
    )


def aggregate_curves(curves) -> EchoCurve:
    """Pointwise mean and standard error of the mean over realizations."""
    curves = list(curves)
    if not curves:
        raise InvalidArgument("need at least one curve")
    ref = curves[0]
    for c in curves[1:]:
        if c.tau != ref.tau or not np.array_equal(c.tau_p, ref.tau_p):
            raise InvalidArgument("curves must share tau and the tau_p grid")
    stack = np.array([c.n_r for c in curves])
    mean = stack.mean(axis=0)
    if len(curves) > 1:
        stderr = stack.std(axis=0, ddof=1) / np.sqrt(len(curves))
    else:
        stderr = np.zeros_like(mean)
    return EchoCurve(ref.tau, ref.tau_p, mean, stderr, ref.n_atoms, {"n_realizations": len(curves)})


def echo_study(
    n_atoms: int,
    c6: float,
    taus,
    n_realizations: int,
    base_seed: int = 0,
    grid_points: int = DEFAULT_GRID_POINTS,
    cutoff_kappa: float = DEFAULT_KAPPA,
    max_excitations: int | None = None,
    tol: float = DEFAULT_TOL,
    max_dimension: int = DEFAULT_MAX_DIMENSION,
    progress=None,
) -> dict[float, EchoCurve]:
    """Disorder-averaged echo curves for several pulse lengths.

    Realization ``k`` uses the cloud seeded ``base_seed + k``; each cloud's
    basis and Hamiltonian are built once and reused for every ``tau``.
    """
    if int(n_realizations) != n_realizations or n_realizations < 1:
        raise InvalidArgument("n_realizations must be a positive integer")
    taus = [float(t) for t in taus]
    per_tau = {t: [] for t in taus}
    dims = []
    for k in range(int(n_realizations)):
        seed = base_seed + k
        try:
            cloud = sample_positions(n_atoms, c6, seed)
            basis = build_blockade_basis(cloud, cutoff_kappa, max_excitations, max_dimension)
            for t in taus:
                per_tau[t].append(echo_curve(basis, t, grid_points, tol))
        except RydephaseError as exc:
            raise RealizationFailure(seed, exc) from exc
        dims.append(len(basis))
        if progress is not None:
            progress(k, seed, len(basis))
    out = {}
    for t in taus:
        avg = aggregate_curves(per_tau[t])
        avg.meta.update(
            c6=c6,
            base_seed=base_seed,
            cutoff_kappa=cutoff_kappa,
            max_excitations=max_excitations,
            mean_basis_dimension=float(np.mean(dims)),
        )
        out[t] = avg
    return out


def disorder_average(
    n_realizations: int,
    base_seed: int,
    n_atoms: int,
    c6: float,
    tau: float,
    grid_points: int = DEFAULT_GRID_POINTS,
    **kwargs,
) -> EchoCurve:
    """Mean echo curve (with standard errors) over independent clouds."""
    return echo_study(n_atoms, c6, [tau], n_realizations, base_seed, grid_points, **kwargs)[float(tau)]
