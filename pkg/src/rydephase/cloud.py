"""Frozen random atom clouds and trap-geometry helper formulas.

Many-body quantities use dimensionless units: hbar = 1, the drive Rabi
frequency Omega = 1 sets the time scale and the box edge L = V**(1/3) = 1 sets
the length scale. The interaction strength is therefore
``c6 = C6 / (hbar * Omega * V**2)``.

Positions are drawn with numpy's PCG64 bit generator
(``numpy.random.default_rng(seed)``), which produces the same stream on every
platform for a given seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import k as K_B

from .errors import InvalidArgument

__all__ = [
    "AtomCloud",
    "CloudGeometry",
    "sample_positions",
    "pair_interactions",
    "peak_density",
    "radial_width",
]


@dataclass(frozen=True)
class AtomCloud:
    """One disorder realization: ``n_atoms`` frozen positions in the unit cube."""

    positions: np.ndarray = field(repr=False)
    c6: float
    seed: int | None = None  # None for hand-placed positions

    def __post_init__(self):
        pos = np.array(self.positions, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[1] != 3 or pos.shape[0] < 1:
            raise InvalidArgument("positions must have shape (n, 3) with n >= 1")
        if np.any(pos < 0.0) or np.any(pos >= 1.0):
            raise InvalidArgument("positions must lie in [0, 1)^3")
        if not self.c6 >= 0.0:
            raise InvalidArgument(f"c6 must be >= 0, got {self.c6!r}")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "c6", float(self.c6))
        if self.seed is not None:
            object.__setattr__(self, "seed", int(self.seed))

    @property
    def n_atoms(self) -> int:
        return self.positions.shape[0]

    def to_dict(self) -> dict:
        return {
            "n_atoms": self.n_atoms,
            "c6": self.c6,
            "seed": self.seed,
            "positions": self.positions.tolist(),
        }

    @classmethod
    def from_dict(cls, record: dict) -> "AtomCloud":
        cloud = cls(np.asarray(record["positions"]), record["c6"], record.get("seed"))
        if cloud.n_atoms != int(record["n_atoms"]):
            raise InvalidArgument("n_atoms does not match the number of positions")
        return cloud

    def __eq__(self, other):
        if not isinstance(other, AtomCloud):
            return NotImplemented
        return (
            self.c6 == other.c6
            and self.seed == other.seed
            and np.array_equal(self.positions, other.positions)
        )

    def __hash__(self):
        return hash((self.c6, self.seed, self.positions.tobytes()))


def sample_positions(n: int, c6: float, seed: int) -> AtomCloud:
    """Draw ``n`` i.i.d. uniform positions in the unit cube, keyed by ``seed``."""
    if int(n) != n or n < 1:
        raise InvalidArgument(f"n must be a positive integer, got {n!r}")
    if seed < 0 or seed >= 2**64:
        raise InvalidArgument("seed must be an unsigned 64-bit integer")
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    return AtomCloud(rng.random((int(n), 3)), c6, seed)


def pair_interactions(cloud: AtomCloud) -> np.ndarray:
    """Symmetric matrix of van der Waals shifts ``c6 / |r_i - r_j|**6`` (zero diagonal).

    Open boundaries: no periodic images are included.
    """
    pos = cloud.positions
    diff = pos[:, None, :] - pos[None, :, :]
    r2 = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(r2, 1.0)
    with np.errstate(divide="ignore"):
        v = cloud.c6 / r2**3
    np.fill_diagonal(v, 0.0)
    return v


@dataclass(frozen=True)
class CloudGeometry:
    """Harmonically trapped thermal cloud (SI units)."""

    n0: float
    sigma_r: float
    sigma_z: float
    omega_r: float = 1.0
    temperature: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        for name in ("n0", "sigma_r", "sigma_z", "omega_r", "temperature", "mass"):
            value = getattr(self, name)
            if not value > 0:
                raise InvalidArgument(f"{name} must be strictly positive, got {value!r}")


def peak_density(g: CloudGeometry) -> float:
    """Peak ground-state density ``N0 / ((2 pi)^(3/2) sigma_r^2 sigma_z)`` in m^-3."""
    return g.n0 / ((2.0 * math.pi) ** 1.5 * g.sigma_r**2 * g.sigma_z)


def radial_width(omega_r: float, temperature: float, mass: float) -> float:
    """Thermal radial width ``sqrt(k_B T / m) / omega_r`` of a harmonic trap."""
    for name, value in (("omega_r", omega_r), ("temperature", temperature), ("mass", mass)):
        if not value > 0:
            raise InvalidArgument(f"{name} must be > 0, got {value!r}")
    return math.sqrt(K_B * temperature / mass) / omega_r
