"""Blockade-truncated many-body basis.

A configuration is an excitation bit mask (bit ``i`` set means atom ``i`` is in
the Rydberg state). A configuration is kept iff every excited pair has an
interaction shift strictly below ``cutoff_kappa`` (in units of Omega) and, when
``max_excitations`` is given, it has at most that many excitations. The allowed
set is exactly the family of independent sets of the "conflict graph" whose
edges join pairs with shift ``>= cutoff_kappa``, so it is closed downward.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .cloud import AtomCloud, pair_interactions
from .errors import InvalidArgument, ResourceLimitError

__all__ = [
    "DEFAULT_KAPPA",
    "DEFAULT_MAX_DIMENSION",
    "MAX_ATOMS",
    "BlockadeBasis",
    "build_blockade_basis",
    "basis_dimension",
    "popcount",
]

DEFAULT_KAPPA = 20.0
DEFAULT_MAX_DIMENSION = 2_000_000
MAX_ATOMS = 64

_ONE = np.uint64(1)


def popcount(masks: np.ndarray) -> np.ndarray:
    """Number of set bits of each entry of a uint64 array."""
    m = np.asarray(masks, dtype=np.uint64).copy()
    out = np.zeros(m.shape, dtype=np.int64)
    while np.any(m):
        out += (m & _ONE).astype(np.int64)
        m >>= _ONE
    return out


@dataclass(frozen=True, eq=False)
class BlockadeBasis:
    """Ordered list of allowed configurations for one cloud.

    ``masks`` is sorted by (excitation count, mask value); element 0 is the
    all-ground configuration.
    """

    masks: np.ndarray = field(repr=False)
    cloud: AtomCloud = field(repr=False)
    cutoff_kappa: float
    max_excitations: int | None = None

    def __len__(self):
        return len(self.masks)

    @property
    def n_atoms(self) -> int:
        return self.cloud.n_atoms

    @cached_property
    def excitations(self) -> np.ndarray:
        return popcount(self.masks)

    @cached_property
    def occupation(self) -> np.ndarray:
        """Dense (dim, n_atoms) 0/1 array; row k holds the bits of ``masks[k]``."""
        shifts = np.arange(self.n_atoms, dtype=np.uint64)
        return ((self.masks[:, None] >> shifts) & _ONE).astype(np.int8)

    def index_of(self, masks) -> np.ndarray:
        """Basis positions of ``masks``; -1 where a mask is not a member."""
        masks = np.asarray(masks, dtype=np.uint64)
        order = self._sort_order
        sorted_masks = self.masks[order]
        pos = np.searchsorted(sorted_masks, masks)
        pos = np.minimum(pos, len(sorted_masks) - 1)
        found = sorted_masks[pos] == masks
        return np.where(found, order[pos], -1)

    @cached_property
    def _sort_order(self) -> np.ndarray:
        return np.argsort(self.masks, kind="stable")

    def to_dict(self) -> dict:
        return {
            "cutoff_kappa": None if np.isinf(self.cutoff_kappa) else self.cutoff_kappa,
            "max_excitations": self.max_excitations,
            "cloud": {k: v for k, v in self.cloud.to_dict().items() if k != "positions"},
            "masks": [int(m) for m in self.masks],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def build_blockade_basis(
    cloud: AtomCloud,
    cutoff_kappa: float = DEFAULT_KAPPA,
    max_excitations: int | None = None,
    max_dimension: int = DEFAULT_MAX_DIMENSION,
) -> BlockadeBasis:
    """Enumerate every configuration allowed by the pair-energy cutoff.

    Parameters
    ----------
    cloud : AtomCloud
        Frozen positions and interaction strength.
    cutoff_kappa : float
        Configurations containing an excited pair with shift ``>= cutoff_kappa``
        are excluded. ``numpy.inf`` keeps the full product space.
    max_excitations : int, optional
        Upper bound on the number of simultaneous excitations.
    max_dimension : int
        Hard limit on the basis size.

    Raises
    ------
    ResourceLimitError
        If the basis would contain more than ``max_dimension`` configurations.
    """
    if not cutoff_kappa > 0:
        raise InvalidArgument(f"cutoff_kappa must be > 0, got {cutoff_kappa!r}")
    if max_excitations is not None and (int(max_excitations) != max_excitations or max_excitations < 1):
        raise InvalidArgument("max_excitations must be a positive integer")
    n = cloud.n_atoms
    if n > MAX_ATOMS:
        raise InvalidArgument(f"at most {MAX_ATOMS} atoms are supported, got {n}")

    v = pair_interactions(cloud)
    blocked = v >= cutoff_kappa
    conflict = np.zeros(n, dtype=np.uint64)
    for i in range(n):
        for j in np.nonzero(blocked[i])[0]:
            conflict[i] |= _ONE << np.uint64(j)

    # Level k holds all allowed k-excitation masks; each is extended only by
    # atoms above its highest set bit so every mask is generated exactly once.
    levels = [np.zeros(1, dtype=np.uint64)]
    top = np.full(1, -1, dtype=np.int64)
    total = 1
    limit = n if max_excitations is None else min(n, int(max_excitations))
    for _ in range(limit):
        current = levels[-1]
        new_masks, new_top = [], []
        for i in range(n):
            ok = (top < i) & ((current & conflict[i]) == 0)
            if ok.any():
                new_masks.append(current[ok] | (_ONE << np.uint64(i)))
                new_top.append(np.full(int(ok.sum()), i, dtype=np.int64))
        if not new_masks:
            break
        masks = np.concatenate(new_masks)
        total += len(masks)
        if total > max_dimension:
            raise ResourceLimitError(
                f"blockade basis has at least {total} configurations "
                f"(limit {max_dimension})",
                size=total,
            )
        order = np.argsort(masks, kind="stable")
        levels.append(masks[order])
        top = np.concatenate(new_top)[order]

    return BlockadeBasis(np.concatenate(levels), cloud, float(cutoff_kappa), max_excitations)


def basis_dimension(basis: BlockadeBasis) -> int:
    return len(basis.masks)
