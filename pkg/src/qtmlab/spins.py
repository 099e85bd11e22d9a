"""Collective angular-momentum operators and the Dicke block decomposition.

N identical spins of magnitude s couple to the collective operators
J_z, J+, J- which never connect different total-spin sectors.  A sector
("Dicke block") with total spin j is a (2j+1)-dimensional ladder that
appears l_j times in the product space; only the multiplicities l_j are
tracked, never the product-basis states themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SpinEnsembleSpec",
    "DickeBlock",
    "build_collective_operators",
    "block_decomposition",
    "m_values",
]


def _check_half_integer(x, name):
    if x < 0 or abs(2 * x - round(2 * x)) > 1e-12:
        raise ValueError(f"{name} must be a nonnegative half-integer, got {x}")


@dataclass(frozen=True)
class SpinEnsembleSpec:
    """N spins of magnitude s with bare level splitting omega (hbar = k_B = 1)."""

    n_spins: int
    spin_s: float = 0.5
    omega: float = 1.0

    def __post_init__(self):
        if self.n_spins < 1 or self.n_spins != int(self.n_spins):
            raise ValueError(f"n_spins must be a positive integer, got {self.n_spins}")
        _check_half_integer(self.spin_s, "spin_s")
        if self.spin_s < 0.5:
            raise ValueError("spin_s must be >= 1/2")
        if not np.isfinite(self.omega) or self.omega == 0.0:
            raise ValueError("omega must be finite and nonzero")

    @property
    def j_max(self) -> float:
        return self.n_spins * self.spin_s

    @property
    def product_dim(self) -> int:
        return int(round((2 * self.spin_s + 1) ** self.n_spins))


@dataclass(frozen=True)
class DickeBlock:
    """One total-spin sector: quantum number j, ladder dimension 2j+1, multiplicity l_j."""

    j: float
    degeneracy: int

    @property
    def dim(self) -> int:
        return int(round(2 * self.j)) + 1


def m_values(j: float) -> np.ndarray:
    """Magnetic quantum numbers of a spin-j ladder, descending m = j, j-1, ..., -j."""
    _check_half_integer(j, "j")
    return j - np.arange(int(round(2 * j)) + 1)


def build_collective_operators(j: float):
    """Dense (J_z, J+, J-) on the |j, m> ladder, m descending.

    J+-|j,m> = sqrt((j -+ m)(j +- m + 1)) |j, m +- 1>, J_z|j,m> = m|j,m>.
    """
    _check_half_integer(j, "j")
    m = m_values(j)
    d = m.size
    jz = np.diag(m.astype(float))
    jplus = np.zeros((d, d))
    # raising connects m (column, index i+1) to m+1 (row, index i)
    for i in range(d - 1):
        mm = m[i + 1]
        jplus[i, i + 1] = math.sqrt((j - mm) * (j + mm + 1))
    jminus = jplus.T.copy()
    return jz, jplus, jminus


def _multiplicities_spin_half(n: int) -> dict[float, int]:
    # Catalan-triangle rule for N spins 1/2: l_j = C(N, N/2-j) - C(N, N/2-j-1)
    out = {}
    j = (n % 2) / 2.0
    while j <= n / 2.0 + 1e-9:
        k = int(round(n / 2.0 - j))
        l = math.comb(n, k) - (math.comb(n, k - 1) if k >= 1 else 0)
        if l > 0:
            out[j] = l
        j += 1.0
    return out


def _multiplicities_general(n: int, s: float) -> dict[float, int]:
    # iterated angular-momentum addition; dimension bookkeeping only
    mult = {s: 1}
    for _ in range(n - 1):
        new: dict[float, int] = {}
        for j1, l in mult.items():
            j = abs(j1 - s)
            while j <= j1 + s + 1e-9:
                new[j] = new.get(j, 0) + l
                j += 1.0
        mult = new
    return mult


def block_decomposition(spec: SpinEnsembleSpec) -> list[DickeBlock]:
    """All Dicke blocks of the ensemble, sorted ascending in j.

    The multiplicities satisfy sum_j l_j (2j+1) = (2s+1)^N; the top block
    j = N s is unique.
    """
    if spec.spin_s == 0.5:
        mult = _multiplicities_spin_half(spec.n_spins)
    else:
        mult = _multiplicities_general(spec.n_spins, spec.spin_s)
    blocks = [DickeBlock(j=j, degeneracy=l) for j, l in sorted(mult.items())]
    total = sum(b.degeneracy * b.dim for b in blocks)
    if total != spec.product_dim:
        raise AssertionError(
            f"dimension sum rule violated: {total} != {spec.product_dim}"
        )
    return blocks
