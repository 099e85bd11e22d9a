"""Thermal master-equation dynamics of Dicke blocks.

Collective emission/absorption acts within each total-spin sector as a
birth-death chain over m.  Everything downstream (energies, heat
capacities, engine output) is a functional of the populations, so
coherences are not tracked.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spins import m_values, SpinEnsembleSpec, block_decomposition

__all__ = [
    "BathSpec",
    "BlockPopulations",
    "EnsembleState",
    "rate_matrix",
    "evolve_block",
    "block_gibbs",
    "independent_gibbs",
    "block_energy",
    "collective_heat_capacity",
    "independent_heat_capacity",
    "critical_temperature",
    "heat_capacity_crossover",
    "relaxation_rate",
    "time_to_1e",
]


@dataclass(frozen=True)
class BathSpec:
    """One-sided bath rate G(omega) with detailed balance fixing G(-omega).

    G(-nu) = G(nu) exp(-beta nu) is enforced at construction; `gamma` is the
    flat spectral density G evaluated on the emission side.
    """

    beta: float
    gamma: float = 1.0
    label: str = "bath"

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("bath rate must be nonnegative")

    def g_down(self, omega: float) -> float:
        """Rate G(|omega|) feeding emission."""
        return self.gamma

    def g_up(self, omega: float) -> float:
        """Rate G(-|omega|) feeding absorption, via detailed balance."""
        x = self.beta * abs(omega)
        # guard: exp overflow only possible for beta < 0 (inverted bath)
        return self.gamma * np.exp(-x) if x > -700 else np.inf


@dataclass
class BlockPopulations:
    """Populations over m = j, j-1, ..., -j of one Dicke block."""

    j: float
    p: np.ndarray

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        if self.p.size != int(round(2 * self.j)) + 1:
            raise ValueError("population vector length must be 2j+1")
        if np.any(self.p < -1e-12):
            raise ValueError("negative populations")

    @property
    def weight(self) -> float:
        return float(self.p.sum())

    def energy(self, omega: float) -> float:
        return float(omega * (m_values(self.j) @ self.p))


@dataclass
class EnsembleState:
    """Weighted collection of blocks; weights p_{j,i} are constants of motion."""

    blocks: list = field(default_factory=list)  # list of (BlockPopulations, weight l_j)

    def energy(self, omega: float) -> float:
        return sum(w * b.energy(omega) for b, w in self.blocks)


def rate_matrix(j: float, g_down: float, g_up: float) -> np.ndarray:
    """Birth-death generator on the populations of a spin-j block.

    Column-stochastic convention: dp/dt = L @ p.  Emission m -> m-1 carries
    the matrix element (j+m)(j-m+1), absorption m -> m+1 carries
    (j-m)(j+m+1); the coefficients peak at ~j^2 near m = 0.
    """
    m = m_values(j)
    d = m.size
    down = g_down * (j + m) * (j - m + 1)  # loss to m-1 (next index, m descending)
    up = g_up * (j - m) * (j + m + 1)      # loss to m+1 (previous index)
    L = np.zeros((d, d))
    L -= np.diag(down + up)
    if d > 1:
        L += np.diag(down[:-1], k=-1)  # gain of m-1 row from m column
        L += np.diag(up[1:], k=1)      # gain of m+1 row from m column
    return L


def evolve_block(
    pops: BlockPopulations,
    bath: BathSpec,
    omega: float,
    dt: float,
    t_total: float,
) -> BlockPopulations:
    """Advance one block under the thermal birth-death equation with RK4.

    Rejects the step size when dt * G(omega) * j^2 >= 1/2 (the generator's
    largest rates scale as j^2 near m = 0).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    gmax = max(bath.g_down(omega), bath.g_up(omega))
    if dt * gmax * max(pops.j, 1.0) ** 2 >= 0.5:
        raise ValueError(
            f"step size dt={dt} violates stability bound dt*G*j^2 < 1/2 "
            f"(G={gmax}, j={pops.j})"
        )
    L = rate_matrix(pops.j, bath.g_down(omega), bath.g_up(omega))
    p = pops.p.copy()
    n_steps = int(np.ceil(t_total / dt))
    h = t_total / max(n_steps, 1)
    for _ in range(n_steps):
        k1 = L @ p
        k2 = L @ (p + 0.5 * h * k1)
        k3 = L @ (p + 0.5 * h * k2)
        k4 = L @ (p + h * k3)
        p = p + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return BlockPopulations(j=pops.j, p=p)


def block_gibbs(j: float, beta: float, omega: float, weight: float = 1.0) -> BlockPopulations:
    """Block thermal populations p_m ∝ exp(-m omega beta), any sign of beta."""
    m = m_values(j)
    logw = -m * omega * beta
    logw -= logw.max()  # log-sum-exp guard
    p = np.exp(logw)
    p *= weight / p.sum()
    return BlockPopulations(j=j, p=p)


def independent_gibbs(spec: SpinEnsembleSpec, beta: float) -> np.ndarray:
    """Single-spin thermal populations over m = s..-s (product state per spin)."""
    return block_gibbs(spec.spin_s, beta, spec.omega).p


def block_energy(j: float, beta: float, omega: float) -> float:
    """Mean energy e_j(beta) = omega <m> of a block Gibbs state.

    Stable closed form e_j = (omega/2) coth(x/2) - omega (j+1/2) coth((j+1/2) x),
    x = omega beta, with the small-x series -omega x j(j+1)/3 + O(x^3).
    """
    x = omega * beta
    a = j + 0.5
    if j == 0:
        return 0.0
    if abs(x) * a < 1e-4:
        jj = j * (j + 1)
        # series of the coth difference
        return float(omega * (-x * jj / 3.0 + x**3 * (jj / 90.0 + jj * jj / 45.0)))
    return float(omega * (0.5 / np.tanh(0.5 * x) - a / np.tanh(a * x)))


def _c_block(j: float, x: float) -> float:
    """C_j as a function of x = omega*beta (dimensionless, k_B = 1)."""
    if j == 0:
        return 0.0
    a = j + 0.5
    if abs(x) * a < 5e-3:
        jj = j * (j + 1)
        # x^2 j(j+1)/3 + x^4 (1/240 - a^4/15)
        return jj * x**2 / 3.0 + x**4 * (1.0 / 240.0 - a**4 / 15.0)
    # guard against sinh overflow: each term decays to 0 for large |arg|
    def inv_sinh_sq(y):
        y = abs(y)
        if y > 350.0:
            return 0.0
        return 1.0 / np.sinh(y) ** 2

    return x**2 * (0.25 * inv_sinh_sq(0.5 * x) - a**2 * inv_sinh_sq(a * x))


def collective_heat_capacity(j: float, beta: float, omega: float) -> float:
    """Heat capacity C_j(beta) of one Dicke block in its Gibbs state.

    C_j = (omega beta)^2 [ (2 sinh(omega beta/2))^-2 - ((j+1/2)/sinh((j+1/2) omega beta))^2 ],
    with the beta -> 0 limit (omega beta)^2 j(j+1)/3.
    """
    return float(_c_block(j, omega * beta))


def independent_heat_capacity(spec: SpinEnsembleSpec, beta: float) -> float:
    """N independent spins: C_ind = N C_{j=s}(beta)."""
    return spec.n_spins * collective_heat_capacity(spec.spin_s, beta, spec.omega)


def ensemble_heat_capacity(spec: SpinEnsembleSpec, weights: dict, beta: float) -> float:
    """C_col = sum_j p_j C_j for block weights p_j (summed over degenerate copies)."""
    return sum(w * collective_heat_capacity(j, beta, spec.omega) for j, w in weights.items())


def critical_temperature(spec: SpinEnsembleSpec) -> float:
    """Crossover temperature where C_+^col meets C^ind.

    T_cr / omega = sqrt((4 N s (s+1) + 1) / 12); approximate ("~") formula.
    """
    n, s = spec.n_spins, spec.spin_s
    return abs(spec.omega) * np.sqrt((4 * n * s * (s + 1) + 1) / 12.0)


def heat_capacity_crossover(spec: SpinEnsembleSpec) -> float:
    """Numerically located temperature where C_{j=Ns}(beta) = N C_{j=s}(beta).

    Root-find on x = omega*beta; returns T_cross (same units as omega).
    """
    from scipy.optimize import brentq

    jtop, s, n = spec.j_max, spec.spin_s, spec.n_spins

    def f(x):
        return _c_block(jtop, x) - n * _c_block(s, x)

    # high-T side f > 0 (ratio (Ns+1)/(s+1) > 1), low-T side f < 0
    x_lo, x_hi = 1e-3, 1.0
    while f(x_hi) > 0 and x_hi < 1e3:
        x_hi *= 2.0
    if f(x_lo) <= 0 or f(x_hi) >= 0:
        raise RuntimeError("failed to bracket heat-capacity crossover")
    x_star = brentq(f, x_lo, x_hi, xtol=1e-12, rtol=1e-12)
    return abs(spec.omega) / x_star


def relaxation_rate(j: float, bath: BathSpec, omega: float) -> float:
    """Asymptotic relaxation rate (spectral gap) of the block generator."""
    L = rate_matrix(j, bath.g_down(omega), bath.g_up(omega))
    ev = np.linalg.eigvals(L)
    ev = ev.real[np.abs(ev) > 1e-10 * max(1.0, np.abs(ev).max())]
    return float(-ev.max())


def time_to_1e(
    pops0: BlockPopulations,
    bath: BathSpec,
    omega: float,
    dt: float | None = None,
    t_max: float = 1e5,
) -> float:
    """Time for |E(t) - E_ss| to close to 1/e of its initial value."""
    j = pops0.j
    L = rate_matrix(j, bath.g_down(omega), bath.g_up(omega))
    pss = block_gibbs(j, bath.beta, omega, weight=pops0.weight)
    m = m_values(j)
    e_ss = omega * (m @ pss.p)
    e0 = omega * (m @ pops0.p)
    gap0 = abs(e0 - e_ss)
    if gap0 == 0:
        return 0.0
    target = gap0 / np.e
    gmax = max(bath.g_down(omega), bath.g_up(omega))
    if dt is None:
        dt = 0.05 / (gmax * max(j, 1.0) ** 2)
    from scipy.linalg import expm

    P = expm(L * dt)
    p = pops0.p.copy()
    t = 0.0
    prev = gap0
    while t < t_max:
        p_new = P @ p
        t_new = t + dt
        cur = abs(omega * (m @ p_new) - e_ss)
        if cur <= target:
            # linear interpolation inside the step
            frac = (prev - target) / max(prev - cur, 1e-300)
            return t + frac * dt
        p, t, prev = p_new, t_new, cur
    raise RuntimeError("no 1/e closure within t_max")
