"""Level-statistics engine and the quasiperiodic (GAAH) mobility edge.

Two gap ensembles drive the toy engine: Poisson (localized phase,
P(s) = exp(-s/<d>)/<d>, finite weight at zero gap) and GOE
(thermalizing phase, Wigner surmise P(s) = (pi/2) s/<d>^2 exp(-pi s^2/4<d>^2),
level repulsion).  The engine is a parallel collection of two-level
subengines: hot-point gap drawn from GOE, cold-point gap drawn from
Poisson, cold exchange allowed only when the gap fits inside the cold-bath
bandwidth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .rngtools import rng_from

__all__ = [
    "SpectrumEnsemble",
    "MesoSpec",
    "MblCycleParams",
    "sample_gaps",
    "poisson_gap_cdf",
    "goe_gap_cdf",
    "mbl_cycle_monte_carlo",
    "closed_form_work",
    "closed_form_efficiency",
    "gaah_build",
    "mobility_edge",
    "classify_states",
    "mobility_edge_report",
]


@dataclass(frozen=True)
class SpectrumEnsemble:
    kind: str  # "poisson" | "goe" | "meso"
    mean_gap: float = 1.0
    dim: int = 400
    vartheta: float = 0.0  # interpolation parameter for the meso kind
    rng_seed: int = 0

    def __post_init__(self):
        if self.kind not in ("poisson", "goe", "meso"):
            raise ValueError(f"unknown ensemble kind {self.kind!r}")
        if self.mean_gap <= 0:
            raise ValueError("mean gap must be positive")
        if self.kind != "poisson" and self.dim < 64:
            raise ValueError("matrix dimension too small for stable unfolding")


def poisson_gap_cdf(s, mean_gap=1.0):
    return 1.0 - np.exp(-np.asarray(s) / mean_gap)


def goe_gap_cdf(s, mean_gap=1.0):
    s = np.asarray(s) / mean_gap
    return 1.0 - np.exp(-0.25 * np.pi * s * s)


def _goe_matrix(dim: int, rng) -> np.ndarray:
    a = rng.standard_normal((dim, dim))
    return (a + a.T) / np.sqrt(2.0 * dim)


def _unfolded_bulk_gaps(evals: np.ndarray, window_frac: float = 0.05,
                        bulk_frac: float = 0.5) -> np.ndarray:
    """Bulk gaps normalized by the local mean gap over a window_frac window."""
    evals = np.sort(evals)
    n = evals.size
    lo, hi = int(n * (0.5 - bulk_frac / 2)), int(n * (0.5 + bulk_frac / 2))
    gaps = np.diff(evals)
    half = max(int(n * window_frac) // 2, 4)
    out = []
    for i in range(lo, hi):
        a, b = max(i - half, 0), min(i + half, gaps.size)
        local = gaps[a:b].mean()
        out.append(gaps[i] / local)
    return np.asarray(out)


def _meso_hamiltonian(dim: int, vartheta: float, rng, kappa: float = 1.0,
                      epsilon: float = 1.0) -> np.ndarray:
    """(epsilon/kappa) [(1-v) H_GOE + v H_MBL]; H_MBL is Poissonian (diagonal)."""
    h_goe = _goe_matrix(dim, rng)
    h_mbl = np.diag(rng.standard_normal(dim) / np.sqrt(dim)) * 2.0
    return (epsilon / kappa) * ((1.0 - vartheta) * h_goe + vartheta * np.asarray(h_mbl))


def _meso_kappa(dim: int, vartheta: float, seed: int, n_probe: int = 8) -> float:
    """Empirical renormalization keeping the bulk mean gap fixed at its v=0 value."""

    def mean_bulk_gap(v, kappa):
        acc = []
        for r in range(n_probe):
            rng = rng_from(seed, r, stream=17)
            h = _meso_hamiltonian(dim, v, rng, kappa=kappa)
            e = np.sort(np.linalg.eigvalsh(h))
            n = e.size
            lo, hi = int(0.25 * n), int(0.75 * n)
            acc.append(np.diff(e[lo:hi]).mean())
        return float(np.mean(acc))

    ref = mean_bulk_gap(0.0, 1.0)
    cur = mean_bulk_gap(vartheta, 1.0)
    return cur / ref


def sample_gaps(ens: SpectrumEnsemble, count: int) -> np.ndarray:
    """Gap samples with mean ~ mean_gap (bulk-unfolded for matrix ensembles)."""
    rng = rng_from(ens.rng_seed, 0, stream=11)
    if ens.kind == "poisson":
        return rng.exponential(ens.mean_gap, count)
    gaps: list[np.ndarray] = []
    total = 0
    realization = 0
    kappa = 1.0
    if ens.kind == "meso" and ens.vartheta != 0.0:
        kappa = _meso_kappa(ens.dim, ens.vartheta, ens.rng_seed)
    while total < count:
        rng_r = rng_from(ens.rng_seed, realization, stream=12)
        if ens.kind == "goe":
            h = _goe_matrix(ens.dim, rng_r)
        else:
            h = _meso_hamiltonian(ens.dim, ens.vartheta, rng_r, kappa=kappa)
        g = _unfolded_bulk_gaps(np.linalg.eigvalsh(h))
        gaps.append(g)
        total += g.size
        realization += 1
    out = np.concatenate(gaps)[:count]
    return out * ens.mean_gap / out.mean() if ens.kind == "meso" else out * ens.mean_gap


@dataclass(frozen=True)
class MblCycleParams:
    bandwidth: float          # cold-bath bandwidth W_b
    beta_cold: float
    mean_gap: float = 1.0
    t_hot_infinite: bool = True
    beta_hot: float = 0.0

    def __post_init__(self):
        if self.bandwidth <= 0 or self.bandwidth >= self.mean_gap:
            raise ValueError("need 0 < bandwidth << mean gap")
        if self.beta_cold * self.mean_gap <= 1:
            raise ValueError("cold bath must satisfy T_c << <delta>")


def mbl_cycle_monte_carlo(params: MblCycleParams, n_samples: int,
                          rng_seed: int = 0, n_chunks: int = 16) -> dict:
    """Average work and efficiency of the two-level subengine ensemble.

    Per sample: hot gap d ~ GOE surmise, cold gap d' ~ Poisson; the cycle
    starts hot-thermalized (T_h = infinity -> populations 1/2), tunes
    adiabatically to the cold gap, exchanges with the cold bath only if
    d' <= W_b (reaching the cold thermal excitation f = 1/(1+exp(beta d'))),
    tunes back and re-thermalizes hot.  Per-cycle work (W = -(Q_h + Q_c)
    convention): W = -(d - d')(1/2 - f) on exchanging samples, else 0.

    Chunked so parallel and serial runs draw identical streams.
    """
    per = int(np.ceil(n_samples / n_chunks))
    tot_w = tot_w2 = tot_qh = 0.0
    n_eff = 0
    beta = params.beta_cold
    for chunk in range(n_chunks):
        m = min(per, n_samples - n_eff)
        if m <= 0:
            break
        rng = rng_from(rng_seed, chunk, stream=3)
        u = rng.random(m)
        d_hot = params.mean_gap * np.sqrt(-4.0 * np.log1p(-u) / np.pi)
        d_cold = rng.exponential(params.mean_gap, m)
        if params.t_hot_infinite:
            p_hot = 0.5
        else:
            p_hot = 1.0 / (1.0 + np.exp(np.minimum(params.beta_hot * d_hot, 700.0)))
        exchange = d_cold <= params.bandwidth
        f = 1.0 / (1.0 + np.exp(np.minimum(beta * d_cold, 700.0)))
        w = np.where(exchange, -(d_hot - d_cold) * (p_hot - f), 0.0)
        q_h = np.where(exchange, d_hot * (p_hot - f), 0.0)
        tot_w += w.sum()
        tot_w2 += (w * w).sum()
        tot_qh += q_h.sum()
        n_eff += m
    w_mean = tot_w / n_eff
    w_std = np.sqrt(max(tot_w2 / n_eff - w_mean**2, 0.0) / n_eff)
    qh_mean = tot_qh / n_eff
    eta = -w_mean / qh_mean if qh_mean > 0 else float("nan")
    return {
        "W_tot": w_mean,
        "W_stderr": w_std,
        "Q_h": qh_mean,
        "eta": eta,
        "n_samples": n_eff,
    }


def closed_form_work(params: MblCycleParams) -> float:
    """-W_b + 2 ln2 / beta_C: the quoted adiabatic closed form (see notes).

    Stated for T_c << W_b << <delta>; the faithful subengine average lands
    below it at moderate beta*W_b (see the module tests).
    """
    return -params.bandwidth + 2.0 * np.log(2.0) / params.beta_cold


def closed_form_efficiency(params: MblCycleParams) -> float:
    """eta ~ 1 - W_b / (2 <delta>)."""
    return 1.0 - params.bandwidth / (2.0 * params.mean_gap)


# ---------------------------------------------------------------------------
# generalized Aubry-Andre-Harper chain

GOLDEN_RATIO_FREQ = (np.sqrt(5.0) - 1.0) / 2.0


def gaah_build(n_sites: int, hopping: float, theta: float, alpha: float,
               phi: float = 0.0, nu: float = GOLDEN_RATIO_FREQ):
    """Open-boundary GAAH chain; returns (energies, eigenvectors).

    Onsite potential V_i = 2 theta cos(2 pi nu i + phi) / (1 - alpha cos(2 pi nu i + phi)).
    """
    if not (-1.0 < alpha < 1.0):
        raise ValueError("alpha must lie in (-1, 1)")
    i = np.arange(1, n_sites + 1)
    c = np.cos(2.0 * np.pi * nu * i + phi)
    v = 2.0 * theta * c / (1.0 - alpha * c)
    return eigh_tridiagonal(v, hopping * np.ones(n_sites - 1))


def mobility_edge(hopping: float, theta: float, alpha: float) -> float:
    """Self-duality energy E_c = 2 sign(theta)(|t| - |theta|)/alpha.

    States on the sign(theta) side of E_c are localized, the others extended.
    (The factor 2 is required by the numerics; see the repository notes.)
    """
    if alpha == 0.0:
        return np.inf * np.sign(theta) * (abs(hopping) - abs(theta))
    return 2.0 * np.sign(theta) * (abs(hopping) - abs(theta)) / alpha


def inverse_participation_ratio(vecs: np.ndarray) -> np.ndarray:
    return np.sum(np.abs(vecs) ** 4, axis=0)


def classify_states(energies, vecs, n_sites: int, ipr_cut: float | None = None):
    """Boolean localized-classification per state from the IPR bimodality."""
    ipr = inverse_participation_ratio(vecs)
    if ipr_cut is None:
        ipr_cut = 10.0 / n_sites
    return ipr > ipr_cut, ipr


def mobility_edge_report(n_sites: int, hopping: float, theta: float, alpha: float,
                         phases, ipr_cut: float | None = None) -> dict:
    """Phase-averaged localized/extended fractions and edge agreement."""
    phases = list(phases)
    mis = 0
    tot = 0
    frac_loc = 0.0
    e_c = mobility_edge(hopping, theta, alpha)
    side = np.sign(theta) if theta != 0 else 1.0
    for phi in phases:
        e, v = gaah_build(n_sites, hopping, theta, alpha, phi=phi)
        loc, _ = classify_states(e, v, n_sites, ipr_cut)
        predicted = side * (e - e_c) > 0
        mis += int(np.sum(predicted != loc))
        tot += e.size
        frac_loc += loc.mean()
    return {
        "edge": e_c,
        "misclassified_fraction": mis / tot,
        "localized_fraction": frac_loc / len(phases),
        "n_states": tot,
    }
