"""Finite-time critical Otto engine on the TFIM working medium.

Cycle: A --(unitary ramp, rate 1/tau1)--> B --(energizing reset)--> C
--(unitary ramp back, rate 1/tau2)--> D --(relaxing reset)--> A.
Baths are per-momentum-mode population resets: the relaxing bath targets
excitation q_R (~0, close to the ground state), the energizing bath targets
q_E (default 1/2, the unique maximal-entropy pair state) independently of
the pre-stroke state.  Only stroke 1 depends on tau1, which is what makes
W(tau1) - W_inf inherit the Kibble-Zurek scaling of the stroke-1
excitation energy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fitting import ScalingFit, fit_power_law
from .freefermion import (
    ModeEnsembleState,
    TfimSpec,
    _pair_eigvecs,
    evolve_closed,
    ground_state,
    momenta,
    spectrum,
)
from .thermo import CycleOutcome, make_outcome

__all__ = [
    "CriticalCycleSpec",
    "run_critical_cycle",
    "adiabatic_limit",
    "work_scaling",
    "optimal_quench",
    "max_efficiency_bound",
]


@dataclass(frozen=True)
class CriticalCycleSpec:
    chain: TfimSpec          # h_start = h1 (point A), h_end = h2 (point B)
    tau1: float
    tau2: float
    q_energize: float = 0.5
    q_relax: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.q_energize <= 1.0 and 0.0 <= self.q_relax <= 1.0):
            raise ValueError("bath targets must lie in [0, 1]")
        if self.tau1 <= 0 or self.tau2 <= 0:
            raise ValueError("stroke rates 1/tau must be finite and positive")
        j = self.chain.j_coupling
        h1, h2 = self.chain.h_start, self.chain.h_end
        lo, hi = min(h1, h2), max(h1, h2)
        crosses = (lo < j < hi) or (lo < -j < hi)
        ends_at = np.isclose(abs(h2), j)
        if not (crosses or ends_at):
            raise ValueError("stroke-1 path must cross a QCP (|h|=J) or end at one")


def _stroke3_populations(spec: CriticalCycleSpec) -> np.ndarray:
    """Pair excitation probabilities at h1 after the sudden-ish return stroke.

    The energizing reset erases stroke-1 history, so stroke 3 always starts
    from the fixed mixture (1-q_E)|g2><g2| + q_E|e2><e2| and its outcome is
    tau1-independent.  Evolves the two h2 eigenvectors through the reversed
    ramp and mixes the resulting excitation probabilities.
    """
    chain = spec.chain
    back = TfimSpec(
        n_sites=chain.n_sites,
        j_coupling=chain.j_coupling,
        h_start=chain.h_end,
        h_end=chain.h_start,
    )
    g2, e2 = _pair_eigvecs(chain, chain.h_end)
    k = momenta(chain.n_sites)
    st_g = evolve_closed(back, ModeEnsembleState(k=k, amplitudes=g2.astype(complex)), spec.tau2)
    st_e = evolve_closed(back, ModeEnsembleState(k=k, amplitudes=e2.astype(complex)), spec.tau2)
    _, e1 = _pair_eigvecs(chain, chain.h_start)
    p_from_g = np.abs(np.einsum("mi,mi->m", e1.conj(), st_g.amplitudes)) ** 2
    p_from_e = np.abs(np.einsum("mi,mi->m", e1.conj(), st_e.amplitudes)) ** 2
    return (1.0 - spec.q_energize) * p_from_g + spec.q_energize * p_from_e


def _cycle_energies(spec: CriticalCycleSpec, e_b_excitation: float):
    """Assemble the four corner energies given the stroke-1 excitation energy."""
    chain = spec.chain
    eps1 = spectrum(chain, chain.h_start)
    eps2 = spectrum(chain, chain.h_end)
    e_gs1, e_gs2 = -eps1.sum(), -eps2.sum()
    e_a = e_gs1 + spec.q_relax * 2.0 * eps1.sum()
    e_b = e_gs2 + e_b_excitation
    e_c = e_gs2 + spec.q_energize * 2.0 * eps2.sum()
    p3 = _stroke3_populations(spec)
    e_d = e_gs1 + float(2.0 * (eps1 * p3).sum())
    return e_a, e_b, e_c, e_d


def run_critical_cycle(spec: CriticalCycleSpec) -> CycleOutcome:
    """One full cycle; heats from the reset bookkeeping, W = -(Q_in + Q_out)."""
    chain = spec.chain
    start = ground_state(chain, chain.h_start)
    st_b = evolve_closed(chain, start, spec.tau1)
    from .freefermion import excitation_energy

    ex_b = excitation_energy(chain, st_b, chain.h_end)
    if spec.q_relax > 0.0:
        g1, e1 = _pair_eigvecs(chain, chain.h_start)
        k = momenta(chain.n_sites)
        st_b_exc = evolve_closed(
            chain, ModeEnsembleState(k=k, amplitudes=e1.astype(complex)), spec.tau1
        )
        ex_from_exc = excitation_energy(chain, st_b_exc, chain.h_end)
        ex_b = (1.0 - spec.q_relax) * ex_b + spec.q_relax * ex_from_exc
    e_a, e_b, e_c, e_d = _cycle_energies(spec, ex_b)
    q_in = e_c - e_b
    q_out = e_a - e_d
    tau_cyc = spec.chain.ramp_duration(spec.tau1) + spec.chain.ramp_duration(spec.tau2)
    return make_outcome(q_in, q_out, cycle_time=tau_cyc)


def adiabatic_limit(spec: CriticalCycleSpec) -> CycleOutcome:
    """tau1 -> infinity cycle (stroke 3 still at the configured tau2)."""
    e_a, e_b, e_c, e_d = _cycle_energies(spec, 0.0)
    q_in = e_c - e_b
    q_out = e_a - e_d
    return make_outcome(q_in, q_out, cycle_time=float("inf"))


def work_scaling(spec: CriticalCycleSpec, tau1_values) -> tuple[ScalingFit, list]:
    """Fit log(W - W_inf) vs log(tau1) over the supplied quench times.

    Expected exponent: -nu*d/(nu*z+1) = -1/2 for ramps crossing the TFIM
    critical points, -nu(d+z)/(nu*z+1) = -1 for ramps ending at one.
    """
    w_inf = adiabatic_limit(spec).work
    rows = []
    for t1 in tau1_values:
        s = CriticalCycleSpec(chain=spec.chain, tau1=float(t1), tau2=spec.tau2,
                              q_energize=spec.q_energize, q_relax=spec.q_relax)
        out = run_critical_cycle(s)
        rows.append({"tau1": float(t1), "W": out.work, "Q_in": out.heat_hot,
                     "eta": out.efficiency, "P": out.power})
    taus = np.array([r["tau1"] for r in rows])
    works = np.array([r["W"] for r in rows])
    fit = fit_power_law(taus, works - w_inf, offset=0.0)
    return fit, rows


def optimal_quench(
    spec: CriticalCycleSpec,
    fit: ScalingFit,
    w_inf: float,
    q_in_inf: float,
    crossing: bool = True,
    tau1_grid=None,
):
    """Closed-form optimal quench time and efficiency at maximum power.

    P(tau1) ~ W_inf/tau1 + R tau1^-(nu d + x nu z + 1)/(nu z + 1) with x = 1
    (crossing) or 2 (ending at the QCP); for the TFIM (nu = z = d = 1)
    tau_opt = [R (nu d + x nu z + 1) / (|W_inf| (nu z + 1))]^((nu z + 1)/(nu d + (x-1) nu z)).
    Returns (tau_opt, eta_hat, tau_opt_grid) with the grid-search argmax of
    the measured |P| when a grid is supplied.
    """
    nu = z = d = 1.0
    x = 1.0 if crossing else 2.0
    w_expo = -(nu * d if x == 1.0 else nu * (d + z)) / (nu * z + 1.0)
    # the wall-clock |dh| factor in tau_cyc cancels between the two power terms
    expo = (nu * z + 1.0) / (nu * d + (x - 1.0) * nu * z)

    def closed_form(r_const):
        return (r_const * (nu * d + x * nu * z + 1.0)
                / (abs(w_inf) * (nu * z + 1.0))) ** expo

    tau_opt = closed_form(fit.prefactor)
    # re-anchor the amplitude at the first-pass optimum: the universal
    # exponent is pinned, R is the only WM constant, and the far-window fit
    # underestimates it where the power peaks
    s_ref = CriticalCycleSpec(chain=spec.chain, tau1=float(tau_opt), tau2=spec.tau2,
                              q_energize=spec.q_energize, q_relax=spec.q_relax)
    ex_ref = run_critical_cycle(s_ref).work - w_inf
    if ex_ref > 0:
        tau_opt = closed_form(ex_ref * tau_opt ** (-w_expo))
    ex_opt = fit.prefactor * tau_opt ** fit.exponent
    eta_hat = -(w_inf + ex_opt) / (q_in_inf - ex_opt)
    tau_grid_opt = None
    if tau1_grid is not None:
        tau1_grid = np.asarray(sorted(tau1_grid), dtype=float)
        powers = np.full(tau1_grid.size, np.nan)
        for i, t1 in enumerate(tau1_grid):
            s = CriticalCycleSpec(chain=spec.chain, tau1=float(t1), tau2=spec.tau2,
                                  q_energize=spec.q_energize, q_relax=spec.q_relax)
            out = run_critical_cycle(s)
            if out.work < 0:
                powers[i] = out.power
        if np.any(np.isfinite(powers)):
            i = int(np.nanargmin(powers))  # engine power is negative
            tau_grid_opt = float(tau1_grid[i])
            if 0 < i < tau1_grid.size - 1 and np.all(np.isfinite(powers[i - 1:i + 2])):
                lt = np.log(tau1_grid[i - 1:i + 2])
                c2, c1, _ = np.polyfit(lt, powers[i - 1:i + 2], 2)
                if c2 > 0:
                    tau_grid_opt = float(np.exp(-c1 / (2.0 * c2)))
    return tau_opt, eta_hat, tau_grid_opt


def max_efficiency_bound(n_values, h_hot: float = 2.0, j_coupling: float = 1.0):
    """eta_max(N) for the cycle with hot point at h_hot and cold point at the QCP.

    With per-mode locally-thermal baths and adiabatic strokes, every mode is
    a two-level Otto engine with gap ratio 2 eps_k(J)/2 eps_k(h_hot) and the
    overall efficiency is a gap-ratio-weighted mean, so
    eta <= eta_max = 1 - min_k eps_k(J)/eps_k(h_hot), attained as the hot
    bath temperature goes to zero (only the softest hot mode stays active).
    The minimizing mode sits next to k = pi where eps(J) ~ 2 pi J / N, hence
    1 - eta_max ~ N^-z with z = 1.
    """
    rows = []
    for n in n_values:
        chain = TfimSpec(n_sites=int(n), j_coupling=j_coupling,
                         h_start=h_hot, h_end=j_coupling)
        eps_hot = spectrum(chain, h_hot)
        eps_cold = spectrum(chain, j_coupling)
        ratio = eps_cold / eps_hot
        eta_max = 1.0 - ratio.min()
        rows.append({"N": int(n), "eta_max": eta_max, "one_minus": 1.0 - eta_max})
    ns = np.array([r["N"] for r in rows], dtype=float)
    gaps = np.array([r["one_minus"] for r in rows])
    fit = fit_power_law(ns, gaps, offset=0.0, min_points=min(4, len(rows)), min_decades=0.8)
    return fit, rows


def thermal_cycle_efficiency(n_sites: int, h_hot: float, t_hot: float,
                             j_coupling: float = 1.0) -> float:
    """Adiabatic per-mode cycle with a locally-thermal energizing bath at t_hot
    and a zero-temperature relaxing bath; cold point at the QCP."""
    chain = TfimSpec(n_sites=n_sites, j_coupling=j_coupling,
                     h_start=h_hot, h_end=j_coupling)
    eps_hot = spectrum(chain, h_hot)
    eps_cold = spectrum(chain, j_coupling)
    # two-level thermal excitation of each +-k pair (gap 2 eps)
    p = 1.0 / (1.0 + np.exp(np.minimum(2.0 * eps_hot / t_hot, 700.0)))
    q_in = float(2.0 * (eps_hot * p).sum())
    q_out = float(-2.0 * (eps_cold * p).sum())
    return (q_in + q_out) / q_in  # eta = -W/Q_in
