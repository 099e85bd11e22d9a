"""Work/heat bookkeeping and the four-stroke Otto harness.

Sign convention: W = -(Q_h + Q_c), so a working engine has W < 0 and
Q_h > 0.  Heat into the WM is positive.  Every converged cycle must close
the first law to 1e-9 relative.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "StrokeRecord",
    "CycleOutcome",
    "work_integral",
    "heat_from_energy",
    "run_otto",
    "carnot_efficiency",
    "first_law_residual",
]


@dataclass(frozen=True)
class StrokeRecord:
    kind: str  # "unitary" | "dissipative"
    duration: float
    energy_in: float
    energy_out: float
    work: float
    heat: float


@dataclass(frozen=True)
class CycleOutcome:
    """Per-cycle record shared by every engine module.

    work uses the W = -(Q_h + Q_c) convention; engine regime iff work < 0
    and heat_hot > 0.
    """

    work: float
    heat_hot: float
    heat_cold: float
    efficiency: float
    power: float
    cycle_time: float
    converged: bool = True
    strokes: tuple = field(default_factory=tuple, compare=False)

    @property
    def is_engine(self) -> bool:
        return self.work < 0 and self.heat_hot > 0

    def csv_row(self) -> list:
        return [
            self.work,
            self.heat_hot,
            self.heat_cold,
            self.efficiency,
            self.power,
            self.cycle_time,
            int(self.converged),
        ]


def first_law_residual(outcome: CycleOutcome) -> float:
    scale = max(abs(outcome.work), abs(outcome.heat_hot), 1.0)
    return abs(outcome.work + outcome.heat_hot + outcome.heat_cold) / scale


def carnot_efficiency(beta_h: float, beta_c: float) -> float:
    return 1.0 - beta_h / beta_c


def make_outcome(q_h: float, q_c: float, cycle_time: float, converged: bool = True,
                 strokes: tuple = ()) -> CycleOutcome:
    """Assemble a CycleOutcome from the two stroke heats."""
    w = -(q_h + q_c)
    if w < 0 and q_h > 0:
        eta = -w / q_h
    else:
        eta = float("nan")  # degenerate / non-engine cycle flagged by NaN
    p = w / cycle_time if cycle_time > 0 else float("nan")
    return CycleOutcome(
        work=w, heat_hot=q_h, heat_cold=q_c, efficiency=eta,
        power=p, cycle_time=cycle_time, converged=converged, strokes=strokes,
    )


def work_integral(times, states, hamiltonians, h_dot=None) -> float:
    """W = integral Tr[rho(t) dH/dt] dt by trapezoidal quadrature.

    `states` and `hamiltonians` are time-ordered samples on `times`; dH/dt
    is finite-differenced on the grid unless `h_dot` samples are supplied.
    """
    times = np.asarray(times, dtype=float)
    n = times.size
    if not (len(states) == len(hamiltonians) == n):
        raise ValueError("mismatched grid lengths")
    if h_dot is None:
        h_dot = np.gradient(np.asarray(hamiltonians, dtype=complex), times, axis=0)
    integrand = np.array(
        [np.trace(np.asarray(r) @ np.asarray(hd)).real for r, hd in zip(states, h_dot)]
    )
    return float(np.trapezoid(integrand, times))


def heat_from_energy(rho_initial, rho_final, h_const) -> float:
    """Q = Tr[rho_f H] - Tr[rho_i H] for a constant-Hamiltonian stroke."""
    h = np.asarray(h_const)
    return float(
        (np.trace(np.asarray(rho_final) @ h) - np.trace(np.asarray(rho_initial) @ h)).real
    )


def run_otto(
    wm,
    protocol: dict,
    baths: tuple,
    n_cycles: int = 200,
    w_rtol: float = 1e-8,
) -> list[CycleOutcome]:
    """Iterate the four strokes A->B->C->D until the work reaches a limit cycle.

    `wm` duck-types the working medium:
        unitary_stroke(state, theta_from, theta_to, tau) -> state
        dissipative_stroke(state, bath, theta, tau) -> state
        energy(state, theta) -> float
        initial_state(bath_cold, theta_c) -> state
    `protocol` carries vartheta_c, vartheta_h, tau1..tau4.  Successive cycles
    whose work differs by < w_rtol relative declare the limit cycle; if that
    never happens the last outcome is returned with converged=False.
    """
    hot, cold = baths
    th_c, th_h = protocol["vartheta_c"], protocol["vartheta_h"]
    tau1 = protocol.get("tau1", 0.0)
    tau2 = protocol["tau2"]
    tau3 = protocol.get("tau3", 0.0)
    tau4 = protocol["tau4"]
    if min(tau1, tau2, tau3, tau4) < 0:
        raise ValueError("stroke durations must be nonnegative")
    cycle_time = tau1 + tau2 + tau3 + tau4

    state = wm.initial_state(cold, th_c)
    outcomes: list[CycleOutcome] = []
    prev_w = None
    for _ in range(n_cycles):
        e_a = wm.energy(state, th_c)
        state = wm.unitary_stroke(state, th_c, th_h, tau1)
        e_b = wm.energy(state, th_h)
        state = wm.dissipative_stroke(state, hot, th_h, tau2)
        e_c = wm.energy(state, th_h)
        state = wm.unitary_stroke(state, th_h, th_c, tau3)
        e_d = wm.energy(state, th_c)
        state = wm.dissipative_stroke(state, cold, th_c, tau4)
        e_a2 = wm.energy(state, th_c)
        q_h = e_c - e_b
        q_c = e_a2 - e_d
        strokes = (
            StrokeRecord("unitary", tau1, e_a, e_b, e_b - e_a, 0.0),
            StrokeRecord("dissipative", tau2, e_b, e_c, 0.0, q_h),
            StrokeRecord("unitary", tau3, e_c, e_d, e_d - e_c, 0.0),
            StrokeRecord("dissipative", tau4, e_d, e_a2, 0.0, q_c),
        )
        out = make_outcome(q_h, q_c, cycle_time, converged=False, strokes=strokes)
        outcomes.append(out)
        if prev_w is not None:
            if abs(out.work - prev_w) <= w_rtol * max(abs(out.work), abs(prev_w), 1e-300):
                outcomes[-1] = CycleOutcome(
                    work=out.work, heat_hot=out.heat_hot, heat_cold=out.heat_cold,
                    efficiency=out.efficiency, power=out.power,
                    cycle_time=out.cycle_time, converged=True, strokes=out.strokes,
                )
                return outcomes
        prev_w = out.work
    return outcomes  # last entry carries converged=False
