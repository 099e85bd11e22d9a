"""Variational adiabatic gauge potentials and the STA spin-chain Otto engine.

Working medium: periodic chain H0(t) = -sum h_i(t) sx_i - sum b_i(t) sz_i
- sum J_i(t) sz_i sz_{i+1}, all three schedules sharing the smooth ramp
lambda(t) = sin^2((pi/2) sin^2(pi t / 2 tau)).  Counterdiabatic driving adds
H_CD = lambda_dot * A, with A either the exact gauge potential (dense
eigendecomposition) or the single-site sigma^y ansatz whose optimal
coefficients are

    zeta_j = (1/2) (hdot_j b_j - bdot_j h_j) / (h_j^2 + b_j^2 + J_{j-1}^2 + J_j^2),

scaled by the global control strength vartheta0 in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp

from .thermo import CycleOutcome, make_outcome

__all__ = [
    "SpinChainSpec",
    "WorkSplit",
    "ramp",
    "ramp_dot",
    "pauli_ops",
    "chain_hamiltonian",
    "exact_gauge",
    "variational_gauge",
    "local_gauge_coefficients",
    "evolve_stroke",
    "run_sta_otto",
    "optimize_vartheta0",
    "fidelity",
    "adiabatic_target",
]

_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def ramp(t, tau):
    """sin^2((pi/2) sin^2(pi t / 2 tau)); 0 at t=0, 1 at t=tau, flat ends."""
    u = np.pi * t / (2.0 * tau)
    return np.sin(0.5 * np.pi * np.sin(u) ** 2) ** 2


def ramp_dot(t, tau):
    u = np.pi * t / (2.0 * tau)
    return (np.pi**2 / (4.0 * tau)) * np.sin(np.pi * np.sin(u) ** 2) * np.sin(2.0 * u)


@lru_cache(maxsize=8)
def pauli_ops(n: int):
    """(sx, sy, sz) lists of dense single-site operators on the N-spin space."""
    dim = 2**n
    sx, sy, sz = [], [], []
    for i in range(n):
        left = np.eye(2**i)
        right = np.eye(2 ** (n - i - 1))
        sx.append(np.kron(np.kron(left, _SX), right))
        sy.append(np.kron(np.kron(left, _SY), right))
        sz.append(np.kron(np.kron(left, _SZ), right))
    return sx, sy, sz


def chain_hamiltonian(h, b, j, n: int) -> np.ndarray:
    """H0 = -sum h_i sx_i - sum b_i sz_i - sum J_i sz_i sz_{i+1}, periodic."""
    sx, _, sz = pauli_ops(n)
    dim = 2**n
    out = np.zeros((dim, dim), dtype=complex)
    for i in range(n):
        out -= h[i] * sx[i] + b[i] * sz[i]
        out -= j[i] * (sz[i] @ sz[(i + 1) % n])
    return out


@dataclass(frozen=True)
class SpinChainSpec:
    """Endpoint parameter sets; schedules interpolate with the smooth ramp."""

    n_spins: int
    h_init: np.ndarray
    h_final: np.ndarray
    b_init: np.ndarray
    b_final: np.ndarray
    j_init: np.ndarray
    j_final: np.ndarray
    tau: float

    def __post_init__(self):
        for name in ("h_init", "h_final", "b_init", "b_final", "j_init", "j_final"):
            arr = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, arr)
            if arr.shape != (self.n_spins,):
                raise ValueError(f"{name} must have shape ({self.n_spins},)")
        if self.tau <= 0:
            raise ValueError("stroke duration tau must be positive")

    def endpoints(self):
        h_a = chain_hamiltonian(self.h_init, self.b_init, self.j_init, self.n_spins)
        h_b = chain_hamiltonian(self.h_final, self.b_final, self.j_final, self.n_spins)
        return h_a, h_b

    def params_at(self, lam: float):
        h = self.h_init + lam * (self.h_final - self.h_init)
        b = self.b_init + lam * (self.b_final - self.b_init)
        j = self.j_init + lam * (self.j_final - self.j_init)
        return h, b, j


@dataclass(frozen=True)
class WorkSplit:
    w0: float    # piston (load) reservoir
    wcd: float   # controller reservoir


def exact_gauge(h_mat: np.ndarray, dh_mat: np.ndarray, gap_tol: float = 1e-10):
    """Exact gauge potential <m|A|n> = i <m|dH|n> / (E_n - E_m), zero diagonal.

    Elements inside (near-)degenerate subspaces are zeroed; returns
    (A, degenerate_flag).
    """
    e, v = np.linalg.eigh(h_mat)
    dh_eig = v.conj().T @ dh_mat @ v
    denom = e[None, :] - e[:, None]
    degenerate = False
    with np.errstate(divide="ignore", invalid="ignore"):
        a = 1j * dh_eig / denom
    small = np.abs(denom) < gap_tol
    if small.sum() > len(e):  # more than the diagonal
        degenerate = True
    a[small] = 0.0
    np.fill_diagonal(a, 0.0)
    return v @ a @ v.conj().T, degenerate


def variational_gauge(h_mat: np.ndarray, dh_mat: np.ndarray, basis_ops):
    """Coefficients minimizing S = Tr[G^2], G = dH + i [A*, H], A* = sum c_a B_a.

    Normal equations M c = rhs with M_ab = Tr[K_a K_b], K_a = i [B_a, H];
    singular systems fall back to the pseudo-inverse (reported in the second
    return value).
    """
    ks = [1j * (b @ h_mat - h_mat @ b) for b in basis_ops]
    nb = len(ks)
    m = np.empty((nb, nb))
    rhs = np.empty(nb)
    for a in range(nb):
        for c in range(a, nb):
            m[a, c] = m[c, a] = np.trace(ks[a] @ ks[c]).real
        rhs[a] = -np.trace(ks[a] @ dh_mat).real
    try:
        coeffs = np.linalg.solve(m, rhs)
        singular = False
    except np.linalg.LinAlgError:
        coeffs = np.linalg.pinv(m) @ rhs
        singular = True
    return coeffs, singular


def local_gauge_coefficients(h, b, j, hdot, bdot, denom_floor: float = 1e-8):
    """Optimal sigma^y coefficients of the single-site ansatz (periodic chain)."""
    h = np.asarray(h); b = np.asarray(b); j = np.asarray(j)
    denom = h**2 + b**2 + np.roll(j, 1) ** 2 + j**2
    if np.any(denom < denom_floor):
        raise ZeroDivisionError(
            f"local-ansatz denominator below {denom_floor}: min={denom.min():.3e}"
        )
    return 0.5 * (hdot * b - bdot * h) / denom


class _StrokeControl:
    """Callable H_CD(t) plus bookkeeping for one unitary stroke."""

    def __init__(self, spec: SpinChainSpec, kind: str, vartheta0: float,
                 reverse: bool, gap_tol: float = 1e-10):
        if kind not in ("none", "local", "exact"):
            raise ValueError(f"unknown control kind {kind!r}")
        self.spec = spec
        self.kind = kind
        self.v0 = vartheta0
        self.reverse = reverse
        self.gap_tol = gap_tol
        self.sy = pauli_ops(spec.n_spins)[1]
        self.sy_stack = np.stack(self.sy)
        h_a, h_b = spec.endpoints()
        self.dh = h_b - h_a
        self.h_a = h_a

    def lam(self, t):
        s = ramp(self.spec.tau - t if self.reverse else t, self.spec.tau)
        return s

    def lam_dot(self, t):
        d = ramp_dot(self.spec.tau - t if self.reverse else t, self.spec.tau)
        return -d if self.reverse else d

    def h0(self, t):
        return self.h_a + self.lam(t) * self.dh

    def h_cd(self, t):
        if self.kind == "none" or self.v0 == 0.0:
            return None
        lam = self.lam(t)
        ld = self.lam_dot(t)
        if self.kind == "local":
            h, b, j = self.spec.params_at(lam)
            hdot = ld * (self.spec.h_final - self.spec.h_init)
            bdot = ld * (self.spec.b_final - self.spec.b_init)
            zeta = local_gauge_coefficients(h, b, j, hdot, bdot)
            return self.v0 * np.tensordot(zeta, self.sy_stack, axes=1)
        a, _ = exact_gauge(self.h0(t), self.dh, self.gap_tol)
        return self.v0 * ld * a

    def h_total(self, t):
        hcd = self.h_cd(t)
        h = self.h0(t)
        return h if hcd is None else h + hcd


def evolve_stroke(spec: SpinChainSpec, rho0: np.ndarray, kind: str = "none",
                  vartheta0: float = 1.0, reverse: bool = False,
                  n_nodes: int = 129, rtol: float = 1e-10, atol: float = 1e-12,
                  weight_cut: float = 1e-14, compute_work: bool = True):
    """Propagate a density matrix through one unitary stroke.

    Integrates the full unitary (batched eigenvectors of rho0) and returns
    (rho_end, W0, WCD): W_CD = ∫ i Tr(rho [H_CD, H0]) dt (the boundary terms
    vanish because the ramp is flat at both ends), W0 = Delta E - W_CD.
    compute_work=False skips the quadrature (state-only callers).
    """
    ctrl = _StrokeControl(spec, kind, vartheta0, reverse)
    dim = rho0.shape[0]
    evals, evecs = np.linalg.eigh(rho0)
    keep = evals > weight_cut
    weights = evals[keep]
    psi0 = evecs[:, keep]

    def rhs(t, y):
        psi = y.reshape(dim, -1)
        return (-1j * (ctrl.h_total(t) @ psi)).ravel()

    t_nodes = np.linspace(0.0, spec.tau, n_nodes) if compute_work else None
    sol = solve_ivp(rhs, (0.0, spec.tau), psi0.astype(complex).ravel(),
                    method="DOP853", t_eval=t_nodes, rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(f"stroke integration failed: {sol.message}")

    wcd_integrand = np.zeros(n_nodes) if compute_work else np.zeros(1)
    if compute_work and kind != "none" and vartheta0 != 0.0:
        for i, t in enumerate(t_nodes):
            psi = sol.y[:, i].reshape(dim, -1)
            hcd = ctrl.h_cd(t)
            if hcd is None:
                continue
            h0 = ctrl.h0(t)
            comm = hcd @ h0 - h0 @ hcd
            # Tr(rho [H_CD, H0]) with rho = sum_n w_n |psi_n><psi_n|
            vals = (psi.conj() * (comm @ psi)).sum(axis=0)
            wcd_integrand[i] = float((1j * (weights @ vals)).real)
    wcd = float(np.trapezoid(wcd_integrand, t_nodes)) if compute_work else 0.0

    psi_end = sol.y[:, -1].reshape(dim, -1)
    rho_end = (psi_end * weights) @ psi_end.conj().T
    e_start = float(np.trace(rho0 @ ctrl.h0(0.0)).real)
    e_end = float(np.trace(rho_end @ ctrl.h0(spec.tau)).real)
    w0 = (e_end - e_start) - wcd
    return rho_end, w0, wcd


def gibbs_state(h_mat: np.ndarray, temperature: float) -> np.ndarray:
    e, v = np.linalg.eigh(h_mat)
    logw = -(e - e.min()) / temperature
    w = np.exp(logw)
    w /= w.sum()
    return (v * w) @ v.conj().T


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity Tr sqrt(sqrt(rho) sigma sqrt(rho))."""
    e, v = np.linalg.eigh(rho)
    e = np.clip(e, 0.0, None)
    sq = (v * np.sqrt(e)) @ v.conj().T
    m = sq @ sigma @ sq
    lam = np.linalg.eigvalsh(m)
    return float(np.sqrt(np.clip(lam, 0.0, None)).sum())


def adiabatic_target(spec: SpinChainSpec, rho0: np.ndarray, reverse: bool = False,
                     n_grid: int = 51) -> np.ndarray:
    """Populations of rho0 transported along the instantaneous eigenbasis.

    Eigenvector curves are followed by maximum-overlap assignment on a
    lambda grid, which keeps the map well defined through avoided crossings.
    """
    from scipy.optimize import linear_sum_assignment

    h_a, h_b = spec.endpoints()
    lams = np.linspace(0.0, 1.0, n_grid)
    if reverse:
        lams = lams[::-1]
    h0 = h_a + lams[0] * (h_b - h_a)
    e, v = np.linalg.eigh(h0)
    pops = np.real(np.diag(v.conj().T @ rho0 @ v)).copy()
    v_prev = v
    for lam in lams[1:]:
        h = h_a + lam * (h_b - h_a)
        e, v = np.linalg.eigh(h)
        overlap = np.abs(v_prev.conj().T @ v) ** 2
        row, col = linear_sum_assignment(-overlap)
        # population attached to old eigenvector row[i] rides to new column col[i]
        new_pops = np.empty_like(pops)
        new_pops[col] = pops[row]
        pops = new_pops
        v_prev = v
    return (v_prev * pops) @ v_prev.conj().T


def run_sta_otto(spec: SpinChainSpec, control: str, t_cold: float, t_hot: float,
                 vartheta0: float = 1.0, tau_thermal: float = 0.1,
                 rtol: float = 1e-10):
    """Four-stroke STA Otto cycle with ideal Gibbs resets on the bath strokes.

    Returns (CycleOutcome, WorkSplit, fidelities) where fidelities maps the
    two unitary strokes to their Uhlmann overlap with the adiabatic target.
    Efficiency: eta = -W0/Q_h when the controller work W_CD <= 0, else the
    hybrid form -W0/(Q_h + W_CD).
    """
    h_a, h_b = spec.endpoints()
    rho_a = gibbs_state(h_a, t_cold)
    rho_c = gibbs_state(h_b, t_hot)

    rho_b, w0_1, wcd_1 = evolve_stroke(spec, rho_a, control, vartheta0, reverse=False, rtol=rtol)
    rho_d, w0_3, wcd_3 = evolve_stroke(spec, rho_c, control, vartheta0, reverse=True, rtol=rtol)

    q_h = float(np.trace((rho_c - rho_b) @ h_b).real)
    q_c = float(np.trace((rho_a - rho_d) @ h_a).real)
    w0 = w0_1 + w0_3
    wcd = wcd_1 + wcd_3

    tau_cyc = 2.0 * spec.tau + 2.0 * tau_thermal
    power = w0 / tau_cyc
    if q_h > 0 and w0 < 0:
        eta = -w0 / q_h if wcd <= 0 else -w0 / (q_h + wcd)
    else:
        eta = float("nan")
    outcome = CycleOutcome(
        work=w0 + wcd, heat_hot=q_h, heat_cold=q_c, efficiency=eta,
        power=power, cycle_time=tau_cyc, converged=True,
    )
    fid = {
        "AB": fidelity(adiabatic_target(spec, rho_a, reverse=False), rho_b),
        "CD": fidelity(adiabatic_target(spec, rho_c, reverse=True), rho_d),
    }
    return outcome, WorkSplit(w0=w0, wcd=wcd), fid


def optimize_vartheta0(spec: SpinChainSpec, t_cold: float, control: str = "local",
                       tol: float = 1e-4, rtol: float = 1e-8) -> float:
    """Golden-section maximization of the stroke-1 fidelity over [0, 1]."""
    h_a, _ = spec.endpoints()
    rho_a = gibbs_state(h_a, t_cold)
    target = adiabatic_target(spec, rho_a, reverse=False)
    cache: dict[float, float] = {}

    def f(v0):
        key = round(v0, 12)
        if key not in cache:
            rho_b, _, _ = evolve_stroke(spec, rho_a, control, v0, rtol=rtol,
                                        weight_cut=1e-9, compute_work=False)
            cache[key] = fidelity(target, rho_b)
        return cache[key]

    phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = 0.0, 1.0
    c1, c2 = b - phi * (b - a), a + phi * (b - a)
    f1, f2 = f(c1), f(c2)
    while b - a > tol:
        if f1 < f2:
            a, c1, f1 = c1, c2, f2
            c2 = a + phi * (b - a)
            f2 = f(c2)
        else:
            b, c2, f2 = c2, c1, f1
            c1 = b - phi * (b - a)
            f1 = f(c1)
    candidates = [(f(0.0), 0.0), (f(1.0), 1.0), (f(0.5 * (a + b)), 0.5 * (a + b))]
    return max(candidates)[1]
