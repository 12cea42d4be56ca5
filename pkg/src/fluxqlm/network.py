"""From circuit parameters to lattice-model constants.

Capacitance-matrix inversion on the square link lattice, the ancilla-mediated
Gauss penalty U, the capacitive flip-flop J, and the AC-Stark shift used to
tune the electric splitting V with an off-resonant drive.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import scipy.optimize

from .device import DeviceParams, Spectrum, QutritData, phi_operator, qutrit_states, spectrum, tb_charge_element, tb_sigma
from .errors import DomainError, NumericError, OptimizationError, ResonanceError
from .specfun import bessel_k0, elliptic_k


@dataclass(frozen=True)
class NetworkParams:
    """Link and ancilla devices plus their coupling energies.

    Exactly one of ``xi`` (sqrt(C_c/C)) or ``e_cc`` (capacitive coupling energy)
    is given; the other is derived through ``ecc_ratio``.
    """

    link: DeviceParams
    ancilla: DeviceParams
    e_cl: float
    xi: Optional[float] = None
    e_cc: Optional[float] = None

    def __post_init__(self):
        if (self.xi is None) == (self.e_cc is None):
            raise DomainError("give exactly one of xi or e_cc")
        if self.e_cl < 0:
            raise DomainError("e_cl must be non-negative")
        if self.xi is not None and not self.xi > 0:
            raise DomainError("xi must be positive")

    @property
    def coupling_cc(self) -> float:
        if self.e_cc is not None:
            return self.e_cc
        return ecc_ratio(self.xi) * self.link.e_c

    def scaled(self, lam: float) -> "NetworkParams":
        return NetworkParams(self.link.scaled(lam), self.ancilla.scaled(lam), self.e_cl * lam,
                             self.xi, None if self.e_cc is None else self.e_cc * lam)


def strong_coupling_preset() -> NetworkParams:
    """Cascade E_J = E^a_C = 0.2, E_C = 0.06, E^c_C = 0.04, E^a_L = 0.01,
    E_L = 0.003, E^c_L = 0.0002 in units of E^a_J = 1."""
    link = DeviceParams(e_c=0.06, e_j=0.2, e_l=0.003, phi_off=0.0)
    anc = DeviceParams(e_c=0.2, e_j=1.0, e_l=0.01, phi_off=math.pi)
    return NetworkParams(link, anc, e_cl=0.0002, e_cc=0.04)


@dataclass(frozen=True)
class CouplingSet:
    delta: float
    u: float
    v: float
    j: float
    g2_elec: float
    g2_mag_inv: float
    product: float
    unit: str = "E^a_J"
    flags: tuple = ()
    provenance: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_uvj(cls, u: float, v: float, j: float, delta: float = math.nan,
                 unit: str = "E^a_J", provenance: Optional[dict] = None) -> "CouplingSet":
        flags = []
        if u > 0:
            g2m = 2.0 * j * j / u
            g2e = v + g2m
            prod = g2e / g2m if g2m > 0 else math.inf
        else:
            flags.append("gauss_constraint_absent")
            g2m, g2e, prod = math.inf, math.inf, math.nan
        return cls(delta, u, v, j, g2e, g2m, prod, unit, tuple(flags), dict(provenance or {}))

    def as_dict(self) -> dict:
        return {"delta": self.delta, "u": self.u, "v": self.v, "j": self.j,
                "j_over_u": self.j / self.u if self.u > 0 else math.nan,
                "g2_elec": self.g2_elec, "g2_mag_inv": self.g2_mag_inv,
                "product": self.product, "unit": self.unit, "flags": list(self.flags)}


@dataclass(frozen=True)
class DriveParams:
    omega_f: float
    g_strength: float
    rabi: float = math.nan
    detuning: float = math.nan


@dataclass(frozen=True)
class StarkResult:
    shifts: dict
    v: float
    v_prime: float
    breakdown: list


# capacitance ------------------------------------------------------------------

def cap_kernel(kx, ky, xi: float):
    """D(k)/C = 1 + 4 xi^2 - 2 xi^2 (cos kx + cos ky)."""
    if not xi > 0:
        raise DomainError("xi must be positive")
    return 1.0 + 4.0 * xi * xi - 2.0 * xi * xi * (np.cos(kx) + np.cos(ky))


def cap_inverse(dx, xi: float, rel_tol: float = 1e-10, max_points: int = 1 << 12) -> float:
    """Lattice inverse capacitance c(dx) in units of 1/C.

    Brillouin-zone average of exp(i k.dx)/D(k). The integrand is smooth and
    periodic, so the equispaced (trapezoid) rule converges geometrically; the
    grid is doubled until successive values agree.
    """
    if not xi > 0:
        raise DomainError("xi must be positive")
    dxx, dxy = int(dx[0]), int(dx[1])
    prev = None
    n = 32
    while n <= max_points:
        k = 2.0 * np.pi * np.arange(n) / n
        kx, ky = np.meshgrid(k, k, indexing="ij")
        vals = np.exp(1j * (kx * dxx + ky * dxy)) / cap_kernel(kx, ky, xi)
        z = vals.mean()
        if abs(z.imag) > 1e-10:
            raise NumericError(f"imaginary part {z.imag:.3g} in cap_inverse")
        val = float(z.real)
        if prev is not None and abs(val - prev) <= rel_tol * abs(val) + 1e-16:
            return val
        prev = val
        n *= 2
    raise NumericError(f"cap_inverse did not converge for dx={dx}, xi={xi}")


def cap_c0_closed(xi: float) -> float:
    """On-site c(0) = 2 K(-16 xi^2/(xi^-2 + 8)) / (pi xi sqrt(xi^-2 + 8))."""
    a = xi ** -2 + 8.0
    return 2.0 / (math.pi * xi * math.sqrt(a)) * elliptic_k(-16.0 * xi * xi / a)


def cap_tail_k0(dist: float, xi: float) -> float:
    """Long-distance form c(r) ~ K_0(r/xi) / (2 pi xi^2)."""
    return bessel_k0(dist / xi) / (2.0 * math.pi * xi * xi)


def ecc_ratio(xi: float) -> float:
    """E^c_C / E_C from the closed forms, i.e. c(1)/c(0)."""
    if not xi > 0:
        raise DomainError("xi must be positive")
    if 1.0 / xi > 700.0:
        return 0.0
    a = 8.0 + xi ** -2
    return math.sqrt(a) * bessel_k0(1.0 / xi) / (4.0 * xi * elliptic_k(-16.0 * xi * xi / a))


# couplings --------------------------------------------------------------------

def converged_spectrum(p: DeviceParams, dim: int = 80, rel_tol: float = 1e-9,
                       max_dim: int = 400) -> Spectrum:
    """spectrum() with the basis grown in steps of 20 until the lowest levels settle."""
    scale = p.e_j + p.e_c + p.e_l
    while True:
        s = spectrum(p, dim, check_tol=rel_tol * scale)
        if s.converged or dim >= max_dim:
            return s
        dim += 20


def _spectrum_for(p: DeviceParams, dim: Optional[int]) -> Spectrum:
    return converged_spectrum(p) if dim is None else spectrum(p, dim)


def derive_couplings(net: NetworkParams, dim: Optional[int] = None,
                     charge_element: str = "exact") -> CouplingSet:
    """Delta, U, V, J from the renormalized link and ancilla spectra.

    ``dim=None`` grows the oscillator basis from 80 until converged.
    ``charge_element`` selects the exact <+1|n|0> or the tight-binding value.
    """
    if abs(math.cos(net.ancilla.phi_off) + 1.0) > 1e-12:
        raise DomainError("ancilla must be biased at phi_off = pi")
    if abs(math.cos(net.link.phi_off) - 1.0) > 1e-12:
        raise DomainError("link must be biased at phi_off = 0")
    link = net.link.with_e_l(net.link.e_l + 2.0 * net.e_cl)
    anc = net.ancilla.with_e_l(net.ancilla.e_l + 4.0 * net.e_cl)
    sl = _spectrum_for(link, dim)
    q = qutrit_states(sl)
    sa = _spectrum_for(anc, dim)
    delta = float(sa.energies[1] - sa.energies[0])
    if not delta > 0:
        raise NumericError("ancilla gap must be positive")
    phi_a = phi_operator(sa.dim, sa.beta)
    phi_ge = float(abs(sa.vectors[:, 0] @ phi_a @ sa.vectors[:, 1]))
    phi_plus = float(q.phi_elements[1, 1])
    if charge_element == "exact":
        n10 = float(abs(q.charge_elements[1, 0]))
    elif charge_element == "tight_binding":
        n10 = abs(tb_charge_element(1, 0, tb_sigma(link)))
    else:
        raise DomainError(f"unknown charge_element {charge_element!r}")
    e_cc = net.coupling_cc
    u = net.e_cl ** 2 * phi_ge ** 2 * phi_plus ** 2 / delta
    j = -8.0 * e_cc * n10 ** 2
    prov = {"link_dim": sl.dim, "ancilla_dim": sa.dim, "phi_ge": phi_ge, "phi_plus": phi_plus,
            "n10": n10, "e_cc": e_cc, "doublet_splitting": q.doublet_splitting,
            "e_cl_over_delta": net.e_cl / delta, "charge_element": charge_element}
    return CouplingSet.from_uvj(u, q.splitting_v, j, delta, unit=net.link.unit, provenance=prov)


# drive ------------------------------------------------------------------------

def _stark_terms(q: QutritData, s: Spectrum, omega_f: float, max_level: int = 20):
    """(state label, level, |<s'|phi|i>|^2, detuning) for all included couplings."""
    phi = phi_operator(s.dim, s.beta)
    e_q = {0: q.energies[0], 1: q.energies[1], -1: q.energies[-1]}
    rows = {0: q.states[0], 1: q.states[1], -1: q.states[2]}
    cut = 1e-6 * s.beta ** 2
    terms = []
    top = min(max_level, s.dim - 1)
    for lab, vec in rows.items():
        elems = s.vectors[:, 3:top + 1].T @ (phi @ vec)
        for k, el in enumerate(elems, start=3):
            m2 = float(el * el)
            if m2 >= cut:
                terms.append((lab, k, m2, omega_f - (s.energies[k] - e_q[lab])))
    return terms


def stark_shift(q: QutritData, s: Spectrum, d: DriveParams, max_level: int = 20,
                resonance_floor: Optional[float] = None) -> StarkResult:
    """Second-order shifts of the three qutrit states from an off-resonant drive.

    shift_i = sum_s' g^2 |<s'|phi|i>|^2 / (4 delta_{i,s'}) over levels above the
    doublet, and V' = V + shift_0 - (shift_+1 + shift_-1)/2.
    """
    floor = 1e-6 * s.params.e_j if resonance_floor is None else resonance_floor
    g2 = d.g_strength ** 2
    shifts = {0: 0.0, 1: 0.0, -1: 0.0}
    breakdown = []
    for lab, k, m2, det in _stark_terms(q, s, d.omega_f, max_level):
        if abs(det) < floor:
            raise ResonanceError(f"drive resonant with level {k} from state {lab} (detuning {det:.3g})")
        sh = g2 * m2 / (4.0 * det)
        shifts[lab] += sh
        breakdown.append({"state": lab, "level": k, "phi2": m2, "detuning": det, "shift": sh})
    v_prime = q.splitting_v + shifts[0] - 0.5 * (shifts[1] + shifts[-1])
    return StarkResult(shifts, q.splitting_v, v_prime, breakdown)


def drive_params(q: QutritData, s: Spectrum, omega_f: float, g_strength: float) -> DriveParams:
    """DriveParams with the Rabi frequency and detuning of the 0 -> s transition."""
    phi = phi_operator(s.dim, s.beta)
    el = float(s.vectors[:, 3] @ phi @ q.states[0])
    return DriveParams(omega_f, g_strength, -g_strength * el, omega_f - (s.energies[3] - q.energies[0]))


def _stark_slope(q, s, omega_f, max_level, floor):
    """dV'/d(g^2) at fixed omega_f, or None when any detuning is below the floor."""
    slope = 0.0
    for lab, k, m2, det in _stark_terms(q, s, omega_f, max_level):
        if abs(det) < floor:
            return None
        w = 1.0 if lab == 0 else -0.5
        slope += w * m2 / (4.0 * det)
    return slope


def optimize_drive(q: QutritData, s: Spectrum, omega_bounds: tuple, g2_bounds: tuple,
                   n_grid: int = 401, resonance_floor: Optional[float] = None,
                   max_level: int = 20) -> DriveParams:
    """Minimize |V'| over the drive frequency and |g|^2.

    V' is linear in |g|^2 at fixed frequency, so the inner minimization is exact
    (clipped to the bounds). The frequency is scanned on a grid; ties in |V'| are
    broken by lowest frequency, then lowest |g|^2, and the lowest tied frequency
    is refined by bisection against its infeasible neighbour.
    """
    w_lo, w_hi = map(float, omega_bounds)
    g_lo, g_hi = map(float, g2_bounds)
    if w_hi < w_lo or g_hi < g_lo or g_lo < 0:
        raise OptimizationError("invalid bounds")
    floor = (1e-3 * s.params.e_j) if resonance_floor is None else resonance_floor
    v = q.splitting_v
    tie = 1e-9 * abs(v) + 1e-15

    def best_at(w):
        slope = _stark_slope(q, s, w, max_level, floor)
        if slope is None:
            return None
        if slope == 0.0:
            g2 = g_lo
        else:
            g2 = min(max(-v / slope, g_lo), g_hi)
        return abs(v + g2 * slope), g2

    grid = np.linspace(w_lo, w_hi, n_grid) if w_hi > w_lo else np.array([w_lo])
    evals = [best_at(w) for w in grid]
    feas = [(val[0], w, val[1], i) for i, (w, val) in enumerate(zip(grid, evals)) if val is not None]
    if not feas:
        raise OptimizationError("every grid frequency is within the resonance floor")
    best_val = min(f[0] for f in feas)
    tied = [f for f in feas if f[0] <= best_val + tie]
    _, w_best, g_best, idx = min(tied, key=lambda f: (f[1], f[2]))
    if idx > 0 and evals[idx - 1] is not None and best_val <= tie:
        lo, hi = grid[idx - 1], w_best
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            r = best_at(mid)
            if r is not None and r[0] <= tie:
                hi = mid
            else:
                lo = mid
        w_best, g_best = hi, best_at(hi)[1]
    elif best_val > tie and 0 < idx < len(grid) - 1:
        def obj(w):
            r = best_at(w)
            return math.inf if r is None else r[0]
        res = scipy.optimize.minimize_scalar(obj, bounds=(grid[idx - 1], grid[idx + 1]),
                                             method="bounded", options={"xatol": 1e-12})
        if res.fun < best_val:
            w_best, g_best = float(res.x), best_at(float(res.x))[1]
    return drive_params(q, s, float(w_best), math.sqrt(g_best))


def driven_couplings(cs: CouplingSet, st: StarkResult) -> CouplingSet:
    """Coupling set with V replaced by the Stark-shifted V'."""
    return CouplingSet.from_uvj(cs.u, st.v_prime, cs.j, cs.delta, cs.unit,
                                {**cs.provenance, "v_undriven": cs.v})


# decoherence ------------------------------------------------------------------

@dataclass(frozen=True)
class DecoherenceBudget:
    t_sim: float
    gap_min: float
    ancilla_error: float
    max_links: int
    flags: tuple = ()


def decoherence_budget(cs: CouplingSet, e_j_hz: float, t1_ancilla: float,
                       error_budget: float = 0.1) -> DecoherenceBudget:
    """Simulation time 2/gap_min with gap_min = 8J^2/U, and the ancilla error it implies.

    ``e_j_hz`` is the frequency of the energy unit of ``cs``; ``max_links`` is the
    number of ancilla-protected links whose summed error stays within ``error_budget``.
    """
    if not e_j_hz > 0 or not t1_ancilla > 0:
        raise DomainError("e_j_hz and t1_ancilla must be positive")
    if cs.j == 0 or not cs.u > 0:
        return DecoherenceBudget(math.inf, 0.0, 1.0, 0, ("infinite_t_sim",))
    gap = 8.0 * cs.j ** 2 / cs.u
    t_sim = 2.0 / (gap * e_j_hz)
    err = -math.expm1(-t_sim / t1_ancilla)
    return DecoherenceBudget(t_sim, gap, err, int(math.floor(error_budget / err)))
