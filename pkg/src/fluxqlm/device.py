"""Single fluxonium physics.

Exact spectra in the harmonic-oscillator basis of the quadratic part of
H = 4 E_C n^2 + E_L phi^2 / 2 - E_J cos(phi + phi_off), localized qutrit
states built from the lowest levels, and tight-binding closed forms for the
Wannier-like flux states.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DegeneracyError, DomainError, NumericError
from .specfun import laguerre, log_factorial

DEFAULT_DIM = 80


@dataclass(frozen=True)
class DeviceParams:
    """Energies of one fluxonium in a common unit (default E^a_J)."""

    e_c: float
    e_j: float
    e_l: float
    phi_off: float = 0.0
    unit: str = "E^a_J"

    def __post_init__(self):
        if not self.e_c > 0:
            raise DomainError("e_c must be positive")
        if self.e_j < 0:
            raise DomainError("e_j must be non-negative")
        if not self.e_l > 0:
            raise DomainError("e_l must be positive")

    @property
    def phi_off_supported(self) -> bool:
        """True for the preset offsets 0 and pi; other values work but are untested."""
        return min(abs(self.phi_off), abs(abs(self.phi_off) - math.pi)) < 1e-12

    @property
    def beta(self) -> float:
        return (8.0 * self.e_c / self.e_l) ** 0.25

    @property
    def hbar_omega(self) -> float:
        return math.sqrt(8.0 * self.e_l * self.e_c)

    def scaled(self, lam: float) -> "DeviceParams":
        return DeviceParams(self.e_c * lam, self.e_j * lam, self.e_l * lam, self.phi_off, self.unit)

    def with_e_l(self, e_l: float) -> "DeviceParams":
        return DeviceParams(self.e_c, self.e_j, e_l, self.phi_off, self.unit)


@dataclass(frozen=True)
class Spectrum:
    dim: int
    energies: np.ndarray
    vectors: np.ndarray  # columns are eigenvectors in the oscillator basis
    beta: float
    params: DeviceParams
    converged: bool = True
    convergence_delta: float = 0.0


@dataclass(frozen=True)
class QutritData:
    """Localized qutrit states and their matrix elements.

    Rows/columns of ``phi_elements`` and ``charge_elements`` are ordered
    (|0>, |+1>, |-1>, |s>), where |s> is the first level above the doublet.
    """

    energies: dict
    states: np.ndarray  # shape (4, dim), same ordering as the element matrices
    phi_elements: np.ndarray
    charge_elements: np.ndarray
    splitting_v: float
    doublet_splitting: float
    s_index: int = 3
    labels: tuple = ("0", "+1", "-1", "s")


@dataclass(frozen=True)
class TightBinding:
    sigma: float
    hopping_t: float
    band_gap: float


def _laguerre_table(nmax: int, x: float) -> np.ndarray:
    """table[n, b] = L_n^{(b)}(x) for 0 <= n, b < nmax, upward recurrence in n."""
    b = np.arange(nmax, dtype=float)
    tab = np.empty((nmax, nmax))
    tab[0] = 1.0
    if nmax > 1:
        tab[1] = 1.0 + b - x
    for k in range(1, nmax - 1):
        tab[k + 1] = ((2 * k + 1 + b - x) * tab[k] - (k + b) * tab[k - 1]) / (k + 1)
    return tab


def _cos_sin_parts(dim: int, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """Matrices of cos(phi) and sin(phi) in the oscillator basis (Laguerre closed forms).

    For m >= n, <m|e^{i phi}|n> = i^(m-n) sqrt(n!/m!) (beta/sqrt2)^(m-n)
    exp(-beta^2/4) L_n^{(m-n)}(beta^2/2); the cosine keeps even m-n, the sine odd.
    """
    x = 0.5 * beta * beta
    lag = _laguerre_table(dim, x)
    lf = np.array([log_factorial(k) for k in range(dim)])
    m, n = np.meshgrid(np.arange(dim), np.arange(dim), indexing="ij")
    low = m >= n
    d = np.where(low, m - n, 0)
    nn = np.where(low, n, 0)
    logmag = 0.5 * (lf[nn] - lf[np.where(low, m, 0)]) + d * math.log(beta / math.sqrt(2.0)) - 0.5 * x
    val = np.where(low, np.exp(logmag) * lag[nn, d], 0.0)
    phase_c = np.where(d % 2 == 0, (-1.0) ** (d // 2), 0.0)
    phase_s = np.where(d % 2 == 1, (-1.0) ** ((d - 1) // 2), 0.0)
    cmat = val * phase_c
    smat = val * phase_s
    cmat = cmat + np.tril(cmat, -1).T
    smat = smat + np.tril(smat, -1).T
    return cmat, smat


def ho_matrix(p: DeviceParams, dim: int = DEFAULT_DIM) -> np.ndarray:
    """Hamiltonian matrix in the oscillator eigenbasis of 4E_C n^2 + E_L phi^2/2."""
    if dim < 3:
        raise DomainError("dim must be at least 3")
    h = np.diag(p.hbar_omega * (np.arange(dim) + 0.5))
    if p.e_j != 0.0:
        cmat, smat = _cos_sin_parts(dim, p.beta)
        # cos(phi + phi_off) = cos(phi_off) cos(phi) - sin(phi_off) sin(phi)
        co, so = math.cos(p.phi_off), math.sin(p.phi_off)
        if abs(co) < 1e-15:
            co = 0.0
        if abs(so) < 1e-15:
            so = 0.0
        h = h - p.e_j * (co * cmat - so * smat)
    return h


def phi_operator(dim: int, beta: float) -> np.ndarray:
    """phi = beta (a + a^dag) / sqrt(2)."""
    off = np.sqrt(np.arange(1, dim)) * beta / math.sqrt(2.0)
    return np.diag(off, 1) + np.diag(off, -1)


def charge_operator(dim: int, beta: float) -> np.ndarray:
    """n = i (a^dag - a) / (sqrt(2) beta)."""
    off = np.sqrt(np.arange(1, dim)) / (math.sqrt(2.0) * beta)
    return 1j * (np.diag(off, -1) - np.diag(off, 1))


def _fix_sign(vecs: np.ndarray) -> np.ndarray:
    # largest-magnitude component positive, for reproducible phases
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def _eigh(h: np.ndarray):
    try:
        return scipy.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"dense eigensolver failed for dim={h.shape[0]}: {exc}") from exc


def spectrum(p: DeviceParams, dim: int = DEFAULT_DIM, check_levels: int = 5,
             check_tol: float = 1e-6) -> Spectrum:
    """Diagonalize ho_matrix; converged compares the lowest levels at dim and dim-20."""
    h = ho_matrix(p, dim)
    w, v = _eigh(h)
    v = _fix_sign(v)
    delta = 0.0
    converged = True
    if dim - 20 >= 3:
        w2 = scipy.linalg.eigh(ho_matrix(p, dim - 20), eigvals_only=True)
        k = min(check_levels, dim - 20)
        delta = float(np.max(np.abs(w[:k] - w2[:k])))
        converged = delta <= check_tol
    return Spectrum(dim, w, v, p.beta, p, converged, delta)


def qutrit_states(s: Spectrum) -> QutritData:
    """|0> = ground state, |+-1> = doublet rotated to diagonalize phi."""
    if s.dim < 5:
        raise DegeneracyError("need at least 5 levels")
    e = s.energies
    split = e[2] - e[1]
    if e[3] - e[2] < 10.0 * split:
        raise DegeneracyError(
            f"doublet splitting {split:.3g} not separated from level 3 "
            f"(gap {e[3] - e[2]:.3g}) by a factor 10")
    phi = phi_operator(s.dim, s.beta)
    nop = charge_operator(s.dim, s.beta)
    dbl = s.vectors[:, 1:3]
    sub = dbl.T @ phi @ dbl
    vals, rot = np.linalg.eigh(0.5 * (sub + sub.T))
    loc = _fix_sign(dbl @ rot)
    plus = loc[:, np.argmax(vals)]
    minus = loc[:, np.argmin(vals)]
    states = np.stack([s.vectors[:, 0], plus, minus, s.vectors[:, 3]])
    phi_el = states @ phi @ states.T
    n_el = states.conj() @ nop @ states.T
    h = ho_matrix(s.params, s.dim)
    e_loc = np.einsum("id,de,ie->i", states, h, states)
    energies = {0: float(e[0]), 1: float(e_loc[1]), -1: float(e_loc[2])}
    v = 0.5 * (energies[1] + energies[-1]) - energies[0]
    return QutritData(energies, states, phi_el, n_el, float(v), float(split))


def tb_sigma(p: DeviceParams) -> float:
    if not p.e_j > 0:
        raise DomainError("tight-binding formulas need e_j > 0")
    return (8.0 * p.e_c / p.e_j) ** 0.25


def tb_quantities(p: DeviceParams) -> TightBinding:
    """sigma, hopping t and band gap sqrt(8 E_C E_J) of the Wannier picture."""
    sig = tb_sigma(p)
    s2 = sig * sig
    t = p.e_j * math.exp(-math.pi ** 2 / s2) * (s2 / 4 - math.pi ** 2 / 2 + math.exp(-s2 / 4))
    return TightBinding(sig, t, math.sqrt(8.0 * p.e_c * p.e_j))


def params_for_sigma(sigma: float, e_j: float = 1.0, e_l: float = 1e-3) -> DeviceParams:
    """Device with the requested zero-point spread (E_C = E_J sigma^4 / 8)."""
    return DeviceParams(e_c=e_j * sigma ** 4 / 8.0, e_j=e_j, e_l=e_l)


def tb_hj_element(m1: int, m2: int, p: DeviceParams) -> float:
    """Wannier matrix element of the Josephson part between flux wells m1, m2."""
    sig = tb_sigma(p)
    s2 = sig * sig
    dm = m1 - m2
    return p.e_j * math.exp(-math.pi ** 2 * dm * dm / s2) * (
        s2 / 4 - math.pi ** 2 * dm * dm / 2 - math.exp(-s2 / 4) * math.cos(math.pi * (m1 + m2)))


def tb_charge_element(m1: int, m2: int, sigma: float) -> complex:
    """Wannier charge element <m1|n|m2>."""
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    dm = m1 - m2
    return 1j * math.pi * dm / sigma ** 2 * math.exp(-math.pi ** 2 * dm * dm / sigma ** 2)
