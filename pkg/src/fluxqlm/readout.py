"""Cavity-mediated readout of loop and string operators.

A register holds n qutrits (basis order |+1>, |0>, |-1>), an optional ancilla
qubit and a truncated cavity mode. Gates are applied exactly on the truncated
space: displacements by matrix exponential, dispersive rotations as diagonal
phases. Closed-form fidelity bounds and the inhomogeneity error model live at
the end of the module.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .errors import DomainError, NumericError
from .lattice import Path
from .model import XI, spin1_ops
from .observe import StateVector, thooft_signs, wilson_from_v

LEAK_TOL = 1e-6


def fock_cut_for(max_abs_alpha2: float) -> int:
    """Smallest truncation with N >= 9 |alpha|^2 + 20."""
    return int(math.ceil(9.0 * max_abs_alpha2 + 20))


@dataclass
class CavityRegister:
    """Joint amplitudes with shape (ancilla, spin configuration, photon number)."""

    n_spins: int
    fock_cut: int
    state: np.ndarray
    transcript: list = field(default_factory=list)

    @classmethod
    def from_spins(cls, spin_state: np.ndarray, fock_cut: int, ancilla: Optional[np.ndarray] = None):
        spin_state = np.asarray(spin_state, dtype=complex).reshape(-1)
        n = int(round(math.log(len(spin_state), 3)))
        if 3 ** n != len(spin_state):
            raise DomainError("spin state length must be a power of 3")
        anc = np.array([1.0 + 0j]) if ancilla is None else np.asarray(ancilla, dtype=complex)
        st = np.zeros((len(anc), len(spin_state), fock_cut), dtype=complex)
        st[:, :, 0] = anc[:, None] * spin_state[None, :]
        return cls(n, fock_cut, st)

    @property
    def has_ancilla(self) -> bool:
        return self.state.shape[0] == 2

    def copy(self) -> "CavityRegister":
        return CavityRegister(self.n_spins, self.fock_cut, self.state.copy(), list(self.transcript))

    def norm(self) -> float:
        return float(np.linalg.norm(self.state))

    def photon_mean(self) -> float:
        p = np.sum(np.abs(self.state) ** 2, axis=(0, 1))
        return float(p @ np.arange(self.fock_cut))

    def leakage(self, top: int = 3) -> float:
        return float(np.sum(np.abs(self.state[:, :, -top:]) ** 2))

    def vacuum_fidelity(self) -> float:
        return float(np.sum(np.abs(self.state[:, :, 0]) ** 2) / self.norm() ** 2)

    def _check(self, label: str, leak: bool = True) -> None:
        if abs(self.norm() - 1.0) > 1e-8:
            raise NumericError(f"norm drifted to {self.norm()} after {label}")
        if leak and self.leakage() > LEAK_TOL:
            raise NumericError(f"Fock truncation leakage {self.leakage():.3g} after {label}")


@lru_cache(maxsize=64)
def _displacement_matrix(alpha: complex, n: int) -> np.ndarray:
    a = np.diag(np.sqrt(np.arange(1, n)), 1)
    gen = alpha * a.T - np.conj(alpha) * a
    return scipy.linalg.expm(gen)


def displacement(reg: CavityRegister, alpha: complex) -> CavityRegister:
    """D(alpha) = exp(alpha a^dag - alpha^* a) on the truncated mode."""
    alpha = complex(alpha)
    if abs(alpha) ** 2 > reg.fock_cut / 9.0:
        raise DomainError(f"|alpha|^2 = {abs(alpha) ** 2:.3g} exceeds fock_cut/9")
    if alpha != 0:
        d = _displacement_matrix(alpha, reg.fock_cut)
        reg.state = reg.state @ d.T
    reg.transcript.append({"gate": "displacement", "alpha": [alpha.real, alpha.imag]})
    reg._check("displacement")
    return reg


def weights_to_o(o_weights: np.ndarray, control: bool = False, n_anc: int = 1) -> np.ndarray:
    """Collective weight O for every spin configuration, shape (ancilla, 3^n).

    ``o_weights[j][k]`` is the weight of level k (0: +1, 1: 0, 2: -1) of spin j.
    With ``control`` the weight is switched on only in the ancilla |1> branch.
    """
    w = np.asarray(o_weights, dtype=float)
    o = np.zeros(1)
    for row in w:
        o = (o[:, None] + row[None, :]).reshape(-1)
    if control:
        return np.stack([np.zeros_like(o), o])
    return np.tile(o, (n_anc, 1))


def dispersive_rotation(reg: CavityRegister, theta: float, o_weights, control: bool = False,
                        two_step: bool = False) -> CavityRegister:
    """R(theta O) = exp(i theta n_photon O), diagonal in the product basis.

    ``two_step`` applies the same phase split as R(theta O_1) R(theta O_2)
    with O = O_1 + O_2 (weights split level by level), which is how the gate is
    built from two permuted rotations.
    """
    o = weights_to_o(o_weights, control, reg.state.shape[0])
    nph = np.arange(reg.fock_cut)
    if two_step:
        w = np.asarray(o_weights, dtype=float)
        w1 = np.minimum(w, 1.0)
        parts = [weights_to_o(w1, control, reg.state.shape[0]),
                 weights_to_o(w - w1, control, reg.state.shape[0])]
    else:
        parts = [o]
    for part in parts:
        reg.state = reg.state * np.exp(1j * theta * part[:, :, None] * nph[None, None, :])
    reg.transcript.append({"gate": "dispersive_rotation", "theta": theta,
                           "weights": np.asarray(o_weights).tolist(), "control": control})
    # photon number is conserved, so only the norm needs watching
    reg._check("dispersive_rotation", leak=False)
    return reg


def geometric_alphas(phi: float, omega: float) -> tuple:
    """alpha, beta with arg(alpha) - arg(beta) = phi and |alpha||beta| = omega/2."""
    r = math.sqrt(omega / 2.0)
    return complex(r * np.exp(1j * phi)), complex(r)


def geometric_sequence(reg: CavityRegister, phi: float, theta: float, omega: float, o_weights,
                       control: bool = False) -> CavityRegister:
    """D(-b) R(tO) D(-a) R(-tO) D(b) R(tO) D(a), starting from the cavity vacuum.

    Leaves exp(-i omega sin(theta O + phi)) on the spins and the cavity in vacuum.
    """
    if np.any(np.abs(reg.state[:, :, 1:]) > 1e-12):
        raise DomainError("geometric sequence must start from the cavity vacuum")
    a, b = geometric_alphas(phi, omega)
    displacement(reg, a)
    dispersive_rotation(reg, theta, o_weights, control)
    displacement(reg, b)
    dispersive_rotation(reg, -theta, o_weights, control)
    displacement(reg, -a)
    dispersive_rotation(reg, theta, o_weights, control)
    displacement(reg, -b)
    vf = reg.vacuum_fidelity()
    if 1.0 - vf > 1e-6:
        raise NumericError(f"cavity did not return to vacuum (fidelity {vf})")
    return reg


def geometric_closed_form(phi: float, theta: float, omega: float, o_weights) -> np.ndarray:
    """Diagonal of exp(-i omega sin(theta O + phi)) over spin configurations."""
    o = weights_to_o(o_weights)[0]
    return np.exp(-1j * omega * np.sin(theta * o + phi))


def sequence_unitary(phi: float, theta: float, omega: float, o_weights, fock_cut: Optional[int] = None) -> np.ndarray:
    """Spin operator produced by the simulated sequence (cavity projected on vacuum)."""
    n = len(o_weights)
    cut = fock_cut or fock_cut_for(omega / 2.0)
    cols = []
    for c in range(3 ** n):
        e = np.zeros(3 ** n, dtype=complex)
        e[c] = 1.0
        reg = CavityRegister.from_spins(e, cut)
        geometric_sequence(reg, phi, theta, omega, o_weights)
        cols.append(reg.state[0, :, 0])
    return np.array(cols).T


def clock_weights(n: int, powers: Optional[Sequence[int]] = None) -> np.ndarray:
    """O weights k (times a power +-1, mod 3) so that exp(i 2pi/3 O) = prod Z^{p}."""
    powers = [1] * n if powers is None else list(powers)
    return np.array([[(p * k) % 3 for k in range(3)] for p in powers], dtype=float)


def apply_local(vec: np.ndarray, ops: Sequence[np.ndarray]) -> np.ndarray:
    """Apply a product of single-qutrit operators to a 3^n vector axis by axis."""
    n = len(ops)
    t = np.asarray(vec, dtype=complex).reshape((3,) * n)
    for ax, o in enumerate(ops):
        if o is None:
            continue
        t = np.moveaxis(np.tensordot(o, t, axes=([1], [ax])), 0, ax)
    return t.reshape(-1)


def tensor(ops: Sequence[np.ndarray]) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for o in ops:
        out = np.kron(out, o)
    return out


def clock_decomposition(n: int) -> np.ndarray:
    """(1/3) 1 + (1/3 - 1/sqrt3) Z^n + (1/3 + 1/sqrt3) Z^dag^n."""
    z = spin1_ops().clock_z
    zn = tensor([z] * n)
    return (np.eye(3 ** n) / 3 + (1 / 3 - 1 / math.sqrt(3)) * zn
            + (1 / 3 + 1 / math.sqrt(3)) * zn.conj().T)


# conversion between word-basis states and register tensors ----------------------

def _register_index(words: np.ndarray) -> np.ndarray:
    # level k = 1 - m, first link most significant
    k = 1 - words.astype(np.int64)
    n = words.shape[1]
    return k @ (3 ** np.arange(n - 1, -1, -1, dtype=np.int64))


def to_register_vector(psi: StateVector, links: Sequence[int], max_links: int = 10) -> tuple:
    """Dense spin vector for the register and the positions of ``links`` in it.

    If every link off the path is frozen in psi the register holds the path
    links only; otherwise all links are kept, the extra ones as spectators.
    """
    b = psi.basis
    links = list(links)
    rest = [l for l in range(b.n_links) if l not in links]
    held = links
    if rest:
        sup = np.abs(psi.amplitudes) > 0
        frozen = b.words[sup][:, rest]
        if len(frozen) and np.any(frozen != frozen[0]):
            if b.n_links > max_links:
                raise DomainError(f"register would need all {b.n_links} links (max {max_links})")
            held = list(range(b.n_links))
    vec = np.zeros(3 ** len(held), dtype=complex)
    np.add.at(vec, _register_index(b.words[:, held]), psi.amplitudes)
    return vec, [held.index(l) for l in links], len(held)


def _spin_input(p, links):
    if isinstance(p, StateVector):
        return to_register_vector(p, links)
    vec = np.asarray(p, dtype=complex)
    n = int(round(math.log(len(vec), 3)))
    return vec, list(range(len(links))), n


def _place(per_path: list, pos: list, n: int, fill) -> list:
    out = [fill] * n
    for p, item in zip(pos, per_path):
        out[p] = item
    return out


# protocols ----------------------------------------------------------------------

_LOCAL = None


def _local_rotations():
    # (rotation R, clock power p, sign c) with c R^dag Z^p R equal to the target
    global _LOCAL
    if _LOCAL is None:
        ops = spin1_ops()
        f, fp = ops.fourier_f, ops.fourier_fprime
        z = ops.clock_z
        cands = {"F": f, "Fdag": f.conj().T, "Fp": fp, "Fpdag": fp.conj().T}
        targets = {"X": ops.x_phase(0.0), "Xdag": ops.x_phase(0.0).conj().T,
                   "Xpi": ops.x_phase(math.pi), "Xpidag": ops.x_phase(math.pi).conj().T}
        table = {}
        for tname, tgt in targets.items():
            found = None
            for p in (1, -1):
                zp = z if p == 1 else z.conj()
                for rname, r in cands.items():
                    for c in (1, -1):
                        if np.allclose(c * r.conj().T @ zp @ r, tgt, atol=1e-12):
                            found = (rname, r, p, c)
                            break
                    if found:
                        break
                if found:
                    break
            table[tname] = found
        _LOCAL = table
    return _LOCAL


def _controlled_readout(spin_vec: np.ndarray, rotations: list, phi: float, theta: float,
                        omega: float, weights: np.ndarray, transcript: Optional[list] = None):
    """Ancilla in |+x>, local rotations, controlled sequence, inverse rotations.

    Returns (<sigma_x>, <sigma_y>, branch states) of the ancilla; the ancilla
    coherence equals <R^dag U R> times the known constant phase exp(-i omega sin phi)
    picked up by the uncontrolled branch.
    """
    n = len(rotations)
    cut = fock_cut_for(omega / 2.0)
    reg = CavityRegister.from_spins(apply_local(spin_vec, rotations), cut,
                                    np.array([1.0, 1.0]) / math.sqrt(2.0))
    reg.transcript.append({"gate": "local_rotations", "n": n})
    geometric_sequence(reg, phi, theta, omega, weights, control=True)
    inv = [r.conj().T for r in rotations]
    spins = np.array([apply_local(reg.state[a, :, 0], inv) for a in range(2)])
    reg.transcript.append({"gate": "inverse_local_rotations", "n": n})
    coh = 2.0 * np.vdot(spins[0], spins[1])
    if transcript is not None:
        transcript.extend(reg.transcript)
    return float(coh.real), float(coh.imag), spins


def _ensemble(psi, links) -> list:
    """Normalize input to [(weight, register vector, path positions, n held)]."""
    items = psi if isinstance(psi, list) else [(1.0, psi)]
    out = []
    for it in items:
        if len(it) == 4:
            out.append(tuple(it))
        else:
            out.append((it[0],) + tuple(_spin_input(it[1], links)))
    return out


@dataclass
class ProtocolResult:
    re: float
    im: float
    sigma: dict
    post_measurement: list
    transcript: list = field(default_factory=list)

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)


def _clock_readout(spin_states: list, targets: Sequence[str], transcript: list):
    """<V_target> estimated from the ancilla of the controlled clock gate."""
    table = _local_rotations()
    rots, powers, sign = [], [], 1
    for t in targets:
        _, r, p, c = table[t]
        rots.append(r)
        powers.append(p)
        sign *= c
    w_path = clock_weights(len(targets), powers)
    sx = sy = 0.0
    post = []
    for wgt, vec, pos, n in spin_states:
        weights = np.array(_place(list(w_path), pos, n, np.zeros(3)))
        rr = _place(rots, pos, n, np.eye(3))
        x, y, branches = _controlled_readout(vec, rr, 0.0, 2 * math.pi / 3, math.pi / math.sqrt(3),
                                             weights, transcript)
        sx += wgt * x
        sy += wgt * y
        post.extend([(0.5 * wgt, branches[0] * math.sqrt(2.0), pos, n),
                     (0.5 * wgt, branches[1] * math.sqrt(2.0), pos, n)])
    # <U> = 1/3 + a <V> + b <V^dag>, a = 1/3 - 1/sqrt3, b = 1/3 + 1/sqrt3
    re_v = 1.5 * (sx - 1.0 / 3.0)
    im_v = -(math.sqrt(3.0) / 2.0) * sy
    v = complex(re_v, im_v) * sign
    return v, (sx, sy), post


def wilson_protocol(psi, loop: Path, transcript: Optional[list] = None) -> ProtocolResult:
    """Estimate <W(C)> from two ancilla-assisted clock-gate measurements (V and V')."""
    if loop.kind != "wilson_loop":
        raise DomainError("wilson_protocol needs a closed loop")
    if len(loop) % 2:
        raise DomainError("loop length must be even")
    transcript = [] if transcript is None else transcript
    states = _ensemble(psi, loop.links)
    t_v = ["X" if e > 0 else "Xdag" for e in loop.signs]
    t_vp = ["Xpi" if loop.signs[0] > 0 else "Xpidag"] + t_v[1:]
    v, sig_v, post = _clock_readout(states, t_v, transcript)
    vp, sig_vp, _ = _clock_readout(states, t_vp, transcript)
    w = wilson_from_v(v, vp, len(loop))
    return ProtocolResult(w.real, w.imag, {"V": sig_v, "Vprime": sig_vp,
                                           "V_value": (v.real, v.imag), "Vprime_value": (vp.real, vp.imag)},
                          post, transcript)


def v_sigma_x(psi, loop: Path) -> float:
    """Ancilla <sigma_x> of the V(C) measurement alone."""
    states = _ensemble(psi, loop.links)
    _, sig, post = _clock_readout(states, ["X" if e > 0 else "Xdag" for e in loop.signs], [])
    return sig[0], post


def thooft_protocol(psi, path: Path, varphi: float, method: str = "geometric",
                    convention: Optional[str] = None, transcript: Optional[list] = None) -> ProtocolResult:
    """Estimate <Upsilon(varphi)> along a string.

    ``geometric`` (varphi = pi only): controlled U(pi/2, pi, pi/2) = -i Upsilon(pi)
    with O = sum s_l S^z_l; the -i is stripped. ``single_photon``: a photon in
    (|0> + |1>)/sqrt2 evolves under the alternating-sign dispersive coupling for
    tau = varphi/|chi|, and the field coherence gives <Upsilon(varphi)>.
    """
    transcript = [] if transcript is None else transcript
    signs = thooft_signs(path, convention)
    # weights per level (0: m=+1, 1: m=0, 2: m=-1) are s_l * m
    w_path = [np.array([s * 1.0, 0.0, -s * 1.0]) for s in signs]
    states = _ensemble(psi, path.links)
    sx = sy = 0.0
    if method == "geometric":
        if abs(varphi - math.pi) > 1e-12:
            raise DomainError("geometric 't Hooft readout is defined for varphi = pi only")
        for wgt, vec, pos, nh in states:
            weights = np.array(_place(w_path, pos, nh, np.zeros(3)))
            x, y, _ = _controlled_readout(vec, [np.eye(3)] * nh, math.pi / 2, math.pi, math.pi / 2,
                                          weights, transcript)
            sx += wgt * x
            sy += wgt * y
        # branch phase exp(-i pi/2) on the idle branch, -i on the active one: strip both
        val = complex(sx, sy) * np.exp(-1j * math.pi / 2) * 1j
    elif method == "single_photon":
        for wgt, vec, pos, nh in states:
            weights = np.array(_place(w_path, pos, nh, np.zeros(3)))
            reg = CavityRegister.from_spins(vec, 2)
            reg.state[:, :, 1] = reg.state[:, :, 0]
            reg.state /= math.sqrt(2.0)
            reg.transcript.append({"gate": "single_photon_prepare"})
            dispersive_rotation(reg, varphi, weights)
            coh = 2.0 * np.vdot(reg.state[0, :, 0], reg.state[0, :, 1])
            transcript.extend(reg.transcript)
            sx += wgt * coh.real
            sy += wgt * coh.imag
        val = complex(sx, sy)
    else:
        raise DomainError(f"unknown method {method!r}")
    return ProtocolResult(val.real, val.imag, {"x": sx, "y": sy}, [], transcript)


def transcript_json(transcript: list) -> str:
    return json.dumps({"gates": transcript}, indent=1, sort_keys=True)


# fidelity models ----------------------------------------------------------------

@dataclass(frozen=True)
class FidelityParams:
    gamma: float
    chi: float
    kappa: float
    eta_a: float = 1.0
    eta_p: float = 1.0
    n: int = 1
    epsilon: float = 0.0
    chi_a: Optional[float] = None

    def __post_init__(self):
        if min(self.gamma, self.kappa) < 0 or not self.chi > 0:
            raise DomainError("rates must be non-negative and |chi| positive")
        if not (0 <= self.eta_a <= 1 and 0 <= self.eta_p <= 1):
            raise DomainError("detection efficiencies must lie in [0, 1]")


def reference_rates(n: int = 9, eta_a: float = 0.919, eta_p: float = 1.0) -> FidelityParams:
    """gamma = 66.7 kHz, |chi| = 2 pi 99.8 MHz, kappa = 22.2 kHz (rates in 1/s)."""
    return FidelityParams(gamma=66.7e3, chi=2 * math.pi * 99.8e6, kappa=22.2e3,
                          eta_a=eta_a, eta_p=eta_p, n=n)


def _clip01(x: float) -> float:
    return min(1.0, max(0.0, x))


def fidelity_gp(fp: FidelityParams, theta: float, omega: float) -> float:
    """Process-fidelity lower bound of the geometric-phase measurement."""
    g, c, k = fp.gamma, fp.chi, fp.kappa
    spin = 1.0 - fp.n * (4 * math.pi + 6 * theta) * g / c
    cav = 1.0 - math.pi * omega * k * (math.exp(-3 * theta * k / c) + math.exp(-theta * k / c)) \
        * (1.0 + math.pi * k / (2 * c)) / c
    return _clip01(fp.eta_a * spin * cav)


def mean_gate_time(fp: FidelityParams, theta: float) -> float:
    """Mean single-photon gate time; 2 theta/|chi| in the lossless limit."""
    c, k = fp.chi, fp.kappa
    x = 2 * theta * k / c
    if x == 0.0:
        return 2 * theta / c
    # x + expm1(x) has no cancellation, so the closed form is safe for small x
    return ((1 + math.exp(x)) * (2 * theta) ** 2 * k / c ** 2) / (x + math.expm1(x))


def per_spin_penalty(fp: FidelityParams, theta: float) -> float:
    return -math.expm1(-fp.gamma * mean_gate_time(fp, theta))


def fidelity_sp(fp: FidelityParams, theta: float) -> float:
    """Single-photon measurement bound eta_p (1 - n (1 - exp(-gamma tbar)))."""
    return _clip01(fp.eta_p * (1.0 - fp.n * per_spin_penalty(fp, theta)))


def inhomogeneity_error(theta: float, n: int, epsilon: float) -> dict:
    """Gate error from a relative coupling spread epsilon.

    exact: ((1 - t)^n + (1 + t)^n - 2)/2 with t = tan(theta epsilon), which is the
    binomial bound for even n written so it stays non-negative for odd n;
    small_eps: theta^2 n (n - 1) epsilon^2 / 2.
    """
    if abs(epsilon) >= 1:
        raise DomainError("|epsilon| must be below 1")
    t = math.tan(theta * epsilon)
    exact = 0.5 * ((1 - t) ** n + (1 + t) ** n - 2.0)
    return {"exact_bound": exact, "small_eps": theta ** 2 * n * (n - 1) * epsilon ** 2 / 2.0}
