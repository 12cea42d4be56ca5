"""Expectation values of string and loop operators on word-basis states."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError
from .lattice import LatticeGeometry, Path, STRING_CONVENTIONS
from .model import Basis, _move_on_words, gauss_charges


@dataclass(eq=False)
class StateVector:
    amplitudes: np.ndarray
    basis: Basis

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes)
        if self.amplitudes.shape != (self.basis.dim,):
            raise DomainError("amplitude length does not match basis dimension")

    @property
    def tag(self) -> str:
        return self.basis.tag

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        return StateVector(self.amplitudes / self.norm, self.basis)

    def check_normalized(self, tol: float = 1e-10) -> None:
        if abs(self.norm - 1.0) > tol:
            raise DomainError(f"state norm {self.norm} differs from 1")


def basis_state(basis: Basis, word) -> StateVector:
    idx = basis.word_index(word)
    if idx < 0:
        raise DomainError("word not in basis")
    a = np.zeros(basis.dim, dtype=complex)
    a[idx] = 1.0
    return StateVector(a, basis)


def random_state(basis: Basis, seed: int = 0) -> StateVector:
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(basis.dim) + 1j * rng.standard_normal(basis.dim)
    return StateVector(a / np.linalg.norm(a), basis)


def embed(psi: StateVector, target: Basis) -> StateVector:
    """Copy amplitudes into a larger basis containing every word of psi's basis."""
    idx = target.index(psi.basis.codes)
    if np.any(idx < 0):
        raise DomainError("target basis does not contain the state's support")
    a = np.zeros(target.dim, dtype=np.result_type(psi.amplitudes, complex))
    a[idx] = psi.amplitudes
    return StateVector(a, target)


def _pairwise_sum(x: np.ndarray):
    # fixed-order tree reduction so results do not depend on chunking
    x = np.asarray(x)
    while len(x) > 1:
        if len(x) % 2:
            x = np.concatenate([x, np.zeros(1, dtype=x.dtype)])
        x = x[0::2] + x[1::2]
    return x[0] if len(x) else 0.0


def thooft_signs(path: Path, convention: Optional[str] = None) -> np.ndarray:
    if convention is None:
        return np.asarray(path.signs)
    if convention not in STRING_CONVENTIONS:
        raise DomainError(f"unknown string convention {convention!r}")
    n = len(path)
    if convention == "uniform":
        return np.ones(n, dtype=int)
    return np.array([-1 if k % 2 == 0 else 1 for k in range(n)])


def expect_thooft(psi: StateVector, path: Path, varphi: float,
                  convention: Optional[str] = None) -> complex:
    """<psi| prod_l exp(i varphi s_l S^z_l) |psi> along the string.

    ``convention`` overrides the exponent signs stored in ``path``.
    """
    if path.kind != "thooft_string":
        raise DomainError("expect_thooft needs a 't Hooft string path")
    links = path.links
    if max(links) >= psi.basis.n_links:
        raise DomainError("path link outside basis support")
    s = thooft_signs(path, convention)
    phase = np.exp(1j * varphi * (psi.basis.words[:, links].astype(float) @ s))
    return complex(_pairwise_sum(np.abs(psi.amplitudes) ** 2 * phase))


def _apply_and_overlap(psi: StateVector, links, exps, coef=1.0) -> complex:
    b = psi.basis
    ok, dst, amp = _move_on_words(b.words, b.codes, links, exps, b.n_links)
    src = np.nonzero(ok)[0]
    tgt = b.index(dst[ok])
    keep = tgt >= 0
    terms = np.conj(psi.amplitudes[tgt[keep]]) * amp[ok][keep] * psi.amplitudes[src[keep]]
    return complex(coef * _pairwise_sum(terms))


def _check_closed(loop: Path) -> None:
    if loop.kind != "wilson_loop":
        raise DomainError("open path: Wilson loop expectation needs a closed loop")


def expect_wilson(psi: StateVector, loop: Path) -> complex:
    """<psi| prod_l S^{e_l} |psi> with S^+ for e = +1 and S^- for e = -1."""
    _check_closed(loop)
    return _apply_and_overlap(psi, loop.links, loop.signs)


def _cyclic_shift_overlap(psi: StateVector, links, exps, first_phase: float = 0.0) -> complex:
    # X raises m cyclically (+1 wraps to -1); X^dag lowers it. The wrap on the
    # first link picks up e^{i phase} (e^{-i phase} for its adjoint).
    b = psi.basis
    w = b.words.astype(np.int64)
    pw = 3 ** np.arange(b.n_links - 1, -1, -1, dtype=np.int64)
    dst = b.codes.copy()
    amp = np.ones(b.dim, dtype=complex)
    for i, (l, e) in enumerate(zip(links, exps)):
        m = w[:, l]
        new = ((m + 1 + e) % 3) - 1
        dst = dst + (new - m) * pw[l]
        if i == 0 and first_phase != 0.0:
            wrap = (m == 1) if e > 0 else (m == -1)
            amp = amp * np.where(wrap, np.exp(1j * e * first_phase), 1.0)
    tgt = b.index(dst)
    keep = tgt >= 0
    return complex(_pairwise_sum(np.conj(psi.amplitudes[tgt[keep]]) * amp[keep] * psi.amplitudes[keep]))


def expect_v(psi: StateVector, loop: Path, first_phase: float = 0.0) -> complex:
    """<V(C)>: X on links with exponent +1, X^dag on -1; ``first_phase`` = pi gives V'."""
    _check_closed(loop)
    return _cyclic_shift_overlap(psi, loop.links, loop.signs, first_phase)


def wilson_from_v(v: complex, v_prime: complex, length: int) -> complex:
    """<W> = 2^{|C|/2 - 1} (<V> + <V'>), valid on the gauge sector.

    Gauss's law keeps only the S^+/sqrt2 part of X on every link but the
    first, where X + X(pi) = sqrt2 S^+; hence the extra factor 1/2.
    """
    return (v + v_prime) * 2.0 ** (length / 2.0 - 1.0)


def gauss_density(psi: StateVector, g: LatticeGeometry, gauss: Optional[str] = None) -> float:
    """(1/N_v) sum_v <G_v^2>."""
    if psi.basis.tag == "gauge_sector":
        raise DomainError("gauss_density on a gauge-sector state is identically zero")
    gauss = gauss or psi.basis.gauss
    q = np.sum(gauss_charges(g, psi.basis.words, gauss) ** 2, axis=1)
    return float(_pairwise_sum(np.abs(psi.amplitudes) ** 2 * q)) / g.n_vertices
