"""Spin-1 link models in a configuration-word basis.

A basis word assigns m in {-1, 0, +1} to every link. Words are encoded in base
3 with digit m + 1, first link most significant, so sorting codes sorts words
lexicographically. Hamiltonians are assembled as scipy sparse matrices from
"moves": products of raising/lowering operators on a few links.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import CapacityError, DomainError
from .lattice import LatticeGeometry, plaquette_exponents, star_arrays

GAUSS_CONVENTIONS = ("signed", "unsigned")
MAX_BASIS_DIM = 6_000_000

XI = np.exp(2j * np.pi / 3)


# single-site algebra -------------------------------------------------------------

@dataclass(frozen=True)
class SpinOps:
    """Spin-1 matrices in the basis (|+1>, |0>, |-1>)."""

    sz: np.ndarray
    splus: np.ndarray
    sminus: np.ndarray
    fourier_f: np.ndarray
    fourier_fprime: np.ndarray
    clock_z: np.ndarray

    @staticmethod
    def x_phase(phi: float) -> np.ndarray:
        """Cyclic raise 0 -> +1, -1 -> 0, with +1 -> -1 picking up e^{i phi}."""
        x = np.zeros((3, 3), dtype=complex)
        x[0, 1] = 1.0
        x[1, 2] = 1.0
        x[2, 0] = np.exp(1j * phi)
        return x


def spin1_ops() -> SpinOps:
    sz = np.diag([1.0, 0.0, -1.0])
    sp_ = math.sqrt(2.0) * np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]])
    f = np.array([[XI ** (r * s) for s in range(3)] for r in range(3)]) / math.sqrt(3.0)
    fp = np.array([[1, XI, XI ** 2], [-1, -XI ** 2, -XI], [1, 1, 1]]) / math.sqrt(3.0)
    z = np.diag([1.0, XI, XI ** 2])
    return SpinOps(sz, sp_, sp_.T.copy(), f, fp, z)


@dataclass(frozen=True)
class LargeNOps:
    n_rep: int
    w: np.ndarray
    w_dagger: np.ndarray
    e: np.ndarray


def large_n_ops(n_rep: int) -> LargeNOps:
    """Spin S = N/2 link with E = S^z and W = S^- / sqrt(S(S+1))."""
    if n_rep < 1:
        raise DomainError("n_rep must be >= 1")
    s = n_rep / 2.0
    m = s - np.arange(n_rep + 1)
    e = np.diag(m)
    # <m-1|S^-|m> = sqrt(s(s+1) - m(m-1))
    low = np.sqrt(s * (s + 1) - m[:-1] * (m[:-1] - 1))
    sminus = np.diag(low, -1)
    w = sminus / math.sqrt(s * (s + 1))
    return LargeNOps(n_rep, w, w.T.copy(), e)


# bases ---------------------------------------------------------------------------

def _powers(n: int) -> np.ndarray:
    return 3 ** np.arange(n - 1, -1, -1, dtype=np.int64)


def encode(words: np.ndarray) -> np.ndarray:
    words = np.asarray(words, dtype=np.int64)
    return (words + 1) @ _powers(words.shape[-1])


def decode(codes: np.ndarray, n_links: int) -> np.ndarray:
    codes = np.asarray(codes, dtype=np.int64)
    return ((codes[:, None] // _powers(n_links)) % 3 - 1).astype(np.int8)


@dataclass(frozen=True, eq=False)
class Basis:
    """Sorted set of configuration words with a tag: full, gauge_sector or sector."""

    n_links: int
    words: np.ndarray
    codes: np.ndarray
    tag: str
    gauss: str = "signed"
    geometry: Optional[LatticeGeometry] = None

    @property
    def dim(self) -> int:
        return len(self.codes)

    def index(self, codes: np.ndarray) -> np.ndarray:
        """Positions of codes, -1 where absent."""
        codes = np.asarray(codes, dtype=np.int64)
        pos = np.searchsorted(self.codes, codes)
        pos = np.minimum(pos, self.dim - 1)
        hit = self.codes[pos] == codes
        return np.where(hit, pos, -1)

    def word_index(self, word: Sequence[int]) -> int:
        return int(self.index(encode(np.asarray([word])))[0])

    def zero_index(self) -> int:
        return self.word_index([0] * self.n_links)


GaugeBasis = Basis


def _from_codes(codes, n_links, tag, gauss, geometry) -> Basis:
    codes = np.unique(np.asarray(codes, dtype=np.int64))
    return Basis(n_links, decode(codes, n_links), codes, tag, gauss, geometry)


def full_basis(n_links: int, geometry: Optional[LatticeGeometry] = None,
               max_dim: int = MAX_BASIS_DIM) -> Basis:
    if 3 ** n_links > max_dim:
        raise CapacityError(f"full basis of {n_links} links has {3 ** n_links} states (cap {max_dim})")
    codes = np.arange(3 ** n_links, dtype=np.int64)
    return Basis(n_links, decode(codes, n_links), codes, "full", "signed", geometry)


def _signs(g: LatticeGeometry, gauss: str) -> np.ndarray:
    if gauss not in GAUSS_CONVENTIONS:
        raise DomainError(f"unknown Gauss convention {gauss!r}")
    return star_arrays(g, unsigned=(gauss == "unsigned"))


def gauss_charges(g: LatticeGeometry, words: np.ndarray, gauss: str = "signed") -> np.ndarray:
    """G_v for every word, shape (n_words, n_vertices)."""
    return np.asarray(words, dtype=np.int64) @ _signs(g, gauss).T


def gauge_basis(g: LatticeGeometry, gauss: str = "signed", max_dim: int = MAX_BASIS_DIM) -> Basis:
    """All words with zero Gauss charge at every vertex.

    Words are grown one link at a time; after each link, vertices whose whole
    star is assigned must be neutral and the others must still be reachable.
    """
    a = _signs(g, gauss)
    n = g.n_links
    remaining = np.zeros((n + 1, g.n_vertices), dtype=np.int64)
    for l in range(n - 1, -1, -1):
        remaining[l] = remaining[l + 1] + np.abs(a[:, l])
    words = np.zeros((1, 0), dtype=np.int8)
    charge = np.zeros((1, g.n_vertices), dtype=np.int64)
    for l in range(n):
        k = len(words)
        if 3 * k > max_dim:
            raise CapacityError(f"gauge enumeration frontier {3 * k} exceeds cap {max_dim}")
        vals = np.repeat(np.array([-1, 0, 1], dtype=np.int8), k)
        words = np.concatenate([np.tile(words, (3, 1)), vals[:, None]], axis=1)
        charge = np.tile(charge, (3, 1)) + vals[:, None].astype(np.int64) * a[:, l]
        ok = np.all(np.abs(charge) <= remaining[l + 1], axis=1)
        words, charge = words[ok], charge[ok]
    basis = _from_codes(encode(words), n, "gauge_sector", gauss, g)
    return basis


def sector_basis(g: LatticeGeometry, seed: Basis, moves: list, depth: Optional[int] = None,
                 max_dim: int = MAX_BASIS_DIM) -> Basis:
    """Words reachable from ``seed`` by at most ``depth`` applications of ``moves``.

    With ``depth=None`` the closure is taken, i.e. the connected sector of the
    Hamiltonian built from those moves.
    """
    n = g.n_links
    known = np.array(seed.codes, dtype=np.int64)
    frontier = known
    step = 0
    while len(frontier) and (depth is None or step < depth):
        fw = decode(frontier, n)
        new = []
        for links, exps, _ in moves:
            ok, dst, _ = _move_on_words(fw, frontier, links, exps, n)
            new.append(dst[ok])
        cand = np.unique(np.concatenate(new)) if new else np.zeros(0, dtype=np.int64)
        frontier = np.setdiff1d(cand, known, assume_unique=True)
        known = np.union1d(known, frontier)
        if len(known) > max_dim:
            raise CapacityError(f"sector basis exceeds cap {max_dim}")
        step += 1
    return Basis(n, decode(known, n), known, "sector", seed.gauss, g)


# operators -----------------------------------------------------------------------

@dataclass(eq=False)
class SparseOperator:
    """Sparse matrix on a word basis."""

    matrix: sp.csr_matrix
    basis: Basis
    hermitian: bool = True
    label: str = ""

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def tag(self) -> str:
        return self.basis.tag

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def __matmul__(self, x):
        return self.matrix @ x

    def entries(self):
        """Row-major (row, col, value) triplets."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return coo.row[order], coo.col[order], coo.data[order]

    def check_hermitian(self, samples: int = 64, seed: int = 0, tol: float = 1e-12) -> bool:
        """Sampled adjoint check: <x|H y> = <H x|y> for random x, y."""
        rng = np.random.default_rng(seed)
        m = self.matrix
        scale = max(abs(m).max() if m.nnz else 0.0, 1.0)
        for _ in range(max(1, samples // 16)):
            x = rng.standard_normal(self.dim) + 1j * rng.standard_normal(self.dim)
            y = rng.standard_normal(self.dim) + 1j * rng.standard_normal(self.dim)
            lhs = np.vdot(x, m @ y)
            rhs = np.vdot(m @ x, y)
            if abs(lhs - rhs) > tol * scale * np.linalg.norm(x) * np.linalg.norm(y):
                return False
        return True


def _amp(m: np.ndarray, e: int) -> np.ndarray:
    # |S^+|m>| = sqrt((1-m)(2+m)), |S^-|m>| = sqrt((1+m)(2-m))
    m = m.astype(np.float64)
    if e > 0:
        return np.sqrt((1 - m) * (2 + m))
    return np.sqrt((1 + m) * (2 - m))


def _move_on_words(words, codes, links, exps, n_links):
    """Apply prod_l S^{exps[l]} on ``links``; returns (valid mask, destination code, amplitude)."""
    pw = _powers(n_links)
    ok = np.ones(len(codes), dtype=bool)
    amp = np.ones(len(codes))
    dst = codes.copy()
    for l, e in zip(links, exps):
        m = words[:, l]
        ok &= (m < 1) if e > 0 else (m > -1)
        amp = amp * _amp(m, e)
        dst = dst + e * pw[l]
    return ok, dst, amp


def move_triplets(basis: Basis, links: Sequence[int], exps: Sequence[int], coef: complex = 1.0,
                  target: Optional[Basis] = None):
    """(row, col, value) of coef * prod S^{e} from ``basis`` into ``target`` (default same)."""
    target = basis if target is None else target
    ok, dst, amp = _move_on_words(basis.words, basis.codes, links, exps, basis.n_links)
    src = np.nonzero(ok)[0]
    rows = target.index(dst[ok])
    keep = rows >= 0
    return rows[keep], src[keep], coef * amp[ok][keep]


def _assemble(basis: Basis, diag: Optional[np.ndarray], moves: list, label: str,
              hermitian: bool = True) -> SparseOperator:
    rows, cols, vals = [], [], []
    if diag is not None:
        nz = np.nonzero(diag)[0]
        rows.append(nz)
        cols.append(nz)
        vals.append(diag[nz].astype(complex))
    for links, exps, coef in moves:
        r, c, v = move_triplets(basis, links, exps, coef)
        rows.append(r)
        cols.append(c)
        vals.append(np.asarray(v, dtype=complex))
    if rows:
        r = np.concatenate(rows)
        c = np.concatenate(cols)
        v = np.concatenate(vals)
    else:
        r = c = np.zeros(0, dtype=np.int64)
        v = np.zeros(0, dtype=complex)
    if np.all(v.imag == 0):
        v = v.real
    m = sp.csr_matrix((v, (r, c)), shape=(basis.dim, basis.dim))
    m.sum_duplicates()
    m.sort_indices()
    return SparseOperator(m, basis, hermitian, label)


def _resolve_basis(g, basis, gauss):
    if isinstance(basis, Basis):
        return basis
    if basis in (None, "full"):
        return full_basis(g.n_links, g)
    if basis == "gauge_sector":
        return gauge_basis(g, gauss)
    raise DomainError(f"unknown basis {basis!r}")


def sz2_total(basis: Basis) -> np.ndarray:
    return np.sum(basis.words.astype(np.int64) ** 2, axis=1).astype(float)


def gauss_penalty(g: LatticeGeometry, basis: Basis, gauss: str = "signed") -> np.ndarray:
    """Sum_v G_v^2 for every word."""
    return np.sum(gauss_charges(g, basis.words, gauss) ** 2, axis=1).astype(float)


def ring_moves(g: LatticeGeometry, gauss: str, coef: float) -> list:
    """coef * (U_p + U_p^dag) for every plaquette."""
    moves = []
    for p in range(g.n_plaquettes):
        steps = plaquette_exponents(g, p, gauss)
        links = tuple(l for l, _ in steps)
        exps = tuple(e for _, e in steps)
        moves.append((links, exps, coef))
        moves.append((links, tuple(-e for e in exps), coef))
    return moves


def _pair_set(g: LatticeGeometry, pairs: str):
    if pairs == "all":
        return g.nn_pairs
    if pairs == "perpendicular":
        return g.perpendicular_pairs()
    raise DomainError(f"unknown pair set {pairs!r}")


def _shared_signs(g: LatticeGeometry, j: int, k: int, gauss: str) -> tuple:
    """Gauss signs of links j and k at a vertex they share."""
    a = _signs(g, gauss)
    for v in range(g.n_vertices):
        if a[v, j] != 0 and a[v, k] != 0:
            return int(a[v, j]), int(a[v, k])
    raise DomainError(f"links {j} and {k} share no vertex")


def hop_moves(g: LatticeGeometry, gauss: str, coef: float, pairs: str = "all",
              hop: str = "neutral") -> list:
    """Flip-flop terms on nearest-neighbour link pairs.

    ``neutral`` picks the exponents that leave the charge of the shared vertex
    unchanged: S+S- + S-S+ for links with equal Gauss sign there (always the
    case in the unsigned convention) and S+S+ + S-S- otherwise. ``literal``
    always uses S+S- + S-S+.
    """
    moves = []
    for j, k in _pair_set(g, pairs):
        if hop == "literal":
            ek = -1
        elif hop == "neutral":
            sj, sk = _shared_signs(g, j, k, gauss)
            ek = -1 if sj == sk else 1
        else:
            raise DomainError(f"unknown hop form {hop!r}")
        moves.append(((j, k), (1, ek), coef))
        moves.append(((j, k), (-1, -ek), coef))
    return moves


def pair_products(g: LatticeGeometry, words: np.ndarray, gauss: str, pairs: str = "all") -> np.ndarray:
    """For each word and pair, s_j s_k m_j m_k with Gauss signs at the shared vertex."""
    pr = _pair_set(g, pairs)
    out = np.zeros((len(words), len(pr)))
    w = words.astype(np.int64)
    for i, (j, k) in enumerate(pr):
        sj, sk = _shared_signs(g, j, k, gauss)
        out[:, i] = sj * sk * w[:, j] * w[:, k]
    return out


def build_h_qlm(g: LatticeGeometry, basis, g2_elec: float, g2_mag: float,
                gauss: Optional[str] = None) -> SparseOperator:
    """g2_elec sum (S^z)^2 - (1/g2_mag) sum_p (U_p + U_p^dag)."""
    if g2_mag == 0:
        raise DomainError("g2_mag must be nonzero")
    gauss = gauss or getattr(basis, "gauss", "signed")
    basis = _resolve_basis(g, basis, gauss)
    if basis.dim == 0:
        raise DomainError("empty basis")
    inv = 0.0 if math.isinf(g2_mag) else 1.0 / g2_mag
    moves = ring_moves(g, gauss, -inv) if inv != 0 else []
    return _assemble(basis, g2_elec * sz2_total(basis), moves, "h_qlm")


def build_h_imp(g: LatticeGeometry, v: float, u: float, j: float, basis="full",
                gauss: str = "signed", pairs: str = "all", hop: str = "neutral") -> SparseOperator:
    """V sum (S^z)^2 + U sum_v G_v^2 + J sum_<jk> flip-flop, on the given basis.

    On a gauge-sector basis the U term vanishes and the flip-flops, which always
    leave the sector, drop out.
    """
    basis = _resolve_basis(g, basis, gauss)
    diag = v * sz2_total(basis) + u * gauss_penalty(g, basis, gauss)
    moves = hop_moves(g, gauss, j, pairs, hop) if j != 0 else []
    return _assemble(basis, diag, moves, "h_imp")


def build_h_eff(g: LatticeGeometry, v: float, u: float, j: float, basis="gauge_sector",
                gauss: Optional[str] = None, pairs: str = "all", form: str = "closed") -> SparseOperator:
    """Gauge-sector effective Hamiltonian of build_h_imp at large U.

    ``form="closed"``: (V + 2J^2/U) sum (S^z)^2 - (2J^2/U) sum_p (U_p + h.c.)
    + (J^2/4U) sum_<jk> S^z_j S^z_k (1 - S^z_j S^z_k).
    ``form="second_order"``: exact second-order degenerate perturbation theory
    of build_h_imp in J, see ``second_order_h_eff``.
    """
    if not u > 0:
        raise DomainError("u must be positive")
    gauss = gauss or getattr(basis, "gauss", "signed")
    basis = _resolve_basis(g, basis, gauss)
    if basis.dim == 0:
        raise DomainError("empty basis")
    if form == "second_order":
        return second_order_h_eff(g, v, u, j, basis, gauss, pairs)
    if form != "closed":
        raise DomainError(f"unknown form {form!r}")
    r = 2.0 * j * j / u
    pp = pair_products(g, basis.words, gauss, pairs)
    diag = (v + r) * sz2_total(basis) + (j * j / (4.0 * u)) * np.sum(pp * (1.0 - pp), axis=1)
    moves = ring_moves(g, gauss, -r) if r != 0 else []
    return _assemble(basis, diag, moves, "h_eff")


def second_order_h_eff(g: LatticeGeometry, v: float, u: float, j: float, basis: Basis,
                       gauss: str = "signed", pairs: str = "all", hop: str = "neutral") -> SparseOperator:
    """P H0 P + sum_k P H_J |k><k| H_J P * (1/(E_a-E_k) + 1/(E_b-E_k))/2.

    H0 = V sum (S^z)^2 + U sum G_v^2 and H_J is the flip-flop part of build_h_imp;
    the intermediate states k are all words one flip-flop away from the sector.
    """
    if basis.tag != "gauge_sector":
        raise DomainError("second-order effective Hamiltonian needs a gauge-sector basis")
    e_p = v * sz2_total(basis)
    moves = hop_moves(g, gauss, j, pairs, hop)
    rows, cols, vals = [], [], []
    for links, exps, coef in moves:
        ok, dst, amp = _move_on_words(basis.words, basis.codes, links, exps, basis.n_links)
        rows.append(dst[ok])
        cols.append(np.nonzero(ok)[0])
        vals.append(coef * amp[ok])
    kcodes = np.concatenate(rows)
    acols = np.concatenate(cols)
    avals = np.concatenate(vals)
    uniq, kidx = np.unique(kcodes, return_inverse=True)
    kwords = decode(uniq, basis.n_links)
    e_k = v * np.sum(kwords.astype(np.int64) ** 2, axis=1) + u * np.sum(gauss_charges(g, kwords, gauss) ** 2, axis=1)
    if np.any(np.sum(gauss_charges(g, kwords, gauss) ** 2, axis=1) == 0):
        raise DomainError("flip-flop stays inside the gauge sector; perturbation theory does not apply")
    a = sp.csr_matrix((avals, (kidx, acols)), shape=(len(uniq), basis.dim))
    a.sum_duplicates()
    coo = a.tocoo()
    ad = sp.csr_matrix((coo.data / (e_p[coo.col] - e_k[coo.row]), (coo.row, coo.col)), shape=a.shape)
    h2 = 0.5 * (a.T @ ad + ad.T @ a)
    m = (sp.diags(e_p) + h2).tocsr()
    m.sum_duplicates()
    m.sort_indices()
    m.eliminate_zeros()
    return SparseOperator(m, basis, True, "h_eff_second_order")


def gauss_operator(g: LatticeGeometry, vertex: int, basis="full", gauss: str = "signed") -> SparseOperator:
    """Diagonal operator G_v = sum over the star of (sign) S^z."""
    if not 0 <= vertex < g.n_vertices:
        raise DomainError(f"vertex {vertex} out of range")
    basis = _resolve_basis(g, basis, gauss)
    col = _signs(g, gauss)[vertex]
    diag = basis.words.astype(np.int64) @ col
    return SparseOperator(sp.diags(diag.astype(float)).tocsr(), basis, True, f"gauss_{vertex}")


def commutator_norm(a: SparseOperator, b: SparseOperator) -> float:
    """Largest absolute entry of [A, B]."""
    c = a.matrix @ b.matrix - b.matrix @ a.matrix
    c = c.tocsr()
    c.eliminate_zeros()
    return float(abs(c).max()) if c.nnz else 0.0


def dump_triplets(op: SparseOperator, path) -> None:
    """Text dump: header with dimension and basis tag, then `row col re im` per entry."""
    from .formats import write_triplets
    write_triplets(op, path)
