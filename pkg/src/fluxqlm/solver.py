"""Eigen-solvers and parameter sweeps."""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg

from .errors import DomainError, NumericError
from .model import SparseOperator
from .observe import StateVector

DENSE_MAX_DIM = 4096


@dataclass
class EigResult:
    energies: np.ndarray
    vectors: list
    residuals: np.ndarray
    iterations: int
    degenerate: bool = False
    ritz_history: list = field(default_factory=list, repr=False)

    @property
    def gap(self) -> float:
        return float(self.energies[1] - self.energies[0]) if len(self.energies) > 1 else math.nan


def dense_eig(h: SparseOperator) -> EigResult:
    """Full spectrum by a dense Hermitian solver."""
    if h.dim > DENSE_MAX_DIM:
        raise DomainError(f"dense_eig limited to dimension {DENSE_MAX_DIM}, got {h.dim}")
    a = h.toarray()
    try:
        w, v = scipy.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"dense eigensolver failed: {exc}") from exc
    res = np.linalg.norm(a @ v - v * w, axis=0)
    vecs = [StateVector(v[:, i], h.basis) for i in range(len(w))]
    return EigResult(w, vecs, res, 1, _degenerate(w))


def _degenerate(w, rel: float = 1e-8) -> bool:
    if len(w) < 2:
        return False
    scale = max(1.0, abs(w[0]))
    return bool(w[1] - w[0] < rel * scale)


def lanczos_ground(h: SparseOperator, k: int = 1, tol: float = 1e-10, seed: int = 0,
                   v0: Optional[np.ndarray] = None, max_iter: int = 2000,
                   krylov_dim: Optional[int] = None) -> EigResult:
    """Lowest k eigenpairs by thick-restart Lanczos with full reorthogonalization.

    Each new Krylov vector is Gram-Schmidt orthogonalized twice against the
    whole basis. When the basis is full, the k + 10 lowest Ritz vectors are kept
    and the iteration continues from the residual direction.
    """
    if not h.hermitian:
        raise DomainError("lanczos_ground needs a Hermitian operator")
    if not 1 <= k <= 6:
        raise DomainError("k must be between 1 and 6")
    a = h.matrix
    n = h.dim
    k = min(k, n)
    rng = np.random.default_rng(seed)
    cplx = np.iscomplexobj(a.data) or (v0 is not None and np.iscomplexobj(v0))
    dtype = complex if cplx else float
    m = min(n, krylov_dim or max(4 * k + 40, 60))
    if v0 is None:
        start = rng.standard_normal(n)
        if cplx:
            start = start + 1j * rng.standard_normal(n)
    else:
        start = np.asarray(v0, dtype=dtype).copy()
    nrm = np.linalg.norm(start)
    if nrm == 0:
        raise DomainError("zero start vector")
    basis = np.zeros((m + 1, n), dtype=dtype)
    basis[0] = start / nrm
    t = np.zeros((m, m), dtype=dtype)
    keep = 0
    iters = 0
    hnorm = 0.0
    history = []
    while True:
        beta = 0.0
        size = m
        for j in range(keep, m):
            w = a @ basis[j]
            coeff = basis[: j + 1].conj() @ w
            w = w - basis[: j + 1].T @ coeff
            c2 = basis[: j + 1].conj() @ w
            w = w - basis[: j + 1].T @ c2
            coeff = coeff + c2
            t[: j + 1, j] = coeff
            t[j, : j + 1] = coeff.conj()
            iters += 1
            beta = np.linalg.norm(w)
            hnorm = max(hnorm, abs(coeff[j].real))
            if j + 1 >= n:
                beta = 0.0
                size = j + 1
                break
            if beta <= 1e-13 * max(hnorm, 1e-300):
                # invariant subspace found: continue with a fresh orthogonal direction
                r = rng.standard_normal(n).astype(dtype)
                for _ in range(2):
                    r = r - basis[: j + 1].T @ (basis[: j + 1].conj() @ r)
                basis[j + 1] = r / np.linalg.norm(r)
                beta = 0.0
            else:
                basis[j + 1] = w / beta
            if iters >= max_iter:
                size = j + 1
                break
        tt = t[:size, :size]
        theta, y = scipy.linalg.eigh(0.5 * (tt + tt.conj().T))
        hnorm = max(hnorm, float(np.max(np.abs(theta))))
        est = beta * np.abs(y[size - 1, :k])
        history.append(theta[:k].copy())
        done = np.all(est <= tol * hnorm) or size >= n
        if done or iters >= max_iter:
            x = y[:, :k].T @ basis[:size]
            res = np.array([np.linalg.norm(a @ x[i] - theta[i] * x[i]) for i in range(k)])
            if not done or np.any(res > 10 * tol * hnorm + 1e-300):
                raise NumericError(
                    f"Lanczos did not converge: {iters} iterations, residuals {res}, "
                    f"Ritz history tail {history[-3:]}")
            vecs = [StateVector(x[i] / np.linalg.norm(x[i]), h.basis) for i in range(k)]
            return EigResult(theta[:k], vecs, res, iters, _degenerate(theta[:k]), history)
        p = min(k + 10, size - 1)
        kept = y[:, :p].T @ basis[:size]
        basis[:p] = kept
        basis[p] = basis[size]
        t[:] = 0
        t[np.arange(p), np.arange(p)] = theta[:p]
        keep = p


@dataclass
class SweepRecord:
    control: float
    e0: float
    gap: float
    observables: dict = field(default_factory=dict)
    degenerate: bool = False
    error: Optional[str] = None


def solve_lowest(h: SparseOperator, k: int = 2, seed: int = 0, v0=None, tol: float = 1e-10) -> EigResult:
    """Dense for small operators, Lanczos otherwise."""
    if h.dim <= 400:
        r = dense_eig(h)
        return EigResult(r.energies[:k], r.vectors[:k], r.residuals[:k], r.iterations,
                         _degenerate(r.energies[:k]))
    return lanczos_ground(h, k=k, tol=tol, seed=seed, v0=v0)


def sweep(builder: Callable[[float], SparseOperator], grid: Sequence[float],
          observables: Optional[dict] = None, seed: int = 0, warm_start: bool = True,
          parallel: bool = False, k: int = 2, tol: float = 1e-10) -> list:
    """Ground energy, gap and observables at every grid value.

    ``builder(x)`` returns the Hamiltonian at control value ``x``;
    ``observables`` maps column names to callables of the ground StateVector.
    Sequential runs seed each Lanczos call with the previous ground state;
    parallel runs use independent seeds and are re-sorted by control value.
    Errors are recorded per point.
    """
    grid = [float(x) for x in grid]
    if not grid:
        raise DomainError("empty grid")
    observables = observables or {}

    def point(x, v0):
        try:
            h = builder(x)
            start = None
            if v0 is not None and len(v0) == h.dim:
                rng = np.random.default_rng(seed)
                start = v0 + 1e-2 * rng.standard_normal(h.dim) / math.sqrt(h.dim)
            r = solve_lowest(h, k=k, seed=seed, v0=start, tol=tol)
            obs = {}
            for name, fn in observables.items():
                obs[name] = fn(r.vectors[0])
            gap = r.gap
            return SweepRecord(x, float(r.energies[0]), gap, obs, r.degenerate), r.vectors[0].amplitudes
        except Exception as exc:  # recorded, not raised
            return SweepRecord(x, math.nan, math.nan, {}, False, f"{type(exc).__name__}: {exc}"), None

    if parallel:
        with ThreadPoolExecutor() as ex:
            out = list(ex.map(lambda x: point(x, None)[0], grid))
        return sorted(out, key=lambda r: r.control)
    records = []
    prev = None
    for x in grid:
        rec, vec = point(x, prev if warm_start else None)
        records.append(rec)
        if vec is not None:
            prev = vec
    return records
