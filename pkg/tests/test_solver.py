import math

import numpy as np
import pytest
import scipy.sparse as sp

from fluxqlm.errors import DomainError, NumericError
from fluxqlm.lattice import build_ladder, middle_plaquette, thooft_path
from fluxqlm.model import SparseOperator, build_h_eff, build_h_qlm, full_basis, gauge_basis
from fluxqlm.observe import expect_thooft
from fluxqlm.solver import DENSE_MAX_DIM, dense_eig, lanczos_ground, solve_lowest, sweep


def diag_op(values, basis=None):
    values = np.asarray(values, dtype=float)
    if basis is None:
        basis = full_basis(int(round(math.log(len(values), 3))))
    return SparseOperator(sp.diags(values).tocsr(), basis)


def test_dense_single_plaquette():
    g = build_ladder(2)
    r = dense_eig(build_h_qlm(g, "gauge_sector", 0.0, 1.0))
    assert r.energies == pytest.approx([-4 * math.sqrt(2), 0, 4 * math.sqrt(2)], abs=1e-12)


def test_dense_diagonal_and_identity():
    vals = np.array([3.0, -1.0, 2.0, 0.5, 7.0, 1.0, -2.0, 4.0, 0.0])
    assert np.array_equal(dense_eig(diag_op(vals)).energies, np.sort(vals))
    b = gauge_basis(build_ladder(3))
    ident = SparseOperator(sp.identity(5, format="csr"), type(b)(b.n_links, b.words[:5], b.codes[:5], "sector"))
    assert np.array_equal(dense_eig(ident).energies, np.ones(5))


def test_dense_cap():
    b = full_basis(8)
    assert b.dim > DENSE_MAX_DIM
    with pytest.raises(DomainError):
        dense_eig(SparseOperator(sp.identity(b.dim, format="csr"), b))


def test_lanczos_matches_dense():
    g = build_ladder(3)
    h = build_h_eff(g, 1.0, 75.0, 1.0)
    ref = dense_eig(h).energies[0]
    r = lanczos_ground(h, k=1)
    assert abs(r.energies[0] - ref) < 1e-10
    assert r.energies[0] >= ref - 1e-9


def test_lanczos_larger_sector_against_dense():
    g = build_ladder(6)
    h = build_h_eff(g, 0.3, 75.0, 1.0)
    ref = dense_eig(h).energies[:2]
    r = lanczos_ground(h, k=2, seed=3)
    assert np.allclose(r.energies, ref, atol=1e-10)
    assert np.all(r.energies >= ref - 1e-9)


def test_lanczos_diagonal_and_determinism():
    vals = np.random.default_rng(1).standard_normal(243)
    r = lanczos_ground(diag_op(vals), k=1)
    assert r.energies[0] == pytest.approx(vals.min(), abs=1e-10)
    h = build_h_eff(build_ladder(5), 0.2, 75.0, 1.0)
    a = lanczos_ground(h, k=2, seed=7)
    b = lanczos_ground(h, k=2, seed=7)
    assert np.array_equal(a.energies, b.energies)


def test_lanczos_non_convergence_reports_history():
    h = build_h_eff(build_ladder(6), 0.3, 75.0, 1.0)
    with pytest.raises(NumericError, match="Ritz history"):
        lanczos_ground(h, k=1, max_iter=5, krylov_dim=5)


def test_lanczos_rejects_bad_k():
    with pytest.raises(DomainError):
        lanczos_ground(diag_op(np.arange(9.0)), k=0)


def test_sweep_confinement_trend():
    g = build_ladder(5)
    b = gauge_basis(g)
    path = thooft_path(g, middle_plaquette(g), "uniform")
    grid = np.geomspace(0.01, 10, 12)
    recs = sweep(lambda x: build_h_qlm(g, b, x, 75.0 / 2.0), grid,
                 {"ups": lambda psi: expect_thooft(psi, path, math.pi).real})
    ups = [r.observables["ups"] for r in recs]
    assert all(y >= x - 1e-9 for x, y in zip(ups, ups[1:]))
    assert ups[-1] > 0.9 and ups[-1] >= 0.5
    assert all(r.gap > 0 for r in recs)


def test_sweep_records_errors_and_empty_observables():
    g = build_ladder(3)

    def builder(x):
        if x > 1:
            raise NumericError("boom")
        return build_h_eff(g, x, 75.0, 1.0)

    recs = sweep(builder, [0.5, 2.0, 0.7])
    assert recs[0].observables == {} and recs[0].error is None
    assert recs[1].error.startswith("NumericError") and math.isnan(recs[1].e0)
    assert recs[2].error is None
    with pytest.raises(DomainError):
        sweep(builder, [])


def test_sweep_parallel_matches_sequential():
    g = build_ladder(4)
    grid = [0.1, 0.5, 1.0, 2.0]
    a = sweep(lambda x: build_h_eff(g, x, 75.0, 1.0), grid)
    b = sweep(lambda x: build_h_eff(g, x, 75.0, 1.0), grid, parallel=True)
    assert [r.control for r in b] == grid
    assert np.allclose([r.e0 for r in a], [r.e0 for r in b], atol=1e-10)


def test_large_coupling_gap_law():
    g = build_ladder(4)
    b = gauge_basis(g)
    for ge in (10.0, 30.0):
        r = dense_eig(build_h_qlm(g, b, ge, 1000.0 / ge))
        assert r.gap / ge == pytest.approx(4.0, rel=0.25)


def test_minimum_gap_law():
    r = dense_eig(build_h_eff(build_ladder(4), 0.0, 75.0, 1.0))
    assert r.gap == pytest.approx(8 / 75.0, rel=0.4)


def test_solve_lowest_flags_degeneracy():
    r = solve_lowest(diag_op([1.0, 1.0, 2.0, 3, 4, 5, 6, 7, 8]), k=2)
    assert r.degenerate
