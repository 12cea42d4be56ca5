"""Ancilla-and-cavity measurement protocols applied to an exact ground state.

Compares the protocol estimates of the Wilson loop and the 't Hooft string
with direct expectation values, then prints the fidelity bounds of the two
cavity readout methods for a nine-spin string.
"""
import math

from fluxqlm.lattice import build_ladder, middle_plaquette, thooft_path, wilson_path
from fluxqlm.model import build_h_qlm, gauge_basis
from fluxqlm.observe import StateVector, expect_thooft, expect_wilson
from fluxqlm.readout import fidelity_gp, fidelity_sp, reference_rates, thooft_protocol, wilson_protocol
from fluxqlm.solver import solve_lowest

geo = build_ladder(4)
basis = gauge_basis(geo)
r = solve_lowest(build_h_qlm(geo, basis, 0.5, 1.0))
psi = r.vectors[0]

loop = wilson_path(geo, 0, 1, 1)
w = wilson_protocol(psi, loop)
print(f"Wilson loop: protocol {w.value:.6f}  direct {expect_wilson(psi, loop):.6f}")

string = thooft_path(geo, middle_plaquette(geo))
for method in ("geometric", "single_photon"):
    t = thooft_protocol(psi, string, math.pi, method=method)
    print(f"'t Hooft ({method}): protocol {t.value:.6f}  direct {expect_thooft(psi, string, math.pi):.6f}")

fp = reference_rates(n=9)
print(f"geometric-phase bound  F >= {fidelity_gp(fp, math.pi / 2, math.pi / 2):.5f}")
print(f"single-photon bound    F >= {fidelity_sp(fp, math.pi / 2):.5f}")
