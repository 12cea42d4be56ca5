"""String order across the confinement crossover on a five-plaquette ladder.

Sweeps g2_elec of the gauge-invariant link Hamiltonian at fixed magnetic
coupling and prints the ground-state 't Hooft string expectation at pi
together with the gap. Writes sweep.csv next to this script.
"""
import math
from pathlib import Path

from fluxqlm.formats import write_csv
from fluxqlm.lattice import build_ladder, middle_plaquette, thooft_path
from fluxqlm.model import build_h_qlm, gauge_basis
from fluxqlm.observe import expect_thooft
from fluxqlm.solver import sweep

geo = build_ladder(6)
basis = gauge_basis(geo)
string = thooft_path(geo, middle_plaquette(geo))
grid = [10 ** (k / 4) for k in range(-8, 9)]

recs = sweep(lambda g2: build_h_qlm(geo, basis, g2, 1.0), grid,
             {"thooft_pi": lambda psi: expect_thooft(psi, string, math.pi).real})

rows = []
for r in recs:
    print(f"g2_elec = {r.control:9.4g}  <Upsilon(pi)> = {r.observables['thooft_pi']:+.5f}  gap = {r.gap:.4g}")
    rows.append([r.control, r.e0, r.gap, r.observables["thooft_pi"]])
write_csv(Path(__file__).with_name("sweep.csv"), ["g2_elec", "e0", "gap", "thooft_pi"], rows)
