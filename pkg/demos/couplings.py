"""Effective lattice couplings of the strong-coupling circuit preset.

Prints Delta, U, V, J, the ratios that set the gauge-theory parameters and
the decoherence budget implied by a 1 ms ancilla T1 at E^a_J = 40 GHz.
"""
from fluxqlm.network import decoherence_budget, derive_couplings, strong_coupling_preset

net = strong_coupling_preset()
cs = derive_couplings(net)
print(f"Delta = {cs.delta:.6g}  U = {cs.u:.6g}  V = {cs.v:.6g}  J = {cs.j:.6g}  (units of E^a_J)")
print(f"g2_elec = {cs.g2_elec:.4g}   1/g2_mag = {cs.g2_mag_inv:.4g}   product = {cs.product:.4g}")
for f in cs.flags:
    print("flag:", f)

b = decoherence_budget(cs, e_j_hz=40e9, t1_ancilla=1e-3)
print(f"T_sim = {b.t_sim * 1e6:.4g} us, ancilla error {b.ancilla_error:.3g}, links within budget {b.max_links}")
