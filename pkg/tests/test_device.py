import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fluxqlm.device import (DeviceParams, charge_operator, ho_matrix, params_for_sigma, phi_operator,
                            qutrit_states, spectrum, tb_charge_element, tb_hj_element, tb_quantities)
from fluxqlm.errors import DegeneracyError, DomainError
from fluxqlm.network import strong_coupling_preset

LINK = DeviceParams(0.06, 0.2, 0.003 + 2 * 0.0002)
ANCILLA = DeviceParams(0.2, 1.0, 0.01 + 4 * 0.0002, math.pi)


def _josephson_oracle(p, dim, big=400):
    """-E_J cos(phi + phi_off) by eigen-decomposing phi in a much larger Fock space."""
    a = np.diag(np.sqrt(np.arange(1, big)), 1)
    phi = p.beta * (a + a.T) / math.sqrt(2)
    w, v = np.linalg.eigh(phi)
    c = (v * np.cos(w + p.phi_off)) @ v.T
    return -p.e_j * c[:dim, :dim]


@pytest.mark.parametrize("phi_off", [0.0, math.pi, 0.7])
def test_ho_matrix_matches_operator_oracle(phi_off):
    p = DeviceParams(0.06, 0.2, 0.0034, phi_off)
    dim = 40
    h = ho_matrix(p, dim)
    osc = np.diag(p.hbar_omega * (np.arange(dim) + 0.5))
    assert np.max(np.abs(h - osc - _josephson_oracle(p, dim))) < 1e-12


def test_ho_matrix_pure_oscillator():
    p = DeviceParams(0.06, 0.0, 0.003)
    h = ho_matrix(p, 10)
    assert np.allclose(h, np.diag(math.sqrt(8 * 0.003 * 0.06) * (np.arange(10) + 0.5)), atol=1e-15)


def test_ho_matrix_elements():
    p = DeviceParams(0.06, 0.2, 0.003)
    h = ho_matrix(p, 20)
    assert h[0, 1] == 0.0
    assert h[0, 0] - 0.5 * p.hbar_omega == pytest.approx(-p.e_j * math.exp(-p.beta ** 2 / 4), rel=1e-13)


def test_ho_matrix_parity_selection():
    h0 = ho_matrix(DeviceParams(0.06, 0.2, 0.003, 0.0), 30)
    # phi_off = pi/2 isolates the sine table: -E_J cos(phi + pi/2) = E_J sin(phi)
    p = DeviceParams(0.06, 0.2, 0.003, math.pi / 2)
    sine = ho_matrix(p, 30) - np.diag(p.hbar_omega * (np.arange(30) + 0.5))
    i, j = np.indices(h0.shape)
    odd = (i + j) % 2 == 1
    assert np.all(h0[odd] == 0.0)
    assert np.max(np.abs(sine[~odd])) < 1e-15


def test_ho_matrix_symmetric_and_dim_guard():
    h = ho_matrix(LINK, 60)
    assert np.array_equal(h, h.T)
    with pytest.raises(DomainError):
        ho_matrix(LINK, 2)


def test_spectrum_pure_oscillator():
    p = DeviceParams(0.06, 0.0, 0.003)
    s = spectrum(p, 30)
    assert np.allclose(s.energies, p.hbar_omega * (np.arange(30) + 0.5), rtol=1e-12)


def test_spectrum_orthonormal_sorted():
    s = spectrum(LINK, 80)
    assert np.all(np.diff(s.energies) >= 0)
    assert np.max(np.abs(s.vectors.T @ s.vectors - np.eye(80))) < 1e-10


def test_doublet_splitting_matches_quoted_value():
    q = qutrit_states(spectrum(LINK, 160))
    assert abs(q.doublet_splitting / 0.0006 - 1) < 0.25


def test_d80_close_to_converged_link():
    # the quoted accuracy claim, checked against a much larger basis; the ancilla
    # needs more levels (see the variational test below), which is why the
    # coupling derivation grows the basis adaptively
    for p in (LINK,):
        e80 = spectrum(p, 80).energies[:5]
        e300 = spectrum(p, 300).energies[:5]
        assert np.max(np.abs(e80 - e300)) < 1e-6


@pytest.mark.xfail(strict=True, reason="D=60 and D=80 differ by 1.4e-6 on the link preset (bound 1e-6)")
def test_d60_vs_d80_within_1e6():
    e60 = spectrum(LINK, 60).energies[:5]
    e80 = spectrum(LINK, 80).energies[:5]
    assert np.max(np.abs(e60 - e80)) < 1e-6


def test_variational_monotone():
    for p in (LINK, ANCILLA):
        for d in (40, 60, 80, 100):
            assert spectrum(p, d).energies[0] >= spectrum(p, d + 20).energies[0] - 1e-13


@pytest.mark.xfail(strict=True, reason="D=80 -> D=100 ground shift is 1.5e-8 (link) and 6.9e-6 (ancilla) E_J")
def test_variational_gain_below_1e8_at_d80():
    for p in (LINK, ANCILLA):
        gain = spectrum(p, 80).energies[0] - spectrum(p, 100).energies[0]
        assert gain <= 1e-8 * p.e_j


def test_qutrit_symmetries():
    q = qutrit_states(spectrum(LINK, 120))
    ph = q.phi_elements
    assert abs(ph[0, 0]) < 1e-8
    assert ph[1, 1] == pytest.approx(-ph[2, 2], abs=1e-8)
    assert ph[1, 1] > 0
    n = q.charge_elements
    assert np.allclose(n, n.conj().T, atol=1e-12)


def test_qutrit_flux_near_two_pi_in_tight_binding_regime():
    p = params_for_sigma(1.2, e_j=1.0, e_l=2e-3)
    q = qutrit_states(spectrum(p, 160))
    assert abs(q.phi_elements[1, 1] / (2 * math.pi) - 1) < 0.10


def test_qutrit_degeneracy_error():
    # a plain oscillator has evenly spaced levels: no isolated doublet
    with pytest.raises(DegeneracyError):
        qutrit_states(spectrum(DeviceParams(0.06, 0.0, 0.003), 30))


def test_operator_definitions():
    beta = 1.7
    phi, n = phi_operator(12, beta), charge_operator(12, beta)
    comm = phi @ n - n @ phi
    # [phi, n] = i away from the truncation edge
    assert np.allclose(np.diag(comm)[:-1], 1j, atol=1e-12)


def test_tight_binding_quoted_extremum():
    p = params_for_sigma(3.168)
    tb = tb_quantities(p)
    assert tb.sigma == pytest.approx(3.168, rel=1e-12)
    assert tb.hopping_t / p.e_j == pytest.approx(-0.877, rel=0.01)
    assert tb.band_gap / abs(tb.hopping_t) == pytest.approx(11.446, rel=0.01)


def test_tight_binding_is_local_extremum():
    ts = [tb_quantities(params_for_sigma(s)).hopping_t for s in (3.16, 3.168, 3.176)]
    assert ts[1] < ts[0] and ts[1] < ts[2]


def test_tight_binding_suppression():
    assert abs(tb_quantities(params_for_sigma(0.5)).hopping_t) < 1e-15


def test_tb_hj_element_formula():
    p = params_for_sigma(3.168)
    s2 = 3.168 ** 2
    assert tb_hj_element(0, 0, p) == pytest.approx(p.e_j * (s2 / 4 - math.exp(-s2 / 4)), rel=1e-14)
    # with cos(pi) = -1 the nearest-neighbour element reproduces the hopping t itself
    assert tb_hj_element(1, 0, p) == pytest.approx(tb_quantities(p).hopping_t, rel=1e-14)
    e1 = abs(tb_hj_element(1, 0, p))
    e2 = abs(tb_hj_element(2, 0, p))
    assert e2 / e1 < math.exp(-3 * math.pi ** 2 / s2) * 10


def test_tb_charge_element():
    assert tb_charge_element(2, 2, 1.3) == 0
    v = tb_charge_element(1, 0, 3.168)
    assert v.real == 0 and v.imag == pytest.approx(0.1172, rel=0.01)


@given(st.integers(-4, 4), st.integers(-4, 4), st.floats(0.3, 5))
def test_tb_charge_element_hermitian(m1, m2, sigma):
    assert tb_charge_element(m1, m2, sigma) == pytest.approx(np.conj(tb_charge_element(m2, m1, sigma)))


@pytest.mark.xfail(strict=True, reason="exact <1|n|0> is ~50x the Wannier value at sigma <= 1")
def test_exact_vs_tight_binding_charge_element():
    p = params_for_sigma(1.0, e_j=1.0, e_l=2e-3)
    q = qutrit_states(spectrum(p, 160))
    assert abs(abs(q.charge_elements[1, 0]) / abs(tb_charge_element(1, 0, 1.0)) - 1) < 0.2


def test_device_param_validation():
    with pytest.raises(DomainError):
        DeviceParams(0.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        DeviceParams(1.0, -1.0, 1.0)
    assert not DeviceParams(1, 1, 1, 0.3).phi_off_supported
    assert strong_coupling_preset().link.phi_off_supported
