import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st

from floquet_ep import floquet, linalg, model
from floquet_ep.errors import (
    DegenerateInput,
    InsufficientData,
    NotResonant,
    SingularMatrix,
)
from floquet_ep.propagate import evolve, monodromy


@pytest.mark.parametrize(
    "lam,omega,expect",
    [(1.0, 0.25, 0.0), (0.0, 0.7, 0.0), (1.0, 2 / 7, -1 / 7), (-1.0, 2 / 7, -1 / 7),
     (1.0, -2 / 7, -1 / 7), (0.15, 0.3, -0.15), (-0.15, 0.3, -0.15)],
)
def test_fold_values(lam, omega, expect):
    assert floquet.fold(lam, omega) == pytest.approx(expect, abs=1e-12)


@given(st.floats(-50, 50), st.floats(0.05, 5), st.booleans())
def test_fold_range_and_shift(lam, w, neg):
    omega = -w if neg else w
    r = floquet.fold(lam, omega)
    assert -w / 2 - 1e-12 <= r < w / 2
    s = (lam - r) / w
    assert abs(s - round(s)) < 1e-8


def test_quasi_energies_undriven():
    hh = model.PeriodicHamiltonian(model.longhi3_matrices(1.0)[0], (), 0.3)
    spec = floquet.quasi_energies(monodromy(hh), 0.3)
    np.testing.assert_allclose(spec.quasi_energies.real, [-0.1, 0, 0.1], atol=1e-8)
    assert spec.max_imag < 1e-8
    assert not spec.ep_flag


def test_quasi_energies_reproduce_multipliers():
    h = model.preset("longhi3", 0.3)
    M = monodromy(h)
    spec = floquet.quasi_energies(M, h.omega)
    np.testing.assert_allclose(np.exp(-1j * spec.quasi_energies * h.period), spec.multipliers, atol=1e-10)
    for mu in spec.quasi_energies:
        assert -0.15 <= mu.real < 0.15


def test_quasi_energies_even_resonance_flags_ep():
    h = model.preset("longhi3", 0.25, Omega=1, R0=0.2)
    spec = floquet.quasi_energies(monodromy(h), h.omega)
    assert spec.defectivity < floquet.DEFECTIVITY_THRESHOLD
    assert spec.ep_flag


def test_quasi_energies_identity_not_flagged():
    spec = floquet.quasi_energies(np.eye(3), 0.5)
    np.testing.assert_allclose(spec.quasi_energies, 0, atol=1e-14)
    assert not spec.ep_flag


@pytest.mark.parametrize(
    "omega,subsets,orders",
    [(0.25, [(0, 1, 2)], [3]), (2 / 7, [(0, 2)], [2]), (0.26, [], []), (-0.25, [(0, 1, 2)], [3])],
)
def test_predict_ep_examples(omega, subsets, orders):
    rep = floquet.predict_ep([-1, 0, 1], omega)
    assert rep.subsets == subsets
    assert rep.orders == orders
    assert rep.dominant_cw == [s[0] for s in subsets]
    assert rep.dominant_ccw == [s[-1] for s in subsets]


def test_predict_ep_harmonics_and_degenerate():
    rep = floquet.predict_ep([-1, 0, 1], 2 / 7)
    assert rep.harmonic_table == {(0, 2): 7}
    with pytest.raises(DegenerateInput):
        floquet.predict_ep([0, 0, 1], 0.3)


@given(st.lists(st.integers(-6, 6), min_size=2, max_size=5, unique=True), st.floats(0.1, 2))
def test_predict_ep_integer_ladder(ks, w):
    rep = floquet.predict_ep([k * w for k in ks], w)
    assert rep.subsets == [tuple(np.argsort(ks))]
    assert rep.has_ep


def test_eigenstate_hand_coefficients():
    h = model.preset("longhi3", 0.3, Omega=1, R0=0.2)
    st_ = floquet.build_floquet_state(h, 1, seed=[1, 0, -0.5])
    np.testing.assert_allclose(st_.coeffs[0], [1, 0, -0.5])
    x1 = -0.2 / 0.91
    np.testing.assert_allclose(st_.coeffs[1], [x1, -0.3 * x1, 0.5 * x1], atol=1e-14)


def test_eigenstate_seed_must_be_eigenvector():
    h = model.preset("longhi3", 0.3)
    with pytest.raises(ValueError):
        floquet.build_floquet_state(h, 1, seed=[1, 0, 0])


def test_eigenstate_undriven():
    h = model.preset("longhi3", 0.3, R0=0.0)
    st_ = floquet.build_floquet_state(h, 2)
    for l, c in st_.coeffs.items():
        if l:
            assert not np.any(c)
    ts = np.linspace(0, 10, 7)
    w = linalg.eig(h.h0).right_vectors[2]
    np.testing.assert_allclose(st_.evaluate(ts), np.exp(-1j * ts)[:, None] * w, atol=1e-14)


@pytest.mark.parametrize("omega", [0.3, -0.3, 0.23])
@pytest.mark.parametrize("n", [0, 1, 2])
def test_eigenstate_residual_and_periodicity(omega, n):
    h = model.preset("longhi3", omega, Omega=1, R0=0.2)
    st_ = floquet.build_floquet_state(h, n)
    ts = np.linspace(0, h.period, 20, endpoint=False) + 0.1
    assert st_.residual(h, ts) < 1e-8
    f0 = st_.evaluate(ts)
    fT = st_.evaluate(ts + h.period)
    np.testing.assert_allclose(fT, f0 * np.exp(-1j * st_.mu * h.period), atol=1e-8 * np.abs(f0).max())


def test_eigenstate_matches_monodromy_spectrum():
    h = model.preset("longhi3", 0.3, Omega=1, R0=0.2)
    spec = floquet.quasi_energies(monodromy(h), h.omega)
    for n in range(3):
        mu = floquet.build_floquet_state(h, n).mu
        assert np.min(np.abs(spec.quasi_energies - mu)) < 1e-6


@pytest.mark.parametrize(
    "omega,ok,bad",
    [(0.25, [0], [1, 2]), (-0.25, [2], [0, 1]), (2 / 7, [0, 1], [2]), (-2 / 7, [1, 2], [0])],
)
def test_direction_asymmetry(omega, ok, bad):
    h = model.preset("longhi3", omega, Omega=1, R0=0.3)
    for n in ok:
        floquet.build_floquet_state(h, n)
    for n in bad:
        with pytest.raises(SingularMatrix):
            floquet.build_floquet_state(h, n)


@pytest.mark.parametrize("name", ["longhi3", "sqrt2"])
def test_reality_off_resonance(name):
    for w in [0.21, 0.27, 0.33]:
        h = model.preset(name, w, Omega=1, R0=0.3)
        spec = floquet.quasi_energies(monodromy(h), w)
        assert spec.max_imag < 1e-6


def test_completeness_off_resonance(rng):
    h = model.preset("longhi3", 0.27, Omega=1, R0=0.2)
    M = monodromy(h)
    spec = floquet.quasi_energies(M, h.omega)
    a0 = rng.normal(size=3) + 1j * rng.normal(size=3)
    Q = spec.floquet_vectors.T
    c = np.linalg.solve(Q, a0)
    resum = Q @ (c * spec.multipliers)
    aT = evolve(h, a0, (0, h.period)).final
    assert np.linalg.norm(resum - aT) < 1e-8 * np.linalg.norm(aT)


@pytest.fixture(scope="module")
def odd_state():
    h = model.preset("longhi3", -2 / 7, Omega=1, R0=0.3)
    return h, floquet.build_generalized_state(h, 0, 2)


def test_generalized_state_residual(odd_state):
    h, st_ = odd_state
    assert st_.gamma is not None and abs(st_.gamma) > 0
    ts = np.linspace(0, 3 * h.period, 61)
    assert st_.residual(h, ts) < 1e-8
    assert abs(st_.solvability) < 1e-10
    assert st_.mu == pytest.approx(floquet.fold(1.0, h.omega))


def test_generalized_state_mirrors_for_cw():
    h = model.preset("longhi3", 2 / 7, Omega=1, R0=0.3)
    st_ = floquet.build_generalized_state(h, 0, 2)
    assert st_.energy == pytest.approx(-1.0)
    assert st_.residual(h, np.linspace(0, 3 * h.period, 31)) < 1e-8


def test_generalized_state_undriven_gamma_zero():
    h = model.preset("longhi3", -2 / 7, Omega=1, R0=0.0)
    st_ = floquet.build_generalized_state(h, 0, 2)
    assert st_.gamma == 0


def test_generalized_state_gamma_vanishes_with_drive():
    g = [abs(floquet.build_generalized_state(model.preset("longhi3", -2 / 7, R0=r), 0, 2).gamma)
         for r in (0.3, 0.15, 0.075)]
    assert g[0] > g[1] > g[2]


def test_generalized_state_not_resonant():
    h = model.preset("longhi3", -0.26, R0=0.3)
    with pytest.raises(NotResonant):
        floquet.build_generalized_state(h, 0, 2)


def test_beta_coeffs():
    b = floquet.beta_coeffs(4)
    assert b[(0, 0)] == 1
    assert b[(1, 1)] == 1j
    assert b[(2, 2)] == -2
    for n in range(5):
        for k in range(n + 1):
            assert b[(n, k)] == 1j**k * math.factorial(n) / math.factorial(n - k)
    with pytest.raises(OverflowError):
        floquet.beta_coeffs(13)


def test_secular_exponent_synthetic():
    t = np.arange(1, 41) * 2.0
    assert floquet.secular_exponent(list(zip(t, t**2))) == pytest.approx(2)
    assert abs(floquet.secular_exponent(list(zip(t, 3 + 0.01 * np.sin(t))))) < 0.1
    with pytest.raises(InsufficientData):
        floquet.secular_exponent(list(zip(t[:5], t[:5])))
    with pytest.raises(InsufficientData):
        floquet.secular_exponent(list(zip(t, -t)))


@pytest.mark.parametrize("s", [1.0, 0.05, 20.0])
def test_jordan_chain_known_block(s, rng):
    omega = 0.4
    T = 2 * np.pi / omega
    mu = 0.05
    J = np.array([[mu, s, 0], [0, mu, 0], [0, 0, -0.12]], dtype=complex)
    V = np.eye(3) + 0.3 * (rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
    R = V @ J @ np.linalg.inv(V)
    M = scipy.linalg.expm(-1j * R * T)
    np.testing.assert_allclose(floquet.floquet_generator(M, omega), R, atol=1e-9)
    ch = floquet.jordan_chain(M, omega)
    assert ch.mu == pytest.approx(mu, abs=1e-6)
    assert np.linalg.norm(ch.q) == pytest.approx(1)
    np.testing.assert_allclose((R - ch.mu * np.eye(3)) @ ch.Q, ch.q, atol=1e-6 * max(1, 1 / s))
    if np.allclose(V, np.eye(3)):
        assert ch.ratio == pytest.approx(1 / s)


def test_jordan_chain_ratio_plain_block():
    omega = 0.5
    T = 2 * np.pi / omega
    R = np.array([[0.0, 4.0], [0.0, 0.0]], dtype=complex)
    ch = floquet.jordan_chain(scipy.linalg.expm(-1j * R * T), omega)
    assert ch.ratio == pytest.approx(0.25, rel=1e-6)
