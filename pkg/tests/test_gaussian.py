import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import roots_hermite

from gaussdrive.gaussian import (GaussianState, Grid2D, StateError, density_kernel, displace, from_moments,
                                 second_moments, wigner, wigner_grid, write_wigner_csv)

states = st.builds(GaussianState, st.floats(0.05, 3), st.floats(0, 3), st.floats(-3, 3),
                   st.floats(-4, 4), st.floats(-4, 4))


def test_second_moment_examples():
    assert second_moments(GaussianState(0.5)) == second_moments(GaussianState.vacuum())
    sm = second_moments(GaussianState(0.5))
    assert (sm.sxx, sm.spp, sm.sxp) == (0.5, 0.5, 0.0)
    sm = second_moments(GaussianState(0.5, 0.5))
    assert (sm.sxx, sm.spp, sm.sxp) == (0.5, 1.0, 0.0)


def test_mixed_moments_by_quadrature():
    # <x^2> and <p^2> of mu=nu=1/2 from the kernel: x^2 at r=0, p^2 = -d^2/dr^2 at r=0
    s = GaussianState(0.5, 0.5)
    x, w = roots_hermite(80)
    Q = x / math.sqrt(2 * s.mu)
    wq = w / math.sqrt(2 * s.mu) * np.exp(x**2)
    rho = density_kernel(s, Q, 0.0).real
    assert np.sum(wq * rho * Q**2) == pytest.approx(0.5, abs=1e-12)
    h = 1e-3
    d2 = (density_kernel(s, Q, h) - 2 * density_kernel(s, Q, 0.0) + density_kernel(s, Q, -h)) / h**2
    assert -np.sum(wq * d2).real == pytest.approx(1.0, abs=1e-6)


@given(states, st.floats(-3, 3), st.floats(-3, 3))
def test_displacement_keeps_second_moments(s, dq, dp):
    assert second_moments(displace(s, dq, dp)) == second_moments(s)


@given(states)
def test_uncertainty_identity(s):
    sm = second_moments(s)
    assert sm.det == pytest.approx((s.mu + s.nu) / (4 * s.mu), rel=1e-12)
    assert sm.det >= 0.25 - 1e-12


def test_pure_iff_nu_zero():
    assert GaussianState(0.3, 0.0, 1.0).is_pure
    assert not GaussianState(0.3, 0.1).is_pure
    assert second_moments(GaussianState(0.3, 0.0, 1.0)).det == pytest.approx(0.25, abs=1e-15)


@pytest.mark.parametrize("bad", [dict(mu=0.0), dict(mu=-1.0), dict(mu=1.0, nu=-1e-3), dict(mu=math.inf)])
def test_rejects_unphysical(bad):
    with pytest.raises(StateError):
        GaussianState(**bad)


@given(states)
def test_moment_round_trip(s):
    sm = second_moments(s)
    back = from_moments(sm.sxx, sm.spp, sm.sxp, s.q, s.p)
    for a, b in zip((back.mu, back.nu, back.kappa), (s.mu, s.nu, s.kappa)):
        assert a == pytest.approx(b, rel=1e-9, abs=1e-9)


@given(states)
def test_kernel_trace_and_hermiticity(s):
    x, w = roots_hermite(96)
    Q = s.q + x / math.sqrt(2 * s.mu)
    wq = w / math.sqrt(2 * s.mu) * np.exp(x**2)
    k0 = density_kernel(s, Q, 0.0)
    assert np.all(k0.imag == 0) and np.all(k0.real > 0)
    assert abs(np.sum(wq * k0.real) - 1) < 1e-10
    rng = np.random.default_rng(0)
    Qs, rs = rng.normal(size=20), rng.normal(size=20)
    assert np.allclose(density_kernel(s, Qs, -rs), np.conj(density_kernel(s, Qs, rs)), atol=1e-15)


def test_vacuum_kernel():
    Q, r = np.meshgrid(np.linspace(-3, 3, 13), np.linspace(-3, 3, 13))
    expect = np.exp(-Q**2 - r**2 / 4) / math.sqrt(math.pi)
    assert np.abs(density_kernel(GaussianState.vacuum(), Q, r) - expect).max() < 1e-15


@pytest.mark.parametrize("s", [GaussianState(0.5), GaussianState(0.3, 0.4, -0.8, 1.0, -2.0),
                               GaussianState(1.5, 0.1, 2.0, -0.5, 0.3)])
def test_wigner_normalization_and_peak(s):
    sm = second_moments(s)
    L = 12 * math.sqrt(max(sm.sxx, sm.spp))
    grid = Grid2D(s.q - L, s.q + L, 601, s.p - L, s.p + L, 601)
    QQ, PP, W = wigner_grid(s, grid)
    dq = QQ[1, 0] - QQ[0, 0]
    dp = PP[0, 1] - PP[0, 0]
    assert abs(W.sum() * dq * dp - 1) < 1e-6
    assert np.all(W >= 0)
    i, j = np.unravel_index(np.argmax(W), W.shape)
    assert abs(QQ[i, j] - s.q) <= dq and abs(PP[i, j] - s.p) <= dp
    assert wigner(s, s.q, s.p) >= W.max()


def test_wigner_matches_fourier_transform_of_kernel():
    s = GaussianState(0.4, 0.3, 0.7, 0.5, -0.2)
    r = np.linspace(-40, 40, 40001)
    dr = r[1] - r[0]
    for Q in np.linspace(-1, 2, 5):
        for P in np.linspace(-2, 1.5, 5):
            ft = np.sum(density_kernel(s, Q, r) * np.exp(-1j * P * r)).real * dr / (2 * math.pi)
            assert abs(ft - wigner(s, Q, P)) < 1e-8


def test_displace_identity_and_inverse():
    s = GaussianState(0.4, 0.3, 0.7, 0.5, -0.2)
    assert displace(s, 0, 0) == s
    back = displace(displace(s, 1.25, -0.75), -1.25, 0.75)
    assert (back.mu, back.nu, back.kappa) == (s.mu, s.nu, s.kappa)
    assert back.q == pytest.approx(s.q, abs=1e-15) and back.p == pytest.approx(s.p, abs=1e-15)
    assert displace(s, 0.3, 0.0).q == s.q + 0.3


def test_wigner_csv_layout(tmp_path):
    grid = Grid2D(-1, 1, 3, -2, 2, 2)
    path = tmp_path / "w.csv"
    write_wigner_csv(path, GaussianState.vacuum(), grid)
    lines = path.read_text().splitlines()
    assert lines[0] == "Q,P,W"
    rows = [tuple(map(float, ln.split(","))) for ln in lines[1:]]
    assert [(q, p) for q, p, _ in rows] == [(-1, -2), (-1, 2), (0, -2), (0, 2), (1, -2), (1, 2)]
    assert "-0," not in path.read_text()


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid2D(0, 1, 1, 0, 1, 3)
    with pytest.raises(ValueError):
        Grid2D(1, 0, 3, 0, 1, 3)


def test_state_dict_round_trip():
    s = GaussianState(0.4, 0.3, 0.7, 0.5, -0.2)
    assert GaussianState.from_dict(s.to_dict()) == s
    with pytest.raises(StateError):
        GaussianState.from_dict({"nu": 1})
