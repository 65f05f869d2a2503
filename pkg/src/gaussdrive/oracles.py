"""Numerical reference integrators used to cross-check the closed forms."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .driving import Heaviside, Impulse, Sampled
from .gaussian import GaussianState, from_moments, second_moments
from .model import ModelParams
from .propagator import drift_matrix

SQRT2 = math.sqrt(2.0)


def _segments(t_eval: np.ndarray, dt: float, extra: Sequence[float]):
    """Split [0, max t_eval] at every special time into runs of equal steps <= dt."""
    t_end = float(t_eval.max())
    cuts = np.unique(np.concatenate([[0.0, t_end], t_eval,
                                     [p for p in extra if 0.0 <= p <= t_end]]))
    segs = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        n = max(int(math.ceil((b - a) / dt - 1e-9)), 1)
        segs.append((float(a), float(b), n))
    return segs


def _breakpoints(force) -> list[float]:
    if isinstance(force, (Impulse, Heaviside)):
        return [force.a_time, force.b_time]
    if isinstance(force, Sampled):
        return list(force.times)
    return []


def rk4_first_moments(cases: Sequence[tuple[ModelParams, object]], q0, p0, t_eval,
                      dt: float = 1e-4) -> np.ndarray:
    """Classical RK4 for the first-moment equations of many (params, force) cases at once.

    The time axis is cut at every sample time, impulse time and force
    discontinuity, and each piece is covered by equal steps no longer than
    ``dt``.  Impulses are applied as exact state jumps on arrival.  Because the
    equations are linear, each RK4 step is written as x -> P x + u with P and
    the stage weights expanded in powers of h A; this is the same arithmetic
    as the four-stage form, only batched.
    Returns an array of shape (len(cases), len(t_eval), 2).
    """
    t_eval = np.asarray(t_eval, dtype=float)
    ncase = len(cases)
    A = np.stack([drift_matrix(p) for p, _ in cases])
    extra = [b for _, f in cases for b in _breakpoints(f)]
    segs = _segments(t_eval, dt, extra)

    jumps: dict[float, np.ndarray] = {}
    for k, (_, f) in enumerate(cases):
        if isinstance(f, Impulse):
            for tau, dq, dp in f.jumps():
                jumps.setdefault(tau, np.zeros((ncase, 2)))[k] += (dq, dp)

    def forcing(ts, left):
        out = np.zeros((ts.size, ncase, 2))
        cache = {}
        for k, (_, f) in enumerate(cases):
            if f is None:
                continue
            if id(f) not in cache:
                lam = f.value(ts, left=left)
                cache[id(f)] = (SQRT2 * lam.imag, -SQRT2 * lam.real)
            out[:, k, 0], out[:, k, 1] = cache[id(f)]
        return out

    eye = np.eye(2)
    x = np.empty((ncase, 2))
    x[:, 0] = q0
    x[:, 1] = p0
    out = np.full((ncase, t_eval.size, 2), np.nan)

    def settle(t_now):
        nonlocal x
        if t_now in jumps:
            x = x + jumps[t_now]
        hit = t_eval == t_now
        if np.any(hit):
            out[:, hit, :] = x[:, None, :]

    settle(0.0)
    for a, b, n in segs:
        h = (b - a) / n
        starts = a + h * np.arange(n)
        ends = np.append(starts[1:], b)
        f1 = forcing(starts, left=False)
        f2 = forcing(starts + h / 2, left=False)
        f3 = forcing(ends, left=True)
        B = h * A
        B2 = B @ B
        B3 = B2 @ B
        P = eye + B + B2 / 2 + B3 / 6 + (B3 @ B) / 24
        W1 = (eye + B + B2 / 2 + B3 / 4) / 6
        W2 = (4 * eye + 2 * B + B2 / 2) / 6
        u0 = h * (W1[:, 0, 0] * f1[..., 0] + W1[:, 0, 1] * f1[..., 1]
                  + W2[:, 0, 0] * f2[..., 0] + W2[:, 0, 1] * f2[..., 1] + f3[..., 0] / 6)
        u1 = h * (W1[:, 1, 0] * f1[..., 0] + W1[:, 1, 1] * f1[..., 1]
                  + W2[:, 1, 0] * f2[..., 0] + W2[:, 1, 1] * f2[..., 1] + f3[..., 1] / 6)
        p00, p01, p10, p11 = P[:, 0, 0], P[:, 0, 1], P[:, 1, 0], P[:, 1, 1]
        x0, x1 = x[:, 0].copy(), x[:, 1].copy()
        for j in range(n):
            x0, x1 = p00 * x0 + p01 * x1 + u0[j], p10 * x0 + p11 * x1 + u1[j]
        x = np.stack([x0, x1], axis=1)
        settle(b)
    return out


def diffusion_matrix(params: ModelParams) -> np.ndarray:
    e0, e1, e2 = params.eta0, params.eta1, params.eta2
    return np.array([[(e1 - e0) / 2, -e2 / 2], [-e2 / 2, -(e0 + e1) / 2]])


def covariance_ode(params: ModelParams, s0: GaussianState, t: float,
                   rtol: float = 1e-12, atol: float = 1e-14) -> GaussianState:
    """Integrate dSigma/dt = A Sigma + Sigma A^T + D and convert back to (mu, nu, kappa)."""
    A = drift_matrix(params)
    D = diffusion_matrix(params)
    S0 = second_moments(s0).as_matrix()
    if t == 0:
        return GaussianState(s0.mu, s0.nu, s0.kappa)

    def f(_, y):
        S = y.reshape(2, 2)
        return (A @ S + S @ A.T + D).ravel()

    sol = solve_ivp(f, (0.0, t), S0.ravel(), method="DOP853", rtol=rtol, atol=atol)
    S = sol.y[:, -1].reshape(2, 2)
    return from_moments(S[0, 0], S[1, 1], 0.5 * (S[0, 1] + S[1, 0]))
