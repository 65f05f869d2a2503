"""Closed-form time evolution of displaced Gaussian states.

First moments follow the linear drift flow

    d/dt (q, p) = A (q, p) + forcing,
    A = [[-(gamma + theta2)/2,  (2 omega0 - theta1)/2],
         [-(2 omega0 + theta1)/2, -(gamma - theta2)/2]],

whose eigenvalues are -(gamma/2 +- i omega).  The diffusion coefficients never
enter the first moments.  Second moments are carried by (mu, nu, kappa) and
follow the closed forms in :func:`evolve_covariance`.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .gaussian import GaussianState, second_moments
from .model import (
    ModelParams,
    ParameterError,
    Regime,
    ThreeVector,
    cos_kernel,
    dot,
    ep_tolerance,
    renormalized_frequency,
    sinc_kernel,
    wedge,
)


class CovarianceError(ArithmeticError):
    """The closed-form covariance left the normalizable, positive region."""


class EPDegeneracyError(ParameterError):
    """The biorthogonal decomposition is singular at the exceptional point."""


def _is_critical(params: ModelParams) -> bool:
    return abs(params.omega_sq) <= ep_tolerance(params)


def _check_time(t):
    if np.any(np.asarray(t) < 0):
        raise ParameterError("time must be >= 0")


def drift_matrix(params: ModelParams) -> np.ndarray:
    """Real 2x2 drift matrix of the first-moment equations."""
    g, w0, t1, t2 = params.gamma, params.omega0, params.theta1, params.theta2
    return np.array([
        [-(g + t2) / 2, (2 * w0 - t1) / 2],
        [-(2 * w0 + t1) / 2, -(g - t2) / 2],
    ])


# --------------------------------------------------------------------- first moments

def flow_matrix(params: ModelParams, t):
    """Entries (G11, G12, G21, G22) of exp(t A); arrays when ``t`` is an array."""
    t = np.asarray(t, dtype=float)
    decay = np.exp(-params.gamma * t / 2)
    c = cos_kernel(params.omega_sq, t)
    s = sinc_kernel(params.omega_sq, t)
    w0, t1, t2 = params.omega0, params.theta1, params.theta2
    return (decay * (c - 0.5 * t2 * s), decay * 0.5 * (2 * w0 - t1) * s,
            -decay * 0.5 * (2 * w0 + t1) * s, decay * (c + 0.5 * t2 * s))


def _free_generic(params: ModelParams, q0, p0, t):
    w2 = params.omega_sq
    decay = np.exp(-params.gamma * np.asarray(t, dtype=float) / 2)
    c = cos_kernel(w2, t)
    s = sinc_kernel(w2, t)
    w0, t1, t2 = params.omega0, params.theta1, params.theta2
    qb = decay * (q0 * c - 0.5 * (t2 * q0 - (2 * w0 - t1) * p0) * s)
    pb = decay * (p0 * c - 0.5 * ((2 * w0 + t1) * q0 - t2 * p0) * s)
    return qb, pb


def _free_ep(params: ModelParams, q0, p0, t):
    t = np.asarray(t, dtype=float)
    decay = np.exp(-params.gamma * t / 2)
    w0, t1, t2 = params.omega0, params.theta1, params.theta2
    qb = decay * (q0 - 0.5 * (t2 * q0 - (2 * w0 - t1) * p0) * t)
    pb = decay * (p0 - 0.5 * ((2 * w0 + t1) * q0 - t2 * p0) * t)
    return qb, pb


def free_displacement(params: ModelParams, q0: float, p0: float, t, method: str = "auto"):
    """Mean position and momentum of an undriven, initially displaced state.

    ``method`` is ``"auto"`` (EP limit when omega**2 is within tolerance of
    zero), ``"generic"`` or ``"ep"``.  ``t`` may be an array.
    """
    _check_time(t)
    if method == "auto":
        method = "ep" if _is_critical(params) else "generic"
    if method == "generic":
        out = _free_generic(params, q0, p0, t)
    elif method == "ep":
        out = _free_ep(params, q0, p0, t)
    else:
        raise ValueError(f"unknown method {method!r}")
    return _maybe_scalar(out)


def _maybe_scalar(pair):
    a, b = pair
    if np.ndim(a) == 0:
        return float(a), float(b)
    return a, b


@dataclass(frozen=True)
class DriftMatrix:
    """Complex form -[[a, b], [b*, a*]] of the drift acting on (z, -z*)."""

    a: complex
    b: complex

    @classmethod
    def from_params(cls, params: ModelParams) -> "DriftMatrix":
        return cls(
            a=complex(params.gamma / 2, params.omega0),
            b=-0.5 * complex(params.theta2, params.theta1),
        )

    @property
    def gamma(self) -> float:
        return 2 * self.a.real

    @property
    def omega0(self) -> float:
        return self.a.imag

    @property
    def omega_sq(self) -> float:
        return self.omega0**2 - abs(self.b) ** 2

    def matrix(self) -> np.ndarray:
        a, b = self.a, self.b
        return -np.array([[a, b], [b.conjugate(), a.conjugate()]])

    def eigen(self):
        """Return (lam, V, U): eigenvalues gamma/2 +- i omega and biorthogonal right/left vectors.

        Columns of V are right eigenvectors of :meth:`matrix` for eigenvalue
        ``-lam``; columns of U are left eigenvectors, normalized so that
        ``U^dag V = 1``.
        """
        w2 = self.omega_sq
        tol = 1e-9 * max(self.omega0**2, self.gamma**2, 1.0)
        if abs(w2) <= tol:
            raise EPDegeneracyError("drift matrix is defective at omega = 0")
        w = cmath.sqrt(w2)
        a, b = self.a, self.b
        lam = np.array([self.gamma / 2 + 1j * w, self.gamma / 2 - 1j * w])
        V = np.empty((2, 2), dtype=complex)
        U = np.empty((2, 2), dtype=complex)
        for k, l in enumerate(lam):
            # either row of the eigen-equation gives the vector; take the better-conditioned one
            v = max((np.array([l - a.conjugate(), b.conjugate()]), np.array([b, l - a])),
                    key=lambda x: np.abs(x).max())
            lc = l.conjugate()
            u = max((np.array([lc - a, b.conjugate()]), np.array([b, lc - a.conjugate()])),
                    key=lambda x: np.abs(x).max())
            root = cmath.sqrt(np.vdot(u, v))
            V[:, k] = v / root
            U[:, k] = u / root.conjugate()
        return lam, V, U


def drift_exponential(d: DriftMatrix, t: float, z: complex) -> complex:
    """Displacement parameter zbar(t) reached from z by the undriven flow.

    Evaluated through the biorthogonal eigen-decomposition of the drift; raises
    :class:`EPDegeneracyError` at the exceptional point.
    """
    _check_time(t)
    lam, V, U = d.eigen()
    vec = np.array([z, -np.conjugate(z)])
    out = V @ (np.exp(-lam * t) * (U.conj().T @ vec))
    return complex(out[0])


def zbar_closed_form(params: ModelParams, t: float, z: complex) -> complex:
    """Same quantity as :func:`drift_exponential`, written out in terms of theta."""
    w = cmath.sqrt(params.omega_sq)
    if abs(params.omega_sq) <= ep_tolerance(params):
        raise EPDegeneracyError("closed form has 1/omega at the exceptional point")
    lp = params.gamma / 2 + 1j * w
    lm = params.gamma / 2 - 1j * w
    th0, c = params.theta0, complex(params.theta1, -params.theta2)
    zc = np.conjugate(z)
    return complex(
        cmath.exp(-lp * t) * ((2 * w + th0) * z + c * zc) / (4 * w)
        + cmath.exp(-lm * t) * ((2 * w - th0) * z - c * zc) / (4 * w)
    )


# --------------------------------------------------------------------- driving

@dataclass(frozen=True)
class DriveSpec:
    """Constant linear drive: coefficients (alpha_q, alpha_p) and the displacement they hold."""

    alpha_q: float
    alpha_p: float
    target_q: float
    target_p: float

    @property
    def alpha(self) -> complex:
        return complex(self.alpha_q, self.alpha_p) / math.sqrt(2)

    @property
    def force(self) -> tuple[float, float]:
        """Equivalent constant force (lambda_r, lambda_i)."""
        return -self.alpha_p / math.sqrt(2), self.alpha_q / math.sqrt(2)


def alpha_from_target(params: ModelParams, q: float, p: float) -> tuple[float, float]:
    g, w0, t1, t2 = params.gamma, params.omega0, params.theta1, params.theta2
    aq = 0.5 * (g + t2) * q - 0.5 * (2 * w0 - t1) * p
    ap = 0.5 * (2 * w0 + t1) * q + 0.5 * (g - t2) * p
    return aq, ap


def target_from_alpha(params: ModelParams, aq: float, ap: float) -> tuple[float, float]:
    g, w0, t1, t2 = params.gamma, params.omega0, params.theta1, params.theta2
    denom = g**2 + 4 * params.omega_sq
    if abs(denom) <= 1e-12 * max(g**2, w0**2, 1.0):
        raise ParameterError("drive cannot be inverted: gamma**2 + 4 omega**2 = 0")
    q = 2 / denom * ((g - t2) * aq + (2 * w0 - t1) * ap)
    p = 2 / denom * (-(2 * w0 + t1) * aq + (g + t2) * ap)
    return q, p


def drive_from_target(params: ModelParams, q: float, p: float) -> DriveSpec:
    aq, ap = alpha_from_target(params, q, p)
    return DriveSpec(float(aq), float(ap), float(q), float(p))


def drive_from_alpha(params: ModelParams, aq: float, ap: float) -> DriveSpec:
    q, p = target_from_alpha(params, aq, ap)
    return DriveSpec(float(aq), float(ap), float(q), float(p))


def drive_from_force(params: ModelParams, lr: float, li: float) -> DriveSpec:
    """Constant force lambda = lr + i li holds the displacement solving A x + f = 0."""
    return drive_from_alpha(params, math.sqrt(2) * li, -math.sqrt(2) * lr)


def driven_displacement(params: ModelParams, drive: DriveSpec, q0: float, p0: float, t,
                        method: str = "auto"):
    """Mean (q, p) under a constant drive: the target plus the relaxing offset."""
    dq, dp = free_displacement(params, q0 - drive.target_q, p0 - drive.target_p, t, method=method)
    return _maybe_scalar((drive.target_q + np.asarray(dq), drive.target_p + np.asarray(dp)))


def ep_displacement(params: ModelParams, drive: DriveSpec, q0: float, p0: float, t):
    """Driven mean (q, p) on the exceptional-point manifold (t exp(-gamma t/2) terms)."""
    if not _is_critical(params):
        raise ParameterError(
            f"ep_displacement needs omega**2 ~ 0, got omega**2 = {params.omega_sq:.3e}")
    _check_time(t)
    t = np.asarray(t, dtype=float)
    q, p = drive.target_q, drive.target_p
    w0, t1, t2 = params.omega0, params.theta1, params.theta2
    decay = np.exp(-params.gamma * t / 2)
    qb, pb = _free_ep(params, q0, p0, t)
    qe = qb + (1 - decay) * q + 0.5 * t * decay * (t2 * q - (2 * w0 - t1) * p)
    pe = pb + (1 - decay) * p + 0.5 * t * decay * ((2 * w0 + t1) * q - t2 * p)
    return _maybe_scalar((qe, pe))


# --------------------------------------------------------------------- second moments

@dataclass(frozen=True)
class CovarianceSolution:
    mu_t: float
    nu_t: float
    kappa_t: float
    R_t: float
    g_t: ThreeVector

    def state(self, q: float = 0.0, p: float = 0.0) -> GaussianState:
        return GaussianState(float(self.mu_t), float(self.nu_t), float(self.kappa_t), q, p)

    def moments(self):
        """(sxx, spp, sxp), elementwise when the solution holds arrays."""
        mu, nu, ka = (np.asarray(v) for v in (self.mu_t, self.nu_t, self.kappa_t))
        d2 = 4 * mu * (mu + nu) + ka**2
        return 1 / (4 * mu), d2 / (4 * mu), -ka / (4 * mu)


def _phi(v: ThreeVector, d0: float, kappa0: float):
    return 0.5 * (1 + d0) * v.c0 + 0.5 * (1 - d0) * v.c1 + kappa0 * v.c2


def _g_vector(params: ModelParams, t, c2, s2, k2) -> ThreeVector:
    g = params.gamma
    w2 = params.omega_sq
    th, eta = params.theta, params.eta
    e = np.exp(-g * t)
    denom = g**2 + 4 * w2
    if denom == 0:
        raise ParameterError("gamma**2 + 4 omega**2 = 0: no bounded solution")
    f_eta = -g + e * (g * c2 - 4 * w2 * s2)
    f_wedge = 1 - e * (c2 + g * s2)
    if g == 0:
        f_par = t - s2
    else:
        f_par = (1 - e * (1 + g * s2 + g * g * k2)) / g
    return (eta * f_eta + wedge(th, eta) * f_wedge + th * (dot(eta, th) * f_par)) * (1 / denom)


def _g_vector_ep(params: ModelParams, t) -> ThreeVector:
    g = params.gamma
    if g == 0:
        raise ParameterError("critical solution needs gamma > 0")
    th, eta = params.theta, params.eta
    e = np.exp(-g * t)
    return (eta * (-(1 - e) / g)
            + wedge(th, eta) * ((1 - e * (1 + g * t)) / g**2)
            + th * (dot(th, eta) * (1 - e * (1 + g * t + 0.5 * (g * t) ** 2)) / g**3))


def _assemble(params, s0, t, g_vec, c2, s2, k2) -> CovarianceSolution:
    th = params.theta
    mu0, nu0, k0 = s0.mu, s0.nu, s0.kappa
    d0 = s0.delta_sq
    g = params.gamma
    e = np.exp(-g * t)
    phi_th = _phi(th, d0, k0)
    R = 2 * mu0 * (g_vec.c0 - g_vec.c1) + e * (
        c2 - (th.c2 + k0 * (th.c0 - th.c1)) * s2 + (th.c0 - th.c1) * phi_th * k2)
    nu_num = ((mu0 + nu0) * np.exp(-2 * g * t) - mu0 * (1 + dot(g_vec, g_vec))
              + e * (_phi(g_vec, d0, k0) * c2 + _phi(wedge(th, g_vec), d0, k0) * s2
                     - dot(th, g_vec) * phi_th * k2))
    ka_num = -2 * mu0 * g_vec.c2 + e * (
        k0 * c2 + 0.5 * ((1 - d0) * th.c0 + (1 + d0) * th.c1) * s2 - th.c2 * phi_th * k2)
    if np.any(np.asarray(R) <= 0):
        raise CovarianceError("R(t) <= 0: state is not normalizable")
    nu = nu_num / R
    nu = _clamp_nu(nu)
    return CovarianceSolution(mu_t=mu0 / R, nu_t=nu, kappa_t=ka_num / R, R_t=R, g_t=g_vec)


def _clamp_nu(nu):
    arr = np.asarray(nu, dtype=float)
    if np.any(arr < -1e-9):
        raise CovarianceError(f"nu(t) = {arr.min():.3e} < 0: state lost positivity")
    arr = np.where(arr < 0, 0.0, arr)
    return float(arr) if arr.ndim == 0 else arr


def evolve_covariance(params: ModelParams, s0: GaussianState, t, method: str = "auto") -> CovarianceSolution:
    """Gaussian parameters (mu, nu, kappa) at time t for an undriven or driven state.

    Displacement does not enter; the first moments of ``s0`` are ignored.
    ``method`` selects the generic closed form (``"generic"``), its omega -> 0
    limit (``"ep"``) or picks by the EP tolerance (``"auto"``).
    """
    _check_time(t)
    t = np.asarray(t, dtype=float)
    if method == "auto":
        method = "ep" if _is_critical(params) else "generic"
    if method == "generic":
        w2 = params.omega_sq
        c2 = cos_kernel(w2, 2 * t)
        s2 = 0.5 * sinc_kernel(w2, 2 * t)
        k2 = 0.5 * sinc_kernel(w2, t) ** 2
        g_vec = _g_vector(params, t, c2, s2, k2)
    elif method == "ep":
        c2, s2, k2 = np.ones_like(t), t, 0.5 * t * t
        g_vec = _g_vector_ep(params, t)
    else:
        raise ValueError(f"unknown method {method!r}")
    sol = _assemble(params, s0, t, g_vec, c2, s2, k2)
    if t.ndim == 0:
        sol = CovarianceSolution(float(sol.mu_t), float(sol.nu_t), float(sol.kappa_t),
                                 float(sol.R_t), ThreeVector(*(float(c) for c in sol.g_t)))
    return sol


def stationary_gamma_vector(params: ModelParams) -> ThreeVector:
    g = params.gamma
    th, eta = params.theta, params.eta
    return (eta * (-g) + th * (dot(eta, th) / g) + wedge(th, eta)) * (1 / (g**2 + 4 * params.omega_sq))


def stationary_state(params: ModelParams, drive: DriveSpec | None = None) -> GaussianState:
    """Long-time Gaussian state; centred on the drive target when a drive is given."""
    info = renormalized_frequency(params)
    if params.gamma <= 0 or info.regime is Regime.UNSTABLE:
        raise ParameterError(f"no stationary state in the {info.regime.value} regime")
    G = stationary_gamma_vector(params)
    denom = G.c0 - G.c1
    if denom <= 0:
        raise CovarianceError("Gamma0 - Gamma1 <= 0: stationary state not normalizable")
    nu = _clamp_nu((-dot(G, G) - 1) / (2 * denom))
    q, p = (drive.target_q, drive.target_p) if drive is not None else (0.0, 0.0)
    return GaussianState(mu=1 / (2 * denom), nu=nu, kappa=-G.c2 / denom, q=q, p=p)


def trajectory_rows(params: ModelParams, s0: GaussianState, times, drive: DriveSpec | None = None,
                    first_moments=None):
    """Columns t, q, p, mu, nu, kappa, sigma_xx, sigma_pp, sigma_xp, R as a 2D array.

    ``first_moments`` may supply precomputed (q, p) arrays (e.g. from a
    time-dependent force); otherwise the constant-drive closed form is used.
    """
    times = np.asarray(times, dtype=float)
    if first_moments is None:
        if drive is None:
            q, p = free_displacement(params, s0.q, s0.p, times)
        else:
            q, p = driven_displacement(params, drive, s0.q, s0.p, times)
    else:
        q, p = first_moments
    sol = evolve_covariance(params, s0, times)
    sxx, spp, sxp = sol.moments()
    cols = [times, q, p, sol.mu_t, sol.nu_t, sol.kappa_t, sxx, spp, sxp, sol.R_t]
    return np.column_stack([np.broadcast_to(np.asarray(c, dtype=float), times.shape) for c in cols])


__all__ = [
    "CovarianceError", "CovarianceSolution", "DriftMatrix", "DriveSpec", "EPDegeneracyError",
    "alpha_from_target", "drift_exponential", "drift_matrix", "drive_from_alpha",
    "drive_from_force", "drive_from_target", "driven_displacement", "ep_displacement",
    "evolve_covariance", "flow_matrix", "free_displacement", "second_moments", "stationary_gamma_vector",
    "stationary_state", "target_from_alpha", "trajectory_rows", "zbar_closed_form",
]
