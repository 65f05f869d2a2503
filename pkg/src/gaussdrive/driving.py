"""Time-dependent linear forcing and the resulting first-moment trajectories.

A force lambda(t) = lr(t) + i li(t) enters the first-moment equations as the
inhomogeneous term sqrt(2) * (li, -lr).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Union

import numpy as np

from .model import ModelParams, ParameterError, cos_kernel, sinc_kernel
from .propagator import (
    drive_from_force,
    driven_displacement,
    flow_matrix,
    free_displacement,
)

SQRT2 = math.sqrt(2.0)


class QuadratureError(ArithmeticError):
    def __init__(self, message: str, error_estimate: float):
        super().__init__(f"{message} (achieved error estimate {error_estimate:.3e})")
        self.error_estimate = error_estimate


# --------------------------------------------------------------------- force models

@dataclass(frozen=True)
class Constant:
    lr: float = 0.0
    li: float = 0.0
    kind = "constant"

    def value(self, t, left: bool = False):
        t = np.asarray(t, dtype=float)
        return np.full(t.shape, complex(self.lr, self.li))


@dataclass(frozen=True)
class Impulse:
    """lambda(t) = A delta(t - a_time) + i B delta(t - b_time)."""

    A: float = 0.0
    a_time: float = 0.0
    B: float = 0.0
    b_time: float = 0.0
    kind = "impulse"

    def __post_init__(self):
        _check_events(self)

    def value(self, t, left: bool = False):
        # Dirac terms are events, never sampled.
        t = np.asarray(t, dtype=float)
        return np.zeros(t.shape, dtype=complex)

    def jumps(self) -> list[tuple[float, float, float]]:
        """(time, dq, dp) state jumps."""
        out = []
        if self.A != 0:
            out.append((self.a_time, 0.0, -SQRT2 * self.A))
        if self.B != 0:
            out.append((self.b_time, SQRT2 * self.B, 0.0))
        return out


@dataclass(frozen=True)
class Heaviside:
    """lambda(t) = A H(t - a_time) + i B H(t - b_time), with H(0) = 1."""

    A: float = 0.0
    a_time: float = 0.0
    B: float = 0.0
    b_time: float = 0.0
    kind = "heaviside"

    def __post_init__(self):
        _check_events(self)

    def value(self, t, left: bool = False):
        t = np.asarray(t, dtype=float)
        if left:
            ha, hb = t > self.a_time, t > self.b_time
        else:
            ha, hb = t >= self.a_time, t >= self.b_time
        return self.A * ha + 1j * self.B * hb


@dataclass(frozen=True)
class Harmonic:
    """lambda(t) = R exp(i Omega t)."""

    R: float = 0.0
    Omega: float = 0.0
    kind = "harmonic"

    def value(self, t, left: bool = False):
        t = np.asarray(t, dtype=float)
        return self.R * np.exp(1j * self.Omega * t)


@dataclass(frozen=True)
class Sampled:
    """Piecewise-linear force through the given knots, zero outside them.

    ``value`` returns right limits (``left=True`` gives left limits), so the
    force is 0 at ``times[-1]`` itself.
    """

    times: tuple
    lr_values: tuple
    li_values: tuple
    kind = "sampled"
    _arr: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        ts = np.asarray(self.times, dtype=float)
        lr = np.asarray(self.lr_values, dtype=float)
        li = np.asarray(self.li_values, dtype=float)
        if ts.ndim != 1 or ts.size < 2:
            raise ParameterError("sampled force needs at least 2 knots")
        if lr.shape != ts.shape or li.shape != ts.shape:
            raise ParameterError("sampled force value lists must match the time grid")
        if np.any(np.diff(ts) <= 0):
            raise ParameterError("sampled force times must be strictly ascending")
        if not (np.all(np.isfinite(ts)) and np.all(np.isfinite(lr)) and np.all(np.isfinite(li))):
            raise ParameterError("sampled force values must be finite")
        object.__setattr__(self, "times", tuple(float(x) for x in ts))
        object.__setattr__(self, "lr_values", tuple(float(x) for x in lr))
        object.__setattr__(self, "li_values", tuple(float(x) for x in li))
        object.__setattr__(self, "_arr", (ts, lr, li))

    def value(self, t, left: bool = False):
        ts, lr, li = self._arr
        t = np.asarray(t, dtype=float)
        out = np.interp(t, ts, lr, left=0.0, right=0.0) + 1j * np.interp(t, ts, li, left=0.0, right=0.0)
        # one-sided limits at the ends of the support
        edge = ts[0] if left else ts[-1]
        return np.where(t == edge, 0.0, out)


ForceModel = Union[Constant, Impulse, Heaviside, Harmonic, Sampled]
_FORCE_TYPES = {cls.kind: cls for cls in (Constant, Impulse, Heaviside, Harmonic, Sampled)}


def _check_events(f):
    for name in ("A", "a_time", "B", "b_time"):
        if not math.isfinite(getattr(f, name)):
            raise ParameterError(f"{name} must be finite")
    if f.a_time < 0 or f.b_time < 0:
        raise ParameterError("event times must be >= 0")


def force_to_dict(force: ForceModel) -> dict:
    if isinstance(force, Sampled):
        return {"type": "sampled", "times": list(force.times),
                "lr_values": list(force.lr_values), "li_values": list(force.li_values)}
    data = {"type": force.kind}
    for name in force.__dataclass_fields__:
        data[name] = getattr(force, name)
    return data


def force_from_dict(data: Mapping) -> ForceModel:
    data = dict(data)
    kind = data.pop("type", None)
    if kind not in _FORCE_TYPES:
        raise ParameterError(f"unknown force type {kind!r}; expected one of {sorted(_FORCE_TYPES)}")
    cls = _FORCE_TYPES[kind]
    allowed = {n for n in cls.__dataclass_fields__ if not n.startswith("_")}
    unknown = set(data) - allowed
    if unknown:
        raise ParameterError(f"unknown keys for {kind} force: {sorted(unknown)}")
    if cls is Sampled:
        return Sampled(tuple(data["times"]), tuple(data["lr_values"]), tuple(data["li_values"]))
    return cls(**{k: float(v) for k, v in data.items()})


# --------------------------------------------------------------------- closed forms

def _apply_flow(params, s, x, y):
    g11, g12, g21, g22 = flow_matrix(params, s)
    return g11 * x + g12 * y, g21 * x + g22 * y


def impulse_trajectory(params: ModelParams, force: Impulse, q0: float, p0: float, t):
    """Free motion plus kicked responses gated by H(t - event), H(0) = 1."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ParameterError("time must be >= 0")
    q, p = free_displacement(params, q0, p0, t)
    q, p = np.asarray(q, dtype=float), np.asarray(p, dtype=float)
    for tau, dq, dp in force.jumps():
        gate = t >= tau
        s = np.where(gate, t - tau, 0.0)
        jq, jp = _apply_flow(params, s, dq, dp)
        q = q + np.where(gate, jq, 0.0)
        p = p + np.where(gate, jp, 0.0)
    return _out(q, p)


def heaviside_trajectory(params: ModelParams, force: Heaviside, q0: float, p0: float, t):
    """Each step switches on a constant force acting on a system at rest."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ParameterError("time must be >= 0")
    q, p = free_displacement(params, q0, p0, t)
    q, p = np.asarray(q, dtype=float), np.asarray(p, dtype=float)
    for tau, lr, li in ((force.a_time, force.A, 0.0), (force.b_time, 0.0, force.B)):
        if lr == 0 and li == 0:
            continue
        drive = drive_from_force(params, lr, li)
        gate = t >= tau
        s = np.where(gate, t - tau, 0.0)
        rq, rp = driven_displacement(params, drive, 0.0, 0.0, s)
        q = q + np.where(gate, rq, 0.0)
        p = p + np.where(gate, rp, 0.0)
    return _out(q, p)


def _out(q, p):
    if np.ndim(q) == 0:
        return float(q), float(p)
    return q, p


# --------------------------------------------------------------------- harmonic drive

@dataclass(frozen=True)
class HarmonicResponse:
    R_Omega: float
    R_omega: float
    S_Omega: float
    S_omega: float
    phi_q: float
    phi_p: float
    psi_q: float
    psi_p: float
    N_denom: float
    c_q: float
    s_q: float
    c_q_flip: float
    s_q_flip: float
    # omega * R_omega sin(psi_q) and omega * S_omega sin(psi_p); finite in every regime
    transient_q_sin: float
    transient_p_sin: float
    Omega: float

    def steady(self, t):
        """Steady-state orbit (q_st, p_st) at times t."""
        t = np.asarray(t, dtype=float)
        c, s = np.cos(self.Omega * t), np.sin(self.Omega * t)
        return _out(self.c_q * c + self.s_q * s, -self.s_q_flip * c + self.c_q_flip * s)


def _wrap(phase: float) -> float:
    return math.pi if phase <= -math.pi else phase


def _cs(params: ModelParams, R: float, Omega: float, N: float, sign: int):
    g, w2 = params.gamma, params.omega_sq
    th0, th1, th2 = params.theta0, sign * params.theta1, sign * params.theta2
    k = -R / (N * SQRT2)
    gq = g * g / 4
    c = k * ((th0 - th1) * (gq + w2 - Omega**2) - g * Omega * th2 + 2 * Omega * (gq - w2 + Omega**2))
    s = k * (th2 * (gq + w2 - Omega**2) + g * Omega * (th0 - th1) - g * (gq + w2 + Omega**2))
    return c, s


def harmonic_response(params: ModelParams, R: float, Omega: float) -> HarmonicResponse:
    """Amplitudes and phases of the response to lambda(t) = R exp(i Omega t).

    ``R_omega``, ``S_omega``, ``psi_q`` and ``psi_p`` describe a decaying
    oscillation at the real frequency omega and are NaN when omega**2 <= 0; the
    trajectory itself stays well defined there.
    """
    g, w2 = params.gamma, params.omega_sq
    gq = g * g / 4
    N = (gq + w2 + Omega**2) ** 2 - 4 * w2 * Omega**2
    if N < 1e-30:
        raise ParameterError(f"undamped resonance: N = {N:.3e}")
    th0, th1, th2 = params.theta0, params.theta1, params.theta2
    c, s = _cs(params, R, Omega, N, +1)
    cf, sf = _cs(params, R, Omega, N, -1)
    pref = R / (N * SQRT2)
    tq = pref * (0.5 * g * (th0 - th1) * (gq + w2 + Omega**2) - 2 * g * Omega * w2
                 - Omega * th2 * (gq - w2 + Omega**2))
    tp = pref * (-2 * w2 * (gq + w2 - Omega**2) + 0.5 * g * th2 * (gq + w2 + Omega**2)
                 - Omega * (th0 + th1) * (gq - w2 + Omega**2))
    amp = R / math.sqrt(2 * N)
    R_Omega = amp * math.hypot(g - th2, 2 * Omega - (th0 - th1))
    S_Omega = amp * math.hypot(g + th2, 2 * Omega - (th0 + th1))
    if w2 > 0:
        w = math.sqrt(w2)
        R_omega = amp / w * math.sqrt(w2 * (2 * Omega - (th0 - th1)) ** 2
                                      + (Omega * th2 - 0.5 * g * (th0 - th1)) ** 2)
        S_omega = amp / w * math.sqrt((0.5 * g * th2 - Omega * (th0 + th1)) ** 2
                                      + 4 * w2 * (gq + w2 + th2**2 / 4 - Omega * (th0 + th1)))
        psi_q = _wrap(math.atan2(tq / w, -c))
        psi_p = _wrap(math.atan2(tp / w, sf))
    else:
        R_omega = S_omega = psi_q = psi_p = math.nan
    return HarmonicResponse(
        R_Omega=R_Omega, R_omega=R_omega, S_Omega=S_Omega, S_omega=S_omega,
        phi_q=_wrap(math.atan2(s, c)), phi_p=_wrap(math.atan2(cf, -sf)),
        psi_q=psi_q, psi_p=psi_p, N_denom=N,
        c_q=c, s_q=s, c_q_flip=cf, s_q_flip=sf,
        transient_q_sin=tq, transient_p_sin=tp, Omega=Omega,
    )


def harmonic_trajectory(params: ModelParams, force: Harmonic, q0: float, p0: float, t,
                        response: HarmonicResponse | None = None):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ParameterError("time must be >= 0")
    h = response or harmonic_response(params, force.R, force.Omega)
    qf, pf = free_displacement(params, q0, p0, t)
    qs, ps = h.steady(t)
    decay = np.exp(-params.gamma * t / 2)
    C = cos_kernel(params.omega_sq, t)
    S = sinc_kernel(params.omega_sq, t)
    q = qf + qs + decay * (-h.c_q * C + h.transient_q_sin * S)
    p = pf + ps + decay * (h.s_q_flip * C + h.transient_p_sin * S)
    return _out(q, p)


@dataclass(frozen=True)
class EllipseGeometry:
    A: float
    B: float
    C: float
    semi_minor: float
    semi_major: float
    rotation: float
    """Counter-clockwise angle (radians) of the semi-minor axis from the q axis."""

    def to_dict(self) -> dict[str, float]:
        return {"A": self.A, "B": self.B, "C": self.C, "semi_minor": self.semi_minor,
                "semi_major": self.semi_major, "rotation_rad": self.rotation}

    @property
    def discriminant(self) -> float:
        return 4 * self.A * self.C - self.B**2


def steady_ellipse(params: ModelParams, R: float, Omega: float) -> EllipseGeometry:
    """Conic A q^2 + B q p + C p^2 = 1 traced by the steady-state orbit."""
    h = harmonic_response(params, R, Omega)
    c, s, cf, sf = h.c_q, h.s_q, h.c_q_flip, h.s_q_flip
    U = c * cf + s * sf
    scale = math.hypot(c, s) * math.hypot(cf, sf)
    # U / scale is the sine of the angle between the two quadrature vectors of the
    # orbit; at zero the orbit collapses onto a line segment
    if scale == 0 or abs(U) <= 1e-12 * scale:
        raise ParameterError(f"degenerate steady orbit: |U| = {abs(U):.3e} (orbit is a segment)")
    A = (cf**2 + sf**2) / U**2
    B = 2 * (c * sf - s * cf) / U**2
    C = (c**2 + s**2) / U**2
    lam_hi, lam_lo = _conic_eigs(A, B, C)
    return EllipseGeometry(A=A, B=B, C=C, semi_minor=1 / math.sqrt(lam_hi),
                           semi_major=1 / math.sqrt(lam_lo),
                           rotation=0.5 * math.atan2(B, A - C))


def _conic_eigs(A, B, C):
    mean = 0.5 * (A + C)
    rad = 0.5 * math.hypot(A - C, B)
    return mean + rad, mean - rad


# --------------------------------------------------------------------- general forcing

def _simpson_adaptive(fun, lo, hi, owner, tol, max_evals: int, n_owner: int):
    """Adaptive Simpson over many intervals at once.

    ``fun(s, owner, left)`` returns an array of shape (k, len(s)); ``left``
    asks for left limits, used only at the original right endpoints so a jump
    sitting on a knot never falls inside an interval.  Interval ``i``
    contributes to output ``owner[i]`` and is accepted once its error estimate
    is below ``tol[i]``, which is rescaled with the interval length on
    refinement.  Returns (totals of shape (k, n_owner), error estimates, evals).
    """
    mid = 0.5 * (lo + hi)
    flo, fmid, fhi = fun(lo, owner, False), fun(mid, owner, False), fun(hi, owner, True)
    k = flo.shape[0]
    total = np.zeros((k, n_owner))
    err = np.zeros(n_owner)
    evals = np.bincount(owner, minlength=n_owner) * 3
    while lo.size:
        h = hi - lo
        whole = h / 6 * (flo + 4 * fmid + fhi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = fun(lm, owner, False), fun(rm, owner, False)
        evals += 2 * np.bincount(owner, minlength=n_owner)
        left = h / 12 * (flo + 4 * flm + fmid)
        right = h / 12 * (fmid + 4 * frm + fhi)
        corr = (left + right - whole) / 15
        diff = np.max(np.abs(corr), axis=0)
        ok = diff <= tol
        if np.any(ok):
            for j in range(k):
                total[j] += np.bincount(owner[ok], weights=(left + right + corr)[j, ok], minlength=n_owner)
            err += np.bincount(owner[ok], weights=diff[ok], minlength=n_owner)
        bad = ~ok
        if not np.any(bad):
            break
        pending = np.bincount(owner[bad], minlength=n_owner)
        if np.any(evals + 4 * pending > max_evals):
            worst = int(np.argmax(evals + 4 * pending))
            raise QuadratureError(
                "adaptive Simpson exceeded its evaluation budget",
                float(err[worst] + np.sum(diff[bad & (owner == worst)])))
        lo_b, mid_b, hi_b = lo[bad], mid[bad], hi[bad]
        lo = np.concatenate([lo_b, mid_b])
        hi = np.concatenate([mid_b, hi_b])
        mid = np.concatenate([lm[bad], rm[bad]])
        owner = np.concatenate([owner[bad], owner[bad]])
        tol = np.concatenate([tol[bad], tol[bad]]) / 2
        flo = np.concatenate([flo[:, bad], fmid[:, bad]], axis=1)
        fhi = np.concatenate([fmid[:, bad], fhi[:, bad]], axis=1)
        fmid = np.concatenate([flm[:, bad], frm[:, bad]], axis=1)
    return total, err, evals


def convolved_response(params: ModelParams, force, t, tol: float = 1e-9,
                       max_evals: int = 2**20, breakpoints=()):
    """Forced part int_0^t exp((t - s) A) f(s) ds of the first moments, by quadrature.

    ``t`` may be an array; each output time gets absolute tolerance ``tol`` and
    its own evaluation budget.  Returns (dq, dp, error_estimate).
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    bps = np.asarray(sorted(float(b) for b in breakpoints), dtype=float)
    los, his, owners = [], [], []
    for i, ti in enumerate(t_arr):
        knots = np.unique(np.concatenate([[0.0, ti], bps[(bps > 0) & (bps < ti)]]))
        if knots.size < 2:
            continue
        los.append(knots[:-1])
        his.append(knots[1:])
        owners.append(np.full(knots.size - 1, i))
    n = t_arr.size
    if not los:
        zero = np.zeros(n)
        return (float(zero[0]), float(zero[0]), 0.0) if np.ndim(t) == 0 else (zero, zero.copy(), zero.copy())
    lo, hi, owner = np.concatenate(los), np.concatenate(his), np.concatenate(owners)
    span = np.maximum(t_arr[owner], 1e-300)

    def integrand(s, own, left):
        g11, g12, g21, g22 = flow_matrix(params, t_arr[own] - s)
        lam = force.value(s, left=left)
        fq, fp = SQRT2 * lam.imag, -SQRT2 * lam.real
        return np.vstack([g11 * fq + g12 * fp, g21 * fq + g22 * fp])

    total, err, _ = _simpson_adaptive(integrand, lo, hi, owner, tol * (hi - lo) / span, max_evals, n)
    if np.ndim(t) == 0:
        return float(total[0, 0]), float(total[1, 0]), float(err[0])
    return total[0], total[1], err


def sampled_trajectory(params: ModelParams, force: Sampled, q0: float, p0: float, t,
                       tol: float = 1e-9):
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ParameterError("time must be >= 0")
    q, p = free_displacement(params, q0, p0, t_arr)
    dq, dp, _ = convolved_response(params, force, t_arr, tol=tol, breakpoints=force.times)
    return _out(np.asarray(q) + dq, np.asarray(p) + dp)


def forced_trajectory(params: ModelParams, force: ForceModel | None, q0: float, p0: float, t):
    """Mean (q, p) at time(s) t under ``force``; ``None`` means no force."""
    if force is None:
        return free_displacement(params, q0, p0, t)
    if isinstance(force, Constant):
        if force.lr == 0 and force.li == 0:
            return free_displacement(params, q0, p0, t)
        return driven_displacement(params, drive_from_force(params, force.lr, force.li), q0, p0, t)
    if isinstance(force, Impulse):
        return impulse_trajectory(params, force, q0, p0, t)
    if isinstance(force, Heaviside):
        return heaviside_trajectory(params, force, q0, p0, t)
    if isinstance(force, Harmonic):
        return harmonic_trajectory(params, force, q0, p0, t)
    if isinstance(force, Sampled):
        return sampled_trajectory(params, force, q0, p0, t)
    raise TypeError(f"unsupported force {force!r}")


__all__ = [
    "Constant", "EllipseGeometry", "ForceModel", "Harmonic", "HarmonicResponse", "Heaviside",
    "Impulse", "QuadratureError", "Sampled", "convolved_response", "force_from_dict",
    "force_to_dict", "forced_trajectory", "harmonic_response", "harmonic_trajectory",
    "heaviside_trajectory", "impulse_trajectory", "sampled_trajectory", "steady_ellipse",
]
