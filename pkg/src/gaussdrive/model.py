"""Liouvillian parameters, renormalized frequency and the signature (-,+,+) vector algebra.

The generic Markovian generator of a single oscillator is fixed by seven real
numbers: the natural frequency ``omega0``, the decay rate ``gamma``, the two
squeeze-generator coefficients ``theta1``/``theta2`` and the three diffusion
coefficients ``eta0``/``eta1``/``eta2``.  Everything that depends only on those
numbers (frequency, regime, spectrum, exceptional-point distance) lives here.

Convention: the coefficient of the rotation generator is taken as
``theta0 = 2 * omega0``.  It appears alongside ``theta1`` and ``theta2`` in the
3-vector ``theta = (theta0, theta1, theta2)``; with it ``dot(theta, theta)`` is
exactly ``-4 * omega**2``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, asdict
from typing import Mapping

import numpy as np

PARAM_KEYS = ("omega0", "gamma", "theta1", "theta2", "eta0", "eta1", "eta2")


class ParameterError(ValueError):
    """Invalid model parameters or an operation outside its domain."""


class Regime(str, enum.Enum):
    UNDERDAMPED = "underdamped"
    CRITICAL = "critical"
    OVERDAMPED = "overdamped"
    UNSTABLE = "unstable"


@dataclass(frozen=True)
class ThreeVector:
    """Vector on the basis e0, e1, e2 with metric diag(-1, +1, +1)."""

    c0: float
    c1: float
    c2: float

    def __add__(self, other: "ThreeVector") -> "ThreeVector":
        return ThreeVector(self.c0 + other.c0, self.c1 + other.c1, self.c2 + other.c2)

    def __sub__(self, other: "ThreeVector") -> "ThreeVector":
        return ThreeVector(self.c0 - other.c0, self.c1 - other.c1, self.c2 - other.c2)

    def __mul__(self, k: float) -> "ThreeVector":
        return ThreeVector(k * self.c0, k * self.c1, k * self.c2)

    __rmul__ = __mul__

    def __neg__(self) -> "ThreeVector":
        return ThreeVector(-self.c0, -self.c1, -self.c2)

    def __iter__(self):
        return iter((self.c0, self.c1, self.c2))

    def to_list(self) -> list[float]:
        return [self.c0, self.c1, self.c2]

    @classmethod
    def from_list(cls, values) -> "ThreeVector":
        c0, c1, c2 = (float(v) for v in values)
        return cls(c0, c1, c2)


ZERO3 = ThreeVector(0.0, 0.0, 0.0)


def dot(v: ThreeVector, w: ThreeVector) -> float:
    return -v.c0 * w.c0 + v.c1 * w.c1 + v.c2 * w.c2


def wedge(v: ThreeVector, w: ThreeVector) -> ThreeVector:
    # e0^e1 = -e2, e1^e2 = e0, e2^e0 = -e1
    return ThreeVector(
        v.c1 * w.c2 - v.c2 * w.c1,
        v.c0 * w.c2 - v.c2 * w.c0,
        v.c1 * w.c0 - v.c0 * w.c1,
    )


@dataclass(frozen=True)
class ModelParams:
    """Coefficients of the generic quadratic Liouvillian.

    ``eta0`` is conventionally ``-gamma * (2 * nbar + 1)``; use
    :meth:`from_nbar` to build the thermal-bath case.
    """

    omega0: float
    gamma: float = 0.0
    theta1: float = 0.0
    theta2: float = 0.0
    eta0: float = 0.0
    eta1: float = 0.0
    eta2: float = 0.0

    def __post_init__(self):
        for key in PARAM_KEYS:
            value = getattr(self, key)
            if not math.isfinite(value):
                raise ParameterError(f"{key} must be finite, got {value!r}")
        if self.omega0 <= 0:
            raise ParameterError(f"omega0 must be > 0, got {self.omega0}")
        if self.gamma < 0:
            raise ParameterError(f"gamma must be >= 0, got {self.gamma}")

    @classmethod
    def from_nbar(cls, omega0: float, gamma: float, nbar: float = 0.0, **kw) -> "ModelParams":
        if nbar < 0:
            raise ParameterError(f"nbar must be >= 0, got {nbar}")
        return cls(omega0=omega0, gamma=gamma, eta0=-gamma * (2 * nbar + 1), **kw)

    @property
    def theta0(self) -> float:
        return 2.0 * self.omega0

    @property
    def theta(self) -> ThreeVector:
        return ThreeVector(self.theta0, self.theta1, self.theta2)

    @property
    def eta(self) -> ThreeVector:
        return ThreeVector(self.eta0, self.eta1, self.eta2)

    @property
    def omega_sq(self) -> float:
        return self.omega0**2 - 0.25 * self.theta1**2 - 0.25 * self.theta2**2

    def replace(self, **changes) -> "ModelParams":
        data = asdict(self)
        data.update(changes)
        return ModelParams(**data)

    def to_dict(self) -> dict[str, float]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, float]) -> "ModelParams":
        """Build from a flat mapping; ``nbar`` may stand in for ``eta0``.

        When neither is given the bath is taken at zero temperature (nbar = 0).
        """
        data = dict(data)
        unknown = set(data) - set(PARAM_KEYS) - {"nbar"}
        if unknown:
            raise ParameterError(f"unknown parameter keys: {sorted(unknown)}")
        if "omega0" not in data:
            raise ParameterError("omega0 is required")
        nbar = data.pop("nbar", None)
        if nbar is None and "eta0" not in data:
            nbar = 0.0
        if nbar is not None:
            if "eta0" in data:
                raise ParameterError("give either eta0 or nbar, not both")
            if float(nbar) < 0:
                raise ParameterError(f"nbar must be >= 0, got {nbar}")
            data["eta0"] = -float(data.get("gamma", 0.0)) * (2 * float(nbar) + 1)
        return cls(**{k: float(v) for k, v in data.items()})


def ep_tolerance(params: ModelParams) -> float:
    """Absolute tolerance on omega**2 below which the critical (EP) branch is used."""
    return 1e-9 * max(params.omega0**2, params.gamma**2, 1.0)


@dataclass(frozen=True)
class SpectralInfo:
    omega_sq: float
    omega_abs: float
    regime: Regime

    @property
    def omega(self) -> complex:
        """omega as a complex number: real, or ``1j * |omega|`` when omega**2 < 0."""
        if self.omega_sq >= 0:
            return complex(self.omega_abs, 0.0)
        return complex(0.0, self.omega_abs)


def renormalized_frequency(params: ModelParams) -> SpectralInfo:
    w2 = params.omega_sq
    w_abs = math.sqrt(abs(w2))
    gamma = params.gamma
    if gamma == 0.0 and w2 <= ep_tolerance(params):
        regime = Regime.UNSTABLE
    elif abs(w2) <= ep_tolerance(params):
        regime = Regime.CRITICAL
    elif w2 > 0:
        regime = Regime.UNDERDAMPED
    elif w_abs >= gamma / 2:
        regime = Regime.UNSTABLE
    else:
        regime = Regime.OVERDAMPED
    return SpectralInfo(omega_sq=w2, omega_abs=w_abs, regime=regime)


def drift_eigenvalues(params: ModelParams) -> tuple[complex, complex]:
    """Return (lambda_plus, lambda_minus) = gamma/2 +- i*omega."""
    w = renormalized_frequency(params).omega
    return (params.gamma / 2 + 1j * w, params.gamma / 2 - 1j * w)


def liouvillian_eigenvalue(params: ModelParams, m: int, n: int, sign: int = +1) -> complex:
    """Eigenvalue ``sign * i n omega - (m - n/2) gamma`` of the generator, 0 <= n <= m."""
    if m < 0 or n < 0:
        raise ParameterError(f"indices must be non-negative, got m={m}, n={n}")
    if n > m:
        raise ParameterError(f"need n <= m, got m={m}, n={n}")
    if sign not in (+1, -1):
        raise ParameterError(f"sign must be +1 or -1, got {sign}")
    w = renormalized_frequency(params).omega
    return sign * 1j * n * w - (m - n / 2) * params.gamma


def ep_defect(params: ModelParams) -> float:
    """theta1**2 + theta2**2 - 4 omega0**2; zero on the exceptional-point manifold."""
    return -4.0 * params.omega_sq


def effective_mass_frequency(params: ModelParams, m_bare: float = 1.0) -> tuple[float, float]:
    """Effective mass and frequency induced by ``theta1`` on the unitary part.

    ``omega_eff`` is returned as 0 past the critical value ``theta1 = 2 omega0``
    would make it imaginary; callers needing that branch should use
    :func:`renormalized_frequency`.
    """
    if m_bare <= 0:
        raise ParameterError(f"m_bare must be > 0, got {m_bare}")
    ratio = params.theta1 / (2 * params.omega0)
    if ratio == 1.0:
        raise ParameterError("effective mass has a pole at theta1 = 2*omega0")
    m_eff = m_bare / (1 - ratio)
    w2 = params.omega0**2 - params.theta1**2 / 4
    return m_eff, math.sqrt(max(w2, 0.0))


# Kernels of the flow, written as even functions of omega**2 so that one code path
# covers real, zero and imaginary omega.

_SERIES_CUT = 0.1


def cos_kernel(w2: float, t):
    """cos(omega t) for omega**2 = w2 (cosh(|omega| t) when w2 < 0)."""
    t = np.asarray(t, dtype=float)
    x = w2 * t * t
    if w2 > 0:
        out = np.cos(math.sqrt(w2) * t)
    elif w2 < 0:
        out = np.cosh(math.sqrt(-w2) * t)
    else:
        out = np.ones_like(t)
    small = np.abs(x) < _SERIES_CUT
    if np.any(small):
        xs = x[small] if x.ndim else x
        term = np.ones_like(xs)
        acc = np.ones_like(xs)
        for k in range(1, 12):
            term = term * (-xs) / ((2 * k - 1) * (2 * k))
            acc = acc + term
        if x.ndim:
            out = np.array(out, dtype=float)
            out[small] = acc
        else:
            out = acc
    return out if np.ndim(out) else float(out)


def sinc_kernel(w2: float, t):
    """sin(omega t)/omega for omega**2 = w2; tends to t as w2 -> 0."""
    t = np.asarray(t, dtype=float)
    x = w2 * t * t
    if w2 > 0:
        w = math.sqrt(w2)
        out = np.sin(w * t) / w
    elif w2 < 0:
        w = math.sqrt(-w2)
        out = np.sinh(w * t) / w
    else:
        out = np.array(t, dtype=float)
    small = np.abs(x) < _SERIES_CUT
    if np.any(small):
        xs = x[small] if x.ndim else x
        ts = t[small] if t.ndim else t
        term = np.ones_like(xs)
        acc = np.ones_like(xs)
        for k in range(1, 12):
            term = term * (-xs) / ((2 * k) * (2 * k + 1))
            acc = acc + term
        if x.ndim:
            out = np.array(out, dtype=float)
            out[small] = ts * acc
        else:
            out = ts * acc
    return out if np.ndim(out) else float(out)
