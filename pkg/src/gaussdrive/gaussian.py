"""Displaced Gaussian mixed states in the (mu, nu, kappa, q, p) parametrization.

In centre/relative coordinates Q = (x+y)/2, r = x-y the kernel of the state is

    <x|rho|y> = exp(i p r) sqrt(2 mu/pi)
                * exp(-2 mu (Q-q)**2 - i kappa (Q-q) r - (mu+nu) r**2 / 2)

with dimensionless x = (a + a^dag)/sqrt(2), p = i (a^dag - a)/sqrt(2).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, asdict, replace
from typing import Mapping

import numpy as np


class StateError(ValueError):
    """Unphysical Gaussian parameters."""


@dataclass(frozen=True)
class SecondMoments:
    sxx: float
    spp: float
    sxp: float

    @property
    def det(self) -> float:
        return self.sxx * self.spp - self.sxp**2

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.sxx, self.sxp], [self.sxp, self.spp]])


@dataclass(frozen=True)
class GaussianState:
    mu: float
    nu: float = 0.0
    kappa: float = 0.0
    q: float = 0.0
    p: float = 0.0

    def __post_init__(self):
        for name in ("mu", "nu", "kappa", "q", "p"):
            if not math.isfinite(getattr(self, name)):
                raise StateError(f"{name} must be finite")
        if self.mu <= 0:
            raise StateError(f"mu must be > 0, got {self.mu}")
        if self.nu < 0:
            raise StateError(f"nu must be >= 0, got {self.nu}")

    @property
    def delta_sq(self) -> float:
        return 4 * self.mu * (self.mu + self.nu) + self.kappa**2

    @property
    def z(self) -> complex:
        return complex(self.q, self.p) / math.sqrt(2)

    @property
    def is_pure(self) -> bool:
        return self.nu == 0.0

    def to_dict(self) -> dict[str, float]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, float]) -> "GaussianState":
        unknown = set(data) - {"mu", "nu", "kappa", "q", "p"}
        if unknown:
            raise StateError(f"unknown state keys: {sorted(unknown)}")
        if "mu" not in data:
            raise StateError("mu is required")
        return cls(**{k: float(v) for k, v in data.items()})

    @classmethod
    def vacuum(cls, q: float = 0.0, p: float = 0.0) -> "GaussianState":
        return cls(mu=0.5, nu=0.0, kappa=0.0, q=q, p=p)

    @classmethod
    def thermal(cls, nbar: float, q: float = 0.0, p: float = 0.0) -> "GaussianState":
        s = nbar + 0.5
        return from_moments(s, s, 0.0, q, p)


def from_moments(sxx: float, spp: float, sxp: float, q: float = 0.0, p: float = 0.0) -> GaussianState:
    """Inverse of :func:`second_moments`."""
    if sxx <= 0:
        raise StateError(f"sxx must be > 0, got {sxx}")
    det = sxx * spp - sxp**2
    nu = (det - 0.25) / sxx
    if nu < 0 and det - 0.25 >= -1e-12 * max(det, 1.0):
        nu = 0.0  # pure state up to rounding
    return GaussianState(
        mu=1.0 / (4 * sxx),
        nu=nu,
        kappa=-sxp / sxx,
        q=q,
        p=p,
    )


def second_moments(s: GaussianState) -> SecondMoments:
    return SecondMoments(
        sxx=1.0 / (4 * s.mu),
        spp=s.delta_sq / (4 * s.mu),
        sxp=-s.kappa / (4 * s.mu),
    )


def density_kernel(s: GaussianState, Q, r):
    """Position-representation kernel <Q + r/2 | rho | Q - r/2>."""
    Q = np.asarray(Q, dtype=float)
    r = np.asarray(r, dtype=float)
    dQ = Q - s.q
    expo = -2 * s.mu * dQ**2 - 0.5 * (s.mu + s.nu) * r**2 + 1j * (s.p * r - s.kappa * dQ * r)
    return math.sqrt(2 * s.mu / math.pi) * np.exp(expo)


def wigner(s: GaussianState, Q, P):
    Q = np.asarray(Q, dtype=float)
    P = np.asarray(P, dtype=float)
    dQ = Q - s.q
    dP = P - s.p
    m = s.mu + s.nu
    quad = s.delta_sq * dQ**2 + 2 * s.kappa * dQ * dP + dP**2
    return math.sqrt(s.mu / m) / math.pi * np.exp(-quad / (2 * m))


def displace(s: GaussianState, dq: float, dp: float) -> GaussianState:
    return replace(s, q=s.q + dq, p=s.p + dp)


@dataclass(frozen=True)
class Grid2D:
    """Rectangular grid; values are laid out row-major with P varying fastest."""

    qmin: float
    qmax: float
    nq: int
    pmin: float
    pmax: float
    np_: int

    def __post_init__(self):
        if self.nq < 2 or self.np_ < 2:
            raise ValueError("grid needs at least 2 points per axis")
        if not (self.qmax > self.qmin and self.pmax > self.pmin):
            raise ValueError("grid bounds must be increasing")

    @classmethod
    def from_dict(cls, d: Mapping) -> "Grid2D":
        return cls(float(d["Qmin"]), float(d["Qmax"]), int(d["nQ"]),
                   float(d["Pmin"]), float(d["Pmax"]), int(d["nP"]))

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.linspace(self.qmin, self.qmax, self.nq),
                np.linspace(self.pmin, self.pmax, self.np_))


def wigner_grid(s: GaussianState, grid: Grid2D) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    qs, ps = grid.axes()
    QQ, PP = np.meshgrid(qs, ps, indexing="ij")
    return QQ, PP, wigner(s, QQ, PP)


def write_wigner_csv(path, s: GaussianState, grid: Grid2D) -> None:
    QQ, PP, W = wigner_grid(s, grid)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["Q", "P", "W"])
        for qv, pv, wv in zip(QQ.ravel() + 0.0, PP.ravel() + 0.0, W.ravel() + 0.0):
            w.writerow([f"{qv:.17g}", f"{pv:.17g}", f"{wv:.17g}"])


def suggest_cutoff(s: GaussianState, n_sigma: float = 8.0, tail: float = 1e-10) -> int:
    """Fock cutoff covering the photon-number distribution of ``s``.

    Takes the larger of mean + ``n_sigma`` standard deviations and the index
    where a geometric tail set by the widest quadrature variance drops below
    ``tail``; mixed and squeezed states have such tails.
    """
    sm = second_moments(s)
    V = sm.as_matrix()
    d = np.array([s.q, s.p])
    mean_n = 0.5 * (np.trace(V) + d @ d - 1.0)
    var_n = 0.5 * np.trace(V @ V) - 0.25 + d @ V @ d
    by_moments = mean_n + n_sigma * math.sqrt(max(var_n, 0.0))
    lam = float(np.linalg.eigvalsh(V)[-1])
    ratio = (lam - 0.5) / (lam + 0.5)
    by_tail = 0.0
    if ratio > 0:
        by_tail = math.log(tail) / math.log(ratio) + 0.5 * float(d @ d)
    return int(math.ceil(max(by_moments, by_tail))) + 8
