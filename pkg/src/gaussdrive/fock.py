"""Dense truncated-Fock-space reference for the Gaussian closed forms.

Superoperators act on column-stacked density matrices: ``a @ rho @ b`` maps to
``kron(b.T, a) @ vec(rho)``.  Each :class:`SuperOp` keeps the list of
(coefficient, left, right) matrix pairs it was built from, so it can be
applied to a density with plain matrix products and the dense
``cutoff**2 x cutoff**2`` matrix is only formed on request.

Ladder operators are truncated matrices, so every superoperator built here is
exactly trace preserving, while identities that need the infinite algebra only
hold on states supported well below the cutoff (the interior block).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg
from scipy.integrate import solve_ivp
from scipy.special import roots_hermite

from .gaussian import GaussianState, StateError, suggest_cutoff
from .model import ModelParams

MAX_CUTOFF = 64


class TruncationError(RuntimeError):
    """Population reached the top of the truncated basis."""


# --------------------------------------------------------------------- states

def ladder(cutoff: int) -> np.ndarray:
    """Annihilation operator truncated to ``cutoff`` levels."""
    return np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), 1).astype(complex)


def tail_mass(rho: np.ndarray, width: int = 4) -> float:
    pops = np.real(np.diag(rho))
    return float(np.sum(np.abs(pops[rho.shape[0] - width:])))


@dataclass
class FockDensity:
    elements: np.ndarray

    def __post_init__(self):
        el = np.asarray(self.elements, dtype=complex)
        if el.ndim != 2 or el.shape[0] != el.shape[1] or el.shape[0] < 2:
            raise StateError("density must be a square matrix of size >= 2")
        self.elements = el

    @property
    def cutoff(self) -> int:
        return self.elements.shape[0]

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.elements))

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.elements - self.elements.conj().T)))

    def tail_mass(self, width: int = 4) -> float:
        return tail_mass(self.elements, width)

    def check(self, herm_tol: float = 1e-12, trace_tol: float = 1e-10, tail_tol: float = 1e-8) -> None:
        if self.hermiticity_defect() > herm_tol:
            raise StateError(f"density not Hermitian (defect {self.hermiticity_defect():.2e})")
        if abs(self.trace - 1) > trace_tol:
            raise StateError(f"trace {self.trace} differs from 1")
        if self.tail_mass() > tail_tol:
            raise TruncationError(f"tail mass {self.tail_mass():.2e} above {tail_tol:.0e}")

    @property
    def purity(self) -> float:
        return float(np.real(np.vdot(self.elements.conj().T, self.elements)))

    @classmethod
    def number_state(cls, n: int, cutoff: int) -> "FockDensity":
        rho = np.zeros((cutoff, cutoff), dtype=complex)
        rho[n, n] = 1.0
        return cls(rho)

    @classmethod
    def coherent(cls, z: complex, cutoff: int) -> "FockDensity":
        n = np.arange(cutoff)
        logfact = np.array([math.lgamma(k + 1) for k in n])
        amp = np.exp(-0.5 * abs(z) ** 2 - 0.5 * logfact) * np.power(complex(z), n)
        return cls(np.outer(amp, amp.conj()))

    def vec(self) -> np.ndarray:
        return self.elements.reshape(-1, order="F")

    @classmethod
    def from_vec(cls, v: np.ndarray) -> "FockDensity":
        n = int(round(math.sqrt(v.size)))
        return cls(np.asarray(v).reshape(n, n, order="F"))


def quadrature_ops(cutoff: int):
    """x, p, x^2, p^2 and (xp + px)/2 with exact matrix elements inside the truncation."""
    big = ladder(cutoff + 2)
    ad = big.conj().T
    x = (big + ad) / math.sqrt(2)
    p = 1j * (ad - big) / math.sqrt(2)
    n = cutoff
    return (x[:n, :n], p[:n, :n], (x @ x)[:n, :n], (p @ p)[:n, :n],
            (0.5 * (x @ p + p @ x))[:n, :n])


def moments(rho: FockDensity):
    """(q, p, sxx, spp, sxp) of a density."""
    x, p, xx, pp, xp = quadrature_ops(rho.cutoff)
    r = rho.elements
    ex = lambda op: float(np.real(np.sum(op.T * r)))
    q, pm = ex(x), ex(p)
    return q, pm, ex(xx) - q * q, ex(pp) - pm * pm, ex(xp) - q * pm


def fourth_cumulant_residual(rho: FockDensity) -> float:
    """Largest fourth-order cumulant of (x, p) along a few phase-space directions."""
    x, p, *_ = quadrature_ops(rho.cutoff + 4)
    n = rho.cutoff
    r = np.zeros((n + 4, n + 4), dtype=complex)
    r[:n, :n] = rho.elements
    worst = 0.0
    for ang in np.linspace(0, math.pi, 7, endpoint=False):
        u = math.cos(ang) * x + math.sin(ang) * p
        m1 = np.real(np.trace(u @ r))
        d = u - m1 * np.eye(n + 4)
        d2 = d @ d
        m2 = np.real(np.trace(d2 @ r))
        m4 = np.real(np.trace(d2 @ d2 @ r))
        worst = max(worst, abs(m4 - 3 * m2 * m2))
    return worst


def hermite_functions(nmax: int, x: np.ndarray) -> np.ndarray:
    """psi_0..psi_{nmax-1} at points x (rows), by the stable three-term recurrence."""
    x = np.asarray(x, dtype=float)
    out = np.empty((nmax, x.size))
    out[0] = math.pi ** -0.25 * np.exp(-0.5 * x * x)
    if nmax > 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for m in range(2, nmax):
        out[m] = math.sqrt(2.0 / m) * x * out[m - 1] - math.sqrt((m - 1) / m) * out[m - 2]
    return out


def gaussian_to_density(s: GaussianState, cutoff: int | None = None, order: int = 200,
                        tail_tol: float = 1e-8) -> FockDensity:
    """Number-basis matrix of a Gaussian state by Gauss-Hermite quadrature in (x, y)."""
    if cutoff is None:
        cutoff = min(suggest_cutoff(s), MAX_CUTOFF)
    if cutoff > MAX_CUTOFF:
        raise ValueError(f"cutoff {cutoff} exceeds {MAX_CUTOFF}")
    nodes, weights = roots_hermite(order)
    w = np.exp(np.log(weights) + nodes**2)
    psi = hermite_functions(cutoff, nodes) * w
    X, Y = np.meshgrid(nodes, nodes, indexing="ij")
    dQ = 0.5 * (X + Y) - s.q
    r = X - Y
    kern = math.sqrt(2 * s.mu / math.pi) * np.exp(
        -2 * s.mu * dQ**2 - 0.5 * (s.mu + s.nu) * r**2 + 1j * (s.p - s.kappa * dQ) * r)
    rho = psi @ kern @ psi.T
    rho = 0.5 * (rho + rho.conj().T)
    tail = tail_mass(rho)
    if tail > tail_tol:
        raise TruncationError(f"tail mass {tail:.2e} at cutoff {cutoff}; use a larger cutoff")
    return FockDensity(rho / np.trace(rho).real)


def write_density_csv(path, rho: FockDensity) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["m", "n", "re", "im"])
        for m in range(rho.cutoff):
            for n in range(rho.cutoff):
                v = rho.elements[m, n]
                w.writerow([m, n, f"{v.real:.17g}", f"{v.imag:.17g}"])


# --------------------------------------------------------------------- superoperators

@dataclass
class SuperOp:
    """Linear map rho -> sum_k c_k A_k rho B_k."""

    cutoff: int
    terms: list = field(default_factory=list)

    @classmethod
    def left(cls, A: np.ndarray, coef: complex = 1.0) -> "SuperOp":
        n = A.shape[0]
        return cls(n, [(coef, A, np.eye(n, dtype=complex))])

    @classmethod
    def right(cls, B: np.ndarray, coef: complex = 1.0) -> "SuperOp":
        n = B.shape[0]
        return cls(n, [(coef, np.eye(n, dtype=complex), B)])

    @classmethod
    def sandwich(cls, A: np.ndarray, B: np.ndarray, coef: complex = 1.0) -> "SuperOp":
        return cls(A.shape[0], [(coef, A, B)])

    @classmethod
    def commutator_with(cls, H: np.ndarray, coef: complex = 1.0) -> "SuperOp":
        """rho -> coef [H, rho]."""
        return cls.left(H, coef) + cls.right(H, -coef)

    @classmethod
    def zero(cls, cutoff: int) -> "SuperOp":
        return cls(cutoff, [])

    def __add__(self, other: "SuperOp") -> "SuperOp":
        return SuperOp(self.cutoff, self.terms + other.terms)

    def __neg__(self) -> "SuperOp":
        return self * -1

    def __sub__(self, other: "SuperOp") -> "SuperOp":
        return self + (-other)

    def __mul__(self, k: complex) -> "SuperOp":
        return SuperOp(self.cutoff, [(k * c, A, B) for c, A, B in self.terms])

    __rmul__ = __mul__

    def __matmul__(self, other: "SuperOp") -> "SuperOp":
        """Composition (self after other)."""
        return SuperOp(self.cutoff, [(c1 * c2, A1 @ A2, B2 @ B1)
                                     for c1, A1, B1 in self.terms for c2, A2, B2 in other.terms])

    def apply(self, rho: np.ndarray) -> np.ndarray:
        out = np.zeros((self.cutoff, self.cutoff), dtype=complex)
        for c, A, B in self.terms:
            out += c * (A @ rho @ B)
        return out

    @cached_property
    def matrix(self) -> np.ndarray:
        n2 = self.cutoff**2
        M = np.zeros((n2, n2), dtype=complex)
        for c, A, B in self.terms:
            M += c * np.kron(B.T, A)
        return M

    def transpose_apply(self, obs: np.ndarray) -> np.ndarray:
        """Adjoint action on observables: tr(obs S(rho)) = tr(S^T(obs) rho)."""
        out = np.zeros((self.cutoff, self.cutoff), dtype=complex)
        for c, A, B in self.terms:
            out += c * (B @ obs @ A)
        return out


def commutator(S1: SuperOp, S2: SuperOp) -> SuperOp:
    return S1 @ S2 - S2 @ S1


GENERATOR_NAMES = ("iL0", "iM1", "iM2", "O0-I/2", "O+", "L1+", "L2+")


@dataclass
class SuperOpSet:
    cutoff: int
    a: np.ndarray
    adag: np.ndarray
    generators: dict
    L: SuperOp
    R: SuperOp
    V: SuperOp
    Vdag: SuperOp
    D: SuperOp
    alpha: complex
    L0: SuperOp
    L0_direct: SuperOp
    Lz: SuperOp

    def displacement(self, z: complex) -> SuperOp:
        return displacement_superop(self.a, z)


def displacement_superop(a: np.ndarray, z: complex) -> SuperOp:
    g = z * a.conj().T - np.conj(z) * a
    return SuperOp.commutator_with(g)


def build_superops(params: ModelParams, z: complex | None, cutoff: int) -> SuperOpSet:
    """All superoperators of the generic Liouvillian on a truncated basis.

    ``L0`` is assembled from the seven generators with the Liouvillian
    coefficients; ``L0_direct`` from the Hamiltonian and the L, R, V, V^dag
    dissipators.  ``Lz = L0 + D(alpha)`` with alpha the drive that holds the
    displacement ``z``.
    """
    if cutoff < 8:
        raise ValueError("cutoff must be >= 8")
    if cutoff > MAX_CUTOFF:
        raise ValueError(f"cutoff must be <= {MAX_CUTOFF}")
    a = ladder(cutoff)
    ad = a.conj().T
    num = ad @ a
    S = SuperOp
    Lsup = S.sandwich(a, ad) + S.left(num, -0.5) + S.right(num, -0.5)
    aad = a @ ad
    Rsup = S.sandwich(ad, a) + S.left(aad, -0.5) + S.right(aad, -0.5)
    aa = a @ a
    adad = ad @ ad
    V = S.sandwich(a, a) + S.left(aa, -0.5) + S.right(aa, -0.5)
    Vd = S.sandwich(ad, ad) + S.left(adad, -0.5) + S.right(adad, -0.5)
    gens = {
        "iL0": S.commutator_with(num, 0.5j),
        "iM1": S.commutator_with(0.5 * (aa + adad), 0.5j),
        "iM2": S.commutator_with(0.5j * (aa - adad), 0.5j),
        "O0-I/2": 0.5 * (Rsup - Lsup),
        "O+": 0.5 * (Rsup + Lsup),
        "L1+": 0.5 * (V + Vd),
        "L2+": 0.5j * (V - Vd),
    }
    coeffs = {
        "iL0": params.theta0, "iM1": params.theta1, "iM2": params.theta2,
        "O0-I/2": params.gamma, "O+": params.eta0, "L1+": params.eta1, "L2+": params.eta2,
    }
    K0 = S.zero(cutoff)
    for name in GENERATOR_NAMES:
        K0 = K0 + gens[name] * coeffs[name]
    L0 = -K0

    xi = 0.5 * complex(params.theta2, params.theta1)
    chi = 0.5 * complex(params.eta1, params.eta2)
    H0 = params.omega0 * num + 0.5j * (np.conj(xi) * aa - xi * adad)
    L0_direct = (S.commutator_with(H0, -1j) + Lsup * (-0.5 * (params.eta0 - params.gamma))
                 + Rsup * (-0.5 * (params.eta0 + params.gamma)) + V * (-chi) + Vd * (-np.conj(chi)))

    zz = 0j if z is None else complex(z)
    D = displacement_superop(a, zz)
    alpha = alpha_for_displacement(params, zz)
    Lz = L0 + displacement_superop(a, alpha)
    return SuperOpSet(cutoff=cutoff, a=a, adag=ad, generators=gens, L=Lsup, R=Rsup, V=V,
                      Vdag=Vd, D=D, alpha=alpha, L0=L0, L0_direct=L0_direct, Lz=Lz)


def alpha_for_displacement(params: ModelParams, z: complex) -> complex:
    q, p = math.sqrt(2) * z.real, math.sqrt(2) * z.imag
    g, w0, t1, t2 = params.gamma, params.omega0, params.theta1, params.theta2
    aq = 0.5 * (g + t2) * q - 0.5 * (2 * w0 - t1) * p
    ap = 0.5 * (2 * w0 + t1) * q + 0.5 * (g - t2) * p
    return complex(aq, ap) / math.sqrt(2)


def driving_superop(a: np.ndarray, lam: complex) -> SuperOp:
    """Generator of the linear drive term lambda a^dag + lambda^* a in the Hamiltonian."""
    ad = a.conj().T
    return SuperOp.commutator_with(lam * ad + np.conj(lam) * a, -1j)


# --------------------------------------------------------------------- evolution

def _renormalize(rho: np.ndarray, what: str) -> np.ndarray:
    tr = np.trace(rho)
    drift = abs(tr - 1)
    if drift > 1e-9:
        raise TruncationError(f"trace drifted by {drift:.2e} during {what}")
    return rho / tr


def evolve_density(superop: SuperOp, rho0: FockDensity, t: float, method: str = "rk",
                   rtol: float = 1e-10, atol: float = 1e-13, tail_tol: float = 1e-6,
                   t_eval=None, drive=None):
    """rho(t) = exp(t S) rho0.

    ``method="rk"`` integrates the ODE with an adaptive 8th-order Runge-Kutta
    scheme using the term list; ``"eig"`` uses a dense eigendecomposition
    (intended for long times).  ``drive`` is an optional callable
    ``t -> SuperOp`` added to the generator (time-dependent forcing; RK only).
    With ``t_eval`` a list of densities is returned.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    n = superop.cutoff
    if rho0.cutoff != n:
        raise ValueError("cutoff mismatch between superoperator and density")
    times = [t] if t_eval is None else list(t_eval)
    if method == "eig":
        if drive is not None:
            raise ValueError("time-dependent drive needs method='rk'")
        w, V = scipy.linalg.eig(superop.matrix)
        c = np.linalg.solve(V, rho0.vec())
        outs = [FockDensity.from_vec(V @ (np.exp(w * tt) * c)).elements for tt in times]
    elif method == "rk":
        def rhs(tt, y):
            r = y.reshape(n, n, order="F")
            out = superop.apply(r)
            if drive is not None:
                out = out + drive(tt).apply(r)
            return out.reshape(-1, order="F")

        if max(times) == 0:
            outs = [rho0.elements.copy() for _ in times]
        else:
            sol = solve_ivp(rhs, (0.0, max(times)), rho0.vec(), method="DOP853",
                            t_eval=sorted(set(times)), rtol=rtol, atol=atol)
            if not sol.success:
                raise RuntimeError(f"integration failed: {sol.message}")
            lookup = {tt: sol.y[:, i] for i, tt in enumerate(sol.t)}
            outs = [lookup[tt].reshape(n, n, order="F") for tt in times]
    else:
        raise ValueError(f"unknown method {method!r}")
    result = []
    for r in outs:
        r = 0.5 * (r + r.conj().T)
        tail = tail_mass(r)
        if tail > tail_tol:
            raise TruncationError(f"tail mass {tail:.2e} exceeded {tail_tol:.0e} during evolution")
        result.append(FockDensity(_renormalize(r, "evolution")))
    return result[0] if t_eval is None else result


def spectrum(superop: SuperOp, k: int) -> np.ndarray:
    """The k eigenvalues with real part closest to zero (largest real part first)."""
    w = scipy.linalg.eigvals(superop.matrix)
    order = np.lexsort((w.imag, -w.real))
    return w[order][:k]


def stationary_density(superop: SuperOp) -> FockDensity:
    """Null vector of the superoperator, normalized to unit trace."""
    n = superop.cutoff
    M = superop.matrix
    # replace one equation by the trace condition
    tr_row = np.eye(n, dtype=complex).reshape(-1, order="F")
    A = M.copy()
    A[0, :] = tr_row
    b = np.zeros(n * n, dtype=complex)
    b[0] = 1.0
    v = np.linalg.solve(A, b)
    rho = FockDensity.from_vec(v).elements
    return FockDensity(0.5 * (rho + rho.conj().T))


# --------------------------------------------------------------------- spectrum tools

def vacuum_diffusion(params: ModelParams) -> ModelParams:
    """Same drift, with diffusion chosen so that the vacuum is stationary.

    The spectrum of the Liouvillian does not depend on the diffusion
    coefficients, and with this choice every term that raises the total
    number degree m+n of ``|m><n|`` cancels, so the generator is block
    triangular in that degree and truncation leaves low-lying eigenvalues exact.
    """
    return params.replace(eta0=-params.gamma, eta1=params.theta2, eta2=-params.theta1)


def resolved_spectrum(superop: SuperOp, edge_width: int = 4, edge_tol: float = 1e-10):
    """Eigenvalues whose right eigenvectors carry negligible weight near the cutoff.

    Returns ``(kept, edge_fraction_of_all)``; eigenvalues whose eigenvector
    reaches the top ``edge_width`` levels are artifacts of the truncation.
    """
    n = superop.cutoff
    w, V = scipy.linalg.eig(superop.matrix)
    m, k = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    edge = (np.maximum(m, k) >= n - edge_width).reshape(-1, order="F")
    frac = np.linalg.norm(V[edge], axis=0) / np.linalg.norm(V, axis=0)
    return w[frac < edge_tol], frac


def _ket(word: str, m: int):
    """Apply a ladder word (rightmost letter first; 'a' lowers, 'd' raises) to |m>.

    Returns the new level and the integer whose square root is the amplitude.
    """
    sq = 1
    for op in reversed(word):
        if op == "a":
            if m == 0:
                return None
            sq *= m
            m -= 1
        else:
            m += 1
            sq *= m
    return m, sq


def _generator_terms(params: ModelParams, mp):
    """(coefficient, left word, right word) list of the Liouvillian at working precision."""
    w0, g = mp.mpf(params.omega0), mp.mpf(params.gamma)
    xi = mp.mpc(params.theta2, params.theta1) / 2
    chi = mp.mpc(params.eta1, params.eta2) / 2
    cl = -(mp.mpf(params.eta0) - g) / 2
    cr = -(mp.mpf(params.eta0) + g) / 2
    ham = [(w0, "da"), (mp.mpc(0, 0.5) * mp.conj(xi), "aa"), (-mp.mpc(0, 0.5) * xi, "dd")]
    terms = []
    for c, w in ham:
        terms += [(-1j * c, w, ""), (1j * c, "", w)]
    for c, l, r, sym in ((cl, "a", "d", "da"), (cr, "d", "a", "ad"),
                         (-chi, "a", "a", "aa"), (-mp.conj(chi), "d", "d", "dd")):
        terms += [(c, l, r), (-c / 2, sym, ""), (-c / 2, "", sym)]
    return terms


def sector_blocks(params: ModelParams, max_degree: int, dps: int = 100):
    """Diagonal blocks of the generator on ``span{|m><n| : m+n = d}`` for d <= max_degree.

    Entries are computed at ``dps`` decimal digits.  Raises ValueError when the
    generator couples a sector to a higher one (diffusion not of the
    :func:`vacuum_diffusion` form), since the blocks then do not carry the spectrum.
    """
    import mpmath

    with mpmath.workdps(dps):
        mp = mpmath.mp
        terms = _generator_terms(params, mp)
        dagger = {"a": "d", "d": "a"}
        blocks = []
        leak = mp.mpf(0)
        for d in range(max_degree + 1):
            M = mpmath.zeros(d + 1, d + 1)
            up: dict = {}
            for j in range(d + 1):
                m, n = j, d - j
                for c, lw, rw in terms:
                    left = _ket(lw, m)
                    right = _ket("".join(dagger[o] for o in reversed(rw)), n)
                    if left is None or right is None:
                        continue
                    (m2, s1), (n2, s2) = left, right
                    val = c * mp.sqrt(s1 * s2)
                    if m2 + n2 > d:
                        up[(j, m2, n2)] = up.get((j, m2, n2), 0) + val
                    elif m2 + n2 == d:
                        M[m2, j] += val
            leak = max([leak] + [abs(v) for v in up.values()])
            blocks.append(M)
        if leak > mp.mpf(10) ** (-(dps // 2)):
            raise ValueError(f"generator raises the number degree (coupling {float(leak):.2e}); "
                             "use vacuum_diffusion(params)")
        return blocks


def sector_spectrum(params: ModelParams, max_degree: int, dps: int = 100) -> np.ndarray:
    """All eigenvalues of the degree sectors up to ``max_degree``, with multiplicity."""
    import mpmath

    out = []
    with mpmath.workdps(dps):
        for M in sector_blocks(params, max_degree, dps):
            if M.rows == 1:
                out.append(complex(M[0, 0]))
                continue
            E = mpmath.eig(M, left=False, right=False)
            out.extend(complex(e) for e in E)
    return np.array(out, dtype=complex)


# --------------------------------------------------------------------- operator algebra

def _interior_mask(cutoff: int) -> np.ndarray:
    m, n = np.meshgrid(np.arange(cutoff), np.arange(cutoff), indexing="ij")
    return (np.maximum(m, n) < cutoff // 2).reshape(-1, order="F")


def _random_interior_density(cutoff: int, rng: np.random.Generator) -> np.ndarray:
    k = cutoff // 2
    X = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
    rho = np.zeros((cutoff, cutoff), dtype=complex)
    rho[:k, :k] = X @ X.conj().T
    return rho / np.trace(rho)


def algebra_checks(params: ModelParams, z: complex, cutoff: int = 24, seed: int = 0) -> list[dict]:
    """Check the superoperator algebra on inputs supported below ``cutoff // 2``.

    Returns one record ``{identity_name, norm, tolerance, pass}`` per identity.
    Norms are max-abs entries of the identity's matrix restricted to interior
    columns, or of the traced quantity for the trace and transposition checks.
    """
    S = build_superops(params, z, cutoff)
    D = S.displacement
    G = S.generators
    inner = _interior_mask(cutoff)
    rng = np.random.default_rng(seed)
    rho = _random_interior_density(cutoff, rng)
    a, ad = S.a, S.adag
    x = (a + ad) / math.sqrt(2)
    p = 1j * (ad - a) / math.sqrt(2)
    z = complex(z)

    def interior(op: SuperOp) -> float:
        return float(np.abs(op.matrix[:, inner]).max())

    checks = [
        ("[iL0,D(z)] = D(iz)/2", interior(commutator(G["iL0"], S.D) - D(1j * z) * 0.5), 1e-9),
        ("[iM1,D(z)] = -D(conj(iz))/2",
         interior(commutator(G["iM1"], S.D) + D(np.conj(1j * z)) * 0.5), 1e-9),
        ("[iM2,D(z)] = D(conj(z))/2", interior(commutator(G["iM2"], S.D) - D(np.conj(z)) * 0.5), 1e-9),
        ("[O0-I/2,D(z)] = D(z)/2", interior(commutator(G["O0-I/2"], S.D) - D(z) * 0.5), 1e-9),
        ("[O+,D(z)] = 0", interior(commutator(G["O+"], S.D)), 1e-9),
        ("[L1+,D(z)] = 0", interior(commutator(G["L1+"], S.D)), 1e-9),
        ("[L2+,D(z)] = 0", interior(commutator(G["L2+"], S.D)), 1e-9),
        ("[L0,D(z)] = -D(alpha)", interior(commutator(S.L0, S.D) + D(S.alpha)), 1e-9),
        ("[D(z),D(alpha)] = 0", interior(commutator(S.D, D(S.alpha))), 1e-12),
        ("tr(D(z) rho) = 0", abs(np.trace(S.D.apply(rho))), 1e-11),
        ("D(z) rho Hermitian for Hermitian rho",
         float(np.abs(S.D.apply(rho) - S.D.apply(rho).conj().T).max()), 1e-12),
    ]
    tr_row = np.eye(cutoff, dtype=complex).reshape(-1, order="F")
    for name, op in (("L0", S.L0), ("Lz", S.Lz), ("D(z)", S.D)):
        checks.append((f"trace preserved by {name}", float(np.abs(tr_row @ op.matrix[:, inner]).max()),
                       1e-10))
    for name in ("O+", "L1+", "L2+"):
        out = G[name].apply(rho)
        for oname, obs in (("x", x), ("p", p)):
            checks.append((f"{name}^T annihilates {oname}", abs(np.trace(obs @ out)), 1e-10))
    return [{"identity_name": n, "norm": float(v), "tolerance": tol, "pass": bool(v < tol)}
            for n, v, tol in checks]


def _squeeze_laws(s: float, sxx: float, spp: float, sxp: float) -> dict:
    half = 0.5 * (sxx + spp)
    c, sh = math.cosh(s), math.sinh(s)
    h2, xp2 = c * half + sh * sxp, sh * half + c * sxp
    d = 0.5 * (sxx - spp)
    return {
        "iM1": (h2 + d, h2 - d, xp2),
        "iM2": (math.exp(s) * sxx, math.exp(-s) * spp, sxp),
        "O0-I/2": (math.exp(s) * sxx, math.exp(s) * spp, math.exp(s) * sxp),
        "O+": (sxx + s / 2, spp + s / 2, sxp),
        "L1+": (sxx - s / 2, spp + s / 2, sxp),
        "L2+": (sxx, spp, sxp + s / 2),
    }


def squeezing_checks(state: GaussianState, strength: float = 0.1, cutoff: int = 40,
                     tolerance: float = 1e-6) -> list[dict]:
    """Second moments after rho -> exp(s G) rho for the six non-rotating generators.

    The exponential is taken of the truncated matrix and compared with the
    closed-form law for each generator.  ``state`` should sit well inside the
    cutoff; ``strength`` should be small.
    """
    S = build_superops(ModelParams(1.0), None, cutoff)
    rho = gaussian_to_density(state, cutoff)
    vec = rho.elements.reshape(-1, order="F")
    _, _, sxx, spp, sxp = moments(rho)
    expected = _squeeze_laws(strength, sxx, spp, sxp)
    out = []
    for name, law in expected.items():
        gen = scipy.sparse.csr_matrix(S.generators[name].matrix)
        w = scipy.sparse.linalg.expm_multiply(strength * gen, vec)
        got = moments(FockDensity(w.reshape(cutoff, cutoff, order="F")))[2:]
        err = float(np.max(np.abs(np.array(got) - np.array(law))))
        out.append({"generator": name, "strength": strength, "expected": list(law),
                    "observed": [float(v) for v in got], "error": err,
                    "tolerance": tolerance, "pass": bool(err < tolerance)})
    return out


def drive_invariance_checks(params: ModelParams, z: complex, cutoff: int = 32, max_degree: int = 8,
                            tolerance: float = 1e-6) -> dict:
    """Low-lying eigenvalues of L0 are eigenvalues of the driven generator Lz.

    Diffusion is replaced by :func:`vacuum_diffusion`, which leaves every
    eigenvalue unchanged.  Eigenvectors of L0 supported on ``|m><n|`` with
    ``m + n <= max_degree`` are then exact in the truncated basis.  Each one is
    mapped through ``exp(D(z))`` and the relative residual of ``Lz w = lam w`` is
    recorded.  Dense eigenvalues of squeezing generators are too ill-conditioned
    to be compared directly, which is why eigenpairs are transported instead.
    """
    S = build_superops(vacuum_diffusion(params), z, cutoff)
    w, V = scipy.linalg.eig(S.L0.matrix)
    m, n = np.meshgrid(np.arange(cutoff), np.arange(cutoff), indexing="ij")
    high = (m + n).reshape(-1, order="F") > max_degree
    low = np.linalg.norm(V[high], axis=0) < 1e-10 * np.linalg.norm(V, axis=0)
    Dz = scipy.sparse.csr_matrix(S.D.matrix)
    Lz = scipy.sparse.csr_matrix(S.Lz.matrix)
    W = scipy.sparse.linalg.expm_multiply(Dz, V[:, low])
    res = np.linalg.norm(Lz @ W - W * w[low], axis=0) / np.linalg.norm(W, axis=0)
    tail = max(tail_mass(W[:, j].reshape(cutoff, cutoff, order="F")) for j in range(W.shape[1]))
    worst = float(res.max()) if res.size else math.inf
    return {"eigenvalues": w[low], "max_residual": worst, "tail_mass": float(tail),
            "tolerance": tolerance, "pass": bool(worst < tolerance)}
