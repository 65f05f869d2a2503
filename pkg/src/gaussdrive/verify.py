"""Verification suites: closed forms against numerical oracles and invariants.

Every suite returns a list of check records ``{name, value, tolerance, pass}``
(plus an optional ``detail`` dict) so the CLI can emit them as JSON.  Random
draws come from a seeded ``numpy`` generator, so reports are reproducible.
"""

from __future__ import annotations

import math
import time
from typing import Callable

import numpy as np

from .driving import (Constant, Harmonic, Heaviside, Impulse, Sampled, forced_trajectory,
                      harmonic_response, steady_ellipse)
from .fock import (algebra_checks, build_superops, drive_invariance_checks, driving_superop, evolve_density,
                   fourth_cumulant_residual, gaussian_to_density, moments, resolved_spectrum,
                   sector_spectrum, squeezing_checks, stationary_density, vacuum_diffusion)
from .gaussian import GaussianState, StateError, second_moments
from .model import ModelParams, Regime, liouvillian_eigenvalue, renormalized_frequency
from .oracles import rk4_first_moments
from .propagator import (CovarianceError, drive_from_target, ep_displacement, evolve_covariance,
                         free_displacement, stationary_state)

LEVELS = {"fast": {"cutoff": 32, "n_sets": 6, "n_ellipse": 50},
          "full": {"cutoff": 64, "n_sets": 20, "n_ellipse": 200}}

# reference frequencies of the six example parameter sets: (omega0, theta1, theta2) -> omega
OMEGA_TABLE = [
    ((5.0, 1.0, 1.0), 4.950),
    ((1 / math.sqrt(2), 1.0, 1.0), 0.0),
    ((0.6, 1.0, 1.0), 0.374j),
    ((2.0, 1.0, 1.0), 1.871),
    ((2.5, 1.0, 1.5), 2.332),
    ((0.8, 1.0, 1.5), 0.415j),
]

EP_PARAMS = ModelParams(1 / math.sqrt(2), 1.0, 1.0, 1.0)
UNDERDAMPED_PARAMS = ModelParams(1.0, 0.3, 0.4, 0.3)


def check(name: str, value: float, tolerance: float, detail: dict | None = None,
          below: bool = True) -> dict:
    value = float(value)
    ok = value < tolerance if below else value > tolerance
    rec = {"name": name, "value": value, "tolerance": tolerance, "pass": bool(ok and math.isfinite(value))}
    if detail:
        rec["detail"] = detail
    return rec


# --------------------------------------------------------------------- random draws

def random_stable_params(rng: np.random.Generator, n: int) -> list[ModelParams]:
    """Parameter sets with gamma > 0 outside the Unstable regime."""
    out = []
    while len(out) < n:
        p = ModelParams(omega0=rng.uniform(0.3, 3.0), gamma=rng.uniform(0.2, 2.0),
                        theta1=rng.uniform(-1.0, 1.0), theta2=rng.uniform(-1.0, 1.0),
                        eta0=-rng.uniform(0.2, 3.0), eta1=rng.uniform(-0.3, 0.3),
                        eta2=rng.uniform(-0.3, 0.3))
        if renormalized_frequency(p).regime is not Regime.UNSTABLE:
            out.append(p)
    return out


def random_forces(rng: np.random.Generator) -> list:
    """One instance of every force model with random coefficients."""
    a_t, b_t = rng.uniform(0.5, 9.5, size=2)
    knots = np.sort(rng.uniform(0.0, 10.0, size=12))
    return [
        Constant(rng.normal(), rng.normal()),
        Impulse(rng.normal(), float(a_t), rng.normal(), float(b_t)),
        Heaviside(rng.normal(), float(a_t), rng.normal(), float(b_t)),
        Harmonic(rng.uniform(0.2, 2.0), rng.uniform(0.2, 3.0)),
        Sampled(tuple(knots), tuple(rng.normal(size=12)), tuple(rng.normal(size=12))),
    ]


def eigen_grid(params: ModelParams, max_mn: int = 4) -> list[tuple[int, int, int, complex]]:
    out = []
    for m in range(max_mn + 1):
        for n in range(m + 1):
            if m + n > max_mn:
                continue
            for sign in ((1, -1) if n else (1,)):
                out.append((m, n, sign, liouvillian_eigenvalue(params, m, n, sign)))
    return out


def ep_cluster_size(k: int) -> int:
    """Number of (m, n, sign) with 2m - n = k, i.e. eigenvalues coalescing at -k gamma / 2."""
    return sum(2 if 2 * m - k > 0 else 1 for m in range((k + 1) // 2, k + 1))


# --------------------------------------------------------------------- suites

def suite_omega_table() -> list[dict]:
    worst = 0.0
    for (w0, t1, t2), expect in OMEGA_TABLE:
        w = renormalized_frequency(ModelParams(w0, 1.0, t1, t2)).omega
        worst = max(worst, abs(w - expect))
    return [check("omega table reproduces reference values", worst, 1e-3)]


def suite_first_moments(rng: np.random.Generator, n_sets: int = 20, dt: float = 1e-4) -> list[dict]:
    t = np.linspace(0.0, 10.0, 201)
    cases = []
    for p in random_stable_params(rng, n_sets):
        q0, p0 = rng.normal(size=2)
        for f in random_forces(rng):
            cases.append((p, f, float(q0), float(p0)))
    worst: dict[str, float] = {}
    q0s = np.array([c[2] for c in cases])
    p0s = np.array([c[3] for c in cases])
    ref = rk4_first_moments([(p, f) for p, f, _, _ in cases], q0s, p0s, t, dt=dt)
    for k, (p, f, q0, p0) in enumerate(cases):
        q, pp = forced_trajectory(p, f, q0, p0, t)
        err = max(np.abs(q - ref[k, :, 0]).max(), np.abs(pp - ref[k, :, 1]).max())
        worst[f.kind] = max(worst.get(f.kind, 0.0), float(err))
    return [check(f"first moments vs RK4 ({kind})", err, 1e-7, {"n_sets": n_sets})
            for kind, err in worst.items()]


COVARIANCE_SETS = {
    "gksl": ModelParams.from_nbar(1.0, 0.5, 0.5),
    "generic-a": ModelParams(1.0, 0.5, theta1=0.2, theta2=0.1, eta0=-1.0, eta1=0.1, eta2=0.05),
    "generic-b": ModelParams(1.4, 0.8, theta1=-0.15, theta2=0.25, eta0=-1.2, eta1=-0.08, eta2=0.12),
}
COVARIANCE_INITIAL = GaussianState(mu=0.4, nu=0.1, kappa=0.2, q=0.3, p=-0.2)


def suite_covariance(cutoff: int = 48, times=(0.5, 1.0, 2.0, 5.0)) -> list[dict]:
    out = []
    rho0 = gaussian_to_density(COVARIANCE_INITIAL, cutoff)
    for name, params in COVARIANCE_SETS.items():
        S = build_superops(params, None, cutoff)
        states = evolve_density(S.L0, rho0, max(times), t_eval=list(times))
        sol = evolve_covariance(params, COVARIANCE_INITIAL, np.asarray(times))
        sxx, spp, sxp = sol.moments()
        err = 0.0
        for i, r in enumerate(states):
            _, _, fx, fp, fxp = moments(r)
            err = max(err, abs(fx - sxx[i]), abs(fp - spp[i]), abs(fxp - sxp[i]))
        out.append(check(f"covariance closed form vs Fock evolution ({name})", err, 1e-4,
                         {"cutoff": cutoff}))
    return out


def _match_grid(eigs: np.ndarray, grid) -> float:
    return max(float(np.min(np.abs(eigs - lam))) for *_, lam in grid)


def suite_spectrum(dense_cutoff: int = 24, dps: int = 100) -> list[dict]:
    out = []
    # underdamped: dense eigensolve of the truncated generator
    ud = vacuum_diffusion(UNDERDAMPED_PARAMS)
    w, _ = resolved_spectrum(build_superops(ud, None, dense_cutoff).L0)
    out.append(check("underdamped spectrum, m+n<=4", _match_grid(w, eigen_grid(ud)), 1e-6,
                     {"cutoff": dense_cutoff}))
    gk = ModelParams.from_nbar(1.0, 0.3, 0.5)
    w = np.linalg.eigvals(build_superops(gk, None, 40).L0.matrix)
    grid = [g for g in eigen_grid(gk, 4) if g[0] + g[1] / 2 <= 2]
    out.append(check("thermal GKSL spectrum, m+n/2<=2 (cutoff 40)", _match_grid(w, grid), 1e-6))

    # exceptional point
    ep = vacuum_diffusion(EP_PARAMS)
    g = ep.gamma
    w, _ = resolved_spectrum(build_superops(ep, None, dense_cutoff).L0)
    count_bad, centroid_err, spread = 0, 0.0, 0.0
    for k in range(9):
        inside = w[np.abs(w + k * g / 2) < g / 4]
        count_bad += inside.size != ep_cluster_size(k)
        if inside.size:
            centroid_err = max(centroid_err, abs(inside.mean() + k * g / 2))
            spread = max(spread, float(np.abs(inside + k * g / 2).max()))
    out.append(check("EP dense clusters have the coalescence multiplicity", count_bad, 0.5,
                     {"cutoff": dense_cutoff}))
    # a nine-fold defective cluster only keeps its centroid to ~1e-6 in double precision
    out.append(check("EP dense cluster centroids", centroid_err, 1e-5,
                     {"cutoff": dense_cutoff, "double_precision_cluster_radius": spread}))
    ws = sector_spectrum(ep, 8, dps=dps)
    out.append(check("EP spectrum, m+n<=4 (extended precision)", _match_grid(ws, eigen_grid(ep)), 1e-6,
                     {"dps": dps}))
    radius = 0.0
    for k in range(9):
        inside = ws[np.abs(ws + k * g / 2) < g / 4]
        radius = max(radius, float(np.abs(inside + k * g / 2).max()))
    out.append(check("EP coalescence cluster radius", radius, 1e-4, {"dps": dps}))
    out.append(check("EP max imaginary part", float(np.abs(ws.imag).max()), 1e-4))

    r = drive_invariance_checks(UNDERDAMPED_PARAMS, 0.5 + 0.2j)
    out.append(check("driven generator shares the low eigenvalues", r["max_residual"], r["tolerance"],
                     {"eigenpairs": int(r["eigenvalues"].size)}))
    return out


def suite_algebra(seed: int = 0, cutoff: int = 24) -> list[dict]:
    params = ModelParams(1.3, 0.4, 0.3, -0.5, eta0=-1.5, eta1=0.2, eta2=0.1)
    return [check(r["identity_name"], r["norm"], r["tolerance"])
            for r in algebra_checks(params, 0.3 - 0.7j, cutoff, seed)]


def suite_squeezing(cutoff: int = 40) -> list[dict]:
    state = GaussianState(0.6, 0.2, 0.3, 0.2, -0.1)
    out = []
    for s in (0.1, -0.1):
        out += [check(f"exp({s:+g} {r['generator']}) second-moment law", r["error"], r["tolerance"])
                for r in squeezing_checks(state, s, cutoff)]
    return out


def suite_ep() -> list[dict]:
    out = []
    base = EP_PARAMS
    t = np.linspace(0.0, 10.0, 501)
    diffs = []
    for w in (1e-4, 1e-5, 1e-6):
        p = base.replace(omega0=math.sqrt(0.5 + w**2))
        qg, pg = free_displacement(p, 1.0, 1.0, t, method="generic")
        qe, pe = free_displacement(p, 1.0, 1.0, t, method="ep")
        diffs.append(max(np.abs(qg - qe).max(), np.abs(pg - pe).max()))
    rates = [diffs[i] / diffs[i + 1] for i in range(2)]
    # O(omega^2): a decade in omega is two decades in the difference
    out.append(check("generic -> EP convergence order", max(abs(math.log10(r) - 2) for r in rates), 0.1,
                     {"diffs": diffs}))
    drive = drive_from_target(base, 2.0, -2.0)
    q, p = ep_displacement(base, drive, 1.0, 1.0, t)
    worst = 0.0
    for series, target in ((q, drive.target_q), (p, drive.target_p)):
        r = (series - target) * np.exp(base.gamma * t / 2)
        coef = np.polyfit(t, r, 1)
        worst = max(worst, float(np.abs(r - np.polyval(coef, t)).max()))
    out.append(check("EP residual is affine in t", worst, 1e-10))
    return out


def suite_eta_independence(rng: np.random.Generator, cutoff: int = 32) -> list[dict]:
    out = []
    t = np.linspace(0.0, 10.0, 101)
    identical = True
    for p in random_stable_params(rng, 5):
        for f in random_forces(rng):
            ref = forced_trajectory(p, f, 0.4, -0.7, t)
            other = p.replace(eta0=-rng.uniform(0.2, 3.0), eta1=rng.normal(), eta2=rng.normal())
            got = forced_trajectory(other, f, 0.4, -0.7, t)
            identical &= all(np.array_equal(a, b) for a, b in zip(ref, got))
    out.append(check("closed-form first moments bitwise identical across eta", 0.0 if identical else 1.0, 0.5))

    base = ModelParams(1.2, 0.5, 0.2, 0.1)
    force = Harmonic(0.3, 0.9)
    s0 = GaussianState.vacuum(0.5, -0.3)
    rho0 = gaussian_to_density(s0, cutoff)
    ts = [0.5, 1.0, 2.0, 4.0]
    results = []
    for eta in ({"eta0": -0.5}, {"eta0": -0.8, "eta1": 0.1, "eta2": -0.05}):
        S = build_superops(base.replace(**eta), None, cutoff)
        a = S.a
        states = evolve_density(S.L0, rho0, max(ts), t_eval=ts,
                                drive=lambda tt, a=a: driving_superop(a, complex(force.value(tt))))
        results.append(np.array([moments(r)[:2] for r in states]))
    out.append(check("Fock first moments agree across eta (harmonic drive)",
                     float(np.abs(results[0] - results[1]).max()), 1e-5))
    q, p = forced_trajectory(base, force, s0.q, s0.p, np.asarray(ts))
    out.append(check("Fock first moments match harmonic closed form",
                     float(np.abs(results[0] - np.column_stack([q, p])).max()), 1e-5))
    return out


def suite_ellipse(rng: np.random.Generator, n: int = 200) -> list[dict]:
    worst, min_disc = 0.0, math.inf
    for p in random_stable_params(rng, n):
        R, Om = rng.uniform(0.2, 2.0), rng.uniform(0.1, 3.0)
        h = harmonic_response(p, R, Om)
        e = steady_ellipse(p, R, Om)
        ts = np.linspace(0.0, 2 * math.pi / Om, 64)
        q, pp = h.steady(ts)
        worst = max(worst, float(np.abs(e.A * q**2 + e.B * q * pp + e.C * pp**2 - 1).max()))
        min_disc = min(min_disc, e.discriminant)
    return [check("steady orbit satisfies the conic", worst, 1e-8, {"draws": n}),
            check("ellipse discriminant 4AC - B^2 > 0", min_disc, 0.0, below=False)]


def suite_stationary(rng: np.random.Generator, cutoff: int = 48) -> list[dict]:
    worst, used, slow = 0.0, 0, 0
    while used < 10:
        p = random_stable_params(rng, 1)[0]
        info = renormalized_frequency(p)
        if info.omega_sq < 0 and info.omega_abs > p.gamma / 4:
            # deviations decay at gamma - 2|omega|; 50/gamma is not "long" for these
            slow += 1
            continue
        s0 = GaussianState(rng.uniform(0.2, 1.0), rng.uniform(0, 0.5), rng.normal())
        try:
            b = second_moments(stationary_state(p))
            sol = evolve_covariance(p, s0, 50 / p.gamma)
        except (CovarianceError, StateError):
            continue  # diffusion not compatible with a physical state
        used += 1
        a = np.array(sol.moments(), dtype=float)
        worst = max(worst, float(np.abs(a - [b.sxx, b.spp, b.sxp]).max()))
    out = [check("covariance at t=50/gamma equals stationary formulas", worst, 1e-8,
                 {"draws": used, "skipped_slow_overdamped": slow})]
    cutoff = min(cutoff, 48)
    rho = stationary_density(build_superops(ModelParams.from_nbar(1.0, 0.5, 1.0), None, cutoff).L0)
    _, _, sxx, spp, sxp = moments(rho)
    out.append(check("Fock stationary GKSL nbar=1 moments = 3/2",
                     max(abs(sxx - 1.5), abs(spp - 1.5), abs(sxp)), 1e-6, {"cutoff": cutoff}))
    return out


def suite_gaussian_closure(cutoff: int = 40) -> list[dict]:
    p = ModelParams(1.0, 0.4, 0.3, 0.2, eta0=-0.6, eta1=0.05, eta2=0.02)
    S = build_superops(p, None, cutoff)
    rho = evolve_density(S.L0, gaussian_to_density(GaussianState(0.4, 0.1, 0.2, 0.5, 0.3), cutoff), 2.0)
    return [check("Gaussianity preserved (fourth cumulants)", fourth_cumulant_residual(rho), 1e-4)]


def run_verify(level: str = "fast", seed: int = 0,
               progress: Callable[[str], None] | None = None) -> dict:
    """Run every suite and return ``{level, seed, pass, checks, timings}``."""
    if level not in LEVELS:
        raise ValueError(f"unknown level {level!r}; choose from {sorted(LEVELS)}")
    cfg = LEVELS[level]
    rng = np.random.default_rng(seed)
    cutoff = cfg["cutoff"]
    suites = [
        ("omega_table", suite_omega_table),
        ("first_moments", lambda: suite_first_moments(rng, cfg["n_sets"])),
        ("covariance", lambda: suite_covariance(cutoff)),
        ("spectrum", suite_spectrum),
        ("algebra", lambda: suite_algebra(seed)),
        ("squeezing", suite_squeezing),
        ("ep", suite_ep),
        ("eta_independence", lambda: suite_eta_independence(rng, cutoff)),
        ("ellipse", lambda: suite_ellipse(rng, cfg["n_ellipse"])),
        ("stationary", lambda: suite_stationary(rng, cutoff)),
        ("gaussian_closure", lambda: suite_gaussian_closure(min(cutoff, 48))),
    ]
    checks, timings = [], {}
    for name, fn in suites:
        if progress:
            progress(name)
        t0 = time.perf_counter()
        for rec in fn():
            rec["suite"] = name
            checks.append(rec)
        timings[name] = time.perf_counter() - t0
    return {"level": level, "seed": seed, "pass": all(c["pass"] for c in checks),
            "checks": checks, "timings": timings}
