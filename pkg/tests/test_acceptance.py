"""Acceptance criteria: each test prints and records one PASS/FAIL line."""

import time

import numpy as np
import pytest

from conftest import CRITERION_LINES
from gaussdrive import verify
from gaussdrive.figures import FIG2_W0, figure_datasets, write_figures


def report(number: int, title: str, checks: list[dict], elapsed: float, limit: float | None,
           extra_ok: bool = True, extra: str = "") -> bool:
    failed = [c["name"] for c in checks if not c["pass"]]
    within = limit is None or elapsed < limit
    ok = not failed and within and extra_ok
    worst = ", ".join(f"{c['name']}={c['value']:.3g}" for c in checks[:3])
    budget = f"{elapsed:.1f}s" + (f" (limit {limit:g}s)" if limit is not None else "")
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {title}; {len(checks)} checks, {budget}"
    if failed:
        line += f"; failed {failed}"
    if extra:
        line += f"; {extra}"
    elif worst:
        line += f"; {worst}"
    CRITERION_LINES.append(line)
    print(line)
    return ok


def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def test_criterion_01_frequency_table():
    checks, dt = timed(verify.suite_omega_table)
    assert report(1, "renormalized-frequency table to 1e-3", checks, dt, 1.0)


def test_criterion_02_first_moments_vs_rk4():
    rng = np.random.default_rng(0)
    checks, dt = timed(lambda: verify.suite_first_moments(rng, n_sets=20))
    assert all(c["tolerance"] == 1e-7 and c["detail"]["n_sets"] == 20 for c in checks)
    assert {c["name"] for c in checks} == {f"first moments vs RK4 ({k})"
                                           for k in ("constant", "impulse", "heaviside", "harmonic", "sampled")}
    assert report(2, "closed-form first moments vs RK4, 20 sets x 5 forces, 1e-7", checks, dt, 10.0)


def test_criterion_03_covariance_vs_fock():
    checks, dt = timed(lambda: verify.suite_covariance(cutoff=48, times=(0.5, 1.0, 2.0, 5.0)))
    assert len(checks) == 3 and all(c["tolerance"] == 1e-4 for c in checks)
    assert report(3, "covariance closed forms vs Fock evolution at cutoff 48, 1e-4", checks, dt, 60.0)


def test_criterion_04_spectrum():
    checks, dt = timed(verify.suite_spectrum)
    names = {c["name"] for c in checks}
    assert {"underdamped spectrum, m+n<=4", "EP spectrum, m+n<=4 (extended precision)",
            "EP coalescence cluster radius"} <= names
    assert report(4, "Liouvillian spectrum vs analytic grid (1e-6), EP clusters (1e-4)", checks, dt, 30.0)


def test_criterion_05_algebra():
    checks, dt = timed(verify.suite_algebra)
    assert all(c["tolerance"] <= 1e-9 for c in checks)
    assert report(5, "superoperator algebra on interior blocks, 1e-9", checks, dt, 10.0)


def test_criterion_06_ep_continuity():
    checks, dt = timed(verify.suite_ep)
    assert report(6, "generic -> EP convergence O(omega^2), affine EP residual < 1e-10", checks, dt, 5.0)


def test_criterion_07_eta_independence():
    rng = np.random.default_rng(0)
    checks, dt = timed(lambda: verify.suite_eta_independence(rng, 48))
    assert report(7, "first moments independent of eta (bitwise closed form, 1e-5 Fock)", checks, dt, 30.0)


def test_criterion_08_steady_ellipse(tmp_path):
    rng = np.random.default_rng(0)
    t0 = time.perf_counter()
    checks = verify.suite_ellipse(rng, n=200)
    write_figures(tmp_path, n=200)
    dt = time.perf_counter() - t0
    files = sorted(p.name for p in tmp_path.glob("*ellipse*"))
    ok = len(files) == len(FIG2_W0)
    assert report(8, "steady orbits on the conic (1e-8), 4AC-B^2 > 0 on 200 draws, ellipse files", checks,
                  dt, 5.0, ok, f"ellipse files {files}")


def test_criterion_09_figure_datasets(tmp_path):
    t0 = time.perf_counter()
    a = write_figures(tmp_path / "a")
    b = write_figures(tmp_path / "b")
    dt = time.perf_counter() - t0
    expected = {f"{d.name}.csv" for d in figure_datasets()}
    names_a = {p.name for p in a}
    identical = [p.read_bytes() == q.read_bytes() for p, q in zip(a, b)]
    checks = [verify.check("every figure dataset written", len(expected - names_a), 0.5),
              verify.check("files byte-identical across runs", identical.count(False), 0.5)]
    assert [p.name for p in a] == [p.name for p in b]
    assert report(9, f"figures subcommand emits {len(expected)} trajectory files, byte-identical", checks,
                  dt, None)


def test_criterion_10_stationary():
    rng = np.random.default_rng(0)
    checks, dt = timed(lambda: verify.suite_stationary(rng, 48))
    assert report(10, "covariance at 50/gamma vs stationary formulas (1e-8), GKSL nbar=1 (1e-6)", checks,
                  dt, 20.0)
