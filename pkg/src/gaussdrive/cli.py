"""Command-line front end.

Every subcommand reads an optional JSON run configuration, applies ``--set``
overrides and writes data files into the output directory (``--out``, else
``$GAUSSDRIVE_OUT``, else ``./gaussdrive-out``).  Errors are reported as one
JSON line on stderr with a nonzero exit status.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .driving import Harmonic, force_from_dict, force_to_dict, forced_trajectory, harmonic_response
from .figures import ellipse_record, write_figures, write_xy_csv
from .fock import build_superops, resolved_spectrum, sector_spectrum, vacuum_diffusion
from .gaussian import GaussianState, Grid2D, write_wigner_csv
from .model import ModelParams, ParameterError, Regime, renormalized_frequency
from .propagator import _is_critical, evolve_covariance
from .verify import eigen_grid, ep_cluster_size, run_verify

ENV_OUT = "GAUSSDRIVE_OUT"
DEFAULT_OUT = "gaussdrive-out"
# exponent of the moment growth beyond which an unstable run is refused
MAX_GROWTH_EXPONENT = 50.0
OUTPUT_KINDS = ("trajectory", "wigner", "ellipse", "spectrum", "verify")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    params: ModelParams
    initial: GaussianState = field(default_factory=GaussianState.vacuum)
    force: object = None
    t_max: float = 10.0
    n_samples: int = 1000
    outputs: list = field(default_factory=lambda: ["trajectory"])
    grid: Grid2D | None = None
    wigner_time: float | None = None
    spectrum: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (math.isfinite(self.t_max) and self.t_max > 0):
            raise ConfigError(f"t_max must be > 0, got {self.t_max}")
        if self.n_samples < 2:
            raise ConfigError(f"n_samples must be >= 2, got {self.n_samples}")
        bad = [o for o in self.outputs if o not in OUTPUT_KINDS]
        if bad:
            raise ConfigError(f"unknown outputs {bad}; choose from {list(OUTPUT_KINDS)}")
        if "wigner" in self.outputs and self.grid is None:
            raise ConfigError("wigner output requires a grid")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data)
        known = {"params", "initial", "force", "t_max", "n_samples", "outputs", "grid",
                 "wigner_time", "spectrum"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "params" not in data:
            raise ConfigError("config needs a 'params' object")
        kw = {"params": ModelParams.from_dict(data["params"])}
        if data.get("initial") is not None:
            kw["initial"] = GaussianState.from_dict(data["initial"])
        if data.get("force") is not None:
            kw["force"] = force_from_dict(data["force"])
        if "t_max" in data:
            kw["t_max"] = float(data["t_max"])
        if "n_samples" in data:
            n = data["n_samples"]
            if int(n) != n:
                raise ConfigError(f"n_samples must be an integer, got {n}")
            kw["n_samples"] = int(n)
        if "outputs" in data:
            kw["outputs"] = list(data["outputs"])
        if data.get("grid") is not None:
            try:
                kw["grid"] = Grid2D.from_dict(data["grid"])
            except KeyError as exc:
                raise ConfigError(f"grid is missing {exc}") from None
        if data.get("wigner_time") is not None:
            kw["wigner_time"] = float(data["wigner_time"])
        if data.get("spectrum") is not None:
            kw["spectrum"] = dict(data["spectrum"])
        return cls(**kw)

    def to_dict(self) -> dict:
        return {"params": self.params.to_dict(), "initial": self.initial.to_dict(),
                "force": None if self.force is None else force_to_dict(self.force),
                "t_max": self.t_max, "n_samples": self.n_samples, "outputs": list(self.outputs)}


# --------------------------------------------------------------------- config plumbing

def parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_set(data: dict, key: str, value) -> None:
    """Set a dotted key (``params.omega0``) in a nested dict, creating levels as needed."""
    parts = key.split(".")
    node = data
    for part in parts[:-1]:
        if node.get(part) is None:
            node[part] = {}
        node = node[part]
        if not isinstance(node, dict):
            raise ConfigError(f"cannot set {key!r}: {part!r} is not an object")
    node[parts[-1]] = value


def parse_sweep(spec: str) -> tuple[str, np.ndarray]:
    try:
        key, rng = spec.split("=", 1)
        a, b, n = rng.split(":")
        values = np.linspace(float(a), float(b), int(n))
    except ValueError:
        raise ConfigError(f"--sweep expects KEY=start:stop:n, got {spec!r}") from None
    if int(n) < 1:
        raise ConfigError("--sweep needs n >= 1")
    return key, values


def load_config(args) -> dict:
    data: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        apply_set(data, k, parse_value(v))
    return data


def output_dir(args) -> Path:
    return Path(args.out or os.environ.get(ENV_OUT) or DEFAULT_OUT)


def time_grid(cfg: RunConfig, log_grid: bool) -> np.ndarray:
    if log_grid:
        n = cfg.n_samples - 1
        return np.concatenate([[0.0], np.logspace(math.log10(cfg.t_max * 1e-4),
                                                  math.log10(cfg.t_max), n)])
    return np.linspace(0.0, cfg.t_max, cfg.n_samples)


def check_horizon(params: ModelParams, t_max: float) -> None:
    info = renormalized_frequency(params)
    if info.regime is not Regime.UNSTABLE:
        return
    rate = max(info.omega_abs - params.gamma / 2, 0.0) if info.omega_sq < 0 else 0.0
    if 2 * rate * t_max > MAX_GROWTH_EXPONENT:
        raise ConfigError(f"unstable regime: second moments grow like exp({2 * rate * t_max:.1f}) "
                          f"over t_max = {t_max}; shorten t_max")


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# --------------------------------------------------------------------- commands

def cmd_trajectory(cfg: RunConfig, out: Path, log_grid: bool = False) -> list[Path]:
    check_horizon(cfg.params, cfg.t_max)
    t = time_grid(cfg, log_grid)
    s0 = cfg.initial
    q, p = forced_trajectory(cfg.params, cfg.force, s0.q, s0.p, t)
    sol = evolve_covariance(cfg.params, s0, t)
    sxx, spp, sxp = sol.moments()
    cols = {"t": t, "q": q, "p": p, "mu": sol.mu_t, "nu": sol.nu_t, "kappa": sol.kappa_t,
            "sigma_xx": sxx, "sigma_pp": spp, "sigma_xp": sxp, "R": sol.R_t}
    cols = {k: np.broadcast_to(np.asarray(v, dtype=float), t.shape) for k, v in cols.items()}
    path = out / "trajectory.csv"
    write_xy_csv(path, cols)
    return [path]


def cmd_wigner(cfg: RunConfig, out: Path) -> list[Path]:
    if cfg.grid is None:
        raise ConfigError("wigner output requires a grid")
    t = cfg.t_max if cfg.wigner_time is None else cfg.wigner_time
    check_horizon(cfg.params, t)
    s0 = cfg.initial
    q, p = forced_trajectory(cfg.params, cfg.force, s0.q, s0.p, t)
    state = evolve_covariance(cfg.params, s0, t).state(float(q), float(p))
    path = out / "wigner.csv"
    write_wigner_csv(path, state, cfg.grid)
    meta = out / "wigner_state.json"
    write_json(meta, {"t": t, "state": state.to_dict()})
    return [path, meta]


def cmd_ellipse(cfg: RunConfig, out: Path) -> list[Path]:
    if not isinstance(cfg.force, Harmonic):
        raise ConfigError("ellipse output needs a harmonic force")
    R, Om = cfg.force.R, cfg.force.Omega
    if Om == 0:
        raise ConfigError("ellipse output needs Omega != 0")
    rec = ellipse_record(cfg.params, R, Om)
    path = out / "ellipse.json"
    write_json(path, rec)
    h = harmonic_response(cfg.params, R, Om)
    t = np.linspace(0.0, 2 * math.pi / abs(Om), cfg.n_samples)
    q, p = h.steady(t)
    orbit = out / "steady_orbit.csv"
    write_xy_csv(orbit, {"t": t, "q": q, "p": p})
    return [path, orbit]


def cmd_spectrum(cfg: RunConfig, out: Path) -> list[Path]:
    opts = {"cutoff": 24, "diffusion": "vacuum", "max_mn": 4, "dps": 100}
    unknown = set(cfg.spectrum) - set(opts)
    if unknown:
        raise ConfigError(f"unknown spectrum options: {sorted(unknown)}")
    opts.update(cfg.spectrum)
    if opts["diffusion"] not in ("vacuum", "config"):
        raise ConfigError("spectrum.diffusion must be 'vacuum' or 'config'")
    params = vacuum_diffusion(cfg.params) if opts["diffusion"] == "vacuum" else cfg.params
    cutoff = int(opts["cutoff"])
    w, frac = resolved_spectrum(build_superops(params, None, cutoff).L0)
    w = w[np.lexsort((w.imag, -w.real))]
    paths = [out / "spectrum.csv", out / "analytic.csv"]
    write_xy_csv(paths[0], {"re": w.real, "im": w.imag})
    grid = eigen_grid(params, int(opts["max_mn"]))
    with open(paths[1], "w") as fh:
        fh.write("m,n,sign,re,im,nearest_abs_err\n")
        for m, n, s, lam in grid:
            err = float(np.min(np.abs(w - lam))) if w.size else math.inf
            fh.write(f"{m},{n},{s},{lam.real:.17g},{lam.imag:.17g},{err:.17g}\n")
    if _is_critical(params) and params.gamma > 0:
        g = params.gamma
        kmax = 2 * int(opts["max_mn"])
        exact = None
        if opts["diffusion"] == "vacuum":
            exact = sector_spectrum(params, kmax, dps=int(opts["dps"]))
        clusters = []
        for k in range(kmax + 1):
            centre = -k * g / 2
            inside = w[np.abs(w - centre) < g / 4]
            rec = {"k": k, "value": centre, "multiplicity": ep_cluster_size(k),
                   "dense_count": int(inside.size),
                   "dense_centroid_err": float(abs(inside.mean() - centre)) if inside.size else None,
                   "dense_radius": float(np.abs(inside - centre).max()) if inside.size else None}
            if exact is not None:
                ex = exact[np.abs(exact - centre) < g / 4]
                rec["extended_count"] = int(ex.size)
                rec["extended_radius"] = float(np.abs(ex - centre).max())
            clusters.append(rec)
        path = out / "ep_clusters.json"
        write_json(path, {"cutoff": cutoff, "dps": opts["dps"], "clusters": clusters})
        paths.append(path)
    return paths


def cmd_verify(level: str, seed: int, out: Path) -> tuple[dict, list[Path]]:
    report = run_verify(level, seed)
    report.pop("timings", None)  # wall-clock times would break byte-identical reports
    path = out / "verify.json"
    write_json(path, report)
    return report, [path]


def run_point(command: str, data: dict, out: Path, args) -> list[Path]:
    cfg = RunConfig.from_dict(data)
    out.mkdir(parents=True, exist_ok=True)
    if command == "trajectory":
        return cmd_trajectory(cfg, out, args.log_grid)
    if command == "wigner":
        return cmd_wigner(cfg, out)
    if command == "ellipse":
        return cmd_ellipse(cfg, out)
    if command == "spectrum":
        return cmd_spectrum(cfg, out)
    raise ConfigError(f"unknown command {command!r}")


# --------------------------------------------------------------------- entry point

class _ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Raise instead of exiting so usage errors share the JSON error format."""

    def error(self, message):
        raise _ArgumentError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help=f"output directory (default ${ENV_OUT} or ./{DEFAULT_OUT})")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
    common.add_argument("--set", action="append", metavar="K=V",
                        help="override a config entry, dotted keys, JSON values")
    common.add_argument("--sweep", metavar="K=a:b:n", help="run n points with K from a to b")
    common.add_argument("--log-grid", action="store_true", help="log-spaced sample times")
    parser = _Parser(prog="gaussdrive", description="Driven open quantum oscillator toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("trajectory", "moments versus time (CSV)"),
                       ("wigner", "Wigner function on a grid (CSV)"),
                       ("ellipse", "steady-state ellipse under harmonic driving"),
                       ("spectrum", "Liouvillian spectrum from the Fock-space oracle"),
                       ("figures", "all worked-example datasets")):
        sub.add_parser(name, parents=[common], help=text)
    v = sub.add_parser("verify", parents=[common], help="run the verification suites")
    v.add_argument("--level", choices=("fast", "full"), default="fast")
    return parser


def _fail(kind: str, message: str, code: int = 2) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _ArgumentError as exc:
        return _fail("usage", str(exc))
    out = output_dir(args)
    try:
        if args.command == "verify":
            out.mkdir(parents=True, exist_ok=True)
            report, _ = cmd_verify(args.level, args.seed, out)
            print(json.dumps(report, sort_keys=True))
            if not report["pass"]:
                failed = [c["name"] for c in report["checks"] if not c["pass"]]
                return _fail("verification", f"failed checks: {failed}", 1)
            return 0
        if args.command == "figures":
            for path in write_figures(out):
                print(path)
            return 0
        data = load_config(args)
        if args.sweep:
            key, values = parse_sweep(args.sweep)
            points = []
            for i, val in enumerate(values):
                d = copy.deepcopy(data)
                apply_set(d, key, float(val))
                RunConfig.from_dict(d)  # validate every point before starting
                points.append((i, float(val), d))
            with ThreadPoolExecutor() as pool:
                futures = [pool.submit(run_point, args.command, d, out / f"point_{i:03d}", args)
                           for i, _, d in points]
                results = [f.result() for f in futures]
            out.mkdir(parents=True, exist_ok=True)
            write_json(out / "sweep.json", {"key": key, "points": [
                {"index": i, "value": v, "dir": f"point_{i:03d}"} for i, v, _ in points]})
            for paths in results:
                for p in paths:
                    print(p)
            return 0
        for p in run_point(args.command, data, out, args):
            print(p)
        return 0
    except (ConfigError, ParameterError, ValueError, KeyError, TypeError) as exc:
        return _fail(type(exc).__name__, str(exc).strip("'\""))
    except ArithmeticError as exc:
        return _fail(type(exc).__name__, str(exc), 3)


if __name__ == "__main__":
    sys.exit(main())
