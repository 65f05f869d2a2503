"""Phase-space trajectory datasets for the example parameter sets (data files only)."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .driving import ForceModel, Harmonic, Impulse, force_to_dict, forced_trajectory, steady_ellipse
from .model import ModelParams, renormalized_frequency
from .propagator import drive_from_target, driven_displacement

N_SAMPLES = 1000


@dataclass(frozen=True)
class Dataset:
    name: str
    figure: str
    params: ModelParams
    q0: float
    p0: float
    t_max: float
    force: ForceModel | None = None
    target: tuple[float, float] | None = None
    variant: str | None = None
    notes: dict = field(default_factory=dict)

    def trajectory(self, n: int = N_SAMPLES):
        t = np.linspace(0.0, self.t_max, n)
        if self.target is not None:
            drive = drive_from_target(self.params, *self.target)
            q, p = driven_displacement(self.params, drive, self.q0, self.p0, t)
        else:
            q, p = forced_trajectory(self.params, self.force, self.q0, self.p0, t)
        return t, np.asarray(q, dtype=float), np.asarray(p, dtype=float)

    def manifest_entry(self) -> dict:
        info = renormalized_frequency(self.params)
        w = info.omega
        entry = {
            "file": f"{self.name}.csv",
            "figure": self.figure,
            "params": self.params.to_dict(),
            "initial": {"q": self.q0, "p": self.p0},
            "t_max": self.t_max,
            "regime": info.regime.value,
            "omega": {"re": w.real, "im": w.imag},
            "driven": self.force is not None or self.target is not None,
        }
        if self.force is not None:
            entry["force"] = force_to_dict(self.force)
        if self.target is not None:
            entry["target"] = {"q": self.target[0], "p": self.target[1]}
        if self.variant is not None:
            entry["variant"] = self.variant
        entry.update(self.notes)
        return entry


def _tag(w0: float) -> str:
    return {5.0: "w0_5", 2.0: "w0_2", 0.6: "w0_0.6", 0.8: "w0_0.8", 2.5: "w0_2.5"}.get(
        w0, "w0_ep")


FIG1_W0 = {"1a": (5.0, 1 / math.sqrt(2), 0.6), "1b": (2.0, 1 / math.sqrt(2), 0.6)}
FIG2_W0 = (2.5, math.sqrt(13) / 4, 0.8)

# panel 1b is run with two impulse strengths; both are emitted and labelled
IMPULSE_VARIANTS = {
    "strong": {"real": Impulse(A=2.0, a_time=0.6), "imag": Impulse(B=2.0, b_time=0.6)},
    "weak": {"real": Impulse(A=0.5, a_time=0.5), "imag": Impulse(B=0.5, b_time=0.5)},
}


def figure_datasets() -> list[Dataset]:
    out = []
    for w0 in FIG1_W0["1a"]:
        p = ModelParams(w0, 1.0, 1.0, 1.0)
        out.append(Dataset(f"fig1a_{_tag(w0)}_free", "1a", p, 1.0, 1.0, 10.0))
        out.append(Dataset(f"fig1a_{_tag(w0)}_constant", "1a", p, 1.0, 1.0, 10.0, target=(2.0, -2.0)))
    for w0 in FIG1_W0["1b"]:
        p = ModelParams(w0, 1.0, 1.0, 1.0)
        out.append(Dataset(f"fig1b_{_tag(w0)}_free", "1b", p, -2.0, 2.0, 10.0))
        for variant, kicks in IMPULSE_VARIANTS.items():
            out.append(Dataset(f"fig1b_{_tag(w0)}_real_impulse_{variant}", "1b", p, -2.0, 2.0, 10.0,
                               force=kicks["real"], variant=variant))
            if w0 == 2.0:
                out.append(Dataset(f"fig1b_{_tag(w0)}_imag_impulse_{variant}", "1b", p, -2.0, 2.0,
                                   10.0, force=kicks["imag"], variant=variant))
    for w0 in FIG2_W0:
        p = ModelParams(w0, 1.0, 1.0, 1.5)
        panel = "2b" if w0 == 0.8 else "2a"
        out.append(Dataset(f"fig2_{_tag(w0)}_free", panel, p, 1.0, 1.0, 40.0))
        out.append(Dataset(f"fig2_{_tag(w0)}_harmonic", panel, p, 1.0, 1.0, 40.0,
                           force=Harmonic(R=1.0, Omega=1.0)))
    return out


def write_xy_csv(path: Path, cols: dict[str, np.ndarray]) -> None:
    names = list(cols)
    arrs = [np.asarray(cols[k], dtype=float) + 0.0 for k in names]  # + 0.0 drops negative zeros
    with open(path, "w", newline="") as fh:
        fh.write(",".join(names) + "\n")
        for row in zip(*arrs):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def ellipse_record(params: ModelParams, R: float, Omega: float) -> dict:
    """Conic coefficients, semi-axes (a minor, b major) and rotation in both naming styles."""
    e = steady_ellipse(params, R, Omega)
    rec = e.to_dict()
    rec.update({"a": e.semi_minor, "b": e.semi_major, "theta": e.rotation,
                "discriminant": e.discriminant})
    return rec


def write_figures(out_dir, n: int = N_SAMPLES) -> list[Path]:
    """Write every trajectory dataset, the harmonic ellipses and a manifest; return the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    manifest = {"datasets": [], "ellipses": [],
                "impulse_variants": {
                    "strong": "real impulse A=2 at t=0.6; imaginary impulse B=2 at t=0.6",
                    "weak": "real impulse A=0.5 at t=0.5; imaginary impulse B=0.5 at t=0.5",
                    "preferred": None}}
    for ds in figure_datasets():
        t, q, p = ds.trajectory(n)
        path = out_dir / f"{ds.name}.csv"
        write_xy_csv(path, {"t": t, "q": q, "p": p})
        written.append(path)
        manifest["datasets"].append(ds.manifest_entry())
    for w0 in FIG2_W0:
        params = ModelParams(w0, 1.0, 1.0, 1.5)
        rec = ellipse_record(params, 1.0, 1.0)
        rec["params"] = params.to_dict()
        name = f"fig2_{_tag(w0)}_ellipse.json"
        path = out_dir / name
        path.write_text(json.dumps(rec, indent=2, sort_keys=True) + "\n")
        written.append(path)
        manifest["ellipses"].append(name)
    mpath = out_dir / "manifest.json"
    mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    written.append(mpath)
    return written
