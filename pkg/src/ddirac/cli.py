"""Command-line front end: ``ddirac <command> [flags]``.

Exit codes: 0 success, 1 round-trip tolerance failed, 2 configuration error,
3 region refusal, 4 convergence diagnostics present.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .charfn import CharFnEvaluator, Spectrum, find_all_eigenvalues
from .counterexample import (H0_KINDS, build_beta_family, unit_eigenpair, verify_independence)
from .gridfn import DEFAULT_N_CELLS, DomainError
from .inverse import RegionRefusal, invert_spectrum, potential_errors
from .kernels import assemble_kernels
from .potentials import (PRESETS, DelayPair, PotentialSet, Region, aligned_n_cells,
                         boundary_margins, classify, load_problem, parse_complex, preset)

log = logging.getLogger("ddirac")

EXIT_OK, EXIT_TOL, EXIT_CONFIG, EXIT_REFUSAL, EXIT_DIAG = 0, 1, 2, 3, 4
COMMANDS = ("forward", "eigs", "invert", "roundtrip", "counterexample", "region")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    config: str | None = None
    a1_pi: float | None = None
    a2_pi: float | None = None
    preset: str = "preset-B"
    spectra: str | None = None
    out: str | None = None
    n_max: int = 200
    n_hadamard: int = 200
    n_fourier: int = 64
    n_cells: int | None = None
    betas: list[complex] = field(default_factory=lambda: [0j, 1 + 0j, 1j, 2 + 0j])
    theta_sampling: str = "auto"
    h0: str = "constant"
    tol: float = 5e-2
    lambda_min: float = -10.0
    lambda_max: float = 10.0
    n_lambda: int = 41
    sweep: int = 200

    def __post_init__(self):
        for name in ("n_max", "n_hadamard", "n_fourier", "n_lambda", "sweep"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"--{name.replace('_', '-')} must be positive")
        if self.n_cells is not None and self.n_cells < 2:
            raise ConfigError("--n-cells must be >= 2")
        if self.command == "roundtrip" and self.n_hadamard > self.n_max:
            raise ConfigError("--n-hadamard cannot exceed --n-max")
        if self.command == "invert" and not self.spectra:
            raise ConfigError("invert needs --spectra <csv>")
        if self.command in ("forward", "eigs", "invert", "roundtrip", "counterexample") \
                and not self.out:
            raise ConfigError(f"{self.command} needs --out <dir>")


def threads() -> int:
    raw = os.environ.get("DDIRAC_THREADS", "")
    try:
        return max(1, int(raw)) if raw else max(1, min(4, os.cpu_count() or 1))
    except ValueError:
        raise ConfigError(f"DDIRAC_THREADS must be an integer, got {raw!r}") from None


# ---------------------------------------------------------------- I/O
def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def potentials_csv(pot: PotentialSet) -> str:
    x = pot.p1.x
    cols = [f.values for f in pot.functions()]
    lines = ["x,p1_re,p1_im,p2_re,p2_im,q1_re,q1_im,q2_re,q2_im"]
    for i, xi in enumerate(x):
        row = [f"{xi:.15g}"]
        for c in cols:
            row += [f"{c[i].real:.15g}", f"{c[i].imag:.15g}"]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def delta_csv(kernels, lams: np.ndarray) -> str:
    lines = ["lambda,j,m,re,im"]
    for j in (1, 2):
        for m in (0, 1):
            ev = CharFnEvaluator(kernels, j, m)
            for lam in lams:
                v = ev(lam)
                lines.append(f"{lam:.15g},{j},{m},{v.real:.15g},{v.imag:.15g}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- helpers
def _delays(cfg: RunConfig) -> DelayPair:
    if cfg.a1_pi is not None and cfg.a2_pi is not None:
        return DelayPair.from_pi(cfg.a1_pi, cfg.a2_pi)
    if cfg.config:
        data = json.loads(Path(cfg.config).read_text())
        return DelayPair.from_pi(float(data["a1_pi"]), float(data["a2_pi"]))
    raise ConfigError("delays needed: give --config or both --a1-pi and --a2-pi")


def _problem(cfg: RunConfig) -> PotentialSet:
    if cfg.config:
        data = json.loads(Path(cfg.config).read_text())
        if cfg.a1_pi is not None:
            data["a1_pi"] = cfg.a1_pi
        if cfg.a2_pi is not None:
            data["a2_pi"] = cfg.a2_pi
        if cfg.n_cells is not None:
            if not isinstance(data.get("potentials", "zero"), str):
                raise ConfigError("--n-cells cannot override sampled potentials")
            data["n_cells"] = cfg.n_cells
        return load_problem(data).potentials
    return preset(cfg.preset, _delays(cfg), cfg.n_cells or DEFAULT_N_CELLS)


def _out(cfg: RunConfig) -> Path:
    return Path(cfg.out)


def _spectrum(kernels, cfg: RunConfig) -> Spectrum:
    sp = find_all_eigenvalues(kernels, cfg.n_max, threads())
    for key, msg in sorted(sp.missing.items()):
        print(f"missing root m={key[0]} j={key[1]} n={key[2]}: {msg}", file=sys.stderr)
    return sp


# ---------------------------------------------------------------- commands
def cmd_forward(cfg: RunConfig) -> int:
    pot = _problem(cfg)
    ks = assemble_kernels(pot)
    out = _out(cfg)
    lams = np.linspace(cfg.lambda_min, cfg.lambda_max, cfg.n_lambda)
    write_atomic(out / "kernels.csv", ks.to_csv())
    write_atomic(out / "delta.csv", delta_csv(ks, lams))
    return EXIT_OK


def cmd_eigs(cfg: RunConfig) -> int:
    pot = _problem(cfg)
    sp = _spectrum(assemble_kernels(pot), cfg)
    write_atomic(_out(cfg) / "spectrum.csv", sp.to_csv())
    return EXIT_DIAG if sp.missing else EXIT_OK


def _refuse_unless_r1(delays: DelayPair) -> None:
    region = classify(delays)
    if region != Region.R1:
        raise RegionRefusal(region)


def cmd_invert(cfg: RunConfig) -> int:
    delays = _delays(cfg)
    _refuse_unless_r1(delays)
    sp = Spectrum.from_csv(Path(cfg.spectra).read_text())
    try:
        rep = invert_spectrum(sp, delays, cfg.n_hadamard, cfg.n_fourier, cfg.n_cells or DEFAULT_N_CELLS,
                              cfg.theta_sampling)
    except ValueError as exc:
        if isinstance(exc, RegionRefusal):
            raise
        print(f"spectra unusable: {exc}", file=sys.stderr)
        return EXIT_DIAG
    out = _out(cfg)
    write_atomic(out / "potentials.csv", potentials_csv(rep.recovered))
    write_atomic(out / "report.json", _json(rep.to_json_dict()))
    return EXIT_OK


def cmd_roundtrip(cfg: RunConfig) -> int:
    pot = _problem(cfg)
    _refuse_unless_r1(pot.delays)
    ks = assemble_kernels(pot)
    sp = _spectrum(ks, cfg)
    if sp.missing:
        return EXIT_DIAG
    rep = invert_spectrum(sp, pot.delays, cfg.n_hadamard, cfg.n_fourier, pot.n_cells,
                          cfg.theta_sampling)
    errs = potential_errors(rep.recovered, pot)
    ok = all(v <= cfg.tol for v in errs.values())
    report = rep.to_json_dict()
    report.update({"trimmed_rel_l2": errs, "tolerance": cfg.tol, "pass": ok})
    out = _out(cfg)
    write_atomic(out / "potentials.csv", potentials_csv(rep.recovered))
    write_atomic(out / "report.json", _json(report))
    return EXIT_OK if ok else EXIT_TOL


def cmd_counterexample(cfg: RunConfig) -> int:
    delays = _delays(cfg)
    region = classify(delays)
    if region != Region.R2:
        raise RegionRefusal(region, "counterexample")
    n = cfg.n_cells or aligned_n_cells(delays)
    op = unit_eigenpair(cfg.h0, delays, n)
    fam = build_beta_family(op, cfg.betas)
    rep = verify_independence(fam, cfg.betas, n_max=15, h=op.h)
    rep.extras.update({"n_cells": n, "h0": cfg.h0, "eigenpair_residual": op.residual(),
                       "kernel_symmetry": op.symmetry_defect()})
    write_atomic(_out(cfg) / "counterexample.json", _json(rep.to_json_dict()))
    return EXIT_OK


def region_sweep_csv(k: int) -> str:
    lines = ["a1_pi,a2_pi,region"]
    for a1 in np.linspace(1 / 3, 0.999, k):
        for a2 in np.linspace(1 / 3, 0.999, k):
            lab = classify(DelayPair.from_pi(a1, a2)).value
            lines.append(f"{a1:.15g},{a2:.15g},{lab}")
    return "\n".join(lines) + "\n"


def cmd_region(cfg: RunConfig) -> int:
    d = _delays(cfg)
    print(classify(d).value)
    for name, v in boundary_margins(d).items():
        print(f"{name} = {v:+.6f}")
    if cfg.out:
        write_atomic(Path(cfg.out), region_sweep_csv(cfg.sweep))
    return EXIT_OK


HANDLERS = {"forward": cmd_forward, "eigs": cmd_eigs, "invert": cmd_invert,
            "roundtrip": cmd_roundtrip, "counterexample": cmd_counterexample,
            "region": cmd_region}


# ---------------------------------------------------------------- parser
def _betas(text: str) -> list[complex]:
    try:
        return [parse_complex(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ddirac", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config")
        p.add_argument("--a1-pi", type=float)
        p.add_argument("--a2-pi", type=float)
        p.add_argument("--preset", choices=PRESETS, default="preset-B")
        p.add_argument("--out")
        p.add_argument("--n-cells", type=int)
        if name in ("eigs", "roundtrip"):
            p.add_argument("--n-max", type=int, default=200)
        if name in ("invert", "roundtrip"):
            p.add_argument("--n-hadamard", type=int, default=200)
            p.add_argument("--n-fourier", type=int, default=64)
            p.add_argument("--theta-sampling", choices=("integer", "half-integer", "auto"),
                           default="auto")
        if name == "invert":
            p.add_argument("--spectra", required=True)
        if name == "roundtrip":
            p.add_argument("--tol", type=float, default=5e-2)
        if name == "forward":
            p.add_argument("--lambda-min", type=float, default=-10.0)
            p.add_argument("--lambda-max", type=float, default=10.0)
            p.add_argument("--n-lambda", type=int, default=41)
        if name == "counterexample":
            p.add_argument("--betas", type=_betas, default=[0j, 1 + 0j, 1j, 2 + 0j])
            p.add_argument("--h0", choices=H0_KINDS, default="constant")
        if name == "region":
            p.add_argument("--sweep", type=int, default=200)
    return ap


def main(argv=None) -> int:
    logging.basicConfig(level=logging.ERROR, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(**{k: v for k, v in vars(args).items() if v is not None})
        return HANDLERS[cfg.command](cfg)
    except RegionRefusal as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REFUSAL
    except (ConfigError, DomainError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
