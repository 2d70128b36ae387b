"""Command-line experiment harness: ``build``, ``factor``, ``sweep``, ``sample``.

Settings are resolved in order: built-in defaults, ``--preset``, ``--config``
file (``key = value`` lines, ``#`` comments), explicit flags. Every command is
deterministic for a fixed configuration and seed.

Exit codes: 0 success, 2 usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import gmrf
from . import io as fio
from . import metrics
from . import sparse as sps
from .cholesky import cholesky
from .ctigo import Threshold, ctigo_factorize
from .errors import LinalgError, NumericalError
from .sampling import GENERATOR_NAME, RandomSource, sample_with_factor

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 2, 3

FAMILIES = ("example9", "rw1", "rw2", "poisson", "toeplitz", "spde_matern", "spde_aniso")
GRID_FAMILIES = ("poisson", "spde_matern", "spde_aniso")

PRESETS = {
    "paper-table-1": {"family": "rw1", "n": 100, "taus": list(metrics.TAU_GRID_DEFAULT)},
    "paper-table-2": {"family": "poisson", "n": 10, "taus": list(metrics.TAU_GRID_DEFAULT)},
    "example9": {"family": "example9", "taus": [1e-4]},
    "spde1": {"family": "spde_matern", "nx": 20, "ny": 20, "kappa": 0.3, "taus": [1e-4]},
    "spde2": {"family": "spde_aniso", "nx": 20, "ny": 20, "kappa": 0.1,
              "h11": 0.1, "h12": 0.05, "h22": 0.1, "taus": [1e-4]},
}

SIZE_LIMITS = {"rw1": (3, 20000), "rw2": (5, 20000), "toeplitz": (3, 20000), "poisson": (2, 100)}
GRID_LIMITS = (3, 100)


class UsageError(Exception):
    pass


@dataclass
class ExperimentConfig:
    family: Optional[str] = None
    n: Optional[int] = None
    nx: Optional[int] = None
    ny: Optional[int] = None
    h: float = 1.0
    jitter: float = 1e-3
    kappa: Optional[float] = None
    h11: float = 0.1
    h12: float = 0.05
    h22: float = 0.1
    band: list = field(default_factory=lambda: [5.0, -1.0])
    conditioning: str = "identity"
    taus: Optional[list] = None
    seed: int = 0
    draws: int = 1
    output_dir: str = "out"
    timing: bool = False

    def validate(self) -> None:
        if self.family not in FAMILIES:
            raise UsageError(f"unknown family {self.family!r}; choose from {', '.join(FAMILIES)}")
        if self.taus is not None:
            if not self.taus:
                raise UsageError("tolerance list is empty")
            if any(not np.isfinite(t) or t < 0 for t in self.taus):
                raise UsageError("tolerances must be finite and non-negative")
        if self.family in SIZE_LIMITS:
            lo, hi = SIZE_LIMITS[self.family]
            if not lo <= self.size_n <= hi:
                raise UsageError(f"{self.family} size n must lie in [{lo}, {hi}]")
        if self.family in ("spde_matern", "spde_aniso"):
            lo, hi = GRID_LIMITS
            if not (lo <= self.grid_nx <= hi and lo <= self.grid_ny <= hi):
                raise UsageError(f"grid sizes must lie in [{lo}, {hi}]")
        if self.draws < 1:
            raise UsageError("draws must be positive")
        kind = self.conditioning.split(":", 1)[0]
        if kind not in ("identity", "gaussian_data", "gmrf_approx"):
            raise UsageError(f"unknown conditioning {self.conditioning!r}")
        if kind != "identity" and ":" not in self.conditioning:
            raise UsageError(f"conditioning {kind} needs a file: {kind}:PATH")

    @property
    def size_n(self) -> int:
        if self.n is not None:
            return self.n
        return 10 if self.family == "poisson" else 100

    @property
    def grid_nx(self) -> int:
        return self.nx if self.nx is not None else 10

    @property
    def grid_ny(self) -> int:
        return self.ny if self.ny is not None else self.grid_nx

    def grid(self) -> Optional[gmrf.GridSpec]:
        if self.family == "poisson":
            return gmrf.GridSpec(self.size_n, self.size_n)
        if self.family in ("spde_matern", "spde_aniso"):
            return gmrf.GridSpec(self.grid_nx, self.grid_ny, self.h)
        return None


_FIELD_TYPES = {
    "n": int, "nx": int, "ny": int, "seed": int, "draws": int,
    "h": float, "jitter": float, "kappa": float, "h11": float, "h12": float, "h22": float,
    "family": str, "conditioning": str, "output_dir": str,
}


def _float_list(text: str) -> list:
    text = text.strip()
    return [float(t) for t in text.split(",") if t.strip()] if text else []


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = {"out": "output_dir", "tau": "taus"}.get(key, key)
        try:
            if key in ("taus", "band"):
                out[key] = _float_list(value)
            elif key in _FIELD_TYPES:
                out[key] = _FIELD_TYPES[key](value)
            else:
                raise UsageError(f"config line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            raise UsageError(f"config line {lineno}: {exc}") from None
    return out


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig()
    layers = []
    if args.preset:
        layers.append(PRESETS[args.preset])
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        layers.append(parse_config_text(text))
    flags = {k: getattr(args, k) for k in _FIELD_TYPES if getattr(args, k, None) is not None}
    if args.tau is not None:
        flags["taus"] = args.tau
    if args.timing:
        flags["timing"] = True
    if args.band is not None:
        flags["band"] = args.band
    layers.append(flags)
    for layer in layers:
        for key, value in layer.items():
            setattr(cfg, key, list(value) if isinstance(value, list) else value)
    cfg.validate()
    return cfg


# ------------------------------------------------------------------ models


def build_prior(cfg: ExperimentConfig) -> sps.SparseMatrix:
    fam = cfg.family
    if fam == "example9":
        return gmrf.build_example_q1()
    if fam == "rw1":
        return gmrf.build_rw1(cfg.size_n, cfg.jitter)
    if fam == "rw2":
        return gmrf.build_rw2(cfg.size_n, cfg.jitter)
    if fam == "poisson":
        return gmrf.build_poisson(cfg.size_n)
    if fam == "toeplitz":
        return gmrf.build_toeplitz_corner(cfg.size_n, cfg.band)
    if fam == "spde_matern":
        return gmrf.build_spde_matern(cfg.grid(), cfg.kappa if cfg.kappa is not None else 0.3)
    H = gmrf.AnisotropyTensor(cfg.h11, cfg.h12, cfg.h22)
    return gmrf.build_spde_aniso(cfg.grid(), cfg.kappa if cfg.kappa is not None else 0.1, H)


def _column(rows, name, path):
    try:
        return np.array([float(r[name]) for r in rows])
    except (KeyError, ValueError) as exc:
        raise UsageError(f"{path}: bad or missing column {name!r} ({exc})") from None


def build_model(cfg: ExperimentConfig) -> gmrf.CanonicalGmrf:
    """Prior from the family, conditioned as requested."""
    Q1 = build_prior(cfg)
    n = Q1.nrows
    kind, _, path = cfg.conditioning.partition(":")
    if kind == "identity":
        I = sps.identity(n)
        return gmrf.condition_on_gaussian_data(Q1, I, I, np.zeros(n))
    try:
        rows = fio.read_csv(path)
    except OSError as exc:
        raise UsageError(f"cannot read conditioning file: {exc}") from None
    if kind == "gaussian_data":
        nodes = _column(rows, "node", path).astype(int)
        if np.any(nodes < 0) or np.any(nodes >= n):
            raise UsageError(f"{path}: node index out of range")
        y = _column(rows, "y", path)
        prec = _column(rows, "precision", path)
        Aobs = sps.from_triplets(len(nodes), n, [(r, int(i), 1.0) for r, i in enumerate(nodes)])
        return gmrf.condition_on_gaussian_data(Q1, Aobs, sps.diag(prec), y)
    b = _column(rows, "b", path)
    c = _column(rows, "c", path)
    if len(b) != n:
        raise UsageError(f"{path}: expected {n} rows, found {len(b)}")
    return gmrf.gmrf_approximation(Q1, b, c)


def _tau_tag(tau: float) -> str:
    return "0" if tau == 0 else f"{tau:g}"


# ---------------------------------------------------------------- commands


def cmd_build(cfg: ExperimentConfig) -> list[Path]:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    g = build_model(cfg)
    written = []
    for name, M in (("Q1", g.q1), ("Q2", g.q2), ("Q", g.Q)):
        p = out / f"{name}.mtx"
        fio.write_mtx(p, M)
        written.append(p)
    return written


def cmd_factor(cfg: ExperimentConfig) -> list[Path]:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    taus = cfg.taus if cfg.taus is not None else [1e-4]
    g = build_model(cfg)
    L1 = cholesky(g.q1)
    A = gmrf.stack_factor(L1, g.q2_root)
    L = cholesky(g.Q)
    written = []

    def put_mtx(name, M):
        fio.write_mtx(out / f"{name}.mtx", M)
        written.append(out / f"{name}.mtx")

    def put_pgm(name, M):
        fio.write_pgm(out / f"{name}.pgm", metrics.pattern_image(M))
        written.append(out / f"{name}.pgm")

    put_mtx("L", L.matrix)
    put_mtx("A", A)
    put_pgm("L1", L1.matrix)
    put_pgm("L2", sps.transpose(g.q2_root))
    put_pgm("L", L.matrix)
    put_pgm("A", A)
    reports = []
    for tau in taus:
        R = ctigo_factorize(A, Threshold(tau))
        put_mtx(f"R_tau{_tau_tag(tau)}", R.matrix)
        put_pgm(f"R_tau{_tau_tag(tau)}", R.matrix)
        reports.append(metrics.report(g.Q, L, R, tau))
    p = out / "factor_report.csv"
    fio.write_csv(p, metrics.CSV_HEADER[:-1], [r.row()[:-1] for r in reports])
    written.append(p)
    return written


def cmd_sweep(cfg: ExperimentConfig) -> list[Path]:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    taus = cfg.taus if cfg.taus is not None else list(metrics.TAU_GRID_DEFAULT)
    g = build_model(cfg)
    reports = metrics.tolerance_sweep(g.q1, taus, root=g.q2_root)
    # wall_ms stays 0 unless asked for, so reruns are byte-identical
    rows = [r.row() if cfg.timing else r.row()[:-1] + (0.0,) for r in reports]
    fio.write_csv(out / "sweep.csv", metrics.CSV_HEADER, rows)
    table = metrics.format_table(reports, title=f"Comparisons for {cfg.family} (n={g.n})")
    (out / "sweep.txt").write_text(table)
    return [out / "sweep.csv", out / "sweep.txt"]


def cmd_sample(cfg: ExperimentConfig) -> list[Path]:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    tau = (cfg.taus if cfg.taus is not None else [1e-4])[0]
    g = build_model(cfg)
    A = gmrf.stack_factor(cholesky(g.q1), g.q2_root)
    L = cholesky(g.Q)
    R = ctigo_factorize(A, Threshold(tau))
    size = cfg.draws
    xL = sample_with_factor(L, RandomSource(cfg.seed), size=size)
    xR = sample_with_factor(R, RandomSource(cfg.seed), size=size)
    header = ["route", "draw"] + [f"x{i}" for i in range(g.n)]
    rows = [["L", d] + list(x) for d, x in enumerate(xL)] + [["R", d] + list(x) for d, x in enumerate(xR)]
    written = [out / "samples.csv", out / "sample_meta.txt"]
    fio.write_csv(written[0], header, rows)
    written[1].write_text(
        f"generator={GENERATOR_NAME}\nseed={cfg.seed}\ntau={tau!r}\nfamily={cfg.family}\ndraws={size}\n"
    )
    grid = cfg.grid()
    if grid is not None:
        for name, x in (("sample_L", xL[0]), ("sample_R", xR[0])):
            fio.write_pgm(out / f"{name}.pgm", fio.heatmap(x, grid.nx, grid.ny))
            written.append(out / f"{name}.pgm")
    return written


COMMANDS = {"build": cmd_build, "factor": cmd_factor, "sweep": cmd_sweep, "sample": cmd_sample}


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--preset", choices=sorted(PRESETS))
    common.add_argument("--family", help=f"one of: {', '.join(FAMILIES)}")
    common.add_argument("--n", type=int, help="order (rw1, rw2, toeplitz) or mesh side (poisson)")
    common.add_argument("--nx", type=int)
    common.add_argument("--ny", type=int)
    common.add_argument("--h", type=float, help="grid spacing")
    common.add_argument("--jitter", type=float, help="diagonal shift for RW1/RW2")
    common.add_argument("--kappa", type=float)
    common.add_argument("--h11", type=float)
    common.add_argument("--h12", type=float)
    common.add_argument("--h22", type=float)
    common.add_argument("--band", type=_float_list, help="comma-separated Toeplitz band, diagonal first")
    common.add_argument("--conditioning", help="identity | gaussian_data:FILE | gmrf_approx:FILE")
    common.add_argument("--tau", type=float, action="append", help="dropping tolerance (repeatable)")
    common.add_argument("--seed", type=int)
    common.add_argument("--draws", type=int, help="number of samples (sample)")
    common.add_argument("--out", dest="output_dir", help="output directory")
    common.add_argument("--timing", action="store_true", help="record wall-clock times in sweep.csv")

    parser = argparse.ArgumentParser(prog="gmrf-ctigo", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("build", parents=[common], help="write Q1, Q2 and Q as Matrix Market")
    sub.add_parser("factor", parents=[common], help="exact and incomplete factors plus pattern images")
    sub.add_parser("sweep", parents=[common], help="error table over dropping tolerances")
    sub.add_parser("sample", parents=[common], help="paired samples from L and R")
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        written = COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"gmrf-ctigo: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"gmrf-ctigo: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except LinalgError as exc:
        print(f"gmrf-ctigo: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for p in written:
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
