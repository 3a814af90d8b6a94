"""Command-line pipeline: fit, ivp, eig, kernel-error, schrod, describe-output.

A problem is described by a JSON config (see :class:`ProblemConfig`); every
flag overrides the matching config field. Each stage writes its files only
after it has finished, through temporary files renamed into place, so a
failure never leaves partial output from that stage or any later one. On
failure a one-line JSON report ``{"error": {"stage", "type", "cause"}}`` is
printed to stderr and the process exits with the code listed in
``EXIT_CODES``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import errors
from .basis import PotentialSpec
from .expr import parse_expression
from .fit import fit_kernel, goursat_residual, kernel_eval
from .grid import Grid
from .oracle import tanh_kernel_matrix, transmutation_kernel_mesh
from .schrodinger import schrod_fit, schrod_reduce
from .solve import BoundaryCondition, find_eigenvalues, solve_ivp

COMMANDS = ("fit", "ivp", "eig", "kernel-error", "schrod")

EXIT_CODES = {
    "ConfigError": 2,
    "ParseError": 3,
    "EvalError": 4,
    "NonVanishingViolation": 5,
    "SingularSystem": 6,
    "InvariantViolation": 7,
    "ComplexCharacteristic": 8,
    "BracketLost": 9,
    "DomainViolation": 10,
    "StepTooCoarse": 11,
    "CompatibilityViolation": 12,
    "NonConvergence": 13,
    "TransmuteError": 20,
    "OSError": 30,
}

OUTPUT_DOC = """\
All CSV files: comma separated, header row, numbers with 17 significant digits, '\\n' line endings.

fit
  kernel.json     order, grid {b, M}, coefficients C_n as [[[re, im], [re, im]], [[re, im], [re, im]]],
                  residual (L2 norm of Q/2 + sum N_n C_n), ridge, potential
  residual.csv    x, r_plus, r_minus: Frobenius residuals of the two characteristic conditions per node

ivp
  kernel.json     as for fit
  solution.csv    x, y1_re, y1_im, y2_re, y2_im: Y_N = a C_N + b S_N on the fit grid

eig
  kernel.json     as for fit
  spectrum.csv    index, lambda, abs_det, bracket_lo, bracket_hi (index 0 is the smallest nonnegative root)

kernel-error
  kernel.json     as for fit
  kernel_error.csv  x, t, abs_error: Frobenius error of K_N against the oracle
                  (closed form for p = 0, q = tanh x; otherwise the characteristic-mesh solver)

schrod
  schrod_kernels.csv       x, t, K_f, K_1/f (or re_/im_ pairs when f is complex) on a 21 x 21 triangle grid
  schrod_coefficients.csv  n, a_re, a_im, d_re, d_im

Exit codes: """ + ", ".join(f"{k}={v}" for k, v in EXIT_CODES.items()) + "\n"


class ConfigError(ValueError):
    """Invalid configuration value."""


def _matrix(value, name: str) -> np.ndarray:
    """2x2 matrix from numbers or constant expression strings such as ``"cos(1/4)"``."""
    try:
        rows = [[float(parse_expression(v)(0.0)) if isinstance(v, str) else float(v) for v in row] for row in value]
    except (TypeError, ValueError) as exc:
        if isinstance(exc, errors.TransmuteError):
            raise
        raise ConfigError(f"{name} must be a 2x2 list of numbers or expressions") from exc
    m = np.array(rows, dtype=float)
    if m.shape != (2, 2):
        raise ConfigError(f"{name} must be 2x2, got shape {m.shape}")
    return m


@dataclass
class ProblemConfig:
    """Everything one pipeline run needs.

    ``p``, ``q`` (Dirac potential) and ``q1`` (Schrodinger potential) are
    expressions in ``x``; alternatively ``samples`` names a CSV with columns
    ``x, p, q`` (relative paths resolve against the config file). Boundary
    matrices accept numbers or constant expressions. ``ridge = null`` means
    "start unregularised and escalate only on failure"; ``lambda_step = null``
    means ``pi / (4 b)``.
    """

    name: str = "problem"
    p: str = "0"
    q: str = "0"
    q1: str | None = None
    samples: str | None = None
    b: float = 1.0
    grid: int = 2000
    order: int = 10
    ridge: float | None = None
    solver: str = "normal"
    U_left: list = field(default_factory=lambda: [[1.0, 0.0], [0.0, 0.0]])
    U_right: list = field(default_factory=lambda: [[0.0, 0.0], [1.0, 0.0]])
    lambda_min: float = -10.0
    lambda_max: float = 10.0
    lambda_step: float | None = None
    ivp_a: float = 1.0
    ivp_b: float = 0.0
    ivp_lambda: float = 1.0
    oracle_mesh: int = 200
    out: str = "out"

    @classmethod
    def from_dict(cls, doc: dict, base: Path | None = None) -> "ProblemConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        cfg = cls(**doc)
        if cfg.samples and base is not None and not os.path.isabs(cfg.samples):
            cfg.samples = str(base / cfg.samples)
        return cfg

    @classmethod
    def load(cls, path: str) -> "ProblemConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return cls.from_dict(doc, Path(path).resolve().parent)

    def validate(self) -> "ProblemConfig":
        if not self.b > 0:
            raise ConfigError("b must be positive")
        if self.grid < 4:
            raise ConfigError("grid must be at least 4")
        if self.order < 0:
            raise ConfigError("order must be nonnegative")
        if self.ridge is not None and self.ridge < 0:
            raise ConfigError("ridge must be nonnegative")
        if self.solver not in ("normal", "qr"):
            raise ConfigError("solver must be 'normal' or 'qr'")
        if self.lambda_step is not None and not self.lambda_step > 0:
            raise ConfigError("lambda_step must be positive")
        if not self.lambda_min < self.lambda_max:
            raise ConfigError("need lambda_min < lambda_max")
        if self.oracle_mesh < 2:
            raise ConfigError("oracle_mesh must be at least 2")
        for src in (self.p, self.q) + ((self.q1,) if self.q1 else ()):
            parse_expression(src)
        self.boundary()
        return self

    def potential(self) -> PotentialSpec:
        if self.samples:
            data = np.loadtxt(self.samples, delimiter=",", skiprows=1, ndmin=2)
            if data.shape[1] != 3:
                raise ConfigError("sample table needs columns x, p, q")
            pot = PotentialSpec.from_samples(data[:, 0], data[:, 1], data[:, 2], label=self.samples)
            if abs(pot.b - self.b) > 1e-12 * self.b:
                raise ConfigError(f"sample table ends at {pot.b}, config has b = {self.b}")
            return pot
        return PotentialSpec.from_expressions(self.p, self.q, self.b)

    def boundary(self) -> BoundaryCondition:
        return BoundaryCondition(_matrix(self.U_left, "U_left"), _matrix(self.U_right, "U_right"))


def _fmt(v) -> str:
    # adding 0.0 turns -0.0 into 0.0
    return f"{float(v) + 0.0:.17g}"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([r if isinstance(r, (int, np.integer)) else _fmt(r) for r in row])
    return buf.getvalue()


def write_outputs(out_dir: str, files: dict) -> list:
    """Write all ``files`` (name -> text) or none of them."""
    os.makedirs(out_dir, exist_ok=True)
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=out_dir)
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            staged.append((tmp, os.path.join(out_dir, name)))
    except BaseException:
        for tmp, _ in staged:
            os.unlink(tmp)
        raise
    for tmp, final in staged:
        os.replace(tmp, final)
    return [final for _, final in staged]


class StageError(Exception):
    def __init__(self, stage: str, exc: BaseException):
        super().__init__(f"{stage}: {exc}")
        self.stage = stage
        self.exc = exc


class _Stage:
    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, etype, exc, tb):
        if exc is not None and not isinstance(exc, StageError) and isinstance(exc, Exception):
            raise StageError(self.name, exc) from exc
        return False


def _fit(cfg: ProblemConfig):
    with _Stage("potential"):
        pot = cfg.potential()
        grid = Grid(cfg.b, cfg.grid)
        pot.on_grid(grid)
    with _Stage("fit"):
        ka = fit_kernel(pot, cfg.order, grid, ridge=cfg.ridge, solver=cfg.solver)
    with _Stage("write-fit"):
        write_outputs(cfg.out, {"kernel.json": ka.to_json() + "\n"})
    return pot, ka


def cmd_fit(cfg: ProblemConfig):
    pot, ka = _fit(cfg)
    with _Stage("residual"):
        rp, rm = goursat_residual(ka, pot)
        text = _csv(["x", "r_plus", "r_minus"], zip(ka.grid.x, rp, rm))
        write_outputs(cfg.out, {"residual.csv": text})


def cmd_ivp(cfg: ProblemConfig):
    _, ka = _fit(cfg)
    with _Stage("ivp"):
        Y = solve_ivp(ka, cfg.ivp_a, cfg.ivp_b, cfg.ivp_lambda)
        rows = zip(ka.grid.x, Y[:, 0].real, Y[:, 0].imag, Y[:, 1].real, Y[:, 1].imag)
        text = _csv(["x", "y1_re", "y1_im", "y2_re", "y2_im"], rows)
        write_outputs(cfg.out, {"solution.csv": text})


def cmd_eig(cfg: ProblemConfig):
    _, ka = _fit(cfg)
    with _Stage("eig"):
        sp = find_eigenvalues(ka, cfg.boundary(), cfg.lambda_min, cfg.lambda_max, cfg.lambda_step)
        write_outputs(cfg.out, {"spectrum.csv": sp.to_csv()})
    return sp


def _is_tanh_case(pot: PotentialSpec, grid: Grid) -> bool:
    p, q = pot.on_grid(grid)
    return grid.b <= 2.0 and np.max(np.abs(p)) == 0.0 and np.max(np.abs(q - np.tanh(grid.x))) < 1e-14


def cmd_kernel_error(cfg: ProblemConfig):
    pot, ka = _fit(cfg)
    with _Stage("oracle"):
        if _is_tanh_case(pot, ka.grid):
            xs = np.linspace(0.0, cfg.b, 21)
            s = np.linspace(-1.0, 1.0, 21)
            X, T = (xs[:, None] * np.ones_like(s)).ravel(), (xs[:, None] * s).ravel()
            ref = tanh_kernel_matrix(X, T)
        else:
            mesh = transmutation_kernel_mesh(pot, cfg.oracle_mesh)
            X, T, ref = mesh.kernel()
    with _Stage("kernel-error"):
        err = np.sqrt(np.sum(np.abs(kernel_eval(ka, X, T) - ref) ** 2, axis=(-2, -1)))
        write_outputs(cfg.out, {"kernel_error.csv": _csv(["x", "t", "abs_error"], zip(X, T, err))})


def cmd_schrod(cfg: ProblemConfig):
    with _Stage("potential"):
        if not cfg.q1:
            raise ConfigError("schrod needs q1")
        q1 = parse_expression(cfg.q1)
        grid = Grid(cfg.b, cfg.grid)
        q1(grid.x)
    with _Stage("reduce"):
        sp = schrod_reduce(q1, grid, cfg.order)
    with _Stage("schrod-fit"):
        sf = schrod_fit(sp, cfg.order, ridge=cfg.ridge)
    with _Stage("write-schrod"):
        coef = _csv(
            ["n", "a_re", "a_im", "d_re", "d_im"],
            ([n, a.real, a.imag, d.real, d.imag] for n, (a, d) in enumerate(zip(sf.a + 0j, sf.d + 0j))),
        )
        write_outputs(cfg.out, {"schrod_kernels.csv": sf.to_csv(), "schrod_coefficients.csv": coef})


HANDLERS = {
    "fit": cmd_fit,
    "ivp": cmd_ivp,
    "eig": cmd_eig,
    "kernel-error": cmd_kernel_error,
    "schrod": cmd_schrod,
}

# flag name -> config field
OVERRIDES = {
    "b": "b",
    "grid": "grid",
    "order": "order",
    "ridge": "ridge",
    "solver": "solver",
    "p": "p",
    "q": "q",
    "q1": "q1",
    "lambda_min": "lambda_min",
    "lambda_max": "lambda_max",
    "lambda_step": "lambda_step",
    "coef_a": "ivp_a",
    "coef_b": "ivp_b",
    "lam": "ivp_lambda",
    "oracle_mesh": "oracle_mesh",
    "out": "out",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="transmute", description=__doc__.split("\n")[0])
    parser.add_argument("--describe-output", action="store_true", help="document the output files and exit")
    sub = parser.add_subparsers(dest="command")
    sub.add_parser("describe-output", help="document the output files")
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="problem JSON")
        sp.add_argument("--b", type=float, help="interval end point")
        sp.add_argument("--grid", type=int, help="number of grid intervals M")
        sp.add_argument("--order", type=int, help="approximation order N")
        sp.add_argument("--ridge", type=float, help="fixed Tikhonov parameter (default: escalate on failure)")
        sp.add_argument("--solver", choices=("normal", "qr"))
        sp.add_argument("--p", help="expression for p(x)")
        sp.add_argument("--q", help="expression for q(x)")
        sp.add_argument("--q1", help="Schrodinger potential expression")
        sp.add_argument("--lambda-min", dest="lambda_min", type=float)
        sp.add_argument("--lambda-max", dest="lambda_max", type=float)
        sp.add_argument("--lambda-step", dest="lambda_step", type=float)
        sp.add_argument("--a", dest="coef_a", type=float, help="ivp: coefficient of C_N")
        sp.add_argument("--c", dest="coef_b", type=float, help="ivp: coefficient of S_N")
        sp.add_argument("--lambda", dest="lam", type=float, help="ivp: spectral parameter")
        sp.add_argument("--oracle-mesh", dest="oracle_mesh", type=int)
        sp.add_argument("--out", help="output directory")
    return parser


def _report(stage: str, exc: BaseException) -> int:
    kind = type(exc).__name__
    code = EXIT_CODES.get(kind)
    if code is None:
        if isinstance(exc, errors.TransmuteError):
            code = EXIT_CODES["TransmuteError"]
        elif isinstance(exc, OSError):
            code = EXIT_CODES["OSError"]
        else:
            code = EXIT_CODES["ConfigError"]
    print(json.dumps({"error": {"stage": stage, "type": kind, "cause": str(exc)}}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.describe_output or args.command == "describe-output":
        sys.stdout.write(OUTPUT_DOC)
        return 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_CODES["ConfigError"]
    try:
        cfg = ProblemConfig.load(args.config) if args.config else ProblemConfig()
        for flag, name in OVERRIDES.items():
            value = getattr(args, flag)
            if value is not None:
                setattr(cfg, name, value)
        cfg.validate()
    except (OSError, ValueError, TypeError, errors.TransmuteError) as exc:
        return _report("config", exc)
    try:
        HANDLERS[args.command](cfg)
    except StageError as exc:
        return _report(exc.stage, exc.exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
