"""Command-line driver that tabulates cubature errors against exact potentials.

Each run evaluates the potential of ``f = (-Laplace + lambda^2) prod_j u(x_j)``
over ``[-1, 1]^n`` at one grid point for a list of steps and reports the
absolute error against ``prod_j u(x_j)`` together with the observed order.

Settings are resolved in increasing priority: built-in defaults, a named
preset (``--preset``), a ``key = value`` file (``--config``), explicit flags.

Exit codes: 0 success, 2 invalid settings, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import dataclass, fields, replace

import numpy as np

from .cubature import Box, Grid, convergence_table, evaluate_potential, grid_index, test_density
from .errors import AccuracyNotMetError, DomainError, OutOfReachError, SingularSystemError
from .extension import OUT_OF_REACH_MODES, SCHEMES, named_scheme
from .oracle import PROFILES, exact_potential_product, get_profile
from .quadrature import QuadratureParams, as_lambda2
from .specfun import check_order

__all__ = ["RunSpec", "PRESETS", "run_table", "format_rows", "build_spec", "main"]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3

EXTENSIONS = ("none",) + tuple(SCHEMES)
FORMATS = ("csv", "markdown")


class UsageError(DomainError):
    """Invalid run settings."""


@dataclass(frozen=True)
class RunSpec:
    """Everything needed to reproduce one error table.

    ``point`` may be shorter than ``dimension``; missing coordinates are 0.
    ``ext_order`` of ``None`` means ``2 * order``.
    """

    dimension: int = 3
    profile: str = "cos2"
    order: int = 3
    lambda_re: float = 1.0
    lambda_im: float = 0.0
    extension: str = "none"
    ext_order: int | None = None
    out_of_reach: str = "raise"
    shape_d: float = 4.0
    radius_r: float = 6.0
    alpha: float = 2.0
    beta: float = 2.0
    tau: float = 0.005
    node_lo: int = -450
    node_hi: int = 300
    h_inv: tuple = (10, 20, 40, 80, 160, 320)
    point: tuple = (0.3, 0.3, 0.0)
    format: str = "csv"
    timing: bool = True

    @property
    def lambda2(self) -> complex:
        return complex(self.lambda_re, self.lambda_im)

    @property
    def quad(self) -> QuadratureParams:
        return QuadratureParams(self.alpha, self.beta, self.tau, self.node_lo, self.node_hi)

    def full_point(self) -> np.ndarray:
        x = np.zeros(self.dimension)
        x[: len(self.point)] = self.point
        return x

    def validate(self) -> "RunSpec":
        """Raise :class:`UsageError` naming the first violated requirement."""
        if self.dimension < 1:
            raise UsageError("dimension must be a positive integer")
        if self.profile not in PROFILES:
            raise UsageError(f"profile must be one of {sorted(PROFILES)}")
        if self.extension not in EXTENSIONS:
            raise UsageError(f"extension must be one of {EXTENSIONS}")
        if self.out_of_reach not in OUT_OF_REACH_MODES:
            raise UsageError(f"out-of-reach must be one of {OUT_OF_REACH_MODES}")
        if self.format not in FORMATS:
            raise UsageError(f"format must be one of {FORMATS}")
        if self.ext_order is not None and self.ext_order < 0:
            raise UsageError("ext-order must be nonnegative")
        if not self.h_inv:
            raise UsageError("h-inv list is empty")
        if any(not (v > 0 and math.isfinite(v)) for v in self.h_inv):
            raise UsageError("every h-inv entry must be positive")
        if len(self.point) > self.dimension:
            raise UsageError("point has more coordinates than the dimension")
        if any(abs(c) > 1 for c in self.point):
            raise UsageError("point must lie in [-1, 1]^n")
        try:
            check_order(self.order)
            QuadratureParams(self.alpha, self.beta, self.tau, self.node_lo, self.node_hi)
            Grid(1.0 / self.h_inv[0], self.shape_d, self.radius_r)
            as_lambda2(self.lambda2).check(self.dimension)
            x = np.asarray(self.point, dtype=float)
            for h_inv in self.h_inv:
                grid_index(x, 1.0 / h_inv)
        except DomainError as exc:
            raise UsageError(str(exc)) from exc
        return self


PRESETS = {
    "table1": RunSpec(profile="cos2", point=(0.3, 0.3, 0.0)),
    "table2": RunSpec(profile="x2m1_cubed", point=(0.5, 0.5, 0.5)),
    "table3": RunSpec(profile="one_minus_x2_sq", point=(0.4, 0.5, 0.0)),
    "table4": RunSpec(dimension=10, profile="one_minus_sin", point=(0.5,), alpha=6.0, beta=5.0,
                      tau=0.003, node_lo=-40, node_hi=200),
    "table5": RunSpec(dimension=10, profile="exp_bump", point=(0.4, 0.4), alpha=6.0, beta=5.0,
                      tau=0.003, node_lo=-40, node_hi=200),
}


def run_table(spec: RunSpec) -> list:
    """Evaluate every row of ``spec``; returns a list of ``ConvergenceRow``.

    Raises
    ------
    UsageError
        If the spec is invalid.
    OutOfReachError, SingularSystemError, AccuracyNotMetError, FloatingPointError
        On numerical failure.
    """
    spec.validate()
    n = spec.dimension
    x = spec.full_point()
    density = test_density(spec.profile, spec.lambda2, n)
    box = Box.cube(n)
    quad = spec.quad
    ext_order = 2 * spec.order if spec.ext_order is None else spec.ext_order
    scheme = named_scheme(spec.extension, ext_order, spec.out_of_reach)
    reference = exact_potential_product(get_profile(spec.profile), spec.lambda2, x)

    def evaluate(h_inv):
        h = 1.0 / h_inv
        value = evaluate_potential(density, box, Grid(h, spec.shape_d, spec.radius_r), spec.order,
                                   spec.lambda2, quad, scheme, grid_index(x, h))
        if not np.isfinite(value):
            raise FloatingPointError(f"non-finite potential at h = 1/{h_inv:g}")
        return value

    return convergence_table(evaluate, reference, spec.h_inv)


def _num(v) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def format_rows(rows, fmt: str = "csv", timing: bool = True) -> str:
    """Render rows as CSV (``h_inv,error,rate,seconds``) or a markdown table.

    With ``timing=False`` the seconds column is left blank so that output is
    byte-identical across runs.
    """
    def cells(row):
        rate = "" if row.rate is None else f"{row.rate:.4f}"
        secs = f"{row.seconds:.3f}" if timing else ""
        return [_num(row.h_inv), f"{row.error:.3e}", rate, secs]

    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["h_inv", "error", "rate", "seconds"])
        writer.writerows(cells(r) for r in rows)
        return buf.getvalue()
    if fmt == "markdown":
        lines = ["| h^-1 | error | rate | seconds |", "|---:|---:|---:|---:|"]
        lines += ["| " + " | ".join(cells(r)) + " |" for r in rows]
        return "\n".join(lines) + "\n"
    raise UsageError(f"format must be one of {FORMATS}")


def _int_list(text):
    return tuple(_parse_number(v) for v in _split(text))


def _float_list(text):
    return tuple(float(v) for v in _split(text))


def _split(text):
    return [v for v in (s.strip() for s in str(text).split(",")) if v]


def _parse_number(text):
    v = float(text)
    return int(v) if v.is_integer() else v


def _bool(text):
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# RunSpec field -> parser for string values from flags or config files.
_PARSERS = {
    "dimension": int,
    "profile": str,
    "order": int,
    "lambda_re": float,
    "lambda_im": float,
    "extension": str,
    "ext_order": lambda s: None if str(s).lower() in ("", "none", "auto") else int(s),
    "out_of_reach": str,
    "shape_d": float,
    "radius_r": float,
    "alpha": float,
    "beta": float,
    "tau": float,
    "node_lo": int,
    "node_hi": int,
    "h_inv": _int_list,
    "point": _float_list,
    "format": str,
    "timing": _bool,
}
assert set(_PARSERS) == {f.name for f in fields(RunSpec)}


def read_config(path) -> dict:
    """Parse a ``key = value`` file; ``#`` starts a comment, keys may use dashes."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in _PARSERS:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _convert(key, value)
    return values


def _convert(key, value):
    try:
        return _PARSERS[key](value)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid value for {key.replace('_', '-')}: {value!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="volpot-table",
        description="Tabulate cubature errors for the potential of a product test density over [-1,1]^n.",
    )
    p.add_argument("--preset", choices=sorted(PRESETS), help="start from a stored parameter set")
    p.add_argument("--config", help="key = value file; keys match the long flag names")
    p.add_argument("--dimension", "-n", help="space dimension n")
    p.add_argument("--profile", help=f"test profile u, one of {', '.join(sorted(PROFILES))}")
    p.add_argument("--order", "-M", help="order M (cubature order 2M)")
    p.add_argument("--lambda-re", help="real part of lambda^2")
    p.add_argument("--lambda-im", help="imaginary part of lambda^2")
    p.add_argument("--extension", help=f"one of {', '.join(EXTENSIONS)}")
    p.add_argument("--ext-order", help="extension order N (default 2M)")
    p.add_argument("--out-of-reach", help="what to do when a reflection leaves the box: raise or formula")
    p.add_argument("--shape-d", help="shape parameter D")
    p.add_argument("--radius-r", help="support radius r")
    p.add_argument("--alpha", help="outer substitution constant")
    p.add_argument("--beta", help="inner substitution constant")
    p.add_argument("--tau", help="trapezoid step")
    p.add_argument("--node-lo", help="lowest trapezoid node index")
    p.add_argument("--node-hi", help="highest trapezoid node index")
    p.add_argument("--h-inv", help="comma-separated inverse steps, e.g. 10,20,40")
    p.add_argument("--point", help="comma-separated evaluation point; missing coordinates are 0")
    p.add_argument("--format", help="csv or markdown")
    p.add_argument("--no-timing", dest="timing", action="store_const", const="false",
                   help="leave the seconds column blank (byte-stable output)")
    p.add_argument("--output", "-o", help="write the table here instead of stdout")
    return p


def build_spec(args: argparse.Namespace) -> RunSpec:
    spec = PRESETS[args.preset] if args.preset else RunSpec()
    overrides = read_config(args.config) if args.config else {}
    for key in _PARSERS:
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = _convert(key, value)
    return replace(spec, **overrides)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        spec = build_spec(args)
        rows = run_table(spec)
        text = format_rows(rows, spec.format, spec.timing)
    except (OutOfReachError, SingularSystemError, AccuracyNotMetError, FloatingPointError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
