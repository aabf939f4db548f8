"""Command-line front end: sweeps and maps written as CSV or PGM.

Every CSV starts with a ``# config`` line holding the fully resolved
configuration, followed by a header row. Floats use ``%.17g``, and line
endings are LF. Exit status is 0 on success, 1 on a numeric failure and
2 on a usage error.
"""

from __future__ import annotations

import argparse
import io
import math
import sys
from typing import Optional

import numpy as np

from .asymptotics import (
    default_moments,
    domain_moments,
    integrability_check,
    large_r0,
    rayleigh_mellin_constant,
    small_r0_leading,
    small_r0_second_order,
)
from .cantor import (
    CantorSpec,
    build_cantor_series,
    cantor_entropy_curve,
    cantor_moment_series,
    cdf_recursion_bound,
    cdf_recursion_check,
    mellin_psi,
)
from .connect import ConnectionFunction, FermiDirac, PowerLaw, Rayleigh, binary_entropy, parse_connection
from .entropy import (
    compressibility_difference,
    entropy_per_edge_mc,
    entropy_per_edge_quadrature,
    mean_connection_prob,
)
from .errors import DomainError, UnsupportedError
from .geometry import CLOSED_FORM_KINDS, Domain, DomainKind, empirical_distance_cdf, small_r_coeffs
from .mass import WedgePoint, entropy_mass, mass_map, rho_moments, wedge_mass_leading

COMMANDS = ("curve", "asym", "mass", "wedge", "cantor", "compress", "moments", "check")

# Per-command defaults; anything missing here falls back to COMMON.
COMMON = {
    "domain": "interval",
    "conn": "rayleigh:eta=2",
    "method": "quadrature",
    "n_pairs": 100_000,
    "workers": 1,
    "depth": 64,
    "bits": False,
    "alpha": 3.0,
    "grid": "128x128",
    "quantity": "entropy",
    "radii": "0.01:0.04:3:log",
    "omega": None,
    "large": False,
}
DEFAULTS = {
    "curve": {"r0": "0.01:1:50:log", "method": "both"},
    "asym": {"r0": "0.001:0.1:21:log"},
    "mass": {"domain": "square", "r0": "0.05"},
    "wedge": {"domain": "wedge:theta=0.7853981633974483,radius=10", "r0": "1"},
    "cantor": {"conn": "rayleigh:eta=4", "r0": "0.001:0.01:11:log", "method": "both"},
    "compress": {"r0": "0.0001:100:25:log"},
    "moments": {"r0": "1"},
    "check": {"r0": "1"},
}
LARGE_R0_GRID = "2:100:25:log"

# Keys recorded in the config line; worker count and paths never change the numbers.
_BASE_KEYS = ("domain", "conn", "r0", "method", "n_pairs", "seed", "bits")
EXTRA_KEYS = {
    "asym": ("large",),
    "mass": ("grid", "quantity"),
    "wedge": ("radii", "omega"),
    "cantor": ("alpha", "depth"),
    "check": ("alpha", "depth"),
}


class UsageError(Exception):
    """Bad flags or configuration; reported with exit status 2."""


def parse_r0_grid(text: str) -> np.ndarray:
    """``start:stop:count:log|lin`` or a single positive number."""
    parts = str(text).split(":")
    try:
        if len(parts) == 1:
            grid = np.array([float(parts[0])])
        elif len(parts) == 4:
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
            if count < 1:
                raise UsageError("r0 grid count must be at least 1")
            if parts[3] == "log":
                if not (start > 0 and stop > 0):
                    raise UsageError("log r0 grid needs positive endpoints")
                grid = np.geomspace(start, stop, count)
            elif parts[3] in ("lin", "linear"):
                grid = np.linspace(start, stop, count)
            else:
                raise UsageError(f"r0 grid spacing must be log or lin, got {parts[3]!r}")
        else:
            raise UsageError(f"r0 grid must be start:stop:count:log|lin, got {text!r}")
    except ValueError as exc:
        raise UsageError(f"bad r0 grid {text!r}") from exc
    if not np.all(np.isfinite(grid) & (grid > 0)):
        raise UsageError("every r0 must be positive and finite")
    return grid


def parse_grid(text: str) -> tuple:
    """``NxM`` as ``(nx, ny)``."""
    try:
        nx, ny = (int(v) for v in str(text).lower().split("x"))
    except ValueError as exc:
        raise UsageError(f"grid must look like 128x128, got {text!r}") from exc
    if nx < 1 or ny < 1:
        raise UsageError("grid dimensions must be positive")
    return nx, ny


def read_config_file(path: str) -> dict:
    """Flat ``key = value`` pairs; ``#`` starts a comment."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path!r}: {exc}") from exc
    for num, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        if not eq:
            raise UsageError(f"{path}:{num}: expected key = value")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _truthy(v) -> bool:
    return v if isinstance(v, bool) else str(v).lower() in ("1", "true", "yes", "on")


_CONVERT = {
    "n_pairs": lambda v: int(float(v)),
    "seed": int,
    "workers": int,
    "depth": int,
    "alpha": float,
    "omega": float,
    "large": lambda v: _truthy(v),
    "bits": lambda v: _truthy(v),
    "gnuplot": lambda v: _truthy(v),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="srgg-entropy",
        description="Entropy of soft random geometric graphs: sweeps, asymptotes and maps.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "curve": "entropy-per-edge against r0 by quadrature and/or Monte Carlo",
        "asym": "quadrature against the small- and large-r0 asymptotes",
        "mass": "entropy or connectivity mass map over a planar domain",
        "wedge": "leading-order corner mass against quadrature in a wedge",
        "cantor": "Cantor-set entropy: Monte Carlo against the log-periodic series",
        "compress": "compressibility gap to the matched Erdos-Renyi graph",
        "moments": "pair-distance and entropy-graph moments",
        "check": "run a fast invariant suite; exit 0 iff all pass",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name], description=helps[name])
        # Every option defaults to None so config-file values can fill gaps.
        p.add_argument("--domain", help="interval, torus1d, square, disk, cube, ball or wedge:theta=..,radius=..")
        p.add_argument("--conn", help="rayleigh:eta=2, fermi:alpha=0, powerlaw:alpha=3, hard or const:q=0.1")
        p.add_argument("--r0", help="start:stop:count:log|lin or a single value")
        p.add_argument("--method", help="quadrature, mc or both (where applicable)")
        p.add_argument("--n-pairs", dest="n_pairs", type=lambda v: int(float(v)),
                       help="Monte-Carlo sample size")
        p.add_argument("--seed", type=int, help="master random seed (mandatory)")
        p.add_argument("--out", help="output CSV path (default: stdout)")
        p.add_argument("--config", help="key = value file; explicit flags take precedence")
        p.add_argument("--workers", type=int, help="worker threads; output does not depend on it")
        p.add_argument("--gnuplot", action="store_true", default=None,
                       help="also write <out>.gp, a minimal gnuplot recipe")
        p.add_argument("--bits", action="store_true", default=None,
                       help="report entropies in bits instead of nats")
        if name == "asym":
            p.add_argument("--large", action="store_true", default=None,
                           help="use the large-r0 default grid")
        if name == "mass":
            p.add_argument("--grid", help="cells as NxM (default 128x128)")
            p.add_argument("--pgm", help="also write a 16-bit PGM image here")
            p.add_argument("--quantity", choices=("entropy", "connectivity"))
        if name == "wedge":
            p.add_argument("--radii", help="corner distances as start:stop:count:log|lin")
            p.add_argument("--omega", type=float, help="polar angle of the probe points (default theta/2)")
        if name in ("cantor", "check"):
            p.add_argument("--alpha", type=float, help="Cantor contraction ratio (> 2)")
            p.add_argument("--depth", type=int, help="digits per Cantor sample (default 64)")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge flags over config-file values over command defaults."""
    file_cfg = read_config_file(args.config) if args.config else {}
    cmd = args.command
    if "command" in file_cfg and file_cfg["command"] != cmd:
        raise UsageError(f"config file is for {file_cfg['command']!r}, not {cmd!r}")
    cfg = dict(COMMON)
    cfg.update(DEFAULTS[cmd])
    if cmd == "asym" and (args.large or _truthy(file_cfg.get("large", ""))):
        cfg["r0"] = LARGE_R0_GRID
    known = set(cfg) | {"seed", "out", "pgm", "gnuplot", "config"}
    for key, value in file_cfg.items():
        if key == "command":
            continue
        if key not in known:
            raise UsageError(f"unknown config key {key!r}")
        try:
            cfg[key] = _CONVERT.get(key, str)(value)
        except ValueError as exc:
            raise UsageError(f"bad value for {key}: {value!r}") from exc
    for key, value in vars(args).items():
        if value is not None and key not in ("command", "config"):
            cfg[key] = value
    cfg["command"] = cmd
    cfg.setdefault("out", None)
    cfg.setdefault("pgm", None)
    cfg.setdefault("gnuplot", False)
    if cfg.get("seed") is None:
        raise UsageError("--seed is mandatory")
    if cfg["workers"] < 1:
        raise UsageError("--workers must be at least 1")
    if cfg["n_pairs"] < 1000:
        raise UsageError("--n-pairs must be at least 1000")
    try:
        cfg["_domain"] = Domain.parse(cfg["domain"])
        cfg["_conn"] = parse_connection(cfg["conn"])
    except (DomainError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    cfg["_r0"] = parse_r0_grid(cfg["r0"])
    return cfg


def config_line(cfg: dict) -> str:
    keys = _BASE_KEYS + EXTRA_KEYS.get(cfg["command"], ())
    def show(v):
        return str(v).lower() if isinstance(v, bool) else str(v)

    return "# config command=" + cfg["command"] + " " + " ".join(f"{k}={show(cfg[k])}" for k in keys)


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return "%.17g" % float(v)


class CsvWriter:
    """Buffers rows and writes them with LF endings in one go."""

    def __init__(self, cfg: dict, header: str):
        self.cfg = cfg
        self.header = header
        self.buf = io.StringIO()
        self.buf.write(config_line(cfg) + "\n")
        self.buf.write(header + "\n")

    def row(self, *values) -> None:
        self.buf.write(",".join(_fmt(v) for v in values) + "\n")

    def close(self) -> None:
        text = self.buf.getvalue()
        out = self.cfg.get("out")
        if out in (None, "-"):
            sys.stdout.write(text)
            sys.stdout.flush()
        else:
            with open(out, "w", newline="\n", encoding="utf-8") as fh:
                fh.write(text)
        if self.cfg.get("gnuplot"):
            write_gnuplot(self.cfg, self.header)


def write_gnuplot(cfg: dict, header: str) -> None:
    out = cfg.get("out")
    if out in (None, "-"):
        raise UsageError("--gnuplot needs --out")
    cols = header.split(",")
    lines = ["set datafile separator ','", "set key autotitle columnhead"]
    if cfg["command"] == "mass":
        lines += ["set view map", f"splot '{out}' using 1:2:3 with image"]
    else:
        if cfg["command"] in ("curve", "asym", "cantor", "compress"):
            lines.append("set logscale xy")
        plots = [f"'{out}' using 1:{i}" for i, c in enumerate(cols[1:], 2)
                 if c not in ("method", "domain", "connection", "std_error", "mc_stderr",
                              "series_err_bound")]
        lines.append("plot " + ", ".join(plots))
    with open(f"{out}.gp", "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _single_r0(cfg: dict) -> float:
    if len(cfg["_r0"]) != 1:
        raise UsageError(f"{cfg['command']} takes a single r0 value")
    return float(cfg["_r0"][0])


def _methods(cfg: dict, allowed: tuple) -> tuple:
    m = cfg["method"]
    if m == "both":
        return allowed
    if m == "monte-carlo":
        m = "mc"
    if m not in allowed:
        raise UsageError(f"method must be one of {', '.join(allowed + ('both',))}, got {m!r}")
    return (m,)


# Stream ids for samples that are not tied to one grid point.
_DENSITY_STREAM, _MOMENT_STREAM = 1 << 32, (1 << 32) + 1


def _rng(cfg: dict, index: int) -> np.random.SeedSequence:
    """Independent stream per grid point, derived from the master seed."""
    return np.random.SeedSequence(cfg["seed"], spawn_key=(index,))


def _unit(cfg: dict) -> float:
    """Factor converting nats to the requested display unit."""
    return 1.0 / math.log(2.0) if cfg.get("bits") else 1.0


def cmd_curve(cfg: dict) -> int:
    domain, conn = cfg["_domain"], cfg["_conn"]
    methods = _methods(cfg, ("quadrature", "mc"))
    density = None
    if "quadrature" in methods and domain.kind not in CLOSED_FORM_KINDS:
        density = empirical_distance_cdf(domain, cfg["n_pairs"], _rng(cfg, _DENSITY_STREAM))
    w = CsvWriter(cfg, "r0,value,std_error,method,domain,connection")
    for i, r0 in enumerate(cfg["_r0"]):
        for m in methods:
            if m == "quadrature":
                est = entropy_per_edge_quadrature(domain, conn, r0, density=density)
            else:
                est = entropy_per_edge_mc(domain, conn, r0, cfg["n_pairs"], _rng(cfg, i),
                                          workers=cfg["workers"])
            u = _unit(cfg)
            w.row(r0, u * est.value, u * est.std_error, est.method.value, str(domain), str(conn))
    w.close()
    return 0


def _require_rayleigh(conn: ConnectionFunction) -> float:
    if not isinstance(conn, Rayleigh):
        raise UsageError("the closed-form asymptotes need a rayleigh connection")
    return conn.eta


def cmd_asym(cfg: dict) -> int:
    domain, conn = cfg["_domain"], cfg["_conn"]
    eta = _require_rayleigh(conn)
    if domain.d not in (1, 2, 3):
        raise UsageError("asymptotes need a domain of dimension 1, 2 or 3")
    density = None
    if domain.kind not in CLOSED_FORM_KINDS:
        density = empirical_distance_cdf(domain, cfg["n_pairs"], _rng(cfg, _DENSITY_STREAM))
    moments = default_moments(domain, eta, cfg["n_pairs"], _rng(cfg, _MOMENT_STREAM))
    coeffs = small_r_coeffs(domain)
    w = CsvWriter(cfg, "r0,quadrature,leading,second_order,large_r0")
    for r0 in cfg["_r0"]:
        quad = entropy_per_edge_quadrature(domain, conn, r0, density=density).value
        lead = small_r0_leading(domain.d, eta, r0, coeffs.s_leading).value
        second = small_r0_second_order(domain, eta, r0).value if coeffs.valid else math.nan
        large = large_r0(domain, eta, r0, moments)
        u = _unit(cfg)
        w.row(r0, u * quad, u * lead, u * second, u * large.value)
    w.close()
    return 0


def cmd_mass(cfg: dict) -> int:
    domain, conn = cfg["_domain"], cfg["_conn"]
    r0 = _single_r0(cfg)
    (method,) = _methods(cfg, ("quadrature", "mc"))
    nx, ny = parse_grid(cfg["grid"])
    mm = mass_map(domain, conn, r0, nx, ny, method, budget=cfg["n_pairs"],
                  rng=_rng(cfg, 0), quantity=cfg["quantity"], workers=cfg["workers"])
    u = _unit(cfg) if cfg["quantity"] == "entropy" else 1.0
    w = CsvWriter(cfg, "x,y,value")
    for j, y in enumerate(mm.ys):
        for i, x in enumerate(mm.xs):
            w.row(x, y, u * mm.values[j, i])
    w.close()
    if cfg.get("pgm"):
        mm.write_pgm(cfg["pgm"])
    return 0


def cmd_wedge(cfg: dict) -> int:
    domain, conn = cfg["_domain"], cfg["_conn"]
    if domain.kind is not DomainKind.WEDGE:
        raise UsageError("wedge needs a wedge domain")
    r0 = _single_r0(cfg)
    theta = domain.theta
    omega = 0.5 * theta if cfg.get("omega") is None else float(cfg["omega"])
    cfg["omega"] = omega
    moments = rho_moments(conn, r0)
    w = CsvWriter(cfg, "r,omega,leading,quadrature,residual")
    for r in parse_r0_grid(cfg["radii"]):
        wp = WedgePoint(float(r), omega, theta)
        lead = wedge_mass_leading(wp, moments)
        quad = entropy_mass(domain, conn, r0, wp.cartesian()).value
        u = _unit(cfg)
        w.row(r, omega, u * lead, u * quad, u * (quad - lead))
    w.close()
    return 0


def cmd_cantor(cfg: dict) -> int:
    conn = cfg["_conn"]
    try:
        spec = CantorSpec(cfg["alpha"], cfg["depth"])
    except DomainError as exc:
        raise UsageError(str(exc)) from exc
    methods = _methods(cfg, ("mc", "series"))
    r0s = cfg["_r0"]
    if "mc" in methods:
        means, errs = cantor_entropy_curve(spec, conn, r0s, cfg["n_pairs"], _rng(cfg, 0),
                                           workers=cfg["workers"])
    else:
        means = errs = np.full(len(r0s), math.nan)
    series = None
    if "series" in methods:
        series = build_cantor_series(spec, conn, seed=_rng(cfg, 1))
    w = CsvWriter(cfg, "r0,mc_value,mc_stderr,series_value,series_err_bound")
    for r0, mv, me in zip(r0s, means, errs):
        sv = series.value(r0) if series else math.nan
        sb = series.error_bound(r0) if series else math.nan
        u = _unit(cfg)
        w.row(r0, u * mv, u * me, u * sv, u * sb)
    w.close()
    return 0


def cmd_compress(cfg: dict) -> int:
    domain, conn = cfg["_domain"], cfg["_conn"]
    w = CsvWriter(cfg, "r0,delta_c,p_bar")
    for i, r0 in enumerate(cfg["_r0"]):
        dc = compressibility_difference(domain, conn, r0, cfg["n_pairs"], _rng(cfg, i))
        method = "quadrature" if domain.kind in CLOSED_FORM_KINDS else "mc"
        pb = mean_connection_prob(domain, conn, r0, method, cfg["n_pairs"], _rng(cfg, i))
        w.row(r0, _unit(cfg) * dc, pb)
    w.close()
    return 0


def cmd_moments(cfg: dict) -> int:
    domain, conn = cfg["_domain"], cfg["_conn"]
    r0 = _single_r0(cfg)
    w = CsvWriter(cfg, "name,value,std_error,method")
    if isinstance(conn, Rayleigh):
        eta = conn.eta
        if domain.kind in CLOSED_FORM_KINDS:
            m = domain_moments(domain, eta)
        else:
            m = domain_moments(domain, eta, "mc", cfg["n_pairs"], _rng(cfg, 0))
        w.row("E[R^eta]", m.e_r_eta, m.std_errors[0], m.method)
        w.row("E[R^eta log R]", m.e_r_eta_log, m.std_errors[1], m.method)
        w.row("psi(d)", _unit(cfg) * rayleigh_mellin_constant(domain.d, eta), 0.0, "closed-form")
    rm = rho_moments(conn, r0)
    for name, v in (("rho_0", rm.rho0), ("rho_1", rm.rho1), ("rho_2", rm.rho2),
                    ("rho(0)", rm.rho_at_0)):
        w.row(name, _unit(cfg) * v, 0.0, "quadrature")
    w.close()
    return 0


def _check_suite(cfg: dict) -> list:
    """``(name, passed, detail)`` for a fast set of invariants."""
    seed = cfg["seed"]
    out = []

    def add(name, passed, detail):
        out.append((name, bool(passed), detail))

    sq, ray = Domain.parse("square"), Rayleigh(2.0)
    q = entropy_per_edge_quadrature(sq, ray, 0.2).value
    mc = entropy_per_edge_mc(sq, ray, 0.2, 200_000, seed, workers=cfg["workers"])
    add("quadrature_vs_mc", abs(q - mc.value) <= 4 * mc.std_error,
        f"{q:.8g} vs {mc.value:.8g}+-{mc.std_error:.2g}")

    mc1 = entropy_per_edge_mc(sq, ray, 0.2, 200_000, seed, chunk_size=1 << 14, workers=1)
    mc4 = entropy_per_edge_mc(sq, ray, 0.2, 200_000, seed, chunk_size=1 << 14, workers=4)
    add("mc_worker_invariance", mc1.value == mc4.value, f"{mc1.value!r}")

    p = np.linspace(0.0, 1.0, 101)
    h = binary_entropy(p)
    add("h2_symmetry", np.allclose(h, h[::-1], atol=1e-15, rtol=0) and abs(h[50] - math.log(2)) < 1e-15,
        f"h2(0.5)={float(h[50])!r}")

    interval = Domain.parse("interval")
    ratio = (entropy_per_edge_quadrature(interval, ray, 1e-3).value
             / small_r0_leading(1, 2.0, 1e-3, 2.0).value)
    add("small_r0_ratio", 0.98 <= ratio <= 1.02, f"{ratio:.6f}")

    add("entropy_bounds", 0.0 <= q <= math.log(2.0), f"{q:.8g}")

    psi = mellin_psi(ray, 2.0).real
    add("mellin_psi_2", abs(psi - math.pi**2 / 12) < 1e-10, f"{psi!r}")

    spec = CantorSpec(cfg["alpha"], cfg["depth"])
    c2 = cantor_moment_series(CantorSpec(3.0), -2.0).real
    add("cantor_moment_fixed_point", abs(c2 - 0.125) < 1e-12, f"{c2!r}")
    dev = cdf_recursion_check(spec, 100_000, seed)
    add("cantor_cdf_recursion", dev <= cdf_recursion_bound(100_000), f"{dev:.3g}")

    r0 = 0.02
    centre = entropy_mass(sq, ray, r0, (0.5, 0.5)).value
    corner = entropy_mass(sq, ray, r0, (0.0, 0.0)).value
    add("mass_corner_ratio", abs(corner / centre - 0.25) < 0.0125, f"{corner / centre:.6f}")

    classes = [(PowerLaw(3.0), 3, "SuperPolynomial"), (PowerLaw(3.0), 2, "ThetaR0PowD"),
               (FermiDirac(0.0), 2, "ThetaR0PowD"), (ray, 3, "ThetaR0PowD")]
    reports = [(integrability_check(c, d), want) for c, d, want in classes]
    ok = all(r.analytic.value == want and r.agrees for r, want in reports)
    add("integrability_classes", ok, "powerlaw, fermi, rayleigh")
    return out


def cmd_check(cfg: dict) -> int:
    results = _check_suite(cfg)
    w = CsvWriter(cfg, "check,passed,detail")
    for name, passed, detail in results:
        w.row(name, "true" if passed else "false", detail.replace(",", ";"))
    w.close()
    return 0 if all(p for _, p, _ in results) else 1


HANDLERS = {
    "curve": cmd_curve,
    "asym": cmd_asym,
    "mass": cmd_mass,
    "wedge": cmd_wedge,
    "cantor": cmd_cantor,
    "compress": cmd_compress,
    "moments": cmd_moments,
    "check": cmd_check,
}


def run(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve(args)
        return HANDLERS[cfg["command"]](cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, ValueError, UnsupportedError) as exc:
        print(f"{parser.prog}: numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
