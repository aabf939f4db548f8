"""Entropy mass and connectivity mass of points in planar domains.

For a convex planar domain the mass at ``x`` is written in polar
coordinates around ``x``:

    H_x = int_0^{2 pi} G(L(phi)) dphi,    G(L) = int_0^L g(r) r dr,

where ``L(phi)`` is the distance from ``x`` to the boundary in direction
``phi`` and ``g`` is ``h2 o p`` (entropy mass) or ``p`` (connectivity mass).
``G`` is tabulated once per connection function, so each point costs a
one-dimensional integral.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate

from ._mc import as_seed_sequence
from .connect import ConnectionFunction, Constant, Hard, PowerLaw, rho_scaled
from .errors import ConvergenceError, DivergentError, DomainError, UnsupportedError
from .geometry import Domain, DomainKind, pair_distances, sample_points

_QUAD_KINDS = (DomainKind.SQUARE, DomainKind.DISK, DomainKind.WEDGE)
_GL8_X, _GL8_W = np.polynomial.legendre.leggauss(8)


def _weight(conn: ConnectionFunction, quantity: str):
    if quantity == "entropy":
        return lambda x: rho_scaled(conn, x)
    if quantity == "connectivity":
        return lambda x: conn.prob_pair(x)[0]
    raise DomainError(f"unknown quantity {quantity!r}")


class RadialProfile:
    """Tabulated ``G(L) = int_0^L g(r / r0) r dr`` on ``[0, upper]``.

    Nodes are spaced ``min(r0, upper) / 64`` apart so every kink of the
    connection function at ``r = r0`` is a node; values between nodes add an
    8-point Gauss-Legendre integral from the node below.
    """

    def __init__(self, conn: ConnectionFunction, r0: float, upper: float,
                 quantity: str = "entropy", per_scale: int = 64, max_nodes: int = 4_000_000):
        if not (r0 > 0 and upper > 0):
            raise DomainError("r0 and upper must be positive")
        self.r0, self.upper = r0, upper
        self._g = _weight(conn, quantity)
        self.h = min(r0, upper) / per_scale
        n = int(math.ceil(upper / self.h))
        if n > max_nodes:
            raise UnsupportedError(f"profile would need {n} nodes; r0 too small for this domain")
        self.nodes = r0 * np.arange(n + 1) / per_scale if r0 <= upper else self.h * np.arange(n + 1)
        a, b = self.nodes[:-1], self.nodes[1:]
        self.cumulative = np.concatenate(([0.0], np.cumsum(self._segment(a, b))))

    def _segment(self, a, b):
        half = 0.5 * (b - a)
        r = (a + b)[..., None] * 0.5 + half[..., None] * _GL8_X
        return half * ((self._g(r / self.r0) * r) @ _GL8_W)

    def __call__(self, length):
        length = np.clip(np.asarray(length, dtype=float), 0.0, self.upper)
        idx = np.minimum((length / self.h).astype(np.int64), len(self.nodes) - 2)
        idx = np.where(self.nodes[idx] > length, idx - 1, idx).clip(0)
        out = self.cumulative[idx] + self._segment(self.nodes[idx], length)
        return out if out.ndim else float(out)


def _check_quad_domain(domain: Domain):
    if domain.kind not in _QUAD_KINDS:
        raise UnsupportedError(f"quadrature mass needs a square, disk or wedge, not {domain.kind.value}")


def _vertices(domain: Domain) -> np.ndarray:
    if domain.kind is DomainKind.SQUARE:
        return np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    if domain.kind is DomainKind.WEDGE:
        t, R = domain.theta, domain.radius
        return np.array([[0.0, 0.0], [R, 0.0], [R * math.cos(t), R * math.sin(t)]])
    return np.zeros((0, 2))


def exit_distance(domain: Domain, x, phi):
    """Distance from ``x`` to the boundary along direction ``phi``.

    ``x`` has shape ``(..., 2)`` and broadcasts against ``phi``.
    """
    x = np.asarray(x, dtype=float)
    phi = np.asarray(phi, dtype=float)
    px, py = x[..., 0], x[..., 1]
    ux, uy = np.cos(phi), np.sin(phi)
    big = np.inf

    def halfplane(nx, ny, c):
        # Constraint n.y >= c; exit when moving against n.
        dot = nx * ux + ny * uy
        slack = nx * px + ny * py - c
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(dot < 0, slack / -dot, big)
        return np.maximum(t, 0.0)

    if domain.kind is DomainKind.SQUARE:
        return np.minimum.reduce([halfplane(1, 0, 0), halfplane(-1, 0, -1),
                                  halfplane(0, 1, 0), halfplane(0, -1, -1)])
    R = 1.0 if domain.kind is DomainKind.DISK else domain.radius
    b = px * ux + py * uy
    disc = np.maximum(b * b - (px * px + py * py) + R * R, 0.0)
    t_circle = np.maximum(-b + np.sqrt(disc), 0.0)
    if domain.kind is DomainKind.DISK:
        return t_circle
    th = domain.theta
    return np.minimum.reduce([t_circle, halfplane(0.0, 1.0, 0.0),
                              halfplane(math.sin(th), -math.cos(th), 0.0)])


def _arc_edges(domain: Domain, x) -> np.ndarray:
    """Sorted split angles (with wraparound) at the directions of vertices."""
    v = _vertices(domain) - np.asarray(x, dtype=float)
    keep = np.hypot(v[:, 0], v[:, 1]) > 1e-14
    ang = np.sort(np.mod(np.arctan2(v[keep, 1], v[keep, 0]), 2 * np.pi))
    if len(ang) == 0:
        return np.array([0.0, 2 * np.pi])
    return np.concatenate((ang, [ang[0] + 2 * np.pi]))


def _quadrature_mass(domain, profile, x, tol):
    edges = _arc_edges(domain, x)
    total = 0.0
    per_arc = tol / (len(edges) - 1)
    for a, b in zip(edges, edges[1:]):
        val, err, *_ = integrate.quad(lambda p: profile(exit_distance(domain, x, p)), a, b,
                                      epsabs=per_arc, epsrel=1e-12, limit=400, full_output=1)
        if err > max(per_arc, 1e-12 * abs(val)):
            raise ConvergenceError(f"angular quadrature error {err:.3g} exceeds tolerance")
        total += val
    return total


def _mc_mass(domain, conn, r0, x, quantity, budget, rng):
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(as_seed_sequence(rng))
    y = sample_points(domain, gen, budget)
    vals = _weight(conn, quantity)(pair_distances(domain, np.broadcast_to(x, y.shape), y) / r0)
    vol = domain.volume
    return vol * float(vals.mean()), vol * float(vals.std(ddof=1)) / math.sqrt(budget)


@dataclass(frozen=True)
class MassEstimate:
    value: float
    std_error: float
    method: str


def _mass(domain, conn, r0, x, quantity, method, budget, rng, tol, profile=None):
    if not r0 > 0:
        raise DomainError("r0 must be positive")
    x = np.asarray(x, dtype=float)
    if not domain.contains(x):
        raise DomainError(f"point {x.tolist()} lies outside the domain")
    if method == "quadrature":
        _check_quad_domain(domain)
        profile = profile or RadialProfile(conn, r0, domain.diameter, quantity)
        return MassEstimate(_quadrature_mass(domain, profile, x, tol), 0.0, method)
    if method in ("mc", "monte-carlo"):
        if budget < 2:
            raise DomainError("budget must be at least 2")
        return MassEstimate(*_mc_mass(domain, conn, r0, x, quantity, budget, rng), "monte-carlo")
    raise DomainError(f"unknown method {method!r}")


def entropy_mass(domain: Domain, conn: ConnectionFunction, r0: float, x,
                 method: str = "quadrature", budget: int = 10**5, rng=None,
                 tol: float = 1e-10, profile: Optional[RadialProfile] = None) -> MassEstimate:
    """``H_x = int h2(p(|x - y| / r0)) dy`` over the domain."""
    return _mass(domain, conn, r0, x, "entropy", method, budget, rng, tol, profile)


def connectivity_mass(domain: Domain, conn: ConnectionFunction, r0: float, x,
                      method: str = "quadrature", budget: int = 10**5, rng=None,
                      tol: float = 1e-10) -> MassEstimate:
    """``M(x) = int p(|x - y| / r0) dy`` over the domain."""
    return _mass(domain, conn, r0, x, "connectivity", method, budget, rng, tol)


def bounding_box(domain: Domain) -> tuple:
    """``(xmin, xmax, ymin, ymax)`` of a planar domain."""
    k = domain.kind
    if k is DomainKind.SQUARE:
        return 0.0, 1.0, 0.0, 1.0
    if k is DomainKind.DISK:
        return -1.0, 1.0, -1.0, 1.0
    if k is DomainKind.WEDGE:
        t, R = domain.theta, domain.radius
        ymax = R if t >= math.pi / 2 else R * math.sin(t)
        return min(0.0, R * math.cos(t)), R, 0.0, ymax
    raise UnsupportedError(f"mass maps need a planar domain, not {k.value}")


@dataclass(frozen=True)
class MassMap:
    """Entropy (or connectivity) mass sampled at cell centres.

    ``values[j, i]`` belongs to ``(xs[i], ys[j])``; cells whose centre lies
    outside the domain hold NaN.
    """

    xs: np.ndarray = field(repr=False)
    ys: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    domain: Domain
    conn: ConnectionFunction
    r0: float
    method: str

    def argmax(self) -> tuple:
        j, i = np.unravel_index(np.nanargmax(self.values), self.values.shape)
        return float(self.xs[i]), float(self.ys[j])

    def write_csv(self, path, comment: str = "") -> None:
        with open(path, "w", newline="\n") as fh:
            if comment:
                fh.write(f"# {comment}\n")
            fh.write("x,y,value\n")
            for j, y in enumerate(self.ys):
                for i, x in enumerate(self.xs):
                    fh.write("%.17g,%.17g,%.17g\n" % (x, y, self.values[j, i]))

    def write_pgm(self, path) -> tuple:
        """16-bit big-endian P5 image, top row at the largest ``y``.

        The linear scaling range is written to ``<path>.minmax``.
        """
        v = self.values
        lo, hi = float(np.nanmin(v)), float(np.nanmax(v))
        span = hi - lo if hi > lo else 1.0
        scaled = np.where(np.isnan(v), 0.0, np.round((v - lo) / span * 65535.0))
        img = scaled[::-1].astype(">u2")
        ny, nx = img.shape
        with open(path, "wb") as fh:
            fh.write(f"P5\n{nx} {ny}\n65535\n".encode("ascii"))
            fh.write(img.tobytes())
        with open(f"{path}.minmax", "w", newline="\n") as fh:
            fh.write("min,max\n%.17g,%.17g\n" % (lo, hi))
        return lo, hi


def _gl_block(domain, profile, pts, nodes, weights):
    out = np.empty(len(pts))
    for idx, x in enumerate(pts):
        edges = _arc_edges(domain, x)
        a, b = edges[:-1, None], edges[1:, None]
        phi = 0.5 * (a + b) + 0.5 * (b - a) * nodes
        g = profile(exit_distance(domain, x, phi))
        out[idx] = float(np.sum(0.5 * (b - a)[:, 0] * (g @ weights)))
    return out


def mass_map(domain: Domain, conn: ConnectionFunction, r0: float, nx: int, ny: int,
             method: str = "quadrature", budget: int = 10**4, rng=None,
             quantity: str = "entropy", nodes: int = 64, workers: int = 1,
             block: int = 256) -> MassMap:
    """Mass at the centres of an ``nx`` by ``ny`` grid over the bounding box.

    ``quadrature`` uses ``nodes`` Gauss-Legendre points per boundary arc.
    ``mc`` reuses one pool of ``budget`` uniform points for every cell.
    """
    if nx < 1 or ny < 1:
        raise DomainError("grid must be at least 1x1")
    x0, x1, y0, y1 = bounding_box(domain)
    xs = x0 + (np.arange(nx) + 0.5) * (x1 - x0) / nx
    ys = y0 + (np.arange(ny) + 0.5) * (y1 - y0) / ny
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack((gx.ravel(), gy.ravel()))
    inside = np.array([domain.contains(p) for p in pts])
    values = np.full(len(pts), np.nan)
    todo = pts[inside]
    if method == "quadrature":
        _check_quad_domain(domain)
        profile = RadialProfile(conn, r0, domain.diameter, quantity)
        gl_x, gl_w = np.polynomial.legendre.leggauss(nodes)
        blocks = [todo[i:i + block] for i in range(0, len(todo), block)]
        work = lambda b: _gl_block(domain, profile, b, gl_x, gl_w)
    elif method in ("mc", "monte-carlo"):
        gen = np.random.default_rng(as_seed_sequence(rng))
        pool = sample_points(domain, gen, budget)
        g = _weight(conn, quantity)
        blocks = [todo[i:i + 16] for i in range(0, len(todo), 16)]

        def work(b):
            diff = b[:, None, :] - pool[None, :, :]
            return domain.volume * g(np.sqrt(np.einsum("ijk,ijk->ij", diff, diff)) / r0).mean(axis=1)
    else:
        raise DomainError(f"unknown method {method!r}")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(work, blocks))
    else:
        parts = [work(b) for b in blocks]
    if parts:
        values[inside] = np.concatenate(parts)
    return MassMap(xs, ys, values.reshape(ny, nx), domain, conn, r0, method)


@dataclass(frozen=True)
class RhoMoments:
    """``rho_k = int_0^inf r^k h2(p(r / r0)) dr`` for ``k = 0, 1, 2``."""

    rho0: float
    rho1: float
    rho2: float
    rho_at_0: float


def _unit_moment(conn, k):
    """``int_0^inf x^k rho(x) dx`` after mapping ``x = t / (1 - t)``."""

    def f(t):
        x = t / (1.0 - t)
        return x**k * float(rho_scaled(conn, x)) / (1.0 - t) ** 2

    spikes = sorted({s / (1.0 + s) for s in (*conn.spikes(), 0.25, 1.0, 4.0, 16.0, 64.0)})
    edges = [0.0, *spikes, 1.0]
    total = 0.0
    for a, b in zip(edges, edges[1:]):
        val, err, *_ = integrate.quad(f, a, b, epsabs=1e-12, epsrel=1e-12, limit=400,
                                      full_output=1)
        if err > 1e-10:
            raise ConvergenceError(f"moment quadrature error {err:.3g}")
        total += val
    return total


def rho_moments(conn: ConnectionFunction, r0: float) -> RhoMoments:
    """Radial moments of the entropy-graph connection, scaled by ``r0``."""
    if not r0 > 0:
        raise DomainError("r0 must be positive")
    rho_at_0 = float(rho_scaled(conn, 0.0))
    if isinstance(conn, Hard) or (isinstance(conn, Constant) and conn.q in (0.0, 1.0)):
        return RhoMoments(0.0, 0.0, 0.0, rho_at_0)
    if isinstance(conn, Constant):
        raise DivergentError("moments of a constant connection diverge")
    if isinstance(conn, PowerLaw) and conn.alpha <= 3.0:
        raise DivergentError(f"rho_2 diverges for a power law with alpha = {conn.alpha} <= 3")
    m = [r0 ** (k + 1) * _unit_moment(conn, k) for k in range(3)]
    return RhoMoments(m[0], m[1], m[2], rho_at_0)


@dataclass(frozen=True)
class WedgePoint:
    """Polar position ``(r, omega)`` inside a wedge of angle ``theta``."""

    r: float
    omega: float
    theta: float

    def __post_init__(self):
        if self.r < 0 or not 0 <= self.omega <= self.theta or not 0 < self.theta <= math.pi:
            raise DomainError("need r >= 0, 0 <= omega <= theta <= pi")

    @property
    def omega_prime(self) -> float:
        return self.theta - self.omega

    def cartesian(self) -> np.ndarray:
        return np.array([self.r * math.cos(self.omega), self.r * math.sin(self.omega)])


def wedge_mass_leading(wp: WedgePoint, moments: RhoMoments) -> float:
    """Leading-order entropy mass near the corner of a wedge."""
    w, wq = wp.omega, wp.omega_prime
    return (wp.theta * moments.rho1
            + moments.rho0 * wp.r * (math.sin(w) + math.sin(wq))
            + moments.rho_at_0 * 0.5 * wp.r**2 * (math.sin(w) * math.cos(w)
                                                   + math.sin(wq) * math.cos(wq)))
