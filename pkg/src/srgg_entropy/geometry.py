"""Embedding domains: point samplers, pair-distance laws and small-r data.

All domains carry unit parameters (unit interval, unit square, unit-radius
disk and ball, unit cube); the wedge takes its opening angle and radius.
Points are drawn from the normalized Lebesgue measure on the domain.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Optional

import numpy as np

from ._mc import as_seed_sequence
from .errors import DomainError, UnsupportedError


class DomainKind(Enum):
    INTERVAL = "interval"
    TORUS1D = "torus1d"
    SQUARE = "square"
    DISK = "disk"
    CUBE = "cube"
    BALL = "ball"
    WEDGE = "wedge"


_DIMENSION = {
    DomainKind.INTERVAL: 1,
    DomainKind.TORUS1D: 1,
    DomainKind.SQUARE: 2,
    DomainKind.DISK: 2,
    DomainKind.WEDGE: 2,
    DomainKind.CUBE: 3,
    DomainKind.BALL: 3,
}

_ALIASES = {
    "interval": DomainKind.INTERVAL,
    "torus1d": DomainKind.TORUS1D,
    "torus": DomainKind.TORUS1D,
    "circle": DomainKind.TORUS1D,
    "square": DomainKind.SQUARE,
    "disk": DomainKind.DISK,
    "disc": DomainKind.DISK,
    "cube": DomainKind.CUBE,
    "ball": DomainKind.BALL,
    "wedge": DomainKind.WEDGE,
}


@dataclass(frozen=True)
class Domain:
    """Immutable descriptor of an embedding geometry.

    ``theta`` and ``radius`` are only meaningful for the wedge
    ``{(r, phi): 0 <= phi <= theta, 0 <= r <= radius}``.
    """

    kind: DomainKind
    theta: float = math.pi / 4
    radius: float = 1.0

    def __post_init__(self):
        if self.kind is DomainKind.WEDGE:
            if not 0 < self.theta <= math.pi:
                raise DomainError(f"wedge angle must lie in (0, pi], got {self.theta}")
            if not self.radius > 0:
                raise DomainError(f"wedge radius must be positive, got {self.radius}")

    @classmethod
    def parse(cls, text: str) -> "Domain":
        """Parse ``interval``, ``square``, ... or ``wedge:theta=0.785,radius=1``."""
        name, _, params = text.strip().partition(":")
        kind = _ALIASES.get(name.strip().lower())
        if kind is None:
            raise DomainError(f"unknown domain {name!r}")
        kwargs = {}
        for item in filter(None, (p.strip() for p in params.split(","))):
            key, eq, value = item.partition("=")
            if not eq or key.strip() not in ("theta", "radius") or kind is not DomainKind.WEDGE:
                raise DomainError(f"bad domain parameter {item!r}")
            kwargs[key.strip()] = float(value)
        return cls(kind, **kwargs)

    def __str__(self) -> str:
        if self.kind is DomainKind.WEDGE:
            return f"wedge:theta={self.theta!r},radius={self.radius!r}"
        return self.kind.value

    @property
    def d(self) -> int:
        return _DIMENSION[self.kind]

    @property
    def diameter(self) -> float:
        k = self.kind
        if k is DomainKind.INTERVAL:
            return 1.0
        if k is DomainKind.TORUS1D:
            return 0.5
        if k is DomainKind.SQUARE:
            return math.sqrt(2.0)
        if k is DomainKind.CUBE:
            return math.sqrt(3.0)
        if k in (DomainKind.DISK, DomainKind.BALL):
            return 2.0
        # Farthest pairs in a sector: two arc endpoints, or corner to arc.
        return self.radius * max(1.0, 2.0 * math.sin(self.theta / 2.0))

    @property
    def volume(self) -> float:
        k = self.kind
        if k is DomainKind.DISK:
            return math.pi
        if k is DomainKind.BALL:
            return 4.0 * math.pi / 3.0
        if k is DomainKind.WEDGE:
            return 0.5 * self.theta * self.radius**2
        return 1.0

    def contains(self, x, tol: float = 1e-12) -> bool:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.d,):
            return False
        k = self.kind
        if k in (DomainKind.INTERVAL, DomainKind.TORUS1D, DomainKind.SQUARE, DomainKind.CUBE):
            return bool(np.all(x >= -tol) and np.all(x <= 1 + tol))
        if k in (DomainKind.DISK, DomainKind.BALL):
            return bool(np.dot(x, x) <= (1 + tol) ** 2)
        r = math.hypot(x[0], x[1])
        if r > self.radius * (1 + tol):
            return False
        if r <= tol:
            return True
        # Half-plane tests for the two bounding rays.
        n2 = (math.sin(self.theta), -math.cos(self.theta))
        return x[1] >= -tol and n2[0] * x[0] + n2[1] * x[1] >= -tol


def sample_points(domain: Domain, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw ``n`` uniform points of ``domain`` as an ``(n, d)`` array."""
    k = domain.kind
    if k in (DomainKind.INTERVAL, DomainKind.TORUS1D, DomainKind.SQUARE, DomainKind.CUBE):
        return rng.random((n, domain.d))
    if k is DomainKind.DISK:
        u, v = rng.random(n), rng.random(n)
        r, phi = np.sqrt(u), 2.0 * np.pi * v
        return np.column_stack((r * np.cos(phi), r * np.sin(phi)))
    if k is DomainKind.BALL:
        g = rng.standard_normal((n, 3))
        g /= np.linalg.norm(g, axis=1)[:, None]
        return g * np.cbrt(rng.random(n))[:, None]
    u, v = rng.random(n), rng.random(n)
    r, phi = domain.radius * np.sqrt(u), domain.theta * v
    return np.column_stack((r * np.cos(phi), r * np.sin(phi)))


def sample_point(domain: Domain, rng: np.random.Generator) -> np.ndarray:
    """Draw a single uniform point of ``domain``."""
    return sample_points(domain, rng, 1)[0]


def pair_distances(domain: Domain, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Row-wise distances between point arrays, using the domain metric."""
    diff = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
    if domain.kind is DomainKind.TORUS1D:
        diff = np.minimum(diff, 1.0 - diff)
    if diff.ndim == 1:
        return diff if domain.d == 1 else np.linalg.norm(diff)
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def sample_pair_distances(domain: Domain, rng: np.random.Generator, n: int) -> np.ndarray:
    """Distances between ``n`` independent pairs of uniform points."""
    return pair_distances(domain, sample_points(domain, rng, n), sample_points(domain, rng, n))


CLOSED_FORM_KINDS = (DomainKind.INTERVAL, DomainKind.TORUS1D, DomainKind.SQUARE, DomainKind.DISK)


def density_breakpoints(domain: Domain) -> tuple:
    """Interior points where the closed-form density is not smooth."""
    return (1.0,) if domain.kind is DomainKind.SQUARE else ()


def pair_distance_density(domain: Domain, r):
    """Closed-form density of the distance between two uniform points.

    Available for the interval, circle, square and disk. Other domains raise
    ``UnsupportedError``; use :func:`empirical_distance_cdf` for them.
    """
    k = domain.kind
    if k not in CLOSED_FORM_KINDS:
        raise UnsupportedError(
            f"no closed-form pair-distance density for {k.value}; use empirical_distance_cdf")
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = (r >= 0) & (r <= domain.diameter)
    ri = r[inside]
    if k is DomainKind.INTERVAL:
        out[inside] = 2.0 - 2.0 * ri
    elif k is DomainKind.TORUS1D:
        out[inside] = 2.0
    elif k is DomainKind.SQUARE:
        lo = ri <= 1.0
        val = np.empty_like(ri)
        a = ri[lo]
        val[lo] = 2.0 * a * (np.pi - 4.0 * a + a * a)
        b = ri[~lo]
        val[~lo] = 2.0 * b * (4.0 * np.sqrt(b * b - 1.0) - (b * b + 2.0 - np.pi)
                              - 4.0 * np.arccos(1.0 / b))
        out[inside] = np.maximum(val, 0.0)
    else:
        h = ri / 2.0
        out[inside] = (4.0 * ri / np.pi) * (np.arccos(h) - h * np.sqrt(np.maximum(1.0 - h * h, 0.0)))
    return out if out.ndim else float(out)


def pair_distance_cdf(domain: Domain, r):
    """Closed-form CDF of the pair distance for the closed-form domains."""
    k = domain.kind
    if k not in CLOSED_FORM_KINDS:
        raise UnsupportedError(
            f"no closed-form pair-distance law for {k.value}; use empirical_distance_cdf")
    r = np.clip(np.asarray(r, dtype=float), 0.0, domain.diameter)
    if k is DomainKind.INTERVAL:
        out = 2.0 * r - r * r
    elif k is DomainKind.TORUS1D:
        out = 2.0 * r
    elif k is DomainKind.SQUARE:
        r2 = r * r
        near = np.pi * r2 - 8.0 * r2 * r / 3.0 + 0.5 * r2 * r2
        rs = np.maximum(r, 1.0)
        s2 = rs * rs
        far = (1.0 / 3.0 - 2.0 * s2 - 0.5 * s2 * s2
               + (4.0 / 3.0) * (2.0 * s2 + 1.0) * np.sqrt(s2 - 1.0)
               + 2.0 * s2 * (np.arcsin(1.0 / rs) - np.arccos(1.0 / rs)))
        out = np.where(r <= 1.0, near, far)
    else:
        root = np.sqrt(np.maximum(4.0 - r * r, 0.0))
        out = (8.0 * r * r * np.arccos(r / 2.0) - r * root * (r * r + 2.0)
               + 8.0 * np.arcsin(r / 2.0)) / (4.0 * np.pi)
    out = np.clip(out, 0.0, 1.0)
    return out if out.ndim else float(out)


def dkw_epsilon(n: int, confidence: float = 0.99) -> float:
    """Dvoretzky-Kiefer-Wolfowitz half-width for ``n`` samples."""
    if n <= 0 or not 0 < confidence < 1:
        raise DomainError("dkw_epsilon needs n > 0 and confidence in (0, 1)")
    return math.sqrt(math.log(2.0 / (1.0 - confidence)) / (2.0 * n))


@dataclass(frozen=True)
class EmpiricalCDF:
    """Empirical law of pair distances from a seeded Monte-Carlo sample."""

    distances: np.ndarray = field(repr=False)
    n_pairs: int
    seed: Optional[int]
    diameter: float

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.searchsorted(self.distances, r, side="right") / self.n_pairs
        return out if out.ndim else float(out)

    def dkw_bound(self, confidence: float = 0.99) -> float:
        return dkw_epsilon(self.n_pairs, confidence)

    def ks_statistic(self, cdf) -> float:
        """Exact sup-distance to a continuous reference CDF."""
        ref = np.asarray(cdf(self.distances), dtype=float)
        i = np.arange(1, self.n_pairs + 1)
        return float(max(np.max(i / self.n_pairs - ref), np.max(ref - (i - 1) / self.n_pairs)))

    @cached_property
    def _histogram(self):
        q75, q25 = np.percentile(self.distances, [75, 25])
        width = 2.0 * (q75 - q25) * self.n_pairs ** (-1.0 / 3.0)
        nbins = max(8, int(math.ceil(self.diameter / width))) if width > 0 else 8
        counts, edges = np.histogram(self.distances, bins=nbins, range=(0.0, self.diameter))
        return counts / (self.n_pairs * np.diff(edges)), edges

    @property
    def bin_edges(self) -> np.ndarray:
        return self._histogram[1]

    def density(self, r):
        """Freedman-Diaconis histogram density, piecewise constant."""
        dens, edges = self._histogram
        r = np.asarray(r, dtype=float)
        idx = np.clip(np.searchsorted(edges, r, side="right") - 1, 0, len(dens) - 1)
        out = np.where((r >= 0) & (r <= self.diameter), dens[idx], 0.0)
        return out if out.ndim else float(out)

    def to_csv(self, path, points: int = 1001) -> None:
        """Write ``distance,cdf`` rows on a uniform grid over ``[0, D]``."""
        grid = np.linspace(0.0, self.diameter, points)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["distance", "cdf"])
            for r, c in zip(grid, self(grid)):
                w.writerow(["%.17g" % r, "%.17g" % c])


def empirical_distance_cdf(domain: Domain, n_pairs: int, rng) -> EmpiricalCDF:
    """Sample ``n_pairs`` pair distances and wrap them as an :class:`EmpiricalCDF`.

    ``rng`` may be an integer seed, a ``SeedSequence`` or a ``Generator``.
    """
    if n_pairs < 1000:
        raise DomainError(f"empirical_distance_cdf needs n_pairs >= 1000, got {n_pairs}")
    seed = rng if isinstance(rng, (int, np.integer)) else None
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(as_seed_sequence(rng))
    dist = np.sort(sample_pair_distances(domain, gen, n_pairs))
    dist.setflags(write=False)
    return EmpiricalCDF(dist, n_pairs, None if seed is None else int(seed), domain.diameter)


@dataclass(frozen=True)
class SmallRCoeffs:
    """``f(r) = s_leading r^(d-1) + a_d r^d + ...`` near ``r = 0``."""

    s_leading: float
    a_d: float
    valid: bool


def small_r_coeffs(domain: Domain) -> SmallRCoeffs:
    """Leading and next-order coefficients of the pair-distance density."""
    k = domain.kind
    if k is DomainKind.INTERVAL:
        return SmallRCoeffs(2.0, -2.0, True)
    if k is DomainKind.TORUS1D:
        return SmallRCoeffs(2.0, 0.0, True)
    if k is DomainKind.SQUARE:
        return SmallRCoeffs(2.0 * math.pi, -8.0, True)
    if k is DomainKind.DISK:
        return SmallRCoeffs(2.0, -4.0 / math.pi, True)
    if k is DomainKind.BALL:
        return SmallRCoeffs(3.0, -9.0 / 4.0, True)
    if k is DomainKind.CUBE:
        return SmallRCoeffs(4.0 * math.pi, math.nan, False)
    return SmallRCoeffs(2.0 * math.pi / domain.volume, math.nan, False)
