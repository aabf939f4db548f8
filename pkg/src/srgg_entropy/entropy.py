"""Conditional entropy-per-edge by quadrature, Monte Carlo and graph instances.

The entropy-per-edge is the expectation of ``h2(p(R / r0))`` over the pair
distance ``R`` of two uniform points, i.e. the mean edge density of the
"entropy graph" whose connection function is ``h2 o p``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy import integrate, optimize

from ._mc import DEFAULT_CHUNK, as_seed_sequence, mc_means
from .connect import ConnectionFunction, Constant, Hard, _h2_pair, rho_scaled
from .errors import ConvergenceError, DegenerateError, DomainError, UnsupportedError
from .geometry import (
    CLOSED_FORM_KINDS,
    Domain,
    EmpiricalCDF,
    density_breakpoints,
    pair_distance_density,
    pair_distances,
    sample_pair_distances,
    sample_points,
)


class Method(Enum):
    QUADRATURE = "quadrature"
    MONTE_CARLO = "monte-carlo"
    INSTANCE = "instance"


@dataclass(frozen=True)
class EntropyEstimate:
    """Entropy-per-edge in nats with its provenance and error estimate."""

    value: float
    method: Method
    std_error: float = 0.0
    n_pairs: int = 0
    r0: float = math.nan
    warnings: tuple = ()


@dataclass(frozen=True)
class GraphInstance:
    """One realised soft random geometric graph."""

    positions: np.ndarray = field(repr=False)
    edges: np.ndarray = field(repr=False)
    seed: Optional[int]
    domain: Domain
    conn: ConnectionFunction
    r0: float

    @property
    def n(self) -> int:
        return len(self.positions)


def _check_r0(r0):
    if not (math.isfinite(r0) and r0 > 0):
        raise DomainError(f"r0 must be positive and finite, got {r0}")


def _breakpoints(domain: Domain, conn: ConnectionFunction, r0: float, upper: float):
    pts = {0.0, upper}
    pts.update(b for b in density_breakpoints(domain))
    pts.update(r0 * s for s in conn.spikes())
    # Geometric grading around the connection scale.
    pts.update(r0 * 2.0**k for k in range(-12, 12))
    return sorted(p for p in pts if 0.0 <= p <= upper)


def _panel_quad(func, edges, tol):
    total, err_total = 0.0, 0.0
    per_panel = tol / max(len(edges) - 1, 1)
    for a, b in zip(edges, edges[1:]):
        if b <= a:
            continue
        val, err, *_ = integrate.quad(func, a, b, epsabs=per_panel, epsrel=1e-14,
                                      limit=400, full_output=1)
        if err > max(per_panel, 64 * np.finfo(float).eps * abs(val)):
            raise ConvergenceError(f"quadrature error {err:.3g} on [{a:.6g}, {b:.6g}]")
        total += val
        err_total += err
    return total, err_total


def _quadrature_mean(domain, rfunc, r0, tol, conn, density=None):
    """``int f(r) rfunc(r) dr`` over ``[0, D]`` with forced breakpoints."""
    if density is None:
        if domain.kind not in CLOSED_FORM_KINDS:
            raise UnsupportedError(
                f"no closed-form density for {domain.kind.value}; use the Monte-Carlo path "
                "or pass an EmpiricalCDF as density")
        edges = _breakpoints(domain, conn, r0, domain.diameter)

        def integrand(r):
            return float(pair_distance_density(domain, r) * rfunc(r))

        return _panel_quad(integrand, edges, tol)[0]
    # Histogram density: piecewise constant on each bin.
    bins = density.bin_edges
    dens = density.density(0.5 * (bins[:-1] + bins[1:]))
    total = 0.0
    for lo, hi, h in zip(bins[:-1], bins[1:], dens):
        if h == 0.0:
            continue
        inner = sorted({lo, hi, *(p for p in _breakpoints(domain, conn, r0, hi) if lo < p < hi)})
        total += h * _panel_quad(lambda r: float(rfunc(r)), inner, tol / len(bins))[0]
    return total


def entropy_per_edge_quadrature(domain: Domain, conn: ConnectionFunction, r0: float,
                                tol: float = 1e-12,
                                density: Optional[EmpiricalCDF] = None) -> EntropyEstimate:
    """Adaptive quadrature of ``f(r) h2(p(r / r0))`` over ``[0, D]``.

    Domains without a closed-form density need ``density``, an
    :class:`EmpiricalCDF` whose Freedman-Diaconis histogram replaces ``f``;
    the reported ``std_error`` is then the sampling error of that histogram.
    """
    _check_r0(r0)
    if not tol > 0:
        raise DomainError("tol must be positive")
    value = _quadrature_mean(domain, lambda r: rho_scaled(conn, r / r0), r0, tol, conn, density)
    value = min(max(value, 0.0), math.log(2.0))
    if density is None:
        return EntropyEstimate(value, Method.QUADRATURE, 0.0, 0, r0)
    vals = rho_scaled(conn, density.distances / r0)
    se = float(np.std(vals, ddof=1) / math.sqrt(density.n_pairs))
    return EntropyEstimate(value, Method.QUADRATURE, se, density.n_pairs, r0,
                           ("empirical density",))


def pair_mc(domain: Domain, funcs, n_pairs: int, rng, chunk_size: int = DEFAULT_CHUNK,
            workers: int = 1):
    """Monte-Carlo means of ``f(R)`` over independent pair distances ``R``."""
    if n_pairs < 1000:
        raise DomainError(f"n_pairs must be at least 1000, got {n_pairs}")
    return mc_means(lambda g, m: sample_pair_distances(domain, g, m), funcs, n_pairs,
                    as_seed_sequence(rng), chunk_size, workers)


def entropy_per_edge_mc(domain: Domain, conn: ConnectionFunction, r0: float, n_pairs: int,
                        rng, chunk_size: int = DEFAULT_CHUNK, workers: int = 1) -> EntropyEstimate:
    """Entropy-graph estimate: mean of ``h2(p(|X - Y| / r0))`` over fresh pairs."""
    _check_r0(r0)
    res = pair_mc(domain, [lambda r: rho_scaled(conn, r / r0)], n_pairs, rng, chunk_size, workers)
    return EntropyEstimate(float(res.means[0]), Method.MONTE_CARLO, float(res.std_errors[0]),
                           n_pairs, r0)


def generate_srgg(domain: Domain, conn: ConnectionFunction, r0: float, n: int,
                  rng) -> GraphInstance:
    """Place ``n`` uniform points and draw every edge independently."""
    _check_r0(r0)
    if n < 1:
        raise DomainError("n must be at least 1")
    seed = int(rng) if isinstance(rng, (int, np.integer)) else None
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(as_seed_sequence(rng))
    pos = sample_points(domain, gen, n)
    i, j = np.triu_indices(n, k=1)
    p = conn.prob_pair(pair_distances(domain, pos[i], pos[j]) / r0)[0]
    keep = gen.random(len(i)) < p
    edges = np.column_stack((i[keep], j[keep]))
    return GraphInstance(pos, edges, seed, domain, conn, r0)


def conditional_entropy_of_instance(instance: GraphInstance) -> EntropyEstimate:
    """Average of ``h2(p(r_ij / r0))`` over all node pairs of the instance."""
    n = instance.n
    if n < 2:
        raise DomainError("need at least two nodes")
    i, j = np.triu_indices(n, k=1)
    r = pair_distances(instance.domain, instance.positions[i], instance.positions[j])
    vals = rho_scaled(instance.conn, r / instance.r0)
    return EntropyEstimate(float(vals.mean()), Method.INSTANCE, 0.0, len(i), instance.r0)


def _mean_pq(domain, conn, r0, method, n_pairs, rng, tol):
    """``(p_bar, 1 - p_bar)`` with the complement integrated directly."""
    _check_r0(r0)
    if isinstance(conn, Constant):
        return conn.q, 1.0 - conn.q
    if method == "quadrature":
        p = _quadrature_mean(domain, lambda r: conn.prob_pair(r / r0)[0], r0, tol, conn)
        q = _quadrature_mean(domain, lambda r: conn.prob_pair(r / r0)[1], r0, tol, conn)
        return p, q
    if method in ("mc", "monte-carlo"):
        res = pair_mc(domain, [lambda r: conn.prob_pair(r / r0)[0],
                               lambda r: conn.prob_pair(r / r0)[1]], n_pairs, rng)
        return float(res.means[0]), float(res.means[1])
    raise DomainError(f"unknown method {method!r}")


def mean_connection_prob(domain: Domain, conn: ConnectionFunction, r0: float,
                         method: str = "quadrature", n_pairs: int = 10**6, rng=None,
                         tol: float = 1e-12) -> float:
    """Average connection probability ``p_bar = E[p(R / r0)]``."""
    return _mean_pq(domain, conn, r0, method, n_pairs, rng, tol)[0]


def compressibility_difference(domain: Domain, conn: ConnectionFunction, r0: float,
                               n_pairs: int = 10**6, rng=None, tol: float = 1e-12) -> float:
    """``(h2(p_bar) - H) / p_bar``: compressibility gap to the matched ER graph.

    Uses quadrature when the density is closed form, otherwise one shared
    Monte-Carlo sample for both expectations.
    """
    _check_r0(r0)
    if domain.kind in CLOSED_FORM_KINDS or isinstance(conn, Constant):
        p, q = _mean_pq(domain, conn, r0, "quadrature", n_pairs, rng, tol)
        if isinstance(conn, Constant):
            h = float(_h2_pair(p, q))
        else:
            h = entropy_per_edge_quadrature(domain, conn, r0, tol).value
    else:
        res = pair_mc(domain, [lambda r: conn.prob_pair(r / r0)[0],
                               lambda r: conn.prob_pair(r / r0)[1],
                               lambda r: rho_scaled(conn, r / r0)], n_pairs, rng)
        p, q, h = (float(v) for v in res.means)
    if p <= 0.0 or q <= 0.0:
        raise DegenerateError(f"mean connection probability is degenerate (p_bar = {p})")
    gap = (float(_h2_pair(p, q)) - h) / p
    return max(gap, 0.0)


def entropy_maximizing_r0(domain: Domain, conn: ConnectionFunction,
                          bounds: tuple = (1e-3, 1e2)) -> tuple:
    """``(r0*, H(r0*))`` maximising the quadrature entropy-per-edge."""
    if isinstance(conn, (Hard, Constant)):
        raise UnsupportedError("entropy is flat or identically zero in r0 for this family")
    res = optimize.minimize_scalar(
        lambda t: -entropy_per_edge_quadrature(domain, conn, math.exp(t), 1e-10).value,
        bounds=(math.log(bounds[0]), math.log(bounds[1])), method="bounded",
        options={"xatol": 1e-9})
    return math.exp(res.x), -res.fun
