"""Soft random geometric graphs on the middle-Cantor set.

Points are ``x = sum_n x_n alpha^-n`` with i.i.d. digits ``x_n`` uniform on
``{0, alpha - 1}``. The signed displacement ``R = X - Y`` satisfies
``R = (W + R') / alpha`` with ``W`` in ``{-(alpha-1), 0, alpha-1}`` (weights
1/4, 1/2, 1/4) and ``R'`` an independent copy. Everything below follows
from that identity:

* moments of ``R`` by recursion,
* ``E|R|^-s = J(s) / (2 alpha^-s - 1)`` with ``J(s) = E[(alpha - 1 + R)^-s]``,
* residues at ``s_m = d + 2 pi i m / log(alpha)``, giving the log-periodic
  small-``r0`` series ``H ~ sum_m r0^s_m psi(s_m) J(s_m) / log(alpha)``.
"""

from __future__ import annotations

import cmath
import csv
import math
import os
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy.special import polygamma

from ._mc import DEFAULT_CHUNK, as_seed_sequence, mc_means
from .connect import ConnectionFunction, Constant, Hard, PowerLaw, rho_derivatives, rho_scaled
from .entropy import EntropyEstimate, Method
from .errors import (
    AssumptionError,
    CalibrationError,
    ConvergenceError,
    DegenerateError,
    DivergentError,
    DomainError,
    PoleError,
)
from .geometry import dkw_epsilon

_MAX_MOMENTS = 1000
_SERIES_RTOL = 1e-14


@dataclass(frozen=True)
class CantorSpec:
    """Cantor set keeping the outer ``1/alpha`` of every interval."""

    alpha: float
    depth: int = 64

    def __post_init__(self):
        if not self.alpha > 2:
            raise DomainError(f"alpha must exceed 2, got {self.alpha}")
        if self.depth < 20:
            raise DomainError(f"depth must be at least 20, got {self.depth}")

    @property
    def hausdorff_d(self) -> float:
        return math.log(2.0) / math.log(self.alpha)

    def poles(self, m_max: int) -> list:
        """``s_m = d + 2 pi i m / log(alpha)`` for ``m = 0..m_max``."""
        la = math.log(self.alpha)
        return [complex(self.hausdorff_d, 2.0 * math.pi * m / la) for m in range(m_max + 1)]


def _weights(spec: CantorSpec) -> np.ndarray:
    return (spec.alpha - 1.0) * spec.alpha ** -np.arange(1.0, spec.depth + 1.0)


@lru_cache(maxsize=16)
def _byte_tables(alpha: float, depth: int) -> np.ndarray:
    """``T[j, b]``: contribution of byte ``b`` in position ``j`` (digits ``8j..8j+7``)."""
    nbytes = 8 * -(-depth // 64)
    w = np.zeros(8 * nbytes)
    w[:depth] = _weights(CantorSpec(alpha, depth))
    bits = np.unpackbits(np.arange(256, dtype=np.uint8)[:, None], axis=1).astype(float)
    return (bits @ w.reshape(nbytes, 8).T).T


def _random_bytes(rng: np.random.Generator, n: int, depth: int) -> np.ndarray:
    """One uniform bit per digit, packed as ``uint64`` words viewed as bytes."""
    words = -(-depth // 64)
    raw = rng.integers(0, np.iinfo(np.uint64).max, size=(n, words), dtype=np.uint64,
                       endpoint=True)
    return raw.view(np.uint8)


def _digits_value(tables: np.ndarray, raw: np.ndarray) -> np.ndarray:
    out = np.zeros(len(raw))
    # Smallest contributions first keeps the rounding error at one ulp.
    for j in range(tables.shape[0] - 1, -1, -1):
        out += tables[j][raw[:, j]]
    return out


def cantor_point_from_digits(spec: CantorSpec, digits: Sequence[float]) -> float:
    """``sum_n digits[n] alpha^-(n+1)`` for digits in ``{0, alpha - 1}``."""
    d = np.asarray(digits, dtype=float)
    if not np.all(np.isclose(d, 0.0) | np.isclose(d, spec.alpha - 1.0)):
        raise DomainError("digits must be 0 or alpha - 1")
    return float(math.fsum(d * spec.alpha ** -np.arange(1.0, len(d) + 1.0)))


def sample_cantor_points(spec: CantorSpec, rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` points from the natural (uniform-digit) measure on the set."""
    tables = _byte_tables(spec.alpha, spec.depth)
    return _digits_value(tables, _random_bytes(rng, n, spec.depth))


def sample_cantor_point(spec: CantorSpec, rng: np.random.Generator) -> float:
    return float(sample_cantor_points(spec, rng, 1)[0])


def sample_displacements(spec: CantorSpec, rng: np.random.Generator, n: int) -> np.ndarray:
    """Signed ``X - Y`` for ``n`` independent pairs."""
    tables = _byte_tables(spec.alpha, spec.depth)
    a = _random_bytes(rng, n, spec.depth)
    b = _random_bytes(rng, n, spec.depth)
    out = np.zeros(n)
    for j in range(tables.shape[0] - 1, -1, -1):
        out += tables[j][a[:, j]] - tables[j][b[:, j]]
    return out


@lru_cache(maxsize=64)
def _scaled_moments(alpha: float, n_max: int) -> tuple:
    """``N_n = E[R^n] / (alpha-1)^n`` and ``A_n = E|R|^n / (alpha-1)^n``.

    Scaling by ``(alpha-1)^n`` keeps the recursions free of overflow.
    """
    even = [1.0] + [0.0] * n_max
    absm = [1.0] + [0.0] * n_max
    for n in range(1, n_max + 1):
        an = alpha ** -float(n)
        if n % 2 == 0:
            acc = math.fsum(math.comb(n, k) * 0.5 * even[n - k] for k in range(2, n + 1, 2))
            even[n] = an * acc / (1.0 - an)
        acc = math.fsum(math.comb(n, k) * even[k] for k in range(0, n + 1, 2))
        absm[n] = 0.5 * an * acc / (1.0 - 0.5 * an)
    return tuple(even), tuple(absm)


def cantor_signed_moment(spec: CantorSpec, n: int) -> float:
    """``E[R^n]``; zero for odd ``n``."""
    if n < 0:
        raise DomainError("n must be non-negative")
    return _scaled_moments(spec.alpha, max(n, 2))[0][n] * (spec.alpha - 1.0) ** n


def cantor_even_moment(spec: CantorSpec, l: int) -> float:
    """Half-range moment ``C[F; 2l] = int_0^1 r^(2l) dF = E[R^(2l)] / 2``."""
    if l < 0:
        raise DomainError("l must be non-negative")
    return 0.5 * cantor_signed_moment(spec, 2 * l)


def cantor_half_moment(spec: CantorSpec, n: int) -> float:
    """``C[F; n] = E|R|^n / 2`` for any integer ``n >= 0``.

    Odd orders follow from the same self-similarity: when the first digits
    differ, ``|R| = (alpha - 1 + R') / alpha`` in distribution.
    """
    if n < 0:
        raise DomainError("n must be non-negative")
    return 0.5 * _scaled_moments(spec.alpha, max(n, 2))[1][n] * (spec.alpha - 1.0) ** n


def _binomial_series(spec: CantorSpec, s: complex, coeffs, step: int) -> complex:
    """``(alpha-1)^-s sum_k binom(-s, k) c_k`` over ``k = 0, step, 2 step, ...``.

    ``coeffs`` holds scaled moments so ``(alpha-1)^-k`` is already folded in.
    """
    s = complex(s)
    total, binom = 0.0 + 0.0j, 1.0 + 0.0j
    small = 0
    for k in range(0, len(coeffs)):
        if k % step == 0:
            term = binom * coeffs[k]
            total += term
            if abs(term) <= _SERIES_RTOL * abs(total):
                small += 1
                if small >= 3:
                    return cmath.exp(-s * math.log(spec.alpha - 1.0)) * total
            else:
                small = 0
        binom *= (-s - k) / (k + 1)
    raise ConvergenceError("moment series did not converge within the moment table")


def _series_with_growth(spec, s, pick, step):
    for n_max in (200, _MAX_MOMENTS):
        try:
            return _binomial_series(spec, s, pick(_scaled_moments(spec.alpha, n_max)), step)
        except ConvergenceError:
            if n_max == _MAX_MOMENTS:
                raise
    raise AssertionError("unreachable")


def _offsets(alpha: float, levels: int) -> tuple:
    """Offsets ``sum_{n<=k} W_n alpha^-n`` and their probabilities."""
    c = np.zeros(1)
    w = np.ones(1)
    step = np.array([-(alpha - 1.0), 0.0, alpha - 1.0])
    prob = np.array([0.25, 0.5, 0.25])
    for n in range(1, levels + 1):
        c = (c[:, None] + step[None, :] * alpha**-n).ravel()
        w = (w[:, None] * prob[None, :]).ravel()
    return c, w


def full_range_integral(spec: CantorSpec, s: complex, method: str = "refined") -> complex:
    """``J(s) = int_{-1}^{1} (r + alpha - 1)^-s dF(r) = E[(alpha - 1 + R)^-s]``.

    ``series`` sums the binomial series in the even moments directly; its
    terms grow like ``|s|^k / k!`` before decaying, so it loses accuracy for
    large ``|Im s|``. ``refined`` first unrolls ``k`` levels of
    self-similarity, ``R = sum_{n<=k} W_n alpha^-n + alpha^-k R'``, and
    expands around each of the ``3^k`` offsets, where the series contracts
    by ``alpha^-k``.
    """
    s = complex(s)
    if method == "series":
        return _series_with_growth(spec, s, lambda t: t[0], 2)
    if method != "refined":
        raise DomainError(f"unknown method {method!r}")
    a = spec.alpha
    levels = 0
    while abs(s) * a**-levels / (a - 2.0) > 0.05 and levels < 13:
        levels += 1
    c, w = _offsets(a, levels)
    base = a - 1.0 + c
    eps = a**-levels
    even, _ = _scaled_moments(a, 200)
    # sum_j binom(-s, 2j) (eps / base)^(2j) E[R^(2j)], vectorised over offsets.
    total = np.zeros_like(base, dtype=complex)
    binom = 1.0 + 0.0j
    ratio = eps * (a - 1.0) / base
    for k in range(0, 200):
        if k % 2 == 0:
            term = binom * even[k] * ratio**k
            total += term
            if k > 0 and np.max(np.abs(term)) <= _SERIES_RTOL * np.min(np.abs(total)):
                break
        binom *= (-s - k) / (k + 1)
    else:
        raise ConvergenceError("refined moment series did not converge")
    return complex(np.sum(w * np.exp(-s * np.log(base)) * total))


def half_range_integral(spec: CantorSpec, s: complex) -> complex:
    """``int_0^1 (r + alpha - 1)^-s dF(r)``, using odd moments as well."""
    return _series_with_growth(spec, s, lambda t: [0.5 * a for a in t[1]], 1)


def _pole_gap(spec: CantorSpec, s: complex) -> complex:
    return 2.0 * cmath.exp(-complex(s) * math.log(spec.alpha)) - 1.0


def cantor_moment_series(spec: CantorSpec, s: complex) -> complex:
    """``C[F; -s] = int_0^1 r^-s dF`` continued meromorphically.

    ``C[F; -s] = sum_l binom(-s, 2l) (alpha-1)^(-s-2l) C[F; 2l] / (2 alpha^-s - 1)``.
    """
    gap = _pole_gap(spec, s)
    if abs(gap) < 1e-8:
        raise PoleError(f"s = {s} is within 1e-8 of a pole")
    return 0.5 * full_range_integral(spec, s) / gap


def _log_panels(lo, hi, width):
    n = max(1, int(math.ceil((hi - lo) / width)))
    return np.linspace(lo, hi, n + 1)


_GL32 = np.polynomial.legendre.leggauss(32)
_GL16 = np.polynomial.legendre.leggauss(16)


def _gl(func, a, b, rule):
    x, w = rule
    half = 0.5 * (b - a)
    t = 0.5 * (a + b)[:, None] + half[:, None] * x
    return half * (func(t) @ w)


def _adaptive_gl(func, edges, tol, max_rounds=60):
    """Sum of panel integrals, bisecting panels where GL32 and GL16 disagree.

    A panel passes when its error estimate is below ``tol`` times its share
    of the total length.
    """
    a, b = np.asarray(edges[:-1], dtype=float), np.asarray(edges[1:], dtype=float)
    span = b[-1] - a[0]
    total = 0.0
    for _ in range(max_rounds):
        fine, coarse = _gl(func, a, b, _GL32), _gl(func, a, b, _GL16)
        diff = fine - coarse
        err = np.maximum(np.abs(np.real(diff)), np.abs(np.imag(diff)))
        ok = ((err <= tol * (b - a) / span) | (err <= 1e-13 * np.abs(fine))
              | (b - a < 1e-9 * span))
        total = total + fine[ok].sum()
        if ok.all():
            return total
        a, b = a[~ok], b[~ok]
        if len(a) > 100_000:
            break
        mid = 0.5 * (a + b)
        a, b = np.concatenate((a, mid)), np.concatenate((mid, b))
    raise ConvergenceError(f"adaptive quadrature did not reach tol={tol}")


def mellin_psi(conn: ConnectionFunction, s: complex, tol: float = 1e-12) -> complex:
    """``psi(s) = int_0^inf u^(s-1) h2(p(u)) du`` for ``Re(s) > 0``.

    Integrates ``e^(s t) h2(p(e^t))`` in ``t = log u`` on panels no longer
    than a quarter oscillation period, refining by bisection where a 32-point
    and a 16-point Gauss-Legendre rule disagree. A non-zero ``rho(0)`` is
    handled analytically on ``t < 0``.
    """
    s = complex(s)
    sig, om = s.real, s.imag
    if not sig > 0:
        raise DomainError("mellin_psi needs Re(s) > 0")
    if isinstance(conn, Hard) or (isinstance(conn, Constant) and conn.q in (0.0, 1.0)):
        return 0.0j
    if isinstance(conn, Constant):
        raise DivergentError("Mellin transform of a constant connection diverges")
    if isinstance(conn, PowerLaw) and sig >= conn.alpha:
        raise DivergentError(f"Mellin transform diverges for Re(s) >= alpha = {conn.alpha}")
    rho0 = float(rho_scaled(conn, 0.0))

    def f(t):
        with np.errstate(over="ignore"):
            body = rho_scaled(conn, np.exp(t)) - np.where(t < 0, rho0, 0.0)
        return np.exp(s * t) * body

    tiny = tol * 1e-3
    t_lo = max(math.log(tiny) / sig, -700.0)
    t_hi = 1.0
    while t_hi < 700.0:
        probe = np.linspace(t_hi, t_hi + 1.0, 9)
        if np.max(np.abs(f(probe))) < tiny * 1e-2:
            break
        t_hi += 1.0
    width = 1.0 if om == 0 else min(1.0, 0.25 * 2.0 * math.pi / abs(om))
    cuts = sorted({t_lo, 0.0, t_hi, *(math.log(x) for x in conn.spikes() if x > 0)})
    edges = np.concatenate([_log_panels(a, b, width)[:-1] for a, b in zip(cuts, cuts[1:])]
                           + [np.array([t_hi])])
    try:
        return complex(_adaptive_gl(f, edges, tol)) + rho0 / s
    except ConvergenceError as exc:
        raise ConvergenceError(f"mellin_psi did not reach tol={tol} at s={s}") from exc


@dataclass(frozen=True)
class Assumption3Report:
    """Finite-cutoff proxies for the four regularity conditions.

    ``items[k]`` maps each tested ``s`` to whether condition ``k`` passed.
    """

    s_values: tuple
    items: dict = field(repr=False)

    @property
    def passed(self) -> bool:
        return all(all(v.values()) for v in self.items.values())


def _piece_integral(func, level, kink):
    """Integral over ``(0, inf)`` truncated to ``[10^-level, 10^level]``.

    Around a kink ``c`` of ``p`` the gap ``(c - eps, c + eps)`` with
    ``eps = 10^(-level/2)`` is excluded.
    """
    big, eps = 10.0**level, 10.0 ** (-level / 2)
    pieces = []
    if kink is None:
        pieces.append(("log", -math.log(big), math.log(big)))
    else:
        c = kink
        pieces += [("log", -math.log(big), math.log(c / 2)),
                   ("left", math.log(eps), math.log(c / 2)),
                   ("right", math.log(eps), math.log(c)),
                   ("log", math.log(2 * c), math.log(big))]
    total = 0.0
    for kind, lo, hi in pieces:
        if kind == "log":
            h = lambda t: func(np.exp(t)) * np.exp(t)
        elif kind == "left":
            h = lambda t: func(kink - np.exp(t)) * np.exp(t)
        else:
            h = lambda t: func(kink + np.exp(t)) * np.exp(t)
        total += float(_adaptive_gl(h, _log_panels(lo, hi, 0.5), 1e-11))
    return total


def assumption3_check(conn: ConnectionFunction, s_values: Sequence[float]) -> Assumption3Report:
    """Numeric proxies for the regularity conditions at each real ``s``.

    Conditions (1), (3) and (4) are integrals of ``u^(s-1) rho``,
    ``u^s |rho'|`` and ``u^(s+1) |rho''|``. Each is truncated at cutoff
    levels 4, 8 and 16 (see :func:`_piece_integral`); it passes when the
    second increment is at most half the first, i.e. the truncation error
    shrinks geometrically. Condition (2) requires ``u^s rho(u)`` to decrease
    toward both ends, probed at ``u`` in ``{1e-8, 1e-4, 1e4, 1e8}``.
    """
    kink = 1.0 if isinstance(conn, (PowerLaw, Hard)) else None
    items = {1: {}, 2: {}, 3: {}, 4: {}}
    for s in s_values:
        s = float(s)
        if not s > 0:
            raise DomainError("assumption checks need s > 0")

        def g1(u):
            return u ** (s - 1) * rho_scaled(conn, u)

        def g3(u):
            return u**s * np.abs(rho_derivatives(conn, u)[0])

        def g4(u):
            return u ** (s + 1) * np.abs(rho_derivatives(conn, u)[1])

        for k, g in ((1, g1), (3, g3), (4, g4)):
            try:
                with np.errstate(all="ignore"):
                    vals = [_piece_integral(g, lev, kink) for lev in (4, 8, 16)]
            except ConvergenceError:
                # A non-integrable singularity defeats the quadrature itself.
                items[k][s] = False
                continue
            d1, d2 = abs(vals[1] - vals[0]), abs(vals[2] - vals[1])
            items[k][s] = bool(np.all(np.isfinite(vals))
                               and (d2 <= 0.5 * d1 or d2 <= 1e-9 * (1.0 + abs(vals[2]))))
        u = np.array([1e-8, 1e-4, 1e4, 1e8])
        with np.errstate(all="ignore"):
            v = np.abs(u**s * rho_scaled(conn, u))
        items[2][s] = bool(np.all(np.isfinite(v)) and (v[0] < v[1] or v[1] == 0.0)
                           and (v[3] < v[2] or v[2] == 0.0))
    return Assumption3Report(tuple(float(s) for s in s_values), items)


def _depth_needed(spec: CantorSpec, r0: float) -> int:
    return int(math.ceil(math.log(r0 * 1e-3) / math.log(1.0 / spec.alpha)))


def cantor_entropy_mc(spec: CantorSpec, conn: ConnectionFunction, r0: float, n_pairs: int,
                      rng, chunk_size: int = DEFAULT_CHUNK, workers: int = 1) -> EntropyEstimate:
    """Mean of ``h2(p(|X - Y| / r0))`` over Cantor-distributed pairs."""
    if not r0 > 0:
        raise DomainError("r0 must be positive")
    if n_pairs < 1000:
        raise DomainError("n_pairs must be at least 1000")
    notes = ()
    if spec.depth < _depth_needed(spec, r0):
        notes = (f"depth {spec.depth} below the {_depth_needed(spec, r0)} digits needed at r0={r0}",)
        warnings.warn(notes[0], RuntimeWarning, stacklevel=2)
    res = mc_means(lambda g, m: np.abs(sample_displacements(spec, g, m)),
                   [lambda r: rho_scaled(conn, r / r0)], n_pairs, as_seed_sequence(rng),
                   chunk_size, workers)
    return EntropyEstimate(float(res.means[0]), Method.MONTE_CARLO, float(res.std_errors[0]),
                           n_pairs, r0, notes)


def cantor_entropy_curve(spec: CantorSpec, conn: ConnectionFunction, r0s: Sequence[float],
                         n_pairs: int, rng, chunk_size: int = DEFAULT_CHUNK,
                         workers: int = 1) -> tuple:
    """Monte-Carlo entropy at many ``r0`` with common random numbers.

    The same displacement sample serves every ``r0``, which keeps the curve
    smooth enough to locate its local maxima. Returns ``(means, std_errors)``.
    """
    r0s = [float(r) for r in r0s]
    funcs = [lambda r, r0=r0: rho_scaled(conn, r / r0) for r0 in r0s]
    res = mc_means(lambda g, m: np.abs(sample_displacements(spec, g, m)), funcs, n_pairs,
                   as_seed_sequence(rng), chunk_size, workers)
    return res.means, res.std_errors


def local_maxima_slope(r0s: Sequence[float], values: Sequence[float], window: int = 3) -> tuple:
    """Least-squares slope of ``log H`` against ``log r0`` through local maxima.

    A point is a local maximum when it exceeds every neighbour within
    ``window`` grid steps. Returns ``(slope, r0_at_maxima, values_at_maxima)``.
    """
    r0s, values = np.asarray(r0s, dtype=float), np.asarray(values, dtype=float)
    idx = [i for i in range(window, len(values) - window)
           if values[i] == values[i - window:i + window + 1].max()
           and values[i] > values[i - 1] and values[i] > values[i + 1]]
    if len(idx) < 2:
        raise DegenerateError(f"found {len(idx)} local maxima; need at least two")
    x, y = np.log(r0s[idx]), np.log(values[idx])
    slope = float(np.polyfit(x, y, 1)[0])
    return slope, r0s[idx], values[idx]


@dataclass(frozen=True)
class CantorSeries:
    """Residue data for the log-periodic small-``r0`` entropy series."""

    alpha: float
    hausdorff_d: float
    m_max: int
    R: tuple
    theta: tuple
    c_l: float
    c_r: float
    sign: int
    poles: tuple = field(repr=False)

    def value(self, r0: float) -> float:
        """``sign * 2 r0^d (R_0 / 2 + sum_m R_m cos(theta_m + 2 pi m log r0 / log alpha))``."""
        phase = 2.0 * math.pi * math.log(r0) / math.log(self.alpha)
        acc = 0.5 * self.R[0] + math.fsum(
            self.R[m] * math.cos(self.theta[m] + m * phase) for m in range(1, self.m_max + 1))
        return self.sign * 2.0 * r0**self.hausdorff_d * acc

    def error_bound(self, r0: float) -> float:
        """Truncation bound assuming ``R_m <= R_M (M / m)^2`` beyond ``M``."""
        m = self.m_max
        tail = float(polygamma(1, m + 1))
        return 2.0 * r0**self.hausdorff_d * self.R[m] * m * m * tail


def build_cantor_series(spec: CantorSpec, conn: ConnectionFunction, m_max: int = 50,
                        calibrate: bool = True, calibration_r0: float = 1e-2,
                        calibration_pairs: int = 200_000, seed=0,
                        psi_tol: float = 1e-12) -> CantorSeries:
    """Residues ``g(m) = psi(s_m) J(s_m) / log(alpha)`` as amplitudes and phases.

    With ``calibrate`` the overall sign is confirmed against a Monte-Carlo
    estimate at ``calibration_r0``; a mismatch above 20% for both signs
    raises ``CalibrationError``.
    """
    if m_max < 1:
        raise DomainError("m_max must be at least 1")
    d = spec.hausdorff_d
    c_l, c_r = 0.5 * d, d + 0.5
    report = assumption3_check(conn, (c_l, d, c_r))
    if not report.passed:
        raise AssumptionError(f"{conn} fails the regularity checks: {report.items}")
    la = math.log(spec.alpha)
    poles = spec.poles(m_max)
    amps, phases = [], []
    for s in poles:
        if abs(_pole_gap(spec, s)) > 1e-12:
            raise PoleError(f"s_m = {s} is not a pole to 1e-12")
        g = mellin_psi(conn, s, psi_tol) * full_range_integral(spec, s) / la
        amps.append(abs(g))
        phases.append(cmath.phase(g))
    series = CantorSeries(spec.alpha, d, m_max, tuple(amps), tuple(phases), c_l, c_r, 1,
                          tuple(poles))
    if not calibrate:
        return series
    ref = cantor_entropy_mc(spec, conn, calibration_r0, calibration_pairs, seed).value
    val = series.value(calibration_r0)
    mismatch = {sg: abs(sg * val - ref) / abs(ref) for sg in (1, -1)}
    sign = min(mismatch, key=mismatch.get)
    if mismatch[sign] > 0.2:
        raise CalibrationError(f"series {val:.6g} vs Monte Carlo {ref:.6g} at r0={calibration_r0}")
    return CantorSeries(spec.alpha, d, m_max, tuple(amps), tuple(phases), c_l, c_r, sign,
                        tuple(poles))


def cantor_entropy_series(spec: CantorSpec, conn: ConnectionFunction, r0: float,
                          m_max: int = 50, series: Optional[CantorSeries] = None,
                          **kwargs) -> tuple:
    """Log-periodic series value at ``r0`` and the :class:`CantorSeries` used."""
    if not r0 > 0:
        raise DomainError("r0 must be positive")
    series = series or build_cantor_series(spec, conn, m_max, **kwargs)
    return series.value(r0), series


def cdf_recursion_check(spec: CantorSpec, n_pairs: int, rng, grid_points: int = 1000) -> float:
    """Largest violation of ``F(r) = F(ar)/2 + F(ar - (a-1))/4 + F(ar + (a-1))/4``.

    ``F`` is the empirical CDF of the signed displacement; the supremum runs
    over ``grid_points`` values of ``r`` in ``[0, 1]``.
    """
    if n_pairs < 1000:
        raise DomainError("n_pairs must be at least 1000")
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(as_seed_sequence(rng))
    parts = []
    for start in range(0, n_pairs, DEFAULT_CHUNK):
        parts.append(sample_displacements(spec, gen, min(DEFAULT_CHUNK, n_pairs - start)))
    sample = np.sort(np.concatenate(parts))

    def F(x):
        return np.searchsorted(sample, x, side="right") / n_pairs

    a = spec.alpha
    r = np.linspace(0.0, 1.0, grid_points)
    dev = F(r) - 0.5 * F(a * r) - 0.25 * F(a * r - (a - 1)) - 0.25 * F(a * r + (a - 1))
    return float(np.max(np.abs(dev)))


def cdf_recursion_bound(n_pairs: int, confidence: float = 0.99) -> float:
    """99% DKW half-width used as the pass threshold for the recursion check."""
    return dkw_epsilon(n_pairs, confidence)


_TABLE_VERSION = 1


def odd_moment_table_mc(spec: CantorSpec, l_max: int, n_pairs: int, seed: int,
                        cache_dir: Optional[str] = None) -> tuple:
    """Monte-Carlo ``C[F; 2l+1]`` for ``l = 0..l_max`` with standard errors.

    Kept as an independent check of :func:`cantor_half_moment`; results are
    cached as CSV keyed by ``(alpha, depth, n_pairs, seed)``.
    """
    path = None
    if cache_dir is not None:
        name = (f"cantor_odd_v{_TABLE_VERSION}_a{spec.alpha!r}_K{spec.depth}"
                f"_n{n_pairs}_s{seed}_l{l_max}.csv")
        path = os.path.join(cache_dir, name)
        if os.path.exists(path):
            with open(path, newline="") as fh:
                rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")][1:]
            return (np.array([float(r[1]) for r in rows]), np.array([float(r[2]) for r in rows]))
    funcs = [lambda r, k=2 * l + 1: 0.5 * np.abs(r) ** k for l in range(l_max + 1)]
    res = mc_means(lambda g, m: sample_displacements(spec, g, m), funcs, n_pairs, seed)
    if path is not None:
        os.makedirs(cache_dir, exist_ok=True)
        with open(path, "w", newline="\n") as fh:
            fh.write(f"# version={_TABLE_VERSION} alpha={spec.alpha!r} depth={spec.depth} "
                     f"n_pairs={n_pairs} seed={seed}\n")
            fh.write("order,value,std_error\n")
            for l, (v, e) in enumerate(zip(res.means, res.std_errors)):
                fh.write("%d,%.17g,%.17g\n" % (2 * l + 1, v, e))
    return res.means, res.std_errors
