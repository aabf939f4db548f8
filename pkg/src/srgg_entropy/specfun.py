"""Real special functions used by the asymptotic entropy formulas.

Gamma, the lower incomplete gamma function, the Riemann zeta function and
the tail series ``S(d, eta) = sum_{k>=2} k^(-d/eta) / (k - 1)`` that appears in
the small connection range constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConvergenceError, DomainError

# Bernoulli numbers B_2, B_4, ..., B_20.
_BERNOULLI = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
)
_FPMIN = 1e-300


@dataclass(frozen=True)
class SpecFunConfig:
    """Tolerances shared by the series evaluations in this module."""

    series_tol: float = 1e-12
    max_terms: int = 10**6

    def __post_init__(self):
        if not self.series_tol > 0:
            raise DomainError("series_tol must be positive")
        if self.max_terms < 100:
            raise DomainError("max_terms must be at least 100")


DEFAULT_CONFIG = SpecFunConfig()


def _check_finite(*values):
    for v in values:
        if not math.isfinite(v):
            raise DomainError(f"non-finite argument {v!r}")


def gamma(z: float) -> float:
    """Gamma function for real ``z > 0``."""
    _check_finite(z)
    if z <= 0:
        raise DomainError(f"gamma requires z > 0, got {z}")
    return math.gamma(z)


def _gamma_series(z, x, config):
    ap = z
    term = total = 1.0 / z
    for _ in range(config.max_terms):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * 1e-17:
            return total * math.exp(-x + z * math.log(x))
    raise ConvergenceError("incomplete gamma series did not converge")


def _upper_gamma_cf(z, x, config):
    # Modified Lentz evaluation of the continued fraction for Gamma(z, x).
    b = x + 1.0 - z
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, config.max_terms):
        an = -i * (i - z)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return math.exp(-x + z * math.log(x)) * h
    raise ConvergenceError("incomplete gamma continued fraction did not converge")


def lower_incomplete_gamma(z: float, x: float, config: SpecFunConfig = DEFAULT_CONFIG) -> float:
    """Lower incomplete gamma ``gamma(z, x) = int_0^x t^(z-1) e^(-t) dt``.

    Uses the power series for ``x < z + 1`` and the continued fraction for the
    upper function otherwise.
    """
    _check_finite(z, x)
    if z <= 0:
        raise DomainError(f"lower_incomplete_gamma requires z > 0, got {z}")
    if x < 0:
        raise DomainError(f"lower_incomplete_gamma requires x >= 0, got {x}")
    if x == 0:
        return 0.0
    if x < z + 1.0:
        return _gamma_series(z, x, config)
    full = math.gamma(z)
    return max(full - _upper_gamma_cf(z, x, config), 0.0)


def _zeta_tail(s, start, config):
    """``sum_{k >= start} k^-s`` by Euler-Maclaurin with cut ``N``."""
    n_cut = max(start + 1, 16)
    partial = math.fsum(k ** -s for k in range(start, n_cut))
    tail = n_cut ** (1.0 - s) / (s - 1.0) + 0.5 * n_cut ** -s
    rising = s  # s (s+1) ... (s+2j-2)
    factorial = 2.0  # (2j)!
    power = n_cut ** (-s - 1.0)
    for j, b2j in enumerate(_BERNOULLI, start=1):
        term = b2j / factorial * rising * power
        tail += term
        if abs(term) <= config.series_tol * 1e-4 * abs(partial + tail):
            break
        rising *= (s + 2 * j - 1) * (s + 2 * j)
        factorial *= (2 * j + 1) * (2 * j + 2)
        power /= n_cut * n_cut
    return partial + tail


def riemann_zeta(s: float, config: SpecFunConfig = DEFAULT_CONFIG) -> float:
    """Riemann zeta function for real ``s > 1``."""
    _check_finite(s)
    if s <= 1:
        raise DomainError(f"riemann_zeta diverges for s <= 1, got {s}")
    return 1.0 + _zeta_tail(s, 2, config)


def zeta_minus_one(s: float, config: SpecFunConfig = DEFAULT_CONFIG) -> float:
    """``zeta(s) - 1`` without the cancellation of subtracting one."""
    _check_finite(s)
    if s <= 1:
        raise DomainError(f"zeta diverges for s <= 1, got {s}")
    return _zeta_tail(s, 2, config)


def theorem1_tail_series(d: float, eta: float, config: SpecFunConfig = DEFAULT_CONFIG) -> float:
    r"""``S = sum_{k>=2} k^(-d/eta) / (k - 1)``.

    Expanding ``1/(k-1) = sum_{j>=1} k^(-j)`` rewrites the slowly converging
    sum as ``sum_{j>=1} (zeta(d/eta + j) - 1)``, whose terms decay like
    ``2^-j``.
    """
    _check_finite(d, eta)
    if d <= 0 or eta <= 0:
        raise DomainError("theorem1_tail_series requires d > 0 and eta > 0")
    a = d / eta
    total = 0.0
    for j in range(1, config.max_terms + 1):
        term = zeta_minus_one(a + j, config)
        total += term
        # Remaining terms shrink at least geometrically by a factor 1/2 once
        # the exponent exceeds 2, so the tail is bounded by the last term.
        if a + j >= 2 and term <= 0.5 * config.series_tol:
            return total
    raise ConvergenceError("theorem1_tail_series exceeded max_terms")


def power_exp_integral(m: float, c: float, upper: float, r0: float, eta: float,
                       config: SpecFunConfig = DEFAULT_CONFIG) -> float:
    """Closed form of ``int_0^upper r^m exp(-c (r/r0)^eta) dr``.

    Equals ``r0^(m+1) c^(-(m+1)/eta) gamma((m+1)/eta, c (upper/r0)^eta) / eta``.
    """
    if m < 0 or c <= 0 or upper <= 0 or eta <= 0 or r0 <= 0:
        raise DomainError("power_exp_integral requires m >= 0 and c, upper, r0, eta > 0")
    z = (m + 1.0) / eta
    x = c * (upper / r0) ** eta
    return r0 ** (m + 1.0) * c ** (-z) * lower_incomplete_gamma(z, x, config) / eta
