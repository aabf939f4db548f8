"""Closed-form limits of the entropy-per-edge for Rayleigh fading.

Small connection range: ``H ~ s_{d-1} r0^d psi(d) (+ a_d r0^(d+1) psi(d+1))``
with ``psi(s) = int_0^inf t^(s-1) h2(exp(-t^eta)) dt``. Large range: the
two-term expansion in ``E[R^eta]`` and ``E[R^eta log R]``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy import integrate

from .connect import ConnectionFunction, Constant, FermiDirac, Hard, PowerLaw, Rayleigh, rho_scaled
from .entropy import _quadrature_mean, pair_mc
from .errors import DomainError
from .geometry import CLOSED_FORM_KINDS, Domain, small_r_coeffs
from .specfun import gamma, riemann_zeta, theorem1_tail_series

# Surface area of the unit sphere in R^d, indexed by d.
SPHERE_AREA = {1: 2.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}


class Regime(Enum):
    SMALL_R0_LEADING = "small-r0-leading"
    SMALL_R0_SECOND_ORDER = "small-r0-second-order"
    LARGE_R0 = "large-r0"


@dataclass(frozen=True)
class AsymptoteResult:
    value: float
    regime: Regime
    validity_hint: float


@dataclass(frozen=True)
class DomainMoments:
    """``E[R^eta]`` and ``E[R^eta log R]`` for the pair distance ``R``."""

    e_r_eta: float
    e_r_eta_log: float
    eta: float
    method: str
    std_errors: tuple = (0.0, 0.0)


def rayleigh_mellin_constant(s: float, eta: float) -> float:
    """``int_0^inf t^(s-1) h2(exp(-t^eta)) dt`` in closed form.

    Equals ``Gamma(a) (a + zeta(a + 1) - S(a)) / eta`` with ``a = s / eta``.
    """
    a = s / eta
    return gamma(a) * (a + riemann_zeta(a + 1.0) - theorem1_tail_series(s, eta)) / eta


def small_r0_leading(d: int, eta: float, r0: float,
                     s_leading: Optional[float] = None) -> AsymptoteResult:
    """Leading small-``r0`` term ``s_{d-1} r0^d psi(d)`` for unit-volume domains.

    ``s_leading`` overrides the unit-sphere area for domains whose density
    starts with a different ``r^(d-1)`` coefficient.
    """
    if d not in SPHERE_AREA:
        raise DomainError(f"d must be 1, 2 or 3, got {d}")
    if not (eta > 0 and r0 > 0):
        raise DomainError("eta and r0 must be positive")
    s = SPHERE_AREA[d] if s_leading is None else s_leading
    return AsymptoteResult(s * r0**d * rayleigh_mellin_constant(d, eta),
                           Regime.SMALL_R0_LEADING, 0.2)


def small_r0_second_order(domain: Domain, eta: float, r0: float) -> AsymptoteResult:
    """Leading term plus the ``a_d r0^(d+1)`` correction from the density."""
    coeffs = small_r_coeffs(domain)
    if not coeffs.valid:
        raise DomainError(f"no closed-form a_d for {domain.kind.value}")
    d = domain.d
    lead = small_r0_leading(d, eta, r0, coeffs.s_leading).value
    corr = coeffs.a_d * r0 ** (d + 1) * rayleigh_mellin_constant(d + 1, eta)
    return AsymptoteResult(lead + corr, Regime.SMALL_R0_SECOND_ORDER, 0.2 * domain.diameter)


def large_r0(domain: Domain, eta: float, r0: float, moments: DomainMoments) -> AsymptoteResult:
    """``((1 + eta log r0) E[R^eta] - eta E[R^eta log R]) / r0^eta``."""
    if not math.isclose(moments.eta, eta):
        raise DomainError("moments were computed for a different eta")
    if not r0 > 0:
        raise DomainError("r0 must be positive")
    value = ((1.0 + eta * math.log(r0)) * moments.e_r_eta - eta * moments.e_r_eta_log) / r0**eta
    return AsymptoteResult(value, Regime.LARGE_R0, domain.diameter)


def _rlog(r, eta):
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(r > 0, r**eta * np.log(np.where(r > 0, r, 1.0)), 0.0)


def domain_moments(domain: Domain, eta: float, method: str = "quadrature",
                   n_pairs: int = 10**6, rng=None) -> DomainMoments:
    """Pair-distance moments by quadrature against ``f`` or by Monte Carlo."""
    if not eta > 0:
        raise DomainError("eta must be positive")
    if method == "quadrature":
        c = Constant(0.0)
        m1 = _quadrature_mean(domain, lambda r: np.asarray(r) ** eta, 1.0, 1e-13, c)
        m2 = _quadrature_mean(domain, lambda r: _rlog(r, eta), 1.0, 1e-13, c)
        return DomainMoments(m1, m2, eta, "quadrature")
    if method in ("mc", "monte-carlo"):
        res = pair_mc(domain, [lambda r: r**eta, lambda r: _rlog(r, eta)], n_pairs, rng)
        return DomainMoments(float(res.means[0]), float(res.means[1]), eta, "monte-carlo",
                             (float(res.std_errors[0]), float(res.std_errors[1])))
    raise DomainError(f"unknown method {method!r}")


def default_moments(domain: Domain, eta: float, n_pairs: int = 10**6, rng=0) -> DomainMoments:
    """Quadrature moments when ``f`` is closed form, Monte Carlo otherwise."""
    if domain.kind in CLOSED_FORM_KINDS:
        return domain_moments(domain, eta)
    return domain_moments(domain, eta, "mc", n_pairs, rng)


class IntegrabilityClass(Enum):
    THETA_R0_POW_D = "ThetaR0PowD"
    SUPER_POLYNOMIAL = "SuperPolynomial"


@dataclass(frozen=True)
class IntegrabilityReport:
    analytic: IntegrabilityClass
    numeric: IntegrabilityClass
    truncated: tuple
    agrees: bool


def _analytic_class(conn: ConnectionFunction, d: int) -> IntegrabilityClass:
    if isinstance(conn, PowerLaw):
        return (IntegrabilityClass.THETA_R0_POW_D if d < conn.alpha
                else IntegrabilityClass.SUPER_POLYNOMIAL)
    if isinstance(conn, Constant) and 0.0 < conn.q < 1.0:
        return IntegrabilityClass.SUPER_POLYNOMIAL
    return IntegrabilityClass.THETA_R0_POW_D


def truncated_entropy_integral(conn: ConnectionFunction, d: int, upper: float) -> float:
    """``int_0^upper t^(d-1) h2(p(t)) dt``."""
    pts = sorted({*conn.spikes(), *np.geomspace(1e-3, upper, 40)})
    pts = [0.0] + [p for p in pts if 0 < p < upper] + [upper]
    total = 0.0
    for a, b in zip(pts, pts[1:]):
        total += integrate.quad(lambda t: t ** (d - 1) * float(rho_scaled(conn, t)), a, b,
                                epsabs=1e-13, epsrel=1e-11, limit=200)[0]
    return total


def integrability_check(conn: ConnectionFunction, d: int,
                        cutoffs: tuple = (1e2, 1e3, 1e4)) -> IntegrabilityReport:
    """Analytic rule plus a truncated-integral stabilisation test."""
    vals = tuple(truncated_entropy_integral(conn, d, t) for t in cutoffs)
    a, b = vals[-2], vals[-1]
    stable = (a == b == 0.0) or (a > 0 and abs(b / a - 1.0) < 0.01)
    numeric = IntegrabilityClass.THETA_R0_POW_D if stable else IntegrabilityClass.SUPER_POLYNOMIAL
    analytic = _analytic_class(conn, d)
    if numeric is not analytic:
        warnings.warn(f"integrability of {conn} in d={d}: numeric test says {numeric.value}, "
                      f"analytic rule says {analytic.value}; using the analytic rule",
                      RuntimeWarning, stacklevel=2)
    return IntegrabilityReport(analytic, numeric, vals, numeric is analytic)


def integrability_class(conn: ConnectionFunction, d: int) -> IntegrabilityClass:
    """Whether ``H`` grows like ``r0^d`` as ``r0 -> 0`` or decays slower.

    Rayleigh, Fermi-Dirac and hard connections are always ``ThetaR0PowD``;
    a power law with exponent ``alpha`` is only when ``d < alpha``.
    """
    if d < 1:
        raise DomainError("d must be at least 1")
    if not isinstance(conn, (Rayleigh, FermiDirac, PowerLaw, Hard, Constant)):
        raise DomainError(f"unsupported connection {conn!r}")
    return integrability_check(conn, d).analytic
