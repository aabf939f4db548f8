"""Connection functions, binary entropy and the entropy-graph connection.

Each family exposes ``prob_pair(x)`` returning ``(p, 1 - p)`` at scaled
distance ``x = r / r0``, with both members computed without cancellation so
that ``h2`` stays accurate deep in either tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import expit

from .errors import DomainError, UnsupportedError


def _arr(x):
    return np.asarray(x, dtype=float)


def _ret(out):
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class Rayleigh:
    """``p(x) = exp(-x^eta)``."""

    eta: float = 2.0

    def __post_init__(self):
        if not self.eta > 0:
            raise DomainError(f"Rayleigh needs eta > 0, got {self.eta}")

    def prob_pair(self, x):
        u = _arr(x) ** self.eta
        return np.exp(-u), -np.expm1(-u)

    def log_pair(self, x):
        u = _arr(x) ** self.eta
        with np.errstate(divide="ignore"):
            return -u, np.log(-np.expm1(-u))

    def derivatives(self, x):
        """First and second derivatives of ``p``."""
        x = _arr(x)
        p = np.exp(-(x**self.eta))
        e = self.eta
        with np.errstate(divide="ignore", invalid="ignore"):
            d1 = -e * x ** (e - 1) * p
            d2 = p * (e * e * x ** (2 * e - 2) - e * (e - 1) * x ** (e - 2))
        return d1, d2

    def spikes(self):
        return (math.log(2.0) ** (1.0 / self.eta),)

    def __str__(self):
        return f"rayleigh:eta={self.eta!r}"


@dataclass(frozen=True)
class FermiDirac:
    """``p(x) = 1 / (1 + exp(alpha + x))``, taken verbatim."""

    alpha: float = 0.0

    def prob_pair(self, x):
        z = self.alpha + _arr(x)
        return expit(-z), expit(z)

    def log_pair(self, x):
        z = self.alpha + _arr(x)
        return -np.logaddexp(0.0, z), -np.logaddexp(0.0, -z)

    def derivatives(self, x):
        p, q = self.prob_pair(x)
        return -p * q, p * q * (q - p)

    def spikes(self):
        return (-self.alpha,) if self.alpha < 0 else ()

    def __str__(self):
        return f"fermi:alpha={self.alpha!r}"


@dataclass(frozen=True)
class PowerLaw:
    """``p(x) = min(1, x^-alpha)``."""

    alpha: float = 3.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError(f"PowerLaw needs alpha > 0, got {self.alpha}")

    def prob_pair(self, x):
        x = _arr(x)
        with np.errstate(divide="ignore"):
            lx = np.log(np.maximum(x, 1.0))
        return np.exp(-self.alpha * lx), -np.expm1(-self.alpha * lx)

    def log_pair(self, x):
        x = _arr(x)
        lx = np.log(np.maximum(x, 1.0))
        with np.errstate(divide="ignore"):
            return -self.alpha * lx, np.log(-np.expm1(-self.alpha * lx))

    def derivatives(self, x):
        x = _arr(x)
        a = self.alpha
        far = x > 1.0
        xs = np.where(far, x, 1.0)
        d1 = np.where(far, -a * xs ** (-a - 1), 0.0)
        d2 = np.where(far, a * (a + 1) * xs ** (-a - 2), 0.0)
        return d1, d2

    def spikes(self):
        return (1.0, 2.0 ** (1.0 / self.alpha))

    def __str__(self):
        return f"powerlaw:alpha={self.alpha!r}"


@dataclass(frozen=True)
class Hard:
    """Indicator ``p(x) = 1`` iff ``x < 1``."""

    def prob_pair(self, x):
        p = (_arr(x) < 1.0).astype(float)
        return p, 1.0 - p

    def log_pair(self, x):
        p, q = self.prob_pair(x)
        with np.errstate(divide="ignore"):
            return np.log(p), np.log(q)

    def derivatives(self, x):
        z = np.zeros_like(_arr(x))
        return z, z

    def spikes(self):
        return (1.0,)

    def __str__(self):
        return "hard"


@dataclass(frozen=True)
class Constant:
    """Distance-independent ``p = q`` (the Erdos-Renyi case)."""

    q: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise DomainError(f"Constant needs q in [0, 1], got {self.q}")

    def prob_pair(self, x):
        shape = np.shape(x)
        return np.full(shape, self.q), np.full(shape, 1.0 - self.q)

    def log_pair(self, x):
        p, q = self.prob_pair(x)
        with np.errstate(divide="ignore"):
            return np.log(p), np.log(q)

    def derivatives(self, x):
        z = np.zeros_like(_arr(x))
        return z, z

    def spikes(self):
        return ()

    def __str__(self):
        return f"const:q={self.q!r}"


ConnectionFunction = Union[Rayleigh, FermiDirac, PowerLaw, Hard, Constant]

_PARSERS = {
    "rayleigh": (Rayleigh, "eta"),
    "fermi": (FermiDirac, "alpha"),
    "powerlaw": (PowerLaw, "alpha"),
    "hard": (Hard, None),
    "const": (Constant, "q"),
}


def parse_connection(text: str) -> ConnectionFunction:
    """Parse ``rayleigh:eta=2``, ``fermi:alpha=0.0``, ``powerlaw:alpha=3``,
    ``hard`` or ``const:q=0.1``."""
    name, _, params = text.strip().partition(":")
    if name not in _PARSERS:
        raise DomainError(f"unknown connection family {name!r}")
    cls, key = _PARSERS[name]
    if key is None:
        if params:
            raise DomainError(f"{name} takes no parameters")
        return cls()
    k, eq, v = params.partition("=")
    if not eq or k != key:
        raise DomainError(f"expected {name}:{key}=<value>, got {text!r}")
    try:
        value = float(v)
    except ValueError as exc:
        raise DomainError(f"bad numeric value in {text!r}") from exc
    return cls(value)


def _h2_pair(p, q):
    """Binary entropy from an accurate pair ``(p, 1 - p)``."""
    p, q = np.broadcast_arrays(_arr(p), _arr(q))
    small = np.minimum(p, q)
    big = np.maximum(p, q)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -small * np.log(small) - big * np.log1p(-small)
    return np.where(small > 0.0, out, 0.0)


def binary_entropy(p):
    """``h2(p) = -p log p - (1 - p) log(1 - p)`` in nats, with ``0 log 0 = 0``."""
    p = _arr(p)
    if np.any(~((p >= 0.0) & (p <= 1.0))):
        raise DomainError("binary_entropy needs p in [0, 1]")
    return _ret(_h2_pair(p, 1.0 - p))


def _scaled(r, r0):
    if not (np.isfinite(r0) and r0 > 0):
        raise DomainError(f"r0 must be positive and finite, got {r0}")
    r = _arr(r)
    if np.any(r < 0):
        raise DomainError("distances must be non-negative")
    return r / r0


def evaluate(conn: ConnectionFunction, r, r0: float):
    """Edge probability ``p(r / r0)``."""
    return _ret(conn.prob_pair(_scaled(r, r0))[0])


def rho_scaled(conn: ConnectionFunction, x):
    """``h2(p(x))`` at scaled distance ``x``."""
    return _h2_pair(*conn.prob_pair(x))


def entropy_connection(conn: ConnectionFunction, r, r0: float):
    """Entropy-graph connection ``rho(r) = h2(p(r / r0))``."""
    return _ret(rho_scaled(conn, _scaled(r, r0)))


def rho_derivatives(conn: ConnectionFunction, x):
    """First and second derivatives of ``h2(p(x))`` in ``x``."""
    x = _arr(x)
    logp, logq = conn.log_pair(x)
    p, q = conn.prob_pair(x)
    d1, d2 = conn.derivatives(x)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        lr = logq - logp
        g1 = np.where(d1 != 0, lr * d1, 0.0)
        pq = p * q
        g2 = np.where(d2 != 0, lr * d2, 0.0) - np.where(d1 != 0, d1 * d1 / pq, 0.0)
    return np.nan_to_num(g1), np.nan_to_num(g2)


@dataclass(frozen=True)
class SmallArgExpansion:
    """``rho(x) = constant + sum a x^alpha + sum b x^beta log x + ...``."""

    constant: float
    power_terms: tuple
    log_terms: tuple

    @property
    def alpha_min(self) -> float:
        return min(e for e, _ in self.power_terms)

    @property
    def beta_min(self) -> float:
        return min(e for e, _ in self.log_terms)

    def __call__(self, x):
        x = _arr(x)
        out = np.full_like(x, self.constant)
        for e, a in self.power_terms:
            out = out + a * x**e
        for e, b in self.log_terms:
            out = out + b * x**e * np.log(x)
        return _ret(out)


def small_arg_expansion(conn: ConnectionFunction) -> SmallArgExpansion:
    """Small-argument expansion of ``h2(p(x))``; Rayleigh fading only."""
    if not isinstance(conn, Rayleigh):
        raise UnsupportedError(f"no analytic small-argument expansion for {conn}")
    e = float(conn.eta)
    return SmallArgExpansion(0.0, ((e, 1.0),), ((e, -e),))
