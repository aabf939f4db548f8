"""Acceptance criteria 1-9, each at its stated tolerance.

Every criterion prints one ``ACCEPTANCE <k> PASS|FAIL`` line; run with
``pytest tests/test_acceptance.py`` (lines appear in the terminal summary)
or ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import math
import sys
import time

import numpy as np
import pytest

from srgg_entropy.asymptotics import (
    domain_moments,
    integrability_check,
    large_r0,
    small_r0_leading,
    small_r0_second_order,
)
from srgg_entropy.cantor import (
    CantorSpec,
    build_cantor_series,
    cantor_entropy_curve,
    cantor_entropy_mc,
    cantor_moment_series,
    cdf_recursion_check,
    local_maxima_slope,
)
from srgg_entropy.cli import run
from srgg_entropy.connect import FermiDirac, PowerLaw, Rayleigh
from srgg_entropy.entropy import (
    compressibility_difference,
    entropy_maximizing_r0,
    entropy_per_edge_mc,
    entropy_per_edge_quadrature,
)
from srgg_entropy.geometry import Domain, DomainKind, dkw_epsilon, small_r_coeffs
from srgg_entropy.mass import WedgePoint, entropy_mass, mass_map, rho_moments, wedge_mass_leading

RESULTS: list = []


def report(k, ok: bool, detail: str) -> bool:
    line = f"ACCEPTANCE {k} {'PASS' if ok else 'FAIL'}: {detail}"
    RESULTS.append(line)
    print(line)
    return ok


INTERVAL, TORUS, SQUARE, DISK = (Domain.parse(s) for s in ("interval", "torus1d", "square", "disk"))


def criterion_1():
    """Quadrature and Monte Carlo agree within 3 standard errors on 36 configurations."""
    t0 = time.perf_counter()
    worst, fails = 0.0, []
    seeds = np.random.SeedSequence(2024).spawn(36)
    k = 0
    for dom in (INTERVAL, TORUS, SQUARE, DISK):
        for eta in (1.0, 2.0, 4.0):
            for r0 in (0.05, 0.2, 1.0):
                conn = Rayleigh(eta)
                q = entropy_per_edge_quadrature(dom, conn, r0).value
                mc = entropy_per_edge_mc(dom, conn, r0, 10**6, seeds[k])
                z = abs(q - mc.value) / mc.std_error
                worst = max(worst, z)
                if z > 3:
                    fails.append(f"{dom}/eta={eta}/r0={r0}")
                k += 1
    elapsed = time.perf_counter() - t0
    ok = not fails and elapsed <= 120
    return report(1, ok, f"36 configs, worst |z| = {worst:.2f}, {elapsed:.1f}s"
                  + (f", failing {fails}" if fails else ""))


def criterion_2():
    """Small-r0 ratio converges to 1; second order beats leading order at r0 = 0.05."""
    conn = Rayleigh(2.0)
    parts, ok = [], True
    for dom in (INTERVAL, SQUARE):
        s = small_r_coeffs(dom).s_leading
        ratios = [entropy_per_edge_quadrature(dom, conn, r0).value
                  / small_r0_leading(dom.d, 2.0, r0, s).value for r0 in (1e-2, 10**-2.5, 1e-3)]
        gaps = [abs(r - 1) for r in ratios]
        ok &= 0.98 <= ratios[-1] <= 1.02 and gaps[0] > gaps[1] > gaps[2]
        parts.append(f"{dom} ratios " + ", ".join(f"{r:.5f}" for r in ratios))
    r0 = 0.05
    q = entropy_per_edge_quadrature(INTERVAL, conn, r0).value
    e1 = abs(q - small_r0_leading(1, 2.0, r0).value)
    e2 = abs(q - small_r0_second_order(INTERVAL, 2.0, r0).value)
    ok &= e2 < e1
    parts.append(f"interval r0=0.05 errors leading {e1:.2e} second {e2:.2e}")
    return report(2, ok, "; ".join(parts))


def criterion_3():
    """Scaled large-r0 remainder stays within a factor 3 over r0 in {5, 10, 20, 50}."""
    eta, ok, parts = 2.0, True, []
    for dom in (INTERVAL, TORUS):
        m = domain_moments(dom, eta)
        scaled = []
        for r0 in (5.0, 10.0, 20.0, 50.0):
            rem = entropy_per_edge_quadrature(dom, Rayleigh(eta), r0).value - large_r0(dom, eta, r0, m).value
            scaled.append(abs(rem) * r0 ** (2 * eta) / math.log(r0))
        var = max(scaled) / min(scaled)
        ok &= var < 3
        parts.append(f"{dom} variation x{var:.3f}")
    return report(3, ok, "; ".join(parts))


def criterion_4():
    """Compressibility gap: divergence direction, log 2 increments, r0^-eta decay."""
    conn = Rayleigh(2.0)
    dc = {r0: compressibility_difference(INTERVAL, conn, r0) for r0 in (1e-4, 1e-3, 1e-2)}
    direction = dc[1e-4] > dc[1e-3] > dc[1e-2]
    inc = compressibility_difference(INTERVAL, conn, 0.5e-4) - dc[1e-4]
    inc_ok = abs(inc / math.log(2) - 1) <= 0.10
    scaled = [compressibility_difference(INTERVAL, conn, r0) * r0**2 for r0 in (10, 20, 50, 100)]
    flat = max(scaled) / min(scaled) - 1 <= 0.10
    return report(4, direction and inc_ok and flat,
                  f"dC(1e-4,1e-3,1e-2) = {dc[1e-4]:.4f}, {dc[1e-3]:.4f}, {dc[1e-2]:.4f}; "
                  f"increment {inc:.6f} vs log 2; dC*r0^2 spread {max(scaled) / min(scaled) - 1:.2%}")


def _region(x, y, cell):
    near = [min(x, 1 - x) < 2 * cell, min(y, 1 - y) < 2 * cell]
    return ("bulk", "edge", "corner")[sum(near)]


def criterion_5():
    """Square mass ratios at r0 = 0.02 and the bulk -> edge -> corner flip."""
    conn, r0 = Rayleigh(2.0), 0.02
    centre = entropy_mass(SQUARE, conn, r0, (0.5, 0.5)).value
    edge = entropy_mass(SQUARE, conn, r0, (0.5, 0.0)).value
    corner = entropy_mass(SQUARE, conn, r0, (0.0, 0.0)).value
    ratios_ok = abs(edge / centre / 0.5 - 1) <= 0.05 and abs(corner / centre / 0.25 - 1) <= 0.05
    r_star, _ = entropy_maximizing_r0(SQUARE, conn)
    n = 64
    regions = []
    for r in (0.05, r_star, 1.0):
        x, y = mass_map(SQUARE, conn, r, n, n).argmax()
        regions.append(_region(x, y, 1.0 / n))
    flip_ok = regions == ["bulk", "edge", "corner"]
    return report(5, ratios_ok and flip_ok,
                  f"1 : {edge / centre:.4f} : {corner / centre:.4f}; r0* = {r_star:.4f}; "
                  f"argmax regions {' -> '.join(regions)}")


def criterion_6():
    """Wedge leading-order residual slope and corner-angle proportionality."""
    eta = 2.0
    conn, theta = Rayleigh(eta), math.pi / 4
    dom = Domain(DomainKind.WEDGE, theta, 10.0)
    m = rho_moments(conn, 1.0)
    radii = (0.01, 0.02, 0.04)
    res = []
    for r in radii:
        wp = WedgePoint(r, theta / 2, theta)
        res.append(abs(entropy_mass(dom, conn, 1.0, wp.cartesian()).value - wedge_mass_leading(wp, m)))
    slope = float(np.polyfit(np.log(radii), np.log(res), 1)[0])
    need = min(3.0, eta + 2.0) - 0.5
    per_angle = [entropy_mass(Domain(DomainKind.WEDGE, t, 10.0), conn, 1.0, (0.0, 0.0)).value / t
                 for t in (math.pi / 6, math.pi / 4, math.pi / 3, math.pi / 2)]
    spread = (max(per_angle) - min(per_angle)) / np.mean(per_angle)
    ok = slope >= need and spread <= 1e-9
    return report(6, ok, f"residual slope {slope:.3f} (need >= {need}); H(0)/theta spread {spread:.1e}")


def criterion_7():
    """Cantor set: CDF recursion, local-maxima slope, residue series, moment fixed point."""
    t0 = time.perf_counter()
    parts, ok = [], True
    bound = dkw_epsilon(10**6, 0.99)
    devs = {a: cdf_recursion_check(CantorSpec(a), 10**6, 100 + int(a)) for a in (3.0, 4.0, 6.0, 10.0)}
    ok_a = all(d <= bound for d in devs.values())
    parts.append("(a) " + ", ".join(f"a={a:g}: {d:.2e}" for a, d in devs.items()) + f" <= {bound:.2e}")
    conn = Rayleigh(4.0)
    ok_b = True
    r0s = np.geomspace(1e-4, 1.0, 400)
    for a in (3.0, 4.0):
        means, _ = cantor_entropy_curve(CantorSpec(a), conn, r0s, 10**6, 200 + int(a))
        slope, xs, _ = local_maxima_slope(r0s, means)
        d = math.log(2) / math.log(a)
        ok_b &= abs(slope / d - 1) <= 0.05
        parts.append(f"(b) a={a:g}: slope {slope:.4f} vs {d:.4f} from {len(xs)} maxima")
    spec = CantorSpec(3.0)
    series = build_cantor_series(spec, conn, seed=300)
    ok_c = True
    for i, r0 in enumerate((1e-2, 10**-2.5, 1e-3)):
        mc = cantor_entropy_mc(spec, conn, r0, 10**6, 310 + i)
        sv = series.value(r0)
        ok_c &= abs(sv - mc.value) <= max(3 * mc.std_error, 0.05 * mc.value)
        parts.append(f"(c) r0={r0:.4g}: series {sv:.6g} mc {mc.value:.6g}+-{mc.std_error:.1e}")
    c2 = cantor_moment_series(spec, -2.0)
    ok_d = abs(c2 - 0.125) <= 1e-12
    parts.append(f"(d) C[F;2] - 1/8 = {abs(c2 - 0.125):.1e}")
    elapsed = time.perf_counter() - t0
    ok = ok_a and ok_b and ok_c and ok_d and elapsed <= 600
    parts.append(f"{elapsed:.0f}s")
    return report(7, ok, "; ".join(parts))


def criterion_8():
    """Integrability classes, with the numeric stabilisation test agreeing."""
    cases = [(PowerLaw(3.0), 3, "SuperPolynomial"), (PowerLaw(3.0), 1, "ThetaR0PowD"),
             (PowerLaw(3.0), 2, "ThetaR0PowD")]
    cases += [(c, d, "ThetaR0PowD") for c in (Rayleigh(2.0), Rayleigh(0.5), FermiDirac(0.0),
                                              FermiDirac(-3.0)) for d in (1, 2, 3)]
    bad = []
    for conn, d, want in cases:
        rep = integrability_check(conn, d)
        if rep.analytic.value != want or rep.numeric.value != want:
            bad.append(f"{conn}/d={d}")
    return report(8, not bad, f"{len(cases)} cases" + (f", wrong: {bad}" if bad else ", all agree"))


def criterion_9(tmp_dir):
    """CLI output is byte-identical under 1, 4 and 8 worker threads."""
    cmds = {
        "curve": ["curve", "--domain", "square", "--method", "both", "--r0", "0.05:1:4:log",
                  "--n-pairs", "200000"],
        "asym": ["asym", "--domain", "cube", "--r0", "0.05:0.2:2:log", "--n-pairs", "100000"],
        "mass": ["mass", "--method", "mc", "--grid", "24x24", "--n-pairs", "20000"],
        "cantor": ["cantor", "--r0", "0.001:0.01:3:log", "--n-pairs", "200000"],
        "compress": ["compress", "--domain", "cube", "--r0", "0.1:1:2:log", "--n-pairs", "100000"],
        "moments": ["moments", "--domain", "ball", "--n-pairs", "100000"],
    }
    bad = []
    for name, argv in cmds.items():
        blobs = []
        for w in (1, 4, 8):
            out = f"{tmp_dir}/{name}_{w}.csv"
            extra = ["--pgm", f"{tmp_dir}/{name}_{w}.pgm"] if name == "mass" else []
            if run(argv + ["--seed", "42", "--workers", str(w), "--out", out] + extra) != 0:
                bad.append(f"{name} failed")
            with open(out, "rb") as fh:
                blob = fh.read()
            if extra:
                with open(extra[1], "rb") as fh:
                    blob += fh.read()
            blobs.append(blob)
        if not blobs[0] == blobs[1] == blobs[2]:
            bad.append(name)
    return report(9, not bad, f"{len(cmds)} commands x workers 1/4/8"
                  + (f", differing: {bad}" if bad else ", byte-identical"))


class TestAcceptance:
    def test_1_cross_method(self):
        assert criterion_1()

    def test_2_small_range(self):
        assert criterion_2()

    def test_3_large_range(self):
        assert criterion_3()

    def test_4_compressibility(self):
        assert criterion_4()

    def test_5_mass_ratios(self):
        assert criterion_5()

    def test_6_wedge(self):
        assert criterion_6()

    def test_7_cantor(self):
        assert criterion_7()

    def test_8_integrability(self):
        assert criterion_8()

    def test_9_determinism(self, tmp_path):
        assert criterion_9(str(tmp_path))


if __name__ == "__main__":
    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        checks = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
                  criterion_7, criterion_8, lambda: criterion_9(tmp)]
        outcomes = [c() for c in checks]
    sys.exit(0 if all(outcomes) else 1)
