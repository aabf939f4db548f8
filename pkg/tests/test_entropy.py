import math

import numpy as np
import pytest
from scipy import integrate, special

from srgg_entropy.connect import Constant, FermiDirac, Hard, PowerLaw, Rayleigh, binary_entropy, rho_scaled
from srgg_entropy.entropy import (
    GraphInstance,
    Method,
    compressibility_difference,
    conditional_entropy_of_instance,
    entropy_maximizing_r0,
    entropy_per_edge_mc,
    entropy_per_edge_quadrature,
    generate_srgg,
    mean_connection_prob,
)
from srgg_entropy.errors import DegenerateError, DomainError, UnsupportedError
from srgg_entropy.geometry import Domain, empirical_distance_cdf

INTERVAL, TORUS, SQUARE, DISK = (Domain.parse(s) for s in ("interval", "torus1d", "square", "disk"))
BALL, CUBE = Domain.parse("ball"), Domain.parse("cube")


def simpson_interval(conn, r0, n=10**6):
    """Fixed-grid composite Simpson oracle on the unit interval."""
    r = np.linspace(0.0, 1.0, n + 1)
    return integrate.simpson((2 - 2 * r) * rho_scaled(conn, r / r0), x=r)


class TestQuadrature:
    @pytest.mark.parametrize("q", [0.1, 0.5, 0.9])
    def test_constant(self, q):
        est = entropy_per_edge_quadrature(INTERVAL, Constant(q), 0.37)
        assert est.value == pytest.approx(binary_entropy(q), rel=1e-12)
        assert est.method is Method.QUADRATURE

    def test_hard_large_range(self):
        assert entropy_per_edge_quadrature(INTERVAL, Hard(), 1.0).value == 0.0

    def test_simpson_oracle(self):
        conn = Rayleigh(2.0)
        assert entropy_per_edge_quadrature(INTERVAL, conn, 0.1).value == pytest.approx(
            simpson_interval(conn, 0.1), abs=1e-8)

    @pytest.mark.parametrize("dom", [INTERVAL, TORUS, SQUARE, DISK])
    @pytest.mark.parametrize("conn", [Rayleigh(2.0), FermiDirac(-2.0), PowerLaw(3.0)])
    def test_bounded(self, dom, conn):
        v = entropy_per_edge_quadrature(dom, conn, 0.3, tol=1e-10).value
        assert 0.0 < v <= math.log(2)

    def test_needs_density(self):
        with pytest.raises(UnsupportedError):
            entropy_per_edge_quadrature(CUBE, Rayleigh(2.0), 0.3)

    def test_bad_r0(self):
        with pytest.raises(DomainError):
            entropy_per_edge_quadrature(INTERVAL, Rayleigh(2.0), -1.0)


class TestMonteCarlo:
    def test_matches_quadrature(self):
        conn = Rayleigh(2.0)
        q = entropy_per_edge_quadrature(SQUARE, conn, 0.2).value
        mc = entropy_per_edge_mc(SQUARE, conn, 0.2, 10**6, 1)
        assert abs(q - mc.value) <= 3 * mc.std_error
        assert mc.method is Method.MONTE_CARLO and mc.n_pairs == 10**6

    def test_hard_exactly_zero(self):
        assert entropy_per_edge_mc(DISK, Hard(), 0.3, 10_000, 2).value == 0.0

    def test_ball_against_empirical_density(self):
        conn = Rayleigh(4.0)
        dens = empirical_distance_cdf(BALL, 10**6, 5)
        q = entropy_per_edge_quadrature(BALL, conn, 0.5, tol=1e-10, density=dens)
        mc = entropy_per_edge_mc(BALL, conn, 0.5, 10**6, 6)
        combined = math.hypot(q.std_error, mc.std_error)
        assert abs(q.value - mc.value) <= 3 * combined

    def test_deterministic(self):
        a = entropy_per_edge_mc(SQUARE, Rayleigh(2.0), 0.2, 50_000, 9)
        b = entropy_per_edge_mc(SQUARE, Rayleigh(2.0), 0.2, 50_000, 9, workers=3)
        assert a.value == b.value

    def test_too_few_pairs(self):
        with pytest.raises(DomainError):
            entropy_per_edge_mc(SQUARE, Rayleigh(2.0), 0.2, 10, 0)


class TestInstances:
    def test_single_edge_at_half(self):
        conn = Rayleigh(2.0)
        r0 = 0.1
        dist = r0 * math.sqrt(math.log(2))
        inst = GraphInstance(np.array([[0.2], [0.2 + dist]]), np.empty((0, 2), int), None,
                             INTERVAL, conn, r0)
        assert conditional_entropy_of_instance(inst).value == pytest.approx(math.log(2))

    def test_hard_instance(self):
        inst = generate_srgg(SQUARE, Hard(), 0.2, 200, 4)
        assert conditional_entropy_of_instance(inst).value == 0.0

    def test_constant_graphs(self):
        n = 30
        assert len(generate_srgg(INTERVAL, Constant(1.0), 0.1, n, 1).edges) == n * (n - 1) // 2
        assert len(generate_srgg(INTERVAL, Constant(0.0), 0.1, n, 1).edges) == 0

    def test_converges_to_quadrature(self):
        conn = Rayleigh(2.0)
        ref = entropy_per_edge_quadrature(INTERVAL, conn, 0.1).value
        ss = np.random.SeedSequence(17).spawn(50)
        vals = [conditional_entropy_of_instance(generate_srgg(INTERVAL, conn, 0.1, 500, s)).value
                for s in ss]
        assert abs(np.mean(vals) - ref) <= 3 * np.std(vals, ddof=1)

    def test_edge_density(self):
        conn = Rayleigh(2.0)
        pbar = mean_connection_prob(INTERVAL, conn, 0.1)
        n = 2000
        dens = [len(generate_srgg(INTERVAL, conn, 0.1, n, s).edges) / (n * (n - 1) / 2)
                for s in np.random.SeedSequence(3).spawn(8)]
        assert abs(np.mean(dens) - pbar) <= 3 * np.std(dens, ddof=1) / math.sqrt(len(dens))


class TestMeanConnection:
    def test_constant(self):
        assert mean_connection_prob(SQUARE, Constant(0.42), 0.3) == 0.42

    def test_hard_interval(self):
        assert mean_connection_prob(INTERVAL, Hard(), 0.5) == pytest.approx(0.75, abs=1e-12)

    def test_torus_gaussian(self):
        ref = 0.1 * math.sqrt(math.pi) * special.erf(5.0)
        assert mean_connection_prob(TORUS, Rayleigh(2.0), 0.1) == pytest.approx(ref, rel=1e-11)

    def test_mc_agrees(self):
        q = mean_connection_prob(DISK, Rayleigh(2.0), 0.4)
        mc = mean_connection_prob(DISK, Rayleigh(2.0), 0.4, "mc", 400_000, 3)
        assert mc == pytest.approx(q, abs=3e-3)


class TestCompressibility:
    def test_constant_is_zero(self):
        assert compressibility_difference(INTERVAL, Constant(0.3), 0.1) == 0.0

    def test_diverges_as_range_shrinks(self):
        conn = Rayleigh(2.0)
        assert (compressibility_difference(INTERVAL, conn, 1e-4)
                > compressibility_difference(INTERVAL, conn, 1e-3))

    def test_vanishes_at_large_range(self):
        conn = Rayleigh(2.0)
        a = compressibility_difference(INTERVAL, conn, 100.0)
        b = compressibility_difference(INTERVAL, conn, 200.0)
        assert a < 1e-2 and b < a

    def test_degenerate(self):
        with pytest.raises(DegenerateError):
            compressibility_difference(INTERVAL, Constant(0.0), 0.1)

    def test_mc_path(self):
        dc = compressibility_difference(CUBE, Rayleigh(2.0), 0.2, 200_000, 1)
        assert dc > 0


class TestMaximiser:
    def test_stationary(self):
        conn = Rayleigh(2.0)
        r, h = entropy_maximizing_r0(SQUARE, conn)
        for f in (0.97, 1.03):
            assert entropy_per_edge_quadrature(SQUARE, conn, r * f).value < h

    def test_flat_families(self):
        with pytest.raises(UnsupportedError):
            entropy_maximizing_r0(SQUARE, Hard())
