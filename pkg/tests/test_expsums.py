import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from resolventlab.expsums import (band_kernel_sup, hlawka_abs_sum, hlawka_sum, lattice_shell,
                                  mollified_gap_kernel_sup, planar_section_count, quadruple_count,
                                  quadruple_count_bruteforce, shell_norm_range, sphere_points, unit_band_count)
from resolventlab.grids import TorusSpace, lp_norm
from resolventlab.harness.recipes import quadruple_bruteforce_vectorized
from resolventlab.spectra import representation_counts


class TestQuadruples:
    def test_circle_of_radius_five(self):
        P, Q = quadruple_count(2, 25)
        assert P == 12
        assert sorted(map(tuple, sphere_points(2, 25))) == sorted(
            {(a, b) for a, b in [(5, 0), (0, 5), (3, 4), (4, 3)] for a, b in
             [(a, b), (-a, b), (a, -b), (-a, -b)]})
        assert Q >= 2 * P * P - P

    def test_empty_circle(self):
        assert quadruple_count(2, 3) == (0, 0)

    @pytest.mark.parametrize("n,m", [(2, 1), (2, 5), (2, 25), (3, 3), (3, 6), (3, 9)])
    def test_quartic_oracle(self, n, m):
        assert quadruple_count(n, m) == quadruple_count_bruteforce(n, m)

    def test_vectorized_oracle_up_to_sixty_points(self):
        for n, m_hi in ((2, 200), (3, 60)):
            for m in range(1, m_hi + 1):
                pts = sphere_points(n, m)
                if 0 < len(pts) <= 60:
                    assert quadruple_count(n, m) == quadruple_bruteforce_vectorized(n, m)

    @given(st.integers(1, 300))
    def test_trivial_floor(self, m):
        P, Q = quadruple_count(3, m)
        assert P == representation_counts(3, m)[m]
        assert Q >= 2 * P * P - P

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            quadruple_count(4, 5)
        with pytest.raises(ValueError):
            quadruple_count(3, 0)

    @pytest.mark.parametrize("n,m", [(2, 65), (3, 26), (3, 50), (3, 101)])
    def test_l4_identity(self, n, m):
        P, Q = quadruple_count(n, m)
        space = TorusSpace(sphere_points(n, m), p=4)
        f = space.synth(np.ones(P))
        assert lp_norm(space, f, 4) ** 4 == pytest.approx(Q, rel=1e-8)


class TestPlanarSections:
    def test_pole(self):
        assert planar_section_count(25, (0, 0, 1), 5) == 1

    def test_beyond_reach(self):
        assert planar_section_count(25, (1, 1, 0), 8) == 0

    @pytest.mark.parametrize("direction", [(0, 0, 1), (1, 1, 0), (1, 2, 3)])
    def test_partition(self, direction):
        d = np.asarray(direction)
        reach = math.isqrt(25 * int(d @ d)) + 1
        total = sum(planar_section_count(25, direction, c) for c in range(-reach, reach + 1))
        assert total == len(sphere_points(3, 25))

    def test_zero_direction(self):
        with pytest.raises(ValueError):
            planar_section_count(25, (0, 0, 0), 0)


class TestShells:
    def test_membership_exact(self):
        R, eps = 7.3, 0.4
        shell = lattice_shell(3, R, eps)
        lo, hi = shell_norm_range(R, eps)
        q = np.einsum("ij,ij->i", shell.points, shell.points)
        assert np.all((q >= lo) & (q <= hi))
        assert all(shell.contains(k) for k in shell.points)
        listed = {tuple(k) for k in shell.points}
        rng = np.random.default_rng(4)
        excluded = 0
        while excluded < 1000:
            k = rng.integers(-9, 10, size=3)
            if tuple(k) in listed:
                continue
            excluded += 1
            assert not lo <= int(k @ k) <= hi
            assert not shell.contains(k)

    def test_sorted(self):
        pts = lattice_shell(3, 5.0, 0.5).points
        assert [tuple(p) for p in pts] == sorted(tuple(p) for p in pts)

    def test_count_matches_representations(self):
        shell = lattice_shell(3, 10.0, 0.3)
        lo, hi = shell.norm_range
        assert len(shell) == int(representation_counts(3, hi)[lo:hi + 1].sum())


class TestHlawka:
    def test_range_guard(self):
        with pytest.raises(ValueError):
            hlawka_sum(100.0, 0.05, np.zeros(3))
        with pytest.raises(ValueError):
            hlawka_sum(100.0, 1.0, np.zeros(3))

    @given(st.tuples(*[st.floats(-0.5, 0.5)] * 3), st.floats(50, 400))
    def test_reflection_symmetry(self, x, R):
        # j -> -j maps |j + x| to |j - x|, so the sum is even in x
        x = np.array(x)
        eps = R ** -0.3
        assert hlawka_sum(R, eps, -x) == pytest.approx(hlawka_sum(R, eps, x), rel=1e-10, abs=1e-9)

    def test_not_conjugate_symmetric(self):
        v = hlawka_sum(50.0, 50 ** -0.3, np.zeros(3))
        assert abs(v.imag) > 1 and v != pytest.approx(v.conjugate())

    @given(st.tuples(*[st.floats(-0.5, 0.5)] * 3), st.floats(50, 400))
    def test_triangle_ceiling(self, x, R):
        eps = R ** -0.3
        assert abs(hlawka_sum(R, eps, x)) <= hlawka_abs_sum(R, eps, x) * (1 + 1e-12)

    def test_partial_sum_consistency(self):
        R, eps, x = 400.0, 0.4, np.array([0.1, -0.2, 0.3])
        J = math.ceil(1 / eps)
        coarse = hlawka_sum(R, eps, x) / (eps * R)
        fine = hlawka_sum(R, eps / 2, x, j_max=2 * J) / (eps / 2 * R)
        js = np.array([j for j in np.ndindex(4 * J + 1, 4 * J + 1, 4 * J + 1)]) - 2 * J
        q = np.einsum("ij,ij->i", js, js)
        new = js[(q > J * J) & (q <= 4 * J * J)]
        d = np.linalg.norm(new + x, axis=1)
        assert fine - coarse == pytest.approx(np.sum(np.exp(1j * R * d) / d), rel=1e-10)


class TestMollifiedGap:
    def test_dirac_gives_zero(self):
        assert mollified_gap_kernel_sup(20.0, 20 ** -0.3, eta_scale=0).sup == 0
        assert mollified_gap_kernel_sup(20.0, 0.8, rho=6.0, eta_scale=0).sup == 0

    def test_smooth_limit_small(self):
        # a wide band looks constant at unit scale, so mollification barely moves it
        wide = mollified_gap_kernel_sup(10.0, 8.0, eta_scale=0.05).sup
        narrow = mollified_gap_kernel_sup(10.0, 0.5, eta_scale=0.05).sup
        assert wide < narrow

    def test_midpoint_rule_against_finer_grid(self):
        coarse = mollified_gap_kernel_sup(12.0, 0.8, rho=4.0, nodes=21).sup
        fine = mollified_gap_kernel_sup(12.0, 0.8, rho=4.0, nodes=41).sup
        assert abs(coarse - fine) / fine < 0.05

    def test_cap_radius_guard(self):
        with pytest.raises(ValueError):
            mollified_gap_kernel_sup(25.0, 0.5, rho=4.0)


class TestBandKernel:
    def test_diagonal_is_coefficient_sum(self):
        out = band_kernel_sup(2 * math.pi * 6)
        assert out["sup"] < out["diagonal"]
        assert out["modes"] > 0

    def test_wide_window_tracks_band_count(self):
        ratios = []
        for R in (6, 9, 12):
            lam = 2 * math.pi * R
            ratios.append(band_kernel_sup(lam, time_scale_exponent=0.0)["diagonal"] / unit_band_count(lam))
        assert max(ratios) / min(ratios) < 3
