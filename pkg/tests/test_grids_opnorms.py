import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from resolventlab.expsums import quadruple_count, sphere_points
from resolventlab.grids import SphereSpace, TorusSpace, lp_norm
from resolventlab.multipliers import ComplexShift
from resolventlab.opnorms import (AscentConfig, OperatorSpec, apply_operator, ascend_l2_to_lp, cap_window_norm,
                                  kernel_sup_norm, lp_grid_norm, make_space, necsuff_compare,
                                  resolvent_norm_lower_bound, scaling_fit, window_keys, window_norm_lower_bound,
                                  window_operator, zoll_blowup_lower_bound)
from resolventlab.special import harmonic_dimension, sphere_volume
from resolventlab.spectra import ModelManifold, shell_count, torus_spectrum, zoll_spectrum

TWO_PI = 2 * math.pi
T2 = ModelManifold("torus", 2)
T3 = ModelManifold("torus", 3)
S2 = ModelManifold("sphere", 2)
S3 = ModelManifold("sphere", 3)


class TestGrids:
    def test_torus_quadrature_exact(self):
        modes = sphere_points(3, 9)
        space = TorusSpace(modes, p=4)
        x = np.stack(np.meshgrid(*[np.arange(space.N) / space.N] * 3, indexing="ij"), axis=-1)
        for k in ([0, 0, 0], [3, 0, 0], [12, -5, 7]):
            g = np.exp(2j * math.pi * x @ np.array(k))
            assert abs(np.sum(g) * space.weights() - (1.0 if not any(k) else 0.0)) < 1e-10

    @pytest.mark.parametrize("n,degrees", [(2, [0, 1, 2, 5]), (3, [0, 1, 3, 6])])
    def test_sphere_basis_orthonormal(self, n, degrees):
        space = SphereSpace(n, degrees, p=2)
        assert len(space) == sum(harmonic_dimension(n, k) for k in degrees)
        gram = np.array([space.analyze(space.synth(e)) for e in np.eye(len(space))])
        assert np.allclose(gram, np.eye(len(space)), atol=1e-10)

    def test_sphere_constant_integrates_to_volume(self):
        for n in (2, 3):
            space = SphereSpace(n, [3])
            assert space.integrate(np.ones(space.grid.shape)) == pytest.approx(sphere_volume(n), rel=1e-12)

    def test_grid_guard(self):
        with pytest.raises(ValueError):
            TorusSpace(np.array([[5, 0]]), grid_size=6)
        with pytest.raises(NotImplementedError):
            SphereSpace(4, [1])


class TestApplyAndNorms:
    def test_identity_reproduces(self):
        op = window_operator(T3, TWO_PI * 5, 0.5)
        space = op.space()
        u = np.random.default_rng(0).normal(size=len(space)) + 0j
        assert np.max(np.abs(apply_operator(op, u, space=space) - space.synth(u))) < 1e-9
        # grid samples in, grid samples out
        assert np.max(np.abs(apply_operator(op, space.synth(u), space=space) - space.synth(u))) < 1e-9

    def test_zero_multiplier(self):
        op = window_operator(T3, TWO_PI * 2, 0.1)
        op = OperatorSpec(op.manifold, op.keys, np.zeros(len(op.keys)))
        assert np.all(apply_operator(op, np.ones(len(op.keys))) == 0)

    def test_single_mode_sup(self):
        op = OperatorSpec(T2, np.array([[3, -1]]), np.ones(1))
        out = apply_operator(op, np.array([0.7 - 0.2j]))
        assert lp_grid_norm(op.space(), out, math.inf) == pytest.approx(abs(0.7 - 0.2j), rel=1e-12)

    def test_mismatched_vector(self):
        op = window_operator(T3, TWO_PI, 0.1)
        with pytest.raises(ValueError):
            apply_operator(op, np.ones(3))

    @pytest.mark.parametrize("p", [1, 2, 3.5, 4, 6, math.inf])
    def test_constant_and_unimodular(self, p):
        space = TorusSpace(np.array([[0, 0], [2, 1]]), p=6)
        assert lp_grid_norm(space, space.synth(np.array([1, 0])), p) == pytest.approx(1.0, rel=1e-12)
        assert lp_grid_norm(space, space.synth(np.array([0, 1])), p) == pytest.approx(1.0, rel=1e-12)

    def test_sine_fourth_power(self):
        # integral of sin^4(2 pi x) over [0, 1] is 3/8
        space = TorusSpace(np.array([[1], [-1]]), p=4)
        f = space.synth(np.array([1 / 2j, -1 / 2j]))
        assert lp_grid_norm(space, f, 4) == pytest.approx((3 / 8) ** 0.25, rel=1e-12)

    def test_p_below_one(self):
        space = TorusSpace(np.array([[0]]))
        with pytest.raises(ValueError):
            lp_norm(space, np.ones(space.grid.shape), 0.5)


class TestWindowNorm:
    def test_single_torus_mode(self):
        est = window_norm_lower_bound(T2, 0.0, 0.5, 4)
        assert est.meta["dimension"] == 1
        assert est.value == pytest.approx(1.0, rel=1e-12)

    def test_p2_projection(self):
        est = window_norm_lower_bound(T3, TWO_PI * 5, 1e-3, 2)
        assert est.value == 1.0 and est.p_in == 2 and est.p_out == 2

    def test_empty_window(self):
        mid = 0.5 * (math.sqrt(48) + math.sqrt(63))
        est = window_norm_lower_bound(S3, mid, 0.2, 4)
        assert est.value == 0 and est.meta["empty"]

    def test_p_guard(self):
        with pytest.raises(ValueError):
            window_norm_lower_bound(T3, TWO_PI, 0.1, 1.5)

    def test_sphere_growth(self):
        vals = [window_norm_lower_bound(S3, math.sqrt(k * (k + 2)), 0.05, 6).value for k in (2, 4, 8)]
        assert vals[0] < vals[1] < vals[2]

    def test_tt_star_consistency_and_witness(self):
        est = window_norm_lower_bound(S2, math.sqrt(30), 0.1, 6)
        assert est.value == pytest.approx(est.meta["l2_to_lp"] ** 2, rel=1e-14)
        space = SphereSpace(2, est.meta["levels"], p=6)
        again = lp_norm(space, space.synth(est.witness), 6)
        assert abs(again - est.meta["l2_to_lp"]) < 1e-8
        assert np.linalg.norm(est.witness) == pytest.approx(1.0, rel=1e-12)

    @pytest.mark.parametrize("manifold,lam,small,large", [
        (T3, TWO_PI * 5, 1e-3, 1.5),
        (S3, math.sqrt(35), 0.05, 2.0),
    ])
    def test_monotone_in_eps(self, manifold, lam, small, large):
        a = window_norm_lower_bound(manifold, lam, small, 4)
        b = window_norm_lower_bound(manifold, lam, large, 4)
        assert len(b.meta["levels"]) > len(a.meta["levels"])
        assert a.value <= b.value * (1 + 1e-9)

    def test_record_shape(self):
        rec = window_norm_lower_bound(T3, TWO_PI * 2, 0.1, 4).record()
        assert set(rec) == {"inputs", "estimate", "kind", "witness_hash", "grid", "iterations"}
        assert rec["kind"] == "tt_star_squared" and rec["inputs"]["p_out"] == 4


class TestAscent:
    def test_monotone_history(self):
        space = make_space(S3, [6], 6)
        c0 = np.random.default_rng(2).normal(size=len(space)) + 0j
        _, val, _, hist = ascend_l2_to_lp(space, 6, c0)
        assert np.all(np.diff(hist) >= 0) and hist[-1] == val

    @given(st.integers(0, 2 ** 32 - 1))
    def test_never_below_start(self, seed):
        space = make_space(T3, [9, 10], 4)
        c0 = np.random.default_rng(seed).normal(size=len(space)) + 0j
        start = lp_norm(space, space.synth(c0 / np.linalg.norm(c0)), 4)
        assert ascend_l2_to_lp(space, 4, c0, iterations=20)[1] >= start * (1 - 1e-12)

    def test_grid_refinement(self):
        modes = make_space(T3, [25], 4).modes
        coarse = TorusSpace(modes, p=4)
        fine = TorusSpace(modes, grid_size=2 * coarse.N)
        c0 = np.random.default_rng(1).normal(size=len(modes)) + 0j
        a = ascend_l2_to_lp(coarse, 4, c0)[1]
        b = ascend_l2_to_lp(fine, 4, c0)[1]
        assert abs(a - b) / a < 0.01

    @pytest.mark.parametrize("n,m", [(2, 25), (3, 14), (3, 41)])
    def test_unimodular_l4_is_quadruple_ratio(self, n, m):
        P, Q = quadruple_count(n, m)
        space = TorusSpace(sphere_points(n, m), p=4)
        val = lp_norm(space, space.synth(np.ones(P) / math.sqrt(P)), 4)
        assert val ** 4 == pytest.approx(Q / P ** 2, rel=1e-10)


class TestKernelSup:
    @pytest.mark.parametrize("R2,eps", [(25, 1e-6), (50, 0.2), (14, 0.5)])
    def test_torus_diagonal_is_shell_count(self, R2, eps):
        lam = TWO_PI * math.sqrt(R2)
        est = kernel_sup_norm(window_operator(T3, lam, eps))
        table = torus_spectrum(3, lam + eps + 1)
        assert est.value == pytest.approx(shell_count(table, lam, eps).count, rel=1e-12)
        assert round(est.value) == shell_count(table, lam, eps).count

    def test_sphere_zonal_sum(self):
        lam = math.sqrt(4 * 6)
        op = window_operator(S3, lam, 3.0)
        est = kernel_sup_norm(op)
        expected = sum(harmonic_dimension(3, int(k)) for k in op.keys) / sphere_volume(3)
        assert est.value == pytest.approx(expected, rel=1e-10)
        assert est.meta["diagonal"] == pytest.approx(est.value)

    def test_zero(self):
        op = window_operator(T3, TWO_PI * 3, 0.1)
        assert kernel_sup_norm(OperatorSpec(T3, op.keys, np.zeros(len(op.keys)))).value == 0


class TestResolvent:
    def test_midway_bounded_and_on_level_large(self):
        mid = 0.5 * (math.sqrt(48) + math.sqrt(63))
        far = resolvent_norm_lower_bound(S3, ComplexShift(mid, 0.0), 4)
        near = resolvent_norm_lower_bound(S3, ComplexShift(math.sqrt(48), 2 ** -5), 4)
        assert math.isfinite(far.value) and far.meta["dist_to_spectrum"] > 0.4
        assert near.value > 10 * far.value

    def test_torus_negative_axis_below_multiplier_sum(self):
        for mu in (1.0, 3.0):
            est = resolvent_norm_lower_bound(T3, ComplexShift(0.0, mu), 4)
            assert 0 < est.value <= est.meta["multiplier_abs_sum"]

    def test_truncation_report(self):
        est = resolvent_norm_lower_bound(S3, ComplexShift(math.sqrt(24), 0.1), 4)
        tr = est.meta["truncation"]
        assert tr["tail_multiplier_sup"] > 0 and tr["k_cutoff"] == max(est.meta["witness_levels"])

    def test_companion(self):
        est = resolvent_norm_lower_bound(S3, ComplexShift(math.sqrt(24), 0.25), 4, companion=True)
        assert est.meta["single_cluster_bound"] > 0


class TestZollAndCaps:
    def test_zoll_empty_window(self):
        z = zoll_spectrum(3, 0.0, 1.0, 20, seed=0)
        assert zoll_blowup_lower_bound(z, 10.5, 0.1) == 0.0

    def test_zoll_counts_cluster(self):
        z = zoll_spectrum(3, 0.0, 1.0, 20, seed=0)
        val = zoll_blowup_lower_bound(z, 10.0, 0.2)
        assert val == pytest.approx(121 / (10 * 2 * math.pi ** 2 * 100 * 0.2))

    def test_cap_p2(self):
        est = cap_window_norm(20.0, 20 ** -0.25, cap_center=(0, 0, 1), rho=8.0, p=2)
        assert 0 < est.value <= 1

    def test_full_sphere_matches_window(self):
        cap = cap_window_norm(5.0, 0.01, p=4)
        win = window_norm_lower_bound(T3, TWO_PI * 5, 1e-6, 4)
        assert cap.value == pytest.approx(win.meta["l2_to_lp"], rel=1e-6)

    def test_empty_cap(self):
        with pytest.raises(ValueError):
            cap_window_norm(math.sqrt(7), 0.01, p=4)


class TestScalingFit:
    def test_square(self):
        fit = scaling_fit([(x, x * x) for x in (1, 2, 3, 5, 8)], 2.0)
        assert abs(fit.slope - 2) < 1e-10 and fit.verdict == "pass"

    def test_constant(self):
        assert abs(scaling_fit([(x, 3.0) for x in (1, 2, 4, 8)], 0).slope) < 1e-12

    def test_noisy(self):
        rng = np.random.default_rng(0)
        x = np.geomspace(1, 1000, 40)
        y = x ** 1.5 * (1 + 0.05 * rng.standard_normal(len(x)))
        assert abs(scaling_fit(list(zip(x, y)), 1.5).slope - 1.5) < 0.05

    def test_errors(self):
        with pytest.raises(ValueError):
            scaling_fit([(1, 1), (2, 2), (3, 3)], 1)
        with pytest.raises(ValueError):
            scaling_fit([(2, 1), (2, 2), (2, 3), (2, 4)], 1)


@pytest.mark.slow
def test_necsuff_ratio_band():
    cfg = AscentConfig(restarts=1, iterations=60)
    ratios = [necsuff_compare(S3, math.sqrt(k * (k + 2)), 1.0, 4, cfg)["ratio"] for k in (8, 12, 16)]
    assert max(ratios) / min(ratios) < 20


def test_window_keys_are_levels():
    assert list(window_keys(T3, TWO_PI * 5, 1e-3)) == [25]
    assert list(window_keys(S3, math.sqrt(8), 0.1)) == [2]
