import csv
import math

import numpy as np
import pytest

from oracles import F_literal
from phasebit.errors import DimensionError
from phasebit.metrics import AnnulusParams, dist
from phasebit.sensing import corrupt, gaussian_ensemble, quantize
from phasebit.theory import (SeparationEstimate, adaptive_simpson, contraction_F_grid, contraction_profile,
                             double_separation_bound, hdm_oracle_2d, mc_double_separation, mc_separation,
                             mc_theta_well_separation, parallel_separation_exact, polar_grid,
                             random_annulus_pairs, separation_ratio_audit, sup_F_closed_form, sup_F_grid,
                             tessellation_audit_2d, write_separation_csv)

PARALLEL_2_1 = 0.29976456958906  # 2(Phi(1) - Phi(0.5)), mpmath
G_1_0 = 0.4839414490382867  # sqrt(2/pi) e^{-1/2}, mpmath
SUP_F = {(1.0, 2.0, math.sqrt(2.0)): 0.7155277699214136,
         (1.0, 1.5, math.sqrt(1.5)): 0.4307483973536849,
         (0.5, 1.0, 0.8): 0.8776310223061956}  # golden-section at 50 digits, mpmath


def test_separation_estimate_ci():
    e = SeparationEstimate.from_count(250, 1000)
    assert e.p_hat == 0.25
    assert e.half_width == pytest.approx(1.96 * math.sqrt(0.25 * 0.75 / 1000), rel=1e-15)
    assert SeparationEstimate.from_count(0, 10).half_width == 0.0


def test_mc_separation_trivial():
    u = np.array([0.7, -1.2, 0.4])
    assert mc_separation(u, u, 1.0, 10_000, 0).p_hat == 0.0
    assert mc_separation(u, -u, 1.0, 10_000, 0).p_hat == 0.0
    with pytest.raises(ValueError):
        mc_separation(u, u, 1.0, 0, 0)
    with pytest.raises(DimensionError):
        mc_separation(u, u[:2], 1.0, 10, 0)


def test_parallel_exact():
    assert parallel_separation_exact(2.0, 1.0, 1.0) == pytest.approx(PARALLEL_2_1, abs=1e-13)
    assert parallel_separation_exact(1.0, 2.0, 1.0) == parallel_separation_exact(2.0, 1.0, 1.0)
    assert parallel_separation_exact(1.3, 1.3, 0.7) == 0.0
    with pytest.raises(ValueError):
        parallel_separation_exact(0.0, 1.0, 1.0)


def test_parallel_monte_carlo():
    est = mc_separation([1.0, 0.0], [2.0, 0.0], 1.0, 1_000_000, 11)
    assert abs(est.p_hat - PARALLEL_2_1) <= est.half_width


def test_theta_well_separation():
    u, v = [1.0, 0.0], [1.1, 0.0]
    base = mc_separation(u, v, 1.0, 200_000, 5)
    assert mc_theta_well_separation(u, v, 1.0, 0.0, 200_000, 5).p_hat == base.p_hat
    rng = np.random.default_rng(0)
    for i in range(10):
        a, b = rng.standard_normal((2, 3))
        p = mc_separation(a, b, 0.8, 20_000, i).p_hat
        assert mc_theta_well_separation(a, b, 0.8, 0.1, 20_000, i).p_hat <= p
    well = mc_theta_well_separation(u, v, 1.0, 0.05, 1_000_000, 3)
    assert well.p_hat >= 0.5 * mc_separation(u, v, 1.0, 1_000_000, 3).p_hat
    with pytest.raises(ValueError):
        mc_theta_well_separation(u, v, 1.0, -0.1, 10, 0)


def test_double_separation():
    u = np.array([1.0, 0.5])
    assert mc_double_separation(u, u, 1.0, 10_000, 0).p_hat == 0.0
    assert double_separation_bound(u, u, 1.0) == 0.0
    v = u + np.array([0.06, 0.08])
    assert double_separation_bound(u, v, 1.0) == pytest.approx(4 * math.exp(-50), rel=1e-12)
    assert mc_double_separation(u, v, 1.0, 1_000_000, 1).p_hat == 0.0


def test_double_separation_bound_holds():
    rng = np.random.default_rng(2)
    for i in range(10):
        u = rng.standard_normal(3)
        v = u + rng.uniform(0.2, 0.8) * rng.standard_normal(3)
        est = mc_double_separation(u, v, 1.0, 100_000, i)
        assert est.p_hat <= double_separation_bound(u, v, 1.0) + est.half_width


def test_random_annulus_pairs_inside():
    ann = AnnulusParams(1.0, 2.0)
    for u, v in random_annulus_pairs(ann, 4, 100, 3):
        assert ann.alpha - 1e-12 <= np.linalg.norm(u) <= ann.beta + 1e-12
        assert ann.alpha - 1e-12 <= np.linalg.norm(v) <= ann.beta + 1e-12
        assert 0 < dist(u, v) <= 0.5 + 1e-12


def test_separation_ratio_stable():
    audit = separation_ratio_audit(AnnulusParams(1.0, 2.0), math.sqrt(2.0), pairs=200, samples=20_000, seed=1)
    assert audit.ratios.shape == (200,)
    assert audit.spread <= 25


def test_separation_csv(tmp_path):
    path = tmp_path / "sep.csv"
    write_separation_csv(path, [(0, 0.5, SeparationEstimate.from_count(1, 4))])
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["pair_id", "dist", "p_hat", "half_width"]
    assert rows[1][:3] == ["0", "0.5", "0.25"]


def test_contraction_profile_examples():
    p = contraction_profile(1.0, 1.0, 0.0, 1.0)
    assert p.h == 0.0
    assert p.g == pytest.approx(G_1_0, abs=1e-15)
    q = contraction_profile(math.sqrt(math.pi * math.e / 2), 0.0, 1.0, 1.0)
    assert q.h == 0.0 and q.F == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        contraction_profile(1.0, 0.0, 0.0, 1.0)


def test_contraction_matches_literal_and_vectorized():
    rng = np.random.default_rng(4)
    for _ in range(200):
        eta, a, b, tau = rng.uniform(0.1, 3), *rng.uniform(-2, 2, 2), rng.uniform(0.3, 2)
        p = contraction_profile(eta, a, b, tau)
        assert p.F == pytest.approx(math.hypot(1 - eta * p.g, eta * p.h), abs=1e-12)
        assert p.F == pytest.approx(F_literal(eta, a, b, tau), abs=1e-12)
        assert contraction_F_grid(eta, a, b, tau) == pytest.approx(p.F, abs=1e-12)


def test_sup_F_frozen_and_grid():
    assert sup_F_closed_form(AnnulusParams(1.3, 1.3), 1.3) == pytest.approx(0.0, abs=1e-15)
    for (al, be, tau), want in SUP_F.items():
        ann = AnnulusParams(al, be)
        assert sup_F_closed_form(ann, tau) == pytest.approx(want, abs=1e-10)
        assert abs(sup_F_grid(ann, tau) - want) <= 1e-4
    assert sup_F_closed_form(AnnulusParams(1.0, 1.5), math.sqrt(1.5)) < 1


def test_sup_F_monotone_in_width():
    tau = 1.2
    vals = [sup_F_closed_form(AnnulusParams(1.2 - w, 1.2 + w), tau) for w in np.linspace(0, 0.8, 9)]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_adaptive_simpson():
    assert adaptive_simpson(lambda t: t**3, 0.0, 2.0) == pytest.approx(4.0, abs=1e-12)
    assert adaptive_simpson(math.sin, 0.0, math.pi) == pytest.approx(2.0, abs=1e-10)
    assert adaptive_simpson(lambda t: math.exp(-t * t / 2), -10, 10) == pytest.approx(math.sqrt(2 * math.pi),
                                                                                      abs=1e-10)


def test_polar_grid_layout():
    pts = polar_grid(AnnulusParams(1.0, 2.0), 3, 4)
    assert pts.shape == (12, 2)
    np.testing.assert_allclose(pts[4 * 2 + 1], [0.0, 2.0], atol=1e-15)
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), np.repeat([1.0, 1.5, 2.0], 4))


def test_hdm_exact_on_grid_point():
    ann = AnnulusParams(1.0, math.sqrt(2.0))
    pts = polar_grid(ann, 50, 200)
    A = gaussian_ensemble(300, 2, 7).rows
    for idx in (0, 777, 5321, 9999):
        x = pts[idx]
        y = quantize(A, x, math.sqrt(2.0))
        xh = hdm_oracle_2d(A, y, math.sqrt(2.0), ann, 50, 200)
        assert np.array_equal(quantize(A, xh, math.sqrt(2.0)), y)


def test_hdm_single_point_and_errors():
    ann = AnnulusParams(1.0, 2.0)
    A = gaussian_ensemble(20, 2, 0).rows
    np.testing.assert_array_equal(hdm_oracle_2d(A, np.ones(20), 1.0, ann, 1, 1), [1.0, 0.0])
    with pytest.raises(DimensionError):
        hdm_oracle_2d(gaussian_ensemble(5, 3, 0).rows, np.ones(5), 1.0, ann)


def test_hdm_robust_to_corruption():
    ann, tau = AnnulusParams(1.0, math.sqrt(2.0)), math.sqrt(2.0)
    zeta = 0.05
    for t in range(20):
        rng = np.random.default_rng(t)
        th, r = rng.uniform(0, 2 * np.pi), rng.uniform(1, math.sqrt(2))
        x = r * np.array([math.cos(th), math.sin(th)])
        A = gaussian_ensemble(500, 2, t).rows
        y = quantize(A, x, tau)
        clean = dist(hdm_oracle_2d(A, y, tau, ann, 100, 400), x)
        noisy = dist(hdm_oracle_2d(A, corrupt(y, zeta, t), tau, ann, 100, 400), x)
        # constant 2 is about 5x the largest pilot excess
        assert noisy <= clean + 2 * zeta


def test_hdm_error_within_cell_geometry():
    ann, tau = AnnulusParams(1.0, math.sqrt(2.0)), math.sqrt(2.0)
    radial, angular = 100, 400
    res = max((math.sqrt(2) - 1) / (radial - 1), math.sqrt(2) * 2 * math.pi / angular)
    pts = polar_grid(ann, radial, angular)
    for t in range(5):
        rng = np.random.default_rng(100 + t)
        th, r = rng.uniform(0, 2 * np.pi), rng.uniform(1, math.sqrt(2))
        x = r * np.array([math.cos(th), math.sin(th)])
        M = gaussian_ensemble(500, 2, 100 + t).rows
        y = quantize(M, x, tau)
        xh = hdm_oracle_2d(M, y, tau, ann, radial, angular)
        assert np.array_equal(quantize(M, xh, tau), y)
        cell = pts[np.all(np.where(np.abs(pts @ M.T) >= tau, 1, -1) == y, axis=1)]
        diam = max(dist(p, q) for p in cell for q in cell)
        assert dist(xh, x) <= 2 * res + diam


def test_tessellation_empty():
    diam, cells = tessellation_audit_2d(0, math.sqrt(2), AnnulusParams(1.0, math.sqrt(2)), (50, 200))
    assert cells == 1
    assert diam == pytest.approx(2.0, abs=1e-12)


def test_tessellation_cell_floor():
    ann, tau = AnnulusParams(1.0, 2.0), 0.5
    for m, seed in ((4, 0), (8, 1), (20, 2), (100, 3)):
        _, cells = tessellation_audit_2d(m, tau, ann, (200, 800), seed=seed)
        assert cells >= m / 2


def test_tessellation_refines_with_m():
    ann, tau = AnnulusParams(1.0, math.sqrt(2)), math.sqrt(2)
    d = [tessellation_audit_2d(m, tau, ann, (100, 400), seed=5)[0] for m in (50, 200, 800)]
    assert d[0] > d[1] > d[2]
