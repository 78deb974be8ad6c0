"""Acceptance suite: end-to-end quality, consistency, and interface checks.

These tests pin the released behavior of the package at realistic problem
sizes.  Where a tolerance is not an exact mathematical identity it was
frozen from measured reference runs of this code base (noted inline), so
regressions show up as hard failures rather than silent drift.
"""

import time

import numpy as np
import pytest

from ffl3d import (
    ReconConfig,
    ScanGeometry,
    add_noise,
    ball_phantom,
    default_angles,
    kernel_jacobian,
    kernel_kappa,
    make_grid,
    maxwell_validate,
    reconstruct,
    simulate_fast,
    simulate_oracle,
    stage1_bin,
    stage1_solve,
    stage2_deconvolve,
    stage3_fbp,
    volume_metrics,
)
from ffl3d.cli import cli_main
from ffl3d.fields import sample_static_field
from ffl3d.grids import Grid2D, Image2D
from ffl3d.recon import ProjectionStack
from ffl3d.solvers import Convolution2D, sample_kappa_kernel


# ------------------------------------------------- 1. fast path vs oracle


def test_fast_simulator_matches_direct_integral_oracle():
    t0 = time.time()
    grid = make_grid(((-1, 1), (-1, 1), (-1, 1)), (16, 16, 16))
    vol = ball_phantom(grid, (0.0, 0.0, 0.0), 0.5)
    geom = ScanGeometry(angles=(0.0, np.pi / 4, np.pi / 2), samples_per_angle=500, h=0.15)
    for theta in geom.angles:
        fast = simulate_fast(vol, theta, geom)
        oracle = simulate_oracle(vol, theta, geom)
        err = np.linalg.norm(fast.values - oracle.values) / np.linalg.norm(oracle.values)
        # measured: 5.9e-4 (theta=0), 2.4e-3 (pi/4), 5.9e-4 (pi/2)
        assert err < 1e-2, f"theta={theta}: rel L2 {err:.2e}"
    assert time.time() - t0 < 120.0


# ------------------------------------------------- 2. kernel trace identity


def test_jacobian_trace_equals_scalar_kernel():
    rng = np.random.default_rng(2024)
    d = rng.uniform(-2.0, 2.0, size=(10_000, 2))
    h = rng.uniform(1e-3, 1.0, size=10_000)
    for i in range(10_000):
        tr = np.trace(kernel_jacobian(d[i], h[i]))
        kk = kernel_kappa(np.linalg.norm(d[i]), h[i])
        assert abs(tr - kk) <= 1e-12 * max(1.0, abs(kk))


# ------------------------------------------------- 3. field consistency


def test_static_field_is_divergence_and_curl_free():
    rng = np.random.default_rng(7)
    for theta in rng.uniform(0.0, np.pi, size=10):
        field, spacing = sample_static_field(theta, gradient=1.0, n=9)
        norms = maxwell_validate(field, spacing)
        assert norms["div_norm"] < 1e-10
        assert norms["curl_norm"] < 1e-10
        assert norms["jac_asym_norm"] < 1e-10


def test_maxwell_validator_detects_counterexamples():
    xs = np.linspace(-1.0, 1.0, 9)
    X, Y, Z = np.meshgrid(xs, xs, xs, indexing="ij")
    d = xs[1] - xs[0]
    # H = (x, 0, 0): divergence exactly 1, curl-free
    div_field = np.stack([X, np.zeros_like(X), np.zeros_like(X)], axis=-1)
    norms = maxwell_validate(div_field, (d, d, d))
    assert norms["div_norm"] == pytest.approx(1.0, abs=1e-12)
    assert norms["curl_norm"] < 1e-12
    # H = (-y, x, 0): curl (0, 0, 2), divergence-free
    curl_field = np.stack([-Y, X, np.zeros_like(X)], axis=-1)
    norms = maxwell_validate(curl_field, (d, d, d))
    assert norms["curl_norm"] == pytest.approx(2.0, abs=1e-12)
    assert norms["div_norm"] < 1e-12


# ------------------------------------------------- 4. stage-wise guarantees


def test_stagewise_guarantees():
    t0 = time.time()

    # (a) the per-cell least squares recovers a planted constant matrix
    g = Grid2D(((-1, 1), (-1, 1)), (6, 6))
    rng = np.random.default_rng(1)
    A_true = np.array([[0.8, -0.3], [-0.3, 1.1]])
    r, v = [], []
    for cu in g.centers(0):
        for cv in g.centers(1):
            v.append(rng.normal(size=(10, 2)))
            r.append(np.tile([cu, cv], (10, 1)) + rng.uniform(-0.05, 0.05, (10, 2)))
    r, v = np.concatenate(r), np.concatenate(v)
    cf = stage1_solve(stage1_bin(r, v, v @ A_true.T, g))
    assert np.all(cf.rank_ok)
    assert np.max(np.abs(cf.A - A_true)) < 1e-8

    # (b) the deconvolution inverts its own forward operator on smooth data
    g = Grid2D(((-1, 1), (-1, 1)), (48, 48))
    h = 0.05
    U, V = np.meshgrid(g.centers(0), g.centers(1), indexing="ij")
    x = np.exp(-((U / 0.4) ** 2 + (V / 0.3) ** 2))
    K = Convolution2D(sample_kappa_kernel(g, h), g.dims)
    chi, res = stage2_deconvolve(Image2D(g, K.apply(x)), h, lam=1e-8)
    assert res.converged
    assert np.linalg.norm(chi.values - x) / np.linalg.norm(x) < 1e-2

    # (c) filtered back projection recovers a disk from its analytic sinogram
    n = 128
    g = Grid2D(((-1, 1), (-1, 1)), (n, n))
    angles = default_angles(180)
    xi = g.centers(0)
    chord = 2.0 * np.sqrt(np.maximum(0.25 - xi**2, 0.0))
    img = np.repeat(chord[:, None], n, axis=1)
    stack = ProjectionStack(list(angles), [Image2D(g, img.copy()) for _ in angles])
    vol = stage3_fbp(stack)
    X, Y = np.meshgrid(vol.grid.centers(0), vol.grid.centers(1), indexing="ij")
    interior = np.hypot(X, Y) < 0.4
    mid = vol.values[:, :, n // 2]
    err = np.linalg.norm(mid[interior] - 1.0) / np.sqrt(interior.sum())
    assert err < 0.05

    assert time.time() - t0 < 300.0


# ------------------------------------------------- 5/6. end-to-end at scale


@pytest.fixture(scope="module")
def desk_scan():
    grid = make_grid(((-1, 1), (-1, 1), (-1, 1)), (64, 64, 64))
    vol = ball_phantom(grid, (0.0, 0.0, 0.0), 0.5)
    geom = ScanGeometry(angles=default_angles(40), samples_per_angle=40000, h=1e-2)
    t0 = time.time()
    signals = [simulate_fast(vol, theta, geom) for theta in geom.angles]
    return grid, vol, geom, signals, time.time() - t0


@pytest.fixture(scope="module")
def desk_clean(desk_scan):
    grid, vol, geom, signals, _ = desk_scan
    t0 = time.time()
    rec = reconstruct(signals, geom, grid, ReconConfig(lam=1e-5))
    return rec, time.time() - t0


def test_end_to_end_clean(desk_scan, desk_clean):
    grid, vol, geom, signals, sim_t = desk_scan
    rec, rec_t = desk_clean
    m = volume_metrics(rec, vol, threshold_frac=0.05)
    # reference run: rel_l2 = 0.246, dice = 0.863
    assert m["rel_l2"] < 0.25, f"rel L2 {m['rel_l2']:.3f}"
    assert m["dice"] > 0.85, f"Dice@5% {m['dice']:.3f}"
    assert sim_t + rec_t < 1800.0


def test_end_to_end_noisy(desk_scan):
    grid, vol, geom, signals, _ = desk_scan
    noisy = [add_noise(r, 0.1, seed=42) for r in signals]
    rec = reconstruct(noisy, geom, grid, ReconConfig(lam=1e-3, cutoff=0.15))
    m = volume_metrics(rec, vol, threshold_frac=0.05)
    # Frozen from reference runs at 10% noise: the (lam, cutoff) scan peaks
    # at dice = 0.679 / rel = 0.366 for this configuration (lam = 1e-3,
    # cutoff = 0.15); nearby seeds land within ~0.02 of that.  40 angles at
    # this grid resolution do not average the broadband post-least-squares
    # noise any further.
    assert m["dice"] > 0.62, f"Dice@5% {m['dice']:.3f}"
    assert m["rel_l2"] < 0.40, f"rel L2 {m['rel_l2']:.3f}"


def test_pipeline_deterministic(desk_scan, desk_clean):
    grid, vol, geom, signals, _ = desk_scan
    rec, _ = desk_clean
    # same inputs, fresh run: byte-identical signals and volumes
    again = simulate_fast(vol, geom.angles[3], geom)
    assert np.array_equal(again.values, signals[3].values)
    rec2 = reconstruct(signals, geom, grid, ReconConfig(lam=1e-5))
    assert np.array_equal(rec.values, rec2.values)
    noisy_a = [add_noise(r, 0.1, seed=5) for r in signals[:2]]
    noisy_b = [add_noise(r, 0.1, seed=5) for r in signals[:2]]
    for a, b in zip(noisy_a, noisy_b):
        assert np.array_equal(a.values, b.values)


# ------------------------------------------------- 7. default-constant echo


def test_cli_echoes_reference_defaults(capsys):
    assert cli_main(["config", "--paper-defaults"]) == 0
    out = capsys.readouterr().out
    assert "mu0 = 1.25663706212e-06" in out
    assert "cg_tol = 1e-10" in out
    assert "cg_max_iter = 1000" in out
    assert "n_angles = 200" in out
    assert "period = 1.0" in out
    assert "grid_dims = 200,200,200" in out
    assert "samples_per_angle = 400000" in out
    assert "h = 0.01" in out
