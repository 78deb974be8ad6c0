"""Three-stage reconstruction: local least squares, Tikhonov deconvolution,
slice-wise filtered back projection."""

from dataclasses import dataclass, field
import numpy as np

from .fields import transform_signal, ffl_trajectory
from .grids import Grid2D, Grid3D, Image2D, Volume3D
from .solvers import Convolution2D, cg_solve, laplacian_apply, lstsq_qr, sample_kappa_kernel


class ReconError(RuntimeError):
    """A reconstruction stage failed; the message names stage and angle."""


@dataclass
class Stage1Bins:
    """Trajectory samples grouped by the grid cell containing r_m."""

    grid: Grid2D
    velocities: np.ndarray  # (M, 2), grid-sorted
    signals: np.ndarray  # (M, 2), grid-sorted, (xi, z) components
    starts: np.ndarray  # (N1*N2 + 1,) slice offsets into the sorted arrays
    dropped: int
    offsets: np.ndarray = None  # (N1, N2, 2) mean of r - cell_center
    moments: np.ndarray = None  # (N1, N2, 3) mean of (d0^2, d0*d1, d1^2)


@dataclass
class CoreField:
    """Discretized MPI core operator: one 2x2 matrix per grid cell."""

    grid: Grid2D
    A: np.ndarray  # (N1, N2, 2, 2)
    count: np.ndarray  # (N1, N2)
    rank_ok: np.ndarray  # (N1, N2) bool; False where the cell solve is unusable
    offsets: np.ndarray = None  # per-cell mean sample displacement, from the bins
    moments: np.ndarray = None  # per-cell second displacement moments


@dataclass
class ProjectionStack:
    """Reconstructed X-ray projections, one image per angle, shared grid."""

    angles: tuple
    images: list

    def __post_init__(self):
        if len(self.angles) != len(self.images):
            raise ValueError("one image per angle required")
        grids = {im.grid for im in self.images}
        if len(grids) > 1:
            raise ValueError("all projection images must share one grid")


@dataclass
class ReconConfig:
    """Tuning knobs of the three-stage algorithm."""

    lam: float = 5e-4
    lam_per_angle: tuple = None  # overrides lam when given
    cg_tol: float = 1e-10
    cg_max_iter: int = 1000
    window: str = "rect"
    cutoff: float = 0.5
    threshold: float = 0.05
    inpaint: bool = False
    recenter: bool = True
    truncation_radius: float = None

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        if not 0 < self.cutoff <= 0.5:
            raise ValueError("cutoff must be in (0, 0.5]")
        if not 0 <= self.threshold < 1:
            raise ValueError("threshold must be in [0, 1)")

    def lam_for(self, index):
        if self.lam_per_angle is not None:
            return float(self.lam_per_angle[index])
        return float(self.lam)


def stage1_bin(r, v, s, grid):
    """Group (velocity, signal) pairs by the half-open cell containing r.

    ``r``, ``v``, ``s`` are (L, 2); samples falling outside the grid are
    dropped and counted.
    """
    r = np.asarray(r, dtype=float)
    v = np.asarray(v, dtype=float)
    s = np.asarray(s, dtype=float)
    (u1, _), (v1_, _) = grid.extents
    du, dv = grid.spacing
    n1, n2 = grid.dims
    iu = np.floor((r[:, 0] - u1) / du).astype(np.int64)
    iv = np.floor((r[:, 1] - v1_) / dv).astype(np.int64)
    ok = (iu >= 0) & (iu < n1) & (iv >= 0) & (iv < n2)
    flat = iu[ok] * n2 + iv[ok]
    order = np.argsort(flat, kind="stable")
    counts = np.bincount(flat, minlength=n1 * n2)
    starts = np.concatenate([[0], np.cumsum(counts)])

    # per-cell displacement statistics of the samples about the cell center,
    # used by the stage-1 recentering correction
    d0 = r[ok, 0] - (u1 + (iu[ok] + 0.5) * du)
    d1 = r[ok, 1] - (v1_ + (iv[ok] + 0.5) * dv)
    safe = np.maximum(counts, 1)
    offsets = np.stack(
        [
            np.bincount(flat, weights=d0, minlength=n1 * n2) / safe,
            np.bincount(flat, weights=d1, minlength=n1 * n2) / safe,
        ],
        axis=-1,
    ).reshape(n1, n2, 2)
    moments = np.stack(
        [
            np.bincount(flat, weights=d0 * d0, minlength=n1 * n2) / safe,
            np.bincount(flat, weights=d0 * d1, minlength=n1 * n2) / safe,
            np.bincount(flat, weights=d1 * d1, minlength=n1 * n2) / safe,
        ],
        axis=-1,
    ).reshape(n1, n2, 3)
    return Stage1Bins(
        grid=grid,
        velocities=v[ok][order],
        signals=s[ok][order],
        starts=starts,
        dropped=int(np.count_nonzero(~ok)),
        offsets=offsets,
        moments=moments,
    )


def stage1_solve(bins):
    """Per-cell least-squares recovery of the 2x2 core-operator matrices.

    Cells with fewer than 2 samples or a rank-deficient velocity matrix
    are zeroed and flagged.
    """
    n1, n2 = bins.grid.dims
    A = np.zeros((n1, n2, 2, 2))
    count = np.diff(bins.starts).reshape(n1, n2)
    rank_ok = np.zeros((n1, n2), dtype=bool)
    starts = bins.starts
    for j in range(n1):
        for k in range(n2):
            lo, hi = starts[j * n2 + k], starts[j * n2 + k + 1]
            if hi - lo < 2:
                continue
            V = bins.velocities[lo:hi].T
            S = bins.signals[lo:hi].T
            a, ok = lstsq_qr(V, S)
            if ok:
                A[j, k] = a
                rank_ok[j, k] = True
    return CoreField(
        grid=bins.grid,
        A=A,
        count=count,
        rank_ok=rank_ok,
        offsets=bins.offsets,
        moments=bins.moments,
    )


def stage1_trace(cf, inpaint=False, recenter=True):
    """Trace field u = A11 + A22; flagged cells are zero or inpainted.

    With ``inpaint`` a flagged cell takes the average trace of its
    unflagged 4-neighbors (single pass; isolated holes stay zero).

    With ``recenter`` the per-cell estimate, which the least squares
    effectively evaluates at the mean sample position of the cell, is
    moved to the cell center by a second-order Taylor correction using
    the displacement statistics recorded during binning.
    """
    u = cf.A[..., 0, 0] + cf.A[..., 1, 1]
    u = np.where(cf.rank_ok, u, 0.0)
    if inpaint:
        bad = ~cf.rank_ok
        if np.any(bad):
            acc = np.zeros_like(u)
            good = cf.rank_ok.astype(float)
            cnt = np.zeros_like(u)
            for axis, shift in ((0, 1), (0, -1), (1, 1), (1, -1)):
                acc += np.roll(u * good, shift, axis=axis) * _roll_valid(good, shift, axis)
                cnt += np.roll(good, shift, axis=axis) * _roll_valid(good, shift, axis)
            fill = np.divide(acc, cnt, out=np.zeros_like(acc), where=cnt > 0)
            u = np.where(bad, fill, u)
    if recenter and cf.offsets is not None:
        u = _recenter_trace(u, cf)
    return Image2D(cf.grid, u)


def _recenter_trace(u, cf):
    """First/second-order correction from mean sample position to center.

    The binned least squares yields u evaluated near the mean sample
    displacement d of each cell: u_meas ~ u(c) + grad u . E[d]
    + 0.5 E[d^T H d].  Subtract both terms using the recorded moments
    and finite-difference derivatives of u itself.
    """
    du, dv = cf.grid.spacing
    off = cf.offsets
    mom = cf.moments
    gu = np.gradient(u, du, axis=0)
    gv = np.gradient(u, dv, axis=1)
    corrected = u - (gu * off[..., 0] + gv * off[..., 1])
    if mom is not None:
        huu = np.gradient(gu, du, axis=0)
        huv = np.gradient(gu, dv, axis=1)
        hvv = np.gradient(gv, dv, axis=1)
        corrected = corrected - 0.5 * (
            huu * mom[..., 0] + 2.0 * huv * mom[..., 1] + hvv * mom[..., 2]
        )
    return corrected


def _roll_valid(good, shift, axis):
    # mask out values wrapped around by np.roll
    m = np.ones_like(good)
    sl = [slice(None)] * m.ndim
    sl[axis] = slice(0, 1) if shift == 1 else slice(-1, None)
    m[tuple(sl)] = 0.0
    return m


def stage2_deconvolve(u, h, lam, cg_tol=1e-10, cg_max_iter=1000, truncation_radius=None):
    """Tikhonov deconvolution of a trace field against kappa_h.

    Solves (lam * D^T D + K^T K) chi = K^T u with conjugate gradients,
    i.e. the Euler-Lagrange system of the smoothing-regularized
    least-squares deconvolution.  Returns (Image2D, CgResult).
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    grid = u.grid
    kern = sample_kappa_kernel(grid, h, truncation_radius=truncation_radius)
    K = Convolution2D(kern, grid.dims)
    spacing = grid.spacing

    def op(x):
        return lam * laplacian_apply(x, spacing) + K.adjoint(K.apply(x))

    rhs = K.adjoint(np.asarray(u.values, dtype=float))
    res = cg_solve(op, rhs, tol=cg_tol, max_iter=cg_max_iter)
    return Image2D(grid, res.x), res


def ramp_window(omega, kind="rect", cutoff=0.5):
    """Window applied on top of the |omega| ramp; omega in cycles/sample.

    ``rect`` is the standard Ram-Lak cutoff; ``paper_literal`` multiplies
    the ramp by w(x) = x on [0, 0.5]; ``hann`` is the cosine taper.
    """
    omega = np.asarray(omega, dtype=float)
    if kind == "rect":
        out = np.where(omega <= cutoff, 1.0, 0.0)
    elif kind == "paper_literal":
        out = np.where(omega <= 0.5, omega, 0.0)
    elif kind == "hann":
        out = np.where(omega <= cutoff, 0.5 * (1.0 + np.cos(np.pi * omega / cutoff)), 0.0)
    else:
        raise ValueError(f"unknown window kind {kind!r}")
    return out if out.ndim else float(out)


def stage3_fbp(stack, window="rect", cutoff=0.5, out_grid=None):
    """Slice-wise filtered back projection of the projection stack.

    Each z-slice of each projection is ramp-filtered along the detector
    (xi) axis in frequency space and back-projected with linear
    interpolation at the detector coordinate <x, e_theta_perp>.
    """
    if len(stack.angles) < 2:
        raise ValueError("FBP needs at least 2 angles")
    grid2 = stack.images[0].grid
    n_xi, n_z = grid2.dims
    d_xi = grid2.spacing[0]
    if out_grid is None:
        out_grid = Grid3D((grid2.extents[0], grid2.extents[0], grid2.extents[1]), (n_xi, n_xi, n_z))
    if out_grid.dims[2] != n_z or out_grid.extents[2] != grid2.extents[1]:
        raise ValueError("output grid z-axis must match the projection grid")

    nfft = 1
    while nfft < 2 * n_xi:
        nfft *= 2
    omega = np.fft.rfftfreq(nfft)  # cycles per sample
    filt = omega * ramp_window(omega, kind=window, cutoff=cutoff)

    xs = out_grid.centers(0)
    ys = out_grid.centers(1)
    xi0 = grid2.extents[0][0]
    out = np.zeros(out_grid.dims)
    for theta, image in zip(stack.angles, stack.images):
        spec = np.fft.rfft(image.values, n=nfft, axis=0)
        filtered = np.fft.irfft(spec * filt[:, None], n=nfft, axis=0)[:n_xi] / d_xi
        # detector coordinate of each (x, y) column
        t = -np.sin(theta) * xs[:, None] + np.cos(theta) * ys[None, :]
        pos = (t - xi0) / d_xi - 0.5
        i0 = np.floor(pos).astype(np.int64)
        frac = pos - i0
        i1 = i0 + 1
        valid0 = (i0 >= 0) & (i0 < n_xi)
        valid1 = (i1 >= 0) & (i1 < n_xi)
        f0 = filtered[np.clip(i0, 0, n_xi - 1)] * valid0[..., None]
        f1 = filtered[np.clip(i1, 0, n_xi - 1)] * valid1[..., None]
        out += (1.0 - frac)[..., None] * f0 + frac[..., None] * f1
    out *= np.pi / len(stack.angles)
    return Volume3D(out_grid, out)


def reconstruct(signals, geom, grid, cfg=None, return_intermediates=False):
    """Full three-stage reconstruction from per-angle signal records.

    ``grid`` is the 3D output grid; its (y, z) face defines the shared
    projection-plane grid for stages 1 and 2.
    """
    cfg = cfg or ReconConfig()
    if len(signals) != len(geom.angles):
        raise ValueError("need one signal record per configured angle")
    plane = grid.plane_grid()
    projections = []
    intermediates = {"traces": [], "core_fields": [], "cg": []}
    for l, (theta, rec) in enumerate(zip(geom.angles, signals)):
        if abs(rec.theta - theta) > 1e-12:
            raise ReconError(f"stage1, angle {l}: record theta {rec.theta} != geometry {theta}")
        try:
            traj = ffl_trajectory(rec.times, geom)
            s_tilde = transform_signal(rec.values, theta, geom)
            bins = stage1_bin(traj.r, traj.v, s_tilde[:, 1:], plane)
            cf = stage1_solve(bins)
            u = stage1_trace(cf, inpaint=cfg.inpaint, recenter=cfg.recenter)
        except ReconError:
            raise
        except Exception as e:  # pragma: no cover - defensive
            raise ReconError(f"stage1 failed at angle {l} (theta={theta:.6g}): {e}") from e
        try:
            chi, info = stage2_deconvolve(
                u,
                geom.h,
                cfg.lam_for(l),
                cg_tol=cfg.cg_tol,
                cg_max_iter=cfg.cg_max_iter,
                truncation_radius=cfg.truncation_radius,
            )
        except Exception as e:
            raise ReconError(f"stage2 failed at angle {l} (theta={theta:.6g}): {e}") from e
        projections.append(chi)
        if return_intermediates:
            intermediates["traces"].append(u)
            intermediates["core_fields"].append(cf)
            intermediates["cg"].append(info)
    stack = ProjectionStack(angles=tuple(geom.angles), images=projections)
    try:
        vol = stage3_fbp(stack, window=cfg.window, cutoff=cfg.cutoff, out_grid=grid)
    except Exception as e:
        raise ReconError(f"stage3 failed: {e}") from e
    if return_intermediates:
        intermediates["projections"] = stack
        return vol, intermediates
    return vol
