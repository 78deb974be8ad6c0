"""Signal synthesis: fast projection-based path, direct-integral oracle, noise."""

import os
import warnings
from dataclasses import dataclass

import numpy as np
import numba
from numba import njit, prange

from .fields import applied_field, e_theta_matrix, ffl_trajectory
from .physics import langevin
from .xray import xray_project


def _configure_threads():
    cap = os.environ.get("FFL_THREADS")
    if cap:
        numba.set_num_threads(max(1, min(int(cap), numba.config.NUMBA_NUM_THREADS)))


@dataclass
class SignalRecord:
    """Per-angle scan record: times and induced 3-vector voltages."""

    theta: float
    times: np.ndarray
    values: np.ndarray  # (L, 3)
    geometry: object = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.times.size, 3):
            raise ValueError("values must be (L, 3) matching times")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("sample times must be strictly increasing")


@njit(cache=True, parallel=True)
def _core_operator_at(points, proj, u0, du, v0, dv, h, trunc2):
    """Midpoint-rule MPI core operator A[proj](r) at arbitrary points.

    Returns (M, 3) with the (a11, a12, a22) entries of the symmetric 2x2
    matrices; the cell-area factor is NOT included.
    """
    n1, n2 = proj.shape
    m = points.shape[0]
    out = np.zeros((m, 3))
    for i in prange(m):
        rx = points[i, 0]
        rz = points[i, 1]
        a11 = 0.0
        a12 = 0.0
        a22 = 0.0
        for j in range(n1):
            ddx = rx - (u0 + (0.5 + j) * du)
            ddx2 = ddx * ddx
            if trunc2 > 0.0 and ddx2 > trunc2:
                continue
            for k in range(n2):
                w = proj[j, k]
                if w == 0.0:
                    continue
                ddz = rz - (v0 + (0.5 + k) * dv)
                s2 = ddx2 + ddz * ddz
                if trunc2 > 0.0 and s2 > trunc2:
                    continue
                s = np.sqrt(s2)
                z = s / h
                if z < 0.05:
                    z2 = z * z
                    lp = 1.0 / 3.0 + z2 * (-1.0 / 15.0 + z2 * (2.0 / 189.0))
                    lox = 1.0 / 3.0 + z2 * (-1.0 / 45.0 + z2 * (2.0 / 945.0))
                else:
                    c = 1.0 / np.tanh(z)
                    ell = c - 1.0 / z
                    if z > 19.0:
                        # 1/sinh^2 underflows past double precision here
                        lp = 1.0 / (z * z)
                    else:
                        lp = 1.0 / (z * z) - (c * c - 1.0)
                    lox = ell / z
                if s2 == 0.0:
                    u1 = 0.0
                    u2 = 0.0
                    # isotropic limit: lp == lox, direction irrelevant
                else:
                    u1 = ddx / s
                    u2 = ddz / s
                u11 = u1 * u1
                u22 = u2 * u2
                a11 += w * (lp * u11 + lox * (1.0 - u11))
                a22 += w * (lp * u22 + lox * (1.0 - u22))
                a12 += w * (lp - lox) * u1 * u2
        out[i, 0] = a11 / h
        out[i, 1] = a12 / h
        out[i, 2] = a22 / h
    return out


def core_operator_at(points, image, h, truncation_radius=None):
    """Evaluate A[image](r) for r in ``points`` (shape (M, 2)).

    ``image`` is an Image2D on the (xi, z) grid; the midpoint quadrature
    runs over its full cell set unless a truncation radius is given.
    Returns (M, 2, 2) symmetric matrices.
    """
    _configure_threads()
    grid = image.grid
    du, dv = grid.spacing
    (u1, _), (v1, _) = grid.extents
    trunc2 = -1.0 if truncation_radius is None else float(truncation_radius) ** 2
    pts = np.ascontiguousarray(np.atleast_2d(np.asarray(points, dtype=float)))
    flat = _core_operator_at(pts, np.ascontiguousarray(image.values), u1, du, v1, dv, float(h), trunc2)
    flat = flat * grid.cell_area
    out = np.empty((pts.shape[0], 2, 2))
    out[:, 0, 0] = flat[:, 0]
    out[:, 0, 1] = flat[:, 1]
    out[:, 1, 0] = flat[:, 1]
    out[:, 1, 1] = flat[:, 2]
    return out


def simulate_fast(vol, theta, geom, times=None, out_grid=None, truncation_radius=None):
    """Signal synthesis through the projection/core-operator decomposition.

    s(t) = -mu0 * m * P * E_theta * (0, A[X_theta[vol]](r(t)) v(t)), with
    the 2x2 core operator evaluated by midpoint quadrature over the
    projection grid.
    """
    if times is None:
        times = geom.sample_times()
    proj = xray_project(vol, theta, out_grid=out_grid)
    traj = ffl_trajectory(times, geom)

    g = proj.grid
    (u1, u2), (v1, v2) = g.extents
    r = traj.r
    if np.any((r[:, 0] < u1) | (r[:, 0] > u2) | (r[:, 1] < v1) | (r[:, 1] > v2)):
        warnings.warn("FFL trajectory exits the projection grid; kernel tails still apply")

    A = core_operator_at(r, proj, geom.h, truncation_radius=truncation_radius)
    av = np.einsum("mij,mj->mi", A, traj.v)
    s_hat = np.zeros((times.size, 3))
    s_hat[:, 1:] = av
    M = -(geom.mu0 * geom.moment) * (geom.sensitivity @ e_theta_matrix(theta))
    return SignalRecord(theta=float(theta), times=times, values=s_hat @ M.T, geometry=geom)


def simulate_oracle(vol, theta, geom, fd_step=None, times=None, chunk=64):
    """Brute-force signal: direct 3D magnetization integral, FD in time.

    Intended for small volumes (<= 32^3 cells).  The time derivative is
    a central difference with step ``fd_step`` (default T/(100*L)),
    deliberately independent of the fast path's analytic kernel.
    """
    if times is None:
        times = geom.sample_times()
    if fd_step is None:
        fd_step = geom.period / (100.0 * times.size)
    cells = vol.grid.center_mesh().reshape(-1, 3)
    w = vol.values.ravel() * vol.grid.cell_volume
    nz = w != 0
    cells, w = cells[nz], w[nz]
    out = np.zeros((times.size, 3))
    if cells.size:
        for lo in range(0, times.size, chunk):
            tt = times[lo : lo + chunk]
            for off, sign in ((fd_step, 1.0), (-fd_step, -1.0)):
                H = applied_field(cells[None, :, :], (tt + off)[:, None], theta, geom)
                norm = np.linalg.norm(H, axis=-1)
                safe = np.where(norm > 1e-14, norm, 1.0)
                mag = langevin(norm / (geom.h * geom.gradient))[..., None] * H / safe[..., None]
                mag[norm <= 1e-14] = 0.0
                out[lo : lo + chunk] += sign * np.einsum("c,tcd->td", w, mag)
    out /= 2.0 * fd_step
    M = -(geom.mu0 * geom.moment) * geom.sensitivity
    return SignalRecord(theta=float(theta), times=times, values=out @ M.T, geometry=geom)


def add_noise(rec, level, seed, per_component_max=False):
    """Additive Gaussian noise with amplitude level * max_t ||s(t)||.

    The amplitude is a single scalar per record, taken from the maximum
    Euclidean norm of the signal vector over time (or the per-component
    maxima with ``per_component_max``).  Deterministic given ``seed``;
    each record gets an independent Philox stream keyed by (seed, theta
    bits), so per-angle generation order does not matter.
    """
    if level < 0:
        raise ValueError("noise level must be >= 0")
    if level == 0:
        return SignalRecord(rec.theta, rec.times.copy(), rec.values.copy(), rec.geometry)
    key = np.frombuffer(np.float64(rec.theta).tobytes(), dtype=np.uint64)[0]
    rng = np.random.Generator(np.random.Philox(key=[np.uint64(seed), key]))
    if per_component_max:
        eps = level * np.max(np.abs(rec.values), axis=0)
    else:
        eps = level * np.max(np.linalg.norm(rec.values, axis=1))
    noisy = rec.values + eps * rng.standard_normal(rec.values.shape)
    return SignalRecord(rec.theta, rec.times.copy(), noisy, rec.geometry)
