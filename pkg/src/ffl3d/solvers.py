"""Small dense least squares, conjugate gradients and FFT convolution."""

from dataclasses import dataclass, field
import numpy as np
from scipy import linalg, signal

from .physics import kernel_kappa

RANK_RTOL = 1e-12  # singular values below this times sigma_max count as zero


class SolverError(RuntimeError):
    """Raised when an iterative solve breaks down."""


def lstsq_qr(V, S):
    """Least-squares solve of S = A V for the 2x2 matrix A.

    ``V`` and ``S`` are 2xM with matched columns (velocity, signal) pairs.
    Returns ``(A, rank_ok)``; on rank deficiency A is the minimum-norm
    solution and ``rank_ok`` is False.
    """
    V = np.asarray(V, dtype=float)
    S = np.asarray(S, dtype=float)
    if V.shape[0] != 2 or V.shape != S.shape:
        raise ValueError("V and S must both be 2xM")
    if V.shape[1] < 1:
        raise ValueError("need at least one column")
    Vt = V.T
    sv = np.linalg.svd(Vt, compute_uv=False)
    rank_ok = sv.size == 2 and sv[-1] > RANK_RTOL * sv[0] and sv[0] > 0
    if not rank_ok:
        return S @ np.linalg.pinv(V, rcond=RANK_RTOL), False
    Q, R = np.linalg.qr(Vt)
    At = linalg.solve_triangular(R, Q.T @ S.T)
    return At.T, True


@dataclass
class CgResult:
    x: np.ndarray
    converged: bool
    iterations: int
    residual: float
    residual_history: list = field(default_factory=list)


def cg_solve(op, b, tol=1e-10, max_iter=1000, x0=None):
    """Plain conjugate gradients for a self-adjoint PSD operator.

    ``op`` is a callable mapping arrays to arrays of the same shape.
    Stops when ||op(x) - b|| / ||b|| <= tol, otherwise returns the
    iterate at ``max_iter`` with the achieved residual.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    b = np.asarray(b, dtype=float)
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return CgResult(np.zeros_like(b), True, 0, 0.0, [])
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - op(x)
    p = r.copy()
    rs = np.vdot(r, r).real
    history = [np.sqrt(rs) / bnorm]
    if history[0] <= tol:
        return CgResult(x, True, 0, history[0], history)
    for k in range(max_iter):
        Ap = op(p)
        denom = np.vdot(p, Ap).real
        if not np.isfinite(denom) or denom <= 0:
            raise SolverError(f"CG breakdown at iteration {k}: <p, Ap> = {denom}")
        alpha = rs / denom
        x = x + alpha * p
        r = r - alpha * Ap
        rs_new = np.vdot(r, r).real
        if not np.isfinite(rs_new):
            raise SolverError(f"CG produced non-finite residual at iteration {k}")
        rel = np.sqrt(rs_new) / bnorm
        history.append(rel)
        if rel <= tol:
            return CgResult(x, True, k + 1, rel, history)
        p = r + (rs_new / rs) * p
        rs = rs_new
    return CgResult(x, False, max_iter, history[-1], history)


def sample_kappa_kernel(grid, h, truncation_radius=None):
    """kappa_h sampled on the (2N1-1) x (2N2-1) offset lattice of ``grid``.

    Entries carry the midpoint-rule cell area, so convolving an image
    with this kernel approximates the continuous convolution integral.
    """
    du, dv = grid.spacing
    n1, n2 = grid.dims
    ou = np.arange(-(n1 - 1), n1) * du
    ov = np.arange(-(n2 - 1), n2) * dv
    dist = np.hypot(ou[:, None], ov[None, :])
    kern = kernel_kappa(dist, h, n=2) * (du * dv)
    if truncation_radius is not None:
        kern = np.where(dist <= truncation_radius, kern, 0.0)
    return kern


class Convolution2D:
    """Zero-padded linear convolution with an offset-sampled kernel.

    The kernel must have odd shape (2*N1-1, 2*N2-1) matching image shape
    (N1, N2); out[j] = sum_i img[i] * kernel[j - i + N - 1].  For an even
    (symmetric) kernel the operator is self-adjoint.
    """

    def __init__(self, kernel, image_shape):
        kernel = np.asarray(kernel, dtype=float)
        n1, n2 = image_shape
        if kernel.shape != (2 * n1 - 1, 2 * n2 - 1):
            raise ValueError(
                f"kernel shape {kernel.shape} does not match image shape {image_shape}"
            )
        self.kernel = kernel
        self.image_shape = tuple(image_shape)

    def _check(self, img):
        img = np.asarray(img, dtype=float)
        if img.shape != self.image_shape:
            raise ValueError(f"image shape {img.shape}, expected {self.image_shape}")
        return img

    def apply(self, img):
        return signal.fftconvolve(self._check(img), self.kernel, mode="same")

    def adjoint(self, img):
        return signal.fftconvolve(self._check(img), self.kernel[::-1, ::-1], mode="same")


def laplacian_apply(values, spacing=(1.0, 1.0)):
    """D^T D with forward differences and zero Dirichlet boundary.

    Equals the negative 5-point Laplacian with ghost values 0, scaled by
    1/du^2 and 1/dv^2 per axis.  Symmetric positive semidefinite.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 2 or min(v.shape) < 2:
        raise ValueError("need a 2D image with at least 2 cells per axis")
    du, dv = spacing
    out = np.zeros_like(v)
    out += 2.0 * v / du**2 + 2.0 * v / dv**2
    out[1:, :] -= v[:-1, :] / du**2
    out[:-1, :] -= v[1:, :] / du**2
    out[:, 1:] -= v[:, :-1] / dv**2
    out[:, :-1] -= v[:, 1:] / dv**2
    return out
