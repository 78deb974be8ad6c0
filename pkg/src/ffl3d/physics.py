"""Langevin magnetization response and the derived convolution kernels.

All functions are vectorized over numpy arrays and pure; scalars in,
scalars out.
"""

import numpy as np

# Below this radius the closed forms coth(x)-1/x and 1/x^2-1/sinh^2(x)
# lose too many digits to cancellation; Taylor series take over.  The
# radius is chosen so both branches agree to ~1e-13 at the switch.
SERIES_RADIUS = 0.05


def langevin(x):
    """Langevin function L(x) = coth(x) - 1/x, with L(0) = 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < SERIES_RADIUS
    xs = np.where(small, 1.0, x)  # keep the closed form off x=0
    closed = 1.0 / np.tanh(xs) - 1.0 / xs
    x2 = x * x
    series = x * (1.0 / 3.0 + x2 * (-1.0 / 45.0 + x2 * (2.0 / 945.0 + x2 * (-1.0 / 4725.0))))
    out = np.where(small, series, closed)
    return out if out.ndim else float(out)


def langevin_deriv(x):
    """Derivative L'(x) = 1/x^2 - 1/sinh(x)^2, with L'(0) = 1/3."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    small = ax < SERIES_RADIUS
    # sinh overflows near 710; there 1/x^2 dominates anyway.
    big = ax > 350.0
    xs = np.where(small | big, 1.0, x)
    with np.errstate(over="ignore"):
        closed = 1.0 / (xs * xs) - 1.0 / np.sinh(xs) ** 2
    x2 = x * x
    series = 1.0 / 3.0 + x2 * (-1.0 / 15.0 + x2 * (2.0 / 189.0 + x2 * (-1.0 / 675.0 + x2 * (2.0 / 10395.0))))
    out = np.where(small, series, np.where(big, 1.0 / (x * x + small), closed))
    return out if out.ndim else float(out)


def _langevin_over_x(x):
    """L(x)/x with the removable singularity at 0 filled in (-> 1/3)."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < SERIES_RADIUS
    xs = np.where(small, 1.0, x)
    closed = (1.0 / np.tanh(xs) - 1.0 / xs) / xs
    x2 = x * x
    series = 1.0 / 3.0 + x2 * (-1.0 / 45.0 + x2 * (2.0 / 945.0 + x2 * (-1.0 / 4725.0)))
    return np.where(small, series, closed)


def kernel_profile(z, n=2):
    """Radial profile f(z) = L'(z) + (n-1) L(z)/z of the trace kernel."""
    return langevin_deriv(z) + (n - 1) * _langevin_over_x(z)


def kernel_kappa(dist, h, n=2):
    """Scalar trace kernel kappa_h(y) = (1/h) f(|y|/h)."""
    if h <= 0:
        raise ValueError("h must be positive")
    out = kernel_profile(np.asarray(dist, dtype=float) / h, n=n) / h
    return out if np.ndim(out) else float(out)


def kernel_jacobian(d, h):
    """Jacobian of the Langevin vector field y -> L(|y|/h) y/|y| at y = d.

    Accepts d of shape (..., 2) and returns (..., 2, 2).  The matrix is
    symmetric, its trace equals ``kernel_kappa(|d|, h, n=2)``, and the
    d = 0 limit is the isotropic I/(3h).
    """
    if h <= 0:
        raise ValueError("h must be positive")
    d = np.asarray(d, dtype=float)
    scalar = d.ndim == 1
    d = np.atleast_2d(d)
    s = np.linalg.norm(d, axis=-1)
    z = s / h
    lp = langevin_deriv(z) / h
    lox = _langevin_over_x(z) / h  # = L(s/h)/s up to the 1/h factor
    safe = np.where(s > 0, s, 1.0)
    u = d / safe[..., None]
    uut = u[..., :, None] * u[..., None, :]
    eye = np.eye(2)
    out = lp[..., None, None] * uut + lox[..., None, None] * (eye - uut)
    # at d = 0 the direction is undefined but both eigenvalues coincide
    iso = np.broadcast_to(eye / (3.0 * h), out.shape)
    out = np.where((s == 0)[..., None, None], iso, out)
    return out[0] if scalar else out
